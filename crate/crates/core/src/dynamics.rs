//! The shrinking random β-transformation `K` on `Ω × E`.
//!
//! Outside the switch region `[a, b]` the map is deterministic (`βx` left
//! of `a`, `βx - 1` right of `b`); inside it the first coin bit selects the
//! branch and the coin sequence is shifted. The induced map `I` iterates
//! `K` until the orbit comes back to `[a, b]`.

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::AlgebraicBeta;
use crate::error::{Error, Result};
use crate::report::sig12;

/// Allowed excursion outside `[0, 1/(β-1)]` before an orbit is aborted.
pub const ESCAPE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoinMode {
    SeededRandom,
    ExplicitPrefix,
}

#[derive(Debug, Clone)]
enum Source {
    Seeded {
        seed: u64,
        rng: Box<ChaCha8Rng>,
        cached: Option<(u64, u32)>,
    },
    Explicit(Vec<u8>),
}

/// A coin sequence `ω ∈ {0,1}^ℕ` with a read cursor.
///
/// Seeded streams are counter based: bit `k` is read from word `k / 32` of
/// the ChaCha8 keystream, so any bit is addressable directly.
#[derive(Debug, Clone)]
pub struct CoinStream {
    source: Source,
    cursor: usize,
}

impl CoinStream {
    pub fn seeded(seed: u64) -> Self {
        CoinStream {
            source: Source::Seeded {
                seed,
                rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
                cached: None,
            },
            cursor: 0,
        }
    }

    pub fn explicit(bits: Vec<u8>) -> Result<Self> {
        if let Some((index, &digit)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(Error::NonBinaryDigit { index, digit });
        }
        Ok(CoinStream {
            source: Source::Explicit(bits),
            cursor: 0,
        })
    }

    /// `pattern` repeated until `len` bits.
    pub fn repeating(pattern: &[u8], len: usize) -> Result<Self> {
        Self::explicit(pattern.iter().copied().cycle().take(len).collect())
    }

    pub fn mode(&self) -> CoinMode {
        match self.source {
            Source::Seeded { .. } => CoinMode::SeededRandom,
            Source::Explicit(_) => CoinMode::ExplicitPrefix,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            Source::Seeded { seed, .. } => Some(seed),
            Source::Explicit(_) => None,
        }
    }

    /// Number of bits consumed so far.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Bits left in an explicit prefix; `None` for seeded streams.
    pub fn remaining(&self) -> Option<usize> {
        match &self.source {
            Source::Seeded { .. } => None,
            Source::Explicit(bits) => Some(bits.len().saturating_sub(self.cursor)),
        }
    }

    fn keystream_word(rng: &mut ChaCha8Rng, word: u64) -> u32 {
        rng.set_word_pos(u128::from(word));
        rng.next_u32()
    }

    /// Bit `k` (0-based, so `ω_{k+1}`) without moving the cursor.
    pub fn bit_at(&self, k: usize) -> Result<u8> {
        match &self.source {
            Source::Seeded { rng, cached, .. } => {
                let word = (k / 32) as u64;
                let w = match cached {
                    Some((idx, w)) if *idx == word => *w,
                    _ => Self::keystream_word(&mut rng.clone(), word),
                };
                Ok(((w >> (k % 32)) & 1) as u8)
            }
            Source::Explicit(bits) => bits
                .get(k)
                .copied()
                .ok_or(Error::StreamExhausted(bits.len())),
        }
    }

    /// Current first coin `ω₁`.
    pub fn peek(&mut self) -> Result<u8> {
        let k = self.cursor;
        match &mut self.source {
            Source::Seeded { rng, cached, .. } => {
                let word = (k / 32) as u64;
                let w = match cached {
                    Some((idx, w)) if *idx == word => *w,
                    _ => {
                        let w = Self::keystream_word(rng, word);
                        *cached = Some((word, w));
                        w
                    }
                };
                Ok(((w >> (k % 32)) & 1) as u8)
            }
            Source::Explicit(_) => self.bit_at(k),
        }
    }

    /// Read `ω₁` and shift.
    pub fn next_bit(&mut self) -> Result<u8> {
        let bit = self.peek()?;
        self.cursor += 1;
        Ok(bit)
    }

    /// The next `len` bits, without consuming them.
    pub fn prefix(&self, len: usize) -> Result<Vec<u8>> {
        (self.cursor..self.cursor + len)
            .map(|k| self.bit_at(k))
            .collect()
    }
}

/// A point `(ω, x)` of `Ω × E`.
#[derive(Debug, Clone)]
pub struct PointState {
    pub omega: CoinStream,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub digit: u8,
    pub switched: bool,
}

/// Result of one induced step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTrip {
    pub time: usize,
    /// Coin consumed on leaving `[a, b]`.
    pub coin: u8,
    /// `x_1, ..., x_τ`; the last entry is back in `[a, b]`.
    pub orbit: Vec<f64>,
    pub digits: Vec<u8>,
    /// Some landing hit `a` or `b` exactly.
    pub boundary_hit: bool,
}

fn check_domain(x: f64, ctx: &AlgebraicBeta) -> Result<()> {
    if x.is_nan() || x < -ESCAPE_TOLERANCE || x > ctx.domain_max + ESCAPE_TOLERANCE {
        Err(Error::OrbitEscape {
            x,
            max: ctx.domain_max,
        })
    } else {
        Ok(())
    }
}

impl PointState {
    pub fn new(omega: CoinStream, x: f64) -> Self {
        PointState { omega, x }
    }

    /// One application of `K`.
    pub fn step(&mut self, ctx: &AlgebraicBeta) -> Result<Step> {
        check_domain(self.x, ctx)?;
        let x = self.x;
        let (next, digit, switched) = if x < ctx.a {
            (ctx.t0(x), 0, false)
        } else if x > ctx.b {
            (ctx.t1(x), 1, false)
        } else {
            let coin = self.omega.next_bit()?;
            (ctx.beta * x - f64::from(coin), coin, true)
        };
        check_domain(next, ctx)?;
        self.x = next;
        Ok(Step { digit, switched })
    }

    /// One application of the induced map `I = K^τ`.
    pub fn induced_step(&mut self, ctx: &AlgebraicBeta) -> Result<ReturnTrip> {
        if !ctx.in_switch(self.x) {
            return Err(Error::Precondition {
                x: self.x,
                expected: "[a, b]",
            });
        }
        let mut orbit = Vec::with_capacity(ctx.n);
        let mut digits = Vec::with_capacity(ctx.n);
        let mut boundary_hit = false;
        let coin = self.omega.peek()?;
        for t in 1..=ctx.n + 1 {
            let step = self.step(ctx)?;
            digits.push(step.digit);
            orbit.push(self.x);
            if self.x == ctx.a || self.x == ctx.b {
                boundary_hit = true;
            }
            if ctx.in_switch(self.x) {
                if t == 1 {
                    return Err(Error::DeletedPoint {
                        x: orbit[0],
                        reason: "return time 1",
                    });
                }
                return Ok(ReturnTrip {
                    time: t,
                    coin,
                    orbit,
                    digits,
                    boundary_hit,
                });
            }
        }
        Err(Error::InvariantViolation(format!(
            "no return to [a, b] within {} steps (x = {})",
            ctx.n + 1,
            self.x
        )))
    }
}

/// `K(ω, x)` without mutating the input.
pub fn step(state: &PointState, ctx: &AlgebraicBeta) -> Result<(PointState, Step)> {
    let mut next = state.clone();
    let s = next.step(ctx)?;
    Ok((next, s))
}

pub fn return_time(state: &PointState, ctx: &AlgebraicBeta) -> Result<ReturnTrip> {
    state.clone().induced_step(ctx)
}

pub fn induced_step(state: &PointState, ctx: &AlgebraicBeta) -> Result<PointState> {
    let mut next = state.clone();
    next.induced_step(ctx)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub step: usize,
    /// Position before the step.
    pub x: f64,
    pub digit: u8,
    pub in_switch: bool,
    /// Coin cursor before the step.
    pub coin_cursor: usize,
}

/// `steps` applications of `K`, recording each position and emitted digit.
pub fn orbit(state: &PointState, steps: usize, ctx: &AlgebraicBeta) -> Result<Vec<OrbitRecord>> {
    let mut s = state.clone();
    let mut out = Vec::with_capacity(steps);
    for k in 1..=steps {
        let x = s.x;
        let cursor = s.omega.cursor();
        let st = s.step(ctx)?;
        out.push(OrbitRecord {
            step: k,
            x,
            digit: st.digit,
            in_switch: st.switched,
            coin_cursor: cursor,
        });
    }
    Ok(out)
}

pub const ORBIT_CSV_HEADER: [&str; 5] = ["step", "x", "digit", "in_switch", "coin_cursor"];

pub fn write_orbit_header<W: Write>(w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(ORBIT_CSV_HEADER)?;
    Ok(())
}

pub fn write_orbit_record<W: Write>(w: &mut csv::Writer<W>, r: &OrbitRecord) -> Result<()> {
    w.write_record([
        r.step.to_string(),
        sig12(r.x),
        r.digit.to_string(),
        u8::from(r.in_switch).to_string(),
        r.coin_cursor.to_string(),
    ])?;
    Ok(())
}

pub fn write_orbit_csv<W: Write>(out: W, records: &[OrbitRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    write_orbit_header(&mut w)?;
    for r in records {
        write_orbit_record(&mut w, r)?;
    }
    w.flush()?;
    Ok(())
}

/// Counts of return times over many induced steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnTimeHistogram {
    pub n: usize,
    /// `counts[t]` for `0 <= t <= n + 1`.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ReturnTimeHistogram {
    pub fn new(n: usize) -> Self {
        ReturnTimeHistogram {
            n,
            counts: vec![0; n + 2],
            total: 0,
        }
    }

    pub fn record(&mut self, t: usize) {
        self.counts[t.min(self.n + 1)] += 1;
        self.total += 1;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total += other.total;
        self
    }

    pub fn freq(&self, t: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[t] as f64 / self.total as f64
        }
    }

    /// Count of return times outside `{2, ..., n}`.
    pub fn out_of_range(&self) -> u64 {
        self.counts[0] + self.counts[1] + self.counts[self.n + 1]
    }

    /// Binomial z-score of the frequency of `t` against probability `p`.
    pub fn z_score(&self, t: usize, p: f64) -> f64 {
        let sigma = (p * (1.0 - p) / self.total as f64).sqrt();
        (self.freq(t) - p) / sigma
    }
}

/// Stream seed for worker `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Return-time histogram over `starts` Lebesgue-random starting points in
/// `[a, b]`, each followed for `steps_per_start` induced steps with a fair
/// seeded coin. Starts run in parallel; the result does not depend on
/// scheduling.
pub fn sample_return_times(
    ctx: &AlgebraicBeta,
    seed: u64,
    starts: usize,
    steps_per_start: usize,
) -> Result<ReturnTimeHistogram> {
    (0..starts)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let x = ctx.a + rng.random::<f64>() * ctx.switch_len();
            let mut state = PointState::new(CoinStream::seeded(derive_seed(s, u64::MAX)), x);
            let mut h = ReturnTimeHistogram::new(ctx.n);
            for _ in 0..steps_per_start {
                let trip = state.induced_step(ctx)?;
                h.record(trip.time);
            }
            Ok(h)
        })
        .try_reduce(|| ReturnTimeHistogram::new(ctx.n), |a, b| Ok(a.merge(&b)))
}
