//! Symbolic coding of the induced system.
//!
//! A point `(ω, x)` of the switch region is coded by the pairs
//! `(ω_i, n_i)` of coin bit and `i`-th return time. Words over the alphabet
//! `{0,1} × {2..n}` (size `2(n-1)`) form a full shift, and the coding
//! conjugates the induced map with the left shift.
//!
//! Decoding expands each letter `(ω_i, n_i)` to the digit block
//! `ω_i (1-ω_i)^{n_i - 1}` and evaluates it in base β.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::algebra::{eval_word, AlgebraicBeta, WordValue};
use crate::dynamics::PointState;
use crate::error::{Error, Result};
use crate::gls::{GlsPartition, Side};
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(u8, usize)", into = "(u8, usize)")]
pub struct Letter {
    pub coin: u8,
    /// Return time in `2..=n`.
    pub rt: usize,
}

impl From<(u8, usize)> for Letter {
    fn from((coin, rt): (u8, usize)) -> Self {
        Letter { coin, rt }
    }
}

impl From<Letter> for (u8, usize) {
    fn from(l: Letter) -> Self {
        (l.coin, l.rt)
    }
}

impl Letter {
    pub fn new(coin: u8, rt: usize) -> Self {
        Letter { coin, rt }
    }

    /// Position in `0..2(n-1)`: coin-major, then return time.
    pub fn index(&self, n: usize) -> usize {
        usize::from(self.coin) * (n - 1) + self.rt - 2
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Letter {
            coin: (index / (n - 1)) as u8,
            rt: index % (n - 1) + 2,
        }
    }

    /// `ω (1-ω)^{rt-1}`
    pub fn digits(&self) -> impl Iterator<Item = u8> + '_ {
        std::iter::once(self.coin).chain(std::iter::repeat_n(1 - self.coin, self.rt - 1))
    }
}

pub fn alphabet_size(n: usize) -> usize {
    2 * (n - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SymbolicWord {
    #[serde(skip)]
    n: usize,
    letters: Vec<Letter>,
}

impl SymbolicWord {
    pub fn new(n: usize, letters: Vec<Letter>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidN(n));
        }
        if let Some(l) = letters
            .iter()
            .find(|l| l.coin > 1 || !(2..=n).contains(&l.rt))
        {
            return Err(Error::Domain(format!(
                "letter ({}, {}) outside {{0,1}} x {{2..{n}}}",
                l.coin, l.rt
            )));
        }
        Ok(SymbolicWord { n, letters })
    }

    pub fn repeat(n: usize, letter: Letter, k: usize) -> Result<Self> {
        Self::new(n, vec![letter; k])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn coins(&self) -> Vec<u8> {
        self.letters.iter().map(|l| l.coin).collect()
    }

    pub fn return_times(&self) -> Vec<usize> {
        self.letters.iter().map(|l| l.rt).collect()
    }

    /// Total number of `K`-steps covered.
    pub fn duration(&self) -> usize {
        self.letters.iter().map(|l| l.rt).sum()
    }

    pub fn digits(&self) -> Vec<u8> {
        self.letters.iter().flat_map(|l| l.digits()).collect()
    }

    /// The left shift.
    pub fn shift(&self) -> SymbolicWord {
        SymbolicWord {
            n: self.n,
            letters: self.letters.iter().skip(1).copied().collect(),
        }
    }

    /// All `(2n-2)^k` words of length `k`, in lexicographic letter-index order.
    pub fn all(n: usize, k: usize) -> impl Iterator<Item = SymbolicWord> {
        let q = alphabet_size(n);
        let total = q.pow(k as u32);
        (0..total).map(move |mut code| {
            let mut letters = vec![Letter::new(0, 2); k];
            for slot in letters.iter_mut().rev() {
                *slot = Letter::from_index(code % q, n);
                code /= q;
            }
            SymbolicWord { n, letters }
        })
    }

    /// One `coin,rt` pair per line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        for l in &self.letters {
            w.serialize((l.coin, l.rt))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `coin,rt` lines; a leading `coin,rt` header line is skipped.
    pub fn read_csv<R: Read>(n: usize, input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut letters = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if i == 0 && rec.get(0) == Some("coin") {
                continue;
            }
            let (coin, rt): (u8, usize) = rec.deserialize(None)?;
            letters.push(Letter { coin, rt });
        }
        Self::new(n, letters)
    }

    /// JSON array of `[coin, rt]` pairs.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.letters).expect("letters serialize")
    }

    pub fn from_json(n: usize, s: &str) -> Result<Self> {
        let letters: Vec<Letter> = serde_json::from_str(s)?;
        Self::new(n, letters)
    }
}

/// First `k` letters of the coding of `(ω, x)`.
pub fn encode(state: &PointState, k: usize, ctx: &AlgebraicBeta) -> Result<SymbolicWord> {
    let mut s = state.clone();
    let mut letters = Vec::with_capacity(k);
    for _ in 0..k {
        let trip = s.induced_step(ctx)?;
        if trip.boundary_hit {
            return Err(Error::DeletedPoint {
                x: s.x,
                reason: "orbit lands exactly on a switch endpoint",
            });
        }
        letters.push(Letter::new(trip.coin, trip.time));
    }
    SymbolicWord::new(ctx.n, letters)
}

/// Value of the digit expansion of `word` with its tail bound.
pub fn decode(word: &SymbolicWord, ctx: &AlgebraicBeta) -> Result<WordValue> {
    if word.is_empty() {
        return Err(Error::Domain("cannot decode an empty word".into()));
    }
    eval_word(&word.digits(), ctx.beta)
}

/// The interval of points in `[a, b]` whose first `len(word)` return
/// times are those of `word` under its coins, by composing inverse GLS
/// branches from the last letter backwards.
pub fn decode_interval(
    word: &SymbolicWord,
    greedy: &GlsPartition,
    lazy: &GlsPartition,
) -> Result<Interval> {
    let mut j = Interval::new(greedy.a(), greedy.b());
    for l in word.letters.iter().rev() {
        let part = match Side::from_coin(l.coin) {
            Side::Greedy => greedy,
            Side::Lazy => lazy,
        };
        j = part.inverse(l.rt, &j)?;
        if j.is_empty() {
            return Err(Error::InvariantViolation(format!(
                "empty cylinder interval for word {:?}",
                word.letters
            )));
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    A,
    B,
}

/// `(01)^{j₁} (1 0^{n-1})^{j₂} (01)^{j₃} ...` for `a`; the complement for `b`.
pub fn boundary_expansion(endpoint: Endpoint, block_counts: &[usize], n: usize) -> Vec<u8> {
    let short = [0u8, 1];
    let long: Vec<u8> = std::iter::once(1)
        .chain(std::iter::repeat_n(0, n - 1))
        .collect();
    let mut out = Vec::new();
    for (k, &j) in block_counts.iter().enumerate() {
        let block: &[u8] = if k % 2 == 0 { &short } else { &long };
        for _ in 0..j {
            out.extend_from_slice(block);
        }
    }
    if endpoint == Endpoint::B {
        for d in &mut out {
            *d = 1 - *d;
        }
    }
    out
}

/// Entropy of the measure of maximal entropy of the induced system,
/// `log(2n - 2)`.
pub fn mme_entropy(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidN(n));
    }
    Ok((alphabet_size(n) as f64).ln())
}

/// Letter probability of the uniform Bernoulli measure on the full shift.
pub fn uniform_letter_probability(n: usize) -> f64 {
    1.0 / alphabet_size(n) as f64
}

/// Shannon entropy of the uniform letter distribution.
pub fn uniform_shift_entropy(n: usize) -> f64 {
    let p = uniform_letter_probability(n);
    -(0..alphabet_size(n)).map(|_| p * p.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::solve_beta;
    use crate::dynamics::CoinStream;
    use crate::gls::{greedy_breakpoints, lazy_breakpoints};

    fn ctx(n: usize) -> AlgebraicBeta {
        solve_beta(n).unwrap()
    }

    #[test]
    fn encode_a_with_ones() {
        let c = ctx(3);
        let s = PointState::new(CoinStream::repeating(&[1], 20).unwrap(), c.a + 1e-12);
        let w = encode(&s, 5, &c).unwrap();
        assert!(w.letters().iter().all(|&l| l == Letter::new(1, 3)));
    }

    #[test]
    fn encode_b_with_zeros() {
        let c = ctx(3);
        let s = PointState::new(CoinStream::repeating(&[0], 20).unwrap(), c.b);
        let w = encode(&s, 20, &c).unwrap();
        assert!(w.letters().iter().all(|&l| l == Letter::new(0, 3)));
    }

    #[test]
    fn exact_landing_is_flagged() {
        let c = ctx(3);
        let s = PointState::new(CoinStream::repeating(&[0], 4).unwrap(), c.a);
        assert!(matches!(encode(&s, 2, &c), Err(Error::DeletedPoint { .. })));
    }

    #[test]
    fn decode_periodic_words() {
        let c = ctx(3);
        let w = SymbolicWord::repeat(3, Letter::new(1, 3), 20).unwrap();
        let v = decode(&w, &c).unwrap();
        // (100)^∞ = β² / (β³ - 1)
        let closed = c.beta * c.beta / (c.beta.powi(3) - 1.0);
        assert!((closed - c.a).abs() < 1e-12);
        assert!(v.contains(c.a, 1e-14));
        assert!(v.tail <= c.beta.powi(-60) / (c.beta - 1.0) * (1.0 + 1e-12));

        let w = SymbolicWord::repeat(3, Letter::new(0, 2), 20).unwrap();
        assert!(decode(&w, &c).unwrap().contains(c.a, 1e-14));
    }

    #[test]
    fn boundary_words() {
        let c = ctx(3);
        let a_short = boundary_expansion(Endpoint::A, &[30], 3);
        assert_eq!(&a_short[..4], &[0, 1, 0, 1]);
        assert!(eval_word(&a_short, c.beta).unwrap().contains(c.a, 1e-14));

        let a_long = boundary_expansion(Endpoint::A, &[0, 30], 3);
        assert_eq!(&a_long[..6], &[1, 0, 0, 1, 0, 0]);
        assert!(eval_word(&a_long, c.beta).unwrap().contains(c.a, 1e-14));

        let b_short = boundary_expansion(Endpoint::B, &[30], 3);
        assert_eq!(&b_short[..2], &[1, 0]);
        assert!(eval_word(&b_short, c.beta).unwrap().contains(c.b, 1e-14));

        let mixed = boundary_expansion(Endpoint::A, &[3, 2, 5, 40], 3);
        assert!(eval_word(&mixed, c.beta).unwrap().contains(c.a, 1e-14));
    }

    #[test]
    fn entropy_values() {
        assert!((mme_entropy(3).unwrap() - 1.386_294_361_119_890_6).abs() < 1e-15);
        assert!((mme_entropy(4).unwrap() - 1.791_759_469_228_055).abs() < 1e-15);
        assert!((mme_entropy(10).unwrap() - 2.890_371_757_896_164_7).abs() < 1e-15);
        for n in 3..=12 {
            assert!((uniform_shift_entropy(n) - mme_entropy(n).unwrap()).abs() < 1e-14);
        }
        assert_eq!(mme_entropy(2).unwrap_err(), Error::InvalidN(2));
    }

    #[test]
    fn letter_index_round_trip() {
        for n in 3..=7 {
            for i in 0..alphabet_size(n) {
                assert_eq!(Letter::from_index(i, n).index(n), i);
            }
        }
        assert_eq!(SymbolicWord::all(3, 4).count(), 256);
    }

    #[test]
    fn word_validation() {
        assert!(SymbolicWord::new(3, vec![Letter::new(0, 4)]).is_err());
        assert!(SymbolicWord::new(3, vec![Letter::new(2, 2)]).is_err());
        assert!(SymbolicWord::new(3, vec![Letter::new(0, 1)]).is_err());
    }

    #[test]
    fn csv_and_json_io() {
        let w = SymbolicWord::new(4, vec![Letter::new(0, 2), Letter::new(1, 4)]).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0,2\n1,4\n");
        assert_eq!(SymbolicWord::read_csv(4, &buf[..]).unwrap(), w);
        assert_eq!(
            SymbolicWord::read_csv(4, "coin,rt\n0,2\n1,4\n".as_bytes()).unwrap(),
            w
        );
        assert_eq!(w.to_json(), "[[0,2],[1,4]]");
        assert_eq!(SymbolicWord::from_json(4, "[[0,2],[1,4]]").unwrap(), w);
        assert!(SymbolicWord::from_json(3, "[[0,2],[1,4]]").is_err());
    }

    #[test]
    fn cylinder_intervals_are_disjoint() {
        let c = ctx(3);
        let g = greedy_breakpoints(&c).unwrap();
        let l = lazy_breakpoints(&c).unwrap();
        for coins in [[0u8, 0, 1], [1, 0, 1], [1, 1, 1]] {
            let mut ivs: Vec<Interval> = SymbolicWord::all(3, 3)
                .filter(|w| w.coins() == coins)
                .map(|w| decode_interval(&w, &g, &l).unwrap())
                .collect();
            assert_eq!(ivs.len(), 8);
            ivs.sort_by(|x, y| x.lo.total_cmp(&y.lo));
            for p in ivs.windows(2) {
                assert!(p[0].hi <= p[1].lo + 1e-12);
            }
            let total: f64 = ivs.iter().map(Interval::len).sum();
            assert!((total - c.switch_len()).abs() < 1e-12);
        }
    }
}
