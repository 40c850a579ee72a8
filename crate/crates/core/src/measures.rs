//! Measures on `Ω × [a, b]` and their lifts to `K`-invariant measures.
//!
//! Every measure here is evaluated on rectangles `C × J` (a coin cylinder
//! times an interval), never through densities, so the identities reduce to
//! exact piecewise-affine interval arithmetic.
//!
//! The lift uses the first-return tower: a point of `[a, b]` with first coin
//! `i` and return time `t` visits levels `k = 0..t-1`, and level `k ≥ 1`
//! carries the coin sequence `σω` and the position `β^k x - s_{i,k}` with
//! `s_{1,k} = β^{k-1}` and `s_{0,k} = 1 + β + ... + β^{k-2}`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{geometric_sum, AlgebraicBeta};
use crate::dynamics::{derive_seed, CoinStream, PointState};
use crate::error::{Error, Result};
use crate::gls::{
    greedy_breakpoints, lazy_breakpoints, return_time_vector, ReturnTimeVector, Side,
};
use crate::interval::Interval;
use crate::markov::{build_partition, parry_return_time_law, MarkovChain};
use crate::symbolic::{decode, decode_interval, Letter, SymbolicWord};

/// A cylinder of `Ω × {2..n}^ℕ`: fixed first coins and return times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CylinderSpec {
    pub n: usize,
    pub coins: Vec<u8>,
    pub rts: Vec<usize>,
}

impl CylinderSpec {
    pub fn new(n: usize, coins: Vec<u8>, rts: Vec<usize>) -> Result<Self> {
        if coins.len() != rts.len() {
            return Err(Error::Domain(format!(
                "{} coins but {} return times",
                coins.len(),
                rts.len()
            )));
        }
        // letter validation lives in SymbolicWord
        let spec = CylinderSpec { n, coins, rts };
        spec.word()?;
        Ok(spec)
    }

    pub fn word(&self) -> Result<SymbolicWord> {
        let letters = self
            .coins
            .iter()
            .zip(&self.rts)
            .map(|(&c, &t)| Letter::new(c, t))
            .collect();
        SymbolicWord::new(self.n, letters)
    }

    pub fn len(&self) -> usize {
        self.coins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coins.is_empty()
    }

    /// Every spec of length `m` with return times in `2..=n`.
    pub fn all(n: usize, m: usize) -> Vec<CylinderSpec> {
        SymbolicWord::all(n, m)
            .map(|w| CylinderSpec {
                n,
                coins: w.coins(),
                rts: w.return_times(),
            })
            .collect()
    }
}

/// `m_p` of a coin cylinder, where `p` is the probability of a 0.
pub fn coin_mass(p: f64, coins: &[u8]) -> f64 {
    coins
        .iter()
        .map(|&c| if c == 0 { p } else { 1.0 - p })
        .product()
}

fn check_bias(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("coin bias {p} outside (0, 1)")))
    }
}

/// An `I`-invariant probability measure on `Ω × [a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InducedMeasureSpec {
    /// `m_p × normalized Lebesgue`.
    Lebesgue { p: f64 },
    /// `(m_p × μ_π) ∘ φ`: coins and return times independent, return times
    /// i.i.d. with law `π`.
    Product { p: f64, pi: ReturnTimeVector },
}

impl InducedMeasureSpec {
    pub fn lebesgue(p: f64) -> Result<Self> {
        check_bias(p)?;
        Ok(InducedMeasureSpec::Lebesgue { p })
    }

    pub fn product(p: f64, pi: ReturnTimeVector) -> Result<Self> {
        check_bias(p)?;
        let pi = ReturnTimeVector::new(pi.n, pi.pi)?;
        Ok(InducedMeasureSpec::Product { p, pi })
    }

    /// The pull-back of the uniform Bernoulli measure on the full shift.
    pub fn mme(n: usize) -> Result<Self> {
        Self::product(0.5, ReturnTimeVector::uniform(n))
    }

    pub fn bias(&self) -> f64 {
        match self {
            InducedMeasureSpec::Lebesgue { p } | InducedMeasureSpec::Product { p, .. } => *p,
        }
    }

    /// Return-time law.
    pub fn pi(&self, ctx: &AlgebraicBeta) -> Result<ReturnTimeVector> {
        match self {
            InducedMeasureSpec::Lebesgue { .. } => return_time_vector(ctx),
            InducedMeasureSpec::Product { pi, .. } => {
                if pi.n != ctx.n {
                    return Err(Error::Domain(format!(
                        "return-time law for n = {} used with n = {}",
                        pi.n, ctx.n
                    )));
                }
                Ok(pi.clone())
            }
        }
    }

    /// `∫ τ dν`.
    pub fn expected_return_time(&self, ctx: &AlgebraicBeta) -> Result<f64> {
        Ok(self.pi(ctx)?.mean())
    }

    /// Entropy of `I` under this measure: coin entropy plus the entropy of
    /// the return-time coordinate. For the Lebesgue kind the latter is
    /// `log β · ∫ τ dν`, the Lyapunov exponent of the GLS maps.
    pub fn induced_entropy(&self, ctx: &AlgebraicBeta) -> Result<f64> {
        let p = self.bias();
        let coin = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        Ok(match self {
            InducedMeasureSpec::Lebesgue { .. } => {
                coin + ctx.beta.ln() * self.expected_return_time(ctx)?
            }
            InducedMeasureSpec::Product { pi, .. } => coin + pi.entropy(),
        })
    }
}

/// The interval `J ⊂ [a, b]` of points whose first return times under the
/// coins of `spec` are `spec.rts`.
pub fn phi_preimage_interval(spec: &CylinderSpec, ctx: &AlgebraicBeta) -> Result<Interval> {
    let greedy = greedy_breakpoints(ctx)?;
    let lazy = lazy_breakpoints(ctx)?;
    decode_interval(&spec.word()?, &greedy, &lazy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
}

impl Comparison {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Comparison {
            lhs,
            rhs,
            deviation: (lhs - rhs).abs(),
        }
    }
}

/// `(m_p × normalized Lebesgue)(C × J)` against `m_p(C) · Π π_{n_j}` with
/// the supplied return-time law.
pub fn cylinder_products_check_with(
    spec: &CylinderSpec,
    p: f64,
    pi: &ReturnTimeVector,
    ctx: &AlgebraicBeta,
) -> Result<Comparison> {
    check_bias(p)?;
    let j = phi_preimage_interval(spec, ctx)?;
    let c = coin_mass(p, &spec.coins);
    let lhs = c * j.len() / ctx.switch_len();
    let rhs = c * spec.rts.iter().map(|&t| pi.get(t)).product::<f64>();
    Ok(Comparison::new(lhs, rhs))
}

/// Product-form check on one cylinder, with `π_t = β^{-t}`.
pub fn theorem25_check(spec: &CylinderSpec, p: f64, ctx: &AlgebraicBeta) -> Result<Comparison> {
    cylinder_products_check_with(spec, p, &return_time_vector(ctx)?, ctx)
}

/// Largest deviation over every cylinder of length `1..=depth`.
pub fn cylinder_products_exhaustive(ctx: &AlgebraicBeta, depth: usize, p: f64) -> Result<f64> {
    let pi = return_time_vector(ctx)?;
    let specs: Vec<CylinderSpec> = (1..=depth)
        .flat_map(|m| CylinderSpec::all(ctx.n, m))
        .collect();
    specs
        .par_iter()
        .map(|s| cylinder_products_check_with(s, p, &pi, ctx).map(|c| c.deviation))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `C × J` with `C` fixed by its first coins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rect {
    pub coins: Vec<u8>,
    pub interval: Interval,
}

impl Rect {
    pub fn new(coins: Vec<u8>, lo: f64, hi: f64) -> Self {
        Rect {
            coins,
            interval: Interval::new(lo, hi),
        }
    }
}

/// Support `[T₁(a), T₀(b)]` of the lifted measures.
pub fn attractor(ctx: &AlgebraicBeta) -> Interval {
    Interval::new(ctx.t1(ctx.a), ctx.t0(ctx.b))
}

/// One level of the first-return tower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerLevel {
    pub coin: u8,
    pub return_time: usize,
    pub level: usize,
    /// Points of `[a, b]` on this branch.
    pub base: Interval,
    pub slope: f64,
    pub offset: f64,
}

impl TowerLevel {
    pub fn image(&self) -> Interval {
        self.base.affine(self.slope, self.offset)
    }
}

/// Index of the Markov cell that tower level `lv` fills: greedy level `k`
/// of return time `t` is left cell `n - t + k` (1-based from the left end),
/// lazy level `k` is right cell `t - k` (1-based from `b`).
pub fn level_cell(n: usize, lv: &TowerLevel) -> usize {
    let (t, k) = (lv.return_time, lv.level);
    if lv.coin == 1 {
        n - t + k - 1
    } else {
        n - 1 + t - k
    }
}

/// Levels `1..t-1` of every branch of both GLS maps.
pub fn tower_levels(ctx: &AlgebraicBeta) -> Result<Vec<TowerLevel>> {
    let mut out = Vec::new();
    for coin in [0u8, 1] {
        let part = match Side::from_coin(coin) {
            Side::Greedy => greedy_breakpoints(ctx)?,
            Side::Lazy => lazy_breakpoints(ctx)?,
        };
        for t in 2..=ctx.n {
            let base = part.branch_interval(part.branch_for_return_time(t)?);
            for level in 1..t {
                let offset = if coin == 1 {
                    ctx.pow(level - 1)
                } else {
                    geometric_sum(ctx.beta, level - 1)
                };
                out.push(TowerLevel {
                    coin,
                    return_time: t,
                    level,
                    base,
                    slope: ctx.pow(level),
                    offset,
                });
            }
        }
    }
    Ok(out)
}

/// Overlap below which a tower level counts as disjoint from a target, and
/// shortfall below which it counts as contained. Well below the shortest
/// GLS branch for `n <= 50` (about `1e-11`).
pub const ALIGNMENT_TOLERANCE: f64 = 1e-13;

fn aligned_fraction(level: &Interval, target: &Interval) -> Result<f64> {
    let overlap = level.intersect(target).len();
    if overlap <= ALIGNMENT_TOLERANCE {
        Ok(0.0)
    } else if level.len() - overlap <= ALIGNMENT_TOLERANCE {
        Ok(1.0)
    } else {
        Err(Error::UnsupportedTarget(format!(
            "[{}, {}] cuts a tower level [{}, {}]; product measures are only \
             evaluated on unions of Markov cells",
            target.lo, target.hi, level.lo, level.hi
        )))
    }
}

/// Product-kind mass of `{ω ∈ C'} × (J ∩ [a, b])` relative to `m_p(C')`.
/// `J` must either cover `[a, b]` up to null sets or, when `C'` fixes the
/// first coin, be a union of first-level branches of that coin's GLS map.
fn base_mass(
    pi: &ReturnTimeVector,
    coins: &[u8],
    j: &Interval,
    ctx: &AlgebraicBeta,
) -> Result<f64> {
    let switch = Interval::new(ctx.a, ctx.b);
    match (aligned_fraction(&switch, j), coins.first()) {
        (Ok(f), _) => Ok(f),
        (Err(e), None) => Err(e),
        (Err(_), Some(&coin)) => {
            let part = match Side::from_coin(coin) {
                Side::Greedy => greedy_breakpoints(ctx)?,
                Side::Lazy => lazy_breakpoints(ctx)?,
            };
            let mut mass = 0.0;
            for t in 2..=ctx.n {
                let branch = part.branch_interval(part.branch_for_return_time(t)?);
                mass += aligned_fraction(&branch, j)? * pi.get(t);
            }
            Ok(mass)
        }
    }
}

/// `μ(C' × J)` for the lift of `ν`:
/// `(1/∫τ dν) Σ_{k≥0} ν({τ > k} ∩ K^{-k}(C' × J))`.
pub fn kac_lift(nu: &InducedMeasureSpec, target: &Rect, ctx: &AlgebraicBeta) -> Result<f64> {
    let p = nu.bias();
    let pi = nu.pi(ctx)?;
    let j = target.interval.intersect(&attractor(ctx));
    if j.is_empty() {
        return Ok(0.0);
    }
    let switch = Interval::new(ctx.a, ctx.b);
    let c = coin_mass(p, &target.coins);
    // level 0 is the base itself
    let mut total = c * match nu {
        InducedMeasureSpec::Lebesgue { .. } => j.intersect(&switch).len() / ctx.switch_len(),
        InducedMeasureSpec::Product { .. } => base_mass(&pi, &target.coins, &j, ctx)?,
    };
    let cells = match nu {
        InducedMeasureSpec::Product { .. } => build_partition(ctx)?,
        InducedMeasureSpec::Lebesgue { .. } => Vec::new(),
    };
    for lv in tower_levels(ctx)? {
        let first = if lv.coin == 0 { p } else { 1.0 - p };
        let mass = match nu {
            InducedMeasureSpec::Lebesgue { .. } => {
                j.affine_preimage(lv.slope, lv.offset)
                    .intersect(&lv.base)
                    .len()
                    / ctx.switch_len()
            }
            InducedMeasureSpec::Product { .. } => {
                let cell = &cells[level_cell(ctx.n, &lv)];
                aligned_fraction(&Interval::new(cell.lo, cell.hi), &j)? * pi.get(lv.return_time)
            }
        };
        total += first * c * mass;
    }
    Ok(total / pi.mean())
}

/// `K^{-1}(C' × J)` as a union of rectangles.
pub fn preimage_rects(target: &Rect, ctx: &AlgebraicBeta) -> Vec<Rect> {
    let j = target.interval;
    let mut out = vec![
        Rect {
            coins: target.coins.clone(),
            interval: j
                .affine_preimage(ctx.beta, 0.0)
                .intersect(&Interval::new(0.0, ctx.a)),
        },
        Rect {
            coins: target.coins.clone(),
            interval: j
                .affine_preimage(ctx.beta, 1.0)
                .intersect(&Interval::new(ctx.b, ctx.domain_max)),
        },
    ];
    for coin in [0u8, 1] {
        let mut coins = vec![coin];
        coins.extend_from_slice(&target.coins);
        out.push(Rect {
            coins,
            interval: j
                .affine_preimage(ctx.beta, f64::from(coin))
                .intersect(&Interval::new(ctx.a, ctx.b)),
        });
    }
    out.retain(|r| !r.interval.is_empty());
    out
}

/// `|μ(E) - μ(K^{-1} E)|` for the lift of `ν`.
pub fn invariance_defect(
    nu: &InducedMeasureSpec,
    target: &Rect,
    ctx: &AlgebraicBeta,
) -> Result<Comparison> {
    let direct = kac_lift(nu, target, ctx)?;
    let pulled = preimage_rects(target, ctx)
        .iter()
        .map(|r| kac_lift(nu, r, ctx))
        .sum::<Result<f64>>()?;
    Ok(Comparison::new(direct, pulled))
}

/// `count` random rectangles with coin prefixes of length up to 3 inside the
/// attractor.
pub fn random_rects(ctx: &AlgebraicBeta, count: usize, seed: u64) -> Vec<Rect> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = attractor(ctx);
    (0..count)
        .map(|_| {
            let depth = rng.random_range(0..=3);
            let coins = (0..depth).map(|_| rng.random_range(0..=1u8)).collect();
            let u = span.lo + rng.random::<f64>() * span.len();
            let v = span.lo + rng.random::<f64>() * span.len();
            Rect::new(coins, u.min(v), u.max(v))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AbramovKind {
    /// Parry measure of the Markov chain and its induced measure.
    Parry,
    /// Lift of the measure of maximal entropy of `I`.
    MmeLift,
    /// Lift of `m_p × normalized Lebesgue` with a fair coin.
    Lebesgue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbramovReport {
    pub n: usize,
    pub kind: AbramovKind,
    pub h_k: f64,
    pub h_i: f64,
    pub mu_center: f64,
    /// `∫ τ dν`
    pub mean_return_time: f64,
    pub deviation: f64,
}

pub fn abramov_check(ctx: &AlgebraicBeta, kind: AbramovKind) -> Result<AbramovReport> {
    let n = ctx.n;
    let report = |h_k: f64, h_i: f64, mu_center: f64, mean: f64| AbramovReport {
        n,
        kind,
        h_k,
        h_i,
        mu_center,
        mean_return_time: mean,
        deviation: (h_k - h_i * mu_center).abs(),
    };
    Ok(match kind {
        AbramovKind::Parry => {
            let chain = MarkovChain::build(ctx)?;
            let center = chain.center_mass();
            let h_i = chain.lambda.ln() / center;
            let mean = parry_return_time_law(&chain)?.mean();
            report(chain.entropy_rate(), h_i, center, mean)
        }
        AbramovKind::MmeLift | AbramovKind::Lebesgue => {
            let nu = if kind == AbramovKind::MmeLift {
                InducedMeasureSpec::mme(n)?
            } else {
                InducedMeasureSpec::lebesgue(0.5)?
            };
            let h_i = nu.induced_entropy(ctx)?;
            let mean = nu.expected_return_time(ctx)?;
            let center = kac_lift(&nu, &Rect::new(vec![], ctx.a, ctx.b), ctx)?;
            report(h_i / mean, h_i, center, mean)
        }
    })
}

/// Entropy rate estimate from block frequencies: `H_L - H_{L-1}`, where
/// `H_L` is the Shannon entropy of the empirical law of length-`L` blocks.
/// For a Markov source this is exact in the limit from `L = 2` on.
pub fn empirical_entropy(sample: &[usize], block_len: usize, alphabet: usize) -> Result<f64> {
    if block_len == 0 {
        return Err(Error::Domain("block length must be positive".into()));
    }
    let needed = 100usize.saturating_mul(alphabet.saturating_pow(block_len as u32));
    if sample.len() < needed {
        return Err(Error::InsufficientSample {
            needed,
            got: sample.len(),
        });
    }
    if let Some(&bad) = sample.iter().find(|&&s| s >= alphabet) {
        return Err(Error::Domain(format!(
            "symbol {bad} outside alphabet of size {alphabet}"
        )));
    }
    let h = block_entropy(sample, block_len, alphabet);
    Ok(if block_len == 1 {
        h
    } else {
        h - block_entropy(sample, block_len - 1, alphabet)
    })
}

/// Shannon entropy of the empirical distribution of overlapping blocks.
pub fn block_entropy(sample: &[usize], block_len: usize, alphabet: usize) -> f64 {
    if sample.len() < block_len || block_len == 0 {
        return 0.0;
    }
    let mut counts = vec![0u64; alphabet.pow(block_len as u32)];
    for w in sample.windows(block_len) {
        counts[w.iter().fold(0, |acc, &s| acc * alphabet + s)] += 1;
    }
    let total = (sample.len() + 1 - block_len) as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / total;
            f * f.ln()
        })
        .sum::<f64>()
}

/// I.i.d. uniform symbols over `0..alphabet`.
pub fn uniform_sample(alphabet: usize, len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0..alphabet)).collect()
}

/// Return-time frequencies read off `ν`-typical orbits of `I`, where `ν`
/// has return-time law `pi` and a fair coin.
///
/// Long orbits cannot be followed in floating point (each return expands
/// errors by `β^τ`), so the orbit is restarted every `block` returns: a
/// random word is drawn from `ν`, decoded to a point, and the actual
/// dynamics is run for `block` induced steps. Returns the histogram of
/// observed return times, indexed by `t - 2`.
pub fn orbit_return_frequencies(
    ctx: &AlgebraicBeta,
    pi: &ReturnTimeVector,
    samples: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    const BLOCK: usize = 8;
    const DEPTH: usize = 24;
    let n = ctx.n;
    let law = WeightedIndex::new(&pi.pi).map_err(|e| Error::Domain(e.to_string()))?;
    let restarts = samples.div_ceil(BLOCK);
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let letters: Vec<Letter> = (0..DEPTH)
                .map(|_| Letter::new(rng.random_range(0..=1u8), law.sample(&mut rng) + 2))
                .collect();
            let coins: Vec<u8> = letters.iter().map(|l| l.coin).collect();
            let x = decode(&SymbolicWord::new(n, letters)?, ctx)?.value;
            let mut state = PointState::new(CoinStream::explicit(coins)?, x.clamp(ctx.a, ctx.b));
            let mut h = vec![0u64; n - 1];
            let steps = BLOCK.min(samples - r * BLOCK);
            for _ in 0..steps {
                let t = state.induced_step(ctx)?.time;
                h[t - 2] += 1;
            }
            Ok(h)
        })
        .try_reduce(
            || vec![0u64; n - 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Largest binomial z-score of observed return-time frequencies against a
/// law.
pub fn max_z_score(counts: &[u64], pi: &ReturnTimeVector) -> f64 {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let p = pi.pi[k];
            let sigma = (p * (1.0 - p) / n).sqrt();
            if sigma == 0.0 {
                if (c as f64 / n - p).abs() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ((c as f64 / n - p) / sigma).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::solve_beta;

    fn ctx(n: usize) -> AlgebraicBeta {
        solve_beta(n).unwrap()
    }

    #[test]
    fn single_letter_cylinder() {
        let c = ctx(3);
        let spec = CylinderSpec::new(3, vec![1], vec![2]).unwrap();
        let j = phi_preimage_interval(&spec, &c).unwrap();
        let g = greedy_breakpoints(&c).unwrap();
        assert!((j.lo - g.breakpoints[1]).abs() < 1e-15);
        assert!((j.hi - c.b).abs() < 1e-15);
        assert!((j.len() - c.switch_len() / c.beta.powi(2)).abs() < 1e-14);
        let r = theorem25_check(&spec, 0.5, &c).unwrap();
        assert!((r.lhs - 0.284_920_145_499_026_6).abs() < 1e-12);
        assert!(r.deviation < 1e-14);
    }

    #[test]
    fn two_letter_cylinder_length() {
        let c = ctx(3);
        let spec = CylinderSpec::new(3, vec![1, 1], vec![2, 2]).unwrap();
        let j = phi_preimage_interval(&spec, &c).unwrap();
        assert!((j.len() - c.switch_len() / c.beta.powi(4)).abs() < 1e-14);
        let lazy = CylinderSpec::new(3, vec![0], vec![2]).unwrap();
        let jl = phi_preimage_interval(&lazy, &c).unwrap();
        assert!((jl.len() - c.switch_len() / c.beta.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn exhaustive_depth_three() {
        for n in [3, 4] {
            for p in [0.3, 0.5] {
                assert!(cylinder_products_exhaustive(&ctx(n), 3, p).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn wrong_law_is_detected() {
        let c = ctx(3);
        let spec = CylinderSpec::new(3, vec![1], vec![2]).unwrap();
        let r =
            cylinder_products_check_with(&spec, 0.5, &ReturnTimeVector::uniform(3), &c).unwrap();
        assert!(r.deviation > 1e-3);
    }

    #[test]
    fn invalid_specs() {
        assert!(CylinderSpec::new(3, vec![1], vec![4]).is_err());
        assert!(CylinderSpec::new(3, vec![1, 0], vec![2]).is_err());
        assert!(InducedMeasureSpec::lebesgue(1.0).is_err());
    }

    #[test]
    fn kac_center_and_total() {
        let c = ctx(3);
        for nu in [
            InducedMeasureSpec::lebesgue(0.5).unwrap(),
            InducedMeasureSpec::lebesgue(0.3).unwrap(),
            InducedMeasureSpec::mme(3).unwrap(),
        ] {
            let center = kac_lift(&nu, &Rect::new(vec![], c.a, c.b), &c).unwrap();
            let mean = nu.expected_return_time(&c).unwrap();
            assert!((center * mean - 1.0).abs() < 1e-12);
            let span = attractor(&c);
            let whole = kac_lift(&nu, &Rect::new(vec![], span.lo, span.hi), &c).unwrap();
            assert!((whole - 1.0).abs() < 1e-12);
        }
        let leb = InducedMeasureSpec::lebesgue(0.5).unwrap();
        assert!((leb.expected_return_time(&c).unwrap() - 2.430_159_709_001_946_7).abs() < 1e-12);
        let center = kac_lift(&leb, &Rect::new(vec![], c.a, c.b), &c).unwrap();
        assert!((center - 0.411_495_588_662_645_76).abs() < 1e-12);
    }

    #[test]
    fn tower_levels_are_cells() {
        for n in [3, 5, 8] {
            let c = ctx(n);
            let chain = MarkovChain::build(&c).unwrap();
            for lv in tower_levels(&c).unwrap() {
                let img = lv.image();
                let cell = &chain.cells[level_cell(n, &lv)];
                let hit = (cell.lo - img.lo).abs() < 1e-9 && (cell.hi - img.hi).abs() < 1e-9;
                assert!(hit, "n={n} level {lv:?}");
            }
        }
    }

    #[test]
    fn lifted_lebesgue_is_invariant() {
        let c = ctx(3);
        let nu = InducedMeasureSpec::lebesgue(0.3).unwrap();
        for r in random_rects(&c, 100, 11) {
            assert!(invariance_defect(&nu, &r, &c).unwrap().deviation <= 1e-10);
        }
    }

    #[test]
    fn lifted_product_is_invariant_on_cells() {
        let c = ctx(4);
        let chain = MarkovChain::build(&c).unwrap();
        let nu = InducedMeasureSpec::mme(4).unwrap();
        for (i, cell) in chain.cells.iter().enumerate() {
            let r = Rect::new(vec![(i % 2) as u8], cell.lo, cell.hi);
            assert!(invariance_defect(&nu, &r, &c).unwrap().deviation <= 1e-10);
        }
        let cut = Rect::new(vec![], c.a, (c.a + c.b) / 2.0);
        assert!(matches!(
            kac_lift(&nu, &cut, &c),
            Err(Error::UnsupportedTarget(_))
        ));
    }

    #[test]
    fn abramov_identities() {
        for n in [3, 4, 10] {
            let r = abramov_check(&ctx(n), AbramovKind::Parry).unwrap();
            assert!(r.deviation <= 1e-12, "n={n}");
            assert!((r.mu_center * r.mean_return_time - 1.0).abs() <= 1e-12);
        }
        let m = abramov_check(&ctx(3), AbramovKind::MmeLift).unwrap();
        assert!((m.h_k - 0.554_517_744_447_956_2).abs() < 1e-12);
        assert!(m.h_k < (1.769_292_354_238_631_4f64).ln());
    }

    #[test]
    fn entropy_estimates() {
        assert_eq!(empirical_entropy(&vec![0; 1000], 1, 4).unwrap(), 0.0);
        assert!(matches!(
            empirical_entropy(&[0, 1, 2], 2, 4),
            Err(Error::InsufficientSample { .. })
        ));
        let u = uniform_sample(4, 200_000, 3);
        let h = empirical_entropy(&u, 1, 4).unwrap();
        assert!((h - 4f64.ln()).abs() / 4f64.ln() < 0.01);
    }

    #[test]
    fn orbit_frequencies_follow_their_law() {
        let c = ctx(3);
        let gls = return_time_vector(&c).unwrap();
        let uniform = ReturnTimeVector::uniform(3);
        let counts = orbit_return_frequencies(&c, &uniform, 100_000, 5).unwrap();
        assert!(max_z_score(&counts, &uniform) < 5.0);
        assert!(max_z_score(&counts, &gls) > 5.0);
    }
}
