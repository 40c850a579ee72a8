//! Greedy and lazy GLS maps on the switch region.
//!
//! The induced map is the skew product `(ω, x) ↦ (σω, L_{ω₁}(x))`, where
//! `L₁` (greedy, coin 1) and `L₀` (lazy, coin 0) are piecewise affine with
//! `n - 1` full branches on `[a, b]`.
//!
//! Greedy branch `i` (1-based) is `[c_i, c_{i+1})` with slope `β^{n-i+1}`,
//! offset `β^{n-i}` and return time `n - i + 1`. The lazy map is the mirror
//! image under `x ↦ 1/(β-1) - x`: lazy branch `j` is `(d_j, d_{j+1}]` with
//! `d_j = 1/(β-1) - c_{n-j+1}`, slope `β^{j+1}` and return time `j + 1`.

use serde::Serialize;

use crate::algebra::{ext_div, AlgebraicBeta, Extended};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::report::round_all;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Greedy,
    Lazy,
}

impl Side {
    /// Coin bit selecting this map.
    pub fn coin(self) -> u8 {
        match self {
            Side::Greedy => 1,
            Side::Lazy => 0,
        }
    }

    pub fn from_coin(coin: u8) -> Side {
        if coin == 1 {
            Side::Greedy
        } else {
            Side::Lazy
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlsPartition {
    pub side: Side,
    #[serde(skip)]
    pub n: usize,
    /// `n` points from `a` to `b`.
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    #[serde(skip)]
    pub offsets: Vec<f64>,
    pub return_times: Vec<usize>,
    /// The same branches in double-double, for checks whose f64 error
    /// grows like `β^n`.
    #[serde(skip)]
    pub extended: ExtendedBranches,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedBranches {
    pub breakpoints: Vec<Extended>,
    pub slopes: Vec<Extended>,
    pub offsets: Vec<Extended>,
}

impl ExtendedBranches {
    fn new(beta: Extended, side: Side, breakpoints: Vec<Extended>) -> Self {
        let n = breakpoints.len();
        let powers: Vec<Extended> = (0..=n as i32).map(|k| beta.powi(k)).collect();
        let (slopes, offsets) = match side {
            Side::Greedy => (
                (0..n - 1).map(|k| powers[n - k]).collect(),
                (0..n - 1).map(|k| powers[n - k - 1]).collect(),
            ),
            Side::Lazy => (
                (0..n - 1).map(|k| powers[k + 2]).collect(),
                (0..n - 1)
                    .map(|k| {
                        powers[..=k]
                            .iter()
                            .fold(Extended::from(0.0), |acc, &p| acc + p)
                    })
                    .collect(),
            ),
        };
        ExtendedBranches {
            breakpoints,
            slopes,
            offsets,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchImage {
    pub x: f64,
    pub return_time: usize,
    /// 0-based branch index.
    pub branch: usize,
}

fn check_increasing(bp: &[f64], side: Side) -> Result<()> {
    if bp.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!(
            "{side:?} breakpoints not strictly increasing: {bp:?}"
        )))
    }
}

/// `c_1 = a`, `c_i = β^{i-1} a - β^{i-2} + β^{-1}`, `c_n = b`.
///
/// The interior breakpoints cancel terms of size `β^{n-2}` and are
/// sensitive to the last bit of β, so they are evaluated from the
/// double-double root and rounded once.
pub fn greedy_breakpoints(ctx: &AlgebraicBeta) -> Result<GlsPartition> {
    let n = ctx.n;
    let beta = ctx.beta_extended();
    let one = Extended::from(1.0);
    let a = ext_div(one, beta * beta - one);
    let mut ext = Vec::with_capacity(n);
    ext.push(a);
    for i in 2..n {
        ext.push(beta.powi(i as i32 - 1) * a - beta.powi(i as i32 - 2) + ext_div(one, beta));
    }
    ext.push(beta * a);
    let mut bp: Vec<f64> = ext.iter().map(|&c| f64::from(c)).collect();
    bp[0] = ctx.a;
    bp[n - 1] = ctx.b;
    check_increasing(&bp, Side::Greedy)?;
    let slopes = (0..n - 1).map(|k| ctx.pow(n - k)).collect();
    let offsets = (0..n - 1).map(|k| ctx.pow(n - k - 1)).collect();
    let return_times = (0..n - 1).map(|k| n - k).collect();
    Ok(GlsPartition {
        side: Side::Greedy,
        n,
        breakpoints: bp,
        slopes,
        offsets,
        return_times,
        extended: ExtendedBranches::new(beta, Side::Greedy, ext),
    })
}

/// `d_j = 1/(β-1) - c_{n-j+1}` with `d_1 = a`, `d_n = b`.
pub fn lazy_breakpoints(ctx: &AlgebraicBeta) -> Result<GlsPartition> {
    let n = ctx.n;
    let greedy = greedy_breakpoints(ctx)?;
    let c = &greedy.breakpoints;
    let mut bp = Vec::with_capacity(n);
    bp.push(ctx.a);
    for j in 2..n {
        bp.push(ctx.domain_max - c[n - j]);
    }
    bp.push(ctx.b);
    check_increasing(&bp, Side::Lazy)?;
    let beta = ctx.beta_extended();
    let one = Extended::from(1.0);
    let domain_max = ext_div(one, beta - one);
    let ce = &greedy.extended.breakpoints;
    let ext = (0..n).map(|j| domain_max - ce[n - 1 - j]).collect();
    let slopes = (0..n - 1).map(|k| ctx.pow(k + 2)).collect();
    // 1 + β + ... + β^k
    let offsets = (0..n - 1)
        .map(|k| (0..=k).map(|m| ctx.pow(m)).sum())
        .collect();
    let return_times = (0..n - 1).map(|k| k + 2).collect();
    Ok(GlsPartition {
        side: Side::Lazy,
        n,
        breakpoints: bp,
        slopes,
        offsets,
        return_times,
        extended: ExtendedBranches::new(beta, Side::Lazy, ext),
    })
}

impl GlsPartition {
    pub fn for_side(ctx: &AlgebraicBeta, side: Side) -> Result<Self> {
        match side {
            Side::Greedy => greedy_breakpoints(ctx),
            Side::Lazy => lazy_breakpoints(ctx),
        }
    }

    pub fn a(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn b(&self) -> f64 {
        self.breakpoints[self.n - 1]
    }

    pub fn branch_count(&self) -> usize {
        self.n - 1
    }

    pub fn branch_interval(&self, k: usize) -> Interval {
        Interval::new(self.breakpoints[k], self.breakpoints[k + 1])
    }

    pub fn branch_len(&self, k: usize) -> f64 {
        self.breakpoints[k + 1] - self.breakpoints[k]
    }

    /// 0-based index of the branch carrying return time `t`.
    pub fn branch_for_return_time(&self, t: usize) -> Result<usize> {
        if !(2..=self.n).contains(&t) {
            return Err(Error::Domain(format!(
                "return time {t} outside 2..={}",
                self.n
            )));
        }
        Ok(match self.side {
            Side::Greedy => self.n - t,
            Side::Lazy => t - 2,
        })
    }

    /// Branch containing `x`: greedy branches are `[c_i, c_{i+1})`, lazy
    /// branches `(d_j, d_{j+1}]`.
    pub fn branch_of(&self, x: f64) -> Result<usize> {
        let inner = &self.breakpoints[1..self.n - 1];
        match self.side {
            Side::Greedy => {
                if !(self.a() <= x && x < self.b()) {
                    return Err(Error::Precondition {
                        x,
                        expected: "[a, b) for the greedy map",
                    });
                }
                Ok(inner.partition_point(|&c| c <= x))
            }
            Side::Lazy => {
                if !(self.a() < x && x <= self.b()) {
                    return Err(Error::Precondition {
                        x,
                        expected: "(a, b] for the lazy map",
                    });
                }
                Ok(inner.partition_point(|&d| d < x))
            }
        }
    }

    pub fn apply(&self, x: f64) -> Result<BranchImage> {
        let k = self.branch_of(x)?;
        Ok(BranchImage {
            x: self.slopes[k] * x - self.offsets[k],
            return_time: self.return_times[k],
            branch: k,
        })
    }

    /// Points of the branch with return time `t` whose image lies in `target`.
    pub fn inverse(&self, t: usize, target: &Interval) -> Result<Interval> {
        let k = self.branch_for_return_time(t)?;
        Ok(target
            .affine_preimage(self.slopes[k], self.offsets[k])
            .intersect(&self.branch_interval(k)))
    }

    /// Density at any point of the push-forward of normalized Lebesgue
    /// measure: `sum_k 1 / slope_k`, which is 1 for an invariant measure.
    pub fn lebesgue_pushforward_density(&self) -> f64 {
        self.slopes.iter().map(|s| 1.0 / s).sum()
    }

    /// Largest distance between a branch image endpoint and `a` or `b`.
    pub fn surjectivity_residual(&self) -> f64 {
        (0..self.branch_count())
            .map(|k| {
                let img = self
                    .branch_interval(k)
                    .affine(self.slopes[k], self.offsets[k]);
                (img.lo - self.a()).abs().max((img.hi - self.b()).abs())
            })
            .fold(0.0, f64::max)
    }

    /// [`GlsPartition::apply`] in double-double, with the branch chosen
    /// against the double-double breakpoints.
    pub fn apply_extended(&self, x: Extended) -> Result<(Extended, usize)> {
        let bp = &self.extended.breakpoints;
        let (a, b) = (bp[0], bp[self.n - 1]);
        let inner = &bp[1..self.n - 1];
        let k = match self.side {
            Side::Greedy if a <= x && x < b => inner.partition_point(|&c| c <= x),
            Side::Lazy if a < x && x <= b => inner.partition_point(|&d| d < x),
            Side::Greedy => {
                return Err(Error::Precondition {
                    x: f64::from(x),
                    expected: "[a, b) for the greedy map",
                })
            }
            Side::Lazy => {
                return Err(Error::Precondition {
                    x: f64::from(x),
                    expected: "(a, b] for the lazy map",
                })
            }
        };
        let e = &self.extended;
        Ok((e.slopes[k] * x - e.offsets[k], self.return_times[k]))
    }

    /// [`GlsPartition::surjectivity_residual`] in double-double.
    pub fn surjectivity_residual_extended(&self) -> f64 {
        let e = &self.extended;
        let (a, b) = (e.breakpoints[0], e.breakpoints[self.n - 1]);
        (0..self.branch_count())
            .map(|k| {
                let lo = e.slopes[k] * e.breakpoints[k] - e.offsets[k];
                let hi = e.slopes[k] * e.breakpoints[k + 1] - e.offsets[k];
                f64::from((lo - a).abs()).max(f64::from((hi - b).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// JSON with the output values rounded to 12 significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "side": self.side,
            "breakpoints": round_all(&self.breakpoints),
            "slopes": round_all(&self.slopes),
            "return_times": self.return_times,
        })
    }
}

/// `L₁(x)` and the return time of `x` under coin 1.
pub fn apply_greedy(x: f64, part: &GlsPartition) -> Result<(f64, usize)> {
    if part.side != Side::Greedy {
        return Err(Error::Domain(
            "apply_greedy needs the greedy partition".into(),
        ));
    }
    let img = part.apply(x)?;
    Ok((img.x, img.return_time))
}

/// `L₀(x)` and the return time of `x` under coin 0.
pub fn apply_lazy(x: f64, part: &GlsPartition) -> Result<(f64, usize)> {
    if part.side != Side::Lazy {
        return Err(Error::Domain("apply_lazy needs the lazy partition".into()));
    }
    let img = part.apply(x)?;
    Ok((img.x, img.return_time))
}

/// Probability vector `π_t`, `t = 2..=n`, of return times under normalized
/// Lebesgue measure on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnTimeVector {
    pub n: usize,
    /// `pi[t - 2] = π_t`.
    pub pi: Vec<f64>,
}

impl ReturnTimeVector {
    pub fn new(n: usize, pi: Vec<f64>) -> Result<Self> {
        if pi.len() + 1 != n {
            return Err(Error::Domain(format!(
                "expected {} return-time probabilities, got {}",
                n - 1,
                pi.len()
            )));
        }
        if pi.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ReturnTimeVector { n, pi })
    }

    pub fn uniform(n: usize) -> Self {
        ReturnTimeVector {
            n,
            pi: vec![1.0 / (n - 1) as f64; n - 1],
        }
    }

    pub fn get(&self, t: usize) -> f64 {
        if (2..=self.n).contains(&t) {
            self.pi[t - 2]
        } else {
            0.0
        }
    }

    pub fn sum(&self) -> f64 {
        self.pi.iter().sum()
    }

    /// `sum_t t π_t`.
    pub fn mean(&self) -> f64 {
        self.pi
            .iter()
            .enumerate()
            .map(|(k, p)| (k + 2) as f64 * p)
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        -self
            .pi
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

/// Greedy branch lengths over `b - a`, indexed by return time.
pub fn return_time_vector(ctx: &AlgebraicBeta) -> Result<ReturnTimeVector> {
    let greedy = greedy_breakpoints(ctx)?;
    let len = ctx.switch_len();
    let pi = (2..=ctx.n)
        .map(|t| greedy.branch_len(ctx.n - t) / len)
        .collect();
    Ok(ReturnTimeVector { n: ctx.n, pi })
}

/// Branch lengths `p_1, ..., p_{n-1}` by the explicit expression
/// `p_i = β^i a - β^{i-1} a - (β^{i-1} - β^{i-2})`; the last one is
/// `b - c_{n-1}`.
pub fn branch_lengths(ctx: &AlgebraicBeta) -> Result<Vec<f64>> {
    let n = ctx.n;
    let mut p: Vec<f64> = (1..=n - 2)
        .map(|i| {
            let prev2 = if i >= 2 {
                ctx.pow(i - 2)
            } else {
                1.0 / ctx.beta
            };
            ctx.pow(i) * ctx.a - ctx.pow(i - 1) * ctx.a - (ctx.pow(i - 1) - prev2)
        })
        .collect();
    let greedy = greedy_breakpoints(ctx)?;
    p.push(ctx.b - greedy.breakpoints[n - 2]);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::solve_beta;

    fn ctx(n: usize) -> AlgebraicBeta {
        solve_beta(n).unwrap()
    }

    #[test]
    fn n3_breakpoints() {
        let c = ctx(3);
        let g = greedy_breakpoints(&c).unwrap();
        assert_eq!(g.breakpoints[0], c.a);
        assert_eq!(g.breakpoints[2], c.b);
        assert!((g.breakpoints[1] - 1.509_755_332_493_385_5).abs() < 1e-12);
        assert!((g.branch_len(0) - c.switch_len() * c.beta.powi(-3)).abs() < 1e-12);

        let l = lazy_breakpoints(&c).unwrap();
        assert_eq!(l.breakpoints[0], c.a);
        assert_eq!(l.breakpoints[2], c.b);
        assert!((l.breakpoints[1] - 1.569_840_290_998_053_3).abs() < 1e-12);
        assert!((l.branch_len(0) - g.branch_len(1)).abs() < 1e-12);
        assert!((l.branch_len(1) - g.branch_len(0)).abs() < 1e-12);
    }

    #[test]
    fn n4_branch_lengths() {
        let c = ctx(4);
        let g = greedy_breakpoints(&c).unwrap();
        let len = c.switch_len();
        for (k, e) in [4, 3, 2].into_iter().enumerate() {
            assert!((g.branch_len(k) - len * c.beta.powi(-e)).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_length_law_up_to_20() {
        for n in 3..=20 {
            let c = ctx(n);
            let g = greedy_breakpoints(&c).unwrap();
            for k in 0..n - 1 {
                let i = k + 1;
                let expect = c.switch_len() * c.beta.powi(-((n - i + 1) as i32));
                assert!((g.branch_len(k) - expect).abs() < 1e-12, "n={n} i={i}");
            }
            let l = lazy_breakpoints(&c).unwrap();
            for j in 1..=n {
                let d = l.breakpoints[j - 1];
                assert!((d - (c.domain_max - g.breakpoints[n - j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn greedy_examples() {
        let c = ctx(3);
        let g = greedy_breakpoints(&c).unwrap();
        let (x, t) = apply_greedy(c.a, &g).unwrap();
        assert!((x - c.a).abs() < 1e-12);
        assert_eq!(t, 3);
        let (x, t) = apply_greedy(1.60, &g).unwrap();
        assert_eq!(t, 2);
        assert!((x - 1.483_086_308_749_962_4).abs() < 1e-12);
        assert!(apply_greedy(c.b, &g).is_err());
        assert!(apply_greedy(1.0, &g).is_err());
    }

    #[test]
    fn lazy_examples() {
        let c = ctx(3);
        let g = greedy_breakpoints(&c).unwrap();
        let l = lazy_breakpoints(&c).unwrap();
        let (x, t) = apply_lazy(c.b, &l).unwrap();
        assert!((x - c.b).abs() < 1e-12);
        assert_eq!(t, 3);
        let (x, _) = apply_lazy(1.45, &l).unwrap();
        let (y, _) = apply_greedy(c.domain_max - 1.45, &g).unwrap();
        assert!((x - (c.domain_max - y)).abs() < 1e-12);
        assert!((x - 1.544_572_616_057_704_5).abs() < 1e-12);
        assert!(apply_lazy(c.a, &l).is_err());
        assert!(apply_lazy(1.45, &g).is_err());
    }

    #[test]
    fn return_time_vector_n3() {
        let c = ctx(3);
        let v = return_time_vector(&c).unwrap();
        assert!((v.get(2) - 0.569_840_290_998_053_3).abs() < 1e-12);
        assert!((v.get(3) - 0.430_159_709_001_946_7).abs() < 1e-12);
        assert!((v.sum() - 1.0).abs() < 1e-12);
        let p = branch_lengths(&c).unwrap();
        assert!((p[0] - 0.185_037_375_248_639_5).abs() < 1e-12);
        let g = greedy_breakpoints(&c).unwrap();
        assert!((p[0] - g.branch_len(0)).abs() < 1e-12);
    }

    #[test]
    fn naive_last_length_is_negative() {
        // the literal expression b - β^{n-2}a - β^{n-3}a + β^{-1} for p_{n-1}
        let c = ctx(3);
        let literal = c.b - c.beta * c.a - c.a + 1.0 / c.beta;
        assert!(literal < 0.0);
        let p = branch_lengths(&c).unwrap();
        assert!(p[1] > 0.0);
        assert!((p.iter().sum::<f64>() - c.switch_len()).abs() < 1e-12);
    }

    #[test]
    fn pi_matches_inverse_powers_and_explicit_lengths() {
        for n in 3..=20 {
            let c = ctx(n);
            let v = return_time_vector(&c).unwrap();
            let p = branch_lengths(&c).unwrap();
            for t in 2..=n {
                assert!(
                    (v.get(t) - c.beta.powi(-(t as i32))).abs() < 1e-12,
                    "n={n} t={t}"
                );
                let i = n - t + 1;
                assert!(
                    (v.get(t) - p[i - 1] / c.switch_len()).abs() < 1e-12,
                    "n={n} t={t}"
                );
            }
        }
    }

    #[test]
    fn lebesgue_invariance_and_surjectivity() {
        for n in 3..=20 {
            let c = ctx(n);
            for side in [Side::Greedy, Side::Lazy] {
                let part = GlsPartition::for_side(&c, side).unwrap();
                assert!((part.lebesgue_pushforward_density() - 1.0).abs() < 1e-12);
                assert!(part.surjectivity_residual() < 1e-10, "n={n} {side:?}");
            }
        }
    }

    #[test]
    fn inverse_branch_round_trip() {
        let c = ctx(5);
        let g = greedy_breakpoints(&c).unwrap();
        let full = Interval::new(c.a, c.b);
        for t in 2..=5 {
            let j = g.inverse(t, &full).unwrap();
            assert!((j.len() - c.switch_len() * c.beta.powi(-(t as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn json_shape() {
        let c = ctx(3);
        let v = greedy_breakpoints(&c).unwrap().to_json();
        assert_eq!(v["side"], "greedy");
        assert_eq!(v["breakpoints"].as_array().unwrap().len(), 3);
        assert_eq!(v["return_times"], serde_json::json!([3, 2]));
    }
}
