//! Defining polynomials of the base β_n and the Perron value λ_n.
//!
//! For `n >= 3` the base is the largest root in (1, 2) of
//!
//! ```text
//! x^n = x^(n-2) + ... + x + 1
//! ```
//!
//! and the Perron value of the Markov chain of the switching map is the
//! largest root in (1, 2) of `x^n = 2 (x^(n-2) + ... + x + 1)`. Both are
//! found by bisection on the fixed bracket [1, 2] followed by Newton
//! polishing. The root finders are generic over [`Real`] so the same code
//! runs in `f64` and in double-double ([`twofloat::TwoFloat`], 106-bit
//! significand) for large `n`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

/// `num / den` to full double-double accuracy.
///
/// `TwoFloat` division alone is only good to about 1e-17 relative; one
/// Newton correction on the residual restores the missing bits.
pub fn ext_div(num: Extended, den: Extended) -> Extended {
    let q = num / den;
    q + (num - q * den) / den
}

/// Natural log to full double-double accuracy (`TwoFloat::ln` is good
/// to about 1e-14 only).
///
/// `x = 2^k m` with `m` in `[1/√2, √2)`, then
/// `ln m = 2 atanh(s) = 2 (s + s³/3 + s⁵/5 + ...)` with `s = (m-1)/(m+1)`,
/// `|s| < 0.172`, so 24 terms reach 1e-36.
pub fn ext_ln(x: Extended) -> Extended {
    // ln 2 - LN_2
    const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;
    let k = (x.hi() / std::f64::consts::SQRT_2).log2().ceil() as i32;
    let m = x * 2f64.powi(-k);
    let one = Extended::from(1.0);
    let s = ext_div(m - one, m + one);
    let s2 = s * s;
    let mut term = s;
    let mut sum = Extended::from(0.0);
    for j in 0..24 {
        sum += ext_div(term, Extended::from(f64::from(2 * j + 1)));
        term *= s2;
    }
    sum * 2.0 + Extended::new_add(std::f64::consts::LN_2, LN2_LO) * f64::from(k)
}

/// Floating point scalar usable by the generic solvers.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    /// Natural log at the full precision of the type.
    fn ln_full(self) -> Self {
        self.ln()
    }

    /// Quotient at the full precision of the type.
    fn div_full(self, den: Self) -> Self {
        self / den
    }
}

impl Real for f64 {}

impl Real for Extended {
    fn ln_full(self) -> Self {
        ext_ln(self)
    }

    fn div_full(self, den: Self) -> Self {
        ext_div(self, den)
    }
}

/// Extended precision scalar (double-double).
pub type Extended = twofloat::TwoFloat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double arithmetic, 106-bit significand.
    Extended,
}

impl Precision {
    pub fn significand_bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::Extended => 106,
        }
    }
}

/// Which of the two polynomial families `x^n - k * (x^(n-2) + ... + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `k = 1`, root β_n.
    Beta,
    /// `k = 2`, root λ_n.
    Perron,
}

impl Family {
    fn weight<F: Real>(self) -> F {
        match self {
            Family::Beta => F::one(),
            Family::Perron => F::of(2.0),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::InvalidN(n))
    } else {
        Ok(())
    }
}

/// `1 + x + ... + x^(m-1)` by Horner.
pub fn geometric_sum<F: Real>(x: F, m: usize) -> F {
    (0..m).fold(F::zero(), |acc, _| acc * x + F::one())
}

/// Value and derivative of `x^n - k * sum_{i=0}^{n-2} x^i`.
pub fn poly_and_derivative<F: Real>(family: Family, n: usize, x: F) -> (F, F) {
    let k: F = family.weight();
    let mut sum = F::zero();
    let mut dsum = F::zero();
    for _ in 0..n - 1 {
        dsum = dsum * x + sum;
        sum = sum * x + F::one();
    }
    let xn1 = x.powi(n as i32 - 1);
    let value = xn1 * x - k * sum;
    let deriv = F::from_usize(n).unwrap() * xn1 - k * dsum;
    (value, deriv)
}

pub fn poly<F: Real>(family: Family, n: usize, x: F) -> F {
    poly_and_derivative(family, n, x).0
}

/// `|p(x)| / x^n`.
pub fn relative_residual<F: Real>(family: Family, n: usize, x: F) -> F {
    poly(family, n, x).abs() / x.powi(n as i32)
}

/// Largest root in (1, 2): bisection to machine resolution then Newton.
pub fn root<F: Real>(family: Family, n: usize) -> Result<F> {
    check_n(n)?;
    let mut lo = F::one();
    let mut hi = F::of(2.0);
    // p(1) < 0 < p(2) for both families and every n >= 3
    for _ in 0..240 {
        let mid = (lo + hi) / F::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if poly(family, n, mid) < F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = (lo + hi) / F::of(2.0);
    let mut best = poly(family, n, x).abs();
    for _ in 0..8 {
        let (p, dp) = poly_and_derivative(family, n, x);
        if dp == F::zero() {
            break;
        }
        let next = x - p / dp;
        let r = poly(family, n, next).abs();
        if !(next > F::one() && next < F::of(2.0)) || r >= best {
            break;
        }
        x = next;
        best = r;
    }
    Ok(x)
}

pub fn beta_root<F: Real>(n: usize) -> Result<F> {
    root(Family::Beta, n)
}

pub fn lambda_root<F: Real>(n: usize) -> Result<F> {
    root(Family::Perron, n)
}

/// Number of sign changes of the family polynomial on a uniform grid of
/// `points` interior points of (1, 2) plus both endpoints.
pub fn sign_changes_on_grid(family: Family, n: usize, points: usize) -> usize {
    // values within rounding noise of zero carry no sign
    let sign = |x: f64| {
        let v = poly::<f64>(family, n, x);
        if v.abs() <= 1e-9 * x.powi(n as i32) {
            0.0
        } else {
            v.signum()
        }
    };
    let step = 1.0 / (points + 1) as f64;
    let mut prev = 0.0;
    let mut changes = 0;
    for k in 0..=points + 1 {
        let s = sign(1.0 + k as f64 * step);
        if s == 0.0 {
            continue;
        }
        if prev != 0.0 && s != prev {
            changes += 1;
        }
        prev = s;
    }
    changes
}

/// The base β_n with the derived constants of the switch region.
///
/// `a = 1/(β²-1)`, `b = β a` and the domain is `E = [0, 1/(β-1)]`. The
/// right endpoint is stored as the float product `β * a` so that
/// `T₀(a) = b` holds bitwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraicBeta {
    pub n: usize,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub domain_max: f64,
    #[serde(skip)]
    powers: Vec<f64>,
    #[serde(skip)]
    beta_ext: Extended,
}

impl AlgebraicBeta {
    pub fn new(n: usize) -> Result<Self> {
        let beta: f64 = beta_root(n)?;
        let a = 1.0 / (beta * beta - 1.0);
        let b = beta * a;
        let domain_max = 1.0 / (beta - 1.0);
        let mut powers = Vec::with_capacity(n + 2);
        let mut p = 1.0;
        for _ in 0..=n + 1 {
            powers.push(p);
            p *= beta;
        }
        Ok(AlgebraicBeta {
            n,
            beta,
            a,
            b,
            domain_max,
            powers,
            beta_ext: beta_root(n)?,
        })
    }

    /// β in double-double, for quantities that cancel large powers.
    pub fn beta_extended(&self) -> Extended {
        self.beta_ext
    }

    /// `β^k` for `0 <= k <= n + 1`.
    pub fn pow(&self, k: usize) -> f64 {
        self.powers[k]
    }

    pub fn t0(&self, x: f64) -> f64 {
        self.beta * x
    }

    pub fn t1(&self, x: f64) -> f64 {
        self.beta * x - 1.0
    }

    pub fn residual(&self) -> f64 {
        relative_residual(Family::Beta, self.n, self.beta)
    }

    /// `sum_{t=2}^{n} β^{-t}`, which equals 1 by the defining equation.
    pub fn inverse_power_sum(&self) -> f64 {
        (2..=self.n).map(|t| 1.0 / self.pow(t)).sum()
    }

    pub fn in_switch(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn switch_len(&self) -> f64 {
        self.b - self.a
    }
}

pub fn solve_beta(n: usize) -> Result<AlgebraicBeta> {
    AlgebraicBeta::new(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerronValue {
    pub n: usize,
    pub lambda: f64,
}

impl PerronValue {
    pub fn residual(&self) -> f64 {
        relative_residual(Family::Perron, self.n, self.lambda)
    }
}

pub fn solve_lambda(n: usize) -> Result<PerronValue> {
    Ok(PerronValue {
        n,
        lambda: lambda_root(n)?,
    })
}

/// Finite-word value with the bound on any infinite continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WordValue {
    pub value: f64,
    /// `β^{-m} / (β - 1)`
    pub tail: f64,
}

impl WordValue {
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.value - slack && x <= self.value + self.tail + slack
    }
}

/// `sum_k w_k β^{-k}` for a 0/1 word.
pub fn eval_word(word: &[u8], beta: f64) -> Result<WordValue> {
    if let Some((index, &digit)) = word.iter().enumerate().find(|(_, &d)| d > 1) {
        return Err(Error::NonBinaryDigit { index, digit });
    }
    let value = word
        .iter()
        .rev()
        .fold(0.0, |acc, &d| (acc + f64::from(d)) / beta);
    let tail = beta.powi(-(word.len() as i32)) / (beta - 1.0);
    Ok(WordValue { value, tail })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 1.618_033_988_749_895;

    fn dd_err(got: Extended, hi: f64, lo: f64) -> f64 {
        f64::from(got - Extended::new_add(hi, lo)).abs()
    }

    #[test]
    fn double_double_ln_and_div() {
        // hi/lo splits of the exact values
        let cases = [
            (2.0, std::f64::consts::LN_2, 2.319_046_813_846_299_6e-17),
            (0.3, -1.203_972_804_325_936_1, 8.935_521_583_403_776e-17),
            (98.0, 4.584_967_478_670_572, -3.854_493_200_160_171_4e-16),
        ];
        for (x, hi, lo) in cases {
            assert!(dd_err(ext_ln(Extended::from(x)), hi, lo) < 1e-31, "ln {x}");
        }
        let third = ext_div(Extended::from(1.0), Extended::from(3.0));
        assert!(f64::from(third * 3.0 - 1.0).abs() < 1e-32);
    }

    #[test]
    fn small_n_rejected() {
        assert_eq!(solve_beta(2).unwrap_err(), Error::InvalidN(2));
        assert_eq!(solve_lambda(0).unwrap_err(), Error::InvalidN(0));
    }

    #[test]
    fn n3_constants() {
        let ctx = solve_beta(3).unwrap();
        assert!((ctx.beta - 1.324_717_957_244_746).abs() < 1e-14);
        // β(β²-1) = 1 when n = 3
        assert!((ctx.a - ctx.beta).abs() < 1e-14);
        assert!((ctx.b - ctx.beta * ctx.beta).abs() < 1e-14);
        assert_eq!(ctx.t0(ctx.a), ctx.b);
        assert!((ctx.t1(ctx.b) - ctx.a).abs() < 1e-12);
        assert!(ctx.residual() <= 1e-14);
    }

    #[test]
    fn n4_beta() {
        let ctx = solve_beta(4).unwrap();
        assert!((ctx.beta - 1.465_571_231_876_768).abs() < 1e-14);
    }

    #[test]
    fn lambda_values() {
        let l3 = solve_lambda(3).unwrap();
        assert!((l3.lambda - 1.769_292_354_238_631_4).abs() < 1e-14);
        let l = l3.lambda;
        assert!((l * l * l - 2.0 * l - 2.0).abs() < 1e-12);
        let l10 = solve_lambda(10).unwrap();
        assert!(l10.lambda > 1.0 && l10.lambda < 2.0);
        assert!((l10.lambda - 1.998_689_641_224_009_3).abs() < 1e-14);
        assert!(l10.residual() <= 1e-14);
    }

    #[test]
    fn constants_invariants_up_to_40() {
        for n in 3..=40 {
            let ctx = solve_beta(n).unwrap();
            assert!(ctx.residual() <= 1e-12, "n={n}");
            assert!(ctx.beta > 1.0 && ctx.beta < GOLDEN);
            assert!(0.0 < ctx.a && ctx.a < ctx.b && ctx.b < ctx.domain_max);
            assert!((ctx.beta * ctx.a - ctx.b).abs() <= 1e-12);
            assert!((ctx.beta * ctx.b - 1.0 - ctx.a).abs() <= 1e-12);
            assert!((ctx.inverse_power_sum() - 1.0).abs() <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn monotone_convergence_to_golden_ratio() {
        let betas: Vec<f64> = (3..=40).map(|n| solve_beta(n).unwrap().beta).collect();
        for w in betas.windows(2) {
            assert!(w[0] < w[1]);
            assert!(GOLDEN - w[1] < GOLDEN - w[0]);
        }
    }

    #[test]
    fn single_root_in_unit_bracket() {
        for n in 3..=30 {
            assert_eq!(
                sign_changes_on_grid(Family::Beta, n, 10_000),
                1,
                "beta n={n}"
            );
            assert_eq!(
                sign_changes_on_grid(Family::Perron, n, 10_000),
                1,
                "lambda n={n}"
            );
        }
    }

    #[test]
    fn root_is_bracketed() {
        for n in [3, 7, 20, 40] {
            for family in [Family::Beta, Family::Perron] {
                let r: f64 = root(family, n).unwrap();
                assert!(poly(family, n, r - 1e-12) < 0.0);
                assert!(poly(family, n, r + 1e-12) > 0.0);
            }
        }
    }

    #[test]
    fn extended_agrees_with_double() {
        for n in [3, 10, 30] {
            let d: f64 = beta_root(n).unwrap();
            let e: Extended = beta_root(n).unwrap();
            assert!((f64::from(e) - d).abs() < 1e-15);
            assert!(f64::from(relative_residual(Family::Beta, n, e)) < 1e-28);
        }
    }

    #[test]
    fn eval_word_cases() {
        let beta = solve_beta(3).unwrap().beta;
        let zeros = eval_word(&[0; 12], beta).unwrap();
        assert_eq!(zeros.value, 0.0);
        assert!((zeros.tail - beta.powi(-12) / (beta - 1.0)).abs() < 1e-18);

        let ones = eval_word(&[1; 200], beta).unwrap();
        assert!((ones.value - 1.0 / (beta - 1.0)).abs() < 1e-12);

        let ctx = solve_beta(3).unwrap();
        let w: Vec<u8> = (0..60).map(|k| (k % 2) as u8).collect();
        let v = eval_word(&w, beta).unwrap();
        assert!(v.contains(ctx.a, 1e-15));

        assert_eq!(
            eval_word(&[0, 1, 2], beta).unwrap_err(),
            Error::NonBinaryDigit { index: 2, digit: 2 }
        );
    }
}
