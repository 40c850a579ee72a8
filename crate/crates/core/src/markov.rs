//! Markov partition of `K`, the adjacency matrix `S_n` and its Parry measure.
//!
//! The attractor `[T₁(a), T₀(b)]` splits into `2n - 1` cells:
//!
//! ```text
//! L1 .. L(n-1)   [T₀^k T₁(a), T₀^{k+1} T₁(a)],  k = 0..n-2   (ending at a)
//! C              [a, b]
//! R1 .. R(n-1)   [T₁^{j+1} T₀(b), T₁^j T₀(b)],  j = n-2..0   (starting at b)
//! ```
//!
//! Left cells move right under `T₀`, right cells move left under `T₁`, and
//! the center is mapped by `T₀` onto all right cells and by `T₁` onto all
//! left cells. Indices run left to right, so the center is `n - 1`.
//!
//! The Perron data are taken from closed forms: with `c = 1`,
//! `v = (1, λ, ..., λ^{n-1}, ..., λ, 1)` and
//! `u = d (1, (1+λ)/λ, ..., (1+...+λ^{n-2})/λ^{n-2}, λ, ...mirrored)`,
//! where `d = cd` is fixed by `u · v = 1`. Power iteration is only a
//! cross-check.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{
    ext_div, geometric_sum, lambda_root, AlgebraicBeta, Extended, Precision, Real,
};
use crate::error::{Error, Result};
use crate::gls::ReturnTimeVector;
use crate::report::{round_all, round_sig};

/// Partition endpoints must close up to this tolerance.
pub const PARTITION_TOLERANCE: f64 = 1e-10;
/// Relative eigen-residual accepted for the closed-form eigenvectors.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

pub type Adjacency = Vec<Vec<u8>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub label: String,
}

impl Cell {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

pub fn cell_count(n: usize) -> usize {
    2 * n - 1
}

pub fn center_index(n: usize) -> usize {
    n - 1
}

/// `L1.. C R1..` in general; for `n = 3` the letters `A..E`.
pub fn cell_label(n: usize, index: usize) -> String {
    if n == 3 {
        return ["A", "B", "C", "D", "E"][index].into();
    }
    let c = center_index(n);
    match index.cmp(&c) {
        std::cmp::Ordering::Less => format!("L{}", index + 1),
        std::cmp::Ordering::Equal => "C".into(),
        std::cmp::Ordering::Greater => format!("R{}", index - c),
    }
}

pub fn build_partition(ctx: &AlgebraicBeta) -> Result<Vec<Cell>> {
    // orbits of length n amplify rounding by β^n, so iterate in double-double
    let n = ctx.n;
    let beta = ctx.beta_extended();
    let one = Extended::from(1.0);
    let a = ext_div(one, beta * beta - one);
    let b = beta * a;
    let mut left = Vec::with_capacity(n);
    let mut x = beta * a - one;
    for _ in 0..n {
        left.push(x);
        x = beta * x;
    }
    let mut right = Vec::with_capacity(n);
    let mut y = beta * b;
    for _ in 0..n {
        right.push(y);
        y = beta * y - one;
    }
    let gap_a = f64::from((left[n - 1] - a).abs());
    let gap_b = f64::from((right[n - 1] - b).abs());
    if gap_a > PARTITION_TOLERANCE || gap_b > PARTITION_TOLERANCE {
        return Err(Error::InvariantViolation(format!(
            "partition does not close: |T₀^(n-1)T₁(a) - a| = {gap_a:e}, |T₁^(n-1)T₀(b) - b| = {gap_b:e}"
        )));
    }
    let mut left: Vec<f64> = left.into_iter().map(f64::from).collect();
    let mut right: Vec<f64> = right.into_iter().map(f64::from).collect();
    left[n - 1] = ctx.a;
    right[n - 1] = ctx.b;

    let mut cells = Vec::with_capacity(cell_count(n));
    for k in 0..n - 1 {
        cells.push((left[k], left[k + 1]));
    }
    cells.push((ctx.a, ctx.b));
    for j in (0..n - 1).rev() {
        cells.push((right[j + 1], right[j]));
    }
    let cells: Vec<Cell> = cells
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi))| Cell {
            lo,
            hi,
            label: cell_label(n, i),
        })
        .collect();
    if let Some(bad) = cells.iter().find(|c| c.is_empty()) {
        return Err(Error::InvariantViolation(format!(
            "degenerate cell {} = [{}, {}]",
            bad.label, bad.lo, bad.hi
        )));
    }
    Ok(cells)
}

/// `S_n` from the combinatorial rule.
pub fn build_adjacency(n: usize) -> Result<Adjacency> {
    if n < 3 {
        return Err(Error::InvalidN(n));
    }
    let m = cell_count(n);
    let c = center_index(n);
    let mut s = vec![vec![0u8; m]; m];
    for k in 0..c {
        s[k][k + 1] = 1;
    }
    for (j, e) in s[c].iter_mut().enumerate() {
        *e = u8::from(j != c);
    }
    for i in c + 1..m {
        s[i][i - 1] = 1;
    }
    Ok(s)
}

/// Adjacency read off the interval images of the cells, together with the
/// largest distance from an image endpoint to the nearest cell endpoint.
pub fn image_adjacency(cells: &[Cell], ctx: &AlgebraicBeta) -> (Adjacency, f64) {
    let m = cells.len();
    let mut s = vec![vec![0u8; m]; m];
    let mut residual: f64 = 0.0;
    let endpoints: Vec<f64> = cells.iter().flat_map(|c| [c.lo, c.hi]).collect();
    let nearest = |y: f64| {
        endpoints
            .iter()
            .map(|e| (e - y).abs())
            .fold(f64::INFINITY, f64::min)
    };
    for (i, cell) in cells.iter().enumerate() {
        let mut maps: Vec<fn(&AlgebraicBeta, f64) -> f64> = Vec::new();
        if cell.hi <= ctx.a + PARTITION_TOLERANCE {
            maps.push(AlgebraicBeta::t0);
        } else if cell.lo >= ctx.b - PARTITION_TOLERANCE {
            maps.push(AlgebraicBeta::t1);
        } else {
            maps.push(AlgebraicBeta::t0);
            maps.push(AlgebraicBeta::t1);
        }
        for map in maps {
            let (lo, hi) = (map(ctx, cell.lo), map(ctx, cell.hi));
            residual = residual.max(nearest(lo)).max(nearest(hi));
            // images are unions of whole cells: an overlap is either ~0 or
            // the full target, whatever the cell width
            for (j, target) in cells.iter().enumerate() {
                let overlap = hi.min(target.hi) - lo.max(target.lo);
                if overlap > 0.5 * (target.hi - target.lo) {
                    s[i][j] = 1;
                }
            }
        }
    }
    (s, residual)
}

/// Every cell reaches every other cell.
pub fn is_irreducible(adj: &Adjacency) -> bool {
    let m = adj.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; m];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                let edge = if forward { adj[i][j] } else { adj[j][i] };
                if edge != 0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    m > 0 && reach(true) && reach(false)
}

/// `x^{n-1} (x^n - 2 (1 + x + ... + x^{n-2}))`.
pub fn char_poly_closed_form(n: usize, x: f64) -> f64 {
    x.powi(n as i32 - 1) * (x.powi(n as i32) - 2.0 * geometric_sum(x, n - 1))
}

/// `det(x I - S)` by LU.
pub fn char_poly_det(adj: &Adjacency, x: f64) -> f64 {
    let m = adj.len();
    DMatrix::from_fn(m, m, |i, j| {
        let d = if i == j { x } else { 0.0 };
        d - f64::from(adj[i][j])
    })
    .determinant()
}

/// Largest `|det(xI - S_n) - closed form| / max(1, |closed form|)` over the
/// sample points.
pub fn char_poly_residual(n: usize, sample_points: &[f64]) -> Result<f64> {
    let adj = build_adjacency(n)?;
    Ok(sample_points
        .iter()
        .map(|&x| {
            let cf = char_poly_closed_form(n, x);
            (char_poly_det(&adj, x) - cf).abs() / cf.abs().max(1.0)
        })
        .fold(0.0, f64::max))
}

/// Closed-form Perron eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData<F> {
    pub n: usize,
    pub lambda: F,
    /// Right eigenvector with `c = 1`.
    pub v: Vec<F>,
    /// Left eigenvector with `d = cd`.
    pub u: Vec<F>,
    pub cd: F,
}

/// `1/(cd) = 2/(λ-1) (λ^{n-1} - n + λ^n / 2) + λ^n`.
pub fn inverse_cd<F: Real>(lambda: F, n: usize) -> F {
    let two = F::of(2.0);
    let ln = lambda.powi(n as i32);
    two.div_full(lambda - F::one())
        * (lambda.powi(n as i32 - 1) - F::of(n as f64) + ln.div_full(two))
        + ln
}

fn right_shape<F: Real>(lambda: F, n: usize) -> Vec<F> {
    let half: Vec<F> = (0..n).map(|k| lambda.powi(k as i32)).collect();
    half.iter()
        .chain(half.iter().rev().skip(1))
        .copied()
        .collect()
}

/// Left eigenvector with `d = 1`.
fn left_shape<F: Real>(lambda: F, n: usize) -> Vec<F> {
    let mut half: Vec<F> = (0..n - 1)
        .map(|k| geometric_sum(lambda, k + 1).div_full(lambda.powi(k as i32)))
        .collect();
    half.push(lambda);
    half.iter()
        .chain(half.iter().rev().skip(1))
        .copied()
        .collect()
}

/// `u · v` with `c = d = 1`, i.e. `1/(cd)` by direct summation.
pub fn unit_dot<F: Real>(lambda: F, n: usize) -> F {
    right_shape(lambda, n)
        .into_iter()
        .zip(left_shape(lambda, n))
        .fold(F::zero(), |acc, (v, u)| acc + v * u)
}

/// Absolute residuals `‖S v - λ v‖∞` and `‖u S - λ u‖∞`.
pub fn eigen_residuals<F: Real>(adj: &Adjacency, eig: &EigenData<F>) -> (F, F) {
    let m = adj.len();
    let mut right = F::zero();
    let mut left = F::zero();
    for i in 0..m {
        let mut sv = F::zero();
        let mut us = F::zero();
        for j in 0..m {
            if adj[i][j] != 0 {
                sv = sv + eig.v[j];
            }
            if adj[j][i] != 0 {
                us = us + eig.u[j];
            }
        }
        right = right.max((sv - eig.lambda * eig.v[i]).abs());
        left = left.max((us - eig.lambda * eig.u[i]).abs());
    }
    (right, left)
}

fn sup_norm<F: Real>(xs: &[F]) -> F {
    xs.iter().fold(F::zero(), |m, x| m.max(x.abs()))
}

/// Residuals relative to the sup-norm of each eigenvector.
pub fn relative_eigen_residuals<F: Real>(adj: &Adjacency, eig: &EigenData<F>) -> (F, F) {
    let (r, l) = eigen_residuals(adj, eig);
    (r / sup_norm(&eig.v), l / sup_norm(&eig.u))
}

/// The closed-form vectors without any residual check (`n >= 3`).
pub fn eigen_vectors<F: Real>(lambda: F, n: usize) -> EigenData<F> {
    let cd = F::one().div_full(inverse_cd(lambda, n));
    let v = right_shape(lambda, n);
    let u = left_shape(lambda, n).into_iter().map(|x| x * cd).collect();
    EigenData {
        n,
        lambda,
        v,
        u,
        cd,
    }
}

pub fn eigen_closed_form<F: Real>(lambda: F, n: usize) -> Result<EigenData<F>> {
    if n < 3 {
        return Err(Error::InvalidN(n));
    }
    let eig = eigen_vectors(lambda, n);
    let (r, l) = relative_eigen_residuals(&build_adjacency(n)?, &eig);
    let tol = F::of(EIGEN_TOLERANCE);
    if !(r <= tol && l <= tol) {
        return Err(Error::InvariantViolation(format!(
            "closed-form eigenvector residuals {r}, {l} exceed {EIGEN_TOLERANCE:e}"
        )));
    }
    Ok(eig)
}

/// Dominant eigenvalue and right eigenvector (sup-normalized) by power
/// iteration.
pub fn power_iteration(adj: &Adjacency, tol: f64, max_iter: usize) -> (f64, Vec<f64>) {
    let m = adj.len();
    let mut v = vec![1.0; m];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w: Vec<f64> = (0..m)
            .map(|i| (0..m).filter(|&j| adj[i][j] != 0).map(|j| v[j]).sum())
            .collect();
        let norm = w.iter().fold(0.0, |a: f64, &x| a.max(x.abs()));
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let delta = next
            .iter()
            .zip(&v)
            .fold(0.0, |a: f64, (x, y)| a.max((x - y).abs()));
        v = next;
        let converged = (norm - lambda).abs() <= tol && delta <= tol;
        lambda = norm;
        if converged {
            break;
        }
    }
    (lambda, v)
}

/// `p_i = u_i v_i`, `p_ij = s_ij v_j / (λ v_i)`, with the row sums checked.
pub fn parry_from<F: Real>(adj: &Adjacency, eig: &EigenData<F>) -> Result<(Vec<F>, Vec<Vec<F>>)> {
    let (p, trans) = parry_data(adj, eig);
    for (i, row) in trans.iter().enumerate() {
        let s = row.iter().fold(F::zero(), |a, &x| a + x);
        if (s - F::one()).abs() > F::of(1e-10) {
            return Err(Error::InvariantViolation(format!(
                "Parry transition row {i} sums to {s}"
            )));
        }
    }
    Ok((p, trans))
}

/// `p_i = u_i v_i`, `p_ij = s_ij v_j / (λ v_i)`.
pub fn parry_data<F: Real>(adj: &Adjacency, eig: &EigenData<F>) -> (Vec<F>, Vec<Vec<F>>) {
    let m = adj.len();
    let p: Vec<F> = eig.u.iter().zip(&eig.v).map(|(u, v)| *u * *v).collect();
    let trans: Vec<Vec<F>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if adj[i][j] != 0 {
                        eig.v[j].div_full(eig.lambda * eig.v[i])
                    } else {
                        F::zero()
                    }
                })
                .collect()
        })
        .collect();
    (p, trans)
}

/// `-sum_i p_i sum_j p_ij log p_ij`.
pub fn entropy_rate(p: &[f64], trans: &[Vec<f64>]) -> f64 {
    -p.iter()
        .zip(trans)
        .map(|(pi, row)| {
            pi * row
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|x| x * x.ln())
                .sum::<f64>()
        })
        .sum::<f64>()
}

/// The topological Markov chain of `K` with its Parry measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub n: usize,
    pub cells: Vec<Cell>,
    pub adjacency: Adjacency,
    pub lambda: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cd: f64,
    pub p: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn build(ctx: &AlgebraicBeta) -> Result<Self> {
        let n = ctx.n;
        let cells = build_partition(ctx)?;
        let adjacency = build_adjacency(n)?;
        if !is_irreducible(&adjacency) {
            return Err(Error::InvariantViolation("adjacency is reducible".into()));
        }
        let lambda: f64 = lambda_root(n)?;
        let eig = eigen_closed_form(lambda, n)?;
        let (p, transition) = parry_from(&adjacency, &eig)?;
        Ok(MarkovChain {
            n,
            cells,
            adjacency,
            lambda,
            u: eig.u,
            v: eig.v,
            cd: eig.cd,
            p,
            transition,
        })
    }

    pub fn center(&self) -> usize {
        center_index(self.n)
    }

    pub fn eigen(&self) -> EigenData<f64> {
        EigenData {
            n: self.n,
            lambda: self.lambda,
            v: self.v.clone(),
            u: self.u.clone(),
            cd: self.cd,
        }
    }

    pub fn entropy_rate(&self) -> f64 {
        entropy_rate(&self.p, &self.transition)
    }

    /// `‖p P - p‖∞`.
    pub fn stationarity_residual(&self) -> f64 {
        let m = self.p.len();
        (0..m)
            .map(|j| {
                let s: f64 = (0..m).map(|i| self.p[i] * self.transition[i][j]).sum();
                (s - self.p[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `u_C v_C = cd λ^n`.
    pub fn center_mass(&self) -> f64 {
        self.p[self.center()]
    }

    pub fn report(&self) -> MarkovReport {
        let h_k = self.lambda.ln();
        let h_i_induced = h_k / self.center_mass();
        let h_i_max = ((2 * self.n - 2) as f64).ln();
        MarkovReport {
            n: self.n,
            lambda: round_sig(self.lambda),
            cells: self
                .cells
                .iter()
                .map(|c| Cell {
                    lo: round_sig(c.lo),
                    hi: round_sig(c.hi),
                    label: c.label.clone(),
                })
                .collect(),
            adjacency: self.adjacency.clone(),
            u: round_all(&self.u),
            v: round_all(&self.v),
            cd: round_sig(self.cd),
            p: round_all(&self.p),
            p_trans: self.transition.iter().map(|r| round_all(r)).collect(),
            h_k: round_sig(h_k),
            h_i_induced: round_sig(h_i_induced),
            h_i_max: round_sig(h_i_max),
            margin: round_sig(h_i_max - h_i_induced),
        }
    }
}

/// Return-time law of the Parry chain started in the center cell: the
/// first step picks a left or right cell, after which the path back is
/// forced.
pub fn parry_return_time_law(chain: &MarkovChain) -> Result<ReturnTimeVector> {
    let n = chain.n;
    let c = chain.center();
    let mut pi = vec![0.0; n - 1];
    for (j, &q) in chain.transition[c].iter().enumerate() {
        if j == c {
            continue;
        }
        // cells at distance d from the center return after d + 1 steps
        let d = j.abs_diff(c);
        pi[d - 1] += q;
    }
    ReturnTimeVector::new(n, pi)
}

/// `(p, P)` of the Parry measure.
pub fn parry_measure(chain: &MarkovChain) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    parry_from(&chain.adjacency, &chain.eigen())
}

/// `μ([a₁ ... a_k]) = p_{a₁} p_{a₁a₂} ... p_{a_{k-1}a_k}`.
pub fn cylinder_measure(chain: &MarkovChain, word: &[usize]) -> Result<f64> {
    let m = chain.p.len();
    if let Some(&bad) = word.iter().find(|&&i| i >= m) {
        return Err(Error::Domain(format!(
            "cell index {bad} out of range 0..{m}"
        )));
    }
    let Some(&first) = word.first() else {
        return Ok(1.0);
    };
    Ok(word
        .windows(2)
        .fold(chain.p[first], |acc, w| acc * chain.transition[w[0]][w[1]]))
}

/// Cell sequence of length `steps` drawn from the Parry chain.
pub fn sample_chain(chain: &MarkovChain, steps: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bad = |e: rand::distr::weighted::Error| Error::InvariantViolation(e.to_string());
    let start = WeightedIndex::new(&chain.p).map_err(bad)?;
    let rows = chain
        .transition
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(bad))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(steps);
    if steps == 0 {
        return Ok(out);
    }
    let mut s = start.sample(&mut rng);
    out.push(s);
    for _ in 1..steps {
        s = rows[s].sample(&mut rng);
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub n: usize,
    pub lambda: f64,
    pub cells: Vec<Cell>,
    pub adjacency: Adjacency,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cd: f64,
    pub p: Vec<f64>,
    #[serde(rename = "P_trans")]
    pub p_trans: Vec<Vec<f64>>,
    #[serde(rename = "h_K")]
    pub h_k: f64,
    #[serde(rename = "h_I_induced")]
    pub h_i_induced: f64,
    #[serde(rename = "h_I_max")]
    pub h_i_max: f64,
    pub margin: f64,
}

/// Entropy constants of `K` and `I` from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConstants<F> {
    pub n: usize,
    pub lambda: F,
    pub cd: F,
    /// `cd λ^n`, the Parry mass of the center cell.
    pub center_mass: F,
    /// `log λ`
    pub h_k: F,
    /// `log λ / (cd λ^n)`
    pub h_i_induced: F,
    /// `log(2n - 2)`
    pub h_i_max: F,
    pub margin: F,
}

pub fn entropy_constants<F: Real>(n: usize) -> Result<EntropyConstants<F>> {
    let lambda: F = lambda_root(n)?;
    let cd = F::one().div_full(inverse_cd(lambda, n));
    let center_mass = cd * lambda.powi(n as i32);
    let h_k = lambda.ln_full();
    let h_i_induced = h_k.div_full(center_mass);
    let h_i_max = F::of((2 * n - 2) as f64).ln_full();
    Ok(EntropyConstants {
        n,
        lambda,
        cd,
        center_mass,
        h_k,
        h_i_induced,
        h_i_max,
        margin: h_i_max - h_i_induced,
    })
}

impl EntropyConstants<Extended> {
    pub fn to_f64(&self) -> EntropyConstants<f64> {
        EntropyConstants {
            n: self.n,
            lambda: self.lambda.into(),
            cd: self.cd.into(),
            center_mass: self.center_mass.into(),
            h_k: self.h_k.into(),
            h_i_induced: self.h_i_induced.into(),
            h_i_max: self.h_i_max.into(),
            margin: self.margin.into(),
        }
    }
}

/// Above this `n` the closed forms are evaluated in double-double even in
/// double mode.
pub const EXTENDED_ABOVE: usize = 30;

/// Entropy constants in the arithmetic chosen by `precision`.
pub fn entropy_constants_in(n: usize, precision: Precision) -> Result<EntropyConstants<f64>> {
    if precision == Precision::Extended || n > EXTENDED_ABOVE {
        Ok(entropy_constants::<Extended>(n)?.to_f64())
    } else {
        entropy_constants::<f64>(n)
    }
}

/// `log λ / (cd λ^n)`.
pub fn induced_parry_entropy(n: usize) -> Result<f64> {
    Ok(entropy_constants_in(n, Precision::Double)?.h_i_induced)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityRow {
    pub n: usize,
    pub lambda: f64,
    pub h_max: f64,
    pub h_induced: f64,
    pub margin: f64,
}

/// `log(2n-2) - log λ / (cd λ^n)` for every `n` in the range, which must
/// all be positive.
pub fn check_inequality(
    ns: RangeInclusive<usize>,
    precision: Precision,
) -> Result<Vec<InequalityRow>> {
    if *ns.start() < 3 {
        return Err(Error::InvalidN(*ns.start()));
    }
    let rows = ns
        .into_par_iter()
        .map(|n| {
            let e = entropy_constants_in(n, precision)?;
            Ok(InequalityRow {
                n,
                lambda: e.lambda,
                h_max: e.h_i_max,
                h_induced: e.h_i_induced,
                margin: e.margin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // written so that a NaN margin also fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if let Some(r) = rows.iter().find(|r| !(r.margin > 0.0)) {
        return Err(Error::TheoremViolation(format!(
            "entropy margin {} is not positive at n = {}",
            r.margin, r.n
        )));
    }
    Ok(rows)
}
