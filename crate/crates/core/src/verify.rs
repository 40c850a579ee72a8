//! Verification suites: every identity the library relies on, evaluated
//! per `n` and reported as [`CheckRecord`]s.

use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::algebra::{ext_div, lambda_root, AlgebraicBeta, Extended, Precision};
use crate::dynamics::{derive_seed, CoinStream, PointState};
use crate::error::{Error, Result};
use crate::gls::{
    apply_greedy, apply_lazy, greedy_breakpoints, lazy_breakpoints, return_time_vector,
    ReturnTimeVector,
};
use crate::markov::{
    build_adjacency, build_partition, char_poly_closed_form, char_poly_det, eigen_residuals,
    eigen_vectors, entropy_constants, entropy_constants_in, entropy_rate, image_adjacency,
    inverse_cd, is_irreducible, parry_data, parry_return_time_law, power_iteration,
    relative_eigen_residuals, unit_dot, Adjacency, MarkovChain,
};
use crate::measures::{
    abramov_check, attractor, cylinder_products_check_with, cylinder_products_exhaustive,
    invariance_defect, kac_lift, random_rects, AbramovKind, CylinderSpec, InducedMeasureSpec, Rect,
};
use crate::report::CheckRecord;
use crate::symbolic::{
    alphabet_size, decode, encode, mme_entropy, uniform_shift_entropy, SymbolicWord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Gls,
    Symbolic,
    Markov,
    Measures,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Gls => "gls",
            Suite::Symbolic => "symbolic",
            Suite::Markov => "markov",
            Suite::Measures => "measures",
            Suite::All => "all",
        }
    }

    pub fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Gls, Suite::Symbolic, Suite::Markov, Suite::Measures],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gls" => Suite::Gls,
            "symbolic" => Suite::Symbolic,
            "markov" => Suite::Markov,
            "measures" => Suite::Measures,
            "all" => Suite::All,
            _ => return Err(Error::Domain(format!("unknown suite {s:?}"))),
        })
    }
}

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Adds a self-loop on the first cell of `S_n`.
    CorruptAdjacency,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrupt-adjacency" => Ok(Fault::CorruptAdjacency),
            _ => Err(Error::Domain(format!("unknown fault {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub precision: Precision,
    /// Random points for the sampled checks.
    pub samples: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            precision: Precision::Double,
            samples: 10_000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub n_min: usize,
    pub n_max: usize,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Run `suite` for every `n` in the range. Per-`n` work runs in parallel;
/// records come back sorted by `(n, suite)` with check order preserved.
/// Largest `n` for the gls, symbolic and measures suites. Their cylinders
/// and tower levels shrink like `β^{-2n}` and their f64 orbits err by
/// `β^n` ulps; past this both reach the check tolerances.
pub const GEOMETRY_MAX_N: usize = 30;

pub fn run(suite: Suite, ns: RangeInclusive<usize>, opts: &VerifyOptions) -> Result<VerifyReport> {
    let (lo, hi) = (*ns.start(), *ns.end());
    if lo < 3 {
        return Err(Error::InvalidN(lo));
    }
    if hi < lo {
        return Err(Error::Domain(format!("empty range {lo}..{hi}")));
    }
    if hi > GEOMETRY_MAX_N && suite.members().iter().any(|&s| s != Suite::Markov) {
        return Err(Error::Domain(format!(
            "the {} suite needs n <= {GEOMETRY_MAX_N}: orbit geometry in f64 loses about β^n ulps \
             (the markov suite runs for any n)",
            suite.name()
        )));
    }
    let jobs: Vec<(usize, Suite)> = ns
        .flat_map(|n| suite.members().into_iter().map(move |s| (n, s)))
        .collect();
    let mut chunks = jobs
        .par_iter()
        .map(|&(n, s)| Ok(((n, s), run_one(s, n, opts)?)))
        .collect::<Result<Vec<_>>>()?;
    chunks.sort_by_key(|(key, _)| *key);
    let checks: Vec<CheckRecord> = chunks
        .into_iter()
        .flat_map(|(_, c)| c)
        .map(CheckRecord::rounded)
        .collect();
    Ok(VerifyReport {
        suite,
        n_min: lo,
        n_max: hi,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn run_one(suite: Suite, n: usize, opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    let ctx = AlgebraicBeta::new(n)?;
    match suite {
        Suite::Gls => gls_suite(&ctx, opts),
        Suite::Symbolic => symbolic_suite(&ctx, opts),
        Suite::Markov => markov_suite(&ctx, opts),
        Suite::Measures => measures_suite(&ctx, opts),
        Suite::All => unreachable!("expanded by members()"),
    }
}

struct Recorder {
    suite: &'static str,
    n: usize,
    out: Vec<CheckRecord>,
}

impl Recorder {
    fn new(suite: &'static str, n: usize) -> Self {
        Recorder {
            suite,
            n,
            out: Vec::new(),
        }
    }

    fn eq(&mut self, check: &str, params: serde_json::Value, lhs: f64, rhs: f64, tol: f64) {
        self.out.push(CheckRecord::equality(
            self.suite, check, self.n, params, lhs, rhs, tol,
        ));
    }

    fn gt(&mut self, check: &str, params: serde_json::Value, lhs: f64, rhs: f64) {
        self.out.push(CheckRecord::greater(
            self.suite, check, self.n, params, lhs, rhs,
        ));
    }
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn random_switch_point(ctx: &AlgebraicBeta, rng: &mut ChaCha8Rng) -> f64 {
    ctx.a + rng.random::<f64>() * ctx.switch_len()
}

/// Above this `n` the identity checks of the GLS maps run in double-double:
/// in f64 a rounded breakpoint pushed through slope `β^n` already misses
/// its image by more than the tolerance.
pub const GLS_EXTENDED_ABOVE: usize = 16;

fn gls_suite(ctx: &AlgebraicBeta, opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    let n = ctx.n;
    let precision = if n > GLS_EXTENDED_ABOVE {
        Precision::Extended
    } else {
        opts.precision
    };
    let extended = precision == Precision::Extended;
    let mut r = Recorder::new("gls", n);
    let greedy = greedy_breakpoints(ctx)?;
    let lazy = lazy_breakpoints(ctx)?;
    let len = ctx.switch_len();

    let law = max_abs((0..n - 1).map(|k| {
        let t = greedy.return_times[k];
        greedy.branch_len(k) - len / ctx.pow(t)
    }));
    r.eq("branch_length_law", json!({}), law, 0.0, 1e-12);
    let mirror = max_abs(
        (0..n).map(|i| lazy.breakpoints[i] - (ctx.domain_max - greedy.breakpoints[n - 1 - i])),
    );
    r.eq("lazy_breakpoint_reflection", json!({}), mirror, 0.0, 1e-12);
    for part in [&greedy, &lazy] {
        let side = json!({ "side": part.side });
        let residual = if extended {
            part.surjectivity_residual_extended()
        } else {
            part.surjectivity_residual()
        };
        let arith = json!({ "side": part.side, "precision": precision });
        r.eq("surjectivity", arith, residual, 0.0, 1e-10);
        r.eq(
            "lebesgue_invariance",
            side,
            part.lebesgue_pushforward_density(),
            1.0,
            1e-12,
        );
    }
    let pi = return_time_vector(ctx)?;
    r.eq("return_time_vector_sum", json!({}), pi.sum(), 1.0, 1e-12);
    r.eq(
        "inverse_power_sum",
        json!({}),
        ctx.inverse_power_sum(),
        1.0,
        1e-12,
    );

    // GLS maps against the dynamics, and the lazy map against the mirrored greedy map
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, n as u64));
    let mut image_dev: f64 = 0.0;
    let mut time_mismatch = 0usize;
    let mut conj_dev: f64 = 0.0;
    let one = Extended::from(1.0);
    let domain_max_ext = ext_div(one, ctx.beta_extended() - one);
    for _ in 0..opts.samples {
        let x = random_switch_point(ctx, &mut rng);
        for coin in [0u8, 1] {
            let (y, t) = if coin == 1 {
                apply_greedy(x, &greedy)?
            } else {
                apply_lazy(x, &lazy)?
            };
            let trip = PointState::new(CoinStream::explicit(vec![coin])?, x).induced_step(ctx)?;
            image_dev = image_dev.max((trip.orbit[trip.orbit.len() - 1] - y).abs());
            time_mismatch += usize::from(trip.time != t);
        }
        let (dev, t, tm) = if extended {
            let xe = Extended::from(x);
            let d = domain_max_ext;
            let (y, t) = lazy.apply_extended(xe)?;
            let (ym, tm) = greedy.apply_extended(d - xe)?;
            (f64::from((y - (d - ym)).abs()), t, tm)
        } else {
            let (y, t) = apply_lazy(x, &lazy)?;
            let (ym, tm) = apply_greedy(ctx.domain_max - x, &greedy)?;
            ((y - (ctx.domain_max - ym)).abs(), t, tm)
        };
        conj_dev = conj_dev.max(dev);
        time_mismatch += usize::from(t != tm);
    }
    let params = json!({ "samples": opts.samples, "seed": opts.seed });
    r.eq(
        "induced_step_equivalence",
        params.clone(),
        image_dev,
        0.0,
        1e-10,
    );
    r.eq(
        "return_time_mismatches",
        params.clone(),
        time_mismatch as f64,
        0.0,
        0.0,
    );
    let params = json!({ "samples": opts.samples, "seed": opts.seed, "precision": precision });
    r.eq("lazy_greedy_conjugation", params, conj_dev, 0.0, 1e-12);
    Ok(r.out)
}

fn symbolic_suite(ctx: &AlgebraicBeta, opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    let n = ctx.n;
    let mut r = Recorder::new("symbolic", n);
    r.eq(
        "alphabet_size",
        json!({}),
        alphabet_size(n) as f64,
        (2 * n - 2) as f64,
        0.0,
    );
    r.eq(
        "mme_entropy",
        json!({}),
        uniform_shift_entropy(n),
        mme_entropy(n)?,
        1e-14,
    );

    const K: usize = 20;
    let samples = opts.samples;
    let (mismatch, worst, deleted) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(opts.seed ^ n as u64, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let x = random_switch_point(ctx, &mut rng);
            let state = PointState::new(CoinStream::seeded(s), x);
            let word = match encode(&state, K, ctx) {
                Ok(w) => w,
                Err(Error::DeletedPoint { .. }) => return Ok((0usize, 0.0f64, 1usize)),
                Err(e) => return Err(e),
            };
            let mut next = state.clone();
            next.induced_step(ctx)?;
            let mismatch = match encode(&next, K - 1, ctx) {
                Ok(w) => usize::from(w != word.shift()),
                Err(Error::DeletedPoint { .. }) => return Ok((0, 0.0, 1)),
                Err(e) => return Err(e),
            };
            // how far outside the tail bound the decoded value falls
            let v = decode(&word, ctx)?;
            let outside = (v.value - x).max(x - (v.value + v.tail)).max(0.0);
            Ok((mismatch, outside, 0))
        })
        .try_reduce(
            || (0, 0.0, 0),
            |a, b| Ok((a.0 + b.0, a.1.max(b.1), a.2 + b.2)),
        )?;
    let params = json!({ "samples": samples, "letters": K, "seed": opts.seed });
    r.eq(
        "conjugacy_mismatches",
        params.clone(),
        mismatch as f64,
        0.0,
        0.0,
    );
    r.eq("deleted_points", params.clone(), deleted as f64, 0.0, 0.0);
    r.eq("decode_roundtrip_excess", params, worst, 0.0, 1e-12);

    // full-shift surjectivity at depth 4 where the alphabet allows it
    let depth = if alphabet_size(n).pow(4) <= 50_000 {
        4
    } else {
        2
    };
    let outside = SymbolicWord::all(n, depth)
        .map(|w| {
            let v = decode(&w, ctx)?;
            Ok((ctx.a - (v.value + v.tail)).max(v.value - ctx.b).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    r.eq(
        "decode_surjectivity_excess",
        json!({ "depth": depth }),
        max_abs(outside),
        0.0,
        1e-12,
    );
    Ok(r.out)
}

fn adjacency_with_fault(n: usize, fault: Option<Fault>) -> Result<Adjacency> {
    let mut s = build_adjacency(n)?;
    if fault == Some(Fault::CorruptAdjacency) {
        s[0][0] = 1;
    }
    Ok(s)
}

fn markov_suite(ctx: &AlgebraicBeta, opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    let n = ctx.n;
    let mut r = Recorder::new("markov", n);
    let adj = adjacency_with_fault(n, opts.fault)?;
    let cells = build_partition(ctx)?;
    let (image, markov_residual) = image_adjacency(&cells, ctx);
    let disagreements = image
        .iter()
        .flatten()
        .zip(adj.iter().flatten())
        .filter(|(x, y)| x != y)
        .count();
    r.eq(
        "adjacency_rule_vs_images",
        json!({}),
        disagreements as f64,
        0.0,
        0.0,
    );
    r.eq("markov_property", json!({}), markov_residual, 0.0, 1e-9);
    r.eq(
        "irreducible",
        json!({}),
        f64::from(u8::from(is_irreducible(&adj))),
        1.0,
        0.0,
    );

    let xs = [1.5, 2.5, 3.0];
    let cp = max_abs(xs.iter().map(|&x| {
        let cf = char_poly_closed_form(n, x);
        (char_poly_det(&adj, x) - cf) / cf.abs().max(1.0)
    }));
    r.eq("char_poly_relative", json!({ "x": xs }), cp, 0.0, 1e-9);

    let lambda: f64 = lambda_root(n)?;
    let eig = eigen_vectors(lambda, n);
    let (er, el) = relative_eigen_residuals(&adj, &eig);
    r.eq("eigen_right_relative", json!({}), er, 0.0, 1e-10);
    r.eq("eigen_left_relative", json!({}), el, 0.0, 1e-10);
    let lx: Extended = lambda_root(n)?;
    let (xr, xl) = eigen_residuals(&adj, &eigen_vectors(lx, n));
    r.eq("eigen_right_extended", json!({}), xr.into(), 0.0, 1e-10);
    r.eq("eigen_left_extended", json!({}), xl.into(), 0.0, 1e-10);
    let inv = inverse_cd(lx, n);
    let dot = unit_dot(lx, n);
    r.eq(
        "inverse_cd_vs_dot",
        json!({}),
        f64::from((inv - dot) / inv),
        0.0,
        1e-12,
    );
    r.gt(
        "positive_eigenvectors",
        json!({}),
        eig.u
            .iter()
            .chain(&eig.v)
            .copied()
            .fold(f64::INFINITY, f64::min),
        0.0,
    );

    // row sums are recorded below rather than raised
    let (p, trans) = parry_data(&adj, &eig);
    let rows = max_abs(trans.iter().map(|row| row.iter().sum::<f64>() - 1.0));
    r.eq("transition_row_sums", json!({}), rows, 0.0, 1e-12);
    r.eq("stationary_sum", json!({}), p.iter().sum(), 1.0, 1e-12);
    let m = p.len();
    let stat = max_abs((0..m).map(|j| (0..m).map(|i| p[i] * trans[i][j]).sum::<f64>() - p[j]));
    r.eq("stationarity", json!({}), stat, 0.0, 1e-10);
    r.eq(
        "parry_entropy",
        json!({}),
        entropy_rate(&p, &trans),
        lambda.ln(),
        1e-10,
    );

    let (pl, _) = power_iteration(&adj, 1e-14, 200_000);
    r.eq("power_iteration", json!({}), pl, lambda, 1e-9);

    let e = entropy_constants_in(n, opts.precision)?;
    let ef = entropy_constants::<f64>(n.min(30))?;
    if n <= 30 {
        r.eq(
            "abramov_closed_form",
            json!({}),
            ef.h_i_induced * ef.center_mass,
            ef.h_k,
            1e-12,
        );
    }
    r.gt(
        "entropy_margin",
        json!({ "precision": opts.precision }),
        e.h_i_max,
        e.h_i_induced,
    );
    Ok(r.out)
}

fn measures_suite(ctx: &AlgebraicBeta, opts: &VerifyOptions) -> Result<Vec<CheckRecord>> {
    let n = ctx.n;
    let mut r = Recorder::new("measures", n);
    let depth = if alphabet_size(n).pow(3) <= 20_000 {
        3
    } else {
        2
    };
    for p in [0.3, 0.5] {
        let dev = cylinder_products_exhaustive(ctx, depth, p)?;
        r.eq(
            "cylinder_products_exhaustive",
            json!({ "p": p, "depth": depth }),
            dev,
            0.0,
            1e-12,
        );
    }
    let spec = CylinderSpec::new(n, vec![1], vec![2])?;
    let wrong = cylinder_products_check_with(&spec, 0.5, &ReturnTimeVector::uniform(n), ctx)?;
    r.gt(
        "cylinder_products_negative_control",
        json!({ "pi": "uniform" }),
        wrong.deviation,
        1e-3,
    );

    let chain = MarkovChain::build(ctx)?;
    let parry_pi = parry_return_time_law(&chain)?;
    let kinds = [
        ("lebesgue", InducedMeasureSpec::lebesgue(0.5)?),
        ("lebesgue_biased", InducedMeasureSpec::lebesgue(0.3)?),
        ("mme", InducedMeasureSpec::mme(n)?),
        ("parry_induced", InducedMeasureSpec::product(0.5, parry_pi)?),
    ];
    let center = Rect::new(vec![], ctx.a, ctx.b);
    let span = attractor(ctx);
    let whole = Rect::new(vec![], span.lo, span.hi);
    for (name, nu) in &kinds {
        let params = json!({ "nu": name });
        let mu = kac_lift(nu, &center, ctx)?;
        r.eq(
            "kac_identity",
            params.clone(),
            mu * nu.expected_return_time(ctx)?,
            1.0,
            1e-12,
        );
        r.eq(
            "kac_total_mass",
            params,
            kac_lift(nu, &whole, ctx)?,
            1.0,
            1e-12,
        );
    }
    r.eq(
        "parry_center_mass",
        json!({}),
        kac_lift(&kinds[3].1, &center, ctx)?,
        chain.center_mass(),
        1e-12,
    );

    let rects = random_rects(ctx, 100, derive_seed(opts.seed, n as u64));
    let lebesgue_defect = rects
        .iter()
        .map(|rect| invariance_defect(&kinds[1].1, rect, ctx).map(|c| c.deviation))
        .collect::<Result<Vec<_>>>()?;
    r.eq(
        "lift_invariance_lebesgue",
        json!({ "rects": rects.len(), "p": 0.3 }),
        max_abs(lebesgue_defect),
        0.0,
        1e-10,
    );
    let cell_defect = chain
        .cells
        .iter()
        .enumerate()
        .flat_map(|(i, cell)| {
            [vec![], vec![(i % 2) as u8]]
                .into_iter()
                .map(move |coins| Rect::new(coins, cell.lo, cell.hi))
        })
        .map(|rect| invariance_defect(&kinds[2].1, &rect, ctx).map(|c| c.deviation))
        .collect::<Result<Vec<_>>>()?;
    r.eq(
        "lift_invariance_mme_cells",
        json!({}),
        max_abs(cell_defect),
        0.0,
        1e-10,
    );

    let parry = abramov_check(ctx, AbramovKind::Parry)?;
    r.eq(
        "abramov_parry",
        json!({}),
        parry.h_i * parry.mu_center,
        parry.h_k,
        1e-12,
    );
    let mme = abramov_check(ctx, AbramovKind::MmeLift)?;
    r.gt("mme_lift_below_log_lambda", json!({}), parry.h_k, mme.h_k);
    Ok(r.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_small_n() {
        let opts = VerifyOptions {
            samples: 500,
            ..Default::default()
        };
        let report = run(Suite::All, 3..=5, &opts).unwrap();
        let failed: Vec<_> = report.failures().collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn injected_fault_fails() {
        let opts = VerifyOptions {
            samples: 10,
            fault: Some(Fault::CorruptAdjacency),
            ..Default::default()
        };
        let report = run(Suite::Markov, 3..=3, &opts).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [
            Suite::Gls,
            Suite::Symbolic,
            Suite::Markov,
            Suite::Measures,
            Suite::All,
        ] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
        assert!(run(Suite::Gls, 2..=4, &VerifyOptions::default()).is_err());
    }
}
