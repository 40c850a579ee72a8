//! Frozen reference values, computed once in 40-digit arithmetic (mpmath)
//! and cross-checked against an independent bisection.

// literals keep the digits of the reference computation
#![allow(clippy::excessive_precision)]

use shrinking_beta::algebra::{beta_root, lambda_root, Extended};
use shrinking_beta::dynamics::{CoinStream, PointState};
use shrinking_beta::gls::{apply_greedy, greedy_breakpoints, lazy_breakpoints, return_time_vector};
use shrinking_beta::markov::{entropy_constants, inverse_cd, MarkovChain};
use shrinking_beta::measures::{
    abramov_check, theorem25_check, AbramovKind, CylinderSpec, InducedMeasureSpec,
};
use shrinking_beta::{solve_beta, solve_lambda};

fn close(got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol,
        "got {got:.17e}, want {want:.17e}, tol {tol:e}"
    );
}

/// Plain bisection on `x^n - k (1 + x + ... + x^{n-2})`, sharing no code
/// with the library solver.
fn bisect(n: i32, k: f64) -> f64 {
    let f = |x: f64| x.powi(n) - k * (0..n - 1).map(|i| x.powi(i)).sum::<f64>();
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn roots_match_frozen_and_bisection() {
    close(
        solve_beta(3).unwrap().beta,
        1.324_717_957_244_746_026,
        1e-15,
    );
    close(
        solve_lambda(3).unwrap().lambda,
        1.769_292_354_238_631_415,
        1e-15,
    );
    for n in 3..=40 {
        close(solve_beta(n).unwrap().beta, bisect(n as i32, 1.0), 1e-13);
        close(
            solve_lambda(n).unwrap().lambda,
            bisect(n as i32, 2.0),
            1e-13,
        );
    }
}

#[test]
fn extended_root_n19() {
    let b: Extended = beta_root(19).unwrap();
    // 1.61795651995356423920862239988258274406 as hi + lo
    let err = b - Extended::new_add(1.617_956_519_953_564_2, 8.522_898_083_988_315e-17);
    assert!(f64::from(err).abs() < 1e-30, "{err:?}");
    let l: Extended = lambda_root(3).unwrap();
    close(f64::from(l), 1.769_292_354_238_631_415, 1e-16);
}

#[test]
fn switch_region_n3() {
    let c = solve_beta(3).unwrap();
    close(c.a, 1.324_717_957_244_746_026, 1e-14);
    close(c.b, 1.754_877_666_246_692_760, 1e-14);
    let g = greedy_breakpoints(&c).unwrap();
    close(g.breakpoints[1], 1.509_755_332_493_385_520, 1e-14);
    let l = lazy_breakpoints(&c).unwrap();
    close(l.breakpoints[1], 1.569_840_290_998_053_266, 1e-14);
    let pi = return_time_vector(&c).unwrap();
    close(pi.get(2), 0.569_840_290_998_053_266, 1e-15);
    close(pi.get(3), 0.430_159_709_001_946_734, 1e-15);
    close(
        g.breakpoints[1] - g.breakpoints[0],
        0.185_037_375_248_639_494,
        1e-14,
    );
    close(pi.mean(), 2.430_159_709_001_946_734, 1e-14);
}

#[test]
fn maps_n3() {
    let c = solve_beta(3).unwrap();
    let g = greedy_breakpoints(&c).unwrap();
    let (y, t) = apply_greedy(1.60, &g).unwrap();
    assert_eq!(t, 2);
    close(y, 1.483_086_308_749_962_390, 1e-14);

    let mut s = PointState::new(CoinStream::explicit(vec![1]).unwrap(), 1.40);
    let trip = s.induced_step(&c).unwrap();
    assert_eq!(trip.time, 3);
    close(s.x, 1.499_727_473_895_951_676, 1e-13);
}

#[test]
fn perron_data() {
    for (n, want) in [
        (3, 13.077_169_416_954_525_661),
        (4, 33.825_608_927_248_245_282),
        (10, 3_035.243_300_214_2),
    ] {
        let l = solve_lambda(n).unwrap().lambda;
        close(inverse_cd(l, n) / want, 1.0, 1e-12);
    }
    let chain = MarkovChain::build(&solve_beta(3).unwrap()).unwrap();
    close(chain.center_mass(), 0.423_530_852_272_701_929, 1e-13);
}

#[test]
fn entropy_constants_frozen() {
    let e = entropy_constants::<f64>(3).unwrap();
    close(e.h_i_induced, 1.347_197_408_919_576_498, 1e-13);
    close(e.margin, 0.039_096_952_200_314_121, 1e-13);
    close(
        entropy_constants::<f64>(4).unwrap().margin,
        0.124_334_296_846_184_754,
        1e-13,
    );
    close(
        entropy_constants::<f64>(10).unwrap().h_i_induced,
        2.066_115_137_671_956_096,
        1e-12,
    );
    let x = entropy_constants::<Extended>(3).unwrap().to_f64();
    close(x.margin, 0.039_096_952_200_314_121, 1e-15);
}

#[test]
fn measures_n3() {
    let c = solve_beta(3).unwrap();
    let spec = CylinderSpec::new(3, vec![1], vec![2]).unwrap();
    let cmp = theorem25_check(&spec, 0.5, &c).unwrap();
    close(cmp.lhs, 0.284_920_145_499_026_633, 1e-13);
    close(cmp.rhs, 0.284_920_145_499_026_633, 1e-15);

    let leb = abramov_check(&c, AbramovKind::Lebesgue).unwrap();
    close(leb.mu_center, 0.411_495_588_662_645_763, 1e-13);
    let mme = abramov_check(&c, AbramovKind::MmeLift).unwrap();
    close(mme.h_k, 0.554_517_744_447_956_248, 1e-14);
    close(
        InducedMeasureSpec::mme(3)
            .unwrap()
            .induced_entropy(&c)
            .unwrap(),
        4f64.ln(),
        1e-15,
    );
}
