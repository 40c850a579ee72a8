use proptest::prelude::*;

use shrinking_beta::gls::{apply_greedy, apply_lazy, greedy_breakpoints, lazy_breakpoints};
use shrinking_beta::measures::{block_entropy, empirical_entropy, theorem25_check, CylinderSpec};
use shrinking_beta::symbolic::{decode, Letter, SymbolicWord};
use shrinking_beta::{solve_beta, CoinStream, PointState};

fn unit() -> impl Strategy<Value = f64> {
    (0u64..1 << 40).prop_map(|k| (k as f64 + 0.5) / (1u64 << 40) as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gls_maps_stay_in_switch_region(n in 3usize..12, u in unit()) {
        let ctx = solve_beta(n).unwrap();
        let x = ctx.a + u * ctx.switch_len();
        let (y, t) = apply_greedy(x, &greedy_breakpoints(&ctx).unwrap()).unwrap();
        prop_assert!((2..=n).contains(&t));
        prop_assert!(y >= ctx.a - 1e-9 && y <= ctx.b + 1e-9);
        let (z, s) = apply_lazy(x, &lazy_breakpoints(&ctx).unwrap()).unwrap();
        prop_assert!((2..=n).contains(&s));
        prop_assert!(z >= ctx.a - 1e-9 && z <= ctx.b + 1e-9);
    }

    #[test]
    fn lazy_is_mirrored_greedy(n in 3usize..10, u in unit()) {
        let ctx = solve_beta(n).unwrap();
        let x = ctx.a + u * ctx.switch_len();
        let (y, t) = apply_lazy(x, &lazy_breakpoints(&ctx).unwrap()).unwrap();
        let (ym, tm) = apply_greedy(ctx.domain_max - x, &greedy_breakpoints(&ctx).unwrap()).unwrap();
        prop_assert_eq!(t, tm);
        prop_assert!((y - (ctx.domain_max - ym)).abs() < 1e-12);
    }

    #[test]
    fn gls_matches_dynamics(n in 3usize..10, u in unit(), coin in 0u8..2) {
        let ctx = solve_beta(n).unwrap();
        let x = ctx.a + u * ctx.switch_len();
        let (y, t) = if coin == 1 {
            apply_greedy(x, &greedy_breakpoints(&ctx).unwrap()).unwrap()
        } else {
            apply_lazy(x, &lazy_breakpoints(&ctx).unwrap()).unwrap()
        };
        let mut s = PointState::new(CoinStream::explicit(vec![coin]).unwrap(), x);
        let trip = s.induced_step(&ctx).unwrap();
        prop_assert_eq!(trip.time, t);
        prop_assert!((s.x - y).abs() < 1e-10);
    }

    #[test]
    fn orbits_never_escape(n in 3usize..10, u in unit(), seed in any::<u64>()) {
        let ctx = solve_beta(n).unwrap();
        let mut s = PointState::new(CoinStream::seeded(seed), u * ctx.domain_max);
        for _ in 0..200 {
            s.step(&ctx).unwrap();
            prop_assert!(s.x >= 0.0 && s.x <= ctx.domain_max);
        }
    }

    #[test]
    fn decoded_words_lie_in_switch_region(
        n in 3usize..8,
        raw in prop::collection::vec((0u8..2, 0usize..100), 1..12),
    ) {
        let ctx = solve_beta(n).unwrap();
        let letters = raw.iter().map(|&(c, r)| Letter::new(c, 2 + r % (n - 1))).collect();
        let w = SymbolicWord::new(n, letters).unwrap();
        let v = decode(&w, &ctx).unwrap();
        prop_assert!(v.value <= ctx.b + 1e-12);
        prop_assert!(v.value + v.tail >= ctx.a - 1e-12);
    }

    #[test]
    fn cylinder_masses_are_products(
        n in 3usize..7,
        raw in prop::collection::vec((0u8..2, 0usize..100), 1..4),
        p in 0.05f64..0.95,
    ) {
        let ctx = solve_beta(n).unwrap();
        let coins = raw.iter().map(|&(c, _)| c).collect();
        let rts = raw.iter().map(|&(_, r)| 2 + r % (n - 1)).collect();
        let spec = CylinderSpec::new(n, coins, rts).unwrap();
        let cmp = theorem25_check(&spec, p, &ctx).unwrap();
        prop_assert!(cmp.deviation <= 1e-12, "{:?}", cmp);
    }

    #[test]
    fn block_entropy_is_bounded(sample in prop::collection::vec(0usize..4, 1600..2000)) {
        let h1 = block_entropy(&sample, 1, 4);
        prop_assert!(h1 >= 0.0 && h1 <= 4f64.ln() + 1e-12);
        // overlapping pairs see the first and last symbol once only, so
        // subadditivity holds up to an edge term of order log(N)/N
        let h = empirical_entropy(&sample, 2, 4).unwrap();
        prop_assert!(h <= h1 + 0.01);
    }
}
