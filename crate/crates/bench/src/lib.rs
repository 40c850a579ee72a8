//! Shared fixtures for the benchmarks.

use shrinking_beta::{AlgebraicBeta, CoinStream, PointState};

pub fn context(n: usize) -> AlgebraicBeta {
    AlgebraicBeta::new(n).expect("n >= 3")
}

/// A seeded point at the middle of the switch region.
pub fn midpoint_state(ctx: &AlgebraicBeta, seed: u64) -> PointState {
    PointState::new(CoinStream::seeded(seed), 0.5 * (ctx.a + ctx.b))
}
