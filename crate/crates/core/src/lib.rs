//! Shrinking random β-transformation for the algebraic bases β_n.
//!
//! The crate covers the map `K` and its induced first-return map `I` on
//! the switch region, the greedy/lazy GLS description of `I`, the
//! symbolic coding onto the full shift, the Markov partition of `K` with
//! its Parry measure, and the measure constructions linking the two
//! systems (product pull-backs, the first-return lift and the Abramov
//! relation).

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod gls;
pub mod interval;
pub mod markov;
pub mod measures;
pub mod report;
pub mod symbolic;
pub mod verify;

pub use algebra::{solve_beta, solve_lambda, AlgebraicBeta, PerronValue, Precision};
pub use dynamics::{CoinStream, PointState};
pub use error::{Error, Result};
pub use gls::{GlsPartition, ReturnTimeVector, Side};
pub use interval::Interval;
pub use markov::MarkovChain;
pub use measures::{CylinderSpec, InducedMeasureSpec, Rect};
pub use symbolic::{Letter, SymbolicWord};
