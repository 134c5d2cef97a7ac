//! Return statistics of the λ-biased random walk on the d-regular tree.
//!
//! * [`model`]: parameters, tree and radial kernels, sphere sizes.
//! * [`exact`]: exact and scaled-float dynamic programming for `p^(n)` and
//!   `f^(n)`, plus the Catalan closed form for first returns.
//! * [`genfun`]: generating functions, spectral radius and coefficient
//!   asymptotics.
//! * [`montecarlo`]: seeded simulation of the distance chain.
//! * [`cli`]: table emission and schema validation behind the `treewalk`
//!   binary.

pub mod cli;
pub mod exact;
pub mod genfun;
pub mod model;
pub mod montecarlo;
pub mod scaled;

pub use model::{make_params, Lambda, Regime, WalkParams};
pub use scaled::ScaledFloat;
