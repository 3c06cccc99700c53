//! Dynamics of a three-population tumor quasispecies model.
//!
//! Populations of genetically stable cells (`x0`), mutator cells (`x1`) and
//! unstable tumor cells (`x2`) compete under a constant-population constraint
//! while mutating one way, `x0 -> x1 -> x2`. The crate provides the vector
//! field and its n-subclone generalization, an adaptive integrator, the three
//! closed-form equilibria with their stability, a small-matrix eigensolver,
//! and parameter-plane sweeps of attractors and transient times.

pub mod eigensolver;
pub mod equilibria;
pub mod integrator;
pub mod model;
pub mod output;
pub mod sweep;

pub use eigensolver::{eigen3, EigenMethod, EigenReport};
pub use equilibria::{classify_analytic, Equilibrium, EquilibriumError, EquilibriumKind, Stability};
pub use integrator::{integrate, integrate_general, IntegratorConfig, IntegratorError, OrbitResult};
pub use model::{GeneralModel, ModelError, ModelParams, SimplexState};
pub use sweep::{Outcome, SweepCell, SweepGrid, SweepKind, SweepSpec};
