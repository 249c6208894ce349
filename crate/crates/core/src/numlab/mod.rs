//! Grid evolution of spinor wavepackets, used to cross-check symbolic
//! verdicts numerically.

mod evolve;
mod grid;
pub mod scenario;
mod stencil;

pub use evolve::{conservation_drift, evolve, DriftReport, EvolutionSpec, Trajectory, TrajectoryRow};
pub use grid::{Boundary, Grid, GridState, Spinor};
pub use stencil::{convergence, discretize_apply, ConvergenceReport, DiscreteOp, Stencil};
