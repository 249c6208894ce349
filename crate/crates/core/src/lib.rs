//! Symbolic verification of Lie symmetries of Schrödinger-Pauli and
//! quasirelativistic Schrödinger equations.
//!
//! The crate is layered: [`expr`] (scalar expressions), [`pauli`] (2x2 matrix
//! coefficients), [`diffop`] (matrix differential operators with parity),
//! [`model`] (Hamiltonians built from generating functions), [`verify`]
//! (symmetry residuals and determining equations), [`catalog`] (the
//! classification tables as data) and [`numlab`] (grid evolution for numeric
//! cross-checks).

pub mod catalog;
pub mod diffop;
pub mod error;
pub mod expr;
pub mod model;
pub mod numlab;
pub mod pauli;
pub mod scalar;
pub mod verify;

pub use diffop::DiffOp;
pub use error::{Error, Result};
pub use expr::{Constant, Declarations, Expr, Var};
pub use model::{PotentialConfig, Variant};
pub use pauli::PauliExpr;
pub use scalar::Real;

pub type Grid64 = numlab::Grid<f64>;
pub type Grid32 = numlab::Grid<f32>;
pub type GridState64 = numlab::GridState<f64>;
pub type GridState32 = numlab::GridState<f32>;
pub type EvolutionSpec64 = numlab::EvolutionSpec<f64>;
pub type EvolutionSpec32 = numlab::EvolutionSpec<f32>;
pub type Realization64 = expr::Realization<f64>;
pub type Realization32 = expr::Realization<f32>;
