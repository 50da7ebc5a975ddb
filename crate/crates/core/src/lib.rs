//! Grad-Shafranov equilibria from Lie symmetries: closed-form solution
//! catalog, symmetry maps, ODE reductions, linear separable solutions,
//! residual verification and derived physical quantities.

pub mod catalog;
pub mod cli;
pub mod contour;
pub mod expr;
pub mod fields;
pub mod grid;
pub mod jet;
pub mod linear;
pub mod ode;
pub mod profiles;
pub mod reductions;
pub mod residual;
pub mod safety;
pub mod scalar;
pub mod solution;
pub mod special;
pub mod symmetry;

pub use expr::{Expr, Number, Var};
pub use jet::{Differentiable, Jet};
pub use scalar::Scalar;

pub use solution::{FluxField, Jet64, Solution};
