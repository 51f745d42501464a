//! Equilibria of linear-quadratic network games played by agents with
//! misspecified conjectures.
//!
//! The crate covers the Nash benchmark and Berk-Nash equilibria under
//! constant, global mean-field and local mean-field conjectures, the value of
//! misspecification, the designer's minimal-distortion problem (a QCQP solved
//! by multiplier bisection), and stochastic simulations of the learning
//! dynamics on one and two time scales.

pub mod arbitrage;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod learning;
pub mod model;
pub mod numerics;
pub mod scenario;
pub mod timescale;
pub mod trace;

pub use error::{Error, Result};
pub use model::{AttentionStructure, Conjecture, ConjectureClass, NetworkGame};
pub use numerics::Matrix;
