//! Compile Turing machines into polynomial initial value problems and check
//! the resulting continuous-time dynamics against an exact interpreter.
//!
//! The pipeline runs from [`tm`] (machines, configurations and their exact
//! rational encoding) through [`step`] (the real and robust step maps built
//! on [`lagrange`] interpolants and the [`helpers`]) to [`simulate`], which
//! integrates the two-phase iteration system either directly or from the
//! polynomial system produced by [`compile`].

pub mod budget;
pub mod compile;
pub mod corpus;
pub mod error;
pub mod helpers;
pub mod lagrange;
pub mod ode;
pub mod pivp;
pub mod poly;
pub mod reach;
pub mod simulate;
pub mod step;
pub mod tm;

pub use error::{Error, Result};
pub use tm::{Configuration, RationalConfig, TuringMachine};
