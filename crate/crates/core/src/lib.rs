//! Numerical laboratory for exotic pseudo-differential operators: periodic
//! grids, Littlewood-Paley decompositions, symbol classes, operator
//! quadrature, maximal functions, Muckenhoupt weights and trace norms, plus a
//! config-driven harness that turns boundedness statements into ratio tests.

pub mod cli;
pub mod error;
pub mod grid;
pub mod littlewood_paley;
pub mod maximal;
pub mod operators;
pub mod symbols;
pub mod trace;
pub mod verification;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Domain, GridFunction, GridSpec, Profile};
