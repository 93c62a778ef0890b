//! Exact q-series, Hecke operators and divisor lifts on the j-line, with
//! certified numerics for twisted traces of singular moduli and twisted
//! Borcherds products.

pub mod ball;
pub mod borcherds;
pub mod domain;
pub mod error;
pub mod hecke;
pub mod lifts;
pub mod lvalues;
pub mod numeval;
pub mod qforms;
pub mod series;
pub mod traces;
pub mod verify;

pub use error::{Error, Result};
