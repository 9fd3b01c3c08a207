//! Numerical iteration theory for holomorphic self-maps of the unit disc.
//!
//! Maps are [`MapExpr`] trees, usually parsed from text with [`dsl::parse_map`].
//! The modules cover classification and hyperbolic step ([`dynamics`]),
//! disc and half-plane geometry ([`metric`]), Koenigs functions and
//! linearization coefficients ([`linearize`]) and translation semigroups
//! ([`semigroup`]).

pub mod dsl;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod extrapolate;
pub mod grid;
pub mod linearize;
pub mod maps;
pub mod metric;
pub mod orbit;
pub mod semigroup;

pub use error::{Error, Result};
pub use expr::{HalfPlane, MapExpr, C64};
pub mod report;
pub mod cli;
