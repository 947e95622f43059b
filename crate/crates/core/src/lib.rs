//! Construction and verification of the smooth self-similar imploding flow
//! profiles of the 3-D isentropic Euler equations for a monatomic gas
//! (adiabatic exponent 5/3, the degenerate case where ℓ equals the
//! dimension).
//!
//! The pipeline: local analytic series at the sonic point → comparison
//! sequences and their large-R limit → sign-bracketed shooting for the
//! discrete eigenvalue ratios R_N → global extension of the matched
//! trajectory → barrier and repulsivity certificates on the assembled
//! profile.

// negated float comparisons are deliberate throughout: `!(x > 0)` treats
// NaN as a guard failure, which `x <= 0` would silently pass
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the recurrence subscripts they implement
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::type_complexity)]
#![allow(clippy::should_implement_trait)]

pub mod error;
pub mod fields;
pub mod integrate;
pub mod num;
pub mod params;
pub mod poly;
pub mod profile;
pub mod shoot;

pub mod series;

pub use error::{Error, Result};
pub use params::ParamSet;
