//! Lattice-reduction-aided MIMO detection.
//!
//! The crate covers the full pipeline: lattice bases and Gram–Schmidt data
//! ([`lattice`]), LLL/BKZ/KZ reduction on top of an exact enumeration oracle
//! ([`reduction`]), Hermite constants and the block-reduction proximity bound
//! for successive interference cancellation ([`bounds`]), the complex MIMO
//! channel model ([`mimo`]), the ML/ZF/MMSE/SIC/LRA-SIC detector family
//! ([`detect`]) and Monte-Carlo experiments tying them together
//! ([`experiments`]).

pub mod bounds;
pub mod detect;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod mimo;
pub mod reduction;

pub use error::{Error, Result};
