//! Finite-scale certificates for isoperimetric profiles, Følner pairs,
//! tree embeddings into ℓ^p and compression of cocycles on discrete groups.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycles;
pub mod embeddings;
pub mod error;
pub mod functions;
pub mod groups;
pub mod isoperimetry;
pub mod numeric;
pub mod walks;

pub use error::{Error, Result};
pub use groups::{Ball, Family, GroupElement, MarkedGroup, WreathElement};
