//! Evolution-space 2-forms, non-canonical Poisson structures and the
//! dynamics of a charge in a magnetic monopole field combined with a dual
//! monopole in momentum space.

pub mod dynamics;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod poisson;
pub mod souriau;

pub use error::{Error, Result};
