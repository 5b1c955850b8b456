//! Regularized generalized Wigner distributions for finite sets of Hermitian
//! operators, their closed forms, and negative volumes.

pub mod catalog;
pub mod charfunc;
pub mod closedform;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod negativity;
pub mod regularizer;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
