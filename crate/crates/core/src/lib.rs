#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod linalg;
pub mod model_io;
pub mod par;
pub mod trajectory;

pub use error::{Error, Result};
