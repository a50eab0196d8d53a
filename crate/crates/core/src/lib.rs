//! Numerical laboratory for the Yamabe functional on squeezed sphere products
//! `h_t = g_unit ⊕ t⁻¹ h` over `S^k × X^ℓ`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod functional;
pub mod product;
pub mod scan;
pub mod sphere;
pub mod statics;

pub use error::{Result, YamabeError};
pub use exec::ExecPolicy;
