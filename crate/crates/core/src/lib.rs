//! Numerical verification of log-Sobolev inequalities for semi-direct
//! product diffusions, their Hardy-type companions and heat-kernel bounds.

// `!(x > 0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composer;
pub mod corpus;
pub mod error;
pub mod hardy;
pub mod heat;
pub mod numerics;
pub mod profiles;
pub mod scalar;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FactorSpaceF64 = spaces::FactorSpace<f64>;
pub type FactorSpaceF32 = spaces::FactorSpace<f32>;
pub type ProductSpaceF64 = spaces::ProductSpace<f64>;
pub type ProductSpaceF32 = spaces::ProductSpace<f32>;
pub type TestFunctionF64 = spaces::TestFunction<f64>;
pub type TestFunctionF32 = spaces::TestFunction<f32>;
pub type ProfileF64 = profiles::Profile<f64>;
pub type ProfileF32 = profiles::Profile<f32>;
pub type GrossPairF64 = profiles::GrossPair<f64>;
pub type GrossPairF32 = profiles::GrossPair<f32>;
pub type SemiDirectLSIF64 = composer::SemiDirectLSI<f64>;
pub type SemiDirectLSIF32 = composer::SemiDirectLSI<f32>;
