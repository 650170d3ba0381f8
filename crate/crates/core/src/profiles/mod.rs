//! Log-Sobolev rate functions, Gross pairs and the Kato norm.

mod gross;
mod kato;
mod profile;

pub use gross::GrossPair;
pub use kato::{kato_constant, kato_norm_radial, KatoNorm};
pub use profile::{check_nonincreasing, ClosureProfile, Junction, MonotonicityReport, Profile};
