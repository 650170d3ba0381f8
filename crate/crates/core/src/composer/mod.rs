//! Composition of per-factor inequalities into the semi-direct product
//! inequality, and the auxiliary checks used along the way.

mod dilation;
mod lemma;
mod lsi;
mod report;

pub use dilation::{dilate, dilation_check, DilationReport, DILATION_TOL};
pub use lemma::{intermediate_step_check, lemma21_check, LemmaReport, LEMMA_TOL};
pub use lsi::{Evaluator, Prepared, SemiDirectLSI, Slot0};
pub use report::{InequalityReport, Terms, DEFAULT_REL_TOL, SCHEMA_VERSION};
