//! Deterministic test functions and the metabelian change of variables.

mod families;
mod metabelian;
mod spec;

pub use families::{evaluate_at, Family};
pub use metabelian::{
    metabelian_lsi, metabelian_space, metabelian_verify, pull_to_half_plane, pushforward_check, transformed_space,
    PushforwardGrids, PushforwardReport, TermPair,
};
pub use spec::{make, seeded_fields, standard_corpus, CorpusSpec};
