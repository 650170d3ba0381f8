//! Finite-difference heat semigroup for `−∂ₓ² − ρ²(x)∂_y²`, diagonal
//! kernel extraction and the bounds deduced from Hardy-type inequalities.

mod bounds;
mod problem;
mod solver;

pub use bounds::{combine_super_lsi, fit_decay, sup_diag_curve, theorem51_bound, BoundCurve, DecayFit, HardyG};
pub use problem::{assemble, Coefficient, HeatProblem, SparseOperator};
pub use solver::{
    diag_kernel, semigroup_apply, semigroup_apply_many, BandedCholesky, CrankNicolson, DiagKernel, BASE_STEPS, STEP_TOL,
};
