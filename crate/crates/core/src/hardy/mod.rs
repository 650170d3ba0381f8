//! Hardy-type inequalities with explicit constants, the scaling probe for
//! the exponent and the translation probe on the metabelian group.

mod checks;
mod constants;
mod hyperbolic;
mod uniqueness;

pub use checks::{
    boundary_value_check, hardy_dilation_check, hardy_log_check, hardy_power_check, prop61_check, BoundaryValueReport,
    HardyKind, HardySample,
};
pub use constants::{optimize_log_constant, HardyPowerConstants, LogConstant};
pub use hyperbolic::{hyperbolic_no_hardy_probe, HyperbolicSequence};
pub use uniqueness::{
    default_probe_grids, uniqueness_probe, ProbeFunction, ProbePath, UniquenessVerdict, Violation, PROBE_BETA,
};
