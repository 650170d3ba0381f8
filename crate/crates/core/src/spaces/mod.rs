//! Discretized measure spaces and the entropy, Dirichlet and potential functionals.

mod factor;
mod function;
mod functionals;
mod product;

pub use factor::{FactorSpace, Fn1, MIN_NODES};
pub use function::{FnN, MapN, TestFunction};
pub use functionals::{
    dirichlet_energy, dirichlet_sampled, entropy, entropy_sampled, integrate, integrate_fn, norm_sq, norm_sq_sampled,
    potential_integral, potential_sampled, slot_energies_sampled, DirichletEnergy, Estimate,
};
pub use product::{ProductSpace, Sampled, Weight};
