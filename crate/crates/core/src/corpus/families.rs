use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::composer::{InequalityReport, Prepared, SemiDirectLSI, Slot0};
use crate::error::{invalid, Result};
use crate::profiles::{GrossPair, Profile};
use crate::spaces::{FactorSpace, ProductSpace, Weight};

/// Named two-factor operators used by the sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `−∂²_x − |x|^{2α} ∂²_y`.
    Grushin {
        alpha: f64,
    },
    /// `ρ(x) = 2x`.
    SpecialGrushin {},
    TensorFlat {},
    /// Gaussian measure in `x` with Gross's pair, Lebesgue in `y`.
    DefectiveGaussianFlat {},
    /// `ℝ ⋉ ℝ^Q` with `Nᵢ = eᵃ`.
    Metabelian {
        q: usize,
    },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Self::Grushin { alpha } => format!("grushin(alpha={alpha})"),
            Self::SpecialGrushin {} => "special_grushin".into(),
            Self::TensorFlat {} => "tensor_flat".into(),
            Self::DefectiveGaussianFlat {} => "defective_gaussian_flat".into(),
            Self::Metabelian { q } => format!("metabelian(Q={q})"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Metabelian { q } => q + 1,
            _ => 2,
        }
    }

    /// The suite used by the property sweep.
    pub fn standard() -> Vec<Family> {
        vec![
            Self::Grushin { alpha: 0.5 },
            Self::Grushin { alpha: 1.0 },
            Self::Grushin { alpha: 2.0 },
            Self::SpecialGrushin {},
            Self::TensorFlat {},
            Self::DefectiveGaussianFlat {},
            Self::Metabelian { q: 1 },
        ]
    }

    /// The inequality on `[−r, r]^dim` with `nodes` midpoints per axis.
    pub fn build(&self, r: f64, nodes: usize) -> Result<SemiDirectLSI<f64>> {
        let leb = || FactorSpace::lebesgue(-r, r, nodes);
        let flat = || Profile::flat(1);
        match *self {
            Self::Grushin { alpha } => {
                if !(alpha > 0.0) {
                    return Err(invalid("Grushin exponent must be positive"));
                }
                let w = Weight::new(format!("|x|^{alpha}"), Arc::new(move |p: &[f64]| p[0].abs().powf(alpha)))
                    .singular_on(0, 0.0);
                SemiDirectLSI::new(ProductSpace::new(vec![leb()?, leb()?], vec![w])?, flat(), vec![flat()])
            }
            Self::SpecialGrushin {} => {
                let w = Weight::new("2x", Arc::new(|p: &[f64]| 2.0 * p[0])).singular_on(0, 0.0);
                SemiDirectLSI::new(ProductSpace::new(vec![leb()?, leb()?], vec![w])?, flat(), vec![flat()])
            }
            Self::TensorFlat {} => {
                SemiDirectLSI::new(ProductSpace::tensor(vec![leb()?, leb()?])?, flat(), vec![flat()])
            }
            Self::DefectiveGaussianFlat {} => SemiDirectLSI::defective(
                ProductSpace::tensor(vec![FactorSpace::gaussian(r, nodes)?, leb()?])?,
                GrossPair::gaussian(),
                vec![flat()],
            ),
            Self::Metabelian { q } => super::metabelian_lsi(super::metabelian_space(q, r, r, nodes)?),
        }
    }
}

/// Evaluates at the single parameter `t`: all slots equal to `t`, or
/// all factor slots equal to `t` when slot 0 carries a Gross pair.
pub fn evaluate_at(lsi: &SemiDirectLSI<f64>, p: &Prepared<f64>, t: f64) -> Result<InequalityReport> {
    match lsi.slot0() {
        Slot0::Profile(_) => lsi.diagonal(t)?.evaluate_prepared(p),
        Slot0::Gross(_) => lsi.defective_form(&vec![t; lsi.space().dim() - 1])?.evaluate_prepared(p),
    }
}
