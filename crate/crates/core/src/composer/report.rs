use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative slack tolerance applied to the sum of term magnitudes.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Term-by-term evaluation of one inequality `LHS ≤ RHS` at one parameter.
///
/// `entropy_lhs` holds the left side: the entropy for log-Sobolev reports,
/// the singular potential integral for Hardy reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub schema_version: u32,
    pub kind: String,
    pub label: String,
    pub params: Vec<f64>,
    pub norm_sq: f64,
    pub entropy_lhs: f64,
    pub dirichlet: f64,
    pub dirichlet_per_slot: Vec<f64>,
    pub potential: f64,
    pub constant_term: f64,
    pub rhs: f64,
    pub slack: f64,
    pub normalized_slack: f64,
    pub pass: bool,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Inputs of [`InequalityReport::assemble`].
#[derive(Clone, Debug, Default)]
pub struct Terms {
    pub kind: String,
    pub label: String,
    pub params: Vec<f64>,
    pub norm_sq: f64,
    pub lhs: f64,
    pub dirichlet_per_slot: Vec<f64>,
    pub potential: f64,
    pub constant_term: f64,
    pub warnings: Vec<String>,
}

impl InequalityReport {
    /// Sums the right side, applies `tol = rel_tol · (|LHS| + Σ|RHS terms|)`
    /// and rejects non-finite terms.
    pub fn assemble(terms: Terms, rel_tol: f64) -> Result<Self> {
        let dirichlet: f64 = terms.dirichlet_per_slot.iter().sum();
        let named = [
            ("entropy/lhs term", terms.lhs),
            ("dirichlet term", dirichlet),
            ("potential term", terms.potential),
            ("constant term", terms.constant_term),
            ("norm", terms.norm_sq),
        ];
        for (what, v) in named {
            if !v.is_finite() {
                return Err(Error::NonFinite { what, coords: terms.params.clone() });
            }
        }
        let rhs = dirichlet + terms.potential + terms.constant_term;
        let slack = rhs - terms.lhs;
        let scale = terms.lhs.abs()
            + terms.dirichlet_per_slot.iter().map(|v| v.abs()).sum::<f64>()
            + terms.potential.abs()
            + terms.constant_term.abs();
        let tol = rel_tol * scale;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            kind: terms.kind,
            label: terms.label,
            params: terms.params,
            norm_sq: terms.norm_sq,
            entropy_lhs: terms.lhs,
            dirichlet,
            dirichlet_per_slot: terms.dirichlet_per_slot,
            potential: terms.potential,
            constant_term: terms.constant_term,
            rhs,
            slack,
            normalized_slack: if terms.norm_sq > 0.0 { slack / terms.norm_sq } else { f64::NAN },
            pass: slack >= -tol,
            tol,
            warnings: terms.warnings,
        })
    }

    /// Magnitude used for the tolerance.
    pub fn scale(&self) -> f64 {
        self.entropy_lhs.abs()
            + self.dirichlet_per_slot.iter().map(|v| v.abs()).sum::<f64>()
            + self.potential.abs()
            + self.constant_term.abs()
    }

    /// Re-judges the report under another relative tolerance.
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.tol = rel_tol * self.scale();
        self.pass = self.slack >= -self.tol;
        self
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(lhs: f64) -> Terms {
        Terms {
            kind: "k".into(),
            label: "f".into(),
            params: vec![0.5],
            norm_sq: 2.0,
            lhs,
            dirichlet_per_slot: vec![1.0, 0.25],
            potential: -0.5,
            constant_term: 0.1,
            warnings: vec![],
        }
    }

    #[test]
    fn pass_iff_slack_above_minus_tol() {
        let r = InequalityReport::assemble(terms(0.85), 1e-6).unwrap();
        assert!((r.slack - 0.0).abs() < 1e-15);
        assert!(r.pass);
        let r = InequalityReport::assemble(terms(0.85 + 1e-3), 1e-6).unwrap();
        assert!(!r.pass);
        let r = InequalityReport::assemble(terms(0.85 + 1e-3), 1e-3).unwrap();
        assert!(r.pass);
        assert!((r.normalized_slack - r.slack / 2.0).abs() < 1e-16);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(InequalityReport::assemble(terms(f64::NAN), 1e-6).is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = InequalityReport::assemble(terms(0.1 + 0.2), 1e-6).unwrap();
        let back: InequalityReport = serde_json::from_str(&r.to_json_line().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
