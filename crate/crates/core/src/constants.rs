use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical scales. Natural units (ħ = c = ℓ = 1) by default; λ, κ and the
/// unit charge stay free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    /// Length that turns wave functions into dimensionless fields.
    pub ell: f64,
    /// Coupling length in front of the vector potential.
    pub lambda: f64,
    /// Inverse Compton length mc/ħ.
    pub kappa: f64,
    pub q_el: f64,
    /// Vacuum permeability in front of the Coulomb term.
    pub mu0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0, c: 1.0, ell: 1.0, lambda: 1.0, kappa: 1.0, q_el: 0.3, mu0: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hbar", self.hbar),
            ("c", self.c),
            ("ell", self.ell),
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("q_el", self.q_el),
            ("mu0", self.mu0),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("constants.{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// ℓ³, the prefactor of every quantum expectation.
    pub fn ell3(&self) -> f64 {
        self.ell.powi(3)
    }
}
