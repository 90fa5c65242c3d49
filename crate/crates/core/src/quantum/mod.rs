//! Truncated number-state model of the signal photons and spin waves, the
//! lossy detection channels, and coincidence-rate predictions.

mod detection;
mod fock;
mod fringe;
mod rates;

pub use detection::{detection_operator, Channel, DetectionOperator};
pub use fock::{
    apply_loss, build_entangled_state, build_entangled_state_with_bound, default_cutoff, DensityMatrix, Mode,
    Occupation, TruncatedFockState, DEFAULT_LEAKAGE_BOUND,
};
pub use fringe::{calibrate_delay, exponential_overlap, fringe_visibility, FringeModel, IdlerProfiles, PhaseNoise};
pub use rates::{
    coincidence_rate_exact, coincidence_rate_perturbative, idler_singles_perturbative, signal_singles_perturbative,
    DetectedState, ExactRateModel,
};

use serde::{Deserialize, Serialize};

use crate::ensemble::IsotopeId;
use crate::error::{Error, Result};

/// Signal, retrieval and idler efficiencies of both species.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyBudget {
    pub eps_s_85: f64,
    pub eps_s_87: f64,
    pub eps_r_85: f64,
    pub eps_r_87: f64,
    pub eps_i_85: f64,
    pub eps_i_87: f64,
}

impl EfficiencyBudget {
    pub fn uniform(eps: f64) -> Self {
        EfficiencyBudget {
            eps_s_85: eps,
            eps_s_87: eps,
            eps_r_85: eps,
            eps_r_87: eps,
            eps_i_85: eps,
            eps_i_87: eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eps_s_85", self.eps_s_85),
            ("eps_s_87", self.eps_s_87),
            ("eps_r_85", self.eps_r_85),
            ("eps_r_87", self.eps_r_87),
            ("eps_i_85", self.eps_i_85),
            ("eps_i_87", self.eps_i_87),
        ];
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("efficiency {name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// `μ = ε_r ε_i ε_s`.
    pub fn mu(&self, id: IsotopeId) -> f64 {
        self.eps_s(id) * self.eps_spin(id)
    }

    pub fn mu_85(&self) -> f64 {
        self.mu(IsotopeId::Rb85)
    }

    pub fn mu_87(&self) -> f64 {
        self.mu(IsotopeId::Rb87)
    }

    pub fn eps_s(&self, id: IsotopeId) -> f64 {
        match id {
            IsotopeId::Rb85 => self.eps_s_85,
            IsotopeId::Rb87 => self.eps_s_87,
        }
    }

    pub fn eps_i(&self, id: IsotopeId) -> f64 {
        match id {
            IsotopeId::Rb85 => self.eps_i_85,
            IsotopeId::Rb87 => self.eps_i_87,
        }
    }

    /// Retrieval times idler efficiency: the total loss seen by a spin wave.
    pub fn eps_spin(&self, id: IsotopeId) -> f64 {
        match id {
            IsotopeId::Rb85 => self.eps_r_85 * self.eps_i_85,
            IsotopeId::Rb87 => self.eps_r_87 * self.eps_i_87,
        }
    }
}
