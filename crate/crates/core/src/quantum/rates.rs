use num_complex::Complex64;

use super::detection::{combiner_weights, Channel};
use super::fock::{DensityMatrix, Mode, TruncatedFockState, DEFAULT_LEAKAGE_BOUND};
use super::fringe::FringeModel;
use super::EfficiencyBudget;
use crate::ensemble::{IsotopeId, InteractionParams};
use crate::error::{Error, Result};

const SIGNAL: [Mode; 2] = [Mode::Signal85, Mode::Signal87];
const SPIN: [Mode; 2] = [Mode::Spin85, Mode::Spin87];

/// State after the signal losses (`ε_s`) and the retrieval-plus-idler losses
/// (`ε_r ε_i`) of both species.
#[derive(Clone, Debug)]
pub struct DetectedState {
    density: DensityMatrix,
}

impl DetectedState {
    pub fn new(state: &TruncatedFockState, budget: &EfficiencyBudget) -> Result<Self> {
        Self::with_bound(state, budget, DEFAULT_LEAKAGE_BOUND)
    }

    pub fn with_bound(state: &TruncatedFockState, budget: &EfficiencyBudget, bound: f64) -> Result<Self> {
        budget.validate()?;
        if state.n_max() < 2 {
            return Err(Error::Precondition(format!("n_max must be at least 2, got {}", state.n_max())));
        }
        let leakage = state.leakage();
        if leakage > bound {
            return Err(Error::Truncation { leakage, bound, n_max: state.n_max() });
        }
        let mut density = state.to_density();
        for (k, id) in IsotopeId::BOTH.into_iter().enumerate() {
            density = density.apply_loss(SIGNAL[k], budget.eps_s(id))?;
            density = density.apply_loss(SPIN[k], budget.eps_spin(id))?;
        }
        Ok(DetectedState { density })
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    /// `⟨ψ_s† ψ_i† ψ_i ψ_s⟩` with the combined coherence factor `Υ e^{−iφ₀}`
    /// applied to the term transferring a pair between species.
    pub fn coincidence_rate(&self, fringe: &FringeModel, phi_s: f64, phi_i: f64) -> f64 {
        let c = combiner_weights(Channel::Signal, phi_s);
        let d = combiner_weights(Channel::Idler, phi_i);
        let w = fringe.coherence();
        let mut total = Complex64::default();
        for alpha in 0..2 {
            for beta in 0..2 {
                for gamma in 0..2 {
                    for delta in 0..2 {
                        let moment = self.density.normal_ordered(
                            &[SIGNAL[alpha], SPIN[beta]],
                            &[SPIN[gamma], SIGNAL[delta]],
                        );
                        if moment == Complex64::default() {
                            continue;
                        }
                        let coef = c[alpha].conj() * d[beta].conj() * d[gamma] * c[delta];
                        let dephasing = match (alpha, beta, gamma, delta) {
                            (0, 0, 1, 1) => w,
                            (1, 1, 0, 0) => w.conj(),
                            _ => Complex64::new(1.0, 0.0),
                        };
                        total += coef * moment * dephasing;
                    }
                }
            }
        }
        total.re
    }

    /// `⟨ψ_s† ψ_s⟩`, independent of the modulator phase for pair states.
    pub fn signal_singles(&self) -> f64 {
        self.singles(&SIGNAL)
    }

    pub fn idler_singles(&self) -> f64 {
        self.singles(&SPIN)
    }

    fn singles(&self, modes: &[Mode; 2]) -> f64 {
        0.5 * modes.iter().map(|&m| self.density.normal_ordered(&[m], &[m]).re).sum::<f64>()
    }
}

/// Coincidence rate of the truncated state, exact in `χ` up to truncation.
pub fn coincidence_rate_exact(
    state: &TruncatedFockState,
    budget: &EfficiencyBudget,
    fringe: &FringeModel,
    phi_s: f64,
    phi_i: f64,
) -> Result<f64> {
    Ok(DetectedState::new(state, budget)?.coincidence_rate(fringe, phi_s, phi_i))
}

/// Lowest-order coincidence rate
/// `(χ²/4)[μ₈₅cos²η + μ₈₇sin²η + Υ√(μ₈₅μ₈₇) sin2η cos(φ_i − φ_s + φ₀)]`.
pub fn coincidence_rate_perturbative(
    params: &InteractionParams,
    budget: &EfficiencyBudget,
    fringe: &FringeModel,
    phi_s: f64,
    phi_i: f64,
) -> f64 {
    let (mu_85, mu_87) = (budget.mu_85(), budget.mu_87());
    let eta = params.eta;
    let direct = mu_85 * eta.cos().powi(2) + mu_87 * eta.sin().powi(2);
    let cross = fringe.upsilon * (mu_85 * mu_87).sqrt() * (2.0 * eta).sin() * (phi_i - phi_s + fringe.phi_0).cos();
    params.chi_total.powi(2) / 4.0 * (direct + cross)
}

/// Lowest-order probability of a signal detection per trial.
pub fn signal_singles_perturbative(params: &InteractionParams, budget: &EfficiencyBudget) -> f64 {
    let eta = params.eta;
    params.chi_total.powi(2) / 2.0
        * (budget.eps_s(IsotopeId::Rb85) * eta.cos().powi(2) + budget.eps_s(IsotopeId::Rb87) * eta.sin().powi(2))
}

/// Lowest-order probability of an idler detection per trial.
pub fn idler_singles_perturbative(params: &InteractionParams, budget: &EfficiencyBudget) -> f64 {
    let eta = params.eta;
    params.chi_total.powi(2) / 2.0
        * (budget.eps_spin(IsotopeId::Rb85) * eta.cos().powi(2) + budget.eps_spin(IsotopeId::Rb87) * eta.sin().powi(2))
}

/// Exact rates tabulated once: for pair states the coincidence rate depends
/// on the phases only through `Δ = φ_i − φ_s`, as `D + A cos Δ + B sin Δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactRateModel {
    offset: f64,
    cos_part: f64,
    sin_part: f64,
    pub signal_singles: f64,
    pub idler_singles: f64,
}

impl ExactRateModel {
    pub fn new(state: &TruncatedFockState, budget: &EfficiencyBudget, fringe: &FringeModel) -> Result<Self> {
        Self::from_detected(&DetectedState::new(state, budget)?, fringe)
    }

    pub fn from_detected(detected: &DetectedState, fringe: &FringeModel) -> Result<Self> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let at = |delta: f64| detected.coincidence_rate(fringe, 0.0, delta);
        let (r0, r1, r2) = (at(0.0), at(FRAC_PI_2), at(PI));
        Ok(ExactRateModel {
            offset: 0.5 * (r0 + r2),
            cos_part: 0.5 * (r0 - r2),
            sin_part: r1 - 0.5 * (r0 + r2),
            signal_singles: detected.signal_singles(),
            idler_singles: detected.idler_singles(),
        })
    }

    pub fn coincidence(&self, phi_s: f64, phi_i: f64) -> f64 {
        let delta = phi_i - phi_s;
        self.offset + self.cos_part * delta.cos() + self.sin_part * delta.sin()
    }
}
