use num_complex::Complex64;

use super::EfficiencyBudget;
use crate::ensemble::IsotopeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Signal,
    Idler,
}

/// Detected field behind a frequency-combining modulator driven at phase `φ`:
/// `ψ = Σ_ν c_ν (√ε_ν m_ν + √(1 − ε_ν) v_ν)` where `m_ν` is the signal or
/// retrieved spin-wave mode of species `ν` and `v_ν` the vacuum admitted by
/// its loss.
///
/// The signal combiner weights ⁸⁵Rb by `e^{−iφ/2}` and ⁸⁷Rb by `e^{+iφ/2}`;
/// the idler combiner uses the opposite signs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionOperator {
    pub channel: Channel,
    pub phi: f64,
    /// Coefficients on the two system modes.
    pub system: [Complex64; 2],
    /// Coefficients on the two vacuum modes.
    pub vacuum: [Complex64; 2],
}

/// Unit-norm combiner weights `(w₈₅, w₈₇)` for a lossless channel.
pub(crate) fn combiner_weights(channel: Channel, phi: f64) -> [Complex64; 2] {
    let sign = match channel {
        Channel::Signal => -1.0,
        Channel::Idler => 1.0,
    };
    let half = std::f64::consts::FRAC_1_SQRT_2;
    [Complex64::from_polar(half, sign * phi / 2.0), Complex64::from_polar(half, -sign * phi / 2.0)]
}

pub fn detection_operator(channel: Channel, phi: f64, budget: &EfficiencyBudget) -> DetectionOperator {
    let eps = |id| match channel {
        Channel::Signal => budget.eps_s(id),
        Channel::Idler => budget.eps_spin(id),
    };
    let w = combiner_weights(channel, phi);
    let mut system = [Complex64::default(); 2];
    let mut vacuum = [Complex64::default(); 2];
    for (k, id) in IsotopeId::BOTH.into_iter().enumerate() {
        let e = eps(id);
        system[k] = w[k] * e.sqrt();
        vacuum[k] = w[k] * (1.0 - e).sqrt();
    }
    DetectionOperator { channel, phi, system, vacuum }
}

impl DetectionOperator {
    /// Total weight carried by vacuum inputs; system plus vacuum weights sum to 1.
    pub fn vacuum_weight(&self) -> f64 {
        self.vacuum.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn system_weight(&self) -> f64 {
        self.system.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `[ψ, ψ'†]`, a c-number for linear combinations of independent modes.
    pub fn commutator(&self, other: &DetectionOperator) -> Complex64 {
        self.system
            .iter()
            .zip(&other.system)
            .chain(self.vacuum.iter().zip(&other.vacuum))
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn lossless_balanced_combiner() {
        let op = detection_operator(Channel::Signal, 0.0, &EfficiencyBudget::uniform(1.0));
        for c in op.system {
            assert!((c - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        assert_eq!(op.vacuum_weight(), 0.0);
    }

    #[test]
    fn dark_channel_is_vacuum() {
        let op = detection_operator(Channel::Idler, 0.4, &EfficiencyBudget::uniform(0.0));
        assert_eq!(op.system_weight(), 0.0);
        assert!((op.vacuum_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_pi_coefficients_and_orthogonality() {
        let budget = EfficiencyBudget::uniform(1.0);
        let op = detection_operator(Channel::Signal, PI, &budget);
        assert!((op.system[0] - Complex64::from_polar(FRAC_1_SQRT_2, -PI / 2.0)).norm() < 1e-15);
        assert!((op.system[1] - Complex64::from_polar(FRAC_1_SQRT_2, PI / 2.0)).norm() < 1e-15);
        let base = detection_operator(Channel::Signal, 0.0, &budget);
        assert!(base.commutator(&op).norm() < 1e-15);
    }
}
