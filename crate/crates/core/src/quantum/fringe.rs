use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid;

const NORM_TOLERANCE: f64 = 1e-9;

/// Gaussian variances (rad²) of the signal and idler modulator phases.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseNoise {
    pub var_phi_s: f64,
    pub var_phi_i: f64,
}

impl PhaseNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.var_phi_s >= 0.0 && self.var_phi_i >= 0.0) {
            return Err(Error::Config(format!(
                "phase variances must be non-negative, got ({}, {})",
                self.var_phi_s, self.var_phi_i
            )));
        }
        Ok(())
    }

    /// Visibility reduction `e^{−(δφ_s² + δφ_i²)/2}` from averaging over the jitter.
    pub fn dephasing(&self) -> f64 {
        (-(self.var_phi_s + self.var_phi_i) / 2.0).exp()
    }
}

/// Unit-normalized idler envelopes of both species on a shared time grid.
///
/// The grid is non-decreasing; a repeated time marks a jump in an envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct IdlerProfiles {
    times: Vec<f64>,
    rb85: Vec<Complex64>,
    rb87: Vec<Complex64>,
}

fn intensity_norm(times: &[f64], values: &[Complex64]) -> f64 {
    let intensity: Vec<Complex64> = values.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    trapezoid(times, &intensity).re
}

impl IdlerProfiles {
    pub fn new(times: Vec<f64>, rb85: Vec<Complex64>, rb87: Vec<Complex64>) -> Result<Self> {
        if times.len() < 2 || rb85.len() != times.len() || rb87.len() != times.len() {
            return Err(Error::Domain("idler profiles need matching grids with at least two points".into()));
        }
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Domain("idler time grid must be non-decreasing".into()));
        }
        let profiles = IdlerProfiles { times, rb85, rb87 };
        profiles.validate()?;
        Ok(profiles)
    }

    /// Single-sided exponential intensity envelopes `e^{−t/τ}/τ`, the ⁸⁷Rb
    /// one starting `delay` after the ⁸⁵Rb one, sampled every `step` over
    /// `span` and renormalized on the grid.
    pub fn exponential(tau_85: f64, tau_87: f64, delay: f64, step: f64, span: f64) -> Result<Self> {
        if !(tau_85 > 0.0 && tau_87 > 0.0 && step > 0.0 && span > step) || !delay.is_finite() {
            return Err(Error::Domain("exponential profiles need positive decay times, step and span".into()));
        }
        let (onset_85, onset_87) = if delay >= 0.0 { (0.0, delay) } else { (-delay, 0.0) };
        let samples = (span / step).round() as usize;
        let mut times: Vec<f64> = (0..=samples).map(|k| k as f64 * step).filter(|&t| t != onset_85 && t != onset_87).collect();
        // Each onset appears twice so that the jump has zero width.
        times.extend([onset_85, onset_85]);
        if onset_87 != onset_85 {
            times.extend([onset_87, onset_87]);
        }
        times.sort_by(f64::total_cmp);
        let envelope = |onset: f64, tau: f64| -> Vec<Complex64> {
            let mut seen_onset = false;
            times
                .iter()
                .map(|&t| {
                    if t < onset {
                        return Complex64::default();
                    }
                    if t == onset && !seen_onset {
                        seen_onset = true;
                        return Complex64::default();
                    }
                    Complex64::new((-(t - onset) / (2.0 * tau)).exp() / tau.sqrt(), 0.0)
                })
                .collect()
        };
        let normalize = |values: Vec<Complex64>| -> Vec<Complex64> {
            let norm = intensity_norm(&times, &values).sqrt();
            values.into_iter().map(|v| v / norm).collect()
        };
        let rb85 = normalize(envelope(onset_85, tau_85));
        let rb87 = normalize(envelope(onset_87, tau_87));
        Self::new(times, rb85, rb87)
    }

    /// Identical envelopes for both species.
    pub fn identical(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::new(times, values.clone(), values)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in [("85", &self.rb85), ("87", &self.rb87)] {
            let norm = intensity_norm(&self.times, values);
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::Domain(format!("idler profile {name} has ∫|φ|² = {norm}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `∫ φ₈₅*(t) φ₈₇(t) dt`.
    pub fn overlap(&self) -> Complex64 {
        let product: Vec<Complex64> = self.rb85.iter().zip(&self.rb87).map(|(a, b)| a.conj() * b).collect();
        trapezoid(&self.times, &product)
    }
}

/// Fringe amplitude `Υ` and offset phase `φ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeModel {
    pub upsilon: f64,
    pub phi_0: f64,
}

impl FringeModel {
    pub fn new(upsilon: f64, phi_0: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1e-12).contains(&upsilon) || !phi_0.is_finite() {
            return Err(Error::Domain(format!("fringe amplitude {upsilon} is outside [0, 1]")));
        }
        Ok(FringeModel { upsilon: upsilon.min(1.0), phi_0 })
    }

    pub fn ideal() -> Self {
        FringeModel { upsilon: 1.0, phi_0: 0.0 }
    }

    /// Fringe set by the idler envelope overlap alone, as seen by a single
    /// trial whose phase jitter is sampled explicitly.
    pub fn profile_only(profiles: &IdlerProfiles) -> Result<Self> {
        fringe_visibility(&PhaseNoise::default(), profiles)
    }

    /// `Υ e^{−iφ₀}`.
    pub fn coherence(&self) -> Complex64 {
        Complex64::from_polar(self.upsilon, -self.phi_0)
    }
}

/// `Υ e^{−iφ₀} = e^{−(δφ_s² + δφ_i²)/2} ∫ φ₈₅*(t) φ₈₇(t) dt`.
pub fn fringe_visibility(noise: &PhaseNoise, profiles: &IdlerProfiles) -> Result<FringeModel> {
    noise.validate().map_err(|e| Error::Domain(e.to_string()))?;
    profiles.validate()?;
    let value = profiles.overlap() * noise.dephasing();
    FringeModel::new(value.norm(), -value.arg())
}

/// Closed-form overlap of two single-sided exponential envelopes with
/// intensity decay times `tau_85`, `tau_87`, the second delayed by `delay`.
pub fn exponential_overlap(tau_85: f64, tau_87: f64, delay: f64) -> f64 {
    let base = 2.0 * (tau_85 * tau_87).sqrt() / (tau_85 + tau_87);
    let leading = if delay >= 0.0 { tau_85 } else { tau_87 };
    base * (-delay.abs() / (2.0 * leading)).exp()
}

/// Finds the non-negative delay for which the sampled exponential envelopes
/// overlap with magnitude `target`. Returns the delay and the profiles.
pub fn calibrate_delay(tau_85: f64, tau_87: f64, target: f64, step: f64, span: f64) -> Result<(f64, IdlerProfiles)> {
    let overlap_at = |d: f64| -> Result<f64> { Ok(IdlerProfiles::exponential(tau_85, tau_87, d, step, span)?.overlap().norm()) };
    let ceiling = overlap_at(0.0)?;
    if !(target > 0.0 && target <= ceiling) {
        return Err(Error::Domain(format!("target overlap {target} is outside (0, {ceiling:.6}]")));
    }
    let (mut lo, mut hi) = (0.0, span / 2.0);
    if overlap_at(hi)? > target {
        return Err(Error::Numerical(format!("no delay within half the span reaches overlap {target}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if overlap_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * span {
            break;
        }
    }
    let delay = 0.5 * (lo + hi);
    Ok((delay, IdlerProfiles::exponential(tau_85, tau_87, delay, step, span)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_profiles() -> IdlerProfiles {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        IdlerProfiles::identical(times, vec![Complex64::new(1.0, 0.0); 101]).unwrap()
    }

    #[test]
    fn identical_profiles_without_noise_are_ideal() {
        let f = fringe_visibility(&PhaseNoise::default(), &flat_profiles()).unwrap();
        assert!((f.upsilon - 1.0).abs() < 1e-12);
        assert!(f.phi_0.abs() < 1e-12);
    }

    #[test]
    fn noise_reduces_visibility() {
        let noise = PhaseNoise { var_phi_s: 0.1, var_phi_i: 0.1 };
        let f = fringe_visibility(&noise, &flat_profiles()).unwrap();
        assert!((f.upsilon - (-0.1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_profile_is_rejected() {
        let times = vec![0.0, 1.0];
        let v = vec![Complex64::new(2.0, 0.0); 2];
        assert!(matches!(IdlerProfiles::identical(times, v), Err(Error::Domain(_))));
    }

    #[test]
    fn exponential_overlap_matches_closed_form() {
        for (t1, t2, d) in [(30.0, 30.0, 0.0), (30.0, 30.0, 9.0), (25.0, 35.0, 4.0), (25.0, 35.0, -6.0)] {
            let p = IdlerProfiles::exponential(t1, t2, d, 0.01, 800.0).unwrap();
            assert!((p.overlap().norm() - exponential_overlap(t1, t2, d)).abs() < 1e-5, "{t1} {t2} {d}");
        }
    }

    #[test]
    fn calibration_hits_target() {
        let (delay, p) = calibrate_delay(30.0, 30.0, 0.86, 0.05, 600.0).unwrap();
        assert!((p.overlap().norm() - 0.86).abs() < 1e-9);
        assert!((delay + 60.0 * 0.86f64.ln()).abs() < 0.05);
    }
}
