//! Correlation functions, the CHSH combination and its counting errors.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::FringeModel;

/// Modulator phases of the two signal and two idler settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellAngles {
    pub phi_s: f64,
    pub phi_i: f64,
    pub phi_s_prime: f64,
    pub phi_i_prime: f64,
}

impl BellAngles {
    /// `(−φ₀, π/4, −φ₀ − π/2, 3π/4)`, which yields `S = 2√2 Υ`.
    pub fn canonical(phi_0: f64) -> Self {
        BellAngles { phi_s: -phi_0, phi_i: FRAC_PI_4, phi_s_prime: -phi_0 - FRAC_PI_2, phi_i_prime: 3.0 * FRAC_PI_4 }
    }

    /// The four `(φ_s, φ_i)` pairs entering `S`, in the order
    /// `(s, i), (s′, i), (s, i′), (s′, i′)`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.phi_s, self.phi_i),
            (self.phi_s_prime, self.phi_i),
            (self.phi_s, self.phi_i_prime),
            (self.phi_s_prime, self.phi_i_prime),
        ]
    }

    /// All sixteen modulator settings needed to measure `S`.
    pub fn settings(&self) -> Vec<(f64, f64)> {
        self.pairs().iter().flat_map(|&(s, i)| quadruple(s, i)).collect()
    }
}

/// Settings `(φ_s, φ_i), (φ_s, φ_i^⊥), (φ_s^⊥, φ_i), (φ_s^⊥, φ_i^⊥)` with `φ^⊥ = φ + π`.
pub fn quadruple(phi_s: f64, phi_i: f64) -> [(f64, f64); 4] {
    [(phi_s, phi_i), (phi_s, phi_i + PI), (phi_s + PI, phi_i), (phi_s + PI, phi_i + PI)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub e: f64,
    pub stderr: f64,
}

const SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

/// `E = (C₁ − C₂ − C₃ + C₄)/(C₁ + C₂ + C₃ + C₄)` with Poisson counting errors.
pub fn correlation_e(counts: [u64; 4]) -> Result<Correlation> {
    correlation_e_with_accidentals(counts, [0.0; 4])
}

/// Correlation of accidental-subtracted counts `C_k − A_k`. The error
/// propagates the Poisson variance of the raw counts; the accidental
/// estimates are treated as exact.
pub fn correlation_e_with_accidentals(counts: [u64; 4], accidentals: [f64; 4]) -> Result<Correlation> {
    let net: Vec<f64> = counts.iter().zip(&accidentals).map(|(&c, &a)| c as f64 - a).collect();
    let total: f64 = net.iter().sum();
    if counts.iter().all(|&c| c == 0) || !(total > 0.0) {
        return Err(Error::UndefinedCorrelation);
    }
    let e = net.iter().zip(SIGNS).map(|(n, s)| s * n).sum::<f64>() / total;
    let variance = counts.iter().zip(SIGNS).map(|(&c, s)| c as f64 * (s - e).powi(2)).sum::<f64>() / (total * total);
    Ok(Correlation { e, stderr: variance.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    /// Correlations in the order of [`BellAngles::pairs`].
    pub e_values: [Correlation; 4],
    pub s: f64,
    pub s_error: f64,
}

impl BellResult {
    pub fn violates_classical_bound(&self) -> bool {
        self.s.abs() > 2.0
    }
}

/// `S = E(s, i) − E(s′, i) − E(s, i′) − E(s′, i′)` with errors added in quadrature.
pub fn chsh_s(e_values: [Correlation; 4]) -> BellResult {
    let s = e_values[0].e - e_values[1].e - e_values[2].e - e_values[3].e;
    let s_error = e_values.iter().map(|c| c.stderr * c.stderr).sum::<f64>().sqrt();
    BellResult { e_values, s, s_error }
}

/// Balanced-source correlation `Υ cos(φ_s − φ_i + φ₀)`.
pub fn analytic_e(fringe: &FringeModel, phi_s: f64, phi_i: f64) -> f64 {
    fringe.upsilon * (phi_s - phi_i + fringe.phi_0).cos()
}

/// Noise-free `S` for the given fringe and angles.
pub fn analytic_bell(fringe: &FringeModel, angles: &BellAngles) -> BellResult {
    let e_values = angles.pairs().map(|(s, i)| Correlation { e: analytic_e(fringe, s, i), stderr: 0.0 });
    chsh_s(e_values)
}

/// Number of coincidences per quadruple at which `E` has standard error `sigma`.
pub fn implied_coincidences(e: f64, sigma: f64) -> f64 {
    (1.0 - e * e) / (sigma * sigma)
}
