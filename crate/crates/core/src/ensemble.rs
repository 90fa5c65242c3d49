//! Physical configuration of the co-trapped ⁸⁵Rb/⁸⁷Rb mixture and the
//! interaction parameters derived from it.
//!
//! All frequencies are angular (rad/s) and all lengths are metres.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{CouplingTable, HalfInt};
use crate::error::{Error, Result};
use crate::quadrature::{composite_nodes, trapezoid};
use crate::quantum::EfficiencyBudget;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a cyclic frequency in MHz to rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * 1e6 * mhz
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IsotopeId {
    Rb85,
    Rb87,
}

impl IsotopeId {
    pub const BOTH: [IsotopeId; 2] = [IsotopeId::Rb85, IsotopeId::Rb87];
}

/// Level structure and atomic data of one species.
///
/// Level `a` is the initially populated ground hyperfine level, `b` the other
/// (lower angular momentum) ground level and `c` the excited D1 level with
/// `F_c = F_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotopeSpec {
    pub id: IsotopeId,
    pub f_a: HalfInt,
    pub f_b: HalfInt,
    pub f_c: HalfInt,
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    /// Reduced dipole matrix element of the c–a transition (C·m).
    pub d_ca: f64,
    /// Reduced dipole matrix element of the c–b transition (C·m).
    pub d_cb: f64,
    pub n_atoms: f64,
}

impl IsotopeSpec {
    pub fn validate(&self) -> Result<()> {
        let name = format!("{:?}", self.id);
        if self.f_c != self.f_a {
            return Err(Error::Config(format!("{name}: F_c must equal F_a")));
        }
        for (label, f) in [("F_a", self.f_a), ("F_b", self.f_b), ("F_c", self.f_c)] {
            if f.twice() < 0 {
                return Err(Error::Config(format!("{name}: {label} must be non-negative")));
            }
        }
        if self.f_b >= self.f_a {
            return Err(Error::Config(format!("{name}: F_b must be smaller than F_a")));
        }
        if !(self.omega_c > self.omega_a) {
            return Err(Error::Config(format!("{name}: omega_c must exceed omega_a")));
        }
        if !(self.omega_a - self.omega_b > 0.0) {
            return Err(Error::Config(format!("{name}: ground splitting omega_a - omega_b must be positive")));
        }
        if !(self.d_ca > 0.0 && self.d_cb > 0.0) {
            return Err(Error::Config(format!("{name}: dipole matrix elements must be positive")));
        }
        if !(self.n_atoms > 0.0) {
            return Err(Error::Config(format!("{name}: atom number must be positive")));
        }
        Ok(())
    }

    /// Ground-state hyperfine splitting `ω_a − ω_b`.
    pub fn ground_splitting(&self) -> f64 {
        self.omega_a - self.omega_b
    }
}

/// Gaussian atom-density ellipsoid of one species.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudProfile {
    pub sigma: Vector3<f64>,
    pub center: Vector3<f64>,
}

impl CloudProfile {
    /// `n(r)/N`, normalized to unit integral.
    pub fn density(&self, r: &Vector3<f64>) -> f64 {
        let d = r - self.center;
        let norm = (2.0 * PI).powf(1.5) * self.sigma.x * self.sigma.y * self.sigma.z;
        let q = (d.x / self.sigma.x).powi(2) + (d.y / self.sigma.y).powi(2) + (d.z / self.sigma.z).powi(2);
        (-0.5 * q).exp() / norm
    }

    /// Standard deviation of the cloud projected on the unit vector `axis`.
    fn projected_sigma(&self, axis: &Vector3<f64>) -> f64 {
        axis.component_mul(&self.sigma).norm()
    }
}

/// Collimated Gaussian TEM₀₀ beams crossing at `focus`, and the two clouds.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamGeometry {
    pub write_waist: f64,
    pub signal_waist: f64,
    pub focus: Vector3<f64>,
    pub write_dir: Vector3<f64>,
    pub signal_dir: Vector3<f64>,
    pub read_dir: Vector3<f64>,
    pub cloud_85: CloudProfile,
    pub cloud_87: CloudProfile,
}

/// Wave vectors of the four fields for one species; `k_i` is phase matched.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveVectors {
    pub k_w: Vector3<f64>,
    pub k_s: Vector3<f64>,
    pub k_r: Vector3<f64>,
    pub k_i: Vector3<f64>,
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.write_waist > 0.0 && self.signal_waist > 0.0) {
            return Err(Error::Config("beam waists must be positive".into()));
        }
        for (name, cloud) in [("rb85", &self.cloud_85), ("rb87", &self.cloud_87)] {
            if cloud.sigma.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::Config(format!("cloud {name}: sigma components must be positive")));
            }
        }
        for (name, dir) in [("write", &self.write_dir), ("signal", &self.signal_dir), ("read", &self.read_dir)] {
            if !(dir.norm() > 0.0) {
                return Err(Error::Config(format!("{name} direction must be non-zero")));
            }
        }
        Ok(())
    }

    pub fn cloud(&self, id: IsotopeId) -> &CloudProfile {
        match id {
            IsotopeId::Rb85 => &self.cloud_85,
            IsotopeId::Rb87 => &self.cloud_87,
        }
    }

    /// The same geometry rigidly shifted by `offset`.
    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        let mut out = self.clone();
        out.focus += offset;
        out.cloud_85.center += offset;
        out.cloud_87.center += offset;
        out
    }

    /// Wave vectors from the level energies: the write sideband sits `Δ` from
    /// the a–c line, the signal is the Raman-shifted photon on b–c, the read
    /// field is resonant on b–c and the idler is emitted phase matched.
    pub fn wave_vectors(&self, iso: &IsotopeSpec, write: &WriteConfig) -> WaveVectors {
        let omega_w = iso.omega_c - iso.omega_a + write.detuning(iso.id);
        let omega_s = omega_w + iso.ground_splitting();
        let omega_r = iso.omega_c - iso.omega_b;
        let k_w = self.write_dir.normalize() * (omega_w / SPEED_OF_LIGHT);
        let k_s = self.signal_dir.normalize() * (omega_s / SPEED_OF_LIGHT);
        let k_r = self.read_dir.normalize() * (omega_r / SPEED_OF_LIGHT);
        let k_i = k_w - k_s + k_r;
        WaveVectors { k_w, k_s, k_r, k_i }
    }
}

/// Transverse intensity `|u(r)|²` of a collimated Gaussian beam, normalized to
/// unit power in its transverse plane.
fn beam_intensity(waist: f64, dir: &Vector3<f64>, focus: &Vector3<f64>, r: &Vector3<f64>) -> f64 {
    let d = r - focus;
    let along = d.dot(dir);
    let rho2 = (d.norm_squared() - along * along).max(0.0);
    2.0 / (PI * waist * waist) * (-2.0 * rho2 / (waist * waist)).exp()
}

const OVERLAP_REL_TOL: f64 = 1e-8;
const CLOUD_SIGMAS: f64 = 5.0;
const BEAM_WAISTS: f64 = 4.0;
const GL_ORDER: usize = 8;
const MAX_PANELS: usize = 32;

/// Integrates `f(r) · n(r)/N` over the cloud of `id` with an adaptive product
/// Gauss-Legendre rule, in coordinates aligned with the write beam.
///
/// The box spans ±5 projected cloud sigmas, clipped transversally to ±4 write
/// waists; panels per axis double until the relative change drops below 1e-8.
pub fn integrate_over_cloud<F>(geom: &BeamGeometry, id: IsotopeId, f: F) -> Result<f64>
where
    F: Fn(&Vector3<f64>) -> f64,
{
    let cloud = geom.cloud(id);
    let axis_z = geom.write_dir.normalize();
    let seed = if axis_z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let axis_x = (seed - axis_z * seed.dot(&axis_z)).normalize();
    let axis_y = axis_z.cross(&axis_x);
    let axes = [axis_x, axis_y, axis_z];

    let mut bounds = [(0.0, 0.0); 3];
    for (k, axis) in axes.iter().enumerate() {
        let center = (cloud.center - geom.focus).dot(axis);
        let half = CLOUD_SIGMAS * cloud.projected_sigma(axis);
        let (mut lo, mut hi) = (center - half, center + half);
        if k < 2 {
            let beam = BEAM_WAISTS * geom.write_waist;
            lo = lo.max(-beam);
            hi = hi.min(beam);
        }
        if lo >= hi {
            return Err(Error::Numerical(format!(
                "cloud {id:?} does not intersect the write beam (axis {k} range empty)"
            )));
        }
        bounds[k] = (lo, hi);
    }

    let evaluate = |panels: usize| -> f64 {
        let grids: Vec<Vec<(f64, f64)>> =
            bounds.iter().map(|&(lo, hi)| composite_nodes(lo, hi, panels, GL_ORDER)).collect();
        let mut total = 0.0;
        for &(u, wu) in &grids[0] {
            for &(v, wv) in &grids[1] {
                let mut line = 0.0;
                for &(w, ww) in &grids[2] {
                    let r = geom.focus + axes[0] * u + axes[1] * v + axes[2] * w;
                    line += ww * f(&r) * cloud.density(&r);
                }
                total += wu * wv * line;
            }
        }
        total
    };

    let mut panels = 2;
    let mut previous = evaluate(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let current = evaluate(panels);
        let change = (current - previous).abs() / current.abs().max(f64::MIN_POSITIVE);
        if change < OVERLAP_REL_TOL {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Numerical(format!(
        "cloud quadrature for {id:?} did not converge: last estimate {previous:.6e} at {} nodes per axis",
        panels * GL_ORDER
    )))
}

/// Effective write/signal overlap `A = [∫ |u_s u_w*|² n/N d³r]^(-1/2)` (m²).
pub fn overlap_a(iso: &IsotopeSpec, geom: &BeamGeometry) -> Result<f64> {
    let ws = geom.signal_dir.normalize();
    let ww = geom.write_dir.normalize();
    let integral = integrate_over_cloud(geom, iso.id, |r| {
        beam_intensity(geom.signal_waist, &ws, &geom.focus, r)
            * beam_intensity(geom.write_waist, &ww, &geom.focus, r)
    })?;
    if !(integral > 0.0) {
        return Err(Error::Numerical(format!("overlap integral for {:?} vanished", iso.id)));
    }
    Ok(integral.powf(-0.5))
}

/// Sampled, unit-normalized temporal envelope `φ(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseProfile {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl PulseProfile {
    /// Flat-top pulse of the given duration sampled at `samples` points.
    pub fn flat(duration: f64, samples: usize) -> Self {
        let samples = samples.max(2);
        let times: Vec<f64> = (0..samples).map(|k| duration * k as f64 / (samples - 1) as f64).collect();
        let values = vec![Complex64::new(duration.powf(-0.5), 0.0); samples];
        PulseProfile { times, values }
    }

    /// Gaussian intensity envelope with FWHM `duration`, sampled over ±2 FWHM.
    pub fn gaussian(duration: f64, samples: usize) -> Self {
        let samples = samples.max(3);
        let sigma = duration / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let times: Vec<f64> =
            (0..samples).map(|k| -2.0 * duration + 4.0 * duration * k as f64 / (samples - 1) as f64).collect();
        let raw: Vec<Complex64> =
            times.iter().map(|t| Complex64::new((-t * t / (4.0 * sigma * sigma)).exp(), 0.0)).collect();
        let norm = trapezoid(&times, &raw.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect::<Vec<_>>()).re;
        let values = raw.into_iter().map(|v| v / norm.sqrt()).collect();
        PulseProfile { times, values }
    }

    pub fn norm(&self) -> f64 {
        let intensity: Vec<Complex64> = self.values.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
        trapezoid(&self.times, &intensity).re
    }
}

/// Write pulse and its two EOM sidebands.
#[derive(Clone, Debug, PartialEq)]
pub struct WriteConfig {
    pub pulse_duration: f64,
    pub pulse: PulseProfile,
    pub detuning_85: f64,
    pub detuning_87: f64,
    /// Mean photon number in the sideband addressing each species.
    pub n_w_85: f64,
    pub n_w_87: f64,
}

impl WriteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_duration > 0.0) {
            return Err(Error::Config("write pulse duration must be positive".into()));
        }
        let norm = self.pulse.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("write pulse profile is not normalized (∫|φ|² = {norm})")));
        }
        for (name, d) in [("detuning_85", self.detuning_85), ("detuning_87", self.detuning_87)] {
            if !d.is_finite() || d == 0.0 {
                return Err(Error::Config(format!("{name} must be finite and non-zero")));
            }
        }
        if !(self.n_w_85 >= 0.0 && self.n_w_87 >= 0.0) {
            return Err(Error::Config("sideband photon numbers must be non-negative".into()));
        }
        Ok(())
    }

    pub fn detuning(&self, id: IsotopeId) -> f64 {
        match id {
            IsotopeId::Rb85 => self.detuning_85,
            IsotopeId::Rb87 => self.detuning_87,
        }
    }

    pub fn n_w(&self, id: IsotopeId) -> f64 {
        match id {
            IsotopeId::Rb85 => self.n_w_85,
            IsotopeId::Rb87 => self.n_w_87,
        }
    }
}

/// Dimensionless coupling `χ_ν` of one species (magnitude).
///
/// `χ_ν = √2 d_cb d_ca / (A Δ) · sqrt(k_s k_w n_w N / ((2F_a + 1) ħ ε₀)) · sqrt(Σ X²)`;
/// the pair-creation probability `χ²` is linear in both the write photon
/// number and the atom number.
pub fn chi_nu(iso: &IsotopeSpec, write: &WriteConfig, geom: &BeamGeometry, a: f64, coupling: &CouplingTable) -> Result<f64> {
    let detuning = write.detuning(iso.id);
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(Error::Domain(format!("{:?}: detuning must be non-zero", iso.id)));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("{:?}: overlap factor must be positive", iso.id)));
    }
    let k = geom.wave_vectors(iso, write);
    let dipoles = 2f64.sqrt() * iso.d_cb * iso.d_ca / (a * detuning);
    let photons = k.k_s.norm() * k.k_w.norm() * write.n_w(iso.id) * iso.n_atoms
        / (f64::from(iso.f_a.multiplicity()) * HBAR * EPSILON_0);
    Ok((dipoles * photons.sqrt() * coupling.total_norm_squared().sqrt()).abs())
}

/// `η = atan2(χ₈₇, χ₈₅)`, so that `cos²η = χ₈₅² / (χ₈₅² + χ₈₇²)`.
pub fn mixing_angle(chi_85: f64, chi_87: f64) -> Result<f64> {
    if chi_85 == 0.0 && chi_87 == 0.0 {
        return Err(Error::Degenerate("both couplings vanish; mixing angle undefined".into()));
    }
    Ok(chi_87.abs().atan2(chi_85.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InteractionParams {
    pub chi_85: f64,
    pub chi_87: f64,
    pub chi_total: f64,
    pub eta: f64,
    pub a_85: f64,
    pub a_87: f64,
}

impl InteractionParams {
    pub fn new(chi_85: f64, chi_87: f64, a_85: f64, a_87: f64) -> Result<Self> {
        let eta = mixing_angle(chi_85, chi_87)?;
        Ok(InteractionParams {
            chi_85: chi_85.abs(),
            chi_87: chi_87.abs(),
            chi_total: chi_85.hypot(chi_87),
            eta,
            a_85,
            a_87,
        })
    }

    /// Parameters set directly by total coupling and mixing angle.
    pub fn from_chi_eta(chi: f64, eta: f64) -> Result<Self> {
        if !(chi >= 0.0) || !(0.0..=PI / 2.0).contains(&eta) {
            return Err(Error::Domain(format!("need chi >= 0 and eta in [0, π/2], got ({chi}, {eta})")));
        }
        Ok(InteractionParams {
            chi_85: chi * eta.cos(),
            chi_87: chi * eta.sin(),
            chi_total: chi,
            eta,
            a_85: 1.0,
            a_87: 1.0,
        })
    }

    /// Computes overlaps, coupling tables and `χ_ν` for both species.
    pub fn derive(iso_85: &IsotopeSpec, iso_87: &IsotopeSpec, geom: &BeamGeometry, write: &WriteConfig) -> Result<Self> {
        let a_85 = overlap_a(iso_85, geom)?;
        let a_87 = overlap_a(iso_87, geom)?;
        Self::derive_with_overlaps(iso_85, iso_87, geom, write, a_85, a_87)
    }

    /// As [`InteractionParams::derive`], reusing previously computed overlaps.
    pub fn derive_with_overlaps(
        iso_85: &IsotopeSpec,
        iso_87: &IsotopeSpec,
        geom: &BeamGeometry,
        write: &WriteConfig,
        a_85: f64,
        a_87: f64,
    ) -> Result<Self> {
        let chi_85 = chi_nu(iso_85, write, geom, a_85, &CouplingTable::for_isotope(iso_85)?)?;
        let chi_87 = chi_nu(iso_87, write, geom, a_87, &CouplingTable::for_isotope(iso_87)?)?;
        Self::new(chi_85, chi_87, a_85, a_87)
    }

    pub fn chi(&self, id: IsotopeId) -> f64 {
        match id {
            IsotopeId::Rb85 => self.chi_85,
            IsotopeId::Rb87 => self.chi_87,
        }
    }

    /// Squeezing parameters `(χ cos η, χ sin η)` of the two pair sources.
    pub fn squeezing(&self) -> (f64, f64) {
        (self.chi_total * self.eta.cos(), self.chi_total * self.eta.sin())
    }
}

/// Rf drive frequencies of the signal and idler combining modulators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyPlan {
    pub delta_omega_w: f64,
    pub delta_omega_s: f64,
    pub delta_omega_i: f64,
}

/// `δω_s = δω_w − [(ω_a − ω_b)₈₇ − (ω_a − ω_b)₈₅]/2` and `δω_i = δω_w − (Δ₈₅ + Δ₈₇)/2`.
///
/// With `Δ ≈ −10 MHz` the idler formula gives `δω_w + 10 MHz`; the commonly
/// quoted idler drive equal to `δω_w` does not follow from it, and this
/// function reports the formula's value.
pub fn modulator_frequencies(iso_85: &IsotopeSpec, iso_87: &IsotopeSpec, write: &WriteConfig, delta_omega_w: f64) -> FrequencyPlan {
    FrequencyPlan {
        delta_omega_w,
        delta_omega_s: delta_omega_w - (iso_87.ground_splitting() - iso_85.ground_splitting()) / 2.0,
        delta_omega_i: delta_omega_w - (write.detuning_85 + write.detuning_87) / 2.0,
    }
}

/// Rescales the sideband photon numbers so that `μ₈₅ cos²η = μ₈₇ sin²η`
/// while keeping the total coupling `χ` fixed.
pub fn balance_detunings(write: &WriteConfig, params: &InteractionParams, budget: &EfficiencyBudget) -> Result<WriteConfig> {
    let (mu_85, mu_87) = (budget.mu_85(), budget.mu_87());
    if !(mu_85 > 0.0 && mu_87 > 0.0) {
        return Err(Error::Degenerate(format!("cannot balance with μ₈₅ = {mu_85}, μ₈₇ = {mu_87}")));
    }
    if !(params.chi_85 > 0.0 && params.chi_87 > 0.0) {
        return Err(Error::Degenerate("cannot balance: one species has zero coupling".into()));
    }
    // tan²η = μ₈₅/μ₈₇ at balance.
    let eta = mu_85.sqrt().atan2(mu_87.sqrt());
    let chi = params.chi_total;
    let scale_85 = (chi * eta.cos() / params.chi_85).powi(2);
    let scale_87 = (chi * eta.sin() / params.chi_87).powi(2);
    let mut out = write.clone();
    out.n_w_85 *= scale_85;
    out.n_w_87 *= scale_87;
    Ok(out)
}

/// `sin2η √(μ₈₅μ₈₇) / (μ₈₅cos²η + μ₈₇sin²η)`: the largest fringe visibility
/// the rate imbalance allows. Equals 1 at balance.
pub fn visibility_prefactor(params: &InteractionParams, budget: &EfficiencyBudget) -> f64 {
    let (mu_85, mu_87) = (budget.mu_85(), budget.mu_87());
    let (c2, s2) = (params.eta.cos().powi(2), params.eta.sin().powi(2));
    (2.0 * params.eta).sin() * (mu_85 * mu_87).sqrt() / (mu_85 * c2 + mu_87 * s2)
}
