//! TOML run configuration and its resolution into simulation inputs.
//!
//! Frequencies are given in MHz, lengths in metres, idler times in ns and
//! all modulator angles in units of π.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::angular::{CouplingTable, HalfInt};
use crate::bell::BellAngles;
use crate::ensemble::{
    balance_detunings, mhz_to_angular, modulator_frequencies, BeamGeometry, CloudProfile, FrequencyPlan,
    InteractionParams, IsotopeId, IsotopeSpec, PulseProfile, WriteConfig,
};
use crate::error::{Error, Result};
use crate::montecarlo::{calibrate_window, trials_for_bell_error, BackgroundModel, TrialConfig};
use crate::quantum::{calibrate_delay, fringe_visibility, EfficiencyBudget, FringeModel, IdlerProfiles, PhaseNoise};

pub const SCHEMA_VERSION: u32 = 1;

const REFERENCE_TOML: &str = include_str!("../configs/reference.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopeSection {
    pub f_a: HalfInt,
    pub f_b: HalfInt,
    pub f_c: HalfInt,
    /// Level energies divided by `h`, in MHz.
    pub level_a_mhz: f64,
    pub level_b_mhz: f64,
    pub level_c_mhz: f64,
    pub d_ca: f64,
    pub d_cb: f64,
    pub n_atoms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopesSection {
    pub rb85: IsotopeSection,
    pub rb87: IsotopeSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSection {
    pub sigma: [f64; 3],
    pub center: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub write_waist: f64,
    pub signal_waist: f64,
    pub focus: [f64; 3],
    pub write_dir: [f64; 3],
    pub signal_dir: [f64; 3],
    pub read_dir: [f64; 3],
    pub cloud_85: CloudSection,
    pub cloud_87: CloudSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Flat,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WriteSection {
    pub pulse_duration: f64,
    pub pulse_shape: PulseShape,
    pub pulse_samples: usize,
    pub detuning_85_mhz: f64,
    pub detuning_87_mhz: f64,
    pub n_w_85: f64,
    pub n_w_87: f64,
    /// Write modulator frequency in MHz.
    pub delta_omega_w_mhz: f64,
    /// Rescale both sidebands together so that the total coupling equals this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_chi: Option<f64>,
    /// Rescale the sidebands separately to equalize the two pair rates.
    #[serde(default)]
    pub balance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdlerSection {
    pub tau_85_ns: f64,
    pub tau_87_ns: f64,
    pub step_ns: f64,
    pub span_ns: f64,
    /// Fixed delay of the ⁸⁷Rb envelope; ignored when `target_upsilon` is set.
    #[serde(default)]
    pub delay_ns: f64,
    /// Envelope overlap to reach by tuning the delay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_upsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeOverride {
    pub upsilon: f64,
    #[serde(default)]
    pub phi_0_pi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    pub rates_d1_hz: [f64; 2],
    pub rates_d2_hz: [f64; 2],
    #[serde(default)]
    pub window: f64,
    /// Choose the window so that fringe minima sit this factor above the accidental floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_floor_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub rep_rate: f64,
    pub seed: u64,
    pub stream_count: u64,
    /// Trials per setting; derived from `bell_target_stderr` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<u64>,
    #[serde(default = "default_bell_stderr")]
    pub bell_target_stderr: f64,
    #[serde(default = "default_true")]
    pub subtract_accidentals: bool,
    /// Draw pair statistics from the truncated state, including multi-pair events.
    #[serde(default)]
    pub multi_pair: bool,
}

fn default_bell_stderr() -> f64 {
    0.018
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellSection {
    pub phi_s_pi: f64,
    pub phi_i_pi: f64,
    pub phi_s_prime_pi: f64,
    pub phi_i_prime_pi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringesSection {
    pub phi_s_pi: Vec<f64>,
    pub phi_i_start_pi: f64,
    pub phi_i_stop_pi: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub isotopes: IsotopesSection,
    pub geometry: GeometrySection,
    pub write: WriteSection,
    pub efficiency: EfficiencyBudget,
    pub phase_noise: PhaseNoise,
    pub idler: IdlerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fringe_override: Option<FringeOverride>,
    pub background: BackgroundSection,
    pub monte_carlo: MonteCarloSection,
    /// Explicit Bell angles; the canonical set for the resolved `φ₀` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell: Option<BellSection>,
    pub fringes: FringesSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_TOML).expect("shipped reference configuration parses")
    }

    pub fn reference_toml() -> &'static str {
        REFERENCE_TOML
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical serialization: fixed field order, shortest round-tripping floats.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_toml().as_bytes()))
    }

    /// Copy with the numeric leaf at dotted `path` set to `value`. Missing
    /// optional keys and sections are created when the schema allows them.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<Self> {
        let unknown = || Error::UnknownParameter(path.to_string());
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(unknown());
        }
        let (leaf, parents) = keys.split_last().ok_or_else(unknown)?;
        let mut table = root.as_table_mut().ok_or_else(unknown)?;
        for key in parents {
            table = table
                .entry(key.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(unknown)?;
        }
        let new_value = match table.get(*leaf) {
            Some(toml::Value::Integer(_)) => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::Config(format!("{path} takes non-negative integers, got {value}")));
                }
                toml::Value::Integer(value as i64)
            }
            Some(toml::Value::Float(_)) | None => toml::Value::Float(value),
            Some(_) => return Err(unknown()),
        };
        table.insert(leaf.to_string(), new_value);
        let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
        toml::from_str(&text).map_err(|_| unknown())
    }

    /// Builds every simulation input, running the delay and window
    /// calibrations and the sideband rescaling requested by the file.
    pub fn resolve(&self) -> Result<Model> {
        let iso_85 = isotope(IsotopeId::Rb85, &self.isotopes.rb85)?;
        let iso_87 = isotope(IsotopeId::Rb87, &self.isotopes.rb87)?;
        let geometry = self.geometry.build();
        geometry.validate()?;
        let mut write = self.write.build()?;
        write.validate()?;
        self.efficiency.validate()?;
        self.phase_noise.validate()?;

        let mut params = InteractionParams::derive(&iso_85, &iso_87, &geometry, &write)?;
        if let Some(target) = self.write.target_chi {
            if !(target > 0.0) {
                return Err(Error::Config(format!("target_chi must be positive, got {target}")));
            }
            // χ² is linear in the sideband photon numbers.
            let scale = (target / params.chi_total).powi(2);
            write.n_w_85 *= scale;
            write.n_w_87 *= scale;
            params = InteractionParams::derive_with_overlaps(&iso_85, &iso_87, &geometry, &write, params.a_85, params.a_87)?;
        }
        if self.write.balance {
            write = balance_detunings(&write, &params, &self.efficiency)?;
            params = InteractionParams::derive_with_overlaps(&iso_85, &iso_87, &geometry, &write, params.a_85, params.a_87)?;
        }
        let plan = modulator_frequencies(&iso_85, &iso_87, &write, mhz_to_angular(self.write.delta_omega_w_mhz));

        let idler = &self.idler;
        let (idler_delay_ns, profiles) = match idler.target_upsilon {
            Some(target) => calibrate_delay(idler.tau_85_ns, idler.tau_87_ns, target, idler.step_ns, idler.span_ns)?,
            None => (
                idler.delay_ns,
                IdlerProfiles::exponential(idler.tau_85_ns, idler.tau_87_ns, idler.delay_ns, idler.step_ns, idler.span_ns)?,
            ),
        };
        let (fringe, fringe_profile) = match &self.fringe_override {
            None => (fringe_visibility(&self.phase_noise, &profiles)?, FringeModel::profile_only(&profiles)?),
            Some(o) => {
                let total = FringeModel::new(o.upsilon, o.phi_0_pi * PI).map_err(|e| Error::Config(e.to_string()))?;
                let per_trial = o.upsilon / self.phase_noise.dephasing();
                if per_trial > 1.0 + 1e-12 {
                    return Err(Error::Config(format!(
                        "fringe_override.upsilon = {} exceeds the phase-noise ceiling {}",
                        o.upsilon,
                        self.phase_noise.dephasing()
                    )));
                }
                (total, FringeModel::new(per_trial.min(1.0), total.phi_0)?)
            }
        };

        let mut background = BackgroundModel {
            rates_d1_hz: self.background.rates_d1_hz,
            rates_d2_hz: self.background.rates_d2_hz,
            window: self.background.window,
        };
        // An unreachable floor ratio only matters once trials are simulated.
        let mut background_issue = None;
        if let Some(ratio) = self.background.target_floor_ratio {
            match calibrate_window(&params, &self.efficiency, &fringe, &background, ratio) {
                Ok(window) => background.window = window,
                Err(e) => background_issue = Some(e.to_string()),
            }
        }
        background.validate()?;

        let angles = match &self.bell {
            Some(b) => BellAngles {
                phi_s: b.phi_s_pi * PI,
                phi_i: b.phi_i_pi * PI,
                phi_s_prime: b.phi_s_prime_pi * PI,
                phi_i_prime: b.phi_i_prime_pi * PI,
            },
            None => BellAngles::canonical(fringe.phi_0),
        };

        let mc = &self.monte_carlo;
        let n_trials = match mc.n_trials {
            Some(n) => n,
            None => {
                let budget = &self.efficiency;
                let (c2, s2) = (params.eta.cos().powi(2), params.eta.sin().powi(2));
                let mean = params.chi_total.powi(2) / 4.0 * (budget.mu_85() * c2 + budget.mu_87() * s2);
                if !(mean > 0.0) {
                    return Err(Error::Config("cannot derive n_trials: coincidence probability is zero".into()));
                }
                trials_for_bell_error(fringe.upsilon / 2f64.sqrt(), mc.bell_target_stderr, mean)
            }
        };
        let trials = TrialConfig { rep_rate: mc.rep_rate, n_trials, seed: mc.seed, stream_count: mc.stream_count };
        trials.validate()?;

        let coupling_85 = CouplingTable::for_isotope(&iso_85)?;
        let coupling_87 = CouplingTable::for_isotope(&iso_87)?;
        Ok(Model {
            iso_85,
            iso_87,
            geometry,
            write,
            params,
            plan,
            coupling_85,
            coupling_87,
            budget: self.efficiency,
            noise: self.phase_noise,
            profiles,
            idler_delay_ns,
            fringe,
            fringe_profile,
            background,
            background_issue,
            trials,
            angles,
            subtract_accidentals: mc.subtract_accidentals,
            multi_pair: mc.multi_pair,
            fringe_phi_s: self.fringes.phi_s_pi.iter().map(|p| p * PI).collect(),
            fringe_grid: grid(self.fringes.phi_i_start_pi * PI, self.fringes.phi_i_stop_pi * PI, self.fringes.points),
        })
    }
}

/// `points` equally spaced angles from `start`, excluding `stop` (a full period).
pub fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| start + (stop - start) * k as f64 / points as f64).collect()
}

fn isotope(id: IsotopeId, s: &IsotopeSection) -> Result<IsotopeSpec> {
    let spec = IsotopeSpec {
        id,
        f_a: s.f_a,
        f_b: s.f_b,
        f_c: s.f_c,
        omega_a: mhz_to_angular(s.level_a_mhz),
        omega_b: mhz_to_angular(s.level_b_mhz),
        omega_c: mhz_to_angular(s.level_c_mhz),
        d_ca: s.d_ca,
        d_cb: s.d_cb,
        n_atoms: s.n_atoms,
    };
    spec.validate()?;
    Ok(spec)
}

impl GeometrySection {
    fn build(&self) -> BeamGeometry {
        let v = |a: [f64; 3]| Vector3::from(a);
        let cloud = |c: &CloudSection| CloudProfile { sigma: v(c.sigma), center: v(c.center) };
        BeamGeometry {
            write_waist: self.write_waist,
            signal_waist: self.signal_waist,
            focus: v(self.focus),
            write_dir: v(self.write_dir),
            signal_dir: v(self.signal_dir),
            read_dir: v(self.read_dir),
            cloud_85: cloud(&self.cloud_85),
            cloud_87: cloud(&self.cloud_87),
        }
    }
}

impl WriteSection {
    fn build(&self) -> Result<WriteConfig> {
        if !(self.pulse_duration > 0.0) {
            return Err(Error::Config("write pulse duration must be positive".into()));
        }
        let pulse = match self.pulse_shape {
            PulseShape::Flat => PulseProfile::flat(self.pulse_duration, self.pulse_samples),
            PulseShape::Gaussian => PulseProfile::gaussian(self.pulse_duration, self.pulse_samples),
        };
        Ok(WriteConfig {
            pulse_duration: self.pulse_duration,
            pulse,
            detuning_85: mhz_to_angular(self.detuning_85_mhz),
            detuning_87: mhz_to_angular(self.detuning_87_mhz),
            n_w_85: self.n_w_85,
            n_w_87: self.n_w_87,
        })
    }
}

/// Everything a command needs, derived from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Model {
    pub iso_85: IsotopeSpec,
    pub iso_87: IsotopeSpec,
    pub geometry: BeamGeometry,
    /// Write settings after any sideband rescaling.
    pub write: WriteConfig,
    pub params: InteractionParams,
    pub plan: FrequencyPlan,
    pub coupling_85: CouplingTable,
    pub coupling_87: CouplingTable,
    pub budget: EfficiencyBudget,
    pub noise: PhaseNoise,
    pub profiles: IdlerProfiles,
    pub idler_delay_ns: f64,
    /// Fringe after averaging over the phase noise.
    pub fringe: FringeModel,
    /// Fringe of a single trial, set by the idler envelopes alone.
    pub fringe_profile: FringeModel,
    pub background: BackgroundModel,
    /// Why the requested background calibration failed; simulations refuse to run while set.
    pub background_issue: Option<String>,
    pub trials: TrialConfig,
    pub angles: BellAngles,
    pub subtract_accidentals: bool,
    pub multi_pair: bool,
    pub fringe_phi_s: Vec<f64>,
    pub fringe_grid: Vec<f64>,
}
