//! The five front-end operations, independent of argument parsing.

use std::str::FromStr;

use serde::Serialize;

use crate::angular::Helicity;
use crate::bell::{analytic_bell, BellAngles, BellResult};
use crate::config::{Model, RunConfig};
use crate::ensemble::{angular_to_mhz, visibility_prefactor, IsotopeId};
use crate::error::{Error, Result};
use crate::montecarlo::{
    estimate_bell, estimate_fringe, fit_fringe, run_trials, run_trials_exact, CountLedger, FringeFit, FringePoint,
};
use crate::quantum::{
    build_entangled_state, build_entangled_state_with_bound, coincidence_rate_perturbative, default_cutoff,
    idler_singles_perturbative, signal_singles_perturbative, DetectedState, ExactRateModel, FringeModel,
    DEFAULT_LEAKAGE_BOUND,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Mc,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "mc" => Ok(Mode::Mc),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected analytic or mc)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamsReport {
    pub a_85: f64,
    pub a_87: f64,
    pub chi_85: f64,
    pub chi_87: f64,
    pub chi: f64,
    pub eta: f64,
    pub cos2_eta: f64,
    pub cos2_theta_85: f64,
    pub cos2_theta_87: f64,
    pub n_w_85: f64,
    pub n_w_87: f64,
    pub upsilon: f64,
    pub phi_0: f64,
    pub visibility_prefactor: f64,
    /// `|μ₈₅cos²η − μ₈₇sin²η| / (μ₈₅cos²η + μ₈₇sin²η)`.
    pub balance_residual: f64,
    pub idler_delay_ns: f64,
    pub coincidence_window_s: f64,
    pub delta_omega_w_mhz: f64,
    pub delta_omega_s_mhz: f64,
    pub delta_omega_i_mhz: f64,
    pub trials_per_setting: u64,
}

pub fn cmd_params(model: &Model) -> Result<ParamsReport> {
    let p = &model.params;
    let (c2, s2) = (p.eta.cos().powi(2), p.eta.sin().powi(2));
    let (r85, r87) = (model.budget.mu_85() * c2, model.budget.mu_87() * s2);
    Ok(ParamsReport {
        a_85: p.a_85,
        a_87: p.a_87,
        chi_85: p.chi_85,
        chi_87: p.chi_87,
        chi: p.chi_total,
        eta: p.eta,
        cos2_eta: c2,
        cos2_theta_85: model.coupling_85.cos2_theta()?,
        cos2_theta_87: model.coupling_87.cos2_theta()?,
        n_w_85: model.write.n_w_85,
        n_w_87: model.write.n_w_87,
        upsilon: model.fringe.upsilon,
        phi_0: model.fringe.phi_0,
        visibility_prefactor: visibility_prefactor(p, &model.budget),
        balance_residual: if r85 + r87 > 0.0 { (r85 - r87).abs() / (r85 + r87) } else { 0.0 },
        idler_delay_ns: model.idler_delay_ns,
        coincidence_window_s: model.background.window,
        delta_omega_w_mhz: angular_to_mhz(model.plan.delta_omega_w),
        delta_omega_s_mhz: angular_to_mhz(model.plan.delta_omega_s),
        delta_omega_i_mhz: angular_to_mhz(model.plan.delta_omega_i),
        trials_per_setting: model.trials.n_trials,
    })
}

/// Counts from the trial simulation at `settings`, using multi-pair
/// statistics when the model asks for them.
pub fn simulate(model: &Model, settings: &[(f64, f64)]) -> Result<CountLedger> {
    if let Some(issue) = &model.background_issue {
        return Err(Error::Config(issue.clone()));
    }
    if model.multi_pair {
        let cutoff = default_cutoff(model.params.chi_total, DEFAULT_LEAKAGE_BOUND)?;
        let state = build_entangled_state(&model.params, cutoff)?;
        let rates = ExactRateModel::new(&state, &model.budget, &model.fringe_profile)?;
        run_trials_exact(&model.trials, &rates, &model.noise, &model.background, settings)
    } else {
        run_trials(
            &model.trials,
            &model.params,
            &model.budget,
            &model.noise,
            &model.fringe_profile,
            &model.background,
            settings,
        )
    }
}

/// One fringe sample. Counts are present only for simulated fringes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringeRow {
    pub phi_s: f64,
    pub phi_i: f64,
    /// Coincidence probability per trial.
    pub value: f64,
    pub error: f64,
    pub trials: Option<u64>,
    pub singles_s: Option<u64>,
    pub singles_i: Option<u64>,
    pub coincidences: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringeSummary {
    pub phi_s: f64,
    pub fit: FringeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FringeTable {
    pub mode: Mode,
    pub rows: Vec<FringeRow>,
    pub fits: Vec<FringeSummary>,
}

pub fn cmd_fringes(model: &Model, phi_s_values: &[f64], grid: &[f64], mode: Mode) -> Result<FringeTable> {
    let settings: Vec<(f64, f64)> = phi_s_values.iter().flat_map(|&s| grid.iter().map(move |&i| (s, i))).collect();
    let ledger = match mode {
        Mode::Analytic => None,
        Mode::Mc => Some(simulate(model, &settings)?),
    };
    let rows: Vec<FringeRow> = match &ledger {
        None => settings
            .iter()
            .map(|&(phi_s, phi_i)| FringeRow {
                phi_s,
                phi_i,
                value: coincidence_rate_perturbative(&model.params, &model.budget, &model.fringe, phi_s, phi_i),
                error: 0.0,
                trials: None,
                singles_s: None,
                singles_i: None,
                coincidences: None,
            })
            .collect(),
        Some(ledger) => ledger
            .settings
            .iter()
            .map(|c| {
                let n = c.trials as f64;
                let floor = if model.subtract_accidentals { c.accidentals() } else { 0.0 };
                FringeRow {
                    phi_s: c.phi_s,
                    phi_i: c.phi_i,
                    value: (c.coincidences as f64 - floor) / n,
                    error: (c.coincidences as f64).sqrt() / n,
                    trials: Some(c.trials),
                    singles_s: Some(c.singles_s),
                    singles_i: Some(c.singles_i),
                    coincidences: Some(c.coincidences),
                }
            })
            .collect(),
    };
    let mut fits = Vec::new();
    if grid.len() >= 6 {
        for &phi_s in phi_s_values {
            let fit = match &ledger {
                None => analytic_fit(model, phi_s, grid)?,
                Some(ledger) => estimate_fringe(ledger, phi_s, model.subtract_accidentals)?,
            };
            fits.push(FringeSummary { phi_s, fit });
        }
    }
    Ok(FringeTable { mode, rows, fits })
}

fn analytic_fit(model: &Model, phi_s: f64, grid: &[f64]) -> Result<FringeFit> {
    let points: Vec<_> = grid
        .iter()
        .map(|&phi_i| FringePoint {
            phi_i,
            value: coincidence_rate_perturbative(&model.params, &model.budget, &model.fringe, phi_s, phi_i),
            sigma: 1.0,
        })
        .collect();
    fit_fringe(&points)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellReport {
    pub mode: Mode,
    pub angles: BellAngles,
    pub result: BellResult,
    pub violation: bool,
}

/// `E` values and `S`. The analytic correlations are `Υ' cos(φ_s − φ_i + φ₀)`
/// with `Υ'` the fringe amplitude times the rate-imbalance prefactor.
pub fn cmd_bell(model: &Model, mode: Mode) -> Result<BellReport> {
    let result = match mode {
        Mode::Analytic => {
            let prefactor = visibility_prefactor(&model.params, &model.budget);
            let effective = FringeModel::new(model.fringe.upsilon * prefactor, model.fringe.phi_0)?;
            analytic_bell(&effective, &model.angles)
        }
        Mode::Mc => {
            let ledger = simulate(model, &model.angles.settings())?;
            estimate_bell(&ledger, &model.angles, model.subtract_accidentals)?
        }
    };
    Ok(BellReport { mode, angles: model.angles, violation: result.violates_classical_bound(), result })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub upsilon: f64,
    pub phi_0: f64,
    pub visibility: f64,
    pub visibility_err: f64,
    pub s: f64,
    pub s_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: String,
    pub mode: Mode,
    pub rows: Vec<SweepRow>,
}

/// `points` values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Repeats the Bell and fringe summaries with the numeric leaf at `path`
/// set to each of `values`.
pub fn cmd_sweep(config: &RunConfig, path: &str, values: &[f64], mode: Mode) -> Result<SweepTable> {
    // Reject bad paths even when the range is empty.
    if let Err(e @ Error::UnknownParameter(_)) = config.with_parameter(path, values.first().copied().unwrap_or(0.0)) {
        return Err(e);
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let model = config.with_parameter(path, value)?.resolve()?;
        let bell = cmd_bell(&model, mode)?;
        let (visibility, visibility_err) = match mode {
            Mode::Analytic => (model.fringe.upsilon * visibility_prefactor(&model.params, &model.budget), 0.0),
            Mode::Mc => {
                let phi_s = model.fringe_phi_s.first().copied().unwrap_or(0.0);
                let table = cmd_fringes(&model, &[phi_s], &model.fringe_grid, mode)?;
                table.fits.first().map_or((f64::NAN, f64::NAN), |f| (f.fit.visibility, f.fit.visibility_err))
            }
        };
        rows.push(SweepRow {
            value,
            upsilon: model.fringe.upsilon,
            phi_0: model.fringe.phi_0,
            visibility,
            visibility_err,
            s: bell.result.s,
            s_error: bell.result.s_error,
        });
    }
    Ok(SweepTable { parameter: path.to_string(), mode, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &str, status: Status, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), status, detail: detail.into() }
    }

    fn gate(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn worst(&self) -> Status {
        let statuses = self.checks.iter().map(|c| c.status);
        if statuses.clone().any(|s| s == Status::Fail) {
            Status::Fail
        } else if statuses.clone().any(|s| s == Status::Warn) {
            Status::Warn
        } else {
            Status::Pass
        }
    }

    pub fn schema_failed(&self) -> bool {
        self.checks.iter().any(|c| c.name == "schema" && c.status == Status::Fail)
    }
}

/// Relative gap above which the lowest-order rates are flagged.
pub const PERTURBATIVE_GAP_WARNING: f64 = 0.1;
/// Cutoff and leakage bound used for the gap measurement.
const GAP_CUTOFF: usize = 6;
const GAP_LEAKAGE_BOUND: f64 = 1e-3;

/// Runs the invariant checks on a configuration; failures are report content.
pub fn cmd_validate(config: &RunConfig) -> ValidationReport {
    let mut checks = Vec::new();
    let model = match config.resolve() {
        Ok(m) => {
            checks.push(Check::new("schema", Status::Pass, "configuration resolves"));
            m
        }
        Err(e) => {
            checks.push(Check::new("schema", Status::Fail, e.to_string()));
            return ValidationReport { checks };
        }
    };

    let mut worst_weight: f64 = 0.0;
    let mut cos2 = Vec::new();
    for (id, table) in [(IsotopeId::Rb85, &model.coupling_85), (IsotopeId::Rb87, &model.coupling_87)] {
        for alpha in Helicity::BOTH {
            match table.weights(alpha) {
                Ok(w) => worst_weight = worst_weight.max((w.values().map(|x| x * x).sum::<f64>() - 1.0).abs()),
                Err(e) => checks.push(Check::new("spin_wave_weights", Status::Fail, format!("{id:?}: {e}"))),
            }
        }
        cos2.push(table.cos2_theta().unwrap_or(f64::NAN));
    }
    checks.push(Check::gate("spin_wave_weights", worst_weight < 1e-12, format!("max |Σw² − 1| = {worst_weight:.2e}")));
    checks.push(Check::gate(
        "branching_angle",
        cos2.iter().all(|c| (0.0..=1.0).contains(c)),
        format!("cos²θ = {:.12} (85), {:.12} (87)", cos2[0], cos2[1]),
    ));

    let pulse = (model.write.pulse.norm() - 1.0).abs();
    checks.push(Check::gate("write_pulse_normalization", pulse <= 1e-9, format!("|∫|φ|² − 1| = {pulse:.2e}")));
    checks.push(Check::gate(
        "idler_profile_normalization",
        model.profiles.validate().is_ok(),
        format!("overlap = {:.12}", model.profiles.overlap().norm()),
    ));

    let p = &model.params;
    let invariant = (p.chi_total.powi(2) - p.chi_85.powi(2) - p.chi_87.powi(2)).abs() / p.chi_total.powi(2).max(f64::MIN_POSITIVE);
    checks.push(Check::gate("coupling_invariant", invariant <= 1e-12, format!("relative residual {invariant:.2e}")));

    let prefactor = visibility_prefactor(p, &model.budget);
    let balance = (prefactor - 1.0).abs();
    checks.push(Check::new(
        "rate_balance",
        if balance < 1e-9 { Status::Pass } else { Status::Warn },
        format!("visibility prefactor {prefactor:.12}"),
    ));

    checks.push(match default_cutoff(p.chi_total, DEFAULT_LEAKAGE_BOUND).and_then(|n| build_entangled_state(p, n)) {
        Ok(s) => Check::new("truncation", Status::Pass, format!("n_max = {}, leakage {:.2e}", s.n_max(), s.leakage())),
        Err(e) => Check::new("truncation", Status::Fail, e.to_string()),
    });

    checks.push(perturbative_gap(&model));

    let ps = signal_singles_perturbative(p, &model.budget);
    let pi = idler_singles_perturbative(p, &model.budget);
    let top = coincidence_rate_perturbative(p, &model.budget, &FringeModel::ideal(), 0.0, -model.fringe.phi_0);
    checks.push(Check::gate(
        "trial_probabilities",
        top <= ps.min(pi) && ps <= 1.0 && pi <= 1.0,
        format!("pair ≤ {top:.3e}, singles {ps:.3e} / {pi:.3e}"),
    ));

    checks.push(match &model.background_issue {
        None => Check::new("background", Status::Pass, format!("coincidence window {:.4e} s", model.background.window)),
        Some(issue) => Check::new("background", Status::Warn, issue.clone()),
    });

    checks.push(Check::new(
        "frequency_plan",
        Status::Pass,
        format!(
            "δω_s = {:.3} MHz, δω_i = {:.3} MHz",
            angular_to_mhz(model.plan.delta_omega_s),
            angular_to_mhz(model.plan.delta_omega_i)
        ),
    ));

    ValidationReport { checks }
}

/// Largest gap between exact and lowest-order coincidence rates over the
/// fringe, relative to the phase-averaged lowest-order rate.
fn perturbative_gap(model: &Model) -> Check {
    let name = "perturbative_gap";
    let result = build_entangled_state_with_bound(&model.params, GAP_CUTOFF, GAP_LEAKAGE_BOUND)
        .and_then(|s| DetectedState::with_bound(&s, &model.budget, GAP_LEAKAGE_BOUND));
    let detected = match result {
        Ok(d) => d,
        Err(e) => return Check::new(name, Status::Warn, format!("exact evaluation unavailable: {e}")),
    };
    let p = &model.params;
    let mean = p.chi_total.powi(2) / 4.0
        * (model.budget.mu_85() * p.eta.cos().powi(2) + model.budget.mu_87() * p.eta.sin().powi(2));
    if !(mean > 0.0) {
        return Check::new(name, Status::Pass, "no pairs are detected");
    }
    let gap = (0..8)
        .map(|k| k as f64 * std::f64::consts::FRAC_PI_4)
        .map(|delta| {
            let exact = detected.coincidence_rate(&model.fringe, 0.0, delta);
            let approx = coincidence_rate_perturbative(p, &model.budget, &model.fringe, 0.0, delta);
            (exact - approx).abs() / mean
        })
        .fold(0.0, f64::max);
    let status = if gap > PERTURBATIVE_GAP_WARNING { Status::Warn } else { Status::Pass };
    Check::new(name, status, format!("max relative gap {gap:.3e} at χ = {:.4}", p.chi_total))
}
