//! Trial-by-trial simulation of pair generation, detection and background
//! clicks, producing per-setting count ledgers.
//!
//! Randomness comes from ChaCha8 streams: every (setting, partition) task
//! seeds the generator from the run seed and selects stream
//! `setting_index * stream_count + partition`, so results depend only on the
//! seed and the partitioning, never on thread scheduling.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{chsh_s, correlation_e_with_accidentals, quadruple, BellAngles, BellResult};
use crate::ensemble::InteractionParams;
use crate::error::{Error, Result};
use crate::quantum::{
    coincidence_rate_perturbative, idler_singles_perturbative, signal_singles_perturbative, EfficiencyBudget,
    ExactRateModel, FringeModel, PhaseNoise,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    /// Write/read repetitions per second.
    pub rep_rate: f64,
    /// Trials per modulator setting.
    pub n_trials: u64,
    pub seed: u64,
    /// Independent RNG partitions per setting.
    pub stream_count: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be positive".into()));
        }
        if !(self.rep_rate > 0.0) {
            return Err(Error::Config("rep_rate must be positive".into()));
        }
        if self.stream_count == 0 {
            return Err(Error::Config("stream_count must be positive".into()));
        }
        Ok(())
    }
}

/// Uncorrelated detector clicks: per-species singles rates (Hz) on the
/// signal detector D1 and idler detector D2, collected within `window` seconds
/// of each trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundModel {
    pub rates_d1_hz: [f64; 2],
    pub rates_d2_hz: [f64; 2],
    pub window: f64,
}

impl BackgroundModel {
    pub fn none() -> Self {
        BackgroundModel { rates_d1_hz: [0.0; 2], rates_d2_hz: [0.0; 2], window: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates_d1_hz.iter().chain(&self.rates_d2_hz).any(|r| !(*r >= 0.0)) || !(self.window >= 0.0) {
            return Err(Error::Config("background rates and window must be non-negative".into()));
        }
        let (b1, b2) = self.click_probabilities();
        if b1 > 1.0 || b2 > 1.0 {
            return Err(Error::Config(format!("background click probability exceeds 1 ({b1}, {b2})")));
        }
        Ok(())
    }

    pub fn with_window(self, window: f64) -> Self {
        BackgroundModel { window, ..self }
    }

    /// Per-trial background click probabilities on D1 and D2.
    pub fn click_probabilities(&self) -> (f64, f64) {
        (self.rates_d1_hz.iter().sum::<f64>() * self.window, self.rates_d2_hz.iter().sum::<f64>() * self.window)
    }

    pub fn is_silent(&self) -> bool {
        let (b1, b2) = self.click_probabilities();
        b1 == 0.0 && b2 == 0.0
    }
}

/// Accumulated counts at one `(φ_s, φ_i)` setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub phi_s: f64,
    pub phi_i: f64,
    pub trials: u64,
    pub singles_s: u64,
    pub singles_i: u64,
    pub coincidences: u64,
}

impl SettingCounts {
    fn empty(phi_s: f64, phi_i: f64) -> Self {
        SettingCounts { phi_s, phi_i, trials: 0, singles_s: 0, singles_i: 0, coincidences: 0 }
    }

    fn absorb(&mut self, other: &SettingCounts) {
        self.trials += other.trials;
        self.singles_s += other.singles_s;
        self.singles_i += other.singles_i;
        self.coincidences += other.coincidences;
    }

    /// Expected accidental coincidences from the singles, `S_s S_i / trials`.
    pub fn accidentals(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.singles_s as f64 * self.singles_i as f64 / self.trials as f64
        }
    }
}

/// Counts for a list of settings, in the order they were requested.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CountLedger {
    pub settings: Vec<SettingCounts>,
}

const ANGLE_MATCH: f64 = 1e-9;

impl CountLedger {
    pub fn get(&self, phi_s: f64, phi_i: f64) -> Option<&SettingCounts> {
        self.settings
            .iter()
            .find(|c| (c.phi_s - phi_s).abs() < ANGLE_MATCH && (c.phi_i - phi_i).abs() < ANGLE_MATCH)
    }

    /// Populated counts at a setting, or an empty-setting error.
    pub fn require(&self, phi_s: f64, phi_i: f64) -> Result<&SettingCounts> {
        self.get(phi_s, phi_i).filter(|c| c.trials > 0).ok_or(Error::EmptySetting { phi_s, phi_i })
    }

    /// Adds another ledger's counts setting by setting; new settings are appended.
    pub fn merge(&mut self, other: &CountLedger) {
        for c in &other.settings {
            let existing = self
                .settings
                .iter_mut()
                .find(|e| (e.phi_s - c.phi_s).abs() < ANGLE_MATCH && (e.phi_i - c.phi_i).abs() < ANGLE_MATCH);
            match existing {
                Some(e) => e.absorb(c),
                None => self.settings.push(*c),
            }
        }
    }

    /// CSV with header `phi_s,phi_i,trials,singles_s,singles_i,coincidences`; angles in radians.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for c in &self.settings {
            w.serialize(c)?;
        }
        if self.settings.is_empty() {
            w.write_record(["phi_s", "phi_i", "trials", "singles_s", "singles_i", "coincidences"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let settings = r.deserialize().collect::<std::result::Result<Vec<SettingCounts>, _>>()?;
        Ok(CountLedger { settings })
    }
}

/// Per-trial probabilities of the pair process at given phases.
#[derive(Clone, Copy, Debug)]
enum PairRates<'a> {
    Perturbative { params: &'a InteractionParams, budget: &'a EfficiencyBudget, fringe: &'a FringeModel },
    Exact(&'a ExactRateModel),
}

impl PairRates<'_> {
    fn coincidence(&self, phi_s: f64, phi_i: f64) -> f64 {
        match self {
            PairRates::Perturbative { params, budget, fringe } => {
                coincidence_rate_perturbative(params, budget, fringe, phi_s, phi_i)
            }
            PairRates::Exact(model) => model.coincidence(phi_s, phi_i),
        }
    }

    fn singles(&self) -> (f64, f64) {
        match self {
            PairRates::Perturbative { params, budget, .. } => {
                (signal_singles_perturbative(params, budget), idler_singles_perturbative(params, budget))
            }
            PairRates::Exact(model) => (model.signal_singles, model.idler_singles),
        }
    }
}

/// Click probabilities of one trial.
///
/// Lowest-order rates describe a single pair, so coincidences between
/// detections from different pairs are added as independent lone clicks.
/// Exact rates already contain them: there `pair` is the full joint click
/// probability and the lone clicks are mutually exclusive with it.
#[derive(Clone, Copy, Debug)]
enum TrialProbabilities {
    Independent { pair: f64, lone_s: f64, lone_i: f64 },
    Joint { both: f64, only_s: f64, only_i: f64 },
}

impl TrialProbabilities {
    fn new(rates: &PairRates<'_>, pair: f64, singles_s: f64, singles_i: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pair) || singles_s > 1.0 || singles_i > 1.0 {
            return Err(Error::Config(format!(
                "per-trial probability outside [0, 1] (pair {pair}, singles {singles_s}, {singles_i}); reduce the coupling"
            )));
        }
        let excess = |singles: f64| -> Result<f64> {
            let p = singles - pair;
            if p < -1e-15 {
                return Err(Error::Config(format!("pair probability {pair} exceeds singles probability {singles}")));
            }
            Ok(p.max(0.0))
        };
        let (only_s, only_i) = (excess(singles_s)?, excess(singles_i)?);
        match rates {
            PairRates::Exact(_) => Ok(TrialProbabilities::Joint { both: pair, only_s, only_i }),
            PairRates::Perturbative { .. } => {
                let lone = |p: f64| if pair >= 1.0 { 0.0 } else { p / (1.0 - pair) };
                Ok(TrialProbabilities::Independent { pair, lone_s: lone(only_s), lone_i: lone(only_i) })
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (bool, bool) {
        match *self {
            TrialProbabilities::Independent { pair, lone_s, lone_i } => {
                if rng.random::<f64>() < pair {
                    (true, true)
                } else {
                    (rng.random::<f64>() < lone_s, rng.random::<f64>() < lone_i)
                }
            }
            TrialProbabilities::Joint { both, only_s, only_i } => {
                let u = rng.random::<f64>();
                if u < both {
                    (true, true)
                } else if u < both + only_s {
                    (true, false)
                } else {
                    (false, u < both + only_s + only_i)
                }
            }
        }
    }
}

fn simulate_partition(
    rates: PairRates<'_>,
    noise: &PhaseNoise,
    background: &BackgroundModel,
    setting: (f64, f64),
    trials: u64,
    rng: &mut ChaCha8Rng,
) -> Result<SettingCounts> {
    let (phi_s, phi_i) = setting;
    let (singles_s, singles_i) = rates.singles();
    let (b1, b2) = background.click_probabilities();
    let jitter_s = (noise.var_phi_s > 0.0).then(|| Normal::new(0.0, noise.var_phi_s.sqrt())).transpose();
    let jitter_i = (noise.var_phi_i > 0.0).then(|| Normal::new(0.0, noise.var_phi_i.sqrt())).transpose();
    let (jitter_s, jitter_i) = match (jitter_s, jitter_i) {
        (Ok(s), Ok(i)) => (s, i),
        _ => return Err(Error::Config("phase variance must be finite".into())),
    };
    let fixed = if jitter_s.is_none() && jitter_i.is_none() {
        Some(TrialProbabilities::new(&rates, rates.coincidence(phi_s, phi_i), singles_s, singles_i)?)
    } else {
        None
    };

    let mut counts = SettingCounts::empty(phi_s, phi_i);
    counts.trials = trials;
    for _ in 0..trials {
        let probs = match fixed {
            Some(p) => p,
            None => {
                let xs = jitter_s.as_ref().map_or(0.0, |d| d.sample(rng));
                let xi = jitter_i.as_ref().map_or(0.0, |d| d.sample(rng));
                TrialProbabilities::new(&rates, rates.coincidence(phi_s + xs, phi_i + xi), singles_s, singles_i)?
            }
        };
        let (quantum_s, quantum_i) = probs.sample(rng);
        let d1 = quantum_s | (b1 > 0.0 && rng.random::<f64>() < b1);
        let d2 = quantum_i | (b2 > 0.0 && rng.random::<f64>() < b2);
        counts.singles_s += u64::from(d1);
        counts.singles_i += u64::from(d2);
        counts.coincidences += u64::from(d1 && d2);
    }
    Ok(counts)
}

fn run(
    config: &TrialConfig,
    rates: PairRates<'_>,
    noise: &PhaseNoise,
    background: &BackgroundModel,
    settings: &[(f64, f64)],
) -> Result<CountLedger> {
    config.validate()?;
    noise.validate()?;
    background.validate()?;
    let streams = config.stream_count;
    let base = config.n_trials / streams;
    let extra = config.n_trials % streams;
    let tasks: Vec<(usize, u64)> = (0..settings.len()).flat_map(|s| (0..streams).map(move |k| (s, k))).collect();
    let partials: Vec<Result<SettingCounts>> = tasks
        .par_iter()
        .map(|&(s, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(s as u64 * streams + k);
            let trials = base + u64::from(k < extra);
            simulate_partition(rates, noise, background, settings[s], trials, &mut rng)
        })
        .collect();
    let mut ledger = CountLedger { settings: settings.iter().map(|&(s, i)| SettingCounts::empty(s, i)).collect() };
    for (&(s, _), partial) in tasks.iter().zip(partials) {
        ledger.settings[s].absorb(&partial?);
    }
    Ok(ledger)
}

/// Simulates `config.n_trials` trials at every setting using the lowest-order
/// pair rates.
///
/// `fringe` must describe the idler-profile overlap only: the modulator
/// phase jitter of `noise` is sampled trial by trial rather than averaged.
pub fn run_trials(
    config: &TrialConfig,
    params: &InteractionParams,
    budget: &EfficiencyBudget,
    noise: &PhaseNoise,
    fringe: &FringeModel,
    background: &BackgroundModel,
    settings: &[(f64, f64)],
) -> Result<CountLedger> {
    if params.chi_total > 0.3 {
        log::warn!("coupling χ = {} is outside the weak-excitation regime", params.chi_total);
    }
    run(config, PairRates::Perturbative { params, budget, fringe }, noise, background, settings)
}

/// As [`run_trials`], with pair and singles probabilities taken from the
/// truncated-state evaluation so that multi-pair events are included.
pub fn run_trials_exact(
    config: &TrialConfig,
    model: &ExactRateModel,
    noise: &PhaseNoise,
    background: &BackgroundModel,
    settings: &[(f64, f64)],
) -> Result<CountLedger> {
    run(config, PairRates::Exact(model), noise, background, settings)
}

/// One fringe sample: coincidences per trial with its counting error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringePoint {
    pub phi_i: f64,
    pub value: f64,
    pub sigma: f64,
}

/// Per-trial coincidence probabilities at fixed `φ_s`, optionally with the
/// singles-product accidentals removed.
pub fn fringe_points(ledger: &CountLedger, phi_s: f64, subtract_accidentals: bool) -> Vec<FringePoint> {
    ledger
        .settings
        .iter()
        .filter(|c| (c.phi_s - phi_s).abs() < ANGLE_MATCH && c.trials > 0)
        .map(|c| {
            let n = c.trials as f64;
            let background = if subtract_accidentals { c.accidentals() } else { 0.0 };
            FringePoint {
                phi_i: c.phi_i,
                value: (c.coincidences as f64 - background) / n,
                sigma: (c.coincidences.max(1) as f64).sqrt() / n,
            }
        })
        .collect()
}

/// Weighted fit of `B[1 + V cos(φ_i − φ₀′)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringeFit {
    pub baseline: f64,
    pub visibility: f64,
    pub phase: f64,
    pub baseline_err: f64,
    pub visibility_err: f64,
    pub phase_err: f64,
    /// Minimum of the fitted curve, `B(1 − V)`.
    pub minimum: f64,
}

/// Linear least squares in `a + b cos φ + c sin φ`, weighted by `1/σ²`.
pub fn fit_fringe(points: &[FringePoint]) -> Result<FringeFit> {
    use nalgebra::{Matrix3, Vector3};
    if points.len() < 6 {
        return Err(Error::Fit(format!("need at least 6 phase points, got {}", points.len())));
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for p in points {
        if !(p.sigma > 0.0) {
            return Err(Error::Fit(format!("non-positive error at φ_i = {}", p.phi_i)));
        }
        let basis = Vector3::new(1.0, p.phi_i.cos(), p.phi_i.sin());
        let w = 1.0 / (p.sigma * p.sigma);
        normal += basis * basis.transpose() * w;
        rhs += basis * (p.value * w);
    }
    let cov = normal.try_inverse().ok_or_else(|| Error::Fit("phase points do not constrain the fringe".into()))?;
    let coef = cov * rhs;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if !(a > 0.0) {
        return Err(Error::Fit(format!("fitted baseline {a} is not positive")));
    }
    let r = b.hypot(c);
    let visibility = r / a;
    let propagate = |g: Vector3<f64>| (g.transpose() * cov * g)[0].max(0.0).sqrt();
    let visibility_err = if r > 0.0 {
        propagate(Vector3::new(-r / (a * a), b / (r * a), c / (r * a)))
    } else {
        (cov[(1, 1)] + cov[(2, 2)]).sqrt() / a
    };
    let phase_err = if r > 0.0 { propagate(Vector3::new(0.0, -c / (r * r), b / (r * r))) } else { std::f64::consts::PI };
    Ok(FringeFit {
        baseline: a,
        visibility,
        phase: c.atan2(b),
        baseline_err: cov[(0, 0)].sqrt(),
        visibility_err,
        phase_err,
        minimum: a - r,
    })
}

pub fn estimate_fringe(ledger: &CountLedger, phi_s: f64, subtract_accidentals: bool) -> Result<FringeFit> {
    fit_fringe(&fringe_points(ledger, phi_s, subtract_accidentals))
}

/// Correlations and `S` from the sixteen settings of `angles`.
pub fn estimate_bell(ledger: &CountLedger, angles: &BellAngles, subtract_accidentals: bool) -> Result<BellResult> {
    let mut e_values = Vec::with_capacity(4);
    for (phi_s, phi_i) in angles.pairs() {
        let mut counts = [0u64; 4];
        let mut accidentals = [0.0; 4];
        for (k, (s, i)) in quadruple(phi_s, phi_i).into_iter().enumerate() {
            let c = ledger.require(s, i)?;
            counts[k] = c.coincidences;
            if subtract_accidentals {
                accidentals[k] = c.accidentals();
            }
        }
        e_values.push(correlation_e_with_accidentals(counts, accidentals)?);
    }
    Ok(chsh_s([e_values[0], e_values[1], e_values[2], e_values[3]]))
}

/// Probability that both detectors click in one trial, given pair
/// probability `pair`, singles probabilities and background clicks.
pub fn joint_click_probability(pair: f64, singles_s: f64, singles_i: f64, b1: f64, b2: f64) -> f64 {
    let no_pair = 1.0 - pair;
    let lone_d1 = no_pair - (1.0 - singles_s) * (1.0 - b1);
    let lone_d2 = no_pair - (1.0 - singles_i) * (1.0 - b2);
    pair + lone_d1 * lone_d2 / no_pair
}

/// Ratio of the fringe minimum to the accidental floor `P(D1) P(D2)`.
pub fn floor_ratio(
    params: &InteractionParams,
    budget: &EfficiencyBudget,
    fringe: &FringeModel,
    background: &BackgroundModel,
) -> f64 {
    let (mu_85, mu_87) = (budget.mu_85(), budget.mu_87());
    let eta = params.eta;
    let minimum = params.chi_total.powi(2) / 4.0
        * (mu_85 * eta.cos().powi(2) + mu_87 * eta.sin().powi(2)
            - fringe.upsilon * (mu_85 * mu_87).sqrt() * (2.0 * eta).sin().abs());
    let (ps, pi) = (signal_singles_perturbative(params, budget), idler_singles_perturbative(params, budget));
    let (b1, b2) = background.click_probabilities();
    let p1 = 1.0 - (1.0 - ps) * (1.0 - b1);
    let p2 = 1.0 - (1.0 - pi) * (1.0 - b2);
    joint_click_probability(minimum, ps, pi, b1, b2) / (p1 * p2)
}

/// Coincidence window that puts the fringe minimum `target` times above the
/// accidental floor, found by bisection.
pub fn calibrate_window(
    params: &InteractionParams,
    budget: &EfficiencyBudget,
    fringe: &FringeModel,
    background: &BackgroundModel,
    target: f64,
) -> Result<f64> {
    let ratio = |w: f64| floor_ratio(params, budget, fringe, &background.with_window(w));
    let rate = background.rates_d1_hz.iter().sum::<f64>().max(background.rates_d2_hz.iter().sum::<f64>());
    if !(rate > 0.0) {
        return Err(Error::Config("window calibration needs non-zero background rates".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0 / rate);
    let (top, bottom) = (ratio(lo), ratio(hi));
    if !(target < top && target > bottom) {
        return Err(Error::Config(format!("floor ratio {target} is outside the reachable range ({bottom:.3}, {top:.3})")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Trials per setting for which `E` near `e_typical` has standard error
/// `sigma_e`, given the phase-averaged coincidence probability per trial.
pub fn trials_for_bell_error(e_typical: f64, sigma_e: f64, mean_coincidence: f64) -> u64 {
    let per_quadruple = crate::bell::implied_coincidences(e_typical, sigma_e);
    (per_quadruple / (4.0 * mean_coincidence)).ceil() as u64
}
