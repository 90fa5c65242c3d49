use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::ensemble::InteractionParams;
use crate::error::{Error, Result};

/// Default bound on `1 − Σ|amplitude|²` for generated states.
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-10;

/// Occupation numbers `(n_a85, n_a87, n_s85, n_s87)` of the two signal
/// frequency modes and the two spin-wave modes.
pub type Occupation = [u8; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Signal85 = 0,
    Signal87 = 1,
    Spin85 = 2,
    Spin87 = 3,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Signal85, Mode::Signal87, Mode::Spin85, Mode::Spin87];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Signal85 => "signal85",
            Mode::Signal87 => "signal87",
            Mode::Spin85 => "spin85",
            Mode::Spin87 => "spin87",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "signal85" | "a85" => Ok(Mode::Signal85),
            "signal87" | "a87" => Ok(Mode::Signal87),
            "spin85" | "s85" => Ok(Mode::Spin85),
            "spin87" | "s87" => Ok(Mode::Spin87),
            _ => Err(Error::UnknownMode(s.to_string())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pure state on the four protocol modes, each truncated at `n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedFockState {
    n_max: usize,
    amplitudes: BTreeMap<Occupation, Complex64>,
}

impl TruncatedFockState {
    pub fn vacuum(n_max: usize) -> Self {
        Self::basis(n_max, [0; 4])
    }

    pub fn basis(n_max: usize, occ: Occupation) -> Self {
        TruncatedFockState { n_max, amplitudes: BTreeMap::from([(occ, Complex64::new(1.0, 0.0))]) }
    }

    pub fn from_amplitudes(n_max: usize, amplitudes: impl IntoIterator<Item = (Occupation, Complex64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (occ, amp) in amplitudes {
            if occ.iter().any(|&n| usize::from(n) > n_max) {
                return Err(Error::Domain(format!("occupation {occ:?} exceeds n_max = {n_max}")));
            }
            if amp != Complex64::new(0.0, 0.0) {
                *map.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
            }
        }
        let state = TruncatedFockState { n_max, amplitudes: map };
        if state.norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("state norm {} exceeds 1", state.norm_sqr())));
        }
        Ok(state)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, occ: Occupation) -> Complex64 {
        self.amplitudes.get(&occ).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Probability lost to the truncation, `1 − Σ|amplitude|²`.
    pub fn leakage(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let mut entries = BTreeMap::new();
        for (&ket, &a) in &self.amplitudes {
            for (&bra, &b) in &self.amplitudes {
                entries.insert((ket, bra), a * b.conj());
            }
        }
        DensityMatrix { n_max: self.n_max, entries }
    }
}

/// Text dump: a `# n_max = N` header, then one `n_a85 n_a87 n_s85 n_s87 re im` row per amplitude.
impl fmt::Display for TruncatedFockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# n_max = {}", self.n_max)?;
        for (occ, amp) in &self.amplitudes {
            writeln!(f, "{} {} {} {} {:.17e} {:.17e}", occ[0], occ[1], occ[2], occ[3], amp.re, amp.im)?;
        }
        Ok(())
    }
}

impl FromStr for TruncatedFockState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n_max = None;
        let mut amps = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n_max =") {
                    n_max = Some(v.trim().parse().map_err(|_| Error::Domain(format!("bad header `{line}`")))?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::Domain(format!("expected 6 fields in `{line}`")));
            }
            let mut occ = [0u8; 4];
            for (slot, text) in occ.iter_mut().zip(&fields[..4]) {
                *slot = text.parse().map_err(|_| Error::Domain(format!("bad occupation in `{line}`")))?;
            }
            let re: f64 = fields[4].parse().map_err(|_| Error::Domain(format!("bad amplitude in `{line}`")))?;
            let im: f64 = fields[5].parse().map_err(|_| Error::Domain(format!("bad amplitude in `{line}`")))?;
            amps.push((occ, Complex64::new(re, im)));
        }
        let n_max = n_max.ok_or_else(|| Error::Domain("missing `# n_max = N` header".into()))?;
        TruncatedFockState::from_amplitudes(n_max, amps)
    }
}

/// Smallest per-mode cutoff whose worst-case leakage (all coupling in one
/// species) stays under `bound`: at least 4, or 6 once `χ > 0.1`.
pub fn default_cutoff(chi: f64, bound: f64) -> Result<usize> {
    let lambda = chi.tanh().powi(2);
    let mut n_max = if chi > 0.1 { 6 } else { 4 };
    while lambda.powi(n_max as i32 + 1) > bound {
        n_max += 1;
        if n_max > 40 {
            return Err(Error::Truncation { leakage: lambda.powi(41), bound, n_max: 40 });
        }
    }
    Ok(n_max)
}

/// Two-mode squeezed vacua of strengths `χ cos η` (⁸⁵Rb pair) and `χ sin η`
/// (⁸⁷Rb pair): the state `Û|vac⟩` truncated at `n_max` per mode.
pub fn build_entangled_state(params: &InteractionParams, n_max: usize) -> Result<TruncatedFockState> {
    build_entangled_state_with_bound(params, n_max, DEFAULT_LEAKAGE_BOUND)
}

pub fn build_entangled_state_with_bound(params: &InteractionParams, n_max: usize, bound: f64) -> Result<TruncatedFockState> {
    if n_max < 2 {
        return Err(Error::Precondition(format!("n_max must be at least 2, got {n_max}")));
    }
    if n_max > usize::from(u8::MAX) {
        return Err(Error::Precondition(format!("n_max = {n_max} is too large")));
    }
    if !params.chi_total.is_finite() {
        return Err(Error::Domain("coupling must be finite".into()));
    }
    let (r_85, r_87) = params.squeezing();
    let pair = |r: f64| -> Vec<f64> {
        let (t, c) = (r.tanh(), r.cosh());
        (0..=n_max).map(|n| t.powi(n as i32) / c).collect()
    };
    let (amp_85, amp_87) = (pair(r_85), pair(r_87));
    let mut amplitudes = BTreeMap::new();
    for (n, &x) in amp_85.iter().enumerate() {
        for (k, &y) in amp_87.iter().enumerate() {
            let value = x * y;
            if value != 0.0 {
                amplitudes.insert([n as u8, k as u8, n as u8, k as u8], Complex64::new(value, 0.0));
            }
        }
    }
    let state = TruncatedFockState { n_max, amplitudes };
    let leakage = state.leakage();
    if leakage > bound {
        return Err(Error::Truncation { leakage, bound, n_max });
    }
    Ok(state)
}

/// Density operator over the truncated basis, stored sparsely as
/// `(ket, bra) → ρ_{ket,bra}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_max: usize,
    entries: BTreeMap<(Occupation, Occupation), Complex64>,
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

impl DensityMatrix {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, ket: Occupation, bra: Occupation) -> Complex64 {
        self.entries.get(&(ket, bra)).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Occupation, Occupation), &Complex64)> {
        self.entries.iter()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|((k, b), _)| k == b).map(|(_, v)| v.re).sum()
    }

    /// Probability of finding `n` quanta in `mode`.
    pub fn population(&self, mode: Mode, n: u8) -> f64 {
        let i = mode.index();
        self.entries
            .iter()
            .filter(|((k, b), _)| k == b && k[i] == n)
            .map(|(_, v)| v.re)
            .sum()
    }

    /// Beam-splitter loss on one mode with transmission `eps`:
    /// `|n⟩⟨m| → Σ_k sqrt(C(n,k) C(m,k)) ε^((n+m)/2 − k) (1−ε)^k |n−k⟩⟨m−k|`.
    pub fn apply_loss(&self, mode: Mode, eps: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Domain(format!("transmission {eps} is outside [0, 1]")));
        }
        let i = mode.index();
        let sqrt_eps = eps.sqrt();
        let mut out: BTreeMap<(Occupation, Occupation), Complex64> = BTreeMap::new();
        for (&(ket, bra), &value) in &self.entries {
            let (n, m) = (ket[i], bra[i]);
            for k in 0..=n.min(m) {
                let weight = (binomial(n, k) * binomial(m, k)).sqrt()
                    * sqrt_eps.powi(i32::from(n + m - 2 * k))
                    * (1.0 - eps).powi(i32::from(k));
                if weight == 0.0 {
                    continue;
                }
                let (mut new_ket, mut new_bra) = (ket, bra);
                new_ket[i] -= k;
                new_bra[i] -= k;
                *out.entry((new_ket, new_bra)).or_default() += value * weight;
            }
        }
        out.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Ok(DensityMatrix { n_max: self.n_max, entries: out })
    }

    /// `Tr[ρ (Π a†_c) (Π a_a)]` for the listed creation and annihilation modes.
    pub fn normal_ordered(&self, creators: &[Mode], annihilators: &[Mode]) -> Complex64 {
        let lower = |occ: Occupation, modes: &[Mode]| -> Option<(f64, Occupation)> {
            let mut occ = occ;
            let mut coef = 1.0;
            for m in modes {
                let n = occ[m.index()];
                if n == 0 {
                    return None;
                }
                coef *= f64::from(n).sqrt();
                occ[m.index()] = n - 1;
            }
            Some((coef, occ))
        };
        let mut total = Complex64::new(0.0, 0.0);
        for (&(ket, bra), &value) in &self.entries {
            let Some((ck, k)) = lower(ket, annihilators) else { continue };
            let Some((cb, b)) = lower(bra, creators) else { continue };
            if k == b {
                total += value * (ck * cb);
            }
        }
        total
    }
}

/// Loss channel on one mode of a pure state.
pub fn apply_loss(state: &TruncatedFockState, mode: Mode, eps: f64) -> Result<DensityMatrix> {
    state.to_density().apply_loss(mode, eps)
}
