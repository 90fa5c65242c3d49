//! Reference implementations used only by the tests. None of them share code
//! with the library beyond its public types.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isoqubit::ensemble::{IsotopeId, IsotopeSpec, InteractionParams};
use isoqubit::quantum::{EfficiencyBudget, FringeModel};

pub fn factorial(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Clebsch-Gordan coefficient from the closed-form sum, all in `f64`.
/// Arguments are twice the physical values.
pub fn cg_reference(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> f64 {
    if tm1 + tm2 != tm || tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return 0.0;
    }
    let h = |x: i64| x / 2;
    let delta = factorial(h(tj1 + tj2 - tj)) * factorial(h(tj1 - tj2 + tj)) * factorial(h(-tj1 + tj2 + tj))
        / factorial(h(tj1 + tj2 + tj) + 1);
    let root = ((tj + 1) as f64
        * delta
        * factorial(h(tj1 + tm1))
        * factorial(h(tj1 - tm1))
        * factorial(h(tj2 + tm2))
        * factorial(h(tj2 - tm2))
        * factorial(h(tj + tm))
        * factorial(h(tj - tm)))
    .sqrt();
    let mut sum = 0.0;
    for z in 0..=h(tj1 + tj2 + tj) {
        let args = [
            z,
            h(tj1 + tj2 - tj) - z,
            h(tj1 - tm1) - z,
            h(tj2 + tm2) - z,
            h(tj - tj2 + tm1) + z,
            h(tj - tj1 - tm2) + z,
        ];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let sign = if z % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / args.iter().map(|&a| factorial(a)).product::<f64>();
    }
    root * sum
}

/// `X_{m,α}` from the reference coefficients; `m` and `α` are twice-values.
pub fn coupling_reference(iso: &IsotopeSpec, tm: i64, alpha: i64) -> f64 {
    let (fa, fb, fc) = (i64::from(iso.f_a.twice()), i64::from(iso.f_b.twice()), i64::from(iso.f_c.twice()));
    cg_reference(fa, tm, 2, 0, fc, tm) * cg_reference(fb, tm - 2 * alpha, 2, 2 * alpha, fc, tm)
}

/// Index of `|n₈₅ n₈₇⟩` inside the pair sector where every signal photon is
/// matched by a spin wave of the same species.
fn sector_index(n_max: usize, n: usize, k: usize) -> usize {
    n * (n_max + 1) + k
}

/// `exp[r₈₅(a₈₅†s₈₅† − a₈₅s₈₅) + r₈₇(a₈₇†s₈₇† − a₈₇s₈₇)]|vac⟩` by a dense
/// matrix exponential on the pair sector, which the generator never leaves.
/// Entry `(n, k)` is the amplitude of `|n, k, n, k⟩`.
pub fn squeezed_sector(r_85: f64, r_87: f64, n_max: usize) -> DMatrix<f64> {
    let dim = (n_max + 1) * (n_max + 1);
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..=n_max {
        for k in 0..=n_max {
            let from = sector_index(n_max, n, k);
            if n < n_max {
                let to = sector_index(n_max, n + 1, k);
                g[(to, from)] += r_85 * (n + 1) as f64;
                g[(from, to)] -= r_85 * (n + 1) as f64;
            }
            if k < n_max {
                let to = sector_index(n_max, n, k + 1);
                g[(to, from)] += r_87 * (k + 1) as f64;
                g[(from, to)] -= r_87 * (k + 1) as f64;
            }
        }
    }
    let column = g.exp().column(0).into_owned();
    DMatrix::from_fn(n_max + 1, n_max + 1, |n, k| column[sector_index(n_max, n, k)])
}

/// The same exponential on the full four-mode space truncated at `n_max`
/// photons per mode, returned as a map over occupations with non-negligible
/// amplitude.
pub fn squeezed_full(r_85: f64, r_87: f64, n_max: usize) -> BTreeMap<[usize; 4], f64> {
    let d = n_max + 1;
    let lower = DMatrix::<f64>::from_fn(d, d, |i, j| if i + 1 == j { (j as f64).sqrt() } else { 0.0 });
    let eye = DMatrix::<f64>::identity(d, d);
    let embed = |mode: usize| -> DMatrix<f64> {
        (0..4).fold(DMatrix::<f64>::identity(1, 1), |acc, m| acc.kronecker(if m == mode { &lower } else { &eye }))
    };
    let a: Vec<DMatrix<f64>> = (0..4).map(embed).collect();
    let pair = |x: &DMatrix<f64>, y: &DMatrix<f64>| x.transpose() * y.transpose() - x * y;
    // Mode order: a₈₅, a₈₇, s₈₅, s₈₇.
    let g = pair(&a[0], &a[2]) * r_85 + pair(&a[1], &a[3]) * r_87;
    let column = g.exp().column(0).into_owned();
    let mut out = BTreeMap::new();
    for (idx, &v) in column.iter().enumerate() {
        if v.abs() > 1e-300 {
            let occ = [idx / (d * d * d), (idx / (d * d)) % d, (idx / d) % d, idx % d];
            out.insert(occ, v);
        }
    }
    out
}

/// Pure four-mode state stored as occupation → amplitude.
pub type Ket = BTreeMap<[usize; 4], Complex64>;

pub fn sector_to_ket(sector: &DMatrix<f64>) -> Ket {
    let mut ket = Ket::new();
    for n in 0..sector.nrows() {
        for k in 0..sector.ncols() {
            ket.insert([n, k, n, k], Complex64::new(sector[(n, k)], 0.0));
        }
    }
    ket
}

fn lower(ket: &Ket, mode: usize) -> Ket {
    let mut out = Ket::new();
    for (occ, &amp) in ket {
        if occ[mode] > 0 {
            let mut o = *occ;
            o[mode] -= 1;
            *out.entry(o).or_default() += amp * (occ[mode] as f64).sqrt();
        }
    }
    out
}

fn inner(bra: &Ket, ket: &Ket) -> Complex64 {
    bra.iter().filter_map(|(occ, b)| ket.get(occ).map(|k| b.conj() * k)).sum()
}

fn combiner(sign: f64, phi: f64) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [Complex64::from_polar(h, sign * phi / 2.0), Complex64::from_polar(h, -sign * phi / 2.0)]
}

/// Coincidence probability `‖ψ_i ψ_s |Ψ⟩‖²` from efficiency-scaled field
/// operators acting on the pure state; vacuum ports drop out because they
/// annihilate the vacuum. The two idler temporal modes overlap by `Υe^{−iφ₀}`.
pub fn coincidence_reference(
    ket: &Ket,
    budget: &EfficiencyBudget,
    fringe: &FringeModel,
    phi_s: f64,
    phi_i: f64,
) -> f64 {
    let ids = [IsotopeId::Rb85, IsotopeId::Rb87];
    let c = combiner(-1.0, phi_s);
    let d = combiner(1.0, phi_i);
    let w = Complex64::from_polar(fringe.upsilon, -fringe.phi_0);
    let mut branches = Vec::new();
    for idler in 0..2 {
        for signal in 0..2 {
            let weight = d[idler] * c[signal] * (budget.eps_spin(ids[idler]) * budget.eps_s(ids[signal])).sqrt();
            branches.push((idler, weight, lower(&lower(ket, signal), 2 + idler)));
        }
    }
    let mut total = Complex64::default();
    for (bi, bw, bv) in &branches {
        for (ki, kw, kv) in &branches {
            let temporal = match (bi, ki) {
                (0, 1) => w,
                (1, 0) => w.conj(),
                _ => Complex64::new(1.0, 0.0),
            };
            total += bw.conj() * kw * temporal * inner(bv, kv);
        }
    }
    total.re
}

/// Signal click probability `‖ψ_s |Ψ⟩‖²`.
pub fn signal_singles_reference(ket: &Ket, budget: &EfficiencyBudget, phi_s: f64) -> f64 {
    let ids = [IsotopeId::Rb85, IsotopeId::Rb87];
    let c = combiner(-1.0, phi_s);
    let mut field = Ket::new();
    for (k, id) in ids.iter().enumerate() {
        for (occ, amp) in lower(ket, k) {
            *field.entry(occ).or_default() += c[k] * budget.eps_s(*id).sqrt() * amp;
        }
    }
    inner(&field, &field).re
}

/// Dense-oracle state of `params`, with a cutoff at which the discarded
/// tail `(tanh²χ)^(N+1)` is below `1e-18`.
pub fn oracle_ket(params: &InteractionParams) -> Ket {
    let (r_85, r_87) = (params.chi_total * params.eta.cos(), params.chi_total * params.eta.sin());
    let lambda = params.chi_total.tanh().powi(2);
    let n_max = (4..40).find(|&n| lambda.powi(n as i32 + 1) < 1e-18).unwrap_or(40);
    sector_to_ket(&squeezed_sector(r_85, r_87, n_max))
}

/// Plain Monte Carlo estimate of `E[f(r)]` for `r` drawn from an axis-aligned
/// Gaussian cloud, with its standard error.
pub fn gaussian_expectation<F: Fn([f64; 3]) -> f64>(sigma: [f64; 3], center: [f64; 3], samples: usize, seed: u64, f: F) -> (f64, f64) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let mut r = [0.0; 3];
        for k in 0..3 {
            let z: f64 = StandardNormal.sample(&mut rng);
            r[k] = center[k] + sigma[k] * z;
        }
        let v = f(r);
        sum += v;
        sum2 += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    (mean, ((sum2 / n - mean * mean) / n).sqrt())
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample statistic at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

pub fn uniform_draws(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<f64>()).collect()
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

fn rb(id: IsotopeId, f_a: i32, f_b: i32, a_mhz: f64, b_mhz: f64, c_mhz: f64, n_atoms: f64) -> IsotopeSpec {
    use isoqubit::angular::HalfInt;
    use isoqubit::ensemble::mhz_to_angular;
    IsotopeSpec {
        id,
        f_a: HalfInt::from_int(f_a),
        f_b: HalfInt::from_int(f_b),
        f_c: HalfInt::from_int(f_a),
        omega_a: mhz_to_angular(a_mhz),
        omega_b: mhz_to_angular(b_mhz),
        omega_c: mhz_to_angular(c_mhz),
        d_ca: 2.537e-29,
        d_cb: 2.537e-29,
        n_atoms,
    }
}

/// ⁸⁵Rb with hyperfine levels relative to the 5S₁/₂ centroid (MHz).
pub fn rb85() -> IsotopeSpec {
    rb(IsotopeId::Rb85, 3, 2, 1264.888516, -1770.843922, 377107536.349, 2.0e8)
}

/// ⁸⁷Rb with hyperfine levels relative to the 5S₁/₂ centroid (MHz).
pub fn rb87() -> IsotopeSpec {
    rb(IsotopeId::Rb87, 2, 1, 2563.005979, -4271.676631, 377107768.813, 8.0e7)
}

pub fn reference_geometry() -> isoqubit::ensemble::BeamGeometry {
    use isoqubit::ensemble::{BeamGeometry, CloudProfile};
    use nalgebra::Vector3;
    BeamGeometry {
        write_waist: 150e-6,
        signal_waist: 100e-6,
        focus: Vector3::zeros(),
        write_dir: Vector3::new(0.0, 0.0, 1.0),
        signal_dir: Vector3::new(0.0, 0.0349, 0.9994),
        read_dir: Vector3::new(0.0, 0.0, -1.0),
        cloud_85: CloudProfile { sigma: Vector3::new(0.5e-3, 0.5e-3, 0.5e-3), center: Vector3::zeros() },
        cloud_87: CloudProfile { sigma: Vector3::new(0.4e-3, 0.4e-3, 0.4e-3), center: Vector3::zeros() },
    }
}

pub fn reference_write(n_w: f64) -> isoqubit::ensemble::WriteConfig {
    use isoqubit::ensemble::{mhz_to_angular, PulseProfile, WriteConfig};
    WriteConfig {
        pulse_duration: 150e-9,
        pulse: PulseProfile::flat(150e-9, 301),
        detuning_85: mhz_to_angular(-10.0),
        detuning_87: mhz_to_angular(-10.0),
        n_w_85: n_w,
        n_w_87: n_w,
    }
}
