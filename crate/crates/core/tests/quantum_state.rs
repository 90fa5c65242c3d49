mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use proptest::prelude::*;

use isoqubit::ensemble::InteractionParams;
use isoqubit::error::Error;
use isoqubit::quantum::{
    apply_loss, build_entangled_state, build_entangled_state_with_bound, coincidence_rate_exact,
    coincidence_rate_perturbative, default_cutoff, detection_operator, fringe_visibility, Channel, DetectedState, EfficiencyBudget,
    FringeModel, IdlerProfiles, Mode, PhaseNoise, TruncatedFockState,
};

use common::{coincidence_reference, oracle_ket, signal_singles_reference, squeezed_full, squeezed_sector};

fn budget(e: [f64; 6]) -> EfficiencyBudget {
    EfficiencyBudget { eps_s_85: e[0], eps_s_87: e[1], eps_r_85: e[2], eps_r_87: e[3], eps_i_85: e[4], eps_i_87: e[5] }
}

#[test]
fn sector_exponential_agrees_with_full_space() {
    let (r_85, r_87) = (0.23, 0.11);
    let sector = squeezed_sector(r_85, r_87, 3);
    let full = squeezed_full(r_85, r_87, 3);
    for (occ, amp) in &full {
        let expected = if occ[0] == occ[2] && occ[1] == occ[3] { sector[(occ[0], occ[1])] } else { 0.0 };
        assert!((amp - expected).abs() < 1e-12, "{occ:?}: {amp} vs {expected}");
    }
    for n in 0..=3 {
        for k in 0..=3 {
            assert!((full.get(&[n, k, n, k]).copied().unwrap_or(0.0) - sector[(n, k)]).abs() < 1e-12);
        }
    }
}

#[test]
fn state_matches_matrix_exponential() {
    for (chi, eta) in [(0.05, FRAC_PI_4), (0.1, 0.3), (0.2, FRAC_PI_4), (0.2, 1.2)] {
        let p = InteractionParams::from_chi_eta(chi, eta).unwrap();
        let state = build_entangled_state_with_bound(&p, 6, 1e-6).unwrap();
        let reference = squeezed_sector(chi * eta.cos(), chi * eta.sin(), 16);
        let mut worst: f64 = 0.0;
        for n in 0..=6u8 {
            for k in 0..=6u8 {
                let a = state.amplitude([n, k, n, k]);
                worst = worst.max((a - Complex64::new(reference[(n.into(), k.into())], 0.0)).norm());
            }
        }
        assert!(worst <= 1e-9, "χ = {chi}, η = {eta}: sup-norm {worst:e}");
        // Nothing outside the pair sector.
        assert!(state.iter().all(|(o, _)| o[0] == o[2] && o[1] == o[3]));
    }
}

#[test]
fn single_pair_amplitude() {
    let p = InteractionParams::from_chi_eta(0.1, FRAC_PI_4).unwrap();
    let state = build_entangled_state(&p, 4).unwrap();
    let reference = squeezed_sector(0.1 * FRAC_PI_4.cos(), 0.1 * FRAC_PI_4.sin(), 16);
    assert!((state.amplitude([1, 0, 1, 0]).re - reference[(1, 0)]).abs() < 1e-10);
    let r = 0.1 * FRAC_PI_4.cos();
    assert!((state.amplitude([1, 0, 1, 0]).re - r.tanh() / (r.cosh() * r.cosh())).abs() < 1e-15);
}

#[test]
fn unmixed_source_leaves_other_species_empty() {
    let p = InteractionParams::from_chi_eta(0.2, 0.0).unwrap();
    let state = build_entangled_state_with_bound(&p, 6, 1e-6).unwrap();
    assert!(state.iter().all(|(o, _)| o[1] == 0 && o[3] == 0));
}

#[test]
fn truncation_is_reported() {
    let p = InteractionParams::from_chi_eta(1.0, 0.0).unwrap();
    assert!(matches!(build_entangled_state(&p, 4), Err(Error::Truncation { .. })));
    assert!(matches!(build_entangled_state(&p, 1), Err(Error::Precondition(_))));
}

#[test]
fn loss_limits() {
    let p = InteractionParams::from_chi_eta(0.3, 0.7).unwrap();
    let state = build_entangled_state_with_bound(&p, 8, 1e-6).unwrap();
    let rho = state.to_density();
    assert_eq!(apply_loss(&state, Mode::Spin87, 1.0).unwrap(), rho);
    let dark = apply_loss(&state, Mode::Signal85, 0.0).unwrap();
    assert!((dark.population(Mode::Signal85, 0) - dark.trace()).abs() < 1e-15);

    let single = TruncatedFockState::basis(2, [0, 1, 0, 0]);
    let thinned = apply_loss(&single, Mode::Signal87, 0.3).unwrap();
    assert!((thinned.population(Mode::Signal87, 1) - 0.3).abs() < 1e-15);
    assert!(matches!(apply_loss(&single, Mode::Signal87, 1.5), Err(Error::Domain(_))));
}

#[test]
fn mode_names_parse() {
    for m in Mode::ALL {
        assert_eq!(m.name().parse::<Mode>().unwrap(), m);
    }
    assert!(matches!("signal86".parse::<Mode>(), Err(Error::UnknownMode(_))));
}

#[test]
fn state_text_round_trip() {
    let p = InteractionParams::from_chi_eta(0.1, 0.4).unwrap();
    let state = build_entangled_state(&p, 4).unwrap();
    let back: TruncatedFockState = state.to_string().parse().unwrap();
    for (occ, a) in state.iter() {
        assert!((back.amplitude(*occ) - a).norm() < 1e-15);
    }
}

#[test]
fn detection_limits() {
    let dark = detection_operator(Channel::Idler, 0.4, &EfficiencyBudget::uniform(0.0));
    assert_eq!(dark.system_weight(), 0.0);
    assert!((dark.vacuum_weight() - 1.0).abs() < 1e-15);
    let op = detection_operator(Channel::Signal, PI, &EfficiencyBudget::uniform(1.0));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((op.system[0] - Complex64::new(0.0, -h)).norm() < 1e-15);
    assert!((op.system[1] - Complex64::new(0.0, h)).norm() < 1e-15);
}

#[test]
fn balanced_rate_extremes() {
    let chi = 0.05;
    let p = InteractionParams::from_chi_eta(chi, FRAC_PI_4).unwrap();
    let b = EfficiencyBudget::uniform(0.7);
    let mu = b.mu_85();
    let f = FringeModel::ideal();
    let top = coincidence_rate_perturbative(&p, &b, &f, 0.3, 0.3);
    assert!((top - chi * chi * mu / 2.0).abs() < 1e-18);
    assert!(coincidence_rate_perturbative(&p, &b, &f, 0.3, 0.3 + PI).abs() < 1e-18);

    let exact_null = coincidence_rate_exact(&build_entangled_state(&p, 6).unwrap(), &b, &f, 0.3, 0.3 + PI).unwrap();
    let reference_null = coincidence_reference(&oracle_ket(&p), &b, &f, 0.3, 0.3 + PI);
    assert!(exact_null > 0.0 && exact_null < chi.powi(4));
    assert!((exact_null - reference_null).abs() < 1e-15);
}

#[test]
fn balanced_rate_is_raised_cosine() {
    let p = InteractionParams::from_chi_eta(0.08, FRAC_PI_4).unwrap();
    let b = EfficiencyBudget::uniform(0.4);
    let f = FringeModel::new(0.86, 0.2).unwrap();
    for k in 0..12 {
        let phi_i = k as f64 * PI / 6.0;
        let rate = coincidence_rate_perturbative(&p, &b, &f, -0.4, phi_i);
        let expected = 0.08f64.powi(2) / 2.0 * b.mu_85() * FRAC_PI_4.cos().powi(2) * (1.0 + 0.86 * (phi_i + 0.4 + 0.2).cos());
        assert!((rate - expected).abs() < 1e-16);
    }
    let flat = FringeModel::new(0.0, 0.0).unwrap();
    let r0 = coincidence_rate_perturbative(&p, &b, &flat, 0.0, 0.0);
    assert!((coincidence_rate_perturbative(&p, &b, &flat, 0.0, 2.0) - r0).abs() < 1e-18);
}

#[test]
fn zero_coupling_has_no_rate() {
    let p = InteractionParams::from_chi_eta(0.0, FRAC_PI_4).unwrap();
    let b = EfficiencyBudget::uniform(0.5);
    assert_eq!(coincidence_rate_perturbative(&p, &b, &FringeModel::ideal(), 0.2, 1.0), 0.0);
}

#[test]
fn singles_match_scaled_operator_reference() {
    let p = InteractionParams::from_chi_eta(0.2, 0.5).unwrap();
    let b = budget([0.3, 0.8, 0.6, 0.5, 0.9, 0.4]);
    let state = build_entangled_state_with_bound(&p, default_cutoff(0.2, 1e-16).unwrap(), 1e-12).unwrap();
    let d = DetectedState::new(&state, &b).unwrap();
    let reference = signal_singles_reference(&oracle_ket(&p), &b, 1.1);
    assert!((d.signal_singles() - reference).abs() < 1e-12 * reference);
}

/// Largest `|exact − lowest order| / lowest order` over `draws`, divided by `χ²`.
fn relative_gap_constant(chi: f64, draws: &[(f64, f64, f64, f64, [f64; 6])]) -> f64 {
    draws
        .iter()
        .map(|&(phi_s, phi_i, eta, upsilon, e)| {
            let p = InteractionParams::from_chi_eta(chi, eta).unwrap();
            let b = budget(e);
            let f = FringeModel::new(upsilon, 0.0).unwrap();
            let exact = coincidence_reference(&oracle_ket(&p), &b, &f, phi_s, phi_i);
            let approx = coincidence_rate_perturbative(&p, &b, &f, phi_s, phi_i);
            (exact - approx).abs() / approx / (chi * chi)
        })
        .fold(0.0, f64::max)
}

#[test]
fn lowest_order_gap_scales_as_chi_squared() {
    let u = common::uniform_draws(17, 40 * 10);
    let draws: Vec<_> = u
        .chunks(10)
        .map(|c| {
            let e = [c[4], c[5], c[6], c[7], c[8], c[9]].map(|x| 0.1 + 0.9 * x);
            (2.0 * PI * c[0], 2.0 * PI * c[1], 0.1 + (FRAC_PI_2 - 0.2) * c[2], 0.8 * c[3], e)
        })
        .collect();
    let k: Vec<f64> = [0.02, 0.05, 0.1].iter().map(|&chi| relative_gap_constant(chi, &draws)).collect();
    assert!(k.iter().all(|v| v.is_finite() && *v > 0.0));
    // One constant bounds all three couplings.
    let bound = 1.05 * k[0];
    assert!(k.iter().all(|v| *v <= bound), "{k:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loss_composes(e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64, chi in 0.0..0.4f64, eta in 0.0..FRAC_PI_2, mode in 0usize..4) {
        let p = InteractionParams::from_chi_eta(chi, eta).unwrap();
        let state = build_entangled_state_with_bound(&p, 5, 1.0).unwrap();
        let m = Mode::ALL[mode];
        let twice = apply_loss(&state, m, e1).unwrap().apply_loss(m, e2).unwrap();
        let once = apply_loss(&state, m, e1 * e2).unwrap();
        for (key, v) in once.iter().chain(twice.iter()) {
            let diff = once.entry(key.0, key.1) - twice.entry(key.0, key.1);
            prop_assert!(diff.norm() < 1e-12, "{key:?}: {v}");
        }
    }

    #[test]
    fn orthogonal_settings_commute(phi in -10.0..10.0f64, e in prop::array::uniform6(0.0..=1.0f64)) {
        let b = budget(e);
        for channel in [Channel::Signal, Channel::Idler] {
            let op = detection_operator(channel, phi, &b);
            let perp = detection_operator(channel, phi + PI, &b);
            prop_assert!(op.commutator(&perp).norm() < 1e-12);
            prop_assert!((op.commutator(&op).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lowest_order_rate_is_non_negative(
        chi in 0.0..1.0f64, eta in 0.0..=FRAC_PI_2, upsilon in 0.0..=1.0f64, phi_0 in -PI..PI,
        phi_s in -PI..PI, phi_i in -PI..PI, e in prop::array::uniform6(0.0..=1.0f64),
    ) {
        let p = InteractionParams::from_chi_eta(chi, eta).unwrap();
        let f = FringeModel::new(upsilon, phi_0).unwrap();
        prop_assert!(coincidence_rate_perturbative(&p, &budget(e), &f, phi_s, phi_i) >= -1e-18);
    }

    #[test]
    fn exact_rate_matches_reference(
        chi in 0.0..0.2f64, eta in 0.0..=FRAC_PI_2, upsilon in 0.0..=1.0f64, phi_0 in -PI..PI,
        phi_s in -PI..PI, phi_i in -PI..PI, e in prop::array::uniform6(0.05..=1.0f64),
    ) {
        let p = InteractionParams::from_chi_eta(chi, eta).unwrap();
        let b = budget(e);
        let f = FringeModel::new(upsilon, phi_0).unwrap();
        let state = build_entangled_state_with_bound(&p, default_cutoff(chi, 1e-16).unwrap(), 1e-12).unwrap();
        let exact = coincidence_rate_exact(&state, &b, &f, phi_s, phi_i).unwrap();
        let reference = coincidence_reference(&oracle_ket(&p), &b, &f, phi_s, phi_i);
        prop_assert!((exact - reference).abs() <= 1e-10 * reference.abs().max(1e-12), "{exact} vs {reference}");
    }

    #[test]
    fn phase_noise_scales_overlap(vs in 0.0..2.0f64, vi in 0.0..2.0f64, delay in 0.0..40.0f64) {
        let profiles = IdlerProfiles::exponential(30.0, 30.0, delay, 0.1, 600.0).unwrap();
        let quiet = fringe_visibility(&PhaseNoise::default(), &profiles).unwrap();
        let noisy = fringe_visibility(&PhaseNoise { var_phi_s: vs, var_phi_i: vi }, &profiles).unwrap();
        prop_assert!((noisy.upsilon - quiet.upsilon * (-(vs + vi) / 2.0).exp()).abs() < 1e-14);
    }
}
