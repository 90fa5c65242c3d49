mod common;

use proptest::prelude::*;

use isoqubit::angular::{
    branching_angle, clebsch_gordan, coupling_product, spin_wave_weights, CouplingTable, HalfInt, Helicity,
};
use isoqubit::error::Error;

use common::{cg_reference, coupling_reference, rb85, rb87};

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn cg(t: [i32; 6]) -> f64 {
    clebsch_gordan(h(t[0]), h(t[1]), h(t[2]), h(t[3]), h(t[4]), h(t[5])).unwrap()
}

#[test]
fn reference_values() {
    assert_eq!(cg([1, 1, 2, 1, 1, 2]), 1.0);
    assert_eq!(cg([6, 2, 6, 0, 0, 0]), 0.0);
    assert_eq!(cg([4, 2, 6, 4, 2, 6]), 1.0);
    let v = cg([2, 2, 2, 2, 0, 2]);
    assert!((v - cg_reference(2, 2, 2, 0, 2, 2)).abs() < 1e-15);
    assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
}

#[test]
fn coupling_tables_match_reference() {
    for iso in [rb85(), rb87()] {
        let table = CouplingTable::for_isotope(&iso).unwrap();
        for m in iso.f_a.projections() {
            for alpha in Helicity::BOTH {
                let expected = coupling_reference(&iso, i64::from(m.twice()), i64::from(alpha.value()));
                assert!((table.x(m, alpha) - expected).abs() < 1e-12, "{:?} m = {m}", iso.id);
            }
        }
    }
}

#[test]
fn rb87_has_four_nonzero_products() {
    // ⟨2 0; 1 0 | 2 0⟩ = 0 removes m = 0, and F_b = 1 allows one helicity elsewhere.
    let table = CouplingTable::for_isotope(&rb87()).unwrap();
    let nonzero: Vec<_> = table.x_values.iter().filter(|(_, x)| **x != 0.0).map(|(k, _)| *k).collect();
    let expected = vec![(h(-4), Helicity::Minus), (h(-2), Helicity::Minus), (h(2), Helicity::Plus), (h(4), Helicity::Plus)];
    assert_eq!(nonzero, expected);
}

#[test]
fn branching_is_even_for_both_isotopes() {
    for iso in [rb85(), rb87()] {
        let c = branching_angle(&iso).unwrap();
        assert!((c - 0.5).abs() < 1e-12, "{:?}: {c}", iso.id);
    }
}

#[test]
fn selection_rules() {
    let iso = rb85();
    assert!(matches!(coupling_product(&iso, h(8), Helicity::Plus), Err(Error::Precondition(_))));
    // |m − α| > F_b leaves no lower sublevel.
    assert_eq!(coupling_product(&iso, h(6), Helicity::Minus).unwrap(), 0.0);
    assert_eq!(coupling_product(&iso, h(-6), Helicity::Plus).unwrap(), 0.0);
}

#[test]
fn weights_match_reference_ratios() {
    let iso = rb87();
    let weights = spin_wave_weights(&iso, Helicity::Plus).unwrap();
    let raw: Vec<(HalfInt, f64)> =
        iso.f_a.projections().map(|m| (m, coupling_reference(&iso, i64::from(m.twice()), 1))).collect();
    let norm = raw.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    for (m, x) in raw {
        assert!((weights[&m] - x / norm).abs() < 1e-12);
    }
    for iso in [rb85(), rb87()] {
        for alpha in Helicity::BOTH {
            let w = spin_wave_weights(&iso, alpha).unwrap();
            assert!((w.values().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn one_sided_table_branches_fully() {
    let table = CouplingTable::from_values([((h(0), Helicity::Minus), 0.4), ((h(2), Helicity::Plus), 0.0)]);
    assert_eq!(table.cos2_theta().unwrap(), 1.0);
    assert_eq!(table.weights(Helicity::Minus).unwrap()[&h(0)], 1.0);
}

/// Twice-values `(j1, j2, m1, m2)` with `j ≤ 7/2` and legal projections.
fn pair_of_spins() -> impl Strategy<Value = (i32, i32, i32, i32)> {
    (0..=7i32, 0..=7i32).prop_flat_map(|(j1, j2)| {
        (Just(j1), Just(j2), (0..=j1).prop_map(move |k| 2 * k - j1), (0..=j2).prop_map(move |k| 2 * k - j2))
    })
}

proptest! {
    #[test]
    fn orthogonality(j1 in 0..=6i32, j2 in 0..=6i32, pick in any::<(u16, u16, u16, u16)>()) {
        let lo = (j1 - j2).abs();
        let totals: Vec<i32> = (lo..=j1 + j2).step_by(2).collect();
        let j = totals[pick.0 as usize % totals.len()];
        let jp = totals[pick.1 as usize % totals.len()];
        let m = 2 * (pick.2 as i32 % (j + 1)) - j;
        let mp = 2 * (pick.3 as i32 % (jp + 1)) - jp;
        let mut sum = 0.0;
        for m1 in h(j1).projections() {
            for m2 in h(j2).projections() {
                sum += cg([j1, j2, j, m1.twice(), m2.twice(), m]) * cg([j1, j2, jp, m1.twice(), m2.twice(), mp]);
            }
        }
        let expected = if j == jp && m == mp { 1.0 } else { 0.0 };
        prop_assert!((sum - expected).abs() < 1e-12, "j = {j}, j' = {jp}, m = {m}, m' = {mp}: {sum}");
    }

    #[test]
    fn reflection_symmetry((j1, j2, m1, m2) in pair_of_spins(), pick in any::<u16>()) {
        let lo = (j1 - j2).abs();
        let totals: Vec<i32> = (lo..=j1 + j2).step_by(2).collect();
        let j = totals[pick as usize % totals.len()];
        let m = m1 + m2;
        prop_assume!(m.abs() <= j);
        let sign = if ((j1 + j2 - j) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let forward = cg([j1, j2, j, m1, m2, m]);
        let mirrored = cg([j1, j2, j, -m1, -m2, -m]);
        prop_assert!((forward - sign * mirrored).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_direct_sum((j1, j2, m1, m2) in pair_of_spins(), j in 0..=14i32) {
        let m = m1 + m2;
        prop_assume!((j1 + j2 + j) % 2 == 0 && m.abs() <= j);
        let expected = cg_reference(j1.into(), m1.into(), j2.into(), m2.into(), j.into(), m.into());
        prop_assert!((cg([j1, j2, j, m1, m2, m]) - expected).abs() < 1e-12);
    }

    #[test]
    fn weights_ignore_overall_scale(xs in prop::collection::vec(-1.0..1.0f64, 5), scale in 0.01..100.0f64) {
        prop_assume!(xs.iter().any(|x| x.abs() > 1e-3));
        let entries = |s: f64| xs.iter().enumerate().map(move |(k, &x)| ((h(2 * k as i32 - 4), Helicity::Plus), s * x));
        let a = CouplingTable::from_values(entries(1.0)).weights(Helicity::Plus).unwrap();
        let b = CouplingTable::from_values(entries(scale)).weights(Helicity::Plus).unwrap();
        for (m, w) in &a {
            prop_assert!((w - b[m]).abs() < 1e-12);
        }
        let table = CouplingTable::from_values(entries(scale).chain(entries(0.5 * scale).map(|((m, _), x)| ((m, Helicity::Minus), x))));
        let c = table.cos2_theta().unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }
}
