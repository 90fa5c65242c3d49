//! Angular-momentum coupling algebra.
//!
//! Clebsch-Gordan coefficients follow the Condon-Shortley phase convention:
//! `⟨j1 j1; j2 (J − j1) | J J⟩ > 0`. They are evaluated with the Racah sum in
//! exact rational arithmetic; the only floating-point step is one final
//! square root, so selection-rule zeros come out exactly zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ensemble::{IsotopeId, IsotopeSpec};
use crate::error::{Error, Result};

/// An integer or half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// `2j + 1`, the multiplicity of a level with this angular momentum.
    pub fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// Whether `m` is a legal projection of `self` (same parity, |m| ≤ j).
    pub fn admits_projection(self, m: HalfInt) -> bool {
        self.0 >= 0 && (self.0 - m.0).rem_euclid(2) == 0 && m.0.abs() <= self.0
    }

    /// The projections `−j, −j + 1, …, j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j).map(move |i| HalfInt(2 * i - j))
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: Self) -> Self {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: Self) -> Self {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> Self {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl std::str::FromStr for HalfInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("`{s}` is not an integer or half-integer"));
        match s.split_once('/') {
            Some((num, "2")) => num.trim().parse::<i32>().map(HalfInt).map_err(|_| bad()),
            Some(_) => Err(bad()),
            None => s.parse::<i32>().map(HalfInt::from_int).map_err(|_| bad()),
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_integer() {
            serializer.serialize_i64(i64::from(self.0 / 2))
        } else {
            serializer.collect_str(self)
        }
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i32),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(v) => Ok(HalfInt::from_int(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    (2..=n.max(1)).fold(BigInt::one(), |acc, k| acc * k)
}

/// `(j1 + j2 − j3)` style combination of twice-values, as an integer, if it is one.
fn half_sum(twice: i32) -> Option<i32> {
    (twice % 2 == 0).then_some(twice / 2)
}

/// `⟨j1 m1; j2 m2 | j3 m3⟩` in the Condon-Shortley convention.
///
/// Returns exactly `0.0` when `m1 + m2 ≠ m3` or the triangle condition fails.
/// Mismatched parity between a projection and its angular momentum, a negative
/// angular momentum, or a projection outside `[−j, j]` is a domain error.
pub fn clebsch_gordan(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if j.twice() < 0 {
            return Err(Error::Domain(format!("negative angular momentum {j}")));
        }
        if (j.twice() - m.twice()).rem_euclid(2) != 0 {
            return Err(Error::Domain(format!("projection {m} has the wrong parity for j = {j}")));
        }
        if m.twice().abs() > j.twice() {
            return Err(Error::Domain(format!("projection {m} exceeds j = {j}")));
        }
    }
    if m1 + m2 != m3 {
        return Ok(0.0);
    }
    let (t1, t2, t3) = (j1.twice(), j2.twice(), j3.twice());
    if t3 < (t1 - t2).abs() || t3 > t1 + t2 {
        return Ok(0.0);
    }
    let Some(sum_j) = half_sum(t1 + t2 + t3) else {
        return Ok(0.0);
    };
    // All of these are integers once the parity checks above have passed.
    let a = half_sum(t1 + t2 - t3).expect("parity");
    let b = half_sum(t3 + t1 - t2).expect("parity");
    let c = half_sum(t3 - t1 + t2).expect("parity");
    let j3_plus_m3 = half_sum(t3 + m3.twice()).expect("parity");
    let j3_minus_m3 = half_sum(t3 - m3.twice()).expect("parity");
    let j1_plus_m1 = half_sum(t1 + m1.twice()).expect("parity");
    let j1_minus_m1 = half_sum(t1 - m1.twice()).expect("parity");
    let j2_plus_m2 = half_sum(t2 + m2.twice()).expect("parity");
    let j2_minus_m2 = half_sum(t2 - m2.twice()).expect("parity");
    let d = half_sum(t3 - t2 + m1.twice()).expect("parity");
    let e = half_sum(t3 - t1 - m2.twice()).expect("parity");

    let prefactor_num = BigInt::from(t3 + 1)
        * factorial(b)
        * factorial(c)
        * factorial(a)
        * factorial(j3_plus_m3)
        * factorial(j3_minus_m3)
        * factorial(j1_minus_m1)
        * factorial(j1_plus_m1)
        * factorial(j2_minus_m2)
        * factorial(j2_plus_m2);
    let prefactor = BigRational::new(prefactor_num, factorial(sum_j + 1));

    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(j1_minus_m1).min(j2_plus_m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(a - k)
            * factorial(j1_minus_m1 - k)
            * factorial(j2_plus_m2 - k)
            * factorial(d + k)
            * factorial(e + k);
        let term = BigRational::new(BigInt::one(), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return Ok(0.0);
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let squared = prefactor * &sum * &sum;
    let magnitude = squared
        .to_f64()
        .ok_or_else(|| Error::Numerical("Clebsch-Gordan coefficient overflowed f64".into()))?
        .sqrt();
    Ok(sign * magnitude)
}

/// Spherical component index α = ±1 of the spin wave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Helicity {
    Minus,
    Plus,
}

impl Helicity {
    pub const BOTH: [Helicity; 2] = [Helicity::Minus, Helicity::Plus];

    pub fn value(self) -> i32 {
        match self {
            Helicity::Minus => -1,
            Helicity::Plus => 1,
        }
    }

    fn as_half(self) -> HalfInt {
        HalfInt::from_int(self.value())
    }
}

/// `X_{m,α} = ⟨F_a m; 1 0 | F_c m⟩ ⟨F_b (m − α); 1 α | F_c m⟩`.
pub fn coupling_product(iso: &IsotopeSpec, m: HalfInt, alpha: Helicity) -> Result<f64> {
    if !iso.f_a.admits_projection(m) {
        return Err(Error::Precondition(format!(
            "projection m = {m} is not allowed for F_a = {}",
            iso.f_a
        )));
    }
    let one = HalfInt::from_int(1);
    let first = clebsch_gordan(iso.f_a, one, iso.f_c, m, HalfInt::ZERO, m)?;
    let lower = m - alpha.as_half();
    if !iso.f_b.admits_projection(lower) {
        return Ok(0.0);
    }
    let second = clebsch_gordan(iso.f_b, one, iso.f_c, lower, alpha.as_half(), m)?;
    Ok(first * second)
}

/// Coupling products `X_{m,α}` for one species, with the branching angle and
/// normalized spin-wave weights derived from them.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    pub isotope_id: Option<IsotopeId>,
    pub x_values: BTreeMap<(HalfInt, Helicity), f64>,
}

impl CouplingTable {
    pub fn for_isotope(iso: &IsotopeSpec) -> Result<Self> {
        let mut x_values = BTreeMap::new();
        for m in iso.f_a.projections() {
            for alpha in Helicity::BOTH {
                x_values.insert((m, alpha), coupling_product(iso, m, alpha)?);
            }
        }
        Ok(CouplingTable { isotope_id: Some(iso.id), x_values })
    }

    /// A table from raw values, for configurations that no real level scheme produces.
    pub fn from_values(values: impl IntoIterator<Item = ((HalfInt, Helicity), f64)>) -> Self {
        CouplingTable { isotope_id: None, x_values: values.into_iter().collect() }
    }

    pub fn x(&self, m: HalfInt, alpha: Helicity) -> f64 {
        self.x_values.get(&(m, alpha)).copied().unwrap_or(0.0)
    }

    /// `Σ_m X²_{m,α}`.
    pub fn norm_squared(&self, alpha: Helicity) -> f64 {
        self.x_values
            .iter()
            .filter(|((_, a), _)| *a == alpha)
            .map(|(_, x)| x * x)
            .sum()
    }

    /// `Σ_{α,m} X²_{m,α}`.
    pub fn total_norm_squared(&self) -> f64 {
        Helicity::BOTH.iter().map(|&a| self.norm_squared(a)).sum()
    }

    /// `cos²θ = Σ_m X²_{m,−1} / Σ_{α,m} X²_{m,α}`.
    pub fn cos2_theta(&self) -> Result<f64> {
        let total = self.total_norm_squared();
        if total <= 0.0 {
            return Err(Error::Degenerate("every coupling product X_{m,α} vanishes".into()));
        }
        Ok(self.norm_squared(Helicity::Minus) / total)
    }

    /// `X_{m,α} / sqrt(Σ_m X²_{m,α})` for every `m` in the table.
    pub fn weights(&self, alpha: Helicity) -> Result<BTreeMap<HalfInt, f64>> {
        let norm = self.norm_squared(alpha).sqrt();
        if norm <= 0.0 {
            return Err(Error::Degenerate(format!(
                "spin-wave component α = {} has zero norm",
                alpha.value()
            )));
        }
        Ok(self
            .x_values
            .iter()
            .filter(|((_, a), _)| *a == alpha)
            .map(|(&(m, _), &x)| (m, x / norm))
            .collect())
    }
}

/// `cos²θ_ν`, the weight of the α = −1 spin-wave component.
pub fn branching_angle(iso: &IsotopeSpec) -> Result<f64> {
    CouplingTable::for_isotope(iso)?.cos2_theta()
}

pub fn spin_wave_weights(iso: &IsotopeSpec, alpha: Helicity) -> Result<BTreeMap<HalfInt, f64>> {
    CouplingTable::for_isotope(iso)?.weights(alpha)
}
