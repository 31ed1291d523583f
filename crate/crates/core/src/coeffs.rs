//! Verblunsky coefficients, the companion `ρ = √(1 − |α|²)`, and periodic
//! coefficient sequences.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerblunskyValue(Complex64);

impl VerblunskyValue {
    pub fn new(value: Complex64) -> Result<Self> {
        if !value.is_finite() || value.norm() >= 1.0 {
            return Err(Error::OutsideDisk { value });
        }
        Ok(VerblunskyValue(value))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn rho(self) -> SchurRadius {
        rho(self)
    }
}

/// `ρ = √(1 − |α|²)`, always in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SchurRadius(f64);

impl SchurRadius {
    pub fn get(self) -> f64 {
        self.0
    }
}

pub fn rho(alpha: VerblunskyValue) -> SchurRadius {
    SchurRadius(rho_of(alpha.0))
}

/// `ρ` for a raw complex value already known to lie in the disk.
#[inline]
pub(crate) fn rho_of(a: Complex64) -> f64 {
    let m = a.norm();
    ((1.0 - m) * (1.0 + m)).sqrt()
}

fn check_radius(values: &[Complex64], r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidRadius {
            r,
            reason: "must lie in (0, 1)".into(),
        });
    }
    for &v in values {
        VerblunskyValue::new(v)?;
    }
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max > r {
        return Err(Error::InvalidRadius {
            r,
            reason: format!("smaller than max |α| = {max}"),
        });
    }
    Ok(())
}

/// A two-sided sequence with even period `q`, `α(n) = values[n mod q]`,
/// together with a declared bound `r ≥ max |α|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSeq {
    values: Vec<Complex64>,
    r: f64,
}

/// Build a periodic sequence; odd periods are doubled so that the stored
/// period is always even.
pub fn make_periodic(values: &[Complex64], r: f64) -> Result<PeriodicSeq> {
    if values.is_empty() {
        return Err(Error::Empty("coefficient list"));
    }
    check_radius(values, r)?;
    let mut v = values.to_vec();
    if v.len() % 2 == 1 {
        v.extend_from_slice(values);
    }
    Ok(PeriodicSeq { values: v, r })
}

impl PeriodicSeq {
    /// Constant sequence viewed with period 2.
    pub fn constant(a: Complex64, r: f64) -> Result<Self> {
        make_periodic(&[a], r)
    }

    /// A periodic sequence whose radius bound is the exact maximum modulus
    /// (or a tiny positive floor for the zero sequence).
    pub fn tight(values: &[Complex64]) -> Result<Self> {
        let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        make_periodic(values, max.max(1e-12))
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn eval(&self, n: i64) -> Complex64 {
        let q = self.values.len() as i64;
        self.values[n.rem_euclid(q) as usize]
    }

    #[inline]
    pub fn rho(&self, n: i64) -> f64 {
        rho_of(self.eval(n))
    }

    /// `∏_{j<q} ρ_j`.
    pub fn rho_product(&self) -> f64 {
        self.values.iter().map(|&a| rho_of(a)).product()
    }

    /// The same sequence viewed with period `q·factor`.
    pub fn repeat(&self, factor: usize) -> PeriodicSeq {
        let values = (0..self.values.len() * factor.max(1))
            .map(|n| self.values[n % self.values.len()])
            .collect();
        PeriodicSeq { values, r: self.r }
    }

    /// Coefficients `α(lo..=hi)` as a window.
    pub fn window(&self, lo: i64, hi: i64) -> CoefficientWindow {
        CoefficientWindow {
            start: lo,
            values: (lo..=hi).map(|n| self.eval(n)).collect(),
            r: self.r,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PeriodicSeqRepr {
    period: usize,
    #[serde(with = "complex_pairs")]
    values: Vec<Complex64>,
    r: f64,
}

impl Serialize for PeriodicSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PeriodicSeqRepr {
            period: self.period(),
            values: self.values.clone(),
            r: self.r,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PeriodicSeq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PeriodicSeqRepr::deserialize(d)?;
        if repr.period != repr.values.len() {
            return Err(serde::de::Error::custom(format!(
                "period {} does not match {} values",
                repr.period,
                repr.values.len()
            )));
        }
        make_periodic(&repr.values, repr.r).map_err(serde::de::Error::custom)
    }
}

/// A finite stretch `α(start), …, α(start + len − 1)` of a two-sided
/// sequence, with a declared radius bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientWindow {
    pub start: i64,
    #[serde(with = "complex_pairs")]
    pub values: Vec<Complex64>,
    pub r: f64,
}

impl CoefficientWindow {
    pub fn new(start: i64, values: Vec<Complex64>, r: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("coefficient window"));
        }
        check_radius(&values, r)?;
        Ok(CoefficientWindow { start, values, r })
    }

    /// Last covered index.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.start && hi <= self.end()
    }

    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::WindowTooShort {
                need_lo: lo,
                need_hi: hi,
                have_lo: self.start,
                have_hi: self.end(),
            })
        }
    }

    /// `α(n)`; panics outside the window.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        self.values[(n - self.start) as usize]
    }

    pub fn max_modulus(&self, lo: i64, hi: i64) -> f64 {
        (lo..=hi).map(|n| self.get(n).norm()).fold(0.0, f64::max)
    }
}

/// Serde adapter: complex numbers as `[re, im]` pairs.
pub(crate) mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|c| [c.re, c.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn odd_period_is_doubled() {
        let s = make_periodic(&[c(0.0, 0.0)], 0.1).unwrap();
        assert_eq!(s.period(), 2);
        assert_eq!(s.values(), &[c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn negative_index_wraps() {
        let s = make_periodic(&[c(0.5, 0.0), c(0.0, 0.5)], 0.6).unwrap();
        assert_eq!(s.period(), 2);
        assert_eq!(s.eval(-1), c(0.0, 0.5));
    }

    #[test]
    fn near_boundary_accepted() {
        let s = make_periodic(&[c(0.9999, 0.0)], 0.99999).unwrap();
        assert_eq!(s.period(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_periodic(&[], 0.5).is_err());
        assert!(make_periodic(&[c(1.0, 0.0)], 0.5).is_err());
        assert!(make_periodic(&[c(0.0, 1.2)], 0.5).is_err());
        assert!(make_periodic(&[c(0.3, 0.0)], 1.0).is_err());
        assert!(make_periodic(&[c(0.3, 0.0)], 0.2).is_err());
        assert!(VerblunskyValue::new(c(0.6, 0.8)).is_err());
    }

    #[test]
    fn rho_examples() {
        let r = |a| rho(VerblunskyValue::new(a).unwrap()).get();
        assert_eq!(r(c(0.0, 0.0)), 1.0);
        assert!((r(c(0.6, 0.0)) - 0.8).abs() < 1e-16);
        assert!((r(c(0.0, 0.8)) - 0.6).abs() < 1e-16);
    }

    #[test]
    fn json_shape() {
        let s = make_periodic(&[c(0.5, 0.0), c(0.0, 0.5)], 0.6).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["period"], 2);
        assert_eq!(j["values"][1][1], 0.5);
        let back: PeriodicSeq = serde_json::from_value(j).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::json!({"period": 2, "values": [[1.5, 0.0], [0.0, 0.0]], "r": 0.5});
        assert!(serde_json::from_value::<PeriodicSeq>(bad).is_err());
    }

    proptest! {
        #[test]
        fn rho_identity(m in 0.0f64..0.99, t in 0.0f64..std::f64::consts::TAU) {
            let a = Complex64::from_polar(m, t);
            let r = rho(VerblunskyValue::new(a).unwrap()).get();
            prop_assert!((r * r + a.norm_sqr() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn eval_is_periodic(vals in proptest::collection::vec((-0.6f64..0.6, -0.6f64..0.6), 1..7)) {
            let v: Vec<Complex64> = vals.iter().map(|&(a, b)| c(a, b)).collect();
            let s = make_periodic(&v, 0.9).unwrap();
            let q = s.period() as i64;
            for n in -3 * q..=3 * q {
                prop_assert_eq!(s.eval(n + q), s.eval(n));
            }
        }
    }
}
