//! The dyadic odometer `Ω = lim Z/2^k` with the +1 translation, and
//! locally constant sampling functions on it.
//!
//! A point is stored truncated to a finite level `k`, i.e. as the coset
//! `ω + Ω_k`, with binary digits least-significant first. A level-`k`
//! sampling function is a table over the `2^k` cosets, indexed by the
//! integer value of the digit string; the induced coefficient sequence
//! `α(n) = f(Tⁿω)` is then `table[(ω + n) mod 2^k]`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coeffs::{complex_pairs, make_periodic, PeriodicSeq, VerblunskyValue};
use crate::error::{Error, Result};

/// Largest supported level; tables hold `2^level` entries.
pub const MAX_LEVEL: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OdometerPoint {
    digits: Vec<u8>,
}

impl OdometerPoint {
    pub fn zero(level: u32) -> Self {
        OdometerPoint {
            digits: vec![0; level as usize],
        }
    }

    /// Point whose digit string encodes `index` (least-significant first).
    pub fn from_index(level: u32, index: u64) -> Self {
        OdometerPoint {
            digits: (0..level).map(|b| ((index >> b) & 1) as u8).collect(),
        }
    }

    /// Parse a digit string such as `"0110"` (least-significant first).
    pub fn parse(digits: &str) -> Result<Self> {
        let digits = digits
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Invalid(format!("bad odometer digit {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if digits.len() > 63 {
            return Err(Error::Invalid("odometer level above 63".into()));
        }
        Ok(OdometerPoint { digits })
    }

    pub fn level(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn digit_string(&self) -> String {
        self.digits.iter().map(|d| char::from(b'0' + d)).collect()
    }

    /// Coset index at this point's own level.
    pub fn index(&self) -> u64 {
        self.digits
            .iter()
            .enumerate()
            .fold(0, |acc, (b, &d)| acc | (u64::from(d) << b))
    }

    /// Coset index at a coarser level.
    pub fn index_at(&self, level: u32) -> u64 {
        debug_assert!(level <= self.level());
        if level == 0 {
            0
        } else {
            self.index() & ((1u64 << level) - 1)
        }
    }

    /// `Tⁿω`: add `steps` with carry, truncated to the point's level.
    pub fn translate(&self, steps: i64) -> Self {
        let k = self.level();
        if k == 0 {
            return self.clone();
        }
        let modulus = 1i128 << k;
        let idx = (i128::from(self.index()) + i128::from(steps)).rem_euclid(modulus);
        Self::from_index(k, idx as u64)
    }
}

#[derive(Serialize, Deserialize)]
struct OdometerPointRepr {
    level: u32,
    digits: String,
}

impl Serialize for OdometerPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OdometerPointRepr {
            level: self.level(),
            digits: self.digit_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OdometerPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = OdometerPointRepr::deserialize(d)?;
        let p = OdometerPoint::parse(&repr.digits).map_err(serde::de::Error::custom)?;
        if p.level() != repr.level {
            return Err(serde::de::Error::custom("level does not match digit count"));
        }
        Ok(p)
    }
}

/// A level-`k` locally constant function `Ω → 𝔻`, constant on cosets of
/// `Ω_k`, with declared bound `r ≥ max |f|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingFn {
    level: u32,
    table: Vec<Complex64>,
    r: f64,
}

impl SamplingFn {
    pub fn new(level: u32, table: Vec<Complex64>, r: f64) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::OutOfRange {
                name: "level",
                value: f64::from(level),
                range: "[0, 24]",
            });
        }
        if table.len() != 1usize << level {
            return Err(Error::LengthMismatch {
                expected: 1 << level,
                got: table.len(),
            });
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidRadius {
                r,
                reason: "must lie in (0, 1)".into(),
            });
        }
        for &v in &table {
            VerblunskyValue::new(v)?;
        }
        let max = table.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max > r {
            return Err(Error::InvalidRadius {
                r,
                reason: format!("smaller than max |f| = {max}"),
            });
        }
        Ok(SamplingFn { level, table, r })
    }

    pub fn constant(c: Complex64, r: f64) -> Result<Self> {
        Self::new(0, vec![c], r)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn table(&self) -> &[Complex64] {
        &self.table
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `p_k = 2^k`.
    pub fn period(&self) -> usize {
        1 << self.level
    }

    pub fn max_modulus(&self) -> f64 {
        self.table.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Value on the coset with the given index at this function's level.
    pub fn at_coset(&self, index: u64) -> Complex64 {
        self.table[index as usize]
    }

    pub fn eval(&self, omega: &OdometerPoint) -> Result<Complex64> {
        if omega.level() < self.level {
            return Err(Error::LevelMismatch {
                need: self.level,
                got: omega.level(),
            });
        }
        Ok(self.table[omega.index_at(self.level) as usize])
    }

    /// `α(n) = f(Tⁿω)` for `n_min ≤ n ≤ n_max`.
    pub fn sample_sequence(
        &self,
        omega: &OdometerPoint,
        n_min: i64,
        n_max: i64,
    ) -> Result<Vec<Complex64>> {
        if omega.level() < self.level {
            return Err(Error::LevelMismatch {
                need: self.level,
                got: omega.level(),
            });
        }
        let base = omega.index_at(self.level) as i64;
        let p = self.period() as i64;
        Ok((n_min..=n_max)
            .map(|n| self.table[(base + n).rem_euclid(p) as usize])
            .collect())
    }

    /// The induced sequence at `ω = 0` as a periodic sequence (period
    /// `2^k`, doubled to 2 at level 0).
    pub fn to_periodic(&self) -> PeriodicSeq {
        make_periodic(&self.table, self.r).expect("sampling function invariants hold")
    }

    /// Same function with a different declared bound.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        Self::new(self.level, self.table.clone(), r)
    }
}

#[derive(Serialize, Deserialize)]
struct SamplingFnRepr {
    level: u32,
    #[serde(with = "complex_pairs")]
    table: Vec<Complex64>,
    r: f64,
}

impl Serialize for SamplingFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SamplingFnRepr {
            level: self.level,
            table: self.table.clone(),
            r: self.r,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SamplingFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SamplingFnRepr::deserialize(d)?;
        SamplingFn::new(repr.level, repr.table, repr.r).map_err(serde::de::Error::custom)
    }
}

/// Refine `f` to level `k_new`: each coset splits into cosets carrying the
/// same value, so the induced sequences are unchanged.
pub fn lift(f: &SamplingFn, k_new: u32) -> Result<SamplingFn> {
    if k_new < f.level {
        return Err(Error::LevelMismatch {
            need: f.level,
            got: k_new,
        });
    }
    let p = f.period();
    let table = (0..1usize << k_new).map(|j| f.table[j % p]).collect();
    SamplingFn::new(k_new, table, f.r)
}

/// `‖f − g‖_∞`, exact over the cosets of the finer of the two levels.
pub fn sup_distance(f: &SamplingFn, g: &SamplingFn) -> f64 {
    let k = f.level.max(g.level);
    let (pf, pg) = (f.period(), g.period());
    (0..1usize << k)
        .map(|j| (f.table[j % pf] - g.table[j % pg]).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn translate_examples() {
        let zero = OdometerPoint::parse("000").unwrap();
        assert_eq!(zero.translate(1).digit_string(), "100");
        assert_eq!(OdometerPoint::parse("111").unwrap().translate(1).digit_string(), "000");
        assert_eq!(zero.translate(-1).digit_string(), "111");
        assert_eq!(zero.translate(8), zero);
    }

    #[test]
    fn orbit_visits_every_coset_once() {
        for k in 0..=8 {
            let zero = OdometerPoint::zero(k);
            let seen: HashSet<_> = (0..1i64 << k).map(|n| zero.translate(n)).collect();
            assert_eq!(seen.len(), 1 << k);
        }
    }

    #[test]
    fn sample_sequence_examples() {
        let a = c(0.1, 0.0);
        let b = c(0.0, 0.2);
        let cc = c(-0.3, 0.0);
        let d = c(0.1, 0.1);
        let omega = OdometerPoint::parse("0101").unwrap();
        let f0 = SamplingFn::constant(a, 0.5).unwrap();
        assert_eq!(f0.sample_sequence(&omega, 0, 3).unwrap(), vec![a; 4]);

        let f1 = SamplingFn::new(1, vec![a, b], 0.5).unwrap();
        let zero = OdometerPoint::zero(1);
        assert_eq!(f1.sample_sequence(&zero, 0, 3).unwrap(), vec![a, b, a, b]);

        // enumerate the orbit of 0 through the four level-2 cosets
        let f2 = SamplingFn::new(2, vec![a, b, cc, d], 0.5).unwrap();
        let zero2 = OdometerPoint::zero(2);
        let by_orbit: Vec<Complex64> = (0..8)
            .map(|n| f2.eval(&zero2.translate(n)).unwrap())
            .collect();
        assert_eq!(by_orbit, vec![a, b, cc, d, a, b, cc, d]);
        assert_eq!(f2.sample_sequence(&zero2, 0, 7).unwrap(), by_orbit);
        assert!(f2.sample_sequence(&OdometerPoint::zero(1), 0, 3).is_err());
    }

    #[test]
    fn sup_distance_examples() {
        let f = SamplingFn::new(1, vec![c(0.0, 0.0), c(0.2, 0.0)], 0.5).unwrap();
        assert_eq!(sup_distance(&f, &f), 0.0);
        let a = SamplingFn::constant(c(0.1, 0.0), 0.5).unwrap();
        let b = SamplingFn::constant(c(0.4, 0.0), 0.5).unwrap();
        assert!((sup_distance(&a, &b) - 0.3).abs() < 1e-16);
        let g = SamplingFn::new(2, vec![c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.0), c(0.3, 0.0)], 0.5)
            .unwrap();
        // f lifts to (0, 0.2, 0, 0.2); differences (0, 0.2, 0.2, 0.1)
        assert!((sup_distance(&f, &g) - 0.2).abs() < 1e-16);
    }

    #[test]
    fn lift_examples() {
        let a = c(0.1, 0.0);
        let b = c(0.0, 0.2);
        let f0 = SamplingFn::constant(a, 0.5).unwrap();
        assert_eq!(lift(&f0, 2).unwrap().table(), &[a, a, a, a]);
        let f1 = SamplingFn::new(1, vec![a, b], 0.5).unwrap();
        let l = lift(&f1, 2).unwrap();
        assert_eq!(l.table(), &[a, b, a, b]);
        assert_eq!(sup_distance(&f1, &l), 0.0);
        let omega = OdometerPoint::zero(3);
        assert_eq!(
            f1.sample_sequence(&omega, -16, 16).unwrap(),
            l.sample_sequence(&omega, -16, 16).unwrap()
        );
        assert!(lift(&l, 1).is_err());
    }

    #[test]
    fn json_shapes() {
        let p = OdometerPoint::parse("0110").unwrap();
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j, serde_json::json!({"level": 4, "digits": "0110"}));
        assert_eq!(serde_json::from_value::<OdometerPoint>(j).unwrap(), p);
        let f = SamplingFn::new(1, vec![c(0.1, 0.0), c(0.0, 0.2)], 0.5).unwrap();
        let j = serde_json::to_value(&f).unwrap();
        assert_eq!(j["level"], 1);
        assert_eq!(j["table"][1], serde_json::json!([0.0, 0.2]));
        assert_eq!(serde_json::from_value::<SamplingFn>(j).unwrap(), f);
    }

    fn table_strategy(level: u32) -> impl Strategy<Value = SamplingFn> {
        proptest::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 1usize << level).prop_map(
            move |v| {
                SamplingFn::new(level, v.into_iter().map(|(a, b)| c(a, b)).collect(), 0.75).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn lift_commutes_with_sampling(f in table_strategy(2), extra in 0u32..3, start in -40i64..40, idx in 0u64..64) {
            let l = lift(&f, f.level() + extra).unwrap();
            let omega = OdometerPoint::from_index(6, idx);
            prop_assert_eq!(
                f.sample_sequence(&omega, start, start + 20).unwrap(),
                l.sample_sequence(&omega, start, start + 20).unwrap()
            );
        }

        #[test]
        fn sup_distance_is_a_metric(f in table_strategy(1), g in table_strategy(2), h in table_strategy(3)) {
            let (dfg, dgh, dfh) = (sup_distance(&f, &g), sup_distance(&g, &h), sup_distance(&f, &h));
            prop_assert_eq!(dfg, sup_distance(&g, &f));
            prop_assert!(dfh <= dfg + dgh + 1e-15);
            prop_assert_eq!(sup_distance(&f, &lift(&f, 3).unwrap()), 0.0);
            if dfg == 0.0 {
                prop_assert_eq!(&lift(&f, 2).unwrap(), &g);
            }
        }
    }
}
