//! Finite unions of disjoint half-open rational subintervals of [0,1].
//!
//! These are the computable stand-in for Borel subsets of the unit interval:
//! every operation is exact, so measure identities can be asserted with `==`.

use num::rational::BigRational;
use num::{One, Zero};

use crate::error::{CondrepError, Result};
use crate::scalar::ratio;

/// A finite union of disjoint, sorted half-open intervals `[a, b)` with
/// rational endpoints in `[0, 1]`. Canonical form: adjacent pieces merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    intervals: Vec<(BigRational, BigRational)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: vec![] }
    }

    /// The whole unit interval `[0, 1)`.
    pub fn unit() -> Self {
        IntervalSet {
            intervals: vec![(BigRational::zero(), BigRational::one())],
        }
    }

    /// Builds from arbitrary `[a, b)` pieces; overlapping or touching pieces
    /// are merged. Endpoints must satisfy `0 <= a < b <= 1`.
    pub fn new(mut pieces: Vec<(BigRational, BigRational)>) -> Result<Self> {
        for (a, b) in &pieces {
            if a < &BigRational::zero() || b > &BigRational::one() {
                return Err(CondrepError::Parse(format!(
                    "interval endpoints outside [0,1]: [{a}, {b})"
                )));
            }
            if a >= b {
                return Err(CondrepError::Parse(format!("empty interval [{a}, {b})")));
            }
        }
        pieces.sort();
        let mut merged: Vec<(BigRational, BigRational)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match merged.last_mut() {
                Some((_, prev_b)) if *prev_b >= a => {
                    if b > *prev_b {
                        *prev_b = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        Ok(IntervalSet { intervals: merged })
    }

    /// Single interval `[a, b)` given as integer ratios.
    pub fn interval(a: (i64, i64), b: (i64, i64)) -> Result<Self> {
        Self::new(vec![(ratio(a.0, a.1), ratio(b.0, b.1))])
    }

    pub fn pieces(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure.
    pub fn length(&self) -> BigRational {
        self.intervals
            .iter()
            .fold(BigRational::zero(), |acc, (a, b)| acc + (b - a))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.intervals.iter().any(|(a, b)| a <= x && x < b)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut pieces = self.intervals.clone();
        pieces.extend(other.intervals.iter().cloned());
        IntervalSet::new(pieces).expect("operands were valid")
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = vec![];
        for (a, b) in &self.intervals {
            for (c, d) in &other.intervals {
                let lo = a.max(c).clone();
                let hi = b.min(d).clone();
                if lo < hi {
                    out.push((lo, hi));
                }
            }
        }
        IntervalSet { intervals: out }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.intersection(&other.complement())
    }

    /// Complement within `[0, 1)`.
    pub fn complement(&self) -> IntervalSet {
        let mut out = vec![];
        let mut cursor = BigRational::zero();
        for (a, b) in &self.intervals {
            if cursor < *a {
                out.push((cursor, a.clone()));
            }
            cursor = b.clone();
        }
        if cursor < BigRational::one() {
            out.push((cursor, BigRational::one()));
        }
        IntervalSet { intervals: out }
    }

    /// Translates every piece by `delta`; pieces leaving `[0, 1)` are clipped.
    pub fn translate(&self, delta: &BigRational) -> IntervalSet {
        let mut out = vec![];
        for (a, b) in &self.intervals {
            let lo = (a + delta).max(BigRational::zero());
            let hi = (b + delta).min(BigRational::one());
            if lo < hi {
                out.push((lo, hi));
            }
        }
        IntervalSet { intervals: out }
    }

    /// Image under the affine map `x -> slope * x + offset`, `slope > 0`.
    pub fn affine_image(&self, slope: &BigRational, offset: &BigRational) -> Vec<(BigRational, BigRational)> {
        self.intervals
            .iter()
            .map(|(a, b)| (slope * a + offset, slope * b + offset))
            .collect()
    }

    /// JSON encoding: list of `[a_num, a_den, b_num, b_den]` quadruples.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.intervals
                .iter()
                .map(|(a, b)| {
                    serde_json::json!([
                        a.numer().to_string(),
                        a.denom().to_string(),
                        b.numer().to_string(),
                        b.denom().to_string()
                    ])
                })
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| CondrepError::Parse("IntervalSet: expected array".into()))?;
        let mut pieces = vec![];
        for quad in arr {
            let q = quad
                .as_array()
                .filter(|q| q.len() == 4)
                .ok_or_else(|| CondrepError::Parse("IntervalSet: expected quadruple".into()))?;
            let part = |i: usize| -> Result<num::BigInt> {
                let v = &q[i];
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                s.parse()
                    .map_err(|_| CondrepError::Parse(format!("bad integer {s}")))
            };
            pieces.push((
                BigRational::new(part(0)?, part(1)?),
                BigRational::new(part(2)?, part(3)?),
            ));
        }
        IntervalSet::new(pieces)
    }
}

impl std::fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(a, b)| format!("[{a}, {b})"))
            .collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iset(pieces: &[((i64, i64), (i64, i64))]) -> IntervalSet {
        IntervalSet::new(
            pieces
                .iter()
                .map(|&(a, b)| (ratio(a.0, a.1), ratio(b.0, b.1)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn intersection_and_length() {
        let a = iset(&[((0, 1), (1, 2))]);
        let b = iset(&[((1, 4), (3, 4))]);
        let c = a.intersection(&b);
        assert_eq!(c, iset(&[((1, 4), (1, 2))]));
        assert_eq!(c.length(), ratio(1, 4));
    }

    #[test]
    fn complement_of_unit_is_empty() {
        assert!(IntervalSet::unit().complement().is_empty());
        assert_eq!(IntervalSet::unit().complement().length(), BigRational::zero());
    }

    #[test]
    fn touching_pieces_merge() {
        let a = iset(&[((0, 1), (1, 2)), ((1, 2), (1, 1))]);
        assert_eq!(a, IntervalSet::unit());
    }

    #[test]
    fn translate_clips_to_unit() {
        let a = iset(&[((3, 4), (1, 1))]);
        let t = a.translate(&ratio(1, 2));
        assert!(t.is_empty());
        let t = a.translate(&ratio(-1, 2));
        assert_eq!(t, iset(&[((1, 4), (1, 2))]));
    }

    fn arb_intervalset() -> impl Strategy<Value = IntervalSet> {
        proptest::collection::vec(((0i64..64), (1i64..=8)), 0..6).prop_map(|raw| {
            let pieces = raw
                .into_iter()
                .map(|(start, len)| {
                    let a = ratio(start, 64);
                    let b = ratio((start + len).min(64), 64);
                    (a, b)
                })
                .collect();
            IntervalSet::new(pieces).unwrap()
        })
    }

    proptest! {
        // Inclusion-exclusion: |A ∪ B| + |A ∩ B| = |A| + |B|.
        #[test]
        fn inclusion_exclusion(a in arb_intervalset(), b in arb_intervalset()) {
            let lhs = a.union(&b).length() + a.intersection(&b).length();
            prop_assert_eq!(lhs, a.length() + b.length());
        }

        // Set operations agree with pointwise membership on a rational grid.
        #[test]
        fn membership_oracle(a in arb_intervalset(), b in arb_intervalset()) {
            for k in 0..256u32 {
                let x = ratio(2 * i64::from(k) + 1, 512);
                let in_a = a.contains(&x);
                let in_b = b.contains(&x);
                prop_assert_eq!(a.union(&b).contains(&x), in_a || in_b);
                prop_assert_eq!(a.intersection(&b).contains(&x), in_a && in_b);
                prop_assert_eq!(a.difference(&b).contains(&x), in_a && !in_b);
                prop_assert_eq!(a.complement().contains(&x), !in_a);
            }
        }
    }

    #[test]
    fn dense_grid_membership_oracle() {
        // 10^4-point rational grid against a fixed instance.
        let a = iset(&[((1, 10), (3, 10)), ((1, 2), (9, 10))]);
        let b = iset(&[((1, 5), (3, 5))]);
        let ops = [
            (a.union(&b), "union"),
            (a.intersection(&b), "inter"),
            (a.difference(&b), "diff"),
        ];
        for k in 0..10_000i64 {
            let x = ratio(2 * k + 1, 20_000);
            let in_a = a.contains(&x);
            let in_b = b.contains(&x);
            let expect = [in_a || in_b, in_a && in_b, in_a && !in_b];
            for ((set, name), want) in ops.iter().zip(expect) {
                assert_eq!(set.contains(&x), want, "{name} at {x}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let a = iset(&[((1, 3), (1, 2)), ((3, 4), (7, 8))]);
        let v = a.to_json();
        assert_eq!(IntervalSet::from_json(&v).unwrap(), a);
    }
}
