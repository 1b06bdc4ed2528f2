//! A structured joint law on [0,1]² where every reverse conditional splits
//! its mass over twin atoms, yet every interval indicator is representable
//! constructively.
//!
//! The y-marginal has density 15 on a family of bands accumulating at 0; band
//! m carries two affine branches a_m, b_m mapping it into [0,1] with
//! b_m − a_m = 4^{−m}. A reflection pairing inside dyadic cells produces
//! exact nonnegative solutions of E[g(Y)|X] = 1_A, which a covering iteration
//! extends to arbitrary interval sets up to a geometrically small remainder.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
#[cfg(test)]
use num::Signed;
use rand::Rng;

use crate::error::{CondrepError, Result};
use crate::intervals::IntervalSet;
use crate::scalar::ratio;

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `4^{-m}` exactly.
fn pow4_neg(m: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(4u32).pow(m))
}

/// `2^{-m}` exactly.
fn pow2_neg(m: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2u32).pow(m))
}

/// The band family of the y-marginal. Band m is
/// `[2^{−m} − 4^{−(m+1)}, 2^{−m} − 4^{−(2m+1)}]`, carrying density 15.
#[derive(Debug, Clone)]
pub struct BandFamily {
    pub m_max: u32,
}

impl Default for BandFamily {
    fn default() -> Self {
        BandFamily { m_max: 25 }
    }
}

impl BandFamily {
    pub fn band(&self, m: u32) -> (BigRational, BigRational) {
        (
            pow2_neg(m) - pow4_neg(m + 1),
            pow2_neg(m) - pow4_neg(2 * m + 1),
        )
    }

    /// `a_m(y) = 4^{m+1}(y − 2^{−m}) + 1`, the lower branch.
    pub fn a_m(&self, m: u32, y: &BigRational) -> BigRational {
        (y - pow2_neg(m)) / pow4_neg(m + 1) + BigRational::one()
    }

    /// `b_m = a_m + 4^{−m}`, the upper branch.
    pub fn b_m(&self, m: u32, y: &BigRational) -> BigRational {
        self.a_m(m, y) + pow4_neg(m)
    }

    /// Inverse of `a_m`: the band point whose lower-branch image is x.
    pub fn a_inv(&self, m: u32, x: &BigRational) -> BigRational {
        pow2_neg(m) + (x - BigRational::one()) * pow4_neg(m + 1)
    }

    /// Total y-mass of bands `m ≤ m_max` (exactly 1 in the limit).
    pub fn total_mass(&self) -> BigRational {
        (1..=self.m_max).fold(BigRational::zero(), |acc, m| {
            acc + big(15) * (pow4_neg(m + 1) - pow4_neg(2 * m + 1))
        })
    }
}

/// y-marginal density: 15 on a band, 0 between bands.
pub fn nu_density(y: f64) -> f64 {
    if !(0.0..=1.0).contains(&y) || y <= 0.0 {
        return 0.0;
    }
    let bf = BandFamily { m_max: 60 };
    let yr = <BigRational as crate::scalar::Scalar>::from_f64(y);
    for m in 1..=60 {
        let (lo, hi) = bf.band(m);
        if yr > hi {
            // Bands move down as m grows; nothing above this one remains.
            return 0.0;
        }
        if yr >= lo {
            return 15.0;
        }
    }
    0.0
}

/// x-marginal density: `5/4` on `[1/4, 3/4]`, `(5/8)(1 + 4^{−m})` on the
/// dyadic shells `[4^{−(m+1)}, 4^{−m})` and their reflections about 1/2.
pub fn f_mu(x: &BigRational) -> BigRational {
    if *x <= BigRational::zero() || *x >= BigRational::one() {
        return BigRational::zero();
    }
    let half = ratio(1, 2);
    let x = if *x > half {
        BigRational::one() - x
    } else {
        x.clone()
    };
    if x >= ratio(1, 4) {
        return ratio(5, 4);
    }
    let mut m = 1;
    while x < pow4_neg(m + 1) {
        m += 1;
    }
    ratio(5, 8) * (BigRational::one() + pow4_neg(m))
}

/// CDF of the x-marginal, exact on rationals. Closed form:
/// `F(4^{−j}) = (5/8)4^{−j} + (1/2)4^{−2j}`, linear in between, symmetric
/// about 1/2.
pub fn mu_cdf(t: &BigRational) -> BigRational {
    if *t <= BigRational::zero() {
        return BigRational::zero();
    }
    if *t >= BigRational::one() {
        return BigRational::one();
    }
    let half = ratio(1, 2);
    if *t > half {
        return BigRational::one() - mu_cdf(&(BigRational::one() - t));
    }
    if *t >= ratio(1, 4) {
        return ratio(3, 16) + (t - ratio(1, 4)) * ratio(5, 4);
    }
    let mut m = 1;
    while *t < pow4_neg(m + 1) {
        m += 1;
    }
    let f_lower = ratio(5, 8) * pow4_neg(m + 1) + ratio(1, 2) * pow4_neg(2 * (m + 1));
    f_lower + (t - pow4_neg(m + 1)) * ratio(5, 8) * (BigRational::one() + pow4_neg(m))
}

/// μ-measure of an interval set (exact).
pub fn mu_measure(a: &IntervalSet) -> BigRational {
    a.pieces()
        .iter()
        .fold(BigRational::zero(), |acc, (lo, hi)| {
            acc + mu_cdf(hi) - mu_cdf(lo)
        })
}

/// One atom of the conditional y-law given X = x.
#[derive(Debug, Clone)]
pub struct PiAtom {
    pub m: u32,
    /// false: lower branch a_m, true: upper branch b_m.
    pub upper: bool,
    pub y: BigRational,
    pub weight: BigRational,
}

#[derive(Debug, Clone)]
pub struct PiX {
    pub atoms: Vec<PiAtom>,
    /// Mass carried by bands beyond `m_max`.
    pub tail: BigRational,
}

/// Conditional law of Y given X = x, truncated at band `m_max`. Band m
/// contributes its lower-branch atom when `x ≤ 1 − 4^{−m}` and its
/// upper-branch atom when `x ≥ 4^{−m}`, each with weight
/// `(15/2)·4^{−(m+1)} / f_μ(x)`.
pub fn pi_x_given(x: &BigRational, m_max: u32) -> Result<PiX> {
    if *x <= BigRational::zero() || *x >= BigRational::one() {
        return Err(CondrepError::DomainError(crate::scalar::Scalar::to_f64(x)));
    }
    let bf = BandFamily { m_max };
    let fx = f_mu(x);
    let mut atoms = vec![];
    let mut total = BigRational::zero();
    for m in 1..=m_max {
        let w = ratio(15, 2) * pow4_neg(m + 1) / fx.clone();
        if *x <= BigRational::one() - pow4_neg(m) {
            let y = bf.a_inv(m, x);
            total += w.clone();
            atoms.push(PiAtom {
                m,
                upper: false,
                y,
                weight: w.clone(),
            });
        }
        if *x >= pow4_neg(m) {
            let y = bf.a_inv(m, &(x - pow4_neg(m)));
            total += w.clone();
            atoms.push(PiAtom {
                m,
                upper: true,
                y,
                weight: w,
            });
        }
    }
    Ok(PiX {
        atoms,
        tail: BigRational::one() - total,
    })
}

/// Piecewise-constant nonnegative g supported on finitely many bands.
#[derive(Debug, Clone, Default)]
pub struct WeightedAtlas {
    pub pieces: Vec<AtlasPiece>,
}

#[derive(Debug, Clone)]
pub struct AtlasPiece {
    pub m: u32,
    /// y-intervals inside band m where g equals `weight`.
    pub ys: IntervalSet,
    pub weight: BigRational,
}

impl WeightedAtlas {
    pub fn extend(&mut self, other: WeightedAtlas) {
        self.pieces.extend(other.pieces);
    }

    /// Pointwise value g(y) (exact).
    pub fn eval(&self, y: &BigRational) -> BigRational {
        self.pieces
            .iter()
            .filter(|p| p.ys.contains(y))
            .fold(BigRational::zero(), |acc, p| acc + p.weight.clone())
    }

    /// `‖g‖_{L¹(ν)} = Σ 15 · λ(ys) · weight`.
    pub fn l1_norm(&self) -> BigRational {
        self.pieces.iter().fold(BigRational::zero(), |acc, p| {
            acc + big(15) * p.ys.length() * p.weight.clone()
        })
    }

    /// Scales g by a nonnegative constant.
    pub fn scale(&self, c: &BigRational) -> WeightedAtlas {
        WeightedAtlas {
            pieces: self
                .pieces
                .iter()
                .map(|p| AtlasPiece {
                    m: p.m,
                    ys: p.ys.clone(),
                    weight: p.weight.clone() * c.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.pieces
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "band": p.m,
                        "ys": p.ys.to_json(),
                        "weight": crate::scalar::format_rational(&p.weight),
                    })
                })
                .collect(),
        )
    }
}

/// `E[g(Y) | X = x]`, exact: g lives on finitely many bands, so the sum over
/// atoms of π_{X=x} hitting the atlas is finite.
pub fn conditional_expectation_at(atlas: &WeightedAtlas, x: &BigRational) -> Result<BigRational> {
    if *x <= BigRational::zero() || *x >= BigRational::one() {
        return Err(CondrepError::DomainError(crate::scalar::Scalar::to_f64(x)));
    }
    let bf = BandFamily::default();
    let fx = f_mu(x);
    let mut total = BigRational::zero();
    let bands: std::collections::BTreeSet<u32> = atlas.pieces.iter().map(|p| p.m).collect();
    for &m in &bands {
        let w = ratio(15, 2) * pow4_neg(m + 1) / fx.clone();
        let mut ys = vec![];
        if *x <= BigRational::one() - pow4_neg(m) {
            ys.push(bf.a_inv(m, x));
        }
        if *x >= pow4_neg(m) {
            ys.push(bf.a_inv(m, &(x - pow4_neg(m))));
        }
        for y in ys {
            let g = atlas
                .pieces
                .iter()
                .filter(|p| p.m == m && p.ys.contains(&y))
                .fold(BigRational::zero(), |acc, p| acc + p.weight.clone());
            total += w.clone() * g;
        }
    }
    Ok(total)
}

/// Cell width at scale m: `α_m = 2·4^{−m}`; cells `[kα_m, (k+1)α_m)` tile
/// the unit interval with `k = 0..4^m/2 − 1`.
pub fn alpha(m: u32) -> BigRational {
    big(2) * pow4_neg(m)
}

pub fn admissible(m: u32, k: u64) -> bool {
    if m < 3 || m > 28 {
        return false;
    }
    let kmax = 4u64.pow(m) / 2 - 3;
    (2..=kmax).contains(&k)
}

/// The reflection step: inside cell `I_m^k`, swap the two half-cells via
/// `R(x) = x ± α_m/2`, keep `A_m^k = (A ∩ I_m^k) ∩ R(A ∩ I_m^k)`, and emit
/// the band-m atlas piece with `E[g(Y)|X] = 1_{A_m^k}` exactly.
pub fn soussolution(
    a: &IntervalSet,
    m: u32,
    k: u64,
) -> Result<(IntervalSet, WeightedAtlas)> {
    if !admissible(m, k) {
        return Err(CondrepError::RangeError { m, k });
    }
    let al = alpha(m);
    let half = al.clone() / big(2);
    let lo = big(k as i64) * al.clone();
    let cell = IntervalSet::new(vec![(lo.clone(), lo.clone() + al.clone())])?;
    let left = IntervalSet::new(vec![(lo.clone(), lo.clone() + half.clone())])?;
    let b = a.intersection(&cell);
    let bl = b.intersection(&left);
    let br = b.difference(&left);
    let reflected = bl.translate(&half).union(&br.translate(&(-half.clone())));
    let amk = b.intersection(&reflected);

    let mut atlas = WeightedAtlas::default();
    if !amk.is_empty() {
        // f_μ is constant on every admissible cell; evaluate at the midpoint.
        let f_cell = f_mu(&(lo + half.clone()));
        let weight = big(2) * f_cell / (big(15) * pow4_neg(m + 1));
        // g lives over the lower-branch preimage of the left part of A_m^k.
        let bf = BandFamily::default();
        let left_part = amk.intersection(&left);
        let ys = IntervalSet::new(
            left_part
                .pieces()
                .iter()
                .map(|(p, q)| (bf.a_inv(m, p), bf.a_inv(m, q)))
                .collect(),
        )?;
        atlas.pieces.push(AtlasPiece { m, ys, weight });
    }
    Ok((amk, atlas))
}

/// Output of the covering iteration for an indicator target.
#[derive(Debug, Clone)]
pub struct IndicatorRepresentation {
    pub atlas: WeightedAtlas,
    pub remainder: IntervalSet,
    pub iterations: usize,
}

/// Iteratively represents `1_A`: at each pass, every remainder component is
/// tiled by cells at a scale fitting its length, the reflection step removes
/// the representable part, and the loop continues on what is left. The
/// remainder shrinks at least geometrically.
pub fn represent_indicator(
    a: &IntervalSet,
    target_resid: &BigRational,
) -> IndicatorRepresentation {
    assert!(*target_resid > BigRational::zero());
    let mut atlas = WeightedAtlas::default();
    let mut remainder = a.clone();
    let mut iterations = 0usize;
    let mut boost: u32 = 0;

    while remainder.length() > *target_resid && iterations < 1000 {
        let before = remainder.length();
        let mut removed = IntervalSet::empty();
        for (p, q) in remainder.pieces().to_vec() {
            let len = q.clone() - p.clone();
            // Smallest scale with α_m ≤ len/4 so the piece holds a full cell.
            let mut m = 3;
            while alpha(m) > len.clone() / big(4) && m < 28 {
                m += 1;
            }
            m = (m + boost).min(28);
            let al = alpha(m);
            let k_lo = (p.clone() / al.clone()).floor().to_integer();
            let k_hi = (q.clone() / al.clone()).floor().to_integer();
            let k_lo: u64 = k_lo.try_into().unwrap_or(0).max(2);
            let k_hi: u64 = k_hi
                .try_into()
                .unwrap_or(0)
                .min(4u64.pow(m) / 2 - 3);
            for k in k_lo..=k_hi {
                let Ok((amk, piece)) = soussolution(&remainder, m, k) else {
                    continue;
                };
                if !amk.is_empty() {
                    removed = removed.union(&amk);
                    atlas.extend(piece);
                }
            }
        }
        remainder = remainder.difference(&removed);
        iterations += 1;
        // A pass that removed nothing (components pinned at cell borders)
        // retries one scale finer.
        boost = if remainder.length() == before {
            boost + 1
        } else {
            0
        };
    }
    IndicatorRepresentation {
        atlas,
        remainder,
        iterations,
    }
}

/// Report for a step-function target `f = Σ c_l 1_{A_l}`.
#[derive(Debug, Clone)]
pub struct StepRepresentation {
    pub atlas: WeightedAtlas,
    pub remainders: Vec<IntervalSet>,
    /// `‖g‖_{L¹(ν)} − ‖f‖_{L¹(μ)}` (nonpositive; vanishes with the target).
    pub mass_gap: BigRational,
}

/// Layer-cake representation of a nonnegative step function: each layer's
/// indicator is represented separately and the atlases are scaled and summed.
pub fn represent_function(
    layers: &[(IntervalSet, BigRational)],
    target_resid: &BigRational,
) -> StepRepresentation {
    let mut atlas = WeightedAtlas::default();
    let mut remainders = vec![];
    let mut f_mass = BigRational::zero();
    for (set, c) in layers {
        assert!(*c >= BigRational::zero());
        f_mass += c.clone() * mu_measure(set);
        if c.is_zero() || set.is_empty() {
            remainders.push(IntervalSet::empty());
            continue;
        }
        let rep = represent_indicator(set, target_resid);
        atlas.extend(rep.atlas.scale(c));
        remainders.push(rep.remainder);
    }
    let mass_gap = atlas.l1_norm() - f_mass;
    StepRepresentation {
        atlas,
        remainders,
        mass_gap,
    }
}

/// Samples (X, Y) from the joint law in floating point: pick a band with
/// probability 15·(band length), a uniform position inside it, and a fair
/// branch coin. The affine branches collapse to
/// `x = u(1 − 4^{−m}) (+ 4^{−m} for the upper branch)`.
pub fn sample_xy(rng: &mut impl Rng) -> (f64, f64, u32) {
    let mut u = rng.gen::<f64>();
    let mut m = 1u32;
    loop {
        let mass = 15.0 * (0.25f64.powi(m as i32 + 1) - 0.25f64.powi(2 * m as i32 + 1));
        if u < mass || m >= 60 {
            break;
        }
        u -= mass;
        m += 1;
    }
    let pos = rng.gen::<f64>();
    let q4 = 0.25f64.powi(m as i32);
    let y = 0.5f64.powi(m as i32) - 0.25 * q4 + pos * (0.25 * q4 - 0.25f64.powi(2 * m as i32 + 1));
    let mut x = pos * (1.0 - q4);
    if rng.gen::<bool>() {
        x += q4;
    }
    (x, y, m)
}

/// Fast f64 evaluator of an atlas (for Monte Carlo): per band, sorted
/// interval endpoints with weights.
pub struct AtlasEvaluator {
    by_band: std::collections::BTreeMap<u32, Vec<(f64, f64, f64)>>,
}

impl AtlasEvaluator {
    pub fn new(atlas: &WeightedAtlas) -> Self {
        let mut by_band: std::collections::BTreeMap<u32, Vec<(f64, f64, f64)>> =
            Default::default();
        for p in &atlas.pieces {
            let w = crate::scalar::Scalar::to_f64(&p.weight);
            let entry = by_band.entry(p.m).or_default();
            for (a, b) in p.ys.pieces() {
                entry.push((
                    crate::scalar::Scalar::to_f64(a),
                    crate::scalar::Scalar::to_f64(b),
                    w,
                ));
            }
        }
        for v in by_band.values_mut() {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        AtlasEvaluator { by_band }
    }

    pub fn eval(&self, m: u32, y: f64) -> f64 {
        let Some(v) = self.by_band.get(&m) else {
            return 0.0;
        };
        let idx = v.partition_point(|(a, _, _)| *a <= y);
        // Pieces within a band are disjoint and sorted, so the scan stops at
        // the first interval ending at or before y.
        let mut total = 0.0;
        for &(_, b, w) in v[..idx].iter().rev() {
            if y < b {
                total += w;
            } else {
                break;
            }
        }
        total
    }
}
