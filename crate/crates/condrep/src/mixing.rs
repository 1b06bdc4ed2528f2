//! A mixing sequence of Borel sets with constant mass, built from decimal
//! digits: position-interleaving `φ(m,p) = 2^m(2p−1)` splits the digit string
//! of a uniform variable into independent uniform variables U_m, and
//! `A_m = {x : U_m(F_η(x)) ≤ a}` has η-mass a, pairwise-independent
//! intersections of mass a², and η(Â ∩ A_m) → a·η(Â) for any fixed Â.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::intervals::IntervalSet;
use crate::rngutil::stream;
use crate::scalar::Scalar;

/// Parameters of the construction. Only a diffuse η with an explicit CDF is
/// supported; the uniform law on [0,1] has the identity CDF.
#[derive(Debug, Clone)]
pub struct DigitScheme {
    /// Target mass, in (0,1).
    pub a: BigRational,
    /// Digit truncation depth of U_m.
    pub p: u32,
}

impl DigitScheme {
    pub fn new(a: BigRational, p: u32) -> Self {
        assert!(a > BigRational::zero() && a < BigRational::one());
        assert!(p >= 1);
        DigitScheme { a, p }
    }

    /// `⌊a · 10^P⌋`, the threshold for integer digit comparison.
    pub fn threshold(&self) -> u64 {
        let scaled = &self.a * BigRational::from_integer(BigInt::from(10u64).pow(self.p));
        scaled.floor().to_integer().try_into().expect("P small")
    }
}

/// Digit position used by U_m at depth p (1-based): `φ(m,p) = 2^m(2p − 1)`.
pub fn phi(m: u32, p: u32) -> u64 {
    (1u64 << m) * (2 * p as u64 - 1)
}

/// n-th decimal digit (1-based) of x ∈ [0,1], using the terminating
/// expansion for ties.
pub fn digit(x: &BigRational, n: u64) -> u8 {
    let ten_n = BigRational::from_integer(BigInt::from(10u64).pow(n as u32));
    let shifted = (x * ten_n).floor().to_integer();
    let d: BigInt = shifted % BigInt::from(10u64);
    u8::try_from(d).expect("digit in 0..10")
}

/// P-digit truncation of `U_m(x) = Σ_p D_{φ(m,p)}(x) / 10^p` (exact).
pub fn u_m(x: &BigRational, m: u32, p_depth: u32) -> BigRational {
    let mut num = BigInt::zero();
    for p in 1..=p_depth {
        num = num * BigInt::from(10u64) + BigInt::from(digit(x, phi(m, p)));
    }
    BigRational::new(num, BigInt::from(10u64).pow(p_depth))
}

/// Membership in `A_m = {x : U_m(x) ≤ a}` for uniform η (identity CDF).
/// Truncation at P digits can misclassify only x with U_m within 10^{−P}
/// of the threshold.
pub fn membership(x: &BigRational, m: u32, scheme: &DigitScheme) -> bool {
    u_m(x, m, scheme.p) <= scheme.a
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingRow {
    pub m: u32,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub rows: Vec<MixingRow>,
    pub samples: usize,
}

/// Monte Carlo estimate of `η(Â ∩ A_m)` for each m, η uniform on [0,1].
///
/// Instead of materializing x to thousands of digit positions, only the
/// positions that U_m reads (plus a 20-digit prefix that pins down x for the
/// Â test) are sampled as iid uniform digits — exact in distribution.
pub fn mixing_check(
    scheme: &DigitScheme,
    a_hat: Option<&IntervalSet>,
    m_list: &[u32],
    n: usize,
    seed: u64,
) -> MixingReport {
    let thr = scheme.threshold();
    let a_f = scheme.a.to_f64();
    let hat_pieces: Option<Vec<(f64, f64)>> = a_hat.map(|h| {
        h.pieces()
            .iter()
            .map(|(a, b)| (a.to_f64(), b.to_f64()))
            .collect()
    });
    let hat_len = hat_pieces
        .as_ref()
        .map(|ps| ps.iter().map(|(a, b)| b - a).sum::<f64>())
        .unwrap_or(1.0);

    // All digit positions any U_m reads, plus the value prefix.
    let prefix_len: u64 = 20;
    let mut positions: Vec<u64> = (1..=prefix_len).collect();
    for &m in m_list {
        for p in 1..=scheme.p {
            positions.push(phi(m, p));
        }
    }
    positions.sort_unstable();
    positions.dedup();
    let pos_index = |n: u64| positions.binary_search(&n).expect("known position");

    let mut rng = stream(seed, 0);
    let mut hits = vec![0u64; m_list.len()];
    let mut digits = vec![0u8; positions.len()];
    let scale = 10u64.pow(scheme.p);
    for _ in 0..n {
        for d in digits.iter_mut() {
            *d = rng.gen_range(0..10);
        }
        let in_hat = match &hat_pieces {
            None => true,
            Some(pieces) => {
                let mut x = 0.0f64;
                for k in 1..=prefix_len {
                    x += digits[pos_index(k)] as f64 * 10f64.powi(-(k as i32));
                }
                pieces.iter().any(|&(a, b)| a <= x && x < b)
            }
        };
        if !in_hat {
            continue;
        }
        for (mi, &m) in m_list.iter().enumerate() {
            let mut u = 0u64;
            for p in 1..=scheme.p {
                u = u * 10 + digits[pos_index(phi(m, p))] as u64;
            }
            debug_assert!(u < scale);
            if u <= thr {
                hits[mi] += 1;
            }
        }
    }

    let rows = m_list
        .iter()
        .zip(&hits)
        .map(|(&m, &h)| {
            let est = h as f64 / n as f64;
            let target = a_f * hat_len;
            let se = (target * (1.0 - target) / n as f64).sqrt();
            MixingRow {
                m,
                estimate: est,
                std_error: se,
                target,
            }
        })
        .collect();
    MixingReport {
        rows,
        samples: n,
    }
}

/// Monte Carlo estimate of `η(A_m ∩ A_{m'})` for pairs with m ≠ m'.
pub fn pair_check(
    scheme: &DigitScheme,
    pairs: &[(u32, u32)],
    n: usize,
    seed: u64,
) -> Vec<MixingRow> {
    let thr = scheme.threshold();
    let a_f = scheme.a.to_f64();
    let mut rng = stream(seed, 1);
    let mut hits = vec![0u64; pairs.len()];
    for _ in 0..n {
        // Sample digits lazily per position; positions of distinct m never
        // collide (φ is a bijection), so a fresh map per sample is exact.
        let mut cache: std::collections::HashMap<u64, u64> = Default::default();
        let mut draw = |rng: &mut rand_chacha::ChaCha8Rng, pos: u64| {
            *cache.entry(pos).or_insert_with(|| rng.gen_range(0..10))
        };
        for (pi, &(m1, m2)) in pairs.iter().enumerate() {
            let mut u1 = 0u64;
            let mut u2 = 0u64;
            for p in 1..=scheme.p {
                u1 = u1 * 10 + draw(&mut rng, phi(m1, p));
                u2 = u2 * 10 + draw(&mut rng, phi(m2, p));
            }
            if u1 <= thr && u2 <= thr {
                hits[pi] += 1;
            }
        }
    }
    pairs
        .iter()
        .zip(&hits)
        .map(|(&(m1, m2), &h)| {
            let target = a_f * a_f;
            MixingRow {
                m: m1 * 1000 + m2, // packed pair label
                estimate: h as f64 / n as f64,
                std_error: (target * (1.0 - target) / n as f64).sqrt(),
                target,
            }
        })
        .collect()
}
