//! Deterministic RNG streams and random test instances.
//!
//! Monte Carlo code draws from per-particle ChaCha streams keyed by
//! `(seed, stream id)`, so results do not depend on thread count.

use num::rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::measures::DiscreteJoint;
use crate::scalar::ratio;

/// Stream `id` of the generator keyed by `seed`. Streams are independent.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Random rational joint law on supports of size `i x j`. With `planted` the
/// instance carries an injective Dirac-column structure (so the representation
/// property holds); otherwise columns are filled freely and usually none is
/// concentrated in a single row.
pub fn random_rational_joint(
    rng: &mut impl Rng,
    i: usize,
    j: usize,
    planted: bool,
) -> DiscreteJoint<BigRational> {
    assert!(j >= i && i >= 1);
    loop {
        let mut num = vec![vec![0i64; j]; i];
        for (r, row) in num.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = if planted && c < i {
                    // Column c is reserved as the Dirac column of row c.
                    if r == c {
                        rng.gen_range(1..6)
                    } else {
                        0
                    }
                } else {
                    rng.gen_range(0..6)
                };
            }
        }
        // Ensure no zero row / zero column.
        for (r, row) in num.iter_mut().enumerate() {
            if row.iter().all(|v| *v == 0) {
                row[r % j] = 1;
            }
        }
        let col_ok = (0..j).all(|c| num.iter().any(|row| row[c] != 0));
        if !col_ok {
            continue;
        }
        let total: i64 = num.iter().flatten().sum();
        let p = num
            .iter()
            .map(|row| row.iter().map(|&v| ratio(v, total)).collect())
            .collect();
        let xs = (0..i as i64).map(|k| ratio(k, 1)).collect();
        let ys = (0..j).map(|k| k as f64).collect();
        return DiscreteJoint::new(xs, ys, p).expect("constructed law is valid");
    }
}
