//! The conditional-expectation operator `T`, its adjoint, and duality-based
//! surjectivity certificates.
//!
//! `Tg(x) = E[g(Y) | X = x]` acts on L¹(ν) into L¹(μ); its adjoint
//! `T*f(y) = E[f(X) | Y = y]` acts between the dual L∞ spaces. Surjectivity
//! of T is certified through lower bounds on `‖T*f‖_∞ / ‖f‖_∞`.

use num::rational::BigRational;
use num::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{CondrepError, Result};
use crate::intervals::IntervalSet;
use crate::measures::DiscreteJoint;
use crate::rngutil::stream;
use crate::scalar::{ratio, Scalar};

/// `f_i = Σ_j π_{X=x_i}({y_j}) g_j`.
pub fn apply_t<S: Scalar>(dj: &DiscreteJoint<S>, g: &[S]) -> Result<Vec<S>> {
    if g.len() != dj.ncols() {
        return Err(CondrepError::DimensionMismatch {
            expected: dj.ncols(),
            got: g.len(),
        });
    }
    let m = dj.kernel_x_given();
    Ok((0..dj.nrows())
        .map(|i| {
            (0..dj.ncols()).fold(S::zero(), |acc, j| {
                acc + m.entry(i, j).clone() * g[j].clone()
            })
        })
        .collect())
}

/// `g*_j = Σ_i π_{Y=y_j}({x_i}) f*_i`.
pub fn apply_tstar<S: Scalar>(dj: &DiscreteJoint<S>, fstar: &[S]) -> Result<Vec<S>> {
    if fstar.len() != dj.nrows() {
        return Err(CondrepError::DimensionMismatch {
            expected: dj.nrows(),
            got: fstar.len(),
        });
    }
    let m = dj.kernel_y_given();
    Ok((0..dj.ncols())
        .map(|j| {
            (0..dj.nrows()).fold(S::zero(), |acc, i| {
                acc + m.entry(j, i).clone() * fstar[i].clone()
            })
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    /// `‖Tg‖_{L¹(μ)} ≤ ‖g‖_{L¹(ν)}` held on every trial.
    pub l1_nonexpansive: bool,
    /// `‖T*f‖_∞ ≤ ‖f‖_∞` held on every trial.
    pub linf_nonexpansive: bool,
    /// Smallest observed `‖T*f‖_∞` over random sign patterns `f ∈ {±1}^I`;
    /// an estimate of the surjectivity constant δ.
    pub delta_estimate: f64,
    pub trials: usize,
}

/// Samples random vectors to check non-expansiveness and to estimate the
/// constant δ in `‖T*f‖_∞ ≥ δ ‖f‖_∞`.
pub fn operator_norm_bounds(dj: &DiscreteJoint<f64>, trials: usize, seed: u64) -> NormReport {
    assert!(trials >= 1);
    let (mu, nu) = dj.marginals();
    let mut rng = stream(seed, 0);
    let mut l1_ok = true;
    let mut linf_ok = true;
    let mut delta = f64::INFINITY;
    for _ in 0..trials {
        let g: Vec<f64> = (0..dj.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tg = apply_t(dj, &g).expect("dims");
        let l1 = |v: &[f64], w: &[f64]| -> f64 {
            v.iter().zip(w).map(|(x, wi)| x.abs() * wi).sum()
        };
        if l1(&tg, &mu) > l1(&g, &nu) + 1e-12 {
            l1_ok = false;
        }

        let f: Vec<f64> = (0..dj.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tf = apply_tstar(dj, &f).expect("dims");
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if sup(&tf) > sup(&f) + 1e-12 {
            linf_ok = false;
        }

        let signs: Vec<f64> = (0..dj.nrows())
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let tsigns = apply_tstar(dj, &signs).expect("dims");
        delta = delta.min(sup(&tsigns));
    }
    NormReport {
        l1_nonexpansive: l1_ok,
        linf_nonexpansive: linf_ok,
        delta_estimate: delta,
        trials,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReport {
    pub xi: f64,
    pub surjective: bool,
    /// Certified lower bound `δ = 2ξ − 1` when `ξ > 1/2`.
    pub delta: Option<f64>,
    /// Row subset attaining the minimum (0-based indices).
    pub argmin: Vec<usize>,
}

/// Exact subset-enumeration criterion: `ξ = min_{∅≠A} max_j π_{Y=y_j}(A)`.
/// T is onto L¹(μ) whenever `ξ > 1/2`.
pub fn xi_criterion<S: Scalar>(dj: &DiscreteJoint<S>, max_i: usize) -> Result<XiReport> {
    let i = dj.nrows();
    if i > max_i || i > 20 {
        return Err(CondrepError::TooLarge(i, max_i.min(20)));
    }
    let mstar = dj.kernel_y_given();
    let mut xi = f64::INFINITY;
    let mut argmin = vec![];
    for mask in 1u32..(1 << i) {
        let rows: Vec<usize> = (0..i).filter(|r| mask >> r & 1 == 1).collect();
        let best = (0..dj.ncols())
            .map(|j| {
                rows.iter()
                    .fold(S::zero(), |acc, &r| acc + mstar.entry(j, r).clone())
                    .to_f64()
            })
            .fold(0.0f64, f64::max);
        if best < xi {
            xi = best;
            argmin = rows;
        }
    }
    let surjective = xi > 0.5;
    Ok(XiReport {
        xi,
        surjective,
        delta: surjective.then(|| 2.0 * xi - 1.0),
        argmin,
    })
}

/// The law of `(X, Y)` with `Y = I·X + (1−I)·X'`, `I ~ Bernoulli(p)`
/// independent, `X, X' ~ μ` iid: `π_{X=x} = p δ_x + (1−p) μ`.
#[derive(Debug, Clone)]
pub struct BernoulliMixture<S: Scalar> {
    pub p: S,
    pub support: Vec<f64>,
    pub mu: Vec<S>,
}

impl<S: Scalar> BernoulliMixture<S> {
    pub fn new(p: S, support: Vec<f64>, mu: Vec<S>) -> Result<Self> {
        if p <= S::zero() || p >= S::one() {
            return Err(CondrepError::Parse("mixing weight must lie in (0,1)".into()));
        }
        if support.len() != mu.len() {
            return Err(CondrepError::DimensionMismatch {
                expected: support.len(),
                got: mu.len(),
            });
        }
        let total = mu.iter().fold(S::zero(), |a, v| a + v.clone());
        if !(total - S::one()).is_zero_tol() || mu.iter().any(|v| *v <= S::zero()) {
            return Err(CondrepError::Parse(
                "mixture marginal must be a probability vector with positive atoms".into(),
            ));
        }
        Ok(BernoulliMixture { p, support, mu })
    }

    pub fn uniform(p: S, k: usize) -> Self {
        let support = (0..k).map(|i| i as f64).collect();
        let w = S::one() / S::from_f64(k as f64);
        BernoulliMixture {
            p,
            support,
            mu: vec![w; k],
        }
    }

    /// Joint law on the common support: `P_ij = μ_i (p 1_{i=j} + (1−p) μ_j)`.
    pub fn to_joint(&self) -> DiscreteJoint<S> {
        let k = self.mu.len();
        let p = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let mix = if i == j {
                            self.p.clone() + (S::one() - self.p.clone()) * self.mu[j].clone()
                        } else {
                            (S::one() - self.p.clone()) * self.mu[j].clone()
                        };
                        self.mu[i].clone() * mix
                    })
                    .collect()
            })
            .collect();
        let xs = self.support.iter().map(|&x| S::from_f64(x)).collect();
        DiscreteJoint::new(xs, self.support.clone(), p).expect("mixture law is valid")
    }
}

/// Closed-form solution of `Tg = f` for the Bernoulli mixture:
/// `g = (f − E[f]) / p + E[f]`. Returns the solution together with a flag for
/// a nonvanishing negative part (g < 0 somewhere iff f dips below
/// `(1−p)·E[f]` on an atom).
pub fn bernoulli_mixture_g<S: Scalar>(bm: &BernoulliMixture<S>, f: &[S]) -> Result<(Vec<S>, bool)> {
    if f.len() != bm.mu.len() {
        return Err(CondrepError::DimensionMismatch {
            expected: bm.mu.len(),
            got: f.len(),
        });
    }
    let ef = bm
        .mu
        .iter()
        .zip(f)
        .fold(S::zero(), |a, (w, v)| a + w.clone() * v.clone());
    let g: Vec<S> = f
        .iter()
        .map(|v| (v.clone() - ef.clone()) / bm.p.clone() + ef.clone())
        .collect();
    let negative = g.iter().any(|v| *v < -S::tol());
    Ok((g, negative))
}

/// The window family from the surjective-but-not-(R_+) construction:
/// `A_y = [{y} − 2^{−⌊y⌋}, {y} + 2^{−⌊y⌋}] ∩ [0,1]` shrinks as ⌊y⌋ grows, so
/// every positive-length set meets some window with high density.
#[derive(Debug, Clone)]
pub struct Cor2Law {
    pub n_max: u32,
}

impl Default for Cor2Law {
    fn default() -> Self {
        Cor2Law { n_max: 24 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cor2Witness {
    pub n: u32,
    /// Window center as an exact dyadic rational.
    pub center: (i64, i64),
    pub density: f64,
}

impl Cor2Law {
    /// The window `A_y` for `y ≥ 0`.
    pub fn window(&self, y: &BigRational) -> Result<IntervalSet> {
        if *y < BigRational::zero() {
            return Err(CondrepError::Parse(format!("window point {y} must be ≥ 0")));
        }
        let floor = y.floor();
        let frac = y - &floor;
        let fl: u32 = floor
            .to_integer()
            .try_into()
            .map_err(|_| CondrepError::Parse("window exponent overflow".into()))?;
        let radius = ratio(1, 1) / ratio(2i64.pow(fl.min(62)), 1);
        let lo = (&frac - &radius).max(BigRational::zero());
        let hi = (&frac + &radius).min(BigRational::one());
        if lo >= hi {
            return Ok(IntervalSet::empty());
        }
        IntervalSet::new(vec![(lo, hi)])
    }

    /// Searches dyadic windows `[c − 2^{−n}, c + 2^{−n}]` with centers on the
    /// grid of step `2^{−(n+2)}` for one where `A` has density > `delta`.
    pub fn check(&self, a: &IntervalSet, delta: &BigRational) -> Option<Cor2Witness> {
        if a.is_empty() {
            return None;
        }
        for n in 1..=self.n_max {
            let step = 4i64.checked_mul(1 << n)?; // grid denominator 2^{n+2}
            for k in 0..=step {
                let c = ratio(k, step);
                let lo = (&c - ratio(1, 1 << n)).max(BigRational::zero());
                let hi = (&c + ratio(1, 1 << n)).min(BigRational::one());
                if lo >= hi {
                    continue;
                }
                let w = IntervalSet::new(vec![(lo, hi)]).expect("valid window");
                let len = w.length();
                let inter = a.intersection(&w).length();
                if &inter > &(delta.clone() * len.clone()) {
                    return Some(Cor2Witness {
                        n,
                        center: (k, step),
                        density: (inter / len).to_f64(),
                    });
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::pattern_matrix_4x6;
    use crate::rngutil::random_rational_joint;
    use nalgebra::{DMatrix, DVector};
    use num::Signed;

    fn skewed_2x2() -> DiscreteJoint<f64> {
        DiscreteJoint::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![vec![0.375, 0.125], vec![0.125, 0.375]],
        )
        .unwrap()
    }

    #[test]
    fn t_of_constant_is_constant() {
        let dj = pattern_matrix_4x6();
        let g = vec![BigRational::one(); 6];
        let f = apply_t(&dj, &g).unwrap();
        assert!(f.iter().all(|v| *v == BigRational::one()));
    }

    #[test]
    fn t_matches_hand_computation() {
        let f = apply_t(&skewed_2x2(), &[1.5, -0.5]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-12 && f[1].abs() < 1e-12);
    }

    #[test]
    fn adjoint_identity_on_random_pairs() {
        let mut rng = stream(3, 0);
        for trial in 0..1000 {
            let dj = random_rational_joint(&mut rng, 2 + trial % 3, 4 + trial % 3, trial % 2 == 0)
                .to_f64();
            let (mu, nu) = dj.marginals();
            let g: Vec<f64> = (0..dj.ncols()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fs: Vec<f64> = (0..dj.nrows()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let tg = apply_t(&dj, &g).unwrap();
            let tsf = apply_tstar(&dj, &fs).unwrap();
            let lhs: f64 = fs.iter().zip(&tg).zip(&mu).map(|((a, b), w)| a * b * w).sum();
            let rhs: f64 = tsf.iter().zip(&g).zip(&nu).map(|((a, b), w)| a * b * w).sum();
            assert!((lhs - rhs).abs() < 1e-12, "trial {trial}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn norm_bounds_report() {
        let dirac_cover = pattern_matrix_4x6().to_f64();
        let r = operator_norm_bounds(&dirac_cover, 200, 5);
        assert!(r.l1_nonexpansive && r.linf_nonexpansive);
        assert!((r.delta_estimate - 1.0).abs() < 1e-12);
        assert!(r.delta_estimate <= 1.0 + 1e-12);

        let product = DiscreteJoint::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![vec![0.25, 0.25], vec![0.25, 0.25]],
        )
        .unwrap();
        let r = operator_norm_bounds(&product, 200, 5);
        // T*f is the constant ⟨f, μ⟩; mixed signs drive it to 0.
        assert!(r.delta_estimate < 1e-12);
    }

    #[test]
    fn xi_on_dirac_cover_and_uniform_mixture() {
        let r = xi_criterion(&pattern_matrix_4x6(), 12).unwrap();
        assert!((r.xi - 1.0).abs() < 1e-12);
        assert_eq!(r.delta, Some(1.0));

        // p = 3/4, μ uniform on 4 atoms: ξ = p + (1−p)/4 = 0.8125.
        let bm = BernoulliMixture::uniform(ratio(3, 4), 4);
        let r = xi_criterion(&bm.to_joint(), 12).unwrap();
        assert!((r.xi - 0.8125).abs() < 1e-12);
        assert!(r.surjective);
        assert!((r.delta.unwrap() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn xi_ess_sup_formula_for_mixtures() {
        // π_{Y=y}(A) = p·1_A(y) + (1−p)μ(A); the max over y hits
        // p + (1−p)μ(A) whenever A ≠ ∅.
        let bm = BernoulliMixture::new(
            ratio(2, 5),
            vec![0.0, 1.0, 2.0],
            vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)],
        )
        .unwrap();
        let dj = bm.to_joint();
        let mstar = dj.kernel_y_given();
        for mask in 1u32..(1 << 3) {
            let rows: Vec<usize> = (0..3).filter(|r| mask >> r & 1 == 1).collect();
            let mu_a = rows
                .iter()
                .fold(BigRational::zero(), |a, &r| a + bm.mu[r].clone());
            let expect = bm.p.clone() + (BigRational::one() - bm.p.clone()) * mu_a;
            let got = (0..3)
                .map(|j| {
                    rows.iter()
                        .fold(BigRational::zero(), |a, &r| a + mstar.entry(j, r).clone())
                })
                .max()
                .unwrap();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn xi_too_large() {
        let dj = pattern_matrix_4x6();
        assert!(matches!(
            xi_criterion(&dj, 3),
            Err(CondrepError::TooLarge(4, 3))
        ));
    }

    #[test]
    fn surjective_verdict_implies_unconstrained_solvability() {
        let bm = BernoulliMixture::uniform(0.75f64, 4);
        let dj = bm.to_joint();
        let r = xi_criterion(&dj, 12).unwrap();
        assert!(r.surjective);
        let kernel = dj.kernel_x_given();
        let m = DMatrix::from_fn(4, 4, |i, j| *kernel.entry(i, j));
        let mut rng = stream(9, 1);
        for _ in 0..20 {
            let f = DVector::from_fn(4, |_, _| rng.gen_range(0.0..2.0));
            let g = m.clone().svd(true, true).solve(&f, 1e-14).unwrap();
            let resid = (&m * &g - &f).amax();
            assert!(resid <= 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn mixture_closed_form() {
        let bm = BernoulliMixture::uniform(ratio(1, 2), 2);
        let (g, neg) = bernoulli_mixture_g(&bm, &[ratio(1, 1), ratio(0, 1)]).unwrap();
        assert_eq!(g, vec![ratio(3, 2), ratio(-1, 2)]);
        assert!(neg);
        // Tg = f exactly under the mixture joint.
        let f = apply_t(&bm.to_joint(), &g).unwrap();
        assert_eq!(f, vec![ratio(1, 1), ratio(0, 1)]);
    }

    #[test]
    fn mixture_constant_and_indicator_infeasibility() {
        let bm = BernoulliMixture::uniform(ratio(1, 2), 3);
        let c = ratio(7, 2);
        let (g, neg) = bernoulli_mixture_g(&bm, &vec![c.clone(); 3]).unwrap();
        assert!(!neg);
        assert!(g.iter().all(|v| *v == c));

        // Indicator targets always force a negative part, so the
        // sign-constrained solve refuses them.
        let f = vec![ratio(1, 1), ratio(0, 1), ratio(0, 1)];
        let (_, neg) = bernoulli_mixture_g(&bm, &f).unwrap();
        assert!(neg);
        let res =
            crate::representation::solve_nonneg(&bm.to_joint(), &f, &BigRational::zero()).unwrap();
        assert!(!res.is_feasible());
    }

    #[test]
    fn mixture_l1_inflation() {
        // ‖g‖_{L¹(ν)} ≥ ‖f‖_{L¹(μ)}, equality iff g ≥ 0.
        let bm = BernoulliMixture::uniform(ratio(1, 2), 2);
        let dj = bm.to_joint();
        let (_, nu) = dj.marginals();
        let (mu, _) = dj.marginals();
        for f in [
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(2, 1), ratio(2, 1)],
            vec![ratio(3, 2), ratio(1, 2)],
        ] {
            let (g, neg) = bernoulli_mixture_g(&bm, &f).unwrap();
            let gl1 = nu
                .iter()
                .zip(&g)
                .fold(BigRational::zero(), |a, (w, v)| a + w.clone() * v.abs());
            let fl1 = mu
                .iter()
                .zip(&f)
                .fold(BigRational::zero(), |a, (w, v)| a + w.clone() * v.abs());
            assert!(gl1 >= fl1);
            assert_eq!(gl1 == fl1, !neg);
        }
    }

    #[test]
    fn cor2_window_values() {
        let law = Cor2Law::default();
        // y = 3.25: fractional part 1/4, radius 2^{-3}.
        let w = law.window(&ratio(13, 4)).unwrap();
        assert_eq!(w, IntervalSet::interval((1, 8), (3, 8)).unwrap());
        // y < 1 gives radius 1: the whole unit interval.
        assert_eq!(law.window(&ratio(1, 2)).unwrap(), IntervalSet::unit());
        assert!(law.window(&ratio(-1, 2)).is_err());
    }

    #[test]
    fn cor2_check_full_set_and_small_set() {
        let law = Cor2Law::default();
        let full = IntervalSet::unit();
        let w = law.check(&full, &ratio(99, 100)).unwrap();
        assert!(w.density > 0.99);

        let a = IntervalSet::interval((3, 10), (2, 5)).unwrap();
        let w = law.check(&a, &ratio(9, 10)).unwrap();
        // The witness window must sit inside [0.3, 0.4) up to the density gap.
        let c = ratio(w.center.0, w.center.1);
        assert!(c > ratio(1, 4) && c < ratio(9, 20), "center {c}");
        assert!(w.density > 0.9);

        assert!(law.check(&IntervalSet::empty(), &ratio(9, 10)).is_none());
    }
}
