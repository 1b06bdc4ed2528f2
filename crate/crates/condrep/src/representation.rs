//! Deciding the representation property (R_+) on finite supports.
//!
//! On finite support the property holds iff there is an injective τ picking,
//! for every x-atom, a y-column whose reverse conditional is the Dirac mass at
//! that atom. `decide_rplus` cross-checks this combinatorial criterion against
//! a linear-programming decision over all indicator targets.

use serde::Serialize;

use crate::error::{CondrepError, Result};
use crate::linsolve::simplex_min;
use crate::measures::DiscreteJoint;
use crate::scalar::Scalar;

/// Injective map row -> column witnessing the finite-support criterion:
/// column `tau[i]` is nonzero only in row `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauWitness {
    /// 0-based column index per row.
    pub tau: Vec<usize>,
}

/// Either a nonnegative solution of `Mg = f` or a Farkas certificate `cert`
/// with `certᵀM ≤ tol` componentwise and `certᵀf > tol`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityResult<S> {
    Feasible(Vec<S>),
    Infeasible(Vec<S>),
}

impl<S> FeasibilityResult<S> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible(_))
    }
}

/// Finds the smallest-index τ witness, or `None` when condition (D) fails.
pub fn find_tau<S: Scalar>(dj: &DiscreteJoint<S>) -> Option<TauWitness> {
    let mut tau = Vec::with_capacity(dj.nrows());
    for i in 0..dj.nrows() {
        // Candidate columns: concentrated in row i with positive mass there.
        let j = (0..dj.ncols()).find(|&j| {
            dj.dirac_row(j) == Some(i) && !dj.weights()[i][j].is_zero_tol()
        })?;
        tau.push(j);
    }
    // Injectivity is automatic: a column concentrated in row i cannot also be
    // concentrated in another row.
    Some(TauWitness { tau })
}

/// Condition (D): every row puts positive mass on the Dirac set.
pub fn check_condition_d<S: Scalar>(dj: &DiscreteJoint<S>) -> bool {
    let d = dj.dirac_set(0.0);
    (0..dj.nrows()).all(|i| d.iter().any(|&j| !dj.weights()[i][j].is_zero_tol()))
}

/// Constructive solution under condition (D): mass for row i is spread over
/// the Dirac columns concentrated at i, scaled so that `Mg = f` exactly.
pub fn construct_g_dirac<S: Scalar>(dj: &DiscreteJoint<S>, f: &[S]) -> Result<Vec<S>> {
    if f.len() != dj.nrows() {
        return Err(CondrepError::DimensionMismatch {
            expected: dj.nrows(),
            got: f.len(),
        });
    }
    if !check_condition_d(dj) {
        return Err(CondrepError::ConditionDViolated);
    }
    let m = dj.kernel_x_given();
    let d = dj.dirac_set(0.0);
    let mut g = vec![S::zero(); dj.ncols()];
    for i in 0..dj.nrows() {
        let cols: Vec<usize> = d
            .iter()
            .copied()
            .filter(|&j| dj.dirac_row(j) == Some(i))
            .collect();
        let total = cols
            .iter()
            .fold(S::zero(), |acc, &j| acc + m.entry(i, j).clone());
        for &j in &cols {
            g[j] = f[i].clone() / total.clone();
        }
    }
    Ok(g)
}

/// Decides `∃ g ≥ 0 : |Mg − f|_∞ ≤ tol` by simplex phase one. With `tol = 0`
/// (rational mode) the decision is exact.
pub fn solve_nonneg<S: Scalar>(
    dj: &DiscreteJoint<S>,
    f: &[S],
    tol: &S,
) -> Result<FeasibilityResult<S>> {
    let m = dj.nrows();
    let n = dj.ncols();
    if f.len() != m {
        return Err(CondrepError::DimensionMismatch {
            expected: m,
            got: f.len(),
        });
    }
    let kernel = dj.kernel_x_given();

    if tol.is_zero() {
        // Minimize Σ artificials over {Mg + a = f, g ≥ 0, a ≥ 0}.
        let mut a = Vec::with_capacity(m);
        for i in 0..m {
            let mut row: Vec<S> = kernel.rows()[i].clone();
            for k in 0..m {
                row.push(if k == i { S::one() } else { S::zero() });
            }
            a.push(row);
        }
        let mut c = vec![S::zero(); n];
        c.extend(std::iter::repeat(S::one()).take(m));
        let id_cols: Vec<usize> = (n..n + m).collect();
        let out = simplex_min(&a, f, &c, &id_cols);
        if out.objective.is_zero_tol() {
            return Ok(FeasibilityResult::Feasible(out.solution[..n].to_vec()));
        }
        return Ok(FeasibilityResult::Infeasible(out.duals));
    }

    // Tolerance mode: feasibility of f − tol ≤ Mg ≤ f + tol via a boxed slack
    // w ∈ [0, 2 tol]:  Mg + w = f + tol,  w + w' = 2 tol.
    // Columns: g (n) | w (m) | w' (m) | artificials (m).
    let two_tol = tol.clone() + tol.clone();
    let ncols = n + 3 * m;
    let mut a = vec![vec![S::zero(); ncols]; 2 * m];
    let mut b = vec![S::zero(); 2 * m];
    for i in 0..m {
        for j in 0..n {
            a[i][j] = kernel.entry(i, j).clone();
        }
        a[i][n + i] = S::one();
        a[i][n + 2 * m + i] = S::one();
        b[i] = f[i].clone() + tol.clone();
        a[m + i][n + i] = S::one();
        a[m + i][n + m + i] = S::one();
        b[m + i] = two_tol.clone();
    }
    let mut c = vec![S::zero(); ncols];
    for i in 0..m {
        c[n + 2 * m + i] = S::one();
    }
    let id_cols: Vec<usize> = (n + 2 * m..n + 3 * m)
        .chain(n + m..n + 2 * m)
        .collect();
    let out = simplex_min(&a, &b, &c, &id_cols);
    // Residual tolerance for "phase objective is zero": scale-aware for f64.
    let zero_tol = S::from_f64(1e-9);
    if out.objective <= zero_tol {
        return Ok(FeasibilityResult::Feasible(out.solution[..n].to_vec()));
    }
    // Block-one duals certify infeasibility; rescale so certᵀf clears tol.
    let cert: Vec<S> = out.duals[..m].to_vec();
    let cert_f = cert
        .iter()
        .zip(f)
        .fold(S::zero(), |acc, (y, fi)| acc + y.clone() * fi.clone());
    let target = tol.clone() + S::one();
    let scaled = if cert_f > S::zero() {
        cert.iter()
            .map(|y| y.clone() * target.clone() / cert_f.clone())
            .collect()
    } else {
        cert
    };
    Ok(FeasibilityResult::Infeasible(scaled))
}

/// Independently re-checks a Farkas certificate against the stated
/// inequalities.
pub fn verify_certificate<S: Scalar>(
    dj: &DiscreteJoint<S>,
    f: &[S],
    cert: &[S],
    tol: &S,
) -> bool {
    let kernel = dj.kernel_x_given();
    let n = dj.ncols();
    let m = dj.nrows();
    if cert.len() != m {
        return false;
    }
    for j in 0..n {
        let col = (0..m).fold(S::zero(), |acc, i| {
            acc + cert[i].clone() * kernel.entry(i, j).clone()
        });
        if col > *tol {
            return false;
        }
    }
    let cert_f = cert
        .iter()
        .zip(f)
        .fold(S::zero(), |acc, (y, fi)| acc + y.clone() * fi.clone());
    cert_f > *tol
}

/// Report from the dual-route (R_+) decision.
#[derive(Debug, Clone, Serialize)]
pub struct RplusReport {
    pub rplus: bool,
    pub tau: Option<Vec<usize>>,
    /// LP feasibility of each indicator target e_i.
    pub indicator_feasible: Vec<bool>,
    /// Whether the LP route and the τ route agree.
    pub routes_agree: bool,
}

/// Decides (R_+) by solving `Mg = e_i, g ≥ 0` for every coordinate indicator
/// and cross-checks against `find_tau`.
pub fn decide_rplus<S: Scalar>(dj: &DiscreteJoint<S>) -> Result<RplusReport> {
    let m = dj.nrows();
    let mut indicator_feasible = Vec::with_capacity(m);
    for i in 0..m {
        let mut f = vec![S::zero(); m];
        f[i] = S::one();
        let res = solve_nonneg(dj, &f, &S::tol())?;
        indicator_feasible.push(res.is_feasible());
    }
    let rplus = indicator_feasible.iter().all(|&b| b);
    let tau = find_tau(dj);
    let routes_agree = rplus == tau.is_some();
    Ok(RplusReport {
        rplus,
        tau: tau.map(|t| t.tau),
        indicator_feasible,
        routes_agree,
    })
}

/// Necessary-condition check from the refutation side: for a row subset `A`
/// contained in the rows giving zero mass to the Dirac set, some non-Dirac
/// column must have its x-support inside `A`. Subsets meeting the Dirac rows
/// are vacuously true (the statement conditions on D^c only).
pub fn check_necessary<S: Scalar>(dj: &DiscreteJoint<S>, a_rows: &[usize]) -> Result<bool> {
    if a_rows.is_empty() {
        return Err(CondrepError::EmptyA);
    }
    let d = dj.dirac_set(0.0);
    let zero_mass_rows: Vec<usize> = (0..dj.nrows())
        .filter(|&i| d.iter().all(|&j| dj.weights()[i][j].is_zero_tol()))
        .collect();
    if !a_rows.iter().all(|i| zero_mass_rows.contains(i)) {
        return Ok(true);
    }
    let non_dirac: Vec<usize> = (0..dj.ncols()).filter(|j| !d.contains(j)).collect();
    Ok(non_dirac.iter().any(|&j| {
        (0..dj.nrows())
            .filter(|&i| !dj.weights()[i][j].is_zero_tol())
            .all(|i| a_rows.contains(&i))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::pattern_matrix_4x6;
    use crate::scalar::ratio;
    use num::rational::BigRational;
    use num::Zero;

    fn product_2x2() -> DiscreteJoint<BigRational> {
        DiscreteJoint::new(
            vec![ratio(0, 1), ratio(1, 1)],
            vec![0.0, 1.0],
            vec![
                vec![ratio(1, 4), ratio(1, 4)],
                vec![ratio(1, 4), ratio(1, 4)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn tau_on_pattern_matrix() {
        let dj = pattern_matrix_4x6();
        let w = find_tau(&dj).unwrap();
        assert_eq!(w.tau, vec![1, 0, 3, 5]); // columns 2,1,4,6 in 1-based terms
    }

    #[test]
    fn tau_single_atom() {
        let dj = DiscreteJoint::new(vec![ratio(0, 1)], vec![0.0], vec![vec![ratio(1, 1)]]).unwrap();
        assert_eq!(find_tau(&dj).unwrap().tau, vec![0]);
    }

    #[test]
    fn tau_not_found_on_product_law() {
        assert!(find_tau(&product_2x2()).is_none());
        assert!(!check_condition_d(&product_2x2()));
    }

    #[test]
    fn condition_d_fails_when_a_row_misses_d() {
        // Column 2 (0-based 1) is Dirac at row 2; row 1 puts no mass on D.
        let dj = DiscreteJoint::new(
            vec![ratio(0, 1), ratio(1, 1)],
            vec![0.0, 1.0],
            vec![
                vec![ratio(1, 2), ratio(0, 1)],
                vec![ratio(1, 4), ratio(1, 4)],
            ],
        )
        .unwrap();
        assert_eq!(dj.dirac_set(0.0), vec![1]);
        assert!(!check_condition_d(&dj));
        assert!(find_tau(&dj).is_none());
    }

    #[test]
    fn construct_g_single_atom() {
        let dj = DiscreteJoint::new(vec![ratio(0, 1)], vec![0.0], vec![vec![ratio(1, 1)]]).unwrap();
        let g = construct_g_dirac(&dj, &[ratio(3, 1)]).unwrap();
        assert_eq!(g, vec![ratio(3, 1)]);
    }

    #[test]
    fn construct_g_indicator_on_pattern_matrix() {
        let dj = pattern_matrix_4x6();
        let mut f = vec![BigRational::zero(); 4];
        f[0] = ratio(1, 1);
        let g = construct_g_dirac(&dj, &f).unwrap();
        // Supported on column 2 (index 1) only.
        for (j, v) in g.iter().enumerate() {
            if j == 1 {
                assert!(*v > BigRational::zero());
            } else {
                assert!(v.is_zero());
            }
        }
        // Mg = f exactly.
        let m = dj.kernel_x_given();
        for i in 0..4 {
            let got = (0..6).fold(BigRational::zero(), |acc, j| {
                acc + m.entry(i, j).clone() * g[j].clone()
            });
            assert_eq!(got, f[i]);
        }
    }

    #[test]
    fn construct_g_preserves_l1_mass() {
        let dj = pattern_matrix_4x6();
        let f = vec![ratio(2, 1), ratio(1, 3), ratio(0, 1), ratio(5, 7)];
        let g = construct_g_dirac(&dj, &f).unwrap();
        let (mu, nu) = dj.marginals();
        let lhs = nu
            .iter()
            .zip(&g)
            .fold(BigRational::zero(), |a, (n, v)| a + n.clone() * v.clone());
        let rhs = mu
            .iter()
            .zip(&f)
            .fold(BigRational::zero(), |a, (m, v)| a + m.clone() * v.clone());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn solve_nonneg_product_law_indicator_infeasible() {
        let dj = product_2x2();
        let f = vec![ratio(1, 1), ratio(0, 1)];
        let res = solve_nonneg(&dj, &f, &BigRational::zero()).unwrap();
        match &res {
            FeasibilityResult::Infeasible(cert) => {
                assert!(verify_certificate(&dj, &f, cert, &BigRational::zero()));
            }
            FeasibilityResult::Feasible(_) => panic!("product law cannot represent e_1"),
        }
    }

    #[test]
    fn solve_nonneg_agrees_with_construction_under_d() {
        let dj = pattern_matrix_4x6();
        let f = vec![ratio(1, 2), ratio(1, 4), ratio(3, 4), ratio(1, 8)];
        let res = solve_nonneg(&dj, &f, &BigRational::zero()).unwrap();
        let FeasibilityResult::Feasible(g) = res else {
            panic!("condition (D) instance must be feasible")
        };
        let m = dj.kernel_x_given();
        for i in 0..4 {
            let got = (0..6).fold(BigRational::zero(), |acc, j| {
                acc + m.entry(i, j).clone() * g[j].clone()
            });
            assert_eq!(got, f[i]);
        }
    }

    #[test]
    fn solve_nonneg_scaling_invariance() {
        let dj = pattern_matrix_4x6();
        let f = vec![ratio(1, 2), ratio(1, 4), ratio(3, 4), ratio(1, 8)];
        let c = ratio(7, 3);
        let scaled: Vec<BigRational> = f.iter().map(|v| v.clone() * c.clone()).collect();
        let r1 = solve_nonneg(&dj, &f, &BigRational::zero()).unwrap();
        let r2 = solve_nonneg(&dj, &scaled, &BigRational::zero()).unwrap();
        assert_eq!(r1.is_feasible(), r2.is_feasible());
        if let (FeasibilityResult::Feasible(g), FeasibilityResult::Feasible(_)) = (&r1, &r2) {
            // c·g solves the scaled system.
            let m = dj.kernel_x_given();
            for i in 0..4 {
                let got = (0..6).fold(BigRational::zero(), |acc, j| {
                    acc + m.entry(i, j).clone() * g[j].clone() * c.clone()
                });
                assert_eq!(got, scaled[i]);
            }
        }
    }

    #[test]
    fn solve_nonneg_float_tolerance_mode() {
        let dj = DiscreteJoint::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![vec![0.375, 0.125], vec![0.125, 0.375]],
        )
        .unwrap();
        // M = [[.75,.25],[.25,.75]], f = (1, 0) needs g = (1.5, -0.5): only
        // feasible without the sign constraint.
        let res = solve_nonneg(&dj, &[1.0, 0.0], &1e-9).unwrap();
        assert!(!res.is_feasible());
        if let FeasibilityResult::Infeasible(cert) = &res {
            assert!(verify_certificate(&dj, &[1.0, 0.0], cert, &1e-9));
        }
        // A reachable target is feasible.
        let res = solve_nonneg(&dj, &[0.625, 0.375], &1e-9).unwrap();
        assert!(res.is_feasible());
        // Loose tolerance turns the infeasible target feasible.
        let res = solve_nonneg(&dj, &[0.6, 0.4], &0.2).unwrap();
        assert!(res.is_feasible());
    }

    #[test]
    fn decide_rplus_routes_agree() {
        for (dj, expect) in [(pattern_matrix_4x6(), true), (product_2x2(), false)] {
            let report = decide_rplus(&dj).unwrap();
            assert_eq!(report.rplus, expect);
            assert!(report.routes_agree);
        }
    }

    #[test]
    fn check_necessary_cases() {
        let prod = product_2x2();
        assert!(!check_necessary(&prod, &[0]).unwrap());
        let pat = pattern_matrix_4x6();
        for a in [vec![0], vec![1, 2], vec![0, 1, 2, 3]] {
            assert!(check_necessary(&pat, &a).unwrap());
        }
        assert!(matches!(
            check_necessary(&prod, &[]),
            Err(CondrepError::EmptyA)
        ));
    }

    #[test]
    fn rplus_implies_necessary_for_all_subsets() {
        let dj = pattern_matrix_4x6();
        assert!(decide_rplus(&dj).unwrap().rplus);
        let n = dj.nrows();
        for mask in 1u32..(1 << n) {
            let rows: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            assert!(check_necessary(&dj, &rows).unwrap());
        }
    }
}
