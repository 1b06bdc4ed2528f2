//! Dense simplex with Bland's rule (exact over rationals, tolerant over f64)
//! and a Lawson-Hanson nonnegative least squares solver.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Outcome of `minimize cᵀx s.t. Ax = b, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct SimplexOutcome<S> {
    pub objective: S,
    pub solution: Vec<S>,
    /// Dual multipliers y = c_Bᵀ B⁻¹, one per row.
    pub duals: Vec<S>,
}

/// Full-tableau simplex. `id_cols[i]` must name a column that is the i-th unit
/// vector in `a`, with `b >= 0`; these columns form the starting basis.
/// Bland's rule guarantees termination, including in exact arithmetic.
pub fn simplex_min<S: Scalar>(
    a: &[Vec<S>],
    b: &[S],
    c: &[S],
    id_cols: &[usize],
) -> SimplexOutcome<S> {
    let m = a.len();
    let n = if m > 0 { a[0].len() } else { 0 };
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);
    assert_eq!(id_cols.len(), m);
    debug_assert!(b.iter().all(|v| *v >= -S::tol()));

    // tableau[i] = row of A with the RHS appended.
    let mut tab: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut basis: Vec<usize> = id_cols.to_vec();

    // Reduced cost row: c_j - Σ_i c_{basis_i} tab[i][j].
    let mut cost: Vec<S> = (0..=n)
        .map(|j| {
            let direct = if j < n { c[j].clone() } else { S::zero() };
            let through_basis = (0..m).fold(S::zero(), |acc, i| {
                acc + c[basis[i]].clone() * tab[i][j].clone()
            });
            direct - through_basis
        })
        .collect();

    loop {
        // Bland: entering column = smallest index with negative reduced cost.
        let entering = (0..n).find(|&j| cost[j] < -S::tol());
        let Some(e) = entering else { break };

        // Ratio test; ties broken by smallest basis variable index (Bland).
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if tab[i][e] > S::tol() {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let lhs = tab[i][n].clone() * tab[l][e].clone();
                        let rhs = tab[l][n].clone() * tab[i][e].clone();
                        lhs < rhs || (lhs == rhs && basis[i] < basis[l])
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
        }
        let l = leave.expect("phase objective is bounded below; no unbounded ray");

        // Pivot on (l, e).
        let piv = tab[l][e].clone();
        for v in tab[l].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        for i in 0..m {
            if i != l && !tab[i][e].is_zero() {
                let factor = tab[i][e].clone();
                for j in 0..=n {
                    let delta = factor.clone() * tab[l][j].clone();
                    tab[i][j] = tab[i][j].clone() - delta;
                }
            }
        }
        if !cost[e].is_zero() {
            let factor = cost[e].clone();
            for j in 0..=n {
                let delta = factor.clone() * tab[l][j].clone();
                cost[j] = cost[j].clone() - delta;
            }
        }
        basis[l] = e;
    }

    let mut solution = vec![S::zero(); n];
    for i in 0..m {
        solution[basis[i]] = tab[i][n].clone();
    }
    let objective = (0..n).fold(S::zero(), |acc, j| {
        acc + c[j].clone() * solution[j].clone()
    });
    // y_i = c_{id_i} - reduced_cost(id_i): the initial identity columns carry
    // the multipliers.
    let duals = id_cols
        .iter()
        .map(|&col| c[col].clone() - cost[col].clone())
        .collect();
    SimplexOutcome {
        objective,
        solution,
        duals,
    }
}

/// Nonnegative least squares: minimize ‖W(Ax − b)‖₂ over x ≥ 0, where
/// `W = diag(sqrt(row_weights))`. Lawson-Hanson active set.
pub fn nnls_weighted(a: &DMatrix<f64>, b: &DVector<f64>, row_weights: &[f64]) -> DVector<f64> {
    let m = a.nrows();
    let n = a.ncols();
    let mut wa = a.clone();
    let mut wb = b.clone();
    for i in 0..m {
        let s = row_weights[i].max(0.0).sqrt();
        for j in 0..n {
            wa[(i, j)] *= s;
        }
        wb[i] *= s;
    }

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-11 * wa.amax().max(1.0);

    for _outer in 0..(3 * n + 10) {
        let residual = &wb - &wa * &x;
        let grad = wa.transpose() * residual;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if !passive[j] && grad[j] > tol {
                if best.map_or(true, |(_, g)| grad[j] > g) {
                    best = Some((j, grad[j]));
                }
            }
        }
        let Some((enter, _)) = best else { break };
        passive[enter] = true;

        // Inner loop: solve the unconstrained LS on the passive set, backing
        // off along the segment when a passive coordinate would go negative.
        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = wa.select_columns(cols.iter());
            let z_sub = sub
                .svd(true, true)
                .solve(&wb, 1e-12)
                .expect("svd solve");
            let mut z = DVector::zeros(n);
            for (k, &j) in cols.iter().enumerate() {
                z[j] = z_sub[k];
            }
            if cols.iter().all(|&j| z[j] > tol) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &cols {
                if z[j] <= tol {
                    let denom = x[j] - z[j];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for j in 0..n {
                x[j] += alpha * (z[j] - x[j]);
            }
            for &j in &cols {
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !(0..n).any(|j| passive[j]) {
                break;
            }
        }
    }
    x
}
