//! Finitely supported joint laws of (X, Y): marginals, conditional kernels,
//! and the Dirac sets D and D_ε.

use num::rational::BigRational;
use num::Zero;

use crate::error::{CondrepError, Result};
use crate::scalar::{format_rational, parse_rational, Scalar};

/// A finitely supported joint law of `(X, Y)` given by a nonnegative weight
/// matrix `P` (I rows over x-atoms, J columns over y-atoms) summing to one.
///
/// Zero rows and zero columns are rejected at construction so both
/// conditional kernels are always defined.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint<S: Scalar> {
    xs: Vec<S>,
    ys: Vec<f64>,
    p: Vec<Vec<S>>,
}

/// Row-stochastic matrix: row r is the conditional law given the r-th
/// conditioning atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalKernel<S: Scalar> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> ConditionalKernel<S> {
    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn entry(&self, r: usize, c: usize) -> &S {
        &self.rows[r][c]
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

impl<S: Scalar> DiscreteJoint<S> {
    pub fn new(xs: Vec<S>, ys: Vec<f64>, p: Vec<Vec<S>>) -> Result<Self> {
        let i = xs.len();
        let j = ys.len();
        if i == 0 || j == 0 {
            return Err(CondrepError::InvalidJoint("empty support".into()));
        }
        if p.len() != i || p.iter().any(|row| row.len() != j) {
            return Err(CondrepError::InvalidJoint(format!(
                "P must be {i}x{j}"
            )));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CondrepError::InvalidJoint(
                "xs must be strictly increasing".into(),
            ));
        }
        for (a, ya) in ys.iter().enumerate() {
            if ys[a + 1..].iter().any(|yb| yb == ya) {
                return Err(CondrepError::InvalidJoint("ys must be distinct".into()));
            }
        }
        let mut total = S::zero();
        for row in &p {
            for v in row {
                if *v < S::zero() {
                    return Err(CondrepError::InvalidJoint("negative entry in P".into()));
                }
                total = total + v.clone();
            }
        }
        if !(total - S::one()).is_zero_tol() {
            return Err(CondrepError::InvalidJoint("entries of P must sum to 1".into()));
        }
        let dj = DiscreteJoint { xs, ys, p };
        let (mu, nu) = dj.marginals();
        if mu.iter().any(|m| m.is_zero_tol()) {
            return Err(CondrepError::InvalidJoint("zero row in P".into()));
        }
        if nu.iter().any(|n| n.is_zero_tol()) {
            return Err(CondrepError::InvalidJoint("zero column in P".into()));
        }
        Ok(dj)
    }

    pub fn nrows(&self) -> usize {
        self.xs.len()
    }

    pub fn ncols(&self) -> usize {
        self.ys.len()
    }

    pub fn xs(&self) -> &[S] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn weights(&self) -> &[Vec<S>] {
        &self.p
    }

    /// Marginals (μ over x-atoms, ν over y-atoms).
    pub fn marginals(&self) -> (Vec<S>, Vec<S>) {
        let mu: Vec<S> = self
            .p
            .iter()
            .map(|row| row.iter().fold(S::zero(), |a, v| a + v.clone()))
            .collect();
        let mut nu = vec![S::zero(); self.ncols()];
        for row in &self.p {
            for (j, v) in row.iter().enumerate() {
                nu[j] = nu[j].clone() + v.clone();
            }
        }
        (mu, nu)
    }

    /// `M[i][j] = π_{X=x_i}({y_j}) = P_ij / μ_i`.
    pub fn kernel_x_given(&self) -> ConditionalKernel<S> {
        let (mu, _) = self.marginals();
        let rows = self
            .p
            .iter()
            .zip(&mu)
            .map(|(row, m)| row.iter().map(|v| v.clone() / m.clone()).collect())
            .collect();
        ConditionalKernel { rows }
    }

    /// `M*[j][i] = π_{Y=y_j}({x_i}) = P_ij / ν_j`.
    pub fn kernel_y_given(&self) -> ConditionalKernel<S> {
        let (_, nu) = self.marginals();
        let rows = (0..self.ncols())
            .map(|j| {
                (0..self.nrows())
                    .map(|i| self.p[i][j].clone() / nu[j].clone())
                    .collect()
            })
            .collect();
        ConditionalKernel { rows }
    }

    /// D = column indices j whose reverse conditional π_{Y=y_j} is a Dirac
    /// mass (up to `tol`). With `tol = 0` these are exactly the columns with a
    /// single nonzero entry.
    pub fn dirac_set(&self, tol: f64) -> Vec<usize> {
        let mstar = self.kernel_y_given();
        let threshold = S::one() - S::from_f64(tol);
        (0..self.ncols())
            .filter(|&j| {
                mstar.rows[j]
                    .iter()
                    .any(|v| *v >= threshold)
            })
            .collect()
    }

    /// D_ε = columns whose x-support fits inside a half-open interval of
    /// length `eps` (support diameter strictly below `eps`).
    pub fn d_epsilon_set(&self, eps: &S) -> Vec<usize> {
        (0..self.ncols())
            .filter(|&j| {
                let support: Vec<&S> = (0..self.nrows())
                    .filter(|&i| !self.p[i][j].is_zero_tol())
                    .map(|i| &self.xs[i])
                    .collect();
                let lo = support.first().expect("no zero columns");
                let hi = support.last().expect("no zero columns");
                (*hi).clone() - (*lo).clone() < *eps
            })
            .collect()
    }

    /// For a column in D (tol 0), the unique row carrying its mass.
    pub fn dirac_row(&self, j: usize) -> Option<usize> {
        let mut found = None;
        for i in 0..self.nrows() {
            if !self.p[i][j].is_zero_tol() {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    }

    /// Product law with the same marginals: `P_ij = μ_i ν_j`.
    pub fn product_of_marginals(&self) -> DiscreteJoint<S> {
        let (mu, nu) = self.marginals();
        let p = mu
            .iter()
            .map(|m| nu.iter().map(|n| m.clone() * n.clone()).collect())
            .collect();
        DiscreteJoint {
            xs: self.xs.clone(),
            ys: self.ys.clone(),
            p,
        }
    }
}

impl DiscreteJoint<BigRational> {
    /// Parses `{"xs": [...], "ys": [...], "P": [[...]]}` with probabilities as
    /// decimal strings (or JSON numbers, converted exactly).
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| CondrepError::Parse("joint: expected object".into()))?;
        let rational = |v: &serde_json::Value| -> Result<BigRational> {
            match v {
                serde_json::Value::String(s) => parse_rational(s)
                    .ok_or_else(|| CondrepError::Parse(format!("bad rational {s}"))),
                serde_json::Value::Number(n) => {
                    let x = n.as_f64().ok_or_else(|| {
                        CondrepError::Parse(format!("bad number {n}"))
                    })?;
                    Ok(Scalar::from_f64(x))
                }
                other => Err(CondrepError::Parse(format!("bad rational {other}"))),
            }
        };
        let field = |name: &str| -> Result<&serde_json::Value> {
            obj.get(name)
                .ok_or_else(|| CondrepError::Parse(format!("joint: missing field {name}")))
        };
        let xs = field("xs")?
            .as_array()
            .ok_or_else(|| CondrepError::Parse("xs: expected array".into()))?
            .iter()
            .map(rational)
            .collect::<Result<Vec<_>>>()?;
        let ys = field("ys")?
            .as_array()
            .ok_or_else(|| CondrepError::Parse("ys: expected array".into()))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| CondrepError::Parse("ys: expected numbers".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let p = field("P")?
            .as_array()
            .ok_or_else(|| CondrepError::Parse("P: expected array".into()))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| CondrepError::Parse("P: expected matrix".into()))?
                    .iter()
                    .map(rational)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteJoint::new(xs, ys, p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "xs": self.xs.iter().map(format_rational).collect::<Vec<_>>(),
            "ys": self.ys.clone(),
            "P": self
                .p
                .iter()
                .map(|row| row.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_f64(&self) -> DiscreteJoint<f64> {
        DiscreteJoint {
            xs: self.xs.iter().map(Scalar::to_f64).collect(),
            ys: self.ys.clone(),
            p: self
                .p
                .iter()
                .map(|row| row.iter().map(Scalar::to_f64).collect())
                .collect(),
        }
    }
}

impl DiscreteJoint<f64> {
    /// Lossless lift to exact rationals (every f64 is dyadic).
    pub fn to_rational(&self) -> DiscreteJoint<BigRational> {
        // Renormalize exactly: the f64 sum is 1 only within tolerance.
        let mut p: Vec<Vec<BigRational>> = self
            .p
            .iter()
            .map(|row| row.iter().map(|&v| Scalar::from_f64(v)).collect())
            .collect();
        let total: BigRational = p
            .iter()
            .flat_map(|r| r.iter())
            .fold(BigRational::zero(), |a, v| a + v);
        for row in &mut p {
            for v in row.iter_mut() {
                *v = v.clone() / total.clone();
            }
        }
        DiscreteJoint {
            xs: self.xs.iter().map(|&x| Scalar::from_f64(x)).collect(),
            ys: self.ys.clone(),
            p,
        }
    }
}

/// The I=4, J=6 pattern matrix used throughout as the canonical law with the
/// representation property: Dirac columns 2, 1, 4, 6 (1-based) for rows 1-4.
pub fn pattern_matrix_4x6() -> DiscreteJoint<BigRational> {
    let r = |n: i64, d: i64| crate::scalar::ratio(n, d);
    // Row layout mirrors the diamond/star pattern; each row sums to 1/4.
    let p = vec![
        vec![r(0, 1), r(1, 8), r(1, 16), r(0, 1), r(1, 16), r(0, 1)],
        vec![r(1, 8), r(0, 1), r(1, 16), r(0, 1), r(1, 16), r(0, 1)],
        vec![r(0, 1), r(0, 1), r(1, 16), r(1, 8), r(1, 16), r(0, 1)],
        vec![r(0, 1), r(0, 1), r(1, 16), r(0, 1), r(1, 16), r(1, 8)],
    ];
    DiscreteJoint::new(
        vec![r(0, 1), r(1, 1), r(2, 1), r(3, 1)],
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        p,
    )
    .expect("pattern matrix is valid")
}
