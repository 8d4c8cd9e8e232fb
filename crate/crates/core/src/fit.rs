//! Linear least squares by Householder QR, with coefficient standard errors.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    #[error("{rows} observations for {cols} coefficients")]
    Underdetermined { rows: usize, cols: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("observation count {got} does not match design rows {expected}")]
    Length { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit<F> {
    pub coefficients: Vec<F>,
    /// `None` when there are no residual degrees of freedom.
    pub std_errors: Option<Vec<F>>,
    pub residual_sum: F,
}

/// Minimizes |A c - y|. `rows` holds the rows of A.
pub fn least_squares<F: Float>(rows: &[Vec<F>], y: &[F]) -> Result<LinearFit<F>, FitError> {
    let m = rows.len();
    if y.len() != m {
        return Err(FitError::Length { expected: m, got: y.len() });
    }
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 {
        return Err(FitError::Underdetermined { rows: m, cols: n });
    }
    let mut a: Vec<Vec<F>> = rows.to_vec();
    let mut b = y.to_vec();
    let scale = a
        .iter()
        .flatten()
        .fold(F::zero(), |s, &x| s.max(x.abs()))
        .max(F::min_positive_value());
    let tol = scale * F::epsilon() * F::from(m.max(n) * 10).unwrap();
    for k in 0..n {
        let norm = (k..m).fold(F::zero(), |s, i| s + a[i][k] * a[i][k]).sqrt();
        if norm <= tol {
            return Err(FitError::RankDeficient);
        }
        let alpha = if a[k][k] > F::zero() { -norm } else { norm };
        let mut v: Vec<F> = (k..m).map(|i| a[i][k]).collect();
        v[0] = v[0] - alpha;
        let vv = v.iter().fold(F::zero(), |s, &x| s + x * x);
        if vv > F::zero() {
            let two = F::from(2).unwrap();
            for j in k..n {
                let d = (k..m).fold(F::zero(), |s, i| s + v[i - k] * a[i][j]);
                let f = two * d / vv;
                for i in k..m {
                    a[i][j] = a[i][j] - f * v[i - k];
                }
            }
            let d = (k..m).fold(F::zero(), |s, i| s + v[i - k] * b[i]);
            let f = two * d / vv;
            for i in k..m {
                b[i] = b[i] - f * v[i - k];
            }
        }
    }
    // Back substitution on R c = Q^T y.
    let mut c = vec![F::zero(); n];
    for k in (0..n).rev() {
        let s = (k + 1..n).fold(b[k], |s, j| s - a[k][j] * c[j]);
        c[k] = s / a[k][k];
    }
    let residual_sum = (n..m).fold(F::zero(), |s, i| s + b[i] * b[i]);
    let std_errors = (m > n).then(|| {
        // diag((R^T R)^{-1}) = row norms of R^{-1}.
        let sigma2 = residual_sum / F::from(m - n).unwrap();
        let mut rinv = vec![vec![F::zero(); n]; n];
        for j in 0..n {
            rinv[j][j] = F::one() / a[j][j];
            for i in (0..j).rev() {
                let s = (i + 1..=j).fold(F::zero(), |s, l| s + a[i][l] * rinv[l][j]);
                rinv[i][j] = -s / a[i][i];
            }
        }
        (0..n)
            .map(|i| (sigma2 * rinv[i].iter().fold(F::zero(), |s, &x| s + x * x)).sqrt())
            .collect()
    });
    Ok(LinearFit {
        coefficients: c,
        std_errors,
        residual_sum,
    })
}

/// Polynomial fit; coefficients in ascending order of power.
pub fn polyfit<F: Float>(x: &[F], y: &[F], degree: usize) -> Result<LinearFit<F>, FitError> {
    let rows: Vec<Vec<F>> = x
        .iter()
        .map(|&xi| (0..=degree).map(|p| xi.powi(p as i32)).collect())
        .collect();
    least_squares(&rows, y)
}

pub fn polyval<F: Float>(coefficients: &[F], x: F) -> F {
    coefficients.iter().rev().fold(F::zero(), |acc, &c| acc * x + c)
}
