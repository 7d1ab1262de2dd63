// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry count as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Inverse of a symmetric positive definite matrix through a diagonally
/// pivoted Cholesky factorization `P M P^T = L L^T`.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0_f64, f64::max);
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if max_diag <= 0.0 {
        return Err(Error::Singular(format!(
            "{what} has no positive diagonal entry"
        )));
    }
    let tol = SINGULAR_THRESHOLD * max_diag;
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (pivot, best) =
            (k..n)
                .map(|i| (i, a[(i, i)]))
                .fold(
                    (k, f64::NEG_INFINITY),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
        if best <= tol {
            return Err(Error::Singular(format!(
                "{what} has rank {k} < {n} (pivot {best:e})"
            )));
        }
        if pivot != k {
            a.swap_rows(k, pivot);
            a.swap_columns(k, pivot);
            perm.swap(k, pivot);
        }
        let d = a[(k, k)].sqrt();
        a[(k, k)] = d;
        for i in k + 1..n {
            a[(i, k)] /= d;
        }
        // keep the trailing block fully symmetric so later pivots can swap freely
        for j in k + 1..n {
            let ljk = a[(j, k)];
            if ljk == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let v = a[(i, k)] * ljk;
                a[(i, j)] -= v;
            }
        }
    }
    // L^{-1} by forward substitution, column by column
    let mut linv = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        linv[(c, c)] = 1.0 / a[(c, c)];
        for i in c + 1..n {
            let mut s = 0.0;
            for k in c..i {
                s += a[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = -s / a[(i, i)];
        }
    }
    let pinv = linv.transpose() * &linv;
    let mut out = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(perm[i], perm[j])] = pinv[(i, j)];
        }
    }
    Ok(out)
}
