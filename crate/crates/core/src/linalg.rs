//! Small dense symmetric linear algebra for the Newton steps and covariance
//! matrices. Dimensions here are the covariate count, at most a few dozen,
//! so plain Cholesky with flat row-major storage is all that is needed.

/// Lower Cholesky factor of a symmetric positive-definite matrix (row-major).
/// Returns `None` when the matrix is not positive definite.
pub(crate) fn cholesky(a: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    Some(l)
}

/// Solve `A x = b` given the lower Cholesky factor of `A`.
pub(crate) fn chol_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            y[i] -= l[i * p + k] * y[k];
        }
        y[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            y[i] -= l[k * p + i] * y[k];
        }
        y[i] /= l[i * p + i];
    }
    y
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub(crate) fn spd_inverse(a: &[f64], p: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, p)?;
    let mut inv = vec![0.0f64; p * p];
    let mut e = vec![0.0f64; p];
    for j in 0..p {
        e.fill(0.0);
        e[j] = 1.0;
        let col = chol_solve(&l, p, &e);
        for i in 0..p {
            inv[i * p + j] = col[i];
        }
    }
    // Symmetrize against round-off.
    for i in 0..p {
        for j in 0..i {
            let m = 0.5 * (inv[i * p + j] + inv[j * p + i]);
            inv[i * p + j] = m;
            inv[j * p + i] = m;
        }
    }
    Some(inv)
}

/// `x' A x` for flat row-major `A`.
pub(crate) fn quad_form(a: &[f64], x: &[f64], p: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..p {
        let mut row = 0.0;
        for j in 0..p {
            row += a[i * p + j] * x[j];
        }
        total += x[i] * row;
    }
    total
}

/// Matrix product `A B` of two flat row-major p×p matrices.
pub(crate) fn mat_mul(a: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; p * p];
    for i in 0..p {
        for k in 0..p {
            let aik = a[i * p + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..p {
                out[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    out
}

pub(crate) fn to_nested(a: &[f64], p: usize) -> Vec<Vec<f64>> {
    (0..p).map(|i| a[i * p..(i + 1) * p].to_vec()).collect()
}
