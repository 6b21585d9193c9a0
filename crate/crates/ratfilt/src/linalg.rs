//! Small dense linear-algebra helpers: LU solve with partial pivoting.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is consumed as workspace. A pivot below `pivot_tol` in absolute value
/// raises `Error::SingularSystem`.
pub fn lu_solve(mut a: Array2<f64>, b: &[f64], pivot_tol: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "lu_solve needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[(col, col)].abs();
        for r in col + 1..n {
            let mag = a[(r, col)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if !pivot_mag.is_finite() || pivot_mag < pivot_tol {
            return Err(Error::SingularSystem);
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = a[(col, c)];
                a[(col, c)] = a[(pivot_row, c)];
                a[(pivot_row, c)] = tmp;
            }
            x.swap(col, pivot_row);
        }
        let inv = 1.0 / a[(col, col)];
        for r in col + 1..n {
            let factor = a[(r, col)] * inv;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[(r, c)] -= factor * a[(col, c)];
            }
            x[r] -= factor * x[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for c in r + 1..n {
            acc -= a[(r, c)] * x[c];
        }
        x[r] = acc / a[(r, r)];
    }
    Ok(x)
}

/// Residual norm `||a x - b||_2`.
pub fn residual_norm(a: &Array2<f64>, x: &[f64], b: &[f64]) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        let mut s = 0.0;
        for c in 0..n {
            s += a[(r, c)] * x[c];
        }
        let d = s - b[r];
        acc += d * d;
    }
    acc.sqrt()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_small_system() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let x = lu_solve(a.clone(), &[5.0, 10.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!(residual_norm(&a, &x, &[5.0, 10.0]) < 1e-12);
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let x = lu_solve(a, &[2.0, 3.0], 1e-12).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(
            lu_solve(a, &[1.0, 2.0], 1e-12),
            Err(Error::SingularSystem)
        ));
    }
}
