//! Small dense linear-algebra helpers.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Second-moment matrix `(1/m) X^T X`.
pub fn gram<T: Scalar>(obs: ArrayView2<'_, T>) -> Array2<T> {
    obs.t().dot(&obs) / T::from_usize_lossy(obs.nrows())
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > T::zero()) {
            return Err(Error::Singular);
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / ljj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>) -> Result<Array1<T>> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let l = cholesky(a)?;
    let mut y = Array1::<T>::zeros(n);
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[[i, k]] * y[k];
        }
        y[i] = v / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in i + 1..n {
            v -= l[[k, i]] * x[k];
        }
        x[i] = v / l[[i, i]];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix in ascending order, computed in `f64`.
pub fn symmetric_eigenvalues<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]].as_f64() + a[[j, i]].as_f64()));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn min_eigenvalue<T: Scalar>(a: ArrayView2<'_, T>) -> Result<f64> {
    symmetric_eigenvalues(a)?
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("empty matrix".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_spd_system() {
        let a = array![[4.0f64, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = array![1.0, -2.0, 0.5];
        let x = solve_spd(a.view(), b.view()).unwrap();
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-14));
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t()) - &a;
        assert!(back.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn rejects_indefinite() {
        assert!(matches!(solve_spd(array![[1.0, 2.0], [2.0, 1.0]].view(), array![1.0, 1.0].view()), Err(Error::Singular)));
        assert!(matches!(cholesky(array![[0.0]].view()), Err(Error::Singular)));
    }

    #[test]
    fn eigenvalues() {
        let ev = symmetric_eigenvalues(array![[2.0, 1.0], [1.0, 2.0]].view()).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
        assert!((min_eigenvalue(array![[5.0f32]].view()).unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn gram_matrix() {
        let g = gram(array![[1.0, 0.0], [1.0, 2.0]].view());
        assert_eq!(g, array![[1.0, 1.0], [1.0, 2.0]]);
    }
}
