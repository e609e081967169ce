//! Dense two-sided Householder reductions.

use crate::band_store::{BidiagonalResult, DenseMatrix};
use crate::reflect::Reflector;
use crate::scalar::Scalar;

use super::OracleError;

/// Reduces a square dense matrix to upper-banded form with `bw`
/// superdiagonals. Column `k` is cleared below the diagonal by a left
/// reflector, then row `k` is cleared beyond column `k + bw` by a right
/// reflector. Arithmetic runs in `T::Acc`.
pub fn dense_to_band<T: Scalar>(a: &DenseMatrix<T>, bw: usize) -> Result<DenseMatrix<T>, OracleError> {
    if a.rows() != a.cols() {
        return Err(OracleError::BadSpec(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if bw == 0 {
        return Err(OracleError::BadSpec("bw must be at least 1".into()));
    }
    let n = a.rows();
    let mut w: Vec<T::Acc> = a.as_slice().iter().map(|v| v.to_acc()).collect();
    let mut h = Reflector::identity(n);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        // left: rows k.., column k
        if k + 1 < n {
            x.clear();
            x.extend((k..n).map(|i| w[i * n + k]));
            h.assign(&x);
            w[k * n + k] = h.beta;
            for i in k + 1..n {
                w[i * n + k] = zero::<T>();
            }
            if !h.is_identity() {
                for j in k + 1..n {
                    y.clear();
                    y.extend((k..n).map(|i| w[i * n + j]));
                    h.apply_unchecked(&mut y);
                    for (q, &v) in y.iter().enumerate() {
                        w[(k + q) * n + j] = v;
                    }
                }
            }
        }
        // right: row k, columns k+bw..
        let c0 = k + bw;
        if c0 + 1 < n {
            x.clear();
            x.extend_from_slice(&w[k * n + c0..(k + 1) * n]);
            h.assign(&x);
            w[k * n + c0] = h.beta;
            for j in c0 + 1..n {
                w[k * n + j] = zero::<T>();
            }
            if !h.is_identity() {
                for i in k + 1..n {
                    let row = &mut w[i * n + c0..(i + 1) * n];
                    h.apply_unchecked(row);
                }
            }
        }
    }
    let data = w.into_iter().map(T::from_acc).collect();
    Ok(DenseMatrix::from_row_major(n, n, data).expect("square"))
}

fn zero<T: Scalar>() -> T::Acc {
    T::zero().to_acc()
}

/// Golub-Kahan bidiagonalization; the `bw = 1` case of [`dense_to_band`].
pub fn dense_bidiagonalize<T: Scalar>(a: &DenseMatrix<T>) -> Result<BidiagonalResult<T>, OracleError> {
    let b = dense_to_band(a, 1)?;
    let n = b.rows();
    let d = (0..n).map(|i| b[(i, i)]).collect();
    let e = (1..n).map(|j| b[(j - 1, j)]).collect();
    Ok(BidiagonalResult::new(d, e))
}
