//! Column-major band storage for upper-banded square matrices.
//!
//! Each original column `j` owns one contiguous storage column of height
//! `ld = bw + 2*tw + 1`. Storage row `s` of column `j` holds dense entry
//! `(j + s - ku, j)` with `ku = bw + tw`, so
//!
//! ```text
//!   s = 0          -> superdiagonal at offset bw + tw (upper bulge scratch)
//!   s = tw         -> superdiagonal at offset bw     (last band row)
//!   s = ku         -> diagonal
//!   s = ku + tw    -> subdiagonal at offset tw       (lower bulge scratch)
//! ```
//!
//! Rows increase with `s`, so the cells a left reflector touches in one
//! column are a contiguous slice. The representable set is every `(i, j)`
//! with `-tw <= j - i <= bw + tw`; cells mapping to `i < 0` or `i >= n` are
//! padding and stay zero.

mod format;

pub use format::{read_bnd, read_mtx, write_bnd, write_mtx, AnyBanded};

use std::fmt;

use crate::chase::ReductionConfig;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum BandError {
    #[error("matrix is {rows}x{cols}, expected square")]
    BadShape { rows: usize, cols: usize },
    #[error("nonzero {value:e} at ({row}, {col}) lies outside the declared band")]
    NotBanded { row: usize, col: usize, value: f64 },
    #[error("invalid band parameter: {0}")]
    BadParameter(String),
    #[error("entry ({row}, {col}) = {magnitude:e} exceeds bidiagonal tolerance {limit:e}")]
    NotBidiagonal {
        row: usize,
        col: usize,
        magnitude: f64,
        limit: f64,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Plain row-major dense matrix used for conversions and the reference
/// reductions.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::from_f64(1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, BandError> {
        if data.len() != rows * cols {
            return Err(BandError::BadParameter(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.to_f64().abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{:9.3e}", v.to_f64())).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Upper-banded `n x n` matrix with `bw` superdiagonals and `tw` scratch rows
/// on each side of the band for bulges.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedMatrix<T> {
    n: usize,
    bw: usize,
    tw: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, bw: usize, tw: usize) -> Result<Self, BandError> {
        if bw == 0 {
            return Err(BandError::BadParameter("bandwidth must be at least 1".into()));
        }
        if tw == 0 {
            return Err(BandError::BadParameter("tilewidth must be at least 1".into()));
        }
        let ld = bw + 2 * tw + 1;
        Ok(Self {
            n,
            bw,
            tw,
            data: vec![T::zero(); ld * n],
        })
    }

    /// Wraps raw storage columns. Padding cells must be zero.
    pub fn from_storage(n: usize, bw: usize, tw: usize, data: Vec<T>) -> Result<Self, BandError> {
        let mut b = Self::zeros(n, bw, tw)?;
        if data.len() != b.data.len() {
            return Err(BandError::BadParameter(format!(
                "storage holds {} values, expected {}",
                data.len(),
                b.data.len()
            )));
        }
        b.data = data;
        for j in 0..n {
            for s in 0..b.ld() {
                if b.dense_index(s, j).is_none() && !b.data[j * b.ld() + s].is_zero() {
                    return Err(BandError::BadParameter(format!(
                        "padding cell (storage row {s}, column {j}) is nonzero"
                    )));
                }
            }
        }
        Ok(b)
    }

    pub fn from_dense(dense: &DenseMatrix<T>, bw: usize, tw: usize) -> Result<Self, BandError> {
        if dense.rows() != dense.cols() {
            return Err(BandError::BadShape {
                rows: dense.rows(),
                cols: dense.cols(),
            });
        }
        let n = dense.rows();
        let mut b = Self::zeros(n, bw, tw)?;
        for i in 0..n {
            for (j, &v) in dense.row(i).iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                if j < i || j - i > bw {
                    return Err(BandError::NotBanded {
                        row: i,
                        col: j,
                        value: v.to_f64(),
                    });
                }
                let s = b.storage_row(i, j).expect("band entries are representable");
                let ld = b.ld();
                b.data[j * ld + s] = v;
            }
        }
        Ok(b)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for (s, &v) in self.column(j).iter().enumerate() {
                if let Some((i, _)) = self.dense_index(s, j) {
                    d[(i, j)] = v;
                }
            }
        }
        d
    }

    /// Same matrix with a different amount of bulge scratch.
    pub fn with_scratch(&self, tw: usize) -> Result<Self, BandError> {
        if tw == self.tw {
            return Ok(self.clone());
        }
        let mut b = Self::zeros(self.n, self.bw, tw)?;
        for j in 0..self.n {
            for (s, &v) in self.column(j).iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let (i, _) = self.dense_index(s, j).expect("padding is zero");
                let t = b.storage_row(i, j).ok_or(BandError::NotBanded {
                    row: i,
                    col: j,
                    value: v.to_f64(),
                })?;
                let ld = b.ld();
                b.data[j * ld + t] = v;
            }
        }
        Ok(b)
    }

    pub fn cast<U: Scalar>(&self) -> BandedMatrix<U> {
        BandedMatrix {
            n: self.n,
            bw: self.bw,
            tw: self.tw,
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bw(&self) -> usize {
        self.bw
    }

    #[inline]
    pub fn tw_scratch(&self) -> usize {
        self.tw
    }

    /// Storage column height.
    #[inline]
    pub fn ld(&self) -> usize {
        self.bw + 2 * self.tw + 1
    }

    /// Largest representable superdiagonal offset.
    #[inline]
    pub fn ku(&self) -> usize {
        self.bw + self.tw
    }

    /// Largest representable subdiagonal offset.
    #[inline]
    pub fn kl(&self) -> usize {
        self.tw
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> &[T] {
        let ld = self.ld();
        &self.data[j * ld..(j + 1) * ld]
    }

    /// Storage row holding dense entry `(i, j)`, if representable.
    #[inline]
    pub fn storage_row(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n {
            return None;
        }
        let s = (i + self.ku()).checked_sub(j)?;
        (s < self.ld()).then_some(s)
    }

    /// Dense entry stored at storage row `s` of column `j`; `None` for padding.
    #[inline]
    pub fn dense_index(&self, s: usize, j: usize) -> Option<(usize, usize)> {
        if s >= self.ld() || j >= self.n {
            return None;
        }
        let i = (j + s).checked_sub(self.ku())?;
        (i < self.n).then_some((i, j))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self.storage_row(i, j) {
            Some(s) => self.data[j * self.ld() + s],
            None => T::zero(),
        }
    }

    /// Writes a representable entry. Panics otherwise.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let s = self
            .storage_row(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) is outside band storage"));
        let ld = self.ld();
        self.data[j * ld + s] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.to_f64().abs()))
    }

    /// Widest nonzero offsets `(lower, upper)`: the largest `i - j` and
    /// `j - i` over nonzero entries, both zero for a diagonal matrix.
    pub fn nonzero_extent(&self) -> (usize, usize) {
        let (mut lo, mut up) = (0, 0);
        for j in 0..self.n {
            for (s, v) in self.column(j).iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                if let Some((i, _)) = self.dense_index(s, j) {
                    if i > j {
                        lo = lo.max(i - j);
                    } else {
                        up = up.max(j - i);
                    }
                }
            }
        }
        (lo, up)
    }

    /// Copies diagonal and first superdiagonal after checking every other
    /// representable entry is at most `tol * max_abs`.
    pub fn extract_bidiagonal(&self, tol: f64) -> Result<BidiagonalResult<T>, BandError> {
        let limit = tol * self.max_abs();
        let mut worst: Option<(usize, usize, f64)> = None;
        for j in 0..self.n {
            for (s, v) in self.column(j).iter().enumerate() {
                let Some((i, _)) = self.dense_index(s, j) else {
                    continue;
                };
                if i == j || i + 1 == j {
                    continue;
                }
                let mag = v.to_f64().abs();
                if mag > limit && worst.is_none_or(|(_, _, w)| mag > w) {
                    worst = Some((i, j, mag));
                }
            }
        }
        if let Some((row, col, magnitude)) = worst {
            return Err(BandError::NotBidiagonal {
                row,
                col,
                magnitude,
                limit,
            });
        }
        let d = (0..self.n).map(|i| self.get(i, i)).collect();
        let e = (1..self.n).map(|j| self.get(j - 1, j)).collect();
        Ok(BidiagonalResult { d, e, meta: None })
    }
}

/// How a bidiagonal result was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub config: ReductionConfig,
    pub passes: usize,
    pub tasks: usize,
    pub rounds: usize,
}

/// Upper bidiagonal matrix: diagonal `d` (length n) and superdiagonal `e`
/// (length n - 1).
#[derive(Clone, Debug, PartialEq)]
pub struct BidiagonalResult<T> {
    pub d: Vec<T>,
    pub e: Vec<T>,
    pub meta: Option<Provenance>,
}

impl<T: Scalar> BidiagonalResult<T> {
    pub fn new(d: Vec<T>, e: Vec<T>) -> Self {
        assert_eq!(
            e.len() + 1,
            d.len().max(1),
            "superdiagonal must be one shorter than the diagonal"
        );
        Self { d, e, meta: None }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn to_f64(&self) -> BidiagonalResult<f64> {
        BidiagonalResult {
            d: self.d.iter().map(|v| v.to_f64()).collect(),
            e: self.e.iter().map(|v| v.to_f64()).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.d[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.e[i];
            }
        }
        m
    }

    /// `d,e` CSV with one row per diagonal entry; the last row has an empty
    /// `e` field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,e\n");
        for (i, d) in self.d.iter().enumerate() {
            match self.e.get(i) {
                Some(e) => out.push_str(&format!("{},{}\n", d.to_f64(), e.to_f64())),
                None => out.push_str(&format!("{},\n", d.to_f64())),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_upper_banded(n: usize, bw: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, n, |i, j| {
            if j >= i && j - i <= bw {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn identity_has_unit_diagonal_and_zero_superdiagonal() {
        let b = BandedMatrix::from_dense(&DenseMatrix::<f64>::identity(4), 1, 1).unwrap();
        for j in 0..4 {
            assert_eq!(b.get(j, j), 1.0);
            assert_eq!(b.column(j)[b.ku()], 1.0);
            if j > 0 {
                assert_eq!(b.get(j - 1, j), 0.0);
            }
        }
    }

    #[test]
    fn bidiagonal_entries_land_in_their_slots() {
        let dense = BidiagonalResult::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0]).to_dense();
        let b = BandedMatrix::from_dense(&dense, 1, 1).unwrap();
        let ku = b.ku();
        assert_eq!(b.column(0)[ku], 1.0);
        assert_eq!(b.column(1)[ku], 2.0);
        assert_eq!(b.column(2)[ku], 3.0);
        assert_eq!(b.column(1)[ku - 1], 4.0);
        assert_eq!(b.column(2)[ku - 1], 5.0);
        assert_eq!(b.data().iter().filter(|v| **v != 0.0).count(), 5);
    }

    #[test]
    fn random_round_trip_is_exact() {
        let d = random_upper_banded(64, 8, 11);
        let b = BandedMatrix::from_dense(&d, 8, 3).unwrap();
        assert_eq!(b.to_dense(), d);
        assert_eq!(b.ld(), 8 + 2 * 3 + 1);
    }

    #[test]
    fn zero_band_gives_zero_matrix() {
        let b = BandedMatrix::<f32>::zeros(5, 2, 1).unwrap();
        assert_eq!(b.to_dense(), DenseMatrix::zeros(5, 5));
    }

    #[test]
    fn order_one_matrix() {
        let d = DenseMatrix::from_row_major(1, 1, vec![7.5f64]).unwrap();
        let b = BandedMatrix::from_dense(&d, 1, 1).unwrap();
        assert_eq!(b.to_dense()[(0, 0)], 7.5);
        let r = b.extract_bidiagonal(0.0).unwrap();
        assert_eq!(r.d, vec![7.5]);
        assert!(r.e.is_empty());
    }

    #[test]
    fn rejects_out_of_band_and_non_square() {
        let mut d = DenseMatrix::<f64>::identity(5);
        d[(0, 3)] = 1.0;
        match BandedMatrix::from_dense(&d, 2, 1) {
            Err(BandError::NotBanded { row: 0, col: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        d[(0, 3)] = 0.0;
        d[(3, 1)] = -2.0;
        assert!(matches!(
            BandedMatrix::from_dense(&d, 2, 1),
            Err(BandError::NotBanded { row: 3, col: 1, .. })
        ));
        let rect = DenseMatrix::<f64>::zeros(3, 4);
        assert!(matches!(
            BandedMatrix::from_dense(&rect, 1, 1),
            Err(BandError::BadShape { rows: 3, cols: 4 })
        ));
        assert!(BandedMatrix::<f64>::zeros(3, 0, 1).is_err());
        assert!(BandedMatrix::<f64>::zeros(3, 1, 0).is_err());
    }

    #[test]
    fn index_map_is_a_bijection_onto_the_trapezoid() {
        for n in 1..=32 {
            for (bw, tw) in [(1, 1), (3, 2), (5, 1), (4, 4)] {
                let b = BandedMatrix::<f64>::zeros(n, bw, tw).unwrap();
                let mut seen = vec![false; b.ld() * n];
                for i in 0..n {
                    for j in 0..n {
                        let off = j as isize - i as isize;
                        let inside = off >= -(tw as isize) && off <= (bw + tw) as isize;
                        match b.storage_row(i, j) {
                            Some(s) => {
                                assert!(inside);
                                assert_eq!(b.dense_index(s, j), Some((i, j)));
                                assert!(!seen[j * b.ld() + s]);
                                seen[j * b.ld() + s] = true;
                            }
                            None => assert!(!inside),
                        }
                    }
                }
                for j in 0..n {
                    for s in 0..b.ld() {
                        assert_eq!(seen[j * b.ld() + s], b.dense_index(s, j).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn extract_reports_worst_violation() {
        let dense = BidiagonalResult::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.5, 0.5]).to_dense();
        let mut b = BandedMatrix::from_dense(&dense, 3, 2).unwrap();
        let exact = b.extract_bidiagonal(0.0).unwrap();
        assert_eq!(exact.d, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(exact.e, vec![0.5, 0.5, 0.5]);

        b.set(0, 3, 1e-3);
        b.set(2, 1, 1e-9);
        match b.extract_bidiagonal(1e-6) {
            Err(BandError::NotBidiagonal {
                row: 0,
                col: 3,
                magnitude,
                ..
            }) => assert_eq!(magnitude, 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rescratch_preserves_entries() {
        let d = random_upper_banded(20, 4, 5);
        let b = BandedMatrix::from_dense(&d, 4, 1).unwrap();
        let wide = b.with_scratch(3).unwrap();
        assert_eq!(wide.ld(), 4 + 6 + 1);
        assert_eq!(wide.to_dense(), d);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_bit_exact(n in 1usize..40, bw in 1usize..10, tw in 1usize..6, seed in any::<u64>()) {
                let d = random_upper_banded(n, bw, seed);
                let b = BandedMatrix::from_dense(&d, bw, tw).unwrap();
                prop_assert_eq!(b.to_dense(), d);
            }

            #[test]
            fn not_banded_iff_out_of_band_nonzero(n in 2usize..16, bw in 1usize..5, i in 0usize..16, j in 0usize..16, seed in any::<u64>()) {
                let (i, j) = (i % n, j % n);
                let mut d = random_upper_banded(n, bw, seed);
                d[(i, j)] = 1.0;
                let outside = j < i || j - i > bw;
                prop_assert_eq!(BandedMatrix::from_dense(&d, bw, 1).is_err(), outside);
            }
        }
    }
}
