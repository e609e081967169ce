//! Reference computations for checking reductions: test matrices with known
//! singular values, dense reductions, a bidiagonal SVD and error metrics.

mod bdsqr;
mod dense;
mod spectrum;

pub use bdsqr::bidiagonal_svd;
pub use dense::{dense_bidiagonalize, dense_to_band};
pub use spectrum::{gen_test_matrix, random_orthogonal, synth_banded, BandFill, SpectrumKind, SpectrumSpec};

use crate::band_store::{BandError, BandedMatrix};
use crate::chase::{run_reduction_serial, ChaseError, ReductionConfig};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("bad specification: {0}")]
    BadSpec(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("bidiagonal SVD did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

/// Values of `truth` at or below this fraction of its maximum are left out
/// of [`rel_error`].
pub const REL_ERROR_FLOOR: f64 = 1e-12;

/// `max_i |computed_i - truth_i| / truth_i` over `truth_i > 1e-12 * max(truth)`.
/// Both slices must be sorted the same way.
pub fn rel_error(computed: &[f64], truth: &[f64]) -> Result<f64, OracleError> {
    if computed.len() != truth.len() {
        return Err(OracleError::LengthMismatch {
            expected: truth.len(),
            found: computed.len(),
        });
    }
    let floor = REL_ERROR_FLOOR * truth.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(computed
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t > floor)
        .fold(0.0, |m, (&c, &t)| m.max((c - t).abs() / t)))
}

/// Outcome of one [`accuracy_trial`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub sigma: Vec<f64>,
    pub computed: Vec<f64>,
    pub rel_error: f64,
}

/// Generates the test matrix for `spec`, rounds it to `T`, reduces it to
/// band `bw` densely and to bidiagonal form with the serial chase (both in
/// `T`'s arithmetic), then takes singular values in `f64`.
pub fn accuracy_trial<T: Scalar>(spec: &SpectrumSpec, bw: usize, tw: usize) -> Result<TrialResult, OracleError> {
    let (a, sigma) = gen_test_matrix(spec)?;
    let band = dense_to_band(&a.cast::<T>(), bw)?;
    let mut b = BandedMatrix::from_dense(&band, bw, tw.max(1))?;
    let config = ReductionConfig::new(spec.n, bw).with_tw(tw);
    let bd = run_reduction_serial(&mut b, &config)?;
    let computed = bidiagonal_svd(&bd)?;
    let rel_error = rel_error(&computed, &sigma)?;
    Ok(TrialResult {
        sigma,
        computed,
        rel_error,
    })
}
