//! Reduction of upper-banded matrices to bidiagonal form by tiled bulge
//! chasing.
//!
//! The bandwidth is removed in passes of `tw` diagonals. Each pass runs a
//! sweep per row, and the sweeps of a pass are interleaved in rounds whose
//! tasks touch disjoint parts of the matrix, so a round can run in parallel.
//!
//! ```
//! use bandbidiag::{run_reduction_serial, BandedMatrix, ReductionConfig};
//!
//! let mut a = BandedMatrix::<f64>::zeros(6, 3, 2).unwrap();
//! for i in 0..6 {
//!     for j in i..(i + 4).min(6) {
//!         a.set(i, j, 1.0 + (i + 2 * j) as f64);
//!     }
//! }
//! let config = ReductionConfig::new(6, 3).with_tw(2);
//! let b = run_reduction_serial(&mut a, &config).unwrap();
//! assert_eq!((b.d.len(), b.e.len()), (6, 5));
//! ```

pub mod band_store;
pub mod chase;
pub mod cli;
pub mod oracle;
pub mod reflect;
pub mod scalar;
pub mod schedule;

pub use band_store::{BandError, BandedMatrix, BidiagonalResult, DenseMatrix};
pub use chase::{execute_task, plan_sweeps, run_reduction_serial, BulgeTask, ChaseError, ReductionConfig, SweepPlan};
pub use reflect::{apply_reflector, make_reflector, Reflector};
pub use scalar::{Precision, Scalar};
pub use schedule::{footprint, min_full_occupancy_size, rounds, run_reduction_parallel, OccupancyModel, Round};
