//! Test matrices with prescribed singular values.

use std::f64::consts::LN_10;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::OracleError;
use crate::band_store::{BandedMatrix, DenseMatrix};
use crate::reflect::make_reflector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectrumKind {
    /// Uniform spacing on `[1/n, 1]`.
    Arithmetic,
    /// Geometric decay from 1 to 1e-6.
    Logarithmic,
    /// Sorted samples of the quarter-circle density `4/pi * sqrt(1 - x^2)` on `[0, 1]`.
    QuarterCircle,
}

impl SpectrumKind {
    pub const ALL: [SpectrumKind; 3] = [
        SpectrumKind::Arithmetic,
        SpectrumKind::Logarithmic,
        SpectrumKind::QuarterCircle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumKind::Arithmetic => "arithmetic",
            SpectrumKind::Logarithmic => "logarithmic",
            SpectrumKind::QuarterCircle => "quarter_circle",
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectrumKind {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arithmetic" | "arith" => Ok(SpectrumKind::Arithmetic),
            "logarithmic" | "log" => Ok(SpectrumKind::Logarithmic),
            "quarter_circle" | "quarter-circle" | "qc" => Ok(SpectrumKind::QuarterCircle),
            _ => Err(OracleError::BadSpec(format!("unknown spectrum `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub n: usize,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn new(kind: SpectrumKind, n: usize, seed: u64) -> Self {
        Self { kind, n, seed }
    }
}

const QUARTER_CIRCLE_TABLE: usize = 100_000;

/// Inverse CDF of the quarter-circle law by table lookup and linear
/// interpolation.
struct QuarterCircle {
    cdf: Vec<f64>,
}

impl QuarterCircle {
    fn new() -> Self {
        let cdf = (0..=QUARTER_CIRCLE_TABLE)
            .map(|i| {
                let x = i as f64 / QUARTER_CIRCLE_TABLE as f64;
                (2.0 / std::f64::consts::PI) * (x * (1.0 - x * x).max(0.0).sqrt() + x.asin())
            })
            .collect();
        Self { cdf }
    }

    fn inverse(&self, u: f64) -> f64 {
        let hi = self.cdf.partition_point(|&c| c < u).clamp(1, QUARTER_CIRCLE_TABLE);
        let (c0, c1) = (self.cdf[hi - 1], self.cdf[hi]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        ((hi - 1) as f64 + frac.clamp(0.0, 1.0)) / QUARTER_CIRCLE_TABLE as f64
    }
}

fn singular_values(spec: &SpectrumSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spec.n;
    let mut s: Vec<f64> = match spec.kind {
        SpectrumKind::Arithmetic => (0..n).map(|i| (n - i) as f64 / n as f64).collect(),
        SpectrumKind::Logarithmic => (0..n)
            .map(|i| (-6.0 * LN_10 * i as f64 / (n - 1) as f64).exp())
            .collect(),
        SpectrumKind::QuarterCircle => {
            let qc = QuarterCircle::new();
            (0..n).map(|_| qc.inverse(rng.random::<f64>())).collect()
        }
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Haar-distributed orthogonal matrix: Householder QR of a Gaussian matrix
/// with the signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DenseMatrix<f64> {
    let mut g = DenseMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut reflectors = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    for k in 0..n {
        let x: Vec<f64> = (k..n).map(|i| g[(k.max(i), k)]).collect();
        let h = make_reflector(&x);
        for j in k + 1..n {
            col.clear();
            col.extend((k..n).map(|i| g[(i, j)]));
            h.apply(&mut col).expect("same length");
            for (q, &v) in col.iter().enumerate() {
                g[(k + q, j)] = v;
            }
        }
        let sign = if h.beta < 0.0 { -1.0 } else { 1.0 };
        reflectors.push((h, sign));
    }
    // Q = H_0 H_1 ... H_{n-1}; build from the right onto the identity.
    let mut q = DenseMatrix::<f64>::identity(n);
    for (k, (h, _)) in reflectors.iter().enumerate().rev() {
        for j in k..n {
            col.clear();
            col.extend((k..n).map(|i| q[(i, j)]));
            h.apply(&mut col).expect("same length");
            for (idx, &v) in col.iter().enumerate() {
                q[(k + idx, j)] = v;
            }
        }
    }
    for (k, (_, sign)) in reflectors.iter().enumerate() {
        if *sign < 0.0 {
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    q
}

/// `A = U diag(sigma) V^T` with seeded random orthogonal `U`, `V`. Returns `A`
/// and `sigma` (descending).
pub fn gen_test_matrix(spec: &SpectrumSpec) -> Result<(DenseMatrix<f64>, Vec<f64>), OracleError> {
    if spec.n < 2 {
        return Err(OracleError::BadSpec(format!(
            "test matrices need n >= 2, got {}",
            spec.n
        )));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = singular_values(spec, &mut rng);
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    let mut us = u;
    for i in 0..n {
        for (j, s) in sigma.iter().enumerate() {
            us[(i, j)] *= s;
        }
    }
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let urow = us.row(i);
        for j in 0..n {
            let vrow = v.row(j);
            a[(i, j)] = urow.iter().zip(vrow).fold(0.0, |s, (x, y)| s + x * y);
        }
    }
    Ok((a, sigma))
}

/// Distribution of synthesized band entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandFill {
    /// Every band entry uniform on `[-1, 1)`.
    Uniform,
    /// As `Uniform`, with `bw + 1` added to the diagonal magnitude so that
    /// rows and columns are strictly diagonally dominant.
    Dominant,
}

/// Random upper-banded matrix built directly in band storage.
pub fn synth_banded(
    n: usize,
    bw: usize,
    tw: usize,
    fill: BandFill,
    seed: u64,
) -> Result<BandedMatrix<f64>, OracleError> {
    let mut b = BandedMatrix::zeros(n, bw, tw).map_err(|e| OracleError::BadSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..n {
        for i in j.saturating_sub(bw)..=j {
            let mut v: f64 = rng.random_range(-1.0..1.0);
            if i == j && fill == BandFill::Dominant {
                v += (bw as f64 + 1.0).copysign(v);
            }
            b.set(i, j, v);
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fnv1a(values: &[f64]) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for v in values {
            for byte in v.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    fn svd2(a: &DenseMatrix<f64>) -> (f64, f64) {
        // closed form for 2x2 via the eigenvalues of A^T A
        let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        let fro = p * p + q * q + r * r + s * s;
        let det = p * s - q * r;
        let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
        (((fro + disc) / 2.0).sqrt(), ((fro - disc) / 2.0).max(0.0).sqrt())
    }

    #[test]
    fn two_by_two_arithmetic() {
        let (a, s) = gen_test_matrix(&SpectrumSpec::new(SpectrumKind::Arithmetic, 2, 9)).unwrap();
        assert_eq!(s, vec![1.0, 0.5]);
        let (hi, lo) = svd2(&a);
        assert!((hi - 1.0).abs() <= 8.0 * f64::EPSILON);
        assert!((lo - 0.5).abs() <= 8.0 * f64::EPSILON);
    }

    #[test]
    fn spectra_are_sorted_and_in_range() {
        for kind in SpectrumKind::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let s = singular_values(&SpectrumSpec::new(kind, 200, 3), &mut rng);
            assert!(s.windows(2).all(|w| w[0] >= w[1]), "{kind}");
            assert!(s.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(s[..199].iter().all(|&v| v > 0.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let log = singular_values(&SpectrumSpec::new(SpectrumKind::Logarithmic, 7, 0), &mut rng);
        assert_eq!(log[0], 1.0);
        assert!((log[6] / 1e-6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_circle_matches_its_mean() {
        // E[x] = 4 / (3 pi)
        let qc = QuarterCircle::new();
        let m = 20_000;
        let mean = (0..m).map(|i| qc.inverse((i as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
        assert!((mean - 4.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-4, "{mean}");
        assert_eq!(qc.inverse(0.0), 0.0);
        assert!((qc.inverse(1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn generator_is_reproducible() {
        let spec = SpectrumSpec::new(SpectrumKind::Logarithmic, 16, 2024);
        let (a, _) = gen_test_matrix(&spec).unwrap();
        let (b, _) = gen_test_matrix(&spec).unwrap();
        assert_eq!(fnv1a(a.as_slice()), fnv1a(b.as_slice()));
        assert_eq!(fnv1a(a.as_slice()), GOLDEN_LOG16);
        let (c, _) = gen_test_matrix(&SpectrumSpec { seed: 2025, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    // recorded from the first build
    const GOLDEN_LOG16: u64 = 1469028076512886648;

    #[test]
    fn orthogonal_factor_is_orthogonal() {
        for n in [1, 2, 17, 64] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let q = random_orthogonal(n, &mut rng);
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = (0..n).map(|k| q[(k, i)] * q[(k, j)]).sum();
                    let id = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - id).abs());
                }
            }
            assert!(worst <= 16.0 * n as f64 * f64::EPSILON, "n={n}: {worst:e}");
        }
    }

    #[test]
    fn rejects_tiny_order() {
        assert!(matches!(
            gen_test_matrix(&SpectrumSpec::new(SpectrumKind::Arithmetic, 1, 0)),
            Err(OracleError::BadSpec(_))
        ));
    }

    #[test]
    fn synthesized_band_stays_in_band() {
        let b = synth_banded(30, 5, 2, BandFill::Dominant, 1).unwrap();
        assert_eq!(b.nonzero_extent(), (0, 5));
        for i in 0..30 {
            assert!(b.get(i, i).abs() >= 5.0);
        }
    }
}
