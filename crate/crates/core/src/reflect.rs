//! Householder reflectors `H = I - tau * v * v^T` with `v[0] = 1`.
//!
//! `make_reflector` builds `H` with `H x = (beta, 0, ..., 0)`; `apply_reflector`
//! overwrites `y` with `H y`. Every sum is taken in a fixed order, so
//! results are bit-reproducible regardless of which worker runs them.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReflectError {
    #[error("reflector has length {expected}, vector has length {found}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reflector<F> {
    /// Householder vector; `v[0]` is always one.
    pub v: Vec<F>,
    pub tau: F,
    /// Leading entry of `H x`.
    pub beta: F,
}

const LANES: usize = 8;

/// `sum_i term(i)` for `i < len` over eight interleaved partial sums
/// combined as a tree.
#[inline(always)]
fn lane_sum<F: Real>(len: usize, term: impl Fn(usize) -> F) -> F {
    let mut acc = [F::zero(); LANES];
    let full = len - len % LANES;
    for base in (0..full).step_by(LANES) {
        for (l, a) in acc.iter_mut().enumerate() {
            *a = *a + term(base + l);
        }
    }
    for (l, a) in acc.iter_mut().enumerate().take(len - full) {
        *a = *a + term(full + l);
    }
    let mut w = LANES;
    while w > 1 {
        w /= 2;
        for l in 0..w {
            acc[l] = acc[l] + acc[l + w];
        }
    }
    acc[0]
}

/// Euclidean norm with scaling by the largest magnitude.
pub fn norm2<F: Real>(x: &[F]) -> F {
    let amax = x.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    if amax == F::zero() || !amax.is_finite() {
        return amax;
    }
    amax * lane_sum(x.len(), |i| {
        let t = x[i] / amax;
        t * t
    })
    .sqrt()
}

impl<F: Real> Reflector<F> {
    pub fn identity(len: usize) -> Self {
        let mut v = vec![F::zero(); len];
        if let Some(v0) = v.first_mut() {
            *v0 = F::one();
        }
        Self {
            v,
            tau: F::zero(),
            beta: F::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.tau == F::zero()
    }

    /// Rebuilds `self` from `x`, reusing the allocation.
    pub fn assign(&mut self, x: &[F]) {
        assert!(!x.is_empty(), "reflector needs at least one element");
        self.v.clear();
        self.v.extend_from_slice(x);
        let alpha = x[0];
        let xnorm = norm2(&x[1..]);
        self.v[0] = F::one();
        if xnorm <= F::epsilon() * alpha.abs() {
            // tail already negligible: identity
            self.tau = F::zero();
            self.beta = alpha;
            self.v[1..].iter_mut().for_each(|v| *v = F::zero());
            return;
        }
        let beta = -alpha.hypot(xnorm).copysign(alpha);
        self.tau = (beta - alpha) / beta;
        let scale = F::one() / (alpha - beta);
        self.v[1..].iter_mut().for_each(|v| *v = *v * scale);
        self.beta = beta;
    }

    /// `y <- H y` without length checks; callers guarantee `y.len() == self.len()`.
    #[inline]
    pub(crate) fn apply_unchecked(&self, y: &mut [F]) {
        if self.tau == F::zero() {
            return;
        }
        let v = &self.v;
        let s = self.tau * lane_sum(v.len(), |i| v[i] * y[i]);
        self.v.iter().zip(y.iter_mut()).for_each(|(&v, y)| *y = *y - s * v);
    }

    pub fn apply(&self, y: &mut [F]) -> Result<(), ReflectError> {
        if y.len() != self.v.len() {
            return Err(ReflectError::LengthMismatch {
                expected: self.v.len(),
                found: y.len(),
            });
        }
        self.apply_unchecked(y);
        Ok(())
    }
}

/// Reflector annihilating `x[1..]`. `beta = -sign(x[0]) * ||x||`; if the tail
/// is at most `eps * |x[0]|` the identity is returned with `beta = x[0]`.
pub fn make_reflector<F: Real>(x: &[F]) -> Reflector<F> {
    let mut h = Reflector::identity(x.len());
    h.assign(x);
    h
}

pub fn apply_reflector<F: Real>(h: &Reflector<F>, y: &mut [F]) -> Result<(), ReflectError> {
    h.apply(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_four_maps_to_minus_five() {
        let x = [3.0f64, 4.0];
        let h = make_reflector(&x);
        assert_eq!(h.beta, -5.0);
        let mut y = x;
        apply_reflector(&h, &mut y).unwrap();
        assert!((y[0] + 5.0).abs() <= 4.0 * f64::EPSILON * 5.0);
        assert!(y[1].abs() <= 4.0 * f64::EPSILON * 5.0);
    }

    #[test]
    fn zero_tail_is_identity() {
        let h = make_reflector(&[2.5f64, 0.0, 0.0]);
        assert_eq!(h.tau, 0.0);
        assert_eq!(h.beta, 2.5);
        let mut y = [0.1f64, -3.0, 7.0];
        let before = y;
        h.apply(&mut y).unwrap();
        assert_eq!(y.map(f64::to_bits), before.map(f64::to_bits));
    }

    #[test]
    fn all_zero_vector() {
        let h = make_reflector(&[0.0f32; 4]);
        assert_eq!((h.tau, h.beta), (0.0, 0.0));
    }

    #[test]
    fn negative_leading_entry_gives_positive_beta() {
        let h = make_reflector(&[-3.0f64, 4.0]);
        assert_eq!(h.beta, 5.0);
    }

    #[test]
    fn tiny_tail_treated_as_annihilated() {
        let h = make_reflector(&[1.0f64, 1e-17]);
        assert!(h.is_identity());
        let h = make_reflector(&[0.0f64, 1e-300]);
        assert!(!h.is_identity());
        assert!((h.beta + 1e-300).abs() <= 4.0 * f64::EPSILON * 1e-300);
    }

    #[test]
    fn length_mismatch() {
        let h = make_reflector(&[1.0f64, 2.0, 3.0]);
        let mut y = [1.0f64; 2];
        assert_eq!(
            h.apply(&mut y),
            Err(ReflectError::LengthMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn norm_survives_extreme_scales() {
        let big = [1e300f64, 1e300];
        assert!((norm2(&big) / (2f64.sqrt() * 1e300) - 1.0).abs() < 1e-15);
        let small = [3e-30f32, 4e-30];
        assert!((norm2(&small) / 5e-30 - 1.0).abs() < 1e-6);
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    proptest! {
        #[test]
        fn annihilates_and_preserves_norm(x in prop::collection::vec(-1.0f64..1.0, 1..34)) {
            let h = make_reflector(&x);
            let nx = norm(&x);
            let tol = 2.0 * x.len() as f64 * f64::EPSILON * nx;
            prop_assert!(h.tau >= 0.0 && h.tau <= 2.0);
            prop_assert!((h.beta.abs() - nx).abs() <= 4.0 * f64::EPSILON * nx);
            let mut y = x.clone();
            h.apply(&mut y).unwrap();
            prop_assert!((y[0] - h.beta).abs() <= tol);
            for t in &y[1..] {
                prop_assert!(t.abs() <= tol);
            }
        }

        #[test]
        fn involution(x in prop::collection::vec(-1.0f64..1.0, 2..34), seed in any::<u64>()) {
            let h = make_reflector(&x);
            let y: Vec<f64> = (0..x.len()).map(|i| ((seed >> (i % 60)) & 0xff) as f64 / 128.0 - 1.0).collect();
            let mut z = y.clone();
            h.apply(&mut z).unwrap();
            h.apply(&mut z).unwrap();
            let ny = norm(&y);
            for (a, b) in z.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 16.0 * f64::EPSILON * ny);
            }
        }
    }
}
