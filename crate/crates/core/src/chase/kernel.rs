use std::marker::PhantomData;

use super::{BulgeTask, ChaseError, ReductionConfig};
use crate::band_store::BandedMatrix;
use crate::reflect::Reflector;
use crate::scalar::Scalar;

/// Cell access used by the kernel. Coordinates are dense `(row, col)` and
/// always lie inside the band-plus-scratch trapezoid.
pub(crate) trait BandCells<T> {
    fn load(&self, i: usize, j: usize) -> T;
    fn store(&mut self, i: usize, j: usize, v: T);
}

/// Raw view of band storage. Several views of one matrix may exist at once
/// (see [`RawBand::alias`]); each must only touch cells no other live view
/// touches.
pub(crate) struct RawBand<'a, T> {
    ptr: *mut T,
    n: usize,
    ld: usize,
    ku: usize,
    _m: PhantomData<&'a mut [T]>,
}

// SAFETY: views are only shared under the round-disjointness contract.
unsafe impl<T: Send> Send for RawBand<'_, T> {}

impl<'a, T: Scalar> RawBand<'a, T> {
    pub(crate) fn new(a: &'a mut BandedMatrix<T>) -> Self {
        let (n, ld, ku) = (a.n(), a.ld(), a.ku());
        Self {
            ptr: a.data_mut().as_mut_ptr(),
            n,
            ld,
            ku,
            _m: PhantomData,
        }
    }

    /// Second view of the same storage.
    ///
    /// # Safety
    /// Callers must ensure no two views access the same cell concurrently.
    pub(crate) unsafe fn alias(&self) -> Self {
        Self {
            ptr: self.ptr,
            n: self.n,
            ld: self.ld,
            ku: self.ku,
            _m: PhantomData,
        }
    }

    #[inline(always)]
    fn offset(&self, i: usize, j: usize) -> usize {
        let s = (i + self.ku).wrapping_sub(j);
        assert!(
            i < self.n && j < self.n && s < self.ld,
            "({i}, {j}) outside band storage"
        );
        j * self.ld + s
    }
}

impl<T: Scalar> BandCells<T> for RawBand<'_, T> {
    #[inline(always)]
    fn load(&self, i: usize, j: usize) -> T {
        let o = self.offset(i, j);
        // SAFETY: offset is inside the allocation (j < n, s < ld).
        unsafe { self.ptr.add(o).read() }
    }

    #[inline(always)]
    fn store(&mut self, i: usize, j: usize, v: T) {
        let o = self.offset(i, j);
        // SAFETY: as above.
        unsafe { self.ptr.add(o).write(v) }
    }
}

/// Reusable buffers for the row-bulge kernel: the shared reflector vector and
/// one row (or column) of working storage.
pub struct TaskKernel<T: Scalar> {
    x: Vec<T::Acc>,
    y: Vec<T::Acc>,
    h: Reflector<T::Acc>,
}

impl<T: Scalar> TaskKernel<T> {
    pub fn new(tw: usize) -> Self {
        Self {
            x: Vec::with_capacity(tw + 1),
            y: Vec::with_capacity(tw + 1),
            h: Reflector::identity(tw + 1),
        }
    }

    /// Right reflector on row `t.anchor`, then left reflector on column
    /// `t.pivot`, each applied chunk by chunk.
    pub(crate) fn run<C: BandCells<T>>(&mut self, cells: &mut C, t: &BulgeTask, chunk: usize, n: usize) {
        let p = t.pivot;
        let last = t.block_end(n);
        let len = last - p + 1;
        debug_assert!(len >= 2, "task has nothing to annihilate");

        // Row annihilation: X <- A[k, p..=last].
        self.x.clear();
        self.x.extend((p..=last).map(|j| cells.load(t.anchor, j).to_acc()));
        self.h.assign(&self.x);
        cells.store(t.anchor, p, T::from_acc(self.h.beta));
        for j in p + 1..=last {
            cells.store(t.anchor, j, T::zero());
        }
        if !self.h.is_identity() {
            let mut start = t.anchor + 1;
            while start <= last {
                let end = (start + chunk).min(last + 1);
                for i in start..end {
                    self.y.clear();
                    self.y.extend((p..=last).map(|j| cells.load(i, j).to_acc()));
                    self.h.apply_unchecked(&mut self.y);
                    for (q, &v) in self.y.iter().enumerate() {
                        cells.store(i, p + q, T::from_acc(v));
                    }
                }
                start = end;
            }
        }

        // Column annihilation of the bulge's leftmost column.
        self.x.clear();
        self.x.extend((p..=last).map(|i| cells.load(i, p).to_acc()));
        self.h.assign(&self.x);
        cells.store(p, p, T::from_acc(self.h.beta));
        for i in p + 1..=last {
            cells.store(i, p, T::zero());
        }
        if !self.h.is_identity() {
            let col_end = (last + t.cbw).min(n - 1);
            let mut start = p + 1;
            while start <= col_end {
                let end = (start + chunk).min(col_end + 1);
                for j in start..end {
                    self.y.clear();
                    self.y.extend((p..=last).map(|i| cells.load(i, j).to_acc()));
                    self.h.apply_unchecked(&mut self.y);
                    for (q, &v) in self.y.iter().enumerate() {
                        cells.store(p + q, j, T::from_acc(v));
                    }
                }
                start = end;
            }
        }
    }
}

/// Executes a single task on `a`.
pub fn execute_task<T: Scalar>(
    a: &mut BandedMatrix<T>,
    t: &BulgeTask,
    config: &ReductionConfig,
) -> Result<(), ChaseError> {
    config.validate()?;
    let n = a.n();
    let overflow = || ChaseError::FootprintOverflow {
        pass_i: t.pass_i,
        sweep: t.sweep,
        step: t.step,
        lower: t.tw,
        upper: t.cbw + t.tw,
        kl: a.kl(),
        ku: a.ku(),
    };
    if t.tw > a.kl() || t.cbw + t.tw > a.ku() {
        return Err(overflow());
    }
    if t.pivot + 1 >= n || t.anchor > t.pivot || t.cbw != t.tbw + t.tw || t.tw == 0 {
        return Err(ChaseError::BadConfig(format!(
            "task {t:?} does not fit a matrix of order {n}"
        )));
    }
    let mut kernel = TaskKernel::new(t.tw);
    let mut cells = RawBand::new(a);
    kernel.run(&mut cells, t, config.chunk_width, n);
    Ok(())
}
