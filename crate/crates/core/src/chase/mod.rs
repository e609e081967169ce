//! Row-bulge tasks and the sweep plan.
//!
//! A pass reduces the bandwidth from `cbw` to `tbw = cbw - tw`. Sweep `r`
//! (0-based row) starts by annihilating the `tw` entries of row `r` beyond
//! column `r + tbw`; every later task chases the bulge that annihilation left
//! behind one block further down the diagonal. Task `m` of sweep `r` pivots on
//! column `p = r + tbw + m * cbw`:
//!
//! * right reflector: row `anchor` (`r` for `m = 0`, else `p - cbw`), columns
//!   `p ..= p + tw`, applied to rows `anchor ..= p + tw`;
//! * left reflector: column `p`, rows `p ..= p + tw`, applied to columns
//!   `p ..= p + tw + cbw`.
//!
//! All ranges are clipped to the matrix. Fill created by one sweep and not
//! chased by it is picked up by the next `tw` sweeps. Task `m` of sweep `r`
//! runs in cycle `3r + m + 1`, so sweep `r` never starts before sweep `r - 1`
//! has finished three tasks.

mod kernel;

#[cfg(test)]
pub(crate) use kernel::BandCells;
pub(crate) use kernel::RawBand;
pub use kernel::{execute_task, TaskKernel};

use crate::band_store::{BandError, BandedMatrix, BidiagonalResult, Provenance};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum ChaseError {
    #[error("invalid reduction config: {0}")]
    BadConfig(String),
    #[error(
        "task (pass {pass_i}, sweep {sweep}, step {step}) needs band offsets -{lower}..={upper}, storage holds -{kl}..={ku}"
    )]
    FootprintOverflow {
        pass_i: usize,
        sweep: usize,
        step: usize,
        lower: usize,
        upper: usize,
        kl: usize,
        ku: usize,
    },
    #[error(transparent)]
    Band(#[from] BandError),
}

/// Hyperparameters of a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionConfig {
    pub n: usize,
    /// Initial number of superdiagonals.
    pub bw: usize,
    /// Inner tilewidth: entries annihilated per reflector.
    pub tw: usize,
    /// Rows (or columns) updated per inner application step.
    pub chunk_width: usize,
    /// Cap on concurrently running tasks per round; excess tasks are grouped.
    pub max_tasks: usize,
    pub workers: usize,
}

impl ReductionConfig {
    pub const DEFAULT_CHUNK: usize = 32;
    pub const DEFAULT_MAX_TASKS: usize = 1024;

    /// Config with `tw = min(bw - 1, 32)` and serial defaults.
    pub fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            tw: bw.saturating_sub(1).clamp(1, 32),
            chunk_width: Self::DEFAULT_CHUNK,
            max_tasks: Self::DEFAULT_MAX_TASKS,
            workers: 1,
        }
    }

    pub fn with_tw(mut self, tw: usize) -> Self {
        self.tw = tw;
        self
    }

    pub fn with_chunk_width(mut self, chunk_width: usize) -> Self {
        self.chunk_width = chunk_width;
        self
    }

    pub fn with_max_tasks(mut self, max_tasks: usize) -> Self {
        self.max_tasks = max_tasks;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<(), ChaseError> {
        let bad = |m: &str| Err(ChaseError::BadConfig(m.to_string()));
        if self.bw == 0 {
            return bad("bw must be at least 1");
        }
        if self.tw == 0 {
            return bad("tw must be at least 1");
        }
        if self.chunk_width == 0 {
            return bad("chunk_width must be at least 1");
        }
        if self.max_tasks == 0 {
            return bad("max_tasks must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Tilewidth actually used by the passes.
    pub fn effective_tw(&self) -> usize {
        self.tw.min(self.bw.saturating_sub(1)).max(1)
    }
}

/// One invocation of the row-bulge kernel. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BulgeTask {
    /// Pass index, counting down to 0 for the final pass.
    pub pass_i: usize,
    /// Originating row of the sweep.
    pub sweep: usize,
    /// Position within the sweep.
    pub step: usize,
    /// 1-based cycle (round) within the pass: `3 * sweep + step + 1`.
    pub cycle: usize,
    /// Row whose entries the right reflector annihilates.
    pub anchor: usize,
    /// Column holding the right reflector's surviving entry; also the column
    /// the left reflector clears.
    pub pivot: usize,
    pub tbw: usize,
    pub cbw: usize,
    /// Tilewidth of this pass (`cbw - tbw`).
    pub tw: usize,
}

impl BulgeTask {
    pub fn is_first_in_sweep(&self) -> bool {
        self.step == 0
    }

    /// 1-based anchor row, the `k` of the published pseudocode.
    pub fn anchor_k(&self) -> usize {
        self.anchor + 1
    }

    /// 1-based sweep row `R`.
    pub fn sweep_r(&self) -> usize {
        self.sweep + 1
    }

    /// Last row (and column) touched by either reflector, given order `n`.
    pub fn block_end(&self, n: usize) -> usize {
        (self.pivot + self.tw).min(n - 1)
    }
}

/// One bandwidth pass: `cbw -> tbw` with tilewidth `tw = cbw - tbw`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassPlan {
    pub pass_i: usize,
    pub n: usize,
    pub cbw: usize,
    pub tbw: usize,
    pub tw: usize,
}

impl PassPlan {
    /// Number of rows that start a nonempty sweep.
    pub fn sweep_count(&self) -> usize {
        (self.n - 1).saturating_sub(self.tbw)
    }

    /// Number of tasks in sweep `r`.
    pub fn sweep_len(&self, r: usize) -> usize {
        if r + self.tbw + 1 >= self.n {
            0
        } else {
            (self.n - 2 - r - self.tbw) / self.cbw + 1
        }
    }

    pub fn task(&self, r: usize, step: usize) -> BulgeTask {
        debug_assert!(step < self.sweep_len(r));
        let pivot = r + self.tbw + step * self.cbw;
        BulgeTask {
            pass_i: self.pass_i,
            sweep: r,
            step,
            cycle: 3 * r + step + 1,
            anchor: if step == 0 { r } else { pivot - self.cbw },
            pivot,
            tbw: self.tbw,
            cbw: self.cbw,
            tw: self.tw,
        }
    }

    pub fn sweep(&self, r: usize) -> impl Iterator<Item = BulgeTask> + '_ {
        (0..self.sweep_len(r)).map(move |m| self.task(r, m))
    }

    pub fn task_count(&self) -> usize {
        (0..self.sweep_count()).map(|r| self.sweep_len(r)).sum()
    }

    /// Number of cycles needed to drain every sweep.
    pub fn cycle_count(&self) -> usize {
        (0..self.sweep_count())
            .map(|r| 3 * r + self.sweep_len(r))
            .max()
            .unwrap_or(0)
    }

    /// Tasks whose cycle is `j` (1-based), in ascending sweep order.
    pub fn cycle_tasks_into(&self, j: usize, out: &mut Vec<BulgeTask>) {
        out.clear();
        let sweeps = self.sweep_count();
        if j == 0 || sweeps == 0 {
            return;
        }
        // 3r + sweep_len(r) grows with r, so the ready sweeps are contiguous.
        let mut r = ((j - 1) / 3).min(sweeps - 1);
        loop {
            let step = j - 1 - 3 * r;
            if step >= self.sweep_len(r) {
                break;
            }
            out.push(self.task(r, step));
            if r == 0 {
                break;
            }
            r -= 1;
        }
        out.reverse();
    }

    pub fn cycle_tasks(&self, j: usize) -> Vec<BulgeTask> {
        let mut v = Vec::new();
        self.cycle_tasks_into(j, &mut v);
        v
    }

    /// Widest offsets any task of this pass touches: `(lower, upper)`.
    pub fn offsets(&self) -> (usize, usize) {
        (self.tw, self.cbw + self.tw)
    }
}

/// Every task of a reduction, organised by pass, sweep and cycle. Tasks are
/// generated on demand from the closed-form pass geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub config: ReductionConfig,
    pub passes: Vec<PassPlan>,
}

impl SweepPlan {
    pub fn task_count(&self) -> usize {
        self.passes.iter().map(PassPlan::task_count).sum()
    }

    pub fn round_count(&self) -> usize {
        self.passes.iter().map(PassPlan::cycle_count).sum()
    }

    /// All tasks in schedule order: pass, then cycle, then ascending sweep.
    pub fn tasks(&self) -> impl Iterator<Item = BulgeTask> + '_ {
        self.passes
            .iter()
            .flat_map(|p| (1..=p.cycle_count()).flat_map(move |j| p.cycle_tasks(j)))
    }

    /// Checks that every pass fits in `a`'s storage.
    pub fn check_storage<T: Scalar>(&self, a: &BandedMatrix<T>) -> Result<(), ChaseError> {
        for p in &self.passes {
            let (lower, upper) = p.offsets();
            if lower > a.kl() || upper > a.ku() {
                return Err(ChaseError::FootprintOverflow {
                    pass_i: p.pass_i,
                    sweep: 0,
                    step: 0,
                    lower,
                    upper,
                    kl: a.kl(),
                    ku: a.ku(),
                });
            }
        }
        Ok(())
    }
}

/// Splits `bw - 1` into passes of `tw`, with a final remainder pass when
/// `tw` does not divide it. `bw = 1` yields an empty plan.
pub fn plan_sweeps(config: &ReductionConfig) -> Result<SweepPlan, ChaseError> {
    config.validate()?;
    let mut passes = Vec::new();
    if config.bw >= 2 && config.n >= 2 {
        let tw = config.effective_tw();
        let (full, rem) = ((config.bw - 1) / tw, (config.bw - 1) % tw);
        let total = full + usize::from(rem > 0);
        for (idx, i) in (0..full).rev().enumerate() {
            let tbw = 1 + rem + i * tw;
            passes.push(PassPlan {
                pass_i: total - 1 - idx,
                n: config.n,
                cbw: tbw + tw,
                tbw,
                tw,
            });
        }
        if rem > 0 {
            passes.push(PassPlan {
                pass_i: 0,
                n: config.n,
                cbw: 1 + rem,
                tbw: 1,
                tw: rem,
            });
        }
    }
    Ok(SweepPlan {
        config: *config,
        passes,
    })
}

pub(crate) fn check_dims<T: Scalar>(a: &BandedMatrix<T>, config: &ReductionConfig) -> Result<(), ChaseError> {
    if a.n() != config.n {
        return Err(ChaseError::BadConfig(format!(
            "config is for n = {}, matrix has n = {}",
            config.n,
            a.n()
        )));
    }
    if config.bw < a.bw() {
        return Err(ChaseError::BadConfig(format!(
            "config bandwidth {} is narrower than the matrix bandwidth {}",
            config.bw,
            a.bw()
        )));
    }
    Ok(())
}

/// Bidiagonal tolerance used by both engines: `50 * n * eps`.
pub fn bidiagonal_tolerance<T: Scalar>(n: usize) -> f64 {
    50.0 * n.max(1) as f64 * T::epsilon()
}

pub(crate) fn finish<T: Scalar>(a: &BandedMatrix<T>, plan: &SweepPlan) -> Result<BidiagonalResult<T>, ChaseError> {
    let mut r = a.extract_bidiagonal(bidiagonal_tolerance::<T>(a.n()))?;
    r.meta = Some(Provenance {
        config: plan.config,
        passes: plan.passes.len(),
        tasks: plan.task_count(),
        rounds: plan.round_count(),
    });
    Ok(r)
}

/// Runs every task on the calling thread in schedule order.
pub fn run_reduction_serial<T: Scalar>(
    a: &mut BandedMatrix<T>,
    config: &ReductionConfig,
) -> Result<BidiagonalResult<T>, ChaseError> {
    check_dims(a, config)?;
    let plan = plan_sweeps(config)?;
    plan.check_storage(a)?;
    let n = a.n();
    let mut kernel = TaskKernel::new(config.effective_tw());
    let mut cells = RawBand::new(a);
    let mut round = Vec::new();
    for pass in &plan.passes {
        for j in 1..=pass.cycle_count() {
            pass.cycle_tasks_into(j, &mut round);
            for t in &round {
                kernel.run(&mut cells, t, config.chunk_width, n);
            }
        }
    }
    finish(a, &plan)
}
