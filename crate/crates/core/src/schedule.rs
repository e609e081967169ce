//! Bulk-synchronous execution of the sweep plan.
//!
//! Cycle `j` of a pass holds task `j - 1 - 3r` of every active sweep `r`.
//! Those tasks touch pairwise disjoint boxes of the matrix, so a round can
//! run on any number of workers, with one barrier between rounds.

use std::any::Any;
use std::ops::RangeInclusive;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, Mutex};

use crate::band_store::{BandedMatrix, BidiagonalResult};
use crate::chase::{
    check_dims, finish, plan_sweeps, BulgeTask, ChaseError, RawBand, ReductionConfig, SweepPlan, TaskKernel,
};
use crate::scalar::Scalar;

/// Tasks of one cycle of one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round {
    pub pass_i: usize,
    /// 1-based cycle within the pass.
    pub cycle_j: usize,
    pub tasks: Vec<BulgeTask>,
}

/// All rounds of `plan`, pass by pass.
pub fn rounds(plan: &SweepPlan) -> Vec<Round> {
    let mut out = Vec::with_capacity(plan.round_count());
    for pass in &plan.passes {
        for j in 1..=pass.cycle_count() {
            out.push(Round {
                pass_i: pass.pass_i,
                cycle_j: j,
                tasks: pass.cycle_tasks(j),
            });
        }
    }
    out
}

/// Dense rows and columns a task may read or write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    pub rows: RangeInclusive<usize>,
    pub cols: RangeInclusive<usize>,
}

impl Footprint {
    pub fn intersects(&self, other: &Footprint) -> bool {
        fn overlap(a: &RangeInclusive<usize>, b: &RangeInclusive<usize>) -> bool {
            a.start() <= b.end() && b.start() <= a.end()
        }
        overlap(&self.rows, &other.rows) && overlap(&self.cols, &other.cols)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.contains(&i) && self.cols.contains(&j)
    }
}

pub fn footprint(t: &BulgeTask, config: &ReductionConfig) -> Footprint {
    let n = config.n;
    let last = t.block_end(n);
    Footprint {
        rows: t.anchor..=last,
        cols: t.pivot..=(last + t.cbw).min(n - 1),
    }
}

/// Occupancy model: how large a matrix must be before every execution unit
/// has a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupancyModel {
    pub alus: usize,
    pub cbw: usize,
}

impl OccupancyModel {
    pub fn new(alus: usize, cbw: usize) -> Result<Self, ChaseError> {
        if alus == 0 || cbw == 0 {
            return Err(ChaseError::BadConfig(
                "occupancy model needs alus >= 1 and cbw >= 1".into(),
            ));
        }
        Ok(Self { alus, cbw })
    }
}

/// Concurrent tasks sit `3 * cbw` rows apart, so `alus` of them need
/// `n = 3 * cbw * alus`.
pub fn min_full_occupancy_size(m: &OccupancyModel) -> usize {
    3 * m.cbw * m.alus
}

/// Worker that runs task `i` of a round with `len` tasks. Tasks are dealt
/// round-robin into `min(len, max_tasks)` groups, groups round-robin onto
/// workers.
pub fn worker_for(i: usize, len: usize, config: &ReductionConfig) -> usize {
    let groups = len.min(config.max_tasks).max(1);
    (i % groups) % config.workers
}

fn debug_check_disjoint(tasks: &[BulgeTask], config: &ReductionConfig) {
    // sweeps are ordered, so adjacent boxes are the only candidates
    for w in tasks.windows(2) {
        let (a, b) = (footprint(&w[0], config), footprint(&w[1], config));
        assert!(!a.intersects(&b), "round tasks overlap: {:?} / {:?}", w[0], w[1]);
    }
}

/// Runs the plan round by round on `config.workers` threads. The result is
/// bit-identical to [`crate::chase::run_reduction_serial`].
pub fn run_reduction_parallel<T: Scalar>(
    a: &mut BandedMatrix<T>,
    config: &ReductionConfig,
) -> Result<BidiagonalResult<T>, ChaseError> {
    check_dims(a, config)?;
    let plan = plan_sweeps(config)?;
    plan.check_storage(a)?;
    let n = a.n();
    let workers = config.workers;
    let barrier = Barrier::new(workers);
    let failed = AtomicBool::new(false);
    let payload: Mutex<Option<Box<dyn Any + Send>>> = Mutex::new(None);
    let base = RawBand::new(a);

    std::thread::scope(|s| {
        for w in 0..workers {
            // SAFETY: within a round each worker touches only its own
            // tasks' footprints, which are disjoint; rounds are separated by
            // the barrier.
            let mut cells = unsafe { base.alias() };
            let (plan, barrier, failed, payload) = (&plan, &barrier, &failed, &payload);
            s.spawn(move || {
                let mut kernel = TaskKernel::<T>::new(config.effective_tw());
                let mut round = Vec::new();
                for pass in &plan.passes {
                    for j in 1..=pass.cycle_count() {
                        pass.cycle_tasks_into(j, &mut round);
                        if cfg!(debug_assertions) && w == 0 {
                            debug_check_disjoint(&round, config);
                        }
                        let len = round.len();
                        let res = panic::catch_unwind(AssertUnwindSafe(|| {
                            for (i, t) in round.iter().enumerate() {
                                if worker_for(i, len, config) == w {
                                    kernel.run(&mut cells, t, config.chunk_width, n);
                                }
                            }
                        }));
                        if let Err(p) = res {
                            failed.store(true, Ordering::SeqCst);
                            payload.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(p);
                        }
                        barrier.wait();
                        if failed.load(Ordering::SeqCst) {
                            return;
                        }
                    }
                }
            });
        }
    });
    if let Some(p) = payload.into_inner().unwrap_or_else(|e| e.into_inner()) {
        panic::resume_unwind(p);
    }
    finish(a, &plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::{run_reduction_serial, BandCells};
    use crate::oracle::{synth_banded, BandFill};
    use std::collections::HashSet;

    fn config(n: usize, bw: usize, tw: usize) -> ReductionConfig {
        ReductionConfig::new(n, bw).with_tw(tw)
    }

    #[test]
    fn rounds_partition_the_plan() {
        for (n, bw, tw) in [(40, 6, 2), (33, 9, 4), (17, 2, 1), (64, 8, 3)] {
            let plan = plan_sweeps(&config(n, bw, tw)).unwrap();
            let rs = rounds(&plan);
            let mut seen = HashSet::new();
            for r in &rs {
                for t in &r.tasks {
                    assert_eq!(t.cycle, r.cycle_j);
                    assert_eq!(t.pass_i, r.pass_i);
                    assert!(seen.insert((t.pass_i, t.sweep, t.step)));
                }
            }
            assert_eq!(seen.len(), plan.task_count());
            let flat: Vec<_> = rs.iter().flat_map(|r| r.tasks.iter().copied()).collect();
            assert_eq!(flat, plan.tasks().collect::<Vec<_>>());
        }
    }

    #[test]
    fn lone_sweep_gives_one_task_per_round() {
        // n = 3, bw = 3, tw = 2: a single sweep from row 0
        let plan = plan_sweeps(&config(3, 3, 2)).unwrap();
        assert_eq!(plan.passes[0].sweep_count(), 1);
        assert!(rounds(&plan).iter().all(|r| r.tasks.len() == 1));
    }

    #[test]
    fn gate_holds() {
        let plan = plan_sweeps(&config(200, 10, 3)).unwrap();
        let rs = rounds(&plan);
        for r in &rs {
            for t in &r.tasks {
                // 1-based sweep R must satisfy 3(R - 1) < j
                assert!(3 * (t.sweep_r() - 1) < r.cycle_j);
            }
        }
        for pass in &plan.passes {
            // sweep R starts only after sweep R - 1 has finished three tasks
            let mut done = vec![0usize; pass.sweep_count()];
            for j in 1..=pass.cycle_count() {
                let tasks = pass.cycle_tasks(j);
                for t in &tasks {
                    if t.step == 0 && t.sweep > 0 {
                        let prev = done[t.sweep - 1];
                        assert!(prev >= 3 || prev == pass.sweep_len(t.sweep - 1));
                    }
                }
                for t in &tasks {
                    done[t.sweep] += 1;
                }
            }
            let first: Vec<usize> = (0..pass.sweep_count().min(5)).map(|r| pass.task(r, 0).cycle).collect();
            assert!(first.windows(2).all(|w| w[1] == w[0] + 3));
        }
    }

    #[test]
    fn round_footprints_are_disjoint() {
        for (n, bw, tw) in [(256, 8, 1), (256, 16, 4), (256, 7, 3), (100, 32, 31)] {
            let c = config(n, bw, tw);
            for r in rounds(&plan_sweeps(&c).unwrap()) {
                for (x, a) in r.tasks.iter().enumerate() {
                    for b in &r.tasks[x + 1..] {
                        assert!(!footprint(a, &c).intersects(&footprint(b, &c)), "{a:?} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn first_task_footprint_and_neighbours() {
        let c = config(64, 6, 2);
        let plan = plan_sweeps(&c).unwrap();
        let p = &plan.passes[0];
        let f0 = footprint(&p.task(0, 0), &c);
        assert_eq!(*f0.rows.start(), 0);
        // consecutive tasks of one sweep collide
        assert!(f0.intersects(&footprint(&p.task(0, 1), &c)));
        // the next sweep, three cycles later, does not
        assert!(!footprint(&p.task(0, 3), &c).intersects(&footprint(&p.task(1, 0), &c)));
    }

    /// Dense cells that record every access.
    struct Traced {
        n: usize,
        vals: Vec<f64>,
        touched: HashSet<(usize, usize)>,
    }

    impl BandCells<f64> for Traced {
        fn load(&self, i: usize, j: usize) -> f64 {
            self.vals[i * self.n + j]
        }
        fn store(&mut self, i: usize, j: usize, v: f64) {
            self.touched.insert((i, j));
            self.vals[i * self.n + j] = v;
        }
    }

    /// The kernel writes every cell it reads, so the write set is the
    /// access set.
    fn trace(t: &BulgeTask, n: usize) -> HashSet<(usize, usize)> {
        let mut cells = Traced {
            n,
            vals: (0..n * n).map(|k| ((k * 7919) % 1013) as f64 / 1013.0 - 0.5).collect(),
            touched: HashSet::new(),
        };
        TaskKernel::<f64>::new(t.tw).run(&mut cells, t, 3, n);
        cells.touched
    }

    #[test]
    fn footprint_matches_instrumented_trace() {
        for (n, bw, tw) in [(30, 6, 2), (25, 4, 3), (19, 5, 4)] {
            let c = config(n, bw, tw);
            for t in plan_sweeps(&c).unwrap().tasks() {
                let f = footprint(&t, &c);
                let touched = trace(&t, n);
                assert!(touched.iter().all(|&(i, j)| f.contains(i, j)), "{t:?}");
                let rmin = touched.iter().map(|x| x.0).min().unwrap();
                let rmax = touched.iter().map(|x| x.0).max().unwrap();
                let cmin = touched.iter().map(|x| x.1).min().unwrap();
                let cmax = touched.iter().map(|x| x.1).max().unwrap();
                assert_eq!((rmin, rmax), (*f.rows.start(), *f.rows.end()), "{t:?}");
                assert_eq!((cmin, cmax), (*f.cols.start(), *f.cols.end()), "{t:?}");
            }
        }
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        for (n, bw, tw, workers, max_tasks) in [
            (512, 16, 4, 8, 1024),
            (300, 9, 3, 3, 2),
            (200, 12, 5, 8, 1),
            (128, 5, 4, 1, 1024),
        ] {
            let a = synth_banded(n, bw, tw, BandFill::Uniform, n as u64).unwrap();
            let c = config(n, bw, tw).with_workers(workers).with_max_tasks(max_tasks);
            let (mut s, mut p) = (a.clone(), a.clone());
            let rs = run_reduction_serial(&mut s, &c).unwrap();
            let rp = run_reduction_parallel(&mut p, &c).unwrap();
            assert_eq!(
                s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                p.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            assert_eq!(rs, rp);
        }
    }

    #[test]
    fn grouping_is_round_robin() {
        let c = config(10, 2, 1).with_workers(3).with_max_tasks(4);
        let assigned: Vec<usize> = (0..10).map(|i| worker_for(i, 10, &c)).collect();
        assert_eq!(assigned, vec![0, 1, 2, 0, 0, 1, 2, 0, 0, 1]);
        let c = c.with_max_tasks(1);
        assert!((0..10).all(|i| worker_for(i, 10, &c) == 0));
    }

    #[test]
    fn occupancy_table() {
        for (alus, n) in [(528, 50_688), (304, 29_184), (56, 5_376)] {
            let m = OccupancyModel::new(alus, 32).unwrap();
            assert_eq!(min_full_occupancy_size(&m), n);
            assert_eq!(min_full_occupancy_size(&m) / (3 * 32), alus);
        }
        assert!(OccupancyModel::new(0, 32).is_err());
    }
}
