use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use half::f16;

use super::{CliError, Engine, ExecArgs};
use crate::band_store::{read_bnd, write_bnd, AnyBanded, BandedMatrix, BidiagonalResult};
use crate::chase::{plan_sweeps, run_reduction_serial, ChaseError, ReductionConfig};
use crate::oracle::{accuracy_trial, synth_banded, BandFill, SpectrumKind, SpectrumSpec};
use crate::scalar::{Precision, Scalar};
use crate::schedule::{min_full_occupancy_size, run_reduction_parallel, OccupancyModel};

pub const ACCURACY_HEADER: &str = "precision,spectrum,n,bw,tw,trial,rel_error";
pub const BENCH_HEADER: &str = "n,bw,tw,engine,workers,seconds,tasks,rounds";
pub const TUNE_HEADER: &str = "rank,tw,chunk,max_tasks,workers,median_seconds,winner";

fn reduce_with<T: Scalar>(
    b: &mut BandedMatrix<T>,
    config: &ReductionConfig,
    engine: Engine,
) -> Result<BidiagonalResult<T>, ChaseError> {
    match engine {
        Engine::Serial => run_reduction_serial(b, config),
        Engine::Parallel => run_reduction_parallel(b, config),
    }
}

fn exec_config(n: usize, bw: usize, tw: Option<usize>, exec: &ExecArgs) -> ReductionConfig {
    let c = ReductionConfig::new(n, bw)
        .with_chunk_width(exec.chunk)
        .with_max_tasks(exec.max_tasks)
        .with_workers(exec.workers());
    match tw {
        Some(tw) => c.with_tw(tw),
        None => c,
    }
}

fn reduce_file<T: Scalar>(
    mut b: BandedMatrix<T>,
    bw: Option<usize>,
    tw: Option<usize>,
    exec: &ExecArgs,
) -> Result<String, CliError> {
    let config = exec_config(b.n(), bw.unwrap_or(b.bw()), tw, exec);
    config.validate()?;
    let need = config.effective_tw();
    if need > b.tw_scratch() {
        b = b.with_scratch(need)?;
    }
    Ok(reduce_with(&mut b, &config, exec.engine)?.to_csv())
}

pub fn cmd_reduce(input: &Path, bw: Option<usize>, tw: Option<usize>, exec: &ExecArgs) -> Result<String, CliError> {
    let file = File::open(input).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let any = read_bnd(BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    match any {
        AnyBanded::Half(b) => reduce_file(b, bw, tw, exec),
        AnyBanded::Single(b) => reduce_file(b, bw, tw, exec),
        AnyBanded::Double(b) => reduce_file(b, bw, tw, exec),
    }
}

fn default_tw(bw: usize) -> usize {
    bw.saturating_sub(1).clamp(1, 32)
}

/// Seed of trial `trial` of spectrum `kind`; shared across precisions so
/// each precision sees the same matrices.
pub fn trial_seed(seed: u64, kind: SpectrumKind, trial: usize) -> u64 {
    let k = SpectrumKind::ALL.iter().position(|&x| x == kind).unwrap_or(0) as u64;
    seed.wrapping_add(k * 1_000_003).wrapping_add(trial as u64)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_accuracy(
    precisions: &[Precision],
    ns: &[usize],
    bws: &[usize],
    tw: Option<usize>,
    trials: usize,
    kinds: &[SpectrumKind],
    seed: u64,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    for &n in ns {
        for &bw in bws {
            if n < 2 || bw == 0 || bw >= n {
                return Err(CliError::Usage(format!("need 1 <= bw < n, got n = {n}, bw = {bw}")));
            }
        }
    }
    if tw == Some(0) {
        return Err(CliError::Usage("tw must be at least 1".into()));
    }
    writeln!(w, "{ACCURACY_HEADER}")?;
    for &p in precisions {
        for &n in ns {
            for &bw in bws {
                let tw = tw.unwrap_or_else(|| default_tw(bw));
                for &kind in kinds {
                    for trial in 0..trials {
                        let spec = SpectrumSpec::new(kind, n, trial_seed(seed, kind, trial));
                        let err = match p {
                            Precision::Half => accuracy_trial::<f16>(&spec, bw, tw),
                            Precision::Single => accuracy_trial::<f32>(&spec, bw, tw),
                            Precision::Double => accuracy_trial::<f64>(&spec, bw, tw),
                        }?
                        .rel_error;
                        writeln!(w, "{p},{kind},{n},{bw},{tw},{trial},{err:e}")?;
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuneGrid {
    pub tilewidths: Vec<usize>,
    pub chunk_widths: Vec<usize>,
    pub max_tasks: Vec<usize>,
    pub repeats: usize,
}

impl TuneGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.tilewidths.is_empty() || self.chunk_widths.is_empty() || self.max_tasks.is_empty() {
            return Err(CliError::Usage("tuning grid is empty".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Usage("repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn configs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.tilewidths.iter().flat_map(move |&tw| {
            self.chunk_widths
                .iter()
                .flat_map(move |&c| self.max_tasks.iter().map(move |&m| (tw, c, m)))
        })
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Median wall time of `repeats` reductions of copies of `a`.
fn time_reduction<T: Scalar>(
    a: &BandedMatrix<T>,
    config: &ReductionConfig,
    engine: Engine,
    repeats: usize,
) -> Result<f64, CliError> {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut b = a.clone();
        let start = Instant::now();
        reduce_with(&mut b, config, engine)?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(median(&mut times))
}

fn synth<T: Scalar>(n: usize, bw: usize, tw: usize, seed: u64) -> Result<BandedMatrix<T>, CliError> {
    Ok(synth_banded(n, bw, tw, BandFill::Uniform, seed)?.cast::<T>())
}

fn tune_typed<T: Scalar>(
    grid: &TuneGrid,
    n: usize,
    bw: usize,
    engine: Engine,
    workers: usize,
    seed: u64,
) -> Result<Vec<(usize, usize, usize, f64)>, CliError> {
    let max_tw = grid.tilewidths.iter().copied().max().unwrap_or(1);
    let a = synth::<T>(n, bw, max_tw, seed)?;
    let mut rows = Vec::new();
    for (tw, chunk, max_tasks) in grid.configs() {
        let config = ReductionConfig::new(n, bw)
            .with_tw(tw)
            .with_chunk_width(chunk)
            .with_max_tasks(max_tasks)
            .with_workers(workers);
        config.validate()?;
        rows.push((tw, chunk, max_tasks, time_reduction(&a, &config, engine, grid.repeats)?));
    }
    Ok(rows)
}

pub fn cmd_tune(
    grid: &TuneGrid,
    n: usize,
    bw: usize,
    engine: Engine,
    workers: usize,
    precision: Precision,
    seed: u64,
) -> Result<String, CliError> {
    grid.validate()?;
    if bw == 0 || n < 8 * bw {
        return Err(CliError::Usage(format!(
            "tuning needs n >= 8 * bw, got n = {n}, bw = {bw}"
        )));
    }
    let mut rows = match precision {
        Precision::Half => tune_typed::<f16>(grid, n, bw, engine, workers, seed),
        Precision::Single => tune_typed::<f32>(grid, n, bw, engine, workers, seed),
        Precision::Double => tune_typed::<f64>(grid, n, bw, engine, workers, seed),
    }?;
    rows.sort_by(|a, b| a.3.total_cmp(&b.3));
    let mut out = format!("{TUNE_HEADER}\n");
    for (rank, (tw, chunk, max_tasks, secs)) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{tw},{chunk},{max_tasks},{workers},{secs:.6},{}\n",
            rank + 1,
            u8::from(rank == 0)
        ));
    }
    Ok(out)
}

pub fn cmd_occupancy(alus: i64, cbw: i64) -> Result<usize, CliError> {
    if alus <= 0 || cbw <= 0 {
        return Err(CliError::Usage(format!(
            "alus and cbw must be positive, got {alus} and {cbw}"
        )));
    }
    let m = OccupancyModel::new(alus as usize, cbw as usize)?;
    Ok(min_full_occupancy_size(&m))
}

#[allow(clippy::too_many_arguments)]
fn bench_typed<T: Scalar>(
    n: usize,
    bw: usize,
    tw: usize,
    exec: &ExecArgs,
    repeats: usize,
    seed: u64,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    let config = exec_config(n, bw, Some(tw), exec);
    config.validate()?;
    let plan = plan_sweeps(&config)?;
    let a = synth::<T>(n, bw, config.effective_tw(), seed)?;
    let secs = time_reduction(&a, &config, exec.engine, repeats)?;
    writeln!(
        w,
        "{n},{bw},{},{},{},{secs:.6},{},{}",
        config.effective_tw(),
        exec.engine.as_str(),
        config.workers,
        plan.task_count(),
        plan.round_count()
    )?;
    Ok(())
}

/// Band storage bytes for an order-`n` matrix.
pub fn storage_bytes(n: usize, bw: usize, tw: usize, p: Precision) -> u64 {
    (n as u64) * (bw as u64 + 2 * tw as u64 + 1) * p.bytes() as u64
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_bench(
    ns: &[usize],
    bws: &[usize],
    tw: usize,
    exec: &ExecArgs,
    precision: Precision,
    repeats: usize,
    seed: u64,
    max_mem: u64,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    if repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }
    for &n in ns {
        for &bw in bws {
            let bytes = storage_bytes(n, bw, tw, precision);
            if bytes > max_mem {
                return Err(CliError::Usage(format!(
                    "n = {n}, bw = {bw} needs {bytes} bytes of band storage, over --max-mem {max_mem}"
                )));
            }
        }
    }
    writeln!(w, "{BENCH_HEADER}")?;
    for &n in ns {
        for &bw in bws {
            match precision {
                Precision::Half => bench_typed::<f16>(n, bw, tw, exec, repeats, seed, w),
                Precision::Single => bench_typed::<f32>(n, bw, tw, exec, repeats, seed, w),
                Precision::Double => bench_typed::<f64>(n, bw, tw, exec, repeats, seed, w),
            }?;
        }
    }
    Ok(())
}

pub(super) fn cmd_generate(
    n: usize,
    bw: usize,
    tw: Option<usize>,
    precision: Precision,
    seed: u64,
    dominant: bool,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    let tw = tw.unwrap_or_else(|| default_tw(bw));
    let fill = if dominant {
        BandFill::Dominant
    } else {
        BandFill::Uniform
    };
    let b = synth_banded(n, bw, tw, fill, seed)?;
    match precision {
        Precision::Half => write_bnd(&b.cast::<f16>(), w)?,
        Precision::Single => write_bnd(&b.cast::<f32>(), w)?,
        Precision::Double => write_bnd(&b, w)?,
    }
    Ok(())
}
