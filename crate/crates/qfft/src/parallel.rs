//! Thread-parallel drivers. Each produces the same result as the sequential
//! routine in `qfft_core`, whatever the number of threads.

use std::collections::BTreeMap;

use qfft_core::certify::{poisson_resample, sample_std, CurveData};
use qfft_core::reconstruct::{fit_restart, prepare_fit, select_best};
use qfft_core::{
    fit_phases, ComplexMatrix, CoincidenceRecord, CurvePoint, Error, FitOptions, ModePair, MonteCarloConfig,
    ReconstructionProblem, ReconstructionResult, ReferenceCounts,
};
use rayon::prelude::*;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "QFFT_THREADS";

/// Runs `f` on a pool of `threads` workers (rayon's default when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> qfft_core::Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Domain(format!("cannot start {n} worker threads: {e}"))),
    }
}

pub fn violation_curve(
    records: &[CoincidenceRecord],
    pc: &BTreeMap<ModePair, f64>,
    reference: &ReferenceCounts,
    config: &MonteCarloConfig,
) -> qfft_core::Result<Vec<CurvePoint>> {
    if config.trials < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two trials".into()));
    }
    let data = CurveData::new(records, pc, reference)?;
    let trials: Vec<Option<Vec<f64>>> = (0..config.trials)
        .into_par_iter()
        .map(|t| data.trial(config.seed, t))
        .collect();
    data.finish(&trials)
}

pub fn monte_carlo_errors(
    counts: &[f64],
    config: &MonteCarloConfig,
    statistic: impl Fn(&[f64]) -> f64 + Sync,
) -> qfft_core::Result<f64> {
    if config.trials < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two trials".into()));
    }
    if counts.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(Error::Domain("counts must be finite and non-negative".into()));
    }
    let values: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|t| statistic(&poisson_resample(counts, config.seed, t)))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("statistic is not finite on a resampled data set".into()));
    }
    Ok(sample_std(&values))
}

pub fn fit_phases_parallel(
    problem: &ReconstructionProblem,
    target: &ComplexMatrix,
    opts: &FitOptions,
) -> qfft_core::Result<ReconstructionResult> {
    prepare_fit(problem, opts)?;
    if problem.free_phases.is_empty() {
        return fit_phases(problem, target, opts);
    }
    let outcomes = (0..opts.restarts)
        .into_par_iter()
        .map(|i| fit_restart(problem, opts, i))
        .collect::<qfft_core::Result<Vec<_>>>()?;
    select_best(problem, target, opts, &outcomes)
}
