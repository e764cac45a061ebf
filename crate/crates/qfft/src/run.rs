//! Command pipelines behind the `qfft` binary.

use std::path::{Path, PathBuf};

use qfft_core::certify::{
    classical_from_singles, classical_from_unitary, classical_uniform, zero_delay_point, ClassicalProbabilities,
};
use qfft_core::experiment::{delay_grid, ExperimentConfig};
use qfft_core::models::{mean_field_monte_carlo, OverlapShape};
use qfft_core::reconstruct::sensitivity_report;
use qfft_core::{
    certify, circuit_to_unitary, distinguishable_distribution, fock_distribution, hypercube_layout,
    mean_field_distribution, partition_outputs, qft_matrix, simulate_experiment, synthesize_qfft,
    two_photon_coincidences, CoincidenceRecord, ComplexMatrix, DelayModel, FitOptions, FockState, MeanFieldMethod,
    ModePair, MonteCarloConfig, ReferenceCounts,
};

use crate::error::{AppError, Result};
use crate::files::{check_input, check_output, write_atomic};
use crate::formats::{
    read_circuit, read_matrix, read_problem, to_json_bytes, CircuitJson, DistributionJson, LayoutJson, MatrixJson,
    PartitionJson, ReportContext, ReportJson, ResultJson,
};
use crate::parallel::{self, with_threads};
use crate::tables::{coincidences_csv, model_curves_csv, read_coincidences, read_reference, read_singles, violation_curve_csv};

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 0;

/// Where an interferometer matrix comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitarySource {
    Matrix(PathBuf),
    Circuit(PathBuf),
    /// The exact `m`-mode Fourier matrix.
    Fourier(usize),
}

impl UnitarySource {
    fn input_path(&self) -> Option<&Path> {
        match self {
            UnitarySource::Matrix(p) | UnitarySource::Circuit(p) => Some(p),
            UnitarySource::Fourier(_) => None,
        }
    }

    pub fn load(&self) -> Result<ComplexMatrix> {
        match self {
            UnitarySource::Matrix(p) => read_matrix(p),
            UnitarySource::Circuit(p) => Ok(circuit_to_unitary(&read_circuit(p)?)?),
            UnitarySource::Fourier(m) => Ok(qft_matrix(*m)?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    Fock,
    Distinguishable,
    MeanField,
}

/// Source of the distinguishable-particle probabilities on forbidden pairs.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalChoice {
    Unitary(UnitarySource),
    Singles(PathBuf),
    /// `2 / m^2` with `m` the largest output label in the data.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetChoice {
    Fourier,
    Matrix(PathBuf),
}

/// Settings shared by `curve` and `certify`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub data: PathBuf,
    pub classical: ClassicalChoice,
    /// Explicit reference counts; otherwise the two largest delays are used.
    pub reference: Option<PathBuf>,
    /// 1-based input labels used to filter the records.
    pub input: Option<(usize, usize)>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Synth {
        modes: usize,
        out: Option<PathBuf>,
        unitary_out: Option<PathBuf>,
    },
    Layout {
        modes: usize,
        out: Option<PathBuf>,
    },
    Evolve {
        source: UnitarySource,
        /// 1-based labels, one per photon.
        input: Vec<usize>,
        model: ModelChoice,
        quadrature_points: usize,
        /// Monte Carlo mean-field samples instead of quadrature.
        mc_samples: Option<usize>,
        out: Option<PathBuf>,
        partition_out: Option<PathBuf>,
    },
    Simulate {
        source: UnitarySource,
        input: (usize, usize),
        alpha: f64,
        coherence_length: f64,
        shape: OverlapShape,
        points: usize,
        max_delay: f64,
        events: f64,
        out: Option<PathBuf>,
        curves_out: Option<PathBuf>,
    },
    Curve {
        analysis: AnalysisConfig,
        out: Option<PathBuf>,
    },
    Certify {
        analysis: AnalysisConfig,
        threshold: f64,
        out: Option<PathBuf>,
    },
    Reconstruct {
        problem: PathBuf,
        target: TargetChoice,
        restarts: usize,
        max_iterations: usize,
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// Worker threads; rayon's default when `None`.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: DEFAULT_SEED,
            threads: None,
        }
    }
}

/// Default numeric settings, for documentation and the CLI.
pub mod defaults {
    pub use qfft_core::certify::{DEFAULT_THRESHOLD_SIGMAS, DEFAULT_TRIALS};
    pub use qfft_core::experiment::DEFAULT_MAX_DELAY_UM;
    pub use qfft_core::models::{DEFAULT_COHERENCE_LENGTH_UM, DEFAULT_QUADRATURE_POINTS};
    pub use qfft_core::reconstruct::DEFAULT_RESTARTS;
}

/// What a run produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    /// Primary artifact when no `--out` path was given.
    pub stdout: Vec<u8>,
    pub written: Vec<PathBuf>,
}

impl RunOutput {
    fn emit(&mut self, path: Option<&Path>, bytes: Vec<u8>) -> Result<()> {
        match path {
            Some(p) => {
                write_atomic(p, &bytes)?;
                self.written.push(p.to_path_buf());
            }
            None => self.stdout = bytes,
        }
        Ok(())
    }
}

fn modes_to_p(modes: usize) -> Result<u32> {
    if modes < 2 || !modes.is_power_of_two() {
        return Err(AppError::usage(format!("--modes must be a power of two >= 2, got {modes}")));
    }
    Ok(modes.trailing_zeros())
}

fn check_paths(cfg: &RunConfig) -> Result<()> {
    let mut inputs: Vec<&Path> = Vec::new();
    let mut outputs: Vec<&Path> = Vec::new();
    match &cfg.command {
        Command::Synth { out, unitary_out, .. } => outputs.extend(out.iter().chain(unitary_out).map(|p| p.as_path())),
        Command::Layout { out, .. } => outputs.extend(out.as_deref()),
        Command::Evolve {
            source,
            out,
            partition_out,
            ..
        } => {
            inputs.extend(source.input_path());
            outputs.extend(out.iter().chain(partition_out).map(|p| p.as_path()));
        }
        Command::Simulate {
            source, out, curves_out, ..
        } => {
            inputs.extend(source.input_path());
            outputs.extend(out.iter().chain(curves_out).map(|p| p.as_path()));
        }
        Command::Curve { analysis: a, out } | Command::Certify { analysis: a, out, .. } => {
            inputs.push(&a.data);
            inputs.extend(a.reference.as_deref());
            match &a.classical {
                ClassicalChoice::Unitary(s) => inputs.extend(s.input_path()),
                ClassicalChoice::Singles(p) => inputs.push(p),
                ClassicalChoice::Uniform => {}
            }
            outputs.extend(out.as_deref());
        }
        Command::Reconstruct {
            problem, target, out, ..
        } => {
            inputs.push(problem);
            if let TargetChoice::Matrix(p) = target {
                inputs.push(p);
            }
            outputs.extend(out.as_deref());
        }
    }
    for p in inputs {
        check_input(p)?;
    }
    for p in outputs {
        check_output(p)?;
    }
    Ok(())
}

/// Validates paths, runs the command and writes its artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    check_paths(cfg)?;
    if cfg.threads == Some(0) {
        return Err(AppError::usage("thread count must be positive"));
    }
    with_threads(cfg.threads, || execute(cfg))?
}

fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    match &cfg.command {
        Command::Synth {
            modes,
            out: path,
            unitary_out,
        } => {
            let c = synthesize_qfft(modes_to_p(*modes)?)?;
            if let Some(p) = unitary_out {
                let u = circuit_to_unitary(&c)?;
                out.emit(Some(p), to_json_bytes(&MatrixJson::from(&u)))?;
            }
            out.emit(path.as_deref(), to_json_bytes(&CircuitJson::from(&c)))?;
        }
        Command::Layout { modes, out: path } => {
            let l = hypercube_layout(modes_to_p(*modes)?)?;
            l.check_invariants(1e-9)?;
            out.emit(path.as_deref(), to_json_bytes(&LayoutJson::from(&l)))?;
        }
        Command::Evolve {
            source,
            input,
            model,
            quadrature_points,
            mc_samples,
            out: path,
            partition_out,
        } => {
            let u = source.load()?;
            let state = FockState::from_labels(u.rows(), input)?;
            let json = match (model, mc_samples) {
                (ModelChoice::Fock, _) => DistributionJson::new(&fock_distribution(&u, &state)?, None),
                (ModelChoice::Distinguishable, _) => {
                    DistributionJson::new(&distinguishable_distribution(&u, &state)?, None)
                }
                (ModelChoice::MeanField, None) => DistributionJson::new(
                    &mean_field_distribution(
                        &u,
                        &state,
                        MeanFieldMethod::Quadrature {
                            points: *quadrature_points,
                        },
                    )?,
                    None,
                ),
                (ModelChoice::MeanField, Some(samples)) => {
                    let (d, se) = mean_field_monte_carlo(&u, &state, *samples, cfg.seed)?;
                    DistributionJson::new(&d, Some(&se))
                }
            };
            if let Some(p) = partition_out {
                let part = partition_outputs(state.photons(), u.rows(), false)?;
                out.emit(Some(p), to_json_bytes(&PartitionJson::from(&part)))?;
            }
            out.emit(path.as_deref(), to_json_bytes(&json))?;
        }
        Command::Simulate {
            source,
            input,
            alpha,
            coherence_length,
            shape,
            points,
            max_delay,
            events,
            out: path,
            curves_out,
        } => {
            let u = source.load()?;
            let input = ModePair::from_labels(input.0, input.1)?;
            let config = ExperimentConfig {
                input,
                delay: DelayModel::new(*alpha, *coherence_length, *shape)?,
                delta_x: delay_grid(*points, *max_delay)?,
                events_per_point: *events,
                seed: cfg.seed,
            };
            let records = simulate_experiment(&u, &config)?;
            if let Some(p) = curves_out {
                let curves = two_photon_coincidences(&u, input, &config.delay, &config.delta_x)?;
                out.emit(Some(p), model_curves_csv(&config.delta_x, &curves))?;
            }
            out.emit(path.as_deref(), coincidences_csv(&records))?;
        }
        Command::Curve { analysis, out: path } => {
            let a = analyze(analysis, cfg.seed)?;
            out.emit(path.as_deref(), violation_curve_csv(&a.curve))?;
        }
        Command::Certify {
            analysis,
            threshold,
            out: path,
        } => {
            let a = analyze(analysis, cfg.seed)?;
            let point = zero_delay_point(&a.curve).ok_or_else(|| AppError::usage("empty violation curve"))?;
            let report = certify(point.d_obs, point.sigma, *threshold)?;
            let ctx = ReportContext {
                source: a.classical.source,
                explicit_reference: analysis.reference.is_some(),
                input: a.input,
                point,
                trials: analysis.trials,
                seed: cfg.seed,
            };
            out.emit(path.as_deref(), to_json_bytes(&ReportJson::new(&report, &ctx)))?;
        }
        Command::Reconstruct {
            problem,
            target,
            restarts,
            max_iterations,
            out: path,
        } => {
            let prob = read_problem(problem)?;
            let target = match target {
                TargetChoice::Fourier => qft_matrix(prob.template.m)?,
                TargetChoice::Matrix(p) => read_matrix(p)?,
            };
            let opts = FitOptions {
                restarts: *restarts,
                seed: cfg.seed,
                max_iterations: *max_iterations,
                ..FitOptions::default()
            };
            let result = parallel::fit_phases_parallel(&prob, &target, &opts)?;
            let sensitivity = sensitivity_report(&prob, &prob.nominal_phases())?;
            out.emit(path.as_deref(), to_json_bytes(&ResultJson::new(&result, Some(&sensitivity))))?;
        }
    }
    Ok(out)
}

struct Analysis {
    input: ModePair,
    classical: ClassicalProbabilities,
    curve: Vec<qfft_core::CurvePoint>,
}

fn analyze(a: &AnalysisConfig, seed: u64) -> Result<Analysis> {
    let mut records: Vec<CoincidenceRecord> = read_coincidences(&a.data)?;
    if let Some((i, j)) = a.input {
        let input = ModePair::from_labels(i, j)?;
        records.retain(|r| r.input == input);
        if records.is_empty() {
            return Err(AppError::usage(format!("no records for input {i},{j}")));
        }
    }
    let input = records
        .first()
        .map(|r| r.input)
        .ok_or_else(|| AppError::usage("coincidence file has no records"))?;
    let classical = match &a.classical {
        ClassicalChoice::Unitary(s) => classical_from_unitary(&s.load()?, input)?,
        ClassicalChoice::Singles(p) => classical_from_singles(&read_singles(p)?, input)?,
        ClassicalChoice::Uniform => {
            let m = records.iter().map(|r| r.output.high.max(r.input.high) + 1).max().unwrap_or(0);
            classical_uniform(m)
        }
    };
    let reference = match &a.reference {
        Some(p) => ReferenceCounts::Explicit(read_reference(p)?),
        None => ReferenceCounts::FromLargestDelays,
    };
    let mc = MonteCarloConfig { trials: a.trials, seed };
    let curve = parallel::violation_curve(&records, &classical.values, &reference, &mc)?;
    Ok(Analysis {
        input,
        classical,
        curve,
    })
}
