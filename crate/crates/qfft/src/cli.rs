//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfft_core::models::OverlapShape;

use crate::parallel::THREADS_ENV;
use crate::run::{
    defaults, AnalysisConfig, ClassicalChoice, Command, ModelChoice, RunConfig, TargetChoice, UnitarySource,
    DEFAULT_SEED,
};

/// Simulate and certify multiphoton interference in Fourier interferometers.
///
/// Mode labels are 1-based in every flag and file.
#[derive(Debug, Parser)]
#[command(name = "qfft", version, propagate_version = true)]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct UnitaryArgs {
    /// Matrix JSON file.
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    /// Circuit JSON file, composed into its unitary.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Use the exact Fourier matrix on this many modes.
    #[arg(long)]
    pub modes: Option<usize>,
}

impl UnitaryArgs {
    fn source(self) -> UnitarySource {
        match (self.unitary, self.circuit, self.modes) {
            (Some(p), _, _) => UnitarySource::Matrix(p),
            (_, Some(p), _) => UnitarySource::Circuit(p),
            (_, _, Some(m)) => UnitarySource::Fourier(m),
            // clap's required group guarantees one of the three
            _ => unreachable!("unitary source group is required"),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
pub struct ClassicalArgs {
    /// Classical probabilities from this matrix JSON.
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    /// Classical probabilities from this circuit JSON.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Classical probabilities from the exact Fourier matrix on this many modes.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Classical probabilities from a singles CSV (columns input,output,p).
    #[arg(long)]
    pub singles: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Coincidence CSV (input_i,input_j,output_i,output_j,delta_x_um,counts).
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub classical: ClassicalArgs,
    /// Reference counts CSV (output_i,output_j,counts); defaults to the mean
    /// of the two largest-delay points.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Analyze only records with this input pair, e.g. 1,3.
    #[arg(long, value_parser = parse_pair)]
    pub input: Option<(usize, usize)>,
    /// Monte Carlo data sets for the error bars.
    #[arg(long, default_value_t = defaults::DEFAULT_TRIALS)]
    pub trials: usize,
}

impl AnalysisArgs {
    fn config(self) -> AnalysisConfig {
        let c = self.classical;
        let classical = match (c.unitary, c.circuit, c.modes, c.singles) {
            (Some(p), ..) => ClassicalChoice::Unitary(UnitarySource::Matrix(p)),
            (_, Some(p), ..) => ClassicalChoice::Unitary(UnitarySource::Circuit(p)),
            (_, _, Some(m), _) => ClassicalChoice::Unitary(UnitarySource::Fourier(m)),
            (_, _, _, Some(p)) => ClassicalChoice::Singles(p),
            _ => ClassicalChoice::Uniform,
        };
        AnalysisConfig {
            data: self.data,
            classical,
            reference: self.reference,
            input: self.input,
            trials: self.trials,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Fock,
    #[value(alias = "distinguishable")]
    Dist,
    #[value(alias = "mean-field")]
    Mf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Gaussian,
    Exponential,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Build the fast Fourier interferometer circuit.
    Synth {
        /// Number of modes (a power of two).
        #[arg(long)]
        modes: usize,
        /// Circuit JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the composed unitary as matrix JSON.
        #[arg(long)]
        unitary_out: Option<PathBuf>,
    },
    /// Planar waveguide layout of the circuit.
    Layout {
        /// Number of modes (a power of two).
        #[arg(long)]
        modes: usize,
        /// Layout JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Output distribution of a photon input.
    Evolve {
        #[command(flatten)]
        unitary: UnitaryArgs,
        /// Input photons as mode labels, e.g. 1,3 (repeat a label to stack photons).
        #[arg(long, value_parser = parse_labels)]
        input: Labels,
        /// Photon model: indistinguishable, distinguishable or mean-field.
        #[arg(long, value_enum, default_value = "fock")]
        model: ModelArg,
        /// Phase grid points per dimension for the mean-field average.
        #[arg(long, default_value_t = defaults::DEFAULT_QUADRATURE_POINTS)]
        quadrature_points: usize,
        /// Use this many Monte Carlo phase draws for the mean-field average.
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Distribution JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the allowed/forbidden partition JSON.
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Synthetic two-photon coincidence counts versus delay.
    Simulate {
        #[command(flatten)]
        unitary: UnitaryArgs,
        /// Input pair, e.g. 2,4.
        #[arg(long, value_parser = parse_pair)]
        input: (usize, usize),
        /// Indistinguishability at zero delay.
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        /// Coherence length in micrometres.
        #[arg(long, default_value_t = defaults::DEFAULT_COHERENCE_LENGTH_UM)]
        coherence_length: f64,
        #[arg(long, value_enum, default_value = "gaussian")]
        shape: ShapeArg,
        /// Delay points from -max-delay to +max-delay.
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Largest path difference in micrometres.
        #[arg(long, default_value_t = defaults::DEFAULT_MAX_DELAY_UM)]
        max_delay: f64,
        /// Expected detected pairs per delay point.
        #[arg(long, default_value_t = 1e5)]
        events: f64,
        /// Coincidence CSV output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write model curves (delta_x,output_i,output_j,Q,C).
        #[arg(long)]
        curves_out: Option<PathBuf>,
    },
    /// Violation degree versus delay with Monte Carlo error bars.
    Curve {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// CSV output (delta_x_um,d_obs,sigma).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test the zero-delay violation against distinguishable and mean-field values.
    Certify {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Rejection threshold in standard deviations.
        #[arg(long, default_value_t = defaults::DEFAULT_THRESHOLD_SIGMAS)]
        threshold: f64,
        /// Report JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the circuit phases to measured visibilities.
    Reconstruct {
        /// Problem JSON.
        #[arg(long)]
        problem: PathBuf,
        /// `qft` or a matrix JSON to compare the result against.
        #[arg(long, default_value = "qft")]
        target: String,
        /// Random starting points for the fit.
        #[arg(long, default_value_t = defaults::DEFAULT_RESTARTS)]
        restarts: usize,
        /// Simplex iterations per restart.
        #[arg(long, default_value_t = 4000)]
        max_iterations: usize,
        /// Result JSON output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Comma-separated 1-based labels.
pub type Labels = Vec<usize>;

fn parse_labels(s: &str) -> Result<Labels, String> {
    let labels = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("`{t}` is not a mode label: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if labels.contains(&0) {
        return Err("mode labels are 1-based".into());
    }
    Ok(labels)
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    match parse_labels(s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(format!("expected two labels like 1,3, got `{s}`")),
    }
}

impl Cli {
    pub fn into_config(self) -> RunConfig {
        let command = match self.command {
            Cmd::Synth {
                modes,
                out,
                unitary_out,
            } => Command::Synth {
                modes,
                out,
                unitary_out,
            },
            Cmd::Layout { modes, out } => Command::Layout { modes, out },
            Cmd::Evolve {
                unitary,
                input,
                model,
                quadrature_points,
                mc_samples,
                out,
                partition_out,
            } => Command::Evolve {
                source: unitary.source(),
                input,
                model: match model {
                    ModelArg::Fock => ModelChoice::Fock,
                    ModelArg::Dist => ModelChoice::Distinguishable,
                    ModelArg::Mf => ModelChoice::MeanField,
                },
                quadrature_points,
                mc_samples,
                out,
                partition_out,
            },
            Cmd::Simulate {
                unitary,
                input,
                alpha,
                coherence_length,
                shape,
                points,
                max_delay,
                events,
                out,
                curves_out,
            } => Command::Simulate {
                source: unitary.source(),
                input,
                alpha,
                coherence_length,
                shape: match shape {
                    ShapeArg::Gaussian => OverlapShape::Gaussian,
                    ShapeArg::Exponential => OverlapShape::Exponential,
                },
                points,
                max_delay,
                events,
                out,
                curves_out,
            },
            Cmd::Curve { analysis, out } => Command::Curve {
                analysis: analysis.config(),
                out,
            },
            Cmd::Certify {
                analysis,
                threshold,
                out,
            } => Command::Certify {
                analysis: analysis.config(),
                threshold,
                out,
            },
            Cmd::Reconstruct {
                problem,
                target,
                restarts,
                max_iterations,
                out,
            } => Command::Reconstruct {
                problem,
                target: if target.eq_ignore_ascii_case("qft") {
                    TargetChoice::Fourier
                } else {
                    TargetChoice::Matrix(target.into())
                },
                restarts,
                max_iterations,
                out,
            },
        };
        RunConfig {
            command,
            seed: self.seed,
            threads: self.threads,
        }
    }
}
