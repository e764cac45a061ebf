//! Simulation and certification of multiphoton interference in Fourier
//! interferometers.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`matrix`] and [`permanent`]: dense complex matrices, Ryser permanents,
//!   unitarity and fidelity checks.
//! * [`fock`]: Fock states, the discrete Fourier matrix, cyclic inputs and
//!   the Fourier suppression law.
//! * [`synth`] and [`layout`]: the radix-2 fast Fourier interferometer and
//!   its hypercube waveguide placement.
//! * [`models`]: output statistics for indistinguishable photons,
//!   distinguishable particles and mean-field states.
//! * [`certify`] and [`experiment`]: visibilities, violation degrees,
//!   Poissonian Monte Carlo error bars and synthetic coincidence data.
//! * [`reconstruct`]: chi-squared recovery of fabrication phases.
//!
//! Mode indices are 0-based everywhere in this crate. Conversion to the
//! 1-based labels used in files and on the command line happens at the edges.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certify;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod layout;
pub mod matrix;
pub mod models;
mod optimize;
pub mod permanent;
pub mod reconstruct;
pub mod seed;
pub mod synth;

pub use certify::{
    certify, monte_carlo_errors, violation_curve, violation_degree, visibility, CoincidenceRecord,
    CurvePoint, MonteCarloConfig, ReferenceCounts, Verdict, ViolationReport,
};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{simulate_experiment, ExperimentConfig};
pub use fock::{
    cyclic_inputs, is_suppressed, partition_outputs, qft_matrix, FockState, ModePair,
    OutputPartition,
};
pub use layout::{hypercube_layout, HypercubeLayout, LayoutBasis};
pub use matrix::{fidelity, ComplexMatrix, C64};
pub use models::{
    distinguishable_distribution, fock_distribution, full_bunching_visibilities,
    mean_field_distribution, two_photon_coincidences, DelayModel, MeanFieldMethod, Model,
    OutcomeDistribution,
};
pub use permanent::permanent;
pub use reconstruct::{
    chi2_objective, fit_phases, moduli_from_singles, FitOptions, ReconstructionProblem,
    ReconstructionResult,
};
pub use synth::{circuit_to_unitary, perturb_circuit, synthesize_qfft, Layer, PhaseSite, QfftCircuit};
