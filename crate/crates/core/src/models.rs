//! Output statistics of photons leaving an interferometer.
//!
//! Three particle models are supported: indistinguishable bosons in a Fock
//! state (permanents of unitary submatrices), distinguishable particles
//! (permanents of the matrix of single-particle probabilities) and mean-field
//! states (independent particles sharing a random-phase superposition over
//! the occupied input modes). For two photons a delay model interpolates
//! between the distinguishable and indistinguishable limits.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{self, factorial, FockState, ModePair};
use crate::matrix::{ComplexMatrix, C64, UNITARY_TOLERANCE};
use crate::permanent::{self, ryser, DEFAULT_PERMANENT_CAP};
use crate::seed;

/// Default phase grid per integration dimension for mean-field averages.
pub const DEFAULT_QUADRATURE_POINTS: usize = 64;

/// Default coherence length of the delay model, in micrometres.
pub const DEFAULT_COHERENCE_LENGTH_UM: f64 = 100.0;

/// Negative probabilities above this are rounding noise and clamp to zero.
const NEGATIVE_PROBABILITY_SLACK: f64 = 1e-12;

/// Upper bound on mean-field phase-grid nodes.
const MAX_QUADRATURE_NODES: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Fock,
    Distinguishable,
    MeanField,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Fock => "fock",
            Model::Distinguishable => "distinguishable",
            Model::MeanField => "mean_field",
        }
    }
}

/// Probabilities of every output state for one input and one model.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub model: Model,
    pub input: FockState,
    /// [`ComplexMatrix::fingerprint`] of the evolving matrix.
    pub unitary_id: u64,
    /// Output states in enumeration order with their probabilities.
    pub probabilities: Vec<(FockState, f64)>,
}

impl OutcomeDistribution {
    pub fn get(&self, output: &FockState) -> Option<f64> {
        self.probabilities
            .iter()
            .find(|(s, _)| s == output)
            .map(|(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().map(|(_, p)| p).sum()
    }

    pub fn mass_where(&self, mut pred: impl FnMut(&FockState) -> bool) -> f64 {
        self.probabilities
            .iter()
            .filter(|(s, _)| pred(s))
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability mass on outputs the suppression law forbids.
    pub fn forbidden_mass(&self) -> Result<f64> {
        let n = self.input.photons();
        let mut acc = 0.0;
        for (s, p) in &self.probabilities {
            if fock::is_suppressed(s, n)? {
                acc += p;
            }
        }
        Ok(acc)
    }
}

/// Per-call numeric overrides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub unitarity_tolerance: f64,
    pub permanent_cap: usize,
    pub enumeration_cap: u128,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            unitarity_tolerance: UNITARY_TOLERANCE,
            permanent_cap: DEFAULT_PERMANENT_CAP,
            enumeration_cap: fock::DEFAULT_ENUMERATION_CAP,
        }
    }
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    if p >= 0.0 {
        Ok(p)
    } else if p > -NEGATIVE_PROBABILITY_SLACK {
        Ok(0.0)
    } else {
        Err(Error::numerical(alloc::format!(
            "probability {p:e} is negative beyond rounding"
        )))
    }
}

fn check_setup(u: &ComplexMatrix, input: &FockState, opts: &EvolveOptions) -> Result<()> {
    if !u.is_square() || u.rows() != input.modes() {
        return Err(Error::shape(alloc::format!(
            "{}x{} matrix cannot evolve a {}-mode state",
            u.rows(),
            u.cols(),
            input.modes()
        )));
    }
    u.ensure_unitary(opts.unitarity_tolerance)?;
    let n = input.photons();
    if n > opts.permanent_cap {
        return Err(Error::Capacity {
            what: "photon number",
            requested: n as u128,
            cap: opts.permanent_cap as u128,
        });
    }
    Ok(())
}

/// Indistinguishable-photon output distribution.
///
/// `P(T|S) = |perm(U[T, S])|^2 / (prod s_k! prod t_k!)` with rows and columns
/// repeated according to the occupations.
pub fn fock_distribution(u: &ComplexMatrix, input: &FockState) -> Result<OutcomeDistribution> {
    fock_distribution_with(u, input, &EvolveOptions::default())
}

pub fn fock_distribution_with(
    u: &ComplexMatrix,
    input: &FockState,
    opts: &EvolveOptions,
) -> Result<OutcomeDistribution> {
    check_setup(u, input, opts)?;
    let n = input.photons();
    let cols = input.occupied_modes();
    let in_norm = input.factorial_product();
    let outputs = fock::enumerate_outputs_with_cap(n, u.rows(), false, opts.enumeration_cap)?;
    let mut probabilities = Vec::with_capacity(outputs.len());
    for out in outputs {
        let p = if n == 0 {
            1.0
        } else {
            let sub = u.submatrix(&out.occupied_modes(), &cols)?;
            let perm = permanent::permanent_with_cap(&sub, opts.permanent_cap)?;
            perm.norm_sqr() / (in_norm * out.factorial_product())
        };
        probabilities.push((out, clamp_probability(p)?));
    }
    Ok(OutcomeDistribution {
        model: Model::Fock,
        input: input.clone(),
        unitary_id: u.fingerprint(),
        probabilities,
    })
}

/// Distinguishable-particle output distribution.
///
/// Each particle scatters independently; the probability of `T` is the
/// permanent of `|U[T, S]|^2` divided by `prod t_k!`.
pub fn distinguishable_distribution(u: &ComplexMatrix, input: &FockState) -> Result<OutcomeDistribution> {
    distinguishable_distribution_with(u, input, &EvolveOptions::default())
}

pub fn distinguishable_distribution_with(
    u: &ComplexMatrix,
    input: &FockState,
    opts: &EvolveOptions,
) -> Result<OutcomeDistribution> {
    check_setup(u, input, opts)?;
    let n = input.photons();
    let cols = input.occupied_modes();
    let outputs = fock::enumerate_outputs_with_cap(n, u.rows(), false, opts.enumeration_cap)?;
    let mut probabilities = Vec::with_capacity(outputs.len());
    for out in outputs {
        let rows = out.occupied_modes();
        let p = ryser(n, |r, c| u.get(rows[r], cols[c]).norm_sqr()) / out.factorial_product();
        probabilities.push((out, clamp_probability(p)?));
    }
    Ok(OutcomeDistribution {
        model: Model::Distinguishable,
        input: input.clone(),
        unitary_id: u.fingerprint(),
        probabilities,
    })
}

/// How the mean-field phase average is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanFieldMethod {
    /// Uniform (trapezoid) grid with `points` nodes per free phase. The first
    /// phase is pinned to zero since a global phase drops out.
    Quadrature { points: usize },
    /// `samples` independent phase draws.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for MeanFieldMethod {
    fn default() -> Self {
        MeanFieldMethod::Quadrature {
            points: DEFAULT_QUADRATURE_POINTS,
        }
    }
}

struct MeanFieldSetup {
    n: usize,
    /// Column `j_r` of the unitary for each occupied input mode.
    columns: Vec<Vec<C64>>,
    outputs: Vec<FockState>,
    multinomial: Vec<f64>,
}

impl MeanFieldSetup {
    fn new(u: &ComplexMatrix, cyclic: &FockState, require_cyclic: bool) -> Result<Self> {
        let opts = EvolveOptions::default();
        check_setup(u, cyclic, &opts)?;
        if require_cyclic && fock::cyclic_parameters(cyclic).is_none() {
            return Err(Error::domain(alloc::format!(
                "{cyclic:?} is not a collision-free cyclic input"
            )));
        }
        let n = cyclic.photons();
        let m = u.rows();
        let columns = cyclic
            .occupied_modes()
            .iter()
            .map(|&j| (0..m).map(|k| u.get(k, j)).collect())
            .collect();
        let outputs = fock::enumerate_outputs(n, m, false)?;
        let nf = factorial(n);
        let multinomial = outputs.iter().map(|o| nf / o.factorial_product()).collect();
        Ok(Self {
            n,
            columns,
            outputs,
            multinomial,
        })
    }

    /// Multinomial output distribution for one phase assignment.
    fn accumulate(&self, thetas: &[f64], weight: f64, out: &mut [f64], single: &mut [f64]) {
        let scale = 1.0 / (self.n as f64).sqrt();
        for (k, slot) in single.iter_mut().enumerate() {
            let mut amp = C64::new(0.0, 0.0);
            for (col, &th) in self.columns.iter().zip(thetas) {
                amp += col[k] * C64::from_polar(1.0, th);
            }
            *slot = (amp * scale).norm_sqr();
        }
        for ((o, acc), coef) in self.outputs.iter().zip(out.iter_mut()).zip(&self.multinomial) {
            let mut p = *coef;
            for (k, &t) in o.occupations().iter().enumerate() {
                if t > 0 {
                    p *= single[k].powi(t as i32);
                }
            }
            *acc += weight * p;
        }
    }

    fn finish(self, u: &ComplexMatrix, input: &FockState, probs: Vec<f64>) -> Result<OutcomeDistribution> {
        let probabilities = self
            .outputs
            .into_iter()
            .zip(probs)
            .map(|(o, p)| Ok((o, clamp_probability(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(OutcomeDistribution {
            model: Model::MeanField,
            input: input.clone(),
            unitary_id: u.fingerprint(),
            probabilities,
        })
    }
}

/// Mean-field output distribution for a cyclic input.
pub fn mean_field_distribution(
    u: &ComplexMatrix,
    cyclic: &FockState,
    method: MeanFieldMethod,
) -> Result<OutcomeDistribution> {
    match method {
        MeanFieldMethod::Quadrature { points } => mean_field_quadrature(u, cyclic, points),
        MeanFieldMethod::MonteCarlo { samples, seed } => {
            mean_field_monte_carlo(u, cyclic, samples, seed).map(|(d, _)| d)
        }
    }
}

fn mean_field_quadrature(u: &ComplexMatrix, cyclic: &FockState, points: usize) -> Result<OutcomeDistribution> {
    if points == 0 {
        return Err(Error::domain("quadrature needs at least one point"));
    }
    let setup = MeanFieldSetup::new(u, cyclic, true)?;
    let dims = setup.n - 1;
    let nodes = (points as u128).checked_pow(dims as u32).unwrap_or(u128::MAX);
    if nodes > MAX_QUADRATURE_NODES {
        return Err(Error::Capacity {
            what: "quadrature nodes",
            requested: nodes,
            cap: MAX_QUADRATURE_NODES,
        });
    }
    let weight = 1.0 / nodes as f64;
    let mut probs = vec![0.0; setup.outputs.len()];
    let mut single = vec![0.0; u.rows()];
    let mut thetas = vec![0.0; setup.n];
    let mut idx = vec![0usize; dims];
    for _ in 0..nodes {
        for (t, &i) in thetas[1..].iter_mut().zip(&idx) {
            *t = TAU * i as f64 / points as f64;
        }
        setup.accumulate(&thetas, weight, &mut probs, &mut single);
        for i in idx.iter_mut() {
            *i += 1;
            if *i < points {
                break;
            }
            *i = 0;
        }
    }
    setup.finish(u, cyclic, probs)
}

/// Monte Carlo mean-field estimate together with the standard error of each
/// output probability.
pub fn mean_field_monte_carlo(
    u: &ComplexMatrix,
    cyclic: &FockState,
    samples: usize,
    seed_value: u64,
) -> Result<(OutcomeDistribution, Vec<f64>)> {
    if samples < 2 {
        return Err(Error::domain("Monte Carlo needs at least two samples"));
    }
    let setup = MeanFieldSetup::new(u, cyclic, true)?;
    let len = setup.outputs.len();
    let mut sum = vec![0.0; len];
    let mut sum_sq = vec![0.0; len];
    let mut shot = vec![0.0; len];
    let mut single = vec![0.0; u.rows()];
    let mut thetas = vec![0.0; setup.n];
    let mut rng = seed::rng_for(seed_value, seed::stream::MEAN_FIELD, 0);
    for _ in 0..samples {
        for t in thetas.iter_mut() {
            *t = rng.random_range(0.0..TAU);
        }
        shot.iter_mut().for_each(|x| *x = 0.0);
        setup.accumulate(&thetas, 1.0, &mut shot, &mut single);
        for i in 0..len {
            sum[i] += shot[i];
            sum_sq[i] += shot[i] * shot[i];
        }
    }
    let s = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|x| x / s).collect();
    let stderr = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, mu)| ((sq / s - mu * mu).max(0.0) * s / (s - 1.0) / s).sqrt())
        .collect();
    Ok((setup.finish(u, cyclic, mean)?, stderr))
}

/// Mean-field distribution for one fixed phase assignment (no averaging).
pub fn mean_field_fixed_phases(
    u: &ComplexMatrix,
    cyclic: &FockState,
    thetas: &[f64],
) -> Result<OutcomeDistribution> {
    let setup = MeanFieldSetup::new(u, cyclic, true)?;
    if thetas.len() != setup.n {
        return Err(Error::domain("one phase per photon is required"));
    }
    let mut probs = vec![0.0; setup.outputs.len()];
    let mut single = vec![0.0; u.rows()];
    setup.accumulate(thetas, 1.0, &mut probs, &mut single);
    setup.finish(u, cyclic, probs)
}

/// Two-photon output probabilities for one input/output pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairProbabilities {
    /// Distinguishable particles.
    pub classical: f64,
    /// Indistinguishable photons.
    pub quantum: f64,
}

impl PairProbabilities {
    /// `(P^C - P^Q) / P^C`, or `None` when `P^C` vanishes.
    pub fn visibility(&self) -> Option<f64> {
        (self.classical > 0.0).then(|| (self.classical - self.quantum) / self.classical)
    }
}

/// Closed-form two-photon probabilities for photons entering `input`.
pub fn pair_probabilities(u: &ComplexMatrix, input: ModePair, output: ModePair) -> PairProbabilities {
    let (a, b) = (input.low, input.high);
    let (i, j) = (output.low, output.high);
    let (uia, uib, uja, ujb) = (u.get(i, a), u.get(i, b), u.get(j, a), u.get(j, b));
    let mut classical = uia.norm_sqr() * ujb.norm_sqr() + uib.norm_sqr() * uja.norm_sqr();
    let mut quantum = (uia * ujb + uib * uja).norm_sqr();
    if input.is_bunched() {
        classical /= 2.0;
        quantum /= 2.0;
    }
    if output.is_bunched() {
        classical /= 2.0;
        quantum /= 2.0;
    }
    PairProbabilities { classical, quantum }
}

/// Shape of the two-photon overlap as a function of path difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OverlapShape {
    /// `exp(-(dx / l)^2)`
    #[default]
    Gaussian,
    /// `exp(-|dx| / l)`
    Exponential,
}

/// Two-photon partial distinguishability versus delay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayModel {
    /// Indistinguishability at zero delay, in `[0, 1]`.
    pub alpha: f64,
    /// Same units as the delays (micrometres by convention).
    pub coherence_length: f64,
    pub shape: OverlapShape,
}

impl DelayModel {
    pub fn new(alpha: f64, coherence_length: f64, shape: OverlapShape) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(alloc::format!("alpha = {alpha} outside [0, 1]")));
        }
        if !(coherence_length > 0.0 && coherence_length.is_finite()) {
            return Err(Error::domain("coherence length must be positive and finite"));
        }
        Ok(Self {
            alpha,
            coherence_length,
            shape,
        })
    }

    pub fn gaussian(alpha: f64) -> Result<Self> {
        Self::new(alpha, DEFAULT_COHERENCE_LENGTH_UM, OverlapShape::Gaussian)
    }

    /// Effective indistinguishability at path difference `dx`.
    pub fn overlap(&self, dx: f64) -> f64 {
        let x = dx / self.coherence_length;
        let profile = match self.shape {
            OverlapShape::Gaussian => (-(x * x)).exp(),
            OverlapShape::Exponential => (-x.abs()).exp(),
        };
        if profile.is_nan() {
            0.0
        } else {
            self.alpha * profile
        }
    }
}

/// `Q = (1 - I) P^C + I P^Q` for effective indistinguishability `I`.
pub fn coincidence_probability(p: PairProbabilities, overlap: f64) -> f64 {
    (1.0 - overlap) * p.classical + overlap * p.quantum
}

/// Model coincidence probabilities of one output pair along a delay grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceCurve {
    pub output: ModePair,
    pub probabilities: PairProbabilities,
    /// `Q(dx)` for each delay of the grid.
    pub values: Vec<f64>,
}

/// Coincidence curves for every output pair (bunched ones included).
pub fn two_photon_coincidences(
    u: &ComplexMatrix,
    input: ModePair,
    delay: &DelayModel,
    delta_x: &[f64],
) -> Result<Vec<CoincidenceCurve>> {
    let m = u.rows();
    check_two_photon_input(u, input)?;
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            let output = ModePair::new(i, j);
            let probabilities = pair_probabilities(u, input, output);
            let values = delta_x
                .iter()
                .map(|&dx| clamp_probability(coincidence_probability(probabilities, delay.overlap(dx))))
                .collect::<Result<Vec<_>>>()?;
            out.push(CoincidenceCurve {
                output,
                probabilities,
                values,
            });
        }
    }
    Ok(out)
}

fn check_two_photon_input(u: &ComplexMatrix, input: ModePair) -> Result<()> {
    if !u.is_square() {
        return Err(Error::shape("interferometer matrix must be square"));
    }
    u.ensure_unitary(UNITARY_TOLERANCE)?;
    if input.high >= u.rows() {
        return Err(Error::Bounds {
            index: input.high,
            dim: u.rows(),
        });
    }
    if input.is_bunched() {
        return Err(Error::domain("two-photon input must occupy two distinct modes"));
    }
    Ok(())
}

/// Visibilities of the full-bunching outputs `(k, k)`.
///
/// Modes where the distinguishable probability vanishes are left out.
pub fn full_bunching_visibilities(u: &ComplexMatrix, input: ModePair) -> Result<Vec<(usize, f64)>> {
    check_two_photon_input(u, input)?;
    let mut out = Vec::new();
    for k in 0..u.rows() {
        let p = pair_probabilities(u, input, ModePair::new(k, k));
        if p.classical > f64::MIN_POSITIVE {
            if let Some(v) = p.visibility() {
                out.push((k, v));
            }
        }
    }
    Ok(out)
}
