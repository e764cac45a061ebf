//! Recovery of fabrication phases from single- and two-photon data.
//!
//! Only the phase shifters of a circuit template are fitted. Two-photon
//! visibilities of the template do not depend on the input and output phases
//! of the unitary, so fidelities are compared after fixing those phases
//! (first row and first column real and non-negative).
//!
//! Visibility data can be blind to some phase combinations. On the 8-mode
//! template the map from phases to visibilities is invariant under negating
//! every phase, and under negating the second-layer phase of mode 6 alone, so
//! up to four phase vectors explain the same data. The fitter collects all
//! equally good sign images of its best optimum and returns the one closest to
//! the template's nominal phases.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fock::{cyclic_inputs, ModePair};
use crate::matrix::{fidelity, ComplexMatrix, C64};
use crate::models::pair_probabilities;
use crate::optimize::{jacobian, levenberg_marquardt, nelder_mead, singular_values, SimplexSettings};
use crate::seed;
use crate::synth::{circuit_to_unitary, with_phases, wrap_phase, PhaseSite, QfftCircuit};

/// Default number of random starting points.
pub const DEFAULT_RESTARTS: usize = 32;

/// Sign images are only searched for up to this many free phases.
const MAX_SIGN_IMAGE_PHASES: usize = 12;

/// Slack when a singles row sums to more than one.
const SINGLES_SUM_TOLERANCE: f64 = 1e-6;

/// A measured two-photon visibility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityDatum {
    pub input: ModePair,
    pub output: ModePair,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionProblem {
    pub template: QfftCircuit,
    pub free_phases: Vec<PhaseSite>,
    /// Detection probability keyed by `(input, output)` mode.
    pub singles: BTreeMap<(usize, usize), f64>,
    pub visibilities: Vec<VisibilityDatum>,
}

impl ReconstructionProblem {
    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        let m = self.template.m;
        for (i, s) in self.free_phases.iter().enumerate() {
            if s.layer == 0 || s.layer > self.template.layers.len() || s.mode >= m {
                return Err(Error::domain(format!("phase site {s:?} is not in the template")));
            }
            if self.free_phases[..i].contains(s) {
                return Err(Error::domain(format!("phase site {s:?} listed twice")));
            }
        }
        let mut row_sums: BTreeMap<usize, f64> = BTreeMap::new();
        for (&(input, output), &p) in &self.singles {
            if input >= m || output >= m {
                return Err(Error::domain(format!(
                    "singles entry ({}, {}) outside {m} modes",
                    input + 1,
                    output + 1
                )));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("singles probability {p} outside [0, 1]")));
            }
            *row_sums.entry(input).or_insert(0.0) += p;
        }
        if let Some((i, s)) = row_sums.iter().find(|(_, &s)| s > 1.0 + SINGLES_SUM_TOLERANCE) {
            return Err(Error::domain(format!("singles for input {} sum to {s}", i + 1)));
        }
        for v in &self.visibilities {
            if !(v.sigma > 0.0 && v.sigma.is_finite()) {
                return Err(Error::domain("every visibility needs a positive sigma"));
            }
            if !v.value.is_finite() {
                return Err(Error::domain("visibility values must be finite"));
            }
            if v.input.high >= m || v.output.high >= m {
                return Err(Error::domain("visibility mode out of range"));
            }
            if v.input.is_bunched() {
                return Err(Error::domain("visibility inputs must be collision-free"));
            }
        }
        Ok(())
    }

    /// Template phases at the free sites.
    pub fn nominal_phases(&self) -> Vec<f64> {
        self.free_phases
            .iter()
            .map(|&s| self.template.phase(s).unwrap_or(0.0))
            .collect()
    }

    /// The unitary with `phases` placed on the free sites.
    pub fn unitary_at(&self, phases: &[f64]) -> Result<ComplexMatrix> {
        circuit_to_unitary(&with_phases(&self.template, &self.free_phases, phases)?)
    }
}

fn model_visibility(u: &ComplexMatrix, input: ModePair, output: ModePair) -> Result<f64> {
    pair_probabilities(u, input, output)
        .visibility()
        .ok_or(Error::UndefinedVisibility)
}

/// Normalized residuals `(V_model - V_measured) / sigma`.
pub fn residuals(problem: &ReconstructionProblem, phases: &[f64]) -> Result<Vec<f64>> {
    if phases.len() != problem.free_phases.len() {
        return Err(Error::domain(format!(
            "{} parameters for {} free phases",
            phases.len(),
            problem.free_phases.len()
        )));
    }
    let u = problem.unitary_at(phases)?;
    problem
        .visibilities
        .iter()
        .map(|d| Ok((model_visibility(&u, d.input, d.output)? - d.value) / d.sigma))
        .collect()
}

/// `sum ((V_model - V_measured) / sigma)^2`.
pub fn chi2_objective(problem: &ReconstructionProblem, phases: &[f64]) -> Result<f64> {
    Ok(residuals(problem, phases)?.iter().map(|r| r * r).sum())
}

/// Moduli `|U[out][in]|` from a complete singles table, each column scaled
/// to unit norm.
pub fn moduli_from_singles(singles: &BTreeMap<(usize, usize), f64>) -> Result<Vec<Vec<f64>>> {
    let m = singles
        .keys()
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .ok_or_else(|| Error::domain("empty singles table"))?;
    if singles.len() != m * m {
        return Err(Error::domain(format!(
            "singles table has {} entries, a complete {m}x{m} table needs {}",
            singles.len(),
            m * m
        )));
    }
    if let Some(p) = singles.values().find(|&&p| !(p >= 0.0)) {
        return Err(Error::domain(format!("negative singles probability {p}")));
    }
    let mut moduli = alloc::vec![alloc::vec![0.0; m]; m];
    for input in 0..m {
        let total: f64 = (0..m).map(|out| singles[&(input, out)]).sum();
        if !(total > 0.0) {
            return Err(Error::domain(format!("no singles detected for input {}", input + 1)));
        }
        for (out, row) in moduli.iter_mut().enumerate() {
            row[input] = (singles[&(input, out)] / total).sqrt();
        }
    }
    Ok(moduli)
}

fn unit_phase(z: C64) -> C64 {
    let r = z.norm();
    if r > 0.0 {
        z.conj() / r
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Rephases rows and columns so the first row and first column are real and
/// non-negative.
pub fn gauge_fix(u: &ComplexMatrix) -> ComplexMatrix {
    let mut out = u.clone();
    for c in 0..out.cols() {
        let w = unit_phase(out.get(0, c));
        for r in 0..out.rows() {
            out.set(r, c, out.get(r, c) * w);
        }
    }
    for r in 1..out.rows() {
        let w = unit_phase(out.get(r, 0));
        for z in out.row_mut(r) {
            *z *= w;
        }
    }
    out
}

/// Fidelity after fixing the gauge of both matrices.
pub fn gauge_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(fidelity(&gauge_fix(a), &gauge_fix(b))?.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Iteration budget of each simplex run.
    pub max_iterations: usize,
    /// Refine each simplex optimum with Levenberg-Marquardt.
    pub polish: bool,
    /// Optima whose chi-squared differ by less than
    /// `tie_tolerance * (1 + chi2)` count as equally good.
    pub tie_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            max_iterations: 4000,
            polish: true,
            tie_tolerance: 1e-7,
        }
    }
}

/// Outcome of one optimizer start.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    /// Wrapped into `[0, 2pi)`.
    pub phases: Vec<f64>,
    pub chi2: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub fitted_phases: BTreeMap<PhaseSite, f64>,
    pub reconstructed_unitary: ComplexMatrix,
    pub chi2: f64,
    /// Gauge-fixed fidelity against the caller's target.
    pub fidelity_vs_target: f64,
    /// Restart that produced the chosen optimum.
    pub restart_index: usize,
    pub converged_restarts: usize,
    /// Distinct equally good phase vectors found, including the chosen one.
    pub equivalent_solutions: usize,
}

fn check_fit(problem: &ReconstructionProblem, opts: &FitOptions) -> Result<()> {
    problem.validate()?;
    if problem.visibilities.len() < problem.free_phases.len() {
        return Err(Error::domain(format!(
            "{} visibilities cannot determine {} phases",
            problem.visibilities.len(),
            problem.free_phases.len()
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::domain("at least one restart is required"));
    }
    Ok(())
}

/// Runs restart `index`: uniform random start, simplex search, optional
/// least-squares polish.
pub fn fit_restart(problem: &ReconstructionProblem, opts: &FitOptions, index: usize) -> Result<RestartOutcome> {
    let k = problem.free_phases.len();
    let mut rng = seed::rng_for(opts.seed, seed::stream::RESTARTS, index as u64);
    let x0: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..TAU)).collect();
    let f = |x: &[f64]| chi2_objective(problem, x);
    let settings = SimplexSettings {
        initial_step: 0.6,
        max_iterations: opts.max_iterations,
        f_abs_tol: 1e-14,
        f_rel_tol: 1e-10,
        x_tol: 1e-7,
    };
    let simplex = nelder_mead(&f, &x0, &settings)?;
    let (x, chi2, converged) = if opts.polish {
        let r = |x: &[f64]| residuals(problem, x);
        let lm = levenberg_marquardt(&r, &simplex.x, 200)?;
        if lm.value <= simplex.value {
            (lm.x, lm.value, lm.converged || simplex.converged)
        } else {
            (simplex.x, simplex.value, simplex.converged)
        }
    } else {
        (simplex.x, simplex.value, simplex.converged)
    };
    Ok(RestartOutcome {
        index,
        phases: x.into_iter().map(wrap_phase).collect(),
        chi2,
        converged,
    })
}

fn wrapped_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = wrap_phase(x - y);
            let d = d.min(TAU - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Picks the reported optimum from restart outcomes given in index order.
///
/// Among converged restarts the lowest chi-squared wins. Every optimum tied
/// with it, together with its tied sign images, is a candidate; the candidate
/// closest to the nominal phases is returned, then the lowest restart index.
pub fn select_best(
    problem: &ReconstructionProblem,
    target: &ComplexMatrix,
    opts: &FitOptions,
    outcomes: &[RestartOutcome],
) -> Result<ReconstructionResult> {
    let converged: Vec<&RestartOutcome> = outcomes.iter().filter(|o| o.converged && o.chi2.is_finite()).collect();
    let Some(best) = converged.iter().map(|o| o.chi2).min_by(f64::total_cmp) else {
        let lowest = outcomes.iter().map(|o| o.chi2).fold(f64::INFINITY, f64::min);
        return Err(Error::Convergence(format!(
            "none of {} restarts converged; lowest chi2 reached {lowest:e}",
            outcomes.len()
        )));
    };
    let tied = |c: f64| c <= best + opts.tie_tolerance * (1.0 + best);
    let k = problem.free_phases.len();
    let nominal = problem.nominal_phases();
    let mut candidates: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for o in converged.iter().filter(|o| tied(o.chi2)) {
        candidates.push((o.index, o.phases.clone(), o.chi2));
        if k == 0 || k > MAX_SIGN_IMAGE_PHASES {
            continue;
        }
        for mask in 1u32..(1 << k) {
            let image: Vec<f64> = o
                .phases
                .iter()
                .enumerate()
                .map(|(i, &x)| if mask & (1 << i) != 0 { wrap_phase(-x) } else { x })
                .collect();
            let c = chi2_objective(problem, &image)?;
            if tied(c) {
                candidates.push((o.index, image, c));
            }
        }
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for (_, x, _) in &candidates {
        if !distinct.iter().any(|y| wrapped_distance(x, y) < 1e-4) {
            distinct.push(x);
        }
    }
    let equivalent_solutions = distinct.len();
    let (index, phases, chi2) = candidates
        .iter()
        .min_by(|a, b| {
            let da = wrapped_distance(&a.1, &nominal);
            let db = wrapped_distance(&b.1, &nominal);
            // treat distances equal within optimizer precision as ties
            if (da - db).abs() < 1e-6 {
                a.0.cmp(&b.0)
            } else {
                da.total_cmp(&db)
            }
        })
        .cloned()
        .ok_or_else(|| Error::numerical("no candidate optimum"))?;
    let reconstructed_unitary = problem.unitary_at(&phases)?;
    let fidelity_vs_target = gauge_fidelity(&reconstructed_unitary, target)?;
    Ok(ReconstructionResult {
        fitted_phases: problem.free_phases.iter().copied().zip(phases).collect(),
        reconstructed_unitary,
        chi2,
        fidelity_vs_target,
        restart_index: index,
        converged_restarts: converged.len(),
        equivalent_solutions,
    })
}

/// Multistart chi-squared fit of the free phases.
///
/// With no free phases the template itself is returned together with the
/// chi-squared of the data against it.
pub fn fit_phases(
    problem: &ReconstructionProblem,
    target: &ComplexMatrix,
    opts: &FitOptions,
) -> Result<ReconstructionResult> {
    check_fit(problem, opts)?;
    if problem.free_phases.is_empty() {
        let u = circuit_to_unitary(&problem.template)?;
        return Ok(ReconstructionResult {
            fitted_phases: BTreeMap::new(),
            fidelity_vs_target: gauge_fidelity(&u, target)?,
            reconstructed_unitary: u,
            chi2: chi2_objective(problem, &[])?,
            restart_index: 0,
            converged_restarts: 0,
            equivalent_solutions: 1,
        });
    }
    let outcomes = (0..opts.restarts)
        .map(|i| fit_restart(problem, opts, i))
        .collect::<Result<Vec<_>>>()?;
    select_best(problem, target, opts, &outcomes)
}

/// Validation half of [`fit_phases`] for callers that run restarts themselves.
pub fn prepare_fit(problem: &ReconstructionProblem, opts: &FitOptions) -> Result<()> {
    check_fit(problem, opts)
}

/// Local conditioning of the visibility model.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    /// Singular values of the residual Jacobian, descending.
    pub singular_values: Vec<f64>,
    /// Largest over smallest singular value; infinite when rank deficient.
    pub condition_number: f64,
}

/// Jacobian conditioning of the residuals at `phases` (usually nominal).
pub fn sensitivity_report(problem: &ReconstructionProblem, phases: &[f64]) -> Result<SensitivityReport> {
    problem.validate()?;
    let k = phases.len();
    if k != problem.free_phases.len() {
        return Err(Error::domain("one value per free phase is required"));
    }
    if k == 0 {
        return Ok(SensitivityReport {
            singular_values: Vec::new(),
            condition_number: 1.0,
        });
    }
    let r = |x: &[f64]| residuals(problem, x);
    let (rows, j) = jacobian(&r, phases, 1e-6)?;
    let sv = singular_values(rows, k, &j);
    let hi = sv.first().copied().unwrap_or(0.0);
    let lo = sv.last().copied().unwrap_or(0.0);
    let condition_number = if lo > hi * 1e-9 { hi / lo } else { f64::INFINITY };
    Ok(SensitivityReport {
        singular_values: sv,
        condition_number,
    })
}

/// The cyclic two-photon inputs of a `2^p`-mode chip followed by
/// `(1, 2), (1, 3), (1, 4)` (1-based), which together make every nominal
/// phase of the 8-mode template observable.
pub fn default_inputs(p: u32) -> Result<Vec<ModePair>> {
    let mut out: Vec<ModePair> = cyclic_inputs(2, p)?
        .iter()
        .filter_map(|s| s.as_pair())
        .collect();
    let m = 1usize << p;
    for b in 1..m.min(4) {
        let pair = ModePair::new(0, b);
        if !out.contains(&pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Noise settings for [`synthetic_problem`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticNoise {
    /// Reported uncertainty of each visibility.
    pub sigma: f64,
    /// When set, Gaussian noise of width `sigma` is added with this seed.
    pub seed: Option<u64>,
}

/// Singles and collision-free visibilities generated from `true_phases` on
/// the free sites of `template`.
pub fn synthetic_problem(
    template: &QfftCircuit,
    free_phases: &[PhaseSite],
    true_phases: &[f64],
    inputs: &[ModePair],
    noise: SyntheticNoise,
) -> Result<ReconstructionProblem> {
    if !(noise.sigma > 0.0 && noise.sigma.is_finite()) {
        return Err(Error::domain("sigma must be positive"));
    }
    let u = circuit_to_unitary(&with_phases(template, free_phases, true_phases)?)?;
    let m = template.m;
    let mut singles = BTreeMap::new();
    for input in 0..m {
        for output in 0..m {
            singles.insert((input, output), u.get(output, input).norm_sqr());
        }
    }
    let gauss = Normal::new(0.0, noise.sigma).map_err(|e| Error::domain(format!("{e}")))?;
    let mut rng = noise.seed.map(|s| seed::rng_for(s, seed::stream::NOISE, 0));
    let mut visibilities = Vec::new();
    for &input in inputs {
        for i in 0..m {
            for j in i + 1..m {
                let output = ModePair::new(i, j);
                let mut value = model_visibility(&u, input, output)?;
                if let Some(r) = rng.as_mut() {
                    value += gauss.sample(r);
                }
                visibilities.push(VisibilityDatum {
                    input,
                    output,
                    value,
                    sigma: noise.sigma,
                });
            }
        }
    }
    let problem = ReconstructionProblem {
        template: template.clone(),
        free_phases: free_phases.to_vec(),
        singles,
        visibilities,
    };
    problem.validate()?;
    Ok(problem)
}

/// Nominal phases shifted by independent uniform draws in `[-spread, spread]`.
pub fn random_phase_offsets(nominal: &[f64], spread: f64, seed_value: u64) -> Vec<f64> {
    let mut rng = seed::rng_for(seed_value, seed::stream::NOISE, 1);
    nominal
        .iter()
        .map(|&x| wrap_phase(x + rng.random_range(-spread..=spread)))
        .collect()
}

/// Wrapped per-phase distance in `[0, pi]`.
pub fn phase_error(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{qft_matrix, FockState};
    use crate::models::{distinguishable_distribution, fock_distribution};
    use crate::synth::synthesize_qfft;

    fn eight_mode(noise: SyntheticNoise, offset_seed: u64) -> (ReconstructionProblem, Vec<f64>) {
        let t = synthesize_qfft(3).unwrap();
        let sites = t.phase_sites();
        let nominal: Vec<f64> = sites.iter().map(|&s| t.phase(s).unwrap()).collect();
        let truth = random_phase_offsets(&nominal, 0.5, offset_seed);
        let p = synthetic_problem(&t, &sites, &truth, &default_inputs(3).unwrap(), noise).unwrap();
        (p, truth)
    }

    const EXACT: SyntheticNoise = SyntheticNoise { sigma: 0.02, seed: None };

    #[test]
    fn chi2_self_consistency() {
        let (p, truth) = eight_mode(EXACT, 4);
        assert!(chi2_objective(&p, &truth).unwrap() < 1e-20);
        let mut off = truth.clone();
        off[0] += 0.05;
        assert!(chi2_objective(&p, &off).unwrap() > 0.0);
        let mut turned = truth.clone();
        turned[2] += TAU;
        let a = chi2_objective(&p, &off).unwrap();
        off[2] += TAU;
        assert!((a - chi2_objective(&p, &off).unwrap()).abs() < 1e-9 * (1.0 + a));
        assert!(matches!(chi2_objective(&p, &truth[..3]), Err(Error::Domain(_))));
    }

    #[test]
    fn visibilities_match_permanent_route() {
        let (p, truth) = eight_mode(EXACT, 9);
        let u = p.unitary_at(&truth).unwrap();
        for d in &p.visibilities {
            let s_in = d.input.to_state(8).unwrap();
            let s_out: FockState = d.output.to_state(8).unwrap();
            let q = fock_distribution(&u, &s_in).unwrap().get(&s_out).unwrap();
            let c = distinguishable_distribution(&u, &s_in).unwrap().get(&s_out).unwrap();
            assert!(((c - q) / c - d.value).abs() < 1e-10);
        }
    }

    #[test]
    fn moduli_examples() {
        let q = qft_matrix(4).unwrap();
        let mut singles = BTreeMap::new();
        let mut lossy = BTreeMap::new();
        for i in 0..4 {
            for o in 0..4 {
                singles.insert((i, o), q.get(o, i).norm_sqr());
                lossy.insert((i, o), 0.9 * q.get(o, i).norm_sqr());
            }
        }
        for table in [&singles, &lossy] {
            for row in moduli_from_singles(table).unwrap() {
                for v in row {
                    assert!((v - 0.5).abs() < 1e-15);
                }
            }
        }
        singles.insert((0, 0), -0.1);
        assert!(matches!(moduli_from_singles(&singles), Err(Error::Domain(_))));
        singles.remove(&(0, 0));
        assert!(moduli_from_singles(&singles).is_err());
    }

    #[test]
    fn moduli_of_perturbed_circuit() {
        let (p, truth) = eight_mode(EXACT, 2);
        let u = p.unitary_at(&truth).unwrap();
        let mods = moduli_from_singles(&p.singles).unwrap();
        for o in 0..8 {
            for i in 0..8 {
                assert!((mods[o][i] - u.get(o, i).norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gauge_fix_removes_input_and_output_phases() {
        let q = qft_matrix(4).unwrap();
        let mut rng = seed::rng_for(3, seed::stream::HAAR, 0);
        let mut v = q.clone();
        for r in 0..4 {
            let w = C64::from_polar(1.0, rng.random_range(0.0..TAU));
            for z in v.row_mut(r) {
                *z *= w;
            }
        }
        for c in 0..4 {
            let w = C64::from_polar(1.0, rng.random_range(0.0..TAU));
            for r in 0..4 {
                v.set(r, c, v.get(r, c) * w);
            }
        }
        assert!(fidelity(&q, &v).unwrap() < 0.99);
        assert!(gauge_fidelity(&q, &v).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn default_inputs_make_the_eight_mode_template_observable() {
        let (p, truth) = eight_mode(EXACT, 1);
        let rep = sensitivity_report(&p, &truth).unwrap();
        assert!(rep.condition_number.is_finite(), "{rep:?}");
        let cyclic_only = ReconstructionProblem {
            visibilities: p
                .visibilities
                .iter()
                .filter(|d| d.input.high - d.input.low == 4)
                .copied()
                .collect(),
            ..p.clone()
        };
        let rep = sensitivity_report(&cyclic_only, &truth).unwrap();
        assert!(rep.condition_number.is_infinite() || rep.condition_number > 1e6);
    }

    #[test]
    fn noiseless_round_trip() {
        let (p, truth) = eight_mode(EXACT, 7);
        let target = p.unitary_at(&truth).unwrap();
        let opts = FitOptions {
            restarts: 12,
            ..FitOptions::default()
        };
        let r = fit_phases(&p, &target, &opts).unwrap();
        assert!(r.chi2 < 1e-8, "{}", r.chi2);
        for (site, x) in p.free_phases.iter().zip(&truth) {
            assert!(phase_error(r.fitted_phases[site], *x) < 1e-6);
        }
        assert!(r.fidelity_vs_target > 1.0 - 1e-8);
        assert!(r.equivalent_solutions >= 2);
    }

    #[test]
    fn fit_is_deterministic() {
        let (p, _) = eight_mode(SyntheticNoise { sigma: 0.02, seed: Some(3) }, 5);
        let q = qft_matrix(8).unwrap();
        let opts = FitOptions {
            restarts: 6,
            seed: 42,
            ..FitOptions::default()
        };
        assert_eq!(fit_phases(&p, &q, &opts).unwrap(), fit_phases(&p, &q, &opts).unwrap());
    }

    #[test]
    fn zero_free_phases_returns_template() {
        let (p, _) = eight_mode(EXACT, 3);
        let fixed = ReconstructionProblem {
            free_phases: Vec::new(),
            ..p.clone()
        };
        let q = qft_matrix(8).unwrap();
        let r = fit_phases(&fixed, &q, &FitOptions::default()).unwrap();
        assert!(r.fidelity_vs_target > 1.0 - 1e-10);
        let nominal = p.nominal_phases();
        assert!((r.chi2 - chi2_objective(&p, &nominal).unwrap()).abs() < 1e-9 * (1.0 + r.chi2));
    }

    #[test]
    fn underdetermined_is_rejected() {
        let (mut p, _) = eight_mode(EXACT, 3);
        p.visibilities.truncate(4);
        let q = qft_matrix(8).unwrap();
        assert!(matches!(
            fit_phases(&p, &q, &FitOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn no_converged_restart_is_a_convergence_error() {
        let (p, _) = eight_mode(EXACT, 3);
        let q = qft_matrix(8).unwrap();
        let outcomes = [RestartOutcome {
            index: 0,
            phases: alloc::vec![0.0; 5],
            chi2: 3.0,
            converged: false,
        }];
        assert!(matches!(
            select_best(&p, &q, &FitOptions::default(), &outcomes),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn four_mode_round_trip() {
        let t = synthesize_qfft(2).unwrap();
        let sites = t.phase_sites();
        assert_eq!(sites.len(), 1);
        let truth = [1.2];
        let p = synthetic_problem(&t, &sites, &truth, &default_inputs(2).unwrap(), EXACT).unwrap();
        let target = p.unitary_at(&truth).unwrap();
        let r = fit_phases(&p, &target, &FitOptions { restarts: 4, ..FitOptions::default() }).unwrap();
        assert!(r.fidelity_vs_target > 1.0 - 1e-8, "{r:?}");
    }
}
