//! Visibilities, violation degrees and their Monte Carlo error bars.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::fock::{self, FockState, ModePair};
use crate::matrix::ComplexMatrix;
use crate::models::pair_probabilities;
use crate::seed;

/// Violation degree of distinguishable particles.
pub const D_DISTINGUISHABLE: f64 = 0.5;
/// Violation degree of the two-photon mean-field state.
pub const D_MEAN_FIELD: f64 = 0.25;
/// Default rejection threshold in standard deviations.
pub const DEFAULT_THRESHOLD_SIGMAS: f64 = 3.0;
/// Default number of Monte Carlo data sets.
pub const DEFAULT_TRIALS: usize = 3000;

/// Coincidence counts for one input pair, output pair and delay.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceRecord {
    pub input: ModePair,
    pub output: ModePair,
    /// Path difference in micrometres.
    pub delta_x: f64,
    pub counts: u64,
    pub integration_tag: Option<String>,
}

/// `(c - q) / c`.
pub fn visibility(c: f64, q: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::UndefinedVisibility);
    }
    Ok((c - q) / c)
}

/// `D = sum over forbidden pairs of pc * (1 - v)`.
pub fn violation_degree(pc: &BTreeMap<ModePair, f64>, v: &BTreeMap<ModePair, f64>) -> Result<f64> {
    if pc.len() != v.len() || pc.keys().zip(v.keys()).any(|(a, b)| a != b) {
        return Err(Error::domain(
            "classical probabilities and visibilities cover different output pairs",
        ));
    }
    Ok(pc.iter().map(|(k, p)| p * (1.0 - v[k])).sum())
}

/// Collision-free two-photon outputs forbidden by the suppression law.
pub fn forbidden_pairs(m: usize) -> Vec<ModePair> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            // 1-based labels i+1, j+1 have an odd sum exactly when i + j is odd
            if (i + j) % 2 == 1 {
                out.push(ModePair::new(i, j));
            }
        }
    }
    out
}

/// Where the classical probabilities came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalSource {
    /// Computed from a unitary.
    Model,
    /// The Fourier value `2 / m^2`.
    Uniform,
    /// Estimated from measured single-photon probabilities.
    Singles,
}

impl ClassicalSource {
    pub fn name(&self) -> &'static str {
        match self {
            ClassicalSource::Model => "model",
            ClassicalSource::Uniform => "uniform",
            ClassicalSource::Singles => "singles",
        }
    }
}

/// Distinguishable-particle probabilities over the forbidden output pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalProbabilities {
    pub source: ClassicalSource,
    pub values: BTreeMap<ModePair, f64>,
}

fn check_pair(input: ModePair, m: usize) -> Result<()> {
    if input.high >= m {
        return Err(Error::Bounds {
            index: input.high,
            dim: m,
        });
    }
    if input.is_bunched() {
        return Err(Error::domain("input pair must occupy two distinct modes"));
    }
    Ok(())
}

pub fn classical_from_unitary(u: &ComplexMatrix, input: ModePair) -> Result<ClassicalProbabilities> {
    if !u.is_square() {
        return Err(Error::shape("interferometer matrix must be square"));
    }
    check_pair(input, u.rows())?;
    let values = forbidden_pairs(u.rows())
        .into_iter()
        .map(|o| (o, pair_probabilities(u, input, o).classical))
        .collect();
    Ok(ClassicalProbabilities {
        source: ClassicalSource::Model,
        values,
    })
}

pub fn classical_uniform(m: usize) -> ClassicalProbabilities {
    let q = 2.0 / (m * m) as f64;
    ClassicalProbabilities {
        source: ClassicalSource::Uniform,
        values: forbidden_pairs(m).into_iter().map(|o| (o, q)).collect(),
    }
}

/// From a singles table `singles[out][in]` of detection probabilities.
///
/// Two distinguishable photons reach `(i, j)` with probability
/// `P(i|a) P(j|b) + P(j|a) P(i|b)`.
pub fn classical_from_singles(singles: &[Vec<f64>], input: ModePair) -> Result<ClassicalProbabilities> {
    let m = singles.len();
    if m == 0 || singles.iter().any(|r| r.len() != m) {
        return Err(Error::shape("singles table must be square"));
    }
    if singles.iter().flatten().any(|&p| !(p >= 0.0)) {
        return Err(Error::domain("singles probabilities must be non-negative"));
    }
    check_pair(input, m)?;
    let (a, b) = (input.low, input.high);
    let values = forbidden_pairs(m)
        .into_iter()
        .map(|o| {
            let (i, j) = (o.low, o.high);
            (o, singles[i][a] * singles[j][b] + singles[j][a] * singles[i][b])
        })
        .collect();
    Ok(ClassicalProbabilities {
        source: ClassicalSource::Singles,
        values,
    })
}

/// How the distinguishable reference counts `N^D` are obtained.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ReferenceCounts {
    /// Mean of the counts at the two delays with the largest `|dx|`.
    #[default]
    FromLargestDelays,
    /// Caller-supplied counts per output pair.
    Explicit(BTreeMap<ModePair, f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
        }
    }
}

/// Resamples every count as Poisson with mean equal to the count.
///
/// Trial `t` always draws the same numbers for a given seed.
pub fn poisson_resample(counts: &[f64], seed_value: u64, trial: usize) -> Vec<f64> {
    let mut rng = seed::rng_for(seed_value, seed::stream::MONTE_CARLO, trial as u64);
    counts.iter().map(|&c| draw_poisson(&mut rng, c)).collect()
}

pub(crate) fn draw_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if mean > 0.0 {
        // mean is positive and finite here, so construction cannot fail
        Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    }
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

fn check_counts(counts: &[f64]) -> Result<()> {
    if counts.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(Error::domain("counts must be finite and non-negative"));
    }
    Ok(())
}

/// Standard deviation of `statistic` over Poisson-resampled data sets.
pub fn monte_carlo_errors(
    counts: &[f64],
    config: &MonteCarloConfig,
    statistic: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if config.trials < 2 {
        return Err(Error::domain("Monte Carlo needs at least two trials"));
    }
    check_counts(counts)?;
    let values: Vec<f64> = (0..config.trials)
        .map(|t| statistic(&poisson_resample(counts, config.seed, t)))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("statistic is not finite on a resampled data set"));
    }
    Ok(sample_std(&values))
}

/// One point of a violation-versus-delay curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub delta_x: f64,
    pub d_obs: f64,
    pub sigma: f64,
}

/// Counts arranged by delay and forbidden pair, ready for repeated analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveData {
    pub input: ModePair,
    /// Distinct delays in ascending order.
    pub delays: Vec<f64>,
    pub pairs: Vec<ModePair>,
    pub pc: Vec<f64>,
    /// `counts[d * pairs.len() + k]`, then explicit references if any.
    pub counts: Vec<f64>,
    explicit_reference: bool,
    /// Indices of the two delays used as reference.
    reference_delays: [usize; 2],
}

impl CurveData {
    /// Groups `records` by delay and checks every forbidden pair is present.
    pub fn new(
        records: &[CoincidenceRecord],
        pc: &BTreeMap<ModePair, f64>,
        reference: &ReferenceCounts,
    ) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::domain("no coincidence records"))?;
        let input = first.input;
        if records.iter().any(|r| r.input != input) {
            return Err(Error::domain("records mix several input pairs"));
        }
        if pc.is_empty() {
            return Err(Error::domain("no forbidden pairs to analyze"));
        }
        let mut delays: Vec<f64> = records.iter().map(|r| r.delta_x).collect();
        if delays.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("delays must be finite"));
        }
        delays.sort_by(f64::total_cmp);
        delays.dedup();
        let pairs: Vec<ModePair> = pc.keys().copied().collect();
        let np = pairs.len();
        let mut cells: Vec<Option<f64>> = vec![None; delays.len() * np];
        for r in records {
            let Ok(k) = pairs.binary_search(&r.output) else {
                continue;
            };
            // delays were built from these very values, so the search succeeds
            let d = delays
                .binary_search_by(|x| x.total_cmp(&r.delta_x))
                .map_err(|_| Error::numerical("delay lookup failed"))?;
            let cell = &mut cells[d * np + k];
            *cell = Some(cell.unwrap_or(0.0) + r.counts as f64);
        }
        let mut counts = Vec::with_capacity(cells.len() + np);
        for (idx, c) in cells.iter().enumerate() {
            match c {
                Some(v) => counts.push(*v),
                None => {
                    return Err(Error::domain(alloc::format!(
                        "no counts for output {:?} at delay {}",
                        pairs[idx % np].labels(),
                        delays[idx / np]
                    )))
                }
            }
        }
        let mut reference_delays = [0, 0];
        let explicit_reference = match reference {
            ReferenceCounts::Explicit(map) => {
                for p in &pairs {
                    let v = map.get(p).copied().ok_or_else(|| {
                        Error::domain(alloc::format!("missing reference counts for {:?}", p.labels()))
                    })?;
                    counts.push(v);
                }
                true
            }
            ReferenceCounts::FromLargestDelays => {
                if delays.len() < 2 {
                    return Err(Error::domain(
                        "reference from the largest delays needs at least two delay points",
                    ));
                }
                let mut order: Vec<usize> = (0..delays.len()).collect();
                order.sort_by(|&a, &b| delays[b].abs().total_cmp(&delays[a].abs()).then(a.cmp(&b)));
                reference_delays = [order[0], order[1]];
                false
            }
        };
        check_counts(&counts)?;
        let data = Self {
            input,
            delays,
            pc: pairs.iter().map(|p| pc[p]).collect(),
            pairs,
            counts,
            explicit_reference,
            reference_delays,
        };
        if data.references(&data.counts).iter().any(|&r| !(r > 0.0)) {
            return Err(Error::domain("reference counts must be positive for every forbidden pair"));
        }
        Ok(data)
    }

    fn references(&self, counts: &[f64]) -> Vec<f64> {
        let np = self.pairs.len();
        if self.explicit_reference {
            counts[self.delays.len() * np..].to_vec()
        } else {
            let [a, b] = self.reference_delays;
            (0..np)
                .map(|k| 0.5 * (counts[a * np + k] + counts[b * np + k]))
                .collect()
        }
    }

    /// `D(dx)` for every delay from a full count vector.
    ///
    /// `None` when a reference count is zero.
    pub fn evaluate(&self, counts: &[f64]) -> Option<Vec<f64>> {
        let np = self.pairs.len();
        let refs = self.references(counts);
        if refs.iter().any(|&r| !(r > 0.0)) {
            return None;
        }
        Some(
            (0..self.delays.len())
                .map(|d| {
                    (0..np)
                        .map(|k| self.pc[k] * counts[d * np + k] / refs[k])
                        .sum()
                })
                .collect(),
        )
    }

    pub fn observed(&self) -> Vec<f64> {
        // references were checked positive on construction
        self.evaluate(&self.counts).unwrap_or_default()
    }

    /// The curve recomputed on Monte Carlo data set `trial`.
    pub fn trial(&self, seed_value: u64, trial: usize) -> Option<Vec<f64>> {
        self.evaluate(&poisson_resample(&self.counts, seed_value, trial))
    }

    /// Combines per-trial curves (in trial order) into curve points.
    pub fn finish(&self, trials: &[Option<Vec<f64>>]) -> Result<Vec<CurvePoint>> {
        let valid: Vec<&Vec<f64>> = trials.iter().flatten().collect();
        if valid.len() < 2 {
            return Err(Error::numerical(
                "fewer than two Monte Carlo data sets had positive reference counts",
            ));
        }
        let observed = self.observed();
        let mut column = Vec::with_capacity(valid.len());
        Ok(self
            .delays
            .iter()
            .enumerate()
            .map(|(d, &delta_x)| {
                column.clear();
                column.extend(valid.iter().map(|t| t[d]));
                CurvePoint {
                    delta_x,
                    d_obs: observed[d],
                    sigma: sample_std(&column),
                }
            })
            .collect())
    }
}

/// Violation degree versus delay with Monte Carlo error bars.
///
/// All counts, including those that define the reference, are resampled in
/// each trial.
pub fn violation_curve(
    records: &[CoincidenceRecord],
    pc: &BTreeMap<ModePair, f64>,
    reference: &ReferenceCounts,
    config: &MonteCarloConfig,
) -> Result<Vec<CurvePoint>> {
    if config.trials < 2 {
        return Err(Error::domain("Monte Carlo needs at least two trials"));
    }
    let data = CurveData::new(records, pc, reference)?;
    let trials: Vec<Option<Vec<f64>>> = (0..config.trials).map(|t| data.trial(config.seed, t)).collect();
    data.finish(&trials)
}

/// The point closest to zero delay.
pub fn zero_delay_point(curve: &[CurvePoint]) -> Option<CurvePoint> {
    curve
        .iter()
        .copied()
        .min_by(|a, b| a.delta_x.abs().total_cmp(&b.delta_x.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    RulesOutNeither,
    RulesOutDistinguishable,
    RulesOutBoth,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::RulesOutNeither => "rules_out_neither",
            Verdict::RulesOutDistinguishable => "rules_out_distinguishable",
            Verdict::RulesOutBoth => "rules_out_both",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViolationReport {
    pub d_obs: f64,
    pub sigma: f64,
    pub d_distinguishable: f64,
    pub d_mean_field: f64,
    pub sigmas_vs_distinguishable: f64,
    pub sigmas_vs_mean_field: f64,
    pub threshold_sigmas: f64,
    pub verdict: Verdict,
}

/// Tests an observed violation against the distinguishable and mean-field
/// values.
///
/// A hypothesis is ruled out when `d_obs` lies below its value by at least
/// `threshold_sigmas` standard deviations.
pub fn certify(d_obs: f64, sigma: f64, threshold_sigmas: f64) -> Result<ViolationReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain("sigma must be positive"));
    }
    if !(threshold_sigmas > 0.0 && threshold_sigmas.is_finite()) {
        return Err(Error::domain("threshold must be positive"));
    }
    if !(d_obs >= 0.0 && d_obs.is_finite()) {
        return Err(Error::domain("observed violation must be finite and non-negative"));
    }
    let vs_d = (D_DISTINGUISHABLE - d_obs) / sigma;
    let vs_mf = (D_MEAN_FIELD - d_obs) / sigma;
    let verdict = if vs_d >= threshold_sigmas && vs_mf >= threshold_sigmas {
        Verdict::RulesOutBoth
    } else if vs_d >= threshold_sigmas {
        Verdict::RulesOutDistinguishable
    } else {
        Verdict::RulesOutNeither
    };
    Ok(ViolationReport {
        d_obs,
        sigma,
        d_distinguishable: D_DISTINGUISHABLE,
        d_mean_field: D_MEAN_FIELD,
        sigmas_vs_distinguishable: vs_d,
        sigmas_vs_mean_field: vs_mf,
        threshold_sigmas,
        verdict,
    })
}

/// Ideal two-photon forbidden-output state list for an `m`-mode chip.
pub fn forbidden_states(m: usize) -> Result<Vec<FockState>> {
    forbidden_pairs(m).iter().map(|p| p.to_state(m)).collect()
}

/// Whether a two-photon output is forbidden.
pub fn is_forbidden_pair(output: ModePair, m: usize) -> Result<bool> {
    fock::is_suppressed(&output.to_state(m)?, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::qft_matrix;
    use crate::models::{coincidence_probability, DelayModel};

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(100.0, 0.0).unwrap(), 1.0);
        assert_eq!(visibility(100.0, 200.0).unwrap(), -1.0);
        assert_eq!(visibility(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(visibility(0.0, 3.0), Err(Error::UndefinedVisibility));
    }

    #[test]
    fn forbidden_pairs_follow_the_suppression_law() {
        for m in [4usize, 8] {
            let pairs = forbidden_pairs(m);
            assert_eq!(pairs.len(), m * m / 4);
            for i in 0..m {
                for j in i..m {
                    let p = ModePair::new(i, j);
                    assert_eq!(pairs.contains(&p), is_forbidden_pair(p, m).unwrap());
                }
            }
        }
        assert_eq!(forbidden_states(4).unwrap().len(), 4);
    }

    #[test]
    fn violation_degree_examples() {
        let q = qft_matrix(4).unwrap();
        let pc = classical_from_unitary(&q, ModePair::new(0, 2)).unwrap().values;
        let ones = pc.keys().map(|k| (*k, 1.0)).collect();
        let zeros = pc.keys().map(|k| (*k, 0.0)).collect();
        let dips = pc.keys().map(|k| (*k, 0.95)).collect();
        assert!(violation_degree(&pc, &ones).unwrap().abs() < 1e-15);
        assert!((violation_degree(&pc, &zeros).unwrap() - 0.5).abs() < 1e-15);
        assert!((violation_degree(&pc, &dips).unwrap() - 0.025).abs() < 1e-15);
        let mut short: BTreeMap<ModePair, f64> = zeros;
        short.pop_first();
        assert!(matches!(violation_degree(&pc, &short), Err(Error::Domain(_))));
    }

    #[test]
    fn classical_sources_agree_on_the_fourier_matrix() {
        let q = qft_matrix(8).unwrap();
        let input = ModePair::new(1, 5);
        let a = classical_from_unitary(&q, input).unwrap();
        let b = classical_uniform(8);
        let singles: Vec<Vec<f64>> = (0..8).map(|i| (0..8).map(|j| q.get(i, j).norm_sqr()).collect()).collect();
        let c = classical_from_singles(&singles, input).unwrap();
        for (k, v) in &a.values {
            assert!((v - b.values[k]).abs() < 1e-15);
            assert!((v - c.values[k]).abs() < 1e-15);
        }
        assert_eq!(c.source, ClassicalSource::Singles);
    }

    #[test]
    fn monte_carlo_examples() {
        let cfg = MonteCarloConfig { trials: 3000, seed: 5 };
        assert_eq!(monte_carlo_errors(&[0.0, 0.0], &cfg, |c| c[0] + c[1]).unwrap(), 0.0);
        let s = monte_carlo_errors(&[10_000.0], &cfg, |c| c[0]).unwrap();
        assert!((s - 100.0).abs() < 5.0, "{s}");
        // delta method: var V = q^2/c^3 + q/c^2
        let (c, q): (f64, f64) = (1000.0, 100.0);
        let delta = (q * q / c.powi(3) + q / (c * c)).sqrt();
        let s = monte_carlo_errors(&[c, q], &cfg, |x| (x[0] - x[1]) / x[0]).unwrap();
        assert!((s / delta - 1.0).abs() < 0.15, "{s} vs {delta}");
        let bad = MonteCarloConfig { trials: 0, seed: 5 };
        assert!(matches!(monte_carlo_errors(&[1.0], &bad, |c| c[0]), Err(Error::Domain(_))));
    }

    #[test]
    fn resampling_is_reproducible() {
        let a = poisson_resample(&[50.0, 3.0, 0.0], 9, 4);
        let b = poisson_resample(&[50.0, 3.0, 0.0], 9, 4);
        assert_eq!(a, b);
        assert_eq!(a[2], 0.0);
    }

    #[test]
    fn certify_examples() {
        assert_eq!(certify(0.5, 0.07, 3.0).unwrap().verdict, Verdict::RulesOutNeither);
        let r = certify(0.30, 0.02, 3.0).unwrap();
        assert_eq!(r.verdict, Verdict::RulesOutDistinguishable);
        assert!((r.sigmas_vs_distinguishable - 10.0).abs() < 1e-9);
        let r = certify(0.05, 0.01, 3.0).unwrap();
        assert_eq!(r.verdict, Verdict::RulesOutBoth);
        assert!((r.sigmas_vs_distinguishable - 45.0).abs() < 1e-9);
        assert!((r.sigmas_vs_mean_field - 20.0).abs() < 1e-9);
        assert!(matches!(certify(0.1, 0.0, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn verdicts_are_monotone() {
        let rank = |v: Verdict| match v {
            Verdict::RulesOutNeither => 0,
            Verdict::RulesOutDistinguishable => 1,
            Verdict::RulesOutBoth => 2,
        };
        let mut last = 0;
        for i in (0..=120).rev() {
            let d = i as f64 * 0.005;
            let v = rank(certify(d, 0.02, 3.0).unwrap().verdict);
            assert!(v >= last);
            last = v;
        }
        assert_eq!(last, 2);
    }

    fn records_from(
        input: ModePair,
        delays: &[f64],
        count: impl Fn(ModePair, f64) -> u64,
    ) -> Vec<CoincidenceRecord> {
        let mut out = Vec::new();
        for &dx in delays {
            for i in 0..4 {
                for j in i..4 {
                    let o = ModePair::new(i, j);
                    out.push(CoincidenceRecord {
                        input,
                        output: o,
                        delta_x: dx,
                        counts: count(o, dx),
                        integration_tag: None,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn curve_plateau_and_zero() {
        let input = ModePair::new(0, 2);
        let pc = classical_uniform(4).values;
        let delays = [-300.0, 0.0, 300.0];
        let flat = records_from(input, &delays, |_, _| 1000);
        let cfg = MonteCarloConfig { trials: 200, seed: 1 };
        let curve = violation_curve(&flat, &pc, &ReferenceCounts::default(), &cfg).unwrap();
        for p in &curve {
            assert!((p.d_obs - 0.5).abs() < 1e-15);
            assert!(p.sigma > 0.0);
        }
        let dip = records_from(input, &delays, |o, dx| {
            if dx == 0.0 && is_forbidden_pair(o, 4).unwrap() {
                0
            } else {
                1000
            }
        });
        let curve = violation_curve(&dip, &pc, &ReferenceCounts::default(), &cfg).unwrap();
        assert_eq!(zero_delay_point(&curve).unwrap().d_obs, 0.0);
    }

    #[test]
    fn curve_is_scale_invariant() {
        let input = ModePair::new(1, 3);
        let pc = classical_uniform(4).values;
        let delays = [-200.0, -50.0, 0.0, 50.0, 200.0];
        let base = |o: ModePair, dx: f64| 100 + (o.low * 7 + o.high * 3) as u64 + (dx.abs() as u64) / 10;
        let a = CurveData::new(&records_from(input, &delays, base), &pc, &ReferenceCounts::default()).unwrap();
        let b = CurveData::new(
            &records_from(input, &delays, |o, dx| 7 * base(o, dx)),
            &pc,
            &ReferenceCounts::default(),
        )
        .unwrap();
        for (x, y) in a.observed().iter().zip(b.observed()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn curve_errors() {
        let input = ModePair::new(0, 2);
        let pc = classical_uniform(4).values;
        let recs = records_from(input, &[0.0, 100.0], |_, _| 10);
        let mut explicit = BTreeMap::new();
        explicit.insert(ModePair::new(0, 1), 10.0);
        let cfg = MonteCarloConfig { trials: 10, seed: 0 };
        assert!(matches!(
            violation_curve(&recs, &pc, &ReferenceCounts::Explicit(explicit), &cfg),
            Err(Error::Domain(_))
        ));
        let zeros = records_from(input, &[0.0, 100.0], |_, _| 0);
        assert!(matches!(
            violation_curve(&zeros, &pc, &ReferenceCounts::default(), &cfg),
            Err(Error::Domain(_))
        ));
        let single = records_from(input, &[0.0], |_, _| 5);
        assert!(violation_curve(&single, &pc, &ReferenceCounts::default(), &cfg).is_err());
    }

    #[test]
    fn explicit_reference() {
        let input = ModePair::new(0, 2);
        let pc = classical_uniform(4).values;
        let recs = records_from(input, &[0.0], |o, _| if is_forbidden_pair(o, 4).unwrap() { 50 } else { 400 });
        let refs = pc.keys().map(|k| (*k, 1000.0)).collect();
        let cfg = MonteCarloConfig { trials: 100, seed: 0 };
        let curve = violation_curve(&recs, &pc, &ReferenceCounts::Explicit(refs), &cfg).unwrap();
        assert!((curve[0].d_obs - 0.025).abs() < 1e-15);
    }

    #[test]
    fn closed_form_curve_shape() {
        // expected counts without noise reproduce 0.5 (1 - alpha e^{-(dx/l)^2})
        let q = qft_matrix(4).unwrap();
        let input = ModePair::new(1, 3);
        let model = DelayModel::gaussian(0.95).unwrap();
        let delays: Vec<f64> = (-20..=20).map(|i| i as f64 * 25.0).collect();
        let recs = records_from(input, &delays, |o, dx| {
            let p = pair_probabilities(&q, input, o);
            (1e9 * coincidence_probability(p, model.overlap(dx))).round() as u64
        });
        let pc = classical_from_unitary(&q, input).unwrap().values;
        let data = CurveData::new(&recs, &pc, &ReferenceCounts::default()).unwrap();
        let plateau = 1.0 - 0.95 * (-25.0f64).exp();
        for (dx, d) in data.delays.iter().zip(data.observed()) {
            let expect = 0.5 * (1.0 - 0.95 * (-(dx / 100.0) * (dx / 100.0)).exp()) / plateau;
            assert!((d - expect).abs() < 1e-6, "{dx}: {d} vs {expect}");
        }
    }
}
