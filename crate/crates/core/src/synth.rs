//! Radix-2 fast Fourier interferometers.
//!
//! A circuit over `m = 2^p` modes has `p` layers. Layer `j` (1-based) first
//! applies its phase shifts, then balanced couplers `[[1, 1], [1, -1]] / sqrt(2)`
//! on every pair of modes whose binary labels differ only in bit `j`, counted
//! from the most significant bit. The twiddle phases of the decimation-in-
//! frequency factorization sit on the `1` branch before the next stage, so
//! layer 1 carries no phases. A final output relabeling (bit reversal) turns
//! the product into the Fourier matrix.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::qft_matrix;
use crate::matrix::{fidelity, ComplexMatrix, C64};

/// Default upper bound on `p`.
pub const DEFAULT_MAX_LAYERS: u32 = 10;

/// Nominal twiddles smaller than this are treated as absent.
const PHASE_EPS: f64 = 1e-12;

/// A phase-shifter location: 1-based layer step and 0-based mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseSite {
    pub layer: usize,
    pub mode: usize,
}

impl PhaseSite {
    pub fn new(layer: usize, mode: usize) -> Self {
        Self { layer, mode }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// 1-based step index.
    pub step: usize,
    /// Coupled mode pairs `(a, b)` with `a` carrying bit 0.
    pub couplers: Vec<(usize, usize)>,
    /// Phases in `[0, 2pi)` applied before the couplers.
    pub phases: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QfftCircuit {
    pub p: u32,
    pub m: usize,
    pub layers: Vec<Layer>,
    /// `relabeling[k]` is the final output label of physical mode `k`.
    pub relabeling: Vec<usize>,
}

/// Wraps a phase into `[0, 2pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).floor();
    if !(0.0..TAU).contains(&r) {
        0.0
    } else {
        r
    }
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    x.reverse_bits() >> (usize::BITS - bits)
}

impl QfftCircuit {
    pub fn coupler_count(&self) -> usize {
        self.layers.iter().map(|l| l.couplers.len()).sum()
    }

    /// Bit position (weight `2^b`) coupled in layer `step`.
    pub fn layer_bit(&self, step: usize) -> u32 {
        self.p - step as u32
    }

    /// Transpositions of the output relabeling, as 0-based `(a, b)` with `a < b`.
    pub fn relabel_swaps(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, &b) in self.relabeling.iter().enumerate() {
            if a < b && self.relabeling.get(b) == Some(&a) {
                out.push((a, b));
            }
        }
        out
    }

    pub fn phase(&self, site: PhaseSite) -> Option<f64> {
        self.layers
            .get(site.layer.checked_sub(1)?)
            .map(|l| l.phases.get(&site.mode).copied().unwrap_or(0.0))
    }

    /// Every site carrying a nonzero phase, in layer then mode order.
    pub fn phase_sites(&self) -> Vec<PhaseSite> {
        self.layers
            .iter()
            .flat_map(|l| {
                l.phases
                    .iter()
                    .filter(|(_, &v)| v.abs() > PHASE_EPS)
                    .map(move |(&k, _)| PhaseSite::new(l.step, k))
            })
            .collect()
    }

    /// Checks the structural invariants of the circuit.
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p >= usize::BITS {
            return Err(Error::validation("circuit needs 1 <= p < word size"));
        }
        if self.m != 1usize << self.p {
            return Err(Error::validation(alloc::format!(
                "m = {} is not 2^p for p = {}",
                self.m,
                self.p
            )));
        }
        if self.layers.len() != self.p as usize {
            return Err(Error::validation(alloc::format!(
                "{} layers given, expected {}",
                self.layers.len(),
                self.p
            )));
        }
        for (idx, layer) in self.layers.iter().enumerate() {
            let step = idx + 1;
            if layer.step != step {
                return Err(Error::validation(alloc::format!(
                    "layer {} is labeled step {}",
                    step,
                    layer.step
                )));
            }
            let bit = 1usize << self.layer_bit(step);
            let mut seen = vec![false; self.m];
            for &(a, b) in &layer.couplers {
                for k in [a, b] {
                    if k >= self.m {
                        return Err(Error::validation(alloc::format!(
                            "layer {step}: mode {k} out of range"
                        )));
                    }
                    if seen[k] {
                        return Err(Error::validation(alloc::format!(
                            "layer {step}: mode {k} appears in more than one coupler"
                        )));
                    }
                    seen[k] = true;
                }
                if a ^ b != bit || a & bit != 0 {
                    return Err(Error::validation(alloc::format!(
                        "layer {step}: coupler ({a}, {b}) does not flip bit {} from 0 to 1",
                        self.layer_bit(step)
                    )));
                }
            }
            if let Some(k) = seen.iter().position(|s| !s) {
                return Err(Error::validation(alloc::format!(
                    "layer {step}: mode {k} is not coupled"
                )));
            }
            for (&k, &phi) in &layer.phases {
                if k >= self.m {
                    return Err(Error::validation(alloc::format!(
                        "layer {step}: phase on mode {k} out of range"
                    )));
                }
                if !(0.0..TAU).contains(&phi) {
                    return Err(Error::validation(alloc::format!(
                        "layer {step}: phase {phi} on mode {k} outside [0, 2pi)"
                    )));
                }
            }
        }
        let mut seen = vec![false; self.m];
        if self.relabeling.len() != self.m {
            return Err(Error::validation("relabeling length differs from m"));
        }
        for &k in &self.relabeling {
            if k >= self.m || seen[k] {
                return Err(Error::validation("relabeling is not a permutation"));
            }
            seen[k] = true;
        }
        Ok(())
    }
}

pub fn synthesize_qfft(p: u32) -> Result<QfftCircuit> {
    synthesize_qfft_with_cap(p, DEFAULT_MAX_LAYERS)
}

/// Builds the `2^p`-mode circuit and verifies it against the Fourier matrix.
pub fn synthesize_qfft_with_cap(p: u32, cap: u32) -> Result<QfftCircuit> {
    if p == 0 || p > cap || p >= usize::BITS {
        return Err(Error::domain(alloc::format!("p = {p} outside 1..={cap}")));
    }
    let m = 1usize << p;
    let mut layers = Vec::with_capacity(p as usize);
    for step in 1..=p as usize {
        let bit = 1usize << (p as usize - step);
        let couplers: Vec<(usize, usize)> =
            (0..m).filter(|k| k & bit == 0).map(|k| (k, k | bit)).collect();
        let mut phases = BTreeMap::new();
        if step >= 2 {
            // twiddles of the previous stage: block size `size`, local index
            // given by the bits below the previous stage's bit
            let prev_bit = bit << 1;
            let size = prev_bit << 1;
            for k in 0..m {
                if k & prev_bit != 0 {
                    let local = k & (prev_bit - 1);
                    let phi = 2.0 * PI * local as f64 / size as f64;
                    if phi > PHASE_EPS {
                        phases.insert(k, phi);
                    }
                }
            }
        }
        layers.push(Layer {
            step,
            couplers,
            phases,
        });
    }
    let mut circuit = QfftCircuit {
        p,
        m,
        layers,
        relabeling: (0..m).collect(),
    };
    circuit.relabeling = fit_relabeling(&circuit)?;
    let u = circuit_to_unitary(&circuit)?;
    let f = fidelity(&u, &qft_matrix(m)?)?;
    if f < 1.0 - 1e-10 {
        return Err(Error::numerical(alloc::format!(
            "synthesized circuit reaches fidelity {f} with the Fourier matrix"
        )));
    }
    Ok(circuit)
}

/// Finds which Fourier row each physical output carries.
///
/// Row `l` of the Fourier matrix has ratio `exp(2 pi i l / m)` between its
/// second and first entries, so the nearest `l` is read off that ratio.
/// The result must be the bit-reversal permutation.
fn fit_relabeling(circuit: &QfftCircuit) -> Result<Vec<usize>> {
    let m = circuit.m;
    let unlabeled = compose(circuit, false)?;
    let mut relabeling = vec![0usize; m];
    let mut seen = vec![false; m];
    for (pos, slot) in relabeling.iter_mut().enumerate() {
        let ratio = unlabeled.get(pos, 1) / unlabeled.get(pos, 0);
        let l = ((ratio.arg() * m as f64 / TAU).round() as i64).rem_euclid(m as i64) as usize;
        if seen[l] {
            return Err(Error::numerical("output relabeling is not a permutation"));
        }
        seen[l] = true;
        *slot = l;
    }
    for (pos, &l) in relabeling.iter().enumerate() {
        if l != bit_reverse(pos, circuit.p) {
            return Err(Error::numerical(
                "output relabeling differs from bit reversal",
            ));
        }
    }
    Ok(relabeling)
}

/// Composes the circuit: per layer the phase diagonal, then the couplers,
/// then the output relabeling.
pub fn circuit_to_unitary(c: &QfftCircuit) -> Result<ComplexMatrix> {
    c.validate()?;
    compose(c, true)
}

fn compose(c: &QfftCircuit, relabel: bool) -> Result<ComplexMatrix> {
    let m = c.m;
    let mut u = ComplexMatrix::identity(m);
    for layer in &c.layers {
        for (&k, &phi) in &layer.phases {
            let w = C64::from_polar(1.0, phi);
            for z in u.row_mut(k) {
                *z *= w;
            }
        }
        for &(a, b) in &layer.couplers {
            for col in 0..m {
                let x = u.get(a, col);
                let y = u.get(b, col);
                u.set(a, col, (x + y) * FRAC_1_SQRT_2);
                u.set(b, col, (x - y) * FRAC_1_SQRT_2);
            }
        }
    }
    if !relabel {
        return Ok(u);
    }
    let mut out = ComplexMatrix::zeros(m, m);
    for (pos, &label) in c.relabeling.iter().enumerate() {
        out.row_mut(label).copy_from_slice(u.row(pos));
    }
    Ok(out)
}

/// Adds `phase_errors` to the nominal phases of `c`.
pub fn perturb_circuit(c: &QfftCircuit, phase_errors: &BTreeMap<PhaseSite, f64>) -> Result<QfftCircuit> {
    let mut out = c.clone();
    for (&site, &delta) in phase_errors {
        let layer = layer_mut(&mut out, site)?;
        let slot = layer.phases.entry(site.mode).or_insert(0.0);
        *slot = wrap_phase(*slot + delta);
    }
    Ok(out)
}

/// Replaces the phases at `sites` with `values`.
pub fn with_phases(c: &QfftCircuit, sites: &[PhaseSite], values: &[f64]) -> Result<QfftCircuit> {
    if sites.len() != values.len() {
        return Err(Error::domain(alloc::format!(
            "{} phase values for {} sites",
            values.len(),
            sites.len()
        )));
    }
    let mut out = c.clone();
    for (&site, &v) in sites.iter().zip(values) {
        if !v.is_finite() {
            return Err(Error::domain("phase values must be finite"));
        }
        layer_mut(&mut out, site)?.phases.insert(site.mode, wrap_phase(v));
    }
    Ok(out)
}

fn layer_mut(c: &mut QfftCircuit, site: PhaseSite) -> Result<&mut Layer> {
    let m = c.m;
    if site.mode >= m {
        return Err(Error::domain(alloc::format!(
            "mode {} out of range for {m} modes",
            site.mode
        )));
    }
    let nlayers = c.layers.len();
    site.layer
        .checked_sub(1)
        .and_then(|i| c.layers.get_mut(i))
        .ok_or_else(|| {
            Error::domain(alloc::format!(
                "layer {} outside 1..={nlayers}",
                site.layer
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn single_layer_circuit() {
        let c = synthesize_qfft(1).unwrap();
        assert_eq!(c.layers.len(), 1);
        assert_eq!(c.layers[0].couplers, vec![(0, 1)]);
        assert!(c.layers[0].phases.is_empty());
        assert_eq!(c.relabeling, vec![0, 1]);
        let u = circuit_to_unitary(&c).unwrap();
        assert!(u.max_abs_diff(&qft_matrix(2).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn coupler_counts() {
        for p in 1..=8u32 {
            let c = synthesize_qfft(p).unwrap();
            assert_eq!(c.coupler_count(), (1usize << p) / 2 * p as usize);
        }
        assert_eq!(synthesize_qfft(2).unwrap().coupler_count(), 4);
        assert_eq!(synthesize_qfft(3).unwrap().coupler_count(), 12);
    }

    #[test]
    fn eight_mode_relabeling_and_phases() {
        let c = synthesize_qfft(3).unwrap();
        assert_eq!(c.relabel_swaps(), vec![(1, 4), (3, 6)]);
        let sites = c.phase_sites();
        assert_eq!(
            sites,
            vec![
                PhaseSite::new(2, 5),
                PhaseSite::new(2, 6),
                PhaseSite::new(2, 7),
                PhaseSite::new(3, 3),
                PhaseSite::new(3, 7),
            ]
        );
    }

    #[test]
    fn composition_matches_fourier_matrix() {
        for p in 1..=6u32 {
            let c = synthesize_qfft(p).unwrap();
            let u = circuit_to_unitary(&c).unwrap();
            let q = qft_matrix(1 << p).unwrap();
            assert!(fidelity(&u, &q).unwrap() >= 1.0 - 1e-10, "p = {p}");
            assert!(u.max_abs_diff(&q).unwrap() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn layers_flip_one_common_bit() {
        for p in 1..=6u32 {
            let c = synthesize_qfft(p).unwrap();
            for layer in &c.layers {
                let diffs: Vec<usize> = layer.couplers.iter().map(|(a, b)| a ^ b).collect();
                assert!(diffs.iter().all(|d| d.count_ones() == 1 && *d == diffs[0]));
            }
        }
    }

    #[test]
    fn out_of_range_p() {
        assert!(matches!(synthesize_qfft(0), Err(Error::Domain(_))));
        assert!(matches!(synthesize_qfft(11), Err(Error::Domain(_))));
        assert!(synthesize_qfft_with_cap(11, 12).is_ok());
    }

    #[test]
    fn reused_mode_is_rejected() {
        let mut c = synthesize_qfft(2).unwrap();
        c.layers[0].couplers[1] = (0, 2);
        assert!(matches!(circuit_to_unitary(&c), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_perturbation_is_identity() {
        let c = synthesize_qfft(3).unwrap();
        let same = perturb_circuit(&c, &BTreeMap::new()).unwrap();
        assert_eq!(
            circuit_to_unitary(&same).unwrap(),
            circuit_to_unitary(&c).unwrap()
        );
    }

    #[test]
    fn last_layer_perturbation_touches_only_its_coupler_outputs() {
        // a phase before the final couplers mixes only the two outputs of
        // the coupler it feeds
        let c = synthesize_qfft(3).unwrap();
        let nominal = circuit_to_unitary(&c).unwrap();
        let mut err = BTreeMap::new();
        err.insert(PhaseSite::new(3, 7), 0.3);
        let u = circuit_to_unitary(&perturb_circuit(&c, &err).unwrap()).unwrap();
        let touched = [c.relabeling[6], c.relabeling[7]];
        for r in 0..8 {
            let diff: f64 = (0..8).map(|k| (u.get(r, k) - nominal.get(r, k)).norm()).sum();
            if touched.contains(&r) {
                assert!(diff > 1e-3);
            } else {
                assert!(diff < 1e-15);
            }
        }
    }

    #[test]
    fn random_perturbation_lowers_fidelity() {
        let c = synthesize_qfft(3).unwrap();
        let mut rng = seed::rng_for(5, 0, 0);
        let mut err = BTreeMap::new();
        for site in c.phase_sites() {
            err.insert(site, rng.random_range(0.05..0.5));
        }
        let u = circuit_to_unitary(&perturb_circuit(&c, &err).unwrap()).unwrap();
        assert!(fidelity(&u, &qft_matrix(8).unwrap()).unwrap() < 1.0 - 1e-6);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn perturbation_rejects_unknown_sites() {
        let c = synthesize_qfft(2).unwrap();
        for site in [PhaseSite::new(0, 1), PhaseSite::new(3, 1), PhaseSite::new(1, 4)] {
            let mut err = BTreeMap::new();
            err.insert(site, 0.1);
            assert!(matches!(perturb_circuit(&c, &err), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn perturbed_phases_stay_wrapped() {
        let c = synthesize_qfft(3).unwrap();
        let mut err = BTreeMap::new();
        err.insert(PhaseSite::new(2, 7), 10.0);
        err.insert(PhaseSite::new(3, 3), -10.0);
        let p = perturb_circuit(&c, &err).unwrap();
        p.validate().unwrap();
    }
}
