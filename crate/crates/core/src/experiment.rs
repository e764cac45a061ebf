//! Synthetic two-photon coincidence experiments.

use alloc::vec::Vec;

use crate::certify::{draw_poisson, CoincidenceRecord};
use crate::error::{Error, Result};
use crate::fock::ModePair;
use crate::matrix::ComplexMatrix;
use crate::models::{two_photon_coincidences, DelayModel};
use crate::seed;

/// Default half-width of the delay scan, in micrometres.
pub const DEFAULT_MAX_DELAY_UM: f64 = 500.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub input: ModePair,
    pub delay: DelayModel,
    pub delta_x: Vec<f64>,
    /// Expected number of detected pairs per delay point, summed over outputs.
    pub events_per_point: f64,
    pub seed: u64,
}

/// `points` evenly spaced delays from `-max_delay` to `max_delay`.
pub fn delay_grid(points: usize, max_delay: f64) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::domain("a delay grid needs at least two points"));
    }
    if !(max_delay > 0.0 && max_delay.is_finite()) {
        return Err(Error::domain("maximum delay must be positive"));
    }
    let step = 2.0 * max_delay / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = -max_delay + step * i as f64;
            // land the centre of odd grids exactly on zero
            if 2 * i + 1 == points {
                0.0
            } else {
                x
            }
        })
        .collect())
}

/// Draws Poisson counts around the model coincidence rates of every output
/// pair (bunched ones included) at every delay.
///
/// Records are ordered by delay, then by output pair. Delay point `d` uses
/// its own derived random stream.
pub fn simulate_experiment(u: &ComplexMatrix, config: &ExperimentConfig) -> Result<Vec<CoincidenceRecord>> {
    if !(config.events_per_point > 0.0 && config.events_per_point.is_finite()) {
        return Err(Error::domain("expected counts per point must be positive"));
    }
    if config.delta_x.is_empty() {
        return Err(Error::domain("no delays to simulate"));
    }
    let curves = two_photon_coincidences(u, config.input, &config.delay, &config.delta_x)?;
    let mut out = Vec::with_capacity(curves.len() * config.delta_x.len());
    for (d, &dx) in config.delta_x.iter().enumerate() {
        let mut rng = seed::rng_for(config.seed, seed::stream::EXPERIMENT, d as u64);
        for c in &curves {
            let counts = draw_poisson(&mut rng, config.events_per_point * c.values[d]);
            out.push(CoincidenceRecord {
                input: config.input,
                output: c.output,
                delta_x: dx,
                counts: counts as u64,
                integration_tag: None,
            });
        }
    }
    Ok(out)
}
