//! Waveguide placement on a planar projection of the `p`-cube.
//!
//! Mode `k` sits at `sum_d b_d * offset_d`, where `b_d = -1` or `+1` is bit
//! `d` of `k` (most significant first) and `offset_d` is the projected unit
//! vector of dimension `d`. The couplers of step `j` are hypercube edges along
//! dimension `j`, so in every step they are translates of one segment.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest supported hypercube dimension.
pub const MAX_LAYOUT_DIMENSION: u32 = 6;

/// Projection directions for each hypercube dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutBasis {
    /// Angle of dimension `d` in radians. Length bounds the usable `p`.
    pub angles: Vec<f64>,
}

impl Default for LayoutBasis {
    /// Dimensions pair up into squares of growing size, each pair rotated
    /// slightly against the previous one.
    fn default() -> Self {
        let deg = [0.0, 90.0, 15.0, 105.0, 175.0, 102.5];
        Self {
            angles: deg.iter().map(|d: &f64| d.to_radians()).collect(),
        }
    }
}

impl LayoutBasis {
    /// Offset vector of dimension `d`: unit direction scaled by `2^(d/2)`.
    pub fn offset(&self, d: usize) -> [f64; 2] {
        let scale = (1u64 << (d / 2)) as f64;
        let (s, c) = self.angles[d].sin_cos();
        [c * scale, s * scale]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypercubeLayout {
    pub p: u32,
    /// Cross-section coordinates of each mode.
    pub vertices: Vec<[f64; 2]>,
    /// Coupled mode pairs of each step.
    pub steps: Vec<Vec<(usize, usize)>>,
}

pub fn hypercube_layout(p: u32) -> Result<HypercubeLayout> {
    hypercube_layout_with_basis(p, &LayoutBasis::default())
}

pub fn hypercube_layout_with_basis(p: u32, basis: &LayoutBasis) -> Result<HypercubeLayout> {
    if p == 0 || p > MAX_LAYOUT_DIMENSION {
        return Err(Error::domain(alloc::format!(
            "layout dimension {p} outside 1..={MAX_LAYOUT_DIMENSION}"
        )));
    }
    let p_us = p as usize;
    if basis.angles.len() < p_us {
        return Err(Error::domain("layout basis has fewer angles than dimensions"));
    }
    let m = 1usize << p;
    let offsets: Vec<[f64; 2]> = (0..p_us).map(|d| basis.offset(d)).collect();
    let vertices = (0..m)
        .map(|k| {
            let mut v = [0.0, 0.0];
            for (d, off) in offsets.iter().enumerate() {
                let sign = if k >> (p_us - 1 - d) & 1 == 1 { 1.0 } else { -1.0 };
                v[0] += sign * off[0];
                v[1] += sign * off[1];
            }
            v
        })
        .collect();
    let steps = (0..p_us)
        .map(|d| {
            let bit = 1usize << (p_us - 1 - d);
            (0..m).filter(|k| k & bit == 0).map(|k| (k, k | bit)).collect()
        })
        .collect();
    Ok(HypercubeLayout { p, vertices, steps })
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Closed-segment intersection test with tolerance `eps`.
pub(crate) fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2], eps: f64) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    let straddle = |a: f64, b: f64| (a > eps && b < -eps) || (a < -eps && b > eps);
    if straddle(d1, d2) && straddle(d3, d4) {
        return true;
    }
    let on_segment = |a: [f64; 2], b: [f64; 2], x: [f64; 2], d: f64| {
        d.abs() <= eps
            && x[0] >= a[0].min(b[0]) - eps
            && x[0] <= a[0].max(b[0]) + eps
            && x[1] >= a[1].min(b[1]) - eps
            && x[1] <= a[1].max(b[1]) + eps
    };
    on_segment(p1, p2, q1, d1)
        || on_segment(p1, p2, q2, d2)
        || on_segment(q1, q2, p1, d3)
        || on_segment(q1, q2, p2, d4)
}

impl HypercubeLayout {
    pub fn edge_vector(&self, (a, b): (usize, usize)) -> [f64; 2] {
        sub(self.vertices[b], self.vertices[a])
    }

    /// Lengths of the couplers of `step` (0-based).
    pub fn edge_lengths(&self, step: usize) -> Vec<f64> {
        self.steps[step].iter().map(|&e| norm(self.edge_vector(e))).collect()
    }

    /// Smallest distance between two distinct vertices.
    pub fn min_vertex_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                best = best.min(norm(sub(self.vertices[i], self.vertices[j])));
            }
        }
        best
    }

    /// Checks distinct vertices, equal and parallel couplers within a step,
    /// and no crossings within a step. `tol` is relative to the edge length.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let m = 1usize << self.p;
        if self.vertices.len() != m {
            return Err(Error::validation("vertex count is not 2^p"));
        }
        if self.min_vertex_separation() <= tol {
            return Err(Error::validation("two modes share a position"));
        }
        for (s, edges) in self.steps.iter().enumerate() {
            let mut seen = vec![false; m];
            for &(a, b) in edges {
                if seen[a] || seen[b] {
                    return Err(Error::validation(alloc::format!(
                        "step {}: mode used twice",
                        s + 1
                    )));
                }
                seen[a] = true;
                seen[b] = true;
            }
            let Some(&first) = edges.first() else {
                continue;
            };
            let dir = self.edge_vector(first);
            let len = norm(dir);
            for &e in edges {
                let v = self.edge_vector(e);
                if (norm(v) - len).abs() > tol * len {
                    return Err(Error::validation(alloc::format!(
                        "step {}: unequal coupler lengths",
                        s + 1
                    )));
                }
                if cross(v, dir).abs() > tol * len * len {
                    return Err(Error::validation(alloc::format!(
                        "step {}: couplers not parallel",
                        s + 1
                    )));
                }
            }
            for i in 0..edges.len() {
                for j in i + 1..edges.len() {
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    if segments_intersect(
                        self.vertices[a],
                        self.vertices[b],
                        self.vertices[c],
                        self.vertices[d],
                        tol * len,
                    ) {
                        return Err(Error::validation(alloc::format!(
                            "step {}: couplers ({a},{b}) and ({c},{d}) cross",
                            s + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_layouts() {
        let l1 = hypercube_layout(1).unwrap();
        assert_eq!(l1.vertices.len(), 2);
        assert_eq!(l1.steps, vec![vec![(0, 1)]]);

        let l2 = hypercube_layout(2).unwrap();
        assert_eq!(l2.vertices.len(), 4);
        assert_eq!(l2.steps.len(), 2);
        assert!(l2.steps.iter().all(|s| s.len() == 2));
        // opposite sides of a parallelogram: the diagonals bisect each other
        let v = &l2.vertices;
        let mid_a = [(v[0][0] + v[3][0]) / 2.0, (v[0][1] + v[3][1]) / 2.0];
        let mid_b = [(v[1][0] + v[2][0]) / 2.0, (v[1][1] + v[2][1]) / 2.0];
        assert!(norm(sub(mid_a, mid_b)) < 1e-12);

        let l3 = hypercube_layout(3).unwrap();
        assert_eq!(l3.vertices.len(), 8);
        assert!(l3.steps.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn invariants_hold_up_to_six_dimensions() {
        for p in 1..=MAX_LAYOUT_DIMENSION {
            let l = hypercube_layout(p).unwrap();
            l.check_invariants(1e-9).unwrap();
            for s in 0..p as usize {
                let lens = l.edge_lengths(s);
                let max = lens.iter().cloned().fold(0.0, f64::max);
                let min = lens.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!((max - min) / max <= 1e-9);
            }
        }
    }

    #[test]
    fn layout_steps_match_circuit_couplers() {
        for p in 1..=MAX_LAYOUT_DIMENSION {
            let l = hypercube_layout(p).unwrap();
            let c = crate::synth::synthesize_qfft(p).unwrap();
            for (s, layer) in c.layers.iter().enumerate() {
                assert_eq!(l.steps[s], layer.couplers);
            }
        }
    }

    #[test]
    fn degenerate_basis_is_caught() {
        // all dimensions along one axis: vertices collide
        let basis = LayoutBasis {
            angles: vec![0.0; 6],
        };
        let l = hypercube_layout_with_basis(3, &basis).unwrap();
        assert!(l.check_invariants(1e-9).is_err());
    }

    #[test]
    fn crossing_detection() {
        assert!(segments_intersect([0., 0.], [1., 1.], [0., 1.], [1., 0.], 1e-12));
        assert!(!segments_intersect([0., 0.], [1., 0.], [0., 1.], [1., 1.], 1e-12));
        assert!(segments_intersect([0., 0.], [2., 0.], [1., 0.], [3., 0.], 1e-12));
        assert!(!segments_intersect([0., 0.], [1., 0.], [2., 0.], [3., 0.], 1e-12));
    }

    #[test]
    fn out_of_range_dimension() {
        assert!(hypercube_layout(0).is_err());
        assert!(hypercube_layout(7).is_err());
    }
}
