//! Fock states, the Fourier matrix, cyclic inputs and the suppression law.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Refuse to enumerate more output states than this.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Occupation numbers over `m` modes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(Vec<u32>);

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ">")
    }
}

impl FockState {
    pub fn new(occupations: Vec<u32>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::domain("a Fock state needs at least one mode"));
        }
        Ok(Self(occupations))
    }

    pub fn vacuum(m: usize) -> Result<Self> {
        Self::new(vec![0; m])
    }

    /// State with one photon per listed 0-based mode; repeats stack up.
    pub fn from_modes(m: usize, modes: &[usize]) -> Result<Self> {
        let mut occ = vec![0u32; m];
        for &k in modes {
            if k >= m {
                return Err(Error::Bounds { index: k, dim: m });
            }
            occ[k] += 1;
        }
        Self::new(occ)
    }

    /// Like [`FockState::from_modes`] but with 1-based labels.
    pub fn from_labels(m: usize, labels: &[usize]) -> Result<Self> {
        let mut modes = Vec::with_capacity(labels.len());
        for &l in labels {
            if l == 0 || l > m {
                return Err(Error::domain(alloc::format!(
                    "mode label {l} outside 1..={m}"
                )));
            }
            modes.push(l - 1);
        }
        Self::from_modes(m, &modes)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().map(|&o| o as usize).sum()
    }

    /// Occupied 0-based modes, each repeated by its occupation.
    pub fn occupied_modes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.photons());
        for (k, &o) in self.0.iter().enumerate() {
            for _ in 0..o {
                out.push(k);
            }
        }
        out
    }

    pub fn is_collision_free(&self) -> bool {
        self.0.iter().all(|&o| o <= 1)
    }

    /// `prod_k t_k!`
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&o| factorial(o as usize)).product()
    }

    /// Two-photon state as a mode pair, if it has exactly two photons.
    pub fn as_pair(&self) -> Option<ModePair> {
        match self.occupied_modes().as_slice() {
            &[a, b] => Some(ModePair::new(a, b)),
            _ => None,
        }
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// An unordered pair of 0-based modes, stored with `low <= high`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModePair {
    pub low: usize,
    pub high: usize,
}

impl ModePair {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Self { low: a, high: b }
        } else {
            Self { low: b, high: a }
        }
    }

    /// Builds a pair from 1-based labels.
    pub fn from_labels(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::domain("mode labels are 1-based"));
        }
        Ok(Self::new(a - 1, b - 1))
    }

    pub fn labels(&self) -> (usize, usize) {
        (self.low + 1, self.high + 1)
    }

    pub fn is_bunched(&self) -> bool {
        self.low == self.high
    }

    pub fn to_state(&self, m: usize) -> Result<FockState> {
        FockState::from_modes(m, &[self.low, self.high])
    }
}

/// The `m x m` Fourier matrix, entry `(l, q) = exp(2 pi i l q / m) / sqrt(m)`
/// with 0-based `l, q`.
pub fn qft_matrix(m: usize) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(Error::domain("the Fourier matrix needs m >= 1"));
    }
    let norm = 1.0 / (m as f64).sqrt();
    Ok(ComplexMatrix::from_fn(m, m, |l, q| {
        // reduce l*q mod m first so large m keep full phase precision
        let k = ((l as u128 * q as u128) % m as u128) as f64;
        C64::from_polar(norm, 2.0 * PI * k / m as f64)
    }))
}

/// The `n^(p-1)` collision-free cyclic `n`-photon states over `m = n^p` modes.
///
/// State `s` (1-based) occupies the 1-based modes `s + (r-1) n^(p-1)` for
/// `r = 1..n`.
pub fn cyclic_inputs(n: usize, p: u32) -> Result<Vec<FockState>> {
    if n < 2 {
        return Err(Error::domain("cyclic inputs need n >= 2 photons"));
    }
    if p == 0 {
        return Err(Error::domain("cyclic inputs need p >= 1"));
    }
    let m = n
        .checked_pow(p)
        .ok_or_else(|| Error::domain("n^p overflows the platform integer"))?;
    let period = m / n;
    (0..period)
        .map(|s| {
            let modes: Vec<usize> = (0..n).map(|r| s + r * period).collect();
            FockState::from_modes(m, &modes)
        })
        .collect()
}

/// If `state` is one of the cyclic inputs, returns `(n, p)`.
pub fn cyclic_parameters(state: &FockState) -> Option<(usize, u32)> {
    let n = state.photons();
    let m = state.modes();
    if n < 2 || !state.is_collision_free() {
        return None;
    }
    let mut p = 0u32;
    let mut acc = 1usize;
    while acc < m {
        acc = acc.checked_mul(n)?;
        p += 1;
    }
    if acc != m || p == 0 {
        return None;
    }
    let period = m / n;
    let modes = state.occupied_modes();
    let s = modes[0];
    if s >= period {
        return None;
    }
    let ok = modes.iter().enumerate().all(|(r, &k)| k == s + r * period);
    ok.then_some((n, p))
}

/// Suppression predicate for `n` photons leaving a Fourier interferometer.
///
/// True when the multiplicity-weighted sum of 1-based occupied mode labels is
/// not divisible by `n`.
pub fn is_suppressed(output: &FockState, n: usize) -> Result<bool> {
    if n == 0 {
        return Err(Error::domain("suppression law needs n >= 1"));
    }
    if output.photons() != n {
        return Err(Error::domain(alloc::format!(
            "output carries {} photons, expected {n}",
            output.photons()
        )));
    }
    let label_sum: u128 = output
        .occupations()
        .iter()
        .enumerate()
        .map(|(k, &o)| (k as u128 + 1) * o as u128)
        .sum();
    Ok(label_sum % n as u128 != 0)
}

/// Output states split by the suppression law.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPartition {
    pub n: usize,
    pub m: usize,
    pub collision_free_only: bool,
    pub allowed: Vec<FockState>,
    pub forbidden: Vec<FockState>,
}

pub fn partition_outputs(n: usize, m: usize, collision_free_only: bool) -> Result<OutputPartition> {
    partition_outputs_with_cap(n, m, collision_free_only, DEFAULT_ENUMERATION_CAP)
}

pub fn partition_outputs_with_cap(
    n: usize,
    m: usize,
    collision_free_only: bool,
    cap: u128,
) -> Result<OutputPartition> {
    if n == 0 || m == 0 {
        return Err(Error::domain("partition needs n >= 1 and m >= 1"));
    }
    let states = enumerate_outputs_with_cap(n, m, collision_free_only, cap)?;
    let mut allowed = Vec::new();
    let mut forbidden = Vec::new();
    for s in states {
        if is_suppressed(&s, n)? {
            forbidden.push(s);
        } else {
            allowed.push(s);
        }
    }
    Ok(OutputPartition {
        n,
        m,
        collision_free_only,
        allowed,
        forbidden,
    })
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of `n`-photon states over `m` modes.
pub fn count_outputs(n: usize, m: usize, collision_free_only: bool) -> u128 {
    if collision_free_only {
        binomial(m as u128, n as u128)
    } else {
        binomial((n + m) as u128 - 1, n as u128)
    }
}

pub fn enumerate_outputs(n: usize, m: usize, collision_free_only: bool) -> Result<Vec<FockState>> {
    enumerate_outputs_with_cap(n, m, collision_free_only, DEFAULT_ENUMERATION_CAP)
}

/// All `n`-photon occupation vectors over `m` modes, in descending
/// lexicographic order of the occupation vector.
pub fn enumerate_outputs_with_cap(
    n: usize,
    m: usize,
    collision_free_only: bool,
    cap: u128,
) -> Result<Vec<FockState>> {
    if m == 0 {
        return Err(Error::domain("enumeration needs m >= 1"));
    }
    let count = count_outputs(n, m, collision_free_only);
    if count > cap {
        return Err(Error::Capacity {
            what: "output states",
            requested: count,
            cap,
        });
    }
    let max_per_mode = if collision_free_only { 1 } else { n as u32 };
    let mut out = Vec::with_capacity(count as usize);
    let mut occ = vec![0u32; m];
    fill(&mut occ, 0, n as u32, max_per_mode, &mut out);
    Ok(out)
}

fn fill(occ: &mut [u32], k: usize, left: u32, max: u32, out: &mut Vec<FockState>) {
    if k + 1 == occ.len() {
        if left <= max {
            occ[k] = left;
            out.push(FockState(occ.to_vec()));
        }
        return;
    }
    for o in (0..=left.min(max)).rev() {
        occ[k] = o;
        fill(occ, k + 1, left - o, max, out);
    }
    occ[k] = 0;
}
