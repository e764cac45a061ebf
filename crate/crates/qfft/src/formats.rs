//! JSON file formats. Mode labels in files are 1-based.

use std::collections::BTreeMap;
use std::path::Path;

use qfft_core::certify::{ClassicalSource, CurvePoint};
use qfft_core::reconstruct::{SensitivityReport, VisibilityDatum};
use qfft_core::{
    ComplexMatrix, FockState, HypercubeLayout, Layer, ModePair, OutcomeDistribution, OutputPartition,
    PhaseSite, QfftCircuit, ReconstructionProblem, ReconstructionResult, ViolationReport, C64,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::files;

/// Parses a JSON file; errors carry the path, line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = files::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| AppError::parse(path, e.to_string()))
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    // these types contain only strings, numbers and sequences, which always serialize
    let mut out = serde_json::to_vec_pretty(value).expect("JSON serialization of plain data");
    out.push(b'\n');
    out
}

fn mode_of(label: usize, m: usize, path: &Path, what: &str) -> Result<usize> {
    if label == 0 || label > m {
        return Err(AppError::parse(
            path,
            format!("{what}: mode label {label} outside 1..={m}"),
        ));
    }
    Ok(label - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(u: &ComplexMatrix) -> Self {
        Self {
            rows: u.rows(),
            cols: u.cols(),
            entries: u.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> qfft_core::Result<ComplexMatrix> {
        ComplexMatrix::new(
            self.rows,
            self.cols,
            self.entries.iter().map(|&[re, im]| C64::new(re, im)).collect(),
        )
    }
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    Ok(read_json::<MatrixJson>(path)?.to_matrix()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerJson {
    pub step: usize,
    pub couplers: Vec<[usize; 2]>,
    /// Phase in radians keyed by mode label.
    #[serde(default)]
    pub phases: BTreeMap<usize, f64>,
}

/// Output relabeling: disjoint label swaps, or a full permutation where
/// entry `k` is the output label of physical mode `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelabelingJson {
    Swaps(Vec<[usize; 2]>),
    Permutation(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub p: u32,
    pub m: usize,
    pub layers: Vec<LayerJson>,
    pub relabeling: RelabelingJson,
}

impl From<&QfftCircuit> for CircuitJson {
    fn from(c: &QfftCircuit) -> Self {
        let layers = c
            .layers
            .iter()
            .map(|l| LayerJson {
                step: l.step,
                couplers: l.couplers.iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
                phases: l.phases.iter().map(|(&k, &v)| (k + 1, v)).collect(),
            })
            .collect();
        let involution = c
            .relabeling
            .iter()
            .enumerate()
            .all(|(k, &l)| c.relabeling.get(l) == Some(&k));
        let relabeling = if involution {
            RelabelingJson::Swaps(c.relabel_swaps().iter().map(|&(a, b)| [a + 1, b + 1]).collect())
        } else {
            RelabelingJson::Permutation(c.relabeling.iter().map(|l| l + 1).collect())
        };
        Self {
            p: c.p,
            m: c.m,
            layers,
            relabeling,
        }
    }
}

impl CircuitJson {
    pub fn to_circuit(&self, path: &Path) -> Result<QfftCircuit> {
        let m = self.m;
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let mut couplers = Vec::with_capacity(l.couplers.len());
            for &[a, b] in &l.couplers {
                couplers.push((mode_of(a, m, path, "coupler")?, mode_of(b, m, path, "coupler")?));
            }
            let mut phases = BTreeMap::new();
            for (&k, &v) in &l.phases {
                phases.insert(mode_of(k, m, path, "phase")?, v);
            }
            layers.push(Layer {
                step: l.step,
                couplers,
                phases,
            });
        }
        let relabeling = match &self.relabeling {
            RelabelingJson::Swaps(swaps) => {
                let mut perm: Vec<usize> = (0..m).collect();
                for &[a, b] in swaps {
                    let (a, b) = (mode_of(a, m, path, "relabeling")?, mode_of(b, m, path, "relabeling")?);
                    perm.swap(a, b);
                }
                perm
            }
            RelabelingJson::Permutation(p) => p
                .iter()
                .map(|&l| mode_of(l, m, path, "relabeling"))
                .collect::<Result<_>>()?,
        };
        let c = QfftCircuit {
            p: self.p,
            m,
            layers,
            relabeling,
        };
        c.validate()?;
        Ok(c)
    }
}

pub fn read_circuit(path: &Path) -> Result<QfftCircuit> {
    read_json::<CircuitJson>(path)?.to_circuit(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutJson {
    pub p: u32,
    pub vertices: Vec<[f64; 2]>,
    pub steps: Vec<Vec<[usize; 2]>>,
}

impl From<&HypercubeLayout> for LayoutJson {
    fn from(l: &HypercubeLayout) -> Self {
        Self {
            p: l.p,
            vertices: l.vertices.clone(),
            steps: l
                .steps
                .iter()
                .map(|s| s.iter().map(|&(a, b)| [a + 1, b + 1]).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub n: usize,
    pub m: usize,
    pub allowed: Vec<Vec<u32>>,
    pub forbidden: Vec<Vec<u32>>,
}

impl From<&OutputPartition> for PartitionJson {
    fn from(p: &OutputPartition) -> Self {
        let occ = |v: &Vec<FockState>| v.iter().map(|s| s.occupations().to_vec()).collect();
        Self {
            n: p.n,
            m: p.m,
            allowed: occ(&p.allowed),
            forbidden: occ(&p.forbidden),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityJson {
    pub output: Vec<u32>,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub model: String,
    pub input: Vec<u32>,
    /// Hex fingerprint of the evolving matrix.
    pub unitary_id: String,
    pub probabilities: Vec<ProbabilityJson>,
}

impl DistributionJson {
    pub fn new(d: &OutcomeDistribution, stderr: Option<&[f64]>) -> Self {
        Self {
            model: d.model.name().to_string(),
            input: d.input.occupations().to_vec(),
            unitary_id: format!("{:016x}", d.unitary_id),
            probabilities: d
                .probabilities
                .iter()
                .enumerate()
                .map(|(i, (s, p))| ProbabilityJson {
                    output: s.occupations().to_vec(),
                    p: *p,
                    stderr: stderr.map(|e| e[i]),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteJson {
    /// 1-based layer step.
    pub layer: usize,
    pub mode: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleJson {
    pub input: usize,
    pub output: usize,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityJson {
    pub input: [usize; 2],
    pub output: [usize; 2],
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    pub template: CircuitJson,
    pub free_phases: Vec<SiteJson>,
    #[serde(default)]
    pub singles: Vec<SingleJson>,
    pub visibilities: Vec<VisibilityJson>,
}

impl From<&ReconstructionProblem> for ProblemJson {
    fn from(p: &ReconstructionProblem) -> Self {
        let pair = |q: ModePair| [q.low + 1, q.high + 1];
        Self {
            template: CircuitJson::from(&p.template),
            free_phases: p
                .free_phases
                .iter()
                .map(|s| SiteJson {
                    layer: s.layer,
                    mode: s.mode + 1,
                })
                .collect(),
            singles: p
                .singles
                .iter()
                .map(|(&(i, o), &v)| SingleJson {
                    input: i + 1,
                    output: o + 1,
                    p: v,
                })
                .collect(),
            visibilities: p
                .visibilities
                .iter()
                .map(|v| VisibilityJson {
                    input: pair(v.input),
                    output: pair(v.output),
                    value: v.value,
                    sigma: v.sigma,
                })
                .collect(),
        }
    }
}

impl ProblemJson {
    pub fn to_problem(&self, path: &Path) -> Result<ReconstructionProblem> {
        let template = self.template.to_circuit(path)?;
        let m = template.m;
        let free_phases = self
            .free_phases
            .iter()
            .map(|s| Ok(PhaseSite::new(s.layer, mode_of(s.mode, m, path, "free phase")?)))
            .collect::<Result<Vec<_>>>()?;
        let mut singles = BTreeMap::new();
        for s in &self.singles {
            let key = (mode_of(s.input, m, path, "singles")?, mode_of(s.output, m, path, "singles")?);
            if singles.insert(key, s.p).is_some() {
                return Err(AppError::parse(
                    path,
                    format!("singles entry ({}, {}) given twice", s.input, s.output),
                ));
            }
        }
        let pair = |[a, b]: [usize; 2]| -> Result<ModePair> {
            Ok(ModePair::new(
                mode_of(a, m, path, "visibility")?,
                mode_of(b, m, path, "visibility")?,
            ))
        };
        let visibilities = self
            .visibilities
            .iter()
            .map(|v| {
                Ok(VisibilityDatum {
                    input: pair(v.input)?,
                    output: pair(v.output)?,
                    value: v.value,
                    sigma: v.sigma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let problem = ReconstructionProblem {
            template,
            free_phases,
            singles,
            visibilities,
        };
        problem.validate()?;
        Ok(problem)
    }
}

pub fn read_problem(path: &Path) -> Result<ReconstructionProblem> {
    read_json::<ProblemJson>(path)?.to_problem(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedPhaseJson {
    pub layer: usize,
    pub mode: usize,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityJson {
    pub singular_values: Vec<f64>,
    /// `null` when the Jacobian is rank deficient.
    pub condition_number: Option<f64>,
}

impl From<&SensitivityReport> for SensitivityJson {
    fn from(s: &SensitivityReport) -> Self {
        Self {
            singular_values: s.singular_values.clone(),
            condition_number: s.condition_number.is_finite().then_some(s.condition_number),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub fitted_phases: Vec<FittedPhaseJson>,
    pub chi2: f64,
    pub fidelity_vs_target: f64,
    pub restart_index: usize,
    pub converged_restarts: usize,
    pub equivalent_solutions: usize,
    pub reconstructed_unitary: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity_at_nominal: Option<SensitivityJson>,
}

impl ResultJson {
    pub fn new(r: &ReconstructionResult, sensitivity: Option<&SensitivityReport>) -> Self {
        Self {
            fitted_phases: r
                .fitted_phases
                .iter()
                .map(|(s, &phase)| FittedPhaseJson {
                    layer: s.layer,
                    mode: s.mode + 1,
                    phase,
                })
                .collect(),
            chi2: r.chi2,
            fidelity_vs_target: r.fidelity_vs_target,
            restart_index: r.restart_index,
            converged_restarts: r.converged_restarts,
            equivalent_solutions: r.equivalent_solutions,
            reconstructed_unitary: MatrixJson::from(&r.reconstructed_unitary),
            sensitivity_at_nominal: sensitivity.map(SensitivityJson::from),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub d_obs: f64,
    pub sigma: f64,
    pub d_distinguishable: f64,
    pub d_mean_field: f64,
    pub sigmas_vs_distinguishable: f64,
    pub sigmas_vs_mean_field: f64,
    pub threshold_sigmas: f64,
    pub verdict: String,
    /// `model`, `uniform` or `singles`.
    pub pc_source: String,
    /// `largest_delays` or `explicit`.
    pub reference: String,
    pub input: [usize; 2],
    pub delta_x_um: f64,
    pub trials: usize,
    pub seed: u64,
}

pub struct ReportContext {
    pub source: ClassicalSource,
    pub explicit_reference: bool,
    pub input: ModePair,
    pub point: CurvePoint,
    pub trials: usize,
    pub seed: u64,
}

impl ReportJson {
    pub fn new(r: &ViolationReport, ctx: &ReportContext) -> Self {
        Self {
            d_obs: r.d_obs,
            sigma: r.sigma,
            d_distinguishable: r.d_distinguishable,
            d_mean_field: r.d_mean_field,
            sigmas_vs_distinguishable: r.sigmas_vs_distinguishable,
            sigmas_vs_mean_field: r.sigmas_vs_mean_field,
            threshold_sigmas: r.threshold_sigmas,
            verdict: r.verdict.name().to_string(),
            pc_source: ctx.source.name().to_string(),
            reference: if ctx.explicit_reference { "explicit" } else { "largest_delays" }.to_string(),
            input: [ctx.input.low + 1, ctx.input.high + 1],
            delta_x_um: ctx.point.delta_x,
            trials: ctx.trials,
            seed: ctx.seed,
        }
    }
}
