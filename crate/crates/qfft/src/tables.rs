//! CSV tables: comma separated, header row required, UTF-8.

use std::collections::BTreeMap;
use std::path::Path;

use qfft_core::certify::CurvePoint;
use qfft_core::models::CoincidenceCurve;
use qfft_core::{CoincidenceRecord, ModePair};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::files;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRow {
    pub input_i: usize,
    pub input_j: usize,
    pub output_i: usize,
    pub output_j: usize,
    pub delta_x_um: f64,
    pub counts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration_tag: Option<String>,
}

/// Reads rows of `T`; errors name the line and, where known, the field.
pub fn read_rows<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<(u64, T)>> {
    let text = files::read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| AppError::parse(path, format!("header: {e}")))?
        .clone();
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(AppError::parse(path, format!("missing column `{col}`")));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AppError::parse(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec.deserialize(Some(&headers)).map_err(|e| {
            let msg = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => {
                    let field = err
                        .field()
                        .and_then(|i| headers.get(i as usize))
                        .map(|h| format!(", field `{h}`"))
                        .unwrap_or_default();
                    format!("line {line}{field}: {}", err.kind())
                }
                _ => format!("line {line}: {e}"),
            };
            AppError::parse(path, msg)
        })?;
        out.push((line, row));
    }
    Ok(out)
}

fn pair_of(a: usize, b: usize, path: &Path, line: u64, what: &str) -> Result<ModePair> {
    if a == 0 || b == 0 {
        return Err(AppError::parse(path, format!("line {line}: {what} labels are 1-based")));
    }
    Ok(ModePair::new(a - 1, b - 1))
}

pub fn read_coincidences(path: &Path) -> Result<Vec<CoincidenceRecord>> {
    let rows: Vec<(u64, CoincidenceRow)> = read_rows(
        path,
        &["input_i", "input_j", "output_i", "output_j", "delta_x_um", "counts"],
    )?;
    rows.into_iter()
        .map(|(line, r)| {
            if !r.delta_x_um.is_finite() {
                return Err(AppError::parse(path, format!("line {line}, field `delta_x_um`: not finite")));
            }
            Ok(CoincidenceRecord {
                input: pair_of(r.input_i, r.input_j, path, line, "input")?,
                output: pair_of(r.output_i, r.output_j, path, line, "output")?,
                delta_x: r.delta_x_um,
                counts: r.counts,
                integration_tag: r.integration_tag,
            })
        })
        .collect()
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        // writing flat records to memory cannot fail
        w.serialize(r).expect("CSV serialization to memory");
    }
    w.into_inner().expect("CSV flush to memory")
}

pub fn coincidences_csv(records: &[CoincidenceRecord]) -> Vec<u8> {
    csv_bytes(records.iter().map(|r| CoincidenceRow {
        input_i: r.input.low + 1,
        input_j: r.input.high + 1,
        output_i: r.output.low + 1,
        output_j: r.output.high + 1,
        delta_x_um: r.delta_x,
        counts: r.counts,
        integration_tag: r.integration_tag.clone(),
    }))
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ModelCurveRow {
    delta_x: f64,
    output_i: usize,
    output_j: usize,
    Q: f64,
    C: f64,
}

/// Model coincidence probabilities, one row per delay and output pair.
pub fn model_curves_csv(delta_x: &[f64], curves: &[CoincidenceCurve]) -> Vec<u8> {
    let mut rows = Vec::with_capacity(delta_x.len() * curves.len());
    for (d, &dx) in delta_x.iter().enumerate() {
        for c in curves {
            rows.push(ModelCurveRow {
                delta_x: dx,
                output_i: c.output.low + 1,
                output_j: c.output.high + 1,
                Q: c.values[d],
                C: c.probabilities.classical,
            });
        }
    }
    csv_bytes(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRow {
    pub delta_x_um: f64,
    pub d_obs: f64,
    pub sigma: f64,
}

pub fn violation_curve_csv(curve: &[CurvePoint]) -> Vec<u8> {
    csv_bytes(curve.iter().map(|p| ViolationRow {
        delta_x_um: p.delta_x,
        d_obs: p.d_obs,
        sigma: p.sigma,
    }))
}

pub fn read_violation_curve(path: &Path) -> Result<Vec<ViolationRow>> {
    Ok(read_rows(path, &["delta_x_um", "d_obs", "sigma"])?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

#[derive(Deserialize)]
struct SingleRow {
    input: usize,
    output: usize,
    p: f64,
}

/// Singles table `[output][input]` from rows `input,output,p`. The number of
/// modes is the largest label present.
pub fn read_singles(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<(u64, SingleRow)> = read_rows(path, &["input", "output", "p"])?;
    let m = rows.iter().map(|(_, r)| r.input.max(r.output)).max().unwrap_or(0);
    if m == 0 {
        return Err(AppError::parse(path, "singles table is empty or uses 0 as a label"));
    }
    let mut table = vec![vec![f64::NAN; m]; m];
    for (line, r) in rows {
        if r.input == 0 || r.output == 0 {
            return Err(AppError::parse(path, format!("line {line}: mode labels are 1-based")));
        }
        table[r.output - 1][r.input - 1] = r.p;
    }
    if table.iter().flatten().any(|v| v.is_nan()) {
        return Err(AppError::parse(path, format!("singles table is not a complete {m}x{m} table")));
    }
    Ok(table)
}

#[derive(Deserialize)]
struct ReferenceRow {
    output_i: usize,
    output_j: usize,
    counts: f64,
}

pub fn read_reference(path: &Path) -> Result<BTreeMap<ModePair, f64>> {
    let rows: Vec<(u64, ReferenceRow)> = read_rows(path, &["output_i", "output_j", "counts"])?;
    rows.into_iter()
        .map(|(line, r)| Ok((pair_of(r.output_i, r.output_j, path, line, "output")?, r.counts)))
        .collect()
}
