//! Small dense optimizers for a handful of parameters.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SimplexSettings {
    pub initial_step: f64,
    pub max_iterations: usize,
    pub f_abs_tol: f64,
    pub f_rel_tol: f64,
    pub x_tol: f64,
}

/// Nelder-Mead with standard reflection, expansion, contraction and shrink.
pub(crate) fn nelder_mead(
    f: &impl Fn(&[f64]) -> Result<f64>,
    x0: &[f64],
    s: &SimplexSettings,
) -> Result<Minimum> {
    let k = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    pts.push(x0.to_vec());
    for i in 0..k {
        let mut p = x0.to_vec();
        p[i] += s.initial_step;
        pts.push(p);
    }
    let mut vals = pts.iter().map(|p| f(p)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..=k).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < s.max_iterations {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[k], order[k.saturating_sub(1)]);
        let spread = vals[worst] - vals[best];
        let diameter = pts
            .iter()
            .map(|p| dist_inf(p, &pts[best]))
            .fold(0.0, f64::max);
        if spread <= s.f_abs_tol + s.f_rel_tol * vals[best].abs() && diameter <= s.x_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; k];
        for &i in &order[..k] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / k as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr)?;
        if fr < vals[best] {
            let xe = along(2.0);
            let fe = f(&xe)?;
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(0.5);
            let fc = f(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = f(&xc)?;
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + 0.5 * (*x - a);
            }
            vals[i] = f(&pts[i])?;
        }
    }
    let best = (0..=k).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Ok(Minimum {
        x: pts[best].clone(),
        value: vals[best],
        iterations,
        converged,
    })
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Central-difference Jacobian, row-major `residuals x parameters`.
pub(crate) fn jacobian(
    res: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    h: f64,
) -> Result<(usize, Vec<f64>)> {
    let k = x.len();
    let mut cols = Vec::with_capacity(k);
    let mut probe = x.to_vec();
    for i in 0..k {
        probe[i] = x[i] + h;
        let plus = res(&probe)?;
        probe[i] = x[i] - h;
        let minus = res(&probe)?;
        probe[i] = x[i];
        cols.push(
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let rows = cols.first().map_or(0, |c| c.len());
    let mut j = vec![0.0; rows * k];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            j[r * k + c] = *v;
        }
    }
    Ok((rows, j))
}

/// `J^T J` and `J^T r`.
fn normal_equations(rows: usize, k: usize, j: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; k * k];
    let mut g = vec![0.0; k];
    for row in 0..rows {
        let jr = &j[row * k..(row + 1) * k];
        for p in 0..k {
            g[p] += jr[p] * r[row];
            for q in 0..k {
                a[p * k + q] += jr[p] * jr[q];
            }
        }
    }
    (a, g)
}

/// Levenberg-Marquardt on a sum of squared residuals.
pub(crate) fn levenberg_marquardt(
    res: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    max_iterations: usize,
) -> Result<Minimum> {
    let k = x0.len();
    let mut x = x0.to_vec();
    let mut r = res(&x)?;
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    'outer: while iterations < max_iterations {
        iterations += 1;
        if cost < 1e-28 {
            converged = true;
            break;
        }
        let (rows, j) = jacobian(res, &x, 1e-6)?;
        let (a, g) = normal_equations(rows, k, &j, &r);
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-13 * (1.0 + cost) {
            converged = true;
            break;
        }
        loop {
            let mut damped = a.clone();
            for p in 0..k {
                damped[p * k + p] += lambda * a[p * k + p].max(1e-12);
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let step = solve(k, damped, rhs);
            if let Some(step) = step {
                let cand: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
                let rc = res(&cand)?;
                let cc = sum_sq(&rc);
                if cc < cost {
                    let gain = cost - cc;
                    let step_norm = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    x = cand;
                    r = rc;
                    cost = cc;
                    lambda = (lambda / 3.0).max(1e-12);
                    if gain <= 1e-15 * cost || step_norm < 1e-13 {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                // no descent step left at this point
                converged = true;
                break 'outer;
            }
        }
    }
    Ok(Minimum {
        x,
        value: cost,
        iterations,
        converged,
    })
}

/// Gaussian elimination with partial pivoting on a row-major `k x k` system.
pub(crate) fn solve(k: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))?;
        if a[piv * k + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            b.swap(piv, col);
        }
        for row in col + 1..k {
            let factor = a[row * k + col] / a[col * k + col];
            for c in col..k {
                a[row * k + c] -= factor * a[col * k + c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = b[row];
        for c in row + 1..k {
            acc -= a[row * k + c] * x[c];
        }
        x[row] = acc / a[row * k + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub(crate) fn symmetric_eigenvalues(k: usize, mut a: Vec<f64>) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..k)
            .flat_map(|p| (0..k).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * k + q] * a[p * k + q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[p * k + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * k + q] - a[p * k + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let aip = a[i * k + p];
                    let aiq = a[i * k + q];
                    a[i * k + p] = c * aip - s * aiq;
                    a[i * k + q] = s * aip + c * aiq;
                }
                for i in 0..k {
                    let api = a[p * k + i];
                    let aqi = a[q * k + i];
                    a[p * k + i] = c * api - s * aqi;
                    a[q * k + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..k).map(|i| a[i * k + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Singular values of a row-major `rows x k` matrix, descending.
pub(crate) fn singular_values(rows: usize, k: usize, j: &[f64]) -> Vec<f64> {
    let zeros = vec![0.0; rows];
    let (a, _) = normal_equations(rows, k, j, &zeros);
    let mut sv: Vec<f64> = symmetric_eigenvalues(k, a)
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .collect();
    sv.reverse();
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<f64> {
        Ok(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2))
    }

    #[test]
    fn simplex_finds_rosenbrock_minimum() {
        let s = SimplexSettings {
            initial_step: 0.5,
            max_iterations: 5000,
            f_abs_tol: 1e-16,
            f_rel_tol: 1e-12,
            x_tol: 1e-9,
        };
        let m = nelder_mead(&rosenbrock, &[-1.2, 1.0], &s).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn lm_solves_rosenbrock_residuals() {
        let res = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let m = levenberg_marquardt(&res, &[-1.2, 1.0], 200).unwrap();
        assert!(m.converged);
        assert!(m.value < 1e-20);
    }

    #[test]
    fn linear_solve_and_eigenvalues() {
        let x = solve(2, vec![0.0, 2.0, 3.0, 1.0], vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert!(solve(2, vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]).is_none());
        let ev = symmetric_eigenvalues(3, vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        for (a, b) in ev.iter().zip([1.0, 3.0, 5.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let sv = singular_values(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
    }
}
