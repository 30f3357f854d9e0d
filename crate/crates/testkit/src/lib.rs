//! Reference implementations used as oracles by the test suites.
//!
//! Everything here is deliberately coded from scratch with different
//! algorithms than the production crate: Gauss-Jordan elimination instead of
//! Cholesky, exhaustive active-set enumeration and accelerated projected
//! gradient instead of coordinate descent. Agreement between the two code
//! paths is the evidence the tests rely on.

use gbtwin_core::{LabeledDataset, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Solve `A X = B` by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` when a pivot underflows (singular system).
pub fn gauss_jordan_solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    if n == 0 {
        return Some(vec![]);
    }
    let m = b[0].len();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend_from_slice(&b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap())?;
        if aug[pivot_row][col].abs() < 1e-12 {
            return None;
        }
        aug.swap(col, pivot_row);
        let pivot = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[row][col];
            if factor != 0.0 {
                for k in 0..n + m {
                    aug[row][k] -= factor * aug[col][k];
                }
            }
        }
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Invert a square matrix by Gauss-Jordan elimination.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let identity: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    gauss_jordan_solve(a, &identity)
}

fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Objective of the box QP: maximize `-1/2 x'Mx + c'x` over `0 <= x <= u`.
pub fn box_qp_objective(m: &[Vec<f64>], c: &[f64], x: &[f64]) -> f64 {
    -0.5 * dot(x, &matvec(m, x)) + dot(c, x)
}

/// Exhaustive active-set solver for the box QP.
///
/// Every coordinate is assigned one of {lower, upper, free}; for each of the
/// 3^n assignments the free subsystem is solved by Gauss-Jordan and the KKT
/// sign conditions are checked. The feasible KKT point with the best
/// objective is returned. Only practical for small n.
pub fn active_set_box_qp(m: &[Vec<f64>], c: &[f64], upper: &[f64]) -> Option<Vec<f64>> {
    let n = c.len();
    let slack = 1e-9;
    let mut best: Option<(f64, Vec<f64>)> = None;
    // state per coordinate: 0 = at lower bound, 1 = at upper bound, 2 = free
    let mut state = vec![0u8; n];
    'outer: loop {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut x = vec![0.0; n];
        for i in 0..n {
            if state[i] == 1 {
                x[i] = upper[i];
            }
        }
        let feasible = if free.is_empty() {
            true
        } else {
            // M_FF x_F = c_F - M_FB x_B for the bound part x_B
            let a: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| m[i][j]).collect())
                .collect();
            let rhs: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| {
                    let bound_term: f64 = (0..n)
                        .filter(|&j| state[j] != 2)
                        .map(|j| m[i][j] * x[j])
                        .sum();
                    vec![c[i] - bound_term]
                })
                .collect();
            match gauss_jordan_solve(&a, &rhs) {
                Some(sol) => {
                    for (&i, s) in free.iter().zip(&sol) {
                        x[i] = s[0];
                    }
                    free.iter()
                        .all(|&i| x[i] >= -slack && x[i] <= upper[i] + slack)
                }
                None => false,
            }
        };
        if feasible {
            let grad: Vec<f64> = {
                let mx = matvec(m, &x);
                (0..n).map(|i| c[i] - mx[i]).collect()
            };
            let kkt_ok = (0..n).all(|i| match state[i] {
                0 => grad[i] <= slack,
                1 => grad[i] >= -slack,
                _ => grad[i].abs() <= 1e-7,
            });
            if kkt_ok {
                for v in x.iter_mut() {
                    *v = v.clamp(0.0, f64::INFINITY);
                }
                for i in 0..n {
                    x[i] = x[i].min(upper[i]);
                }
                let obj = box_qp_objective(m, c, &x);
                if best.as_ref().map(|(o, _)| obj > *o).unwrap_or(true) {
                    best = Some((obj, x));
                }
            }
        }
        // odometer increment over the 3^n states
        for i in 0..n {
            state[i] += 1;
            if state[i] < 3 {
                continue 'outer;
            }
            state[i] = 0;
        }
        break;
    }
    best.map(|(_, x)| x)
}

fn project(x: &mut [f64], upper: &[f64]) {
    for (v, &u) in x.iter_mut().zip(upper) {
        *v = v.clamp(0.0, u);
    }
}

fn pg_residual(m: &[Vec<f64>], c: &[f64], upper: &[f64], x: &[f64]) -> f64 {
    let mx = matvec(m, x);
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let g = c[i] - mx[i];
            (xi - (xi + g).clamp(0.0, upper[i])).abs()
        })
        .fold(0.0, f64::max)
}

/// Accelerated projected gradient (FISTA with function-value restart) for the
/// box QP. Step size 1/L with L the infinity norm of M. Returns the iterate
/// once the projected-gradient residual drops below `tol`, or `None` when the
/// iteration budget runs out.
pub fn projected_gradient_box_qp(
    m: &[Vec<f64>],
    c: &[f64],
    upper: &[f64],
    tol: f64,
    max_iter: usize,
) -> Option<Vec<f64>> {
    let n = c.len();
    if n == 0 {
        return Some(vec![]);
    }
    let l = m
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let step = 1.0 / l;
    let mut x = vec![0.0; n];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut prev_obj = box_qp_objective(m, c, &x);
    for iter in 0..max_iter {
        let my = matvec(m, &y);
        let mut next: Vec<f64> = (0..n).map(|i| y[i] + step * (c[i] - my[i])).collect();
        project(&mut next, upper);
        let obj = box_qp_objective(m, c, &next);
        if obj < prev_obj {
            // restart the momentum when the ascent stalls
            y = x.clone();
            t = 1.0;
            let my = matvec(m, &y);
            next = (0..n).map(|i| y[i] + step * (c[i] - my[i])).collect();
            project(&mut next, upper);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(nv, xv)| nv + momentum * (nv - xv))
            .collect();
        project(&mut y, upper);
        x = next;
        t = t_next;
        prev_obj = box_qp_objective(m, c, &x);
        if iter % 16 == 0 && pg_residual(m, c, upper, &x) <= tol {
            return Some(x);
        }
    }
    if pg_residual(m, c, upper, &x) <= tol {
        Some(x)
    } else {
        None
    }
}

/// One pair of Twin-KSVC planes computed straight from the dual formulas,
/// with raw points as rows and no radii.
pub struct OraclePlanes {
    pub w1: Vec<f64>,
    pub b1: f64,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn twin_ksvc_pair_oracle(
    a_pts: &[Vec<f64>],
    b_pts: &[Vec<f64>],
    c_pts: &[Vec<f64>],
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    epsilon: f64,
    delta: f64,
) -> Option<OraclePlanes> {
    let with_bias = |pts: &[Vec<f64>]| -> Vec<Vec<f64>> {
        pts.iter()
            .map(|p| {
                let mut row = p.clone();
                row.push(1.0);
                row
            })
            .collect()
    };
    let h = with_bias(a_pts);
    let g = with_bias(b_pts);
    let o = with_bias(c_pts);

    let solve_side = |fit: &[Vec<f64>],
                      push: &[Vec<f64>],
                      c_push: f64,
                      c_rest: f64,
                      sign: f64|
     -> Option<(Vec<f64>, f64)> {
        let d = fit[0].len();
        let mut gram = vec![vec![0.0; d]; d];
        for row in fit {
            for i in 0..d {
                for j in 0..d {
                    gram[i][j] += row[i] * row[j];
                }
            }
        }
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] += delta;
        }
        let inv = gauss_jordan_inverse(&gram)?;
        let mut stacked: Vec<Vec<f64>> = push.to_vec();
        stacked.extend(o.iter().cloned());
        let nv = stacked.len();
        let mut m = vec![vec![0.0; nv]; nv];
        for i in 0..nv {
            let ki = matvec(&inv, &stacked[i]);
            for j in 0..nv {
                m[i][j] = dot(&ki, &stacked[j]);
            }
        }
        // force exact symmetry against elimination round-off
        for i in 0..nv {
            for j in 0..i {
                let avg = 0.5 * (m[i][j] + m[j][i]);
                m[i][j] = avg;
                m[j][i] = avg;
            }
        }
        let mut margins = vec![1.0; push.len()];
        margins.extend(vec![1.0 - epsilon; o.len()]);
        let mut upper = vec![c_push; push.len()];
        upper.extend(vec![c_rest; o.len()]);
        let x = projected_gradient_box_qp(&m, &margins, &upper, 1e-12, 8_000_000)?;
        let mut rhs = vec![0.0; d];
        for (row, &xi) in stacked.iter().zip(&x) {
            for (r, &v) in rhs.iter_mut().zip(row) {
                *r += xi * v;
            }
        }
        let mut theta = matvec(&inv, &rhs);
        for t in theta.iter_mut() {
            *t *= sign;
        }
        let b = theta.pop()?;
        Some((theta, b))
    };

    let (w1, b1) = solve_side(&h, &g, c1, c2, -1.0)?;
    let (w2, b2) = solve_side(&g, &h, c3, c4, 1.0)?;
    Some(OraclePlanes { w1, b1, w2, b2 })
}

/// Standard normal sample via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gaussian blob dataset: class k is centered at `centers[k]` with isotropic
/// `spread`, `per_class[k]` points each.
pub fn gaussian_blobs(
    per_class: &[usize],
    centers: &[Vec<f64>],
    spread: f64,
    seed: u64,
) -> LabeledDataset {
    assert_eq!(per_class.len(), centers.len());
    let d = centers[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, (&n, center)) in per_class.iter().zip(centers).enumerate() {
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|j| center[j] + spread * normal(&mut rng)).collect();
            rows.push(row);
            labels.push(k);
        }
    }
    let features = Matrix::from_rows(&rows).expect("blob rows are rectangular");
    LabeledDataset::new(features, labels).expect("blob dataset is well formed")
}

/// Random symmetric positive definite matrix from a Gram construction
/// `R'R / dim + eps I` with `R` having `n + 2` rows of standard normals.
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let rows = n + 2;
    let r: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..n).map(|_| normal(rng)).collect())
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for row in &r {
        for i in 0..n {
            for j in 0..n {
                m[i][j] += row[i] * row[j] / rows as f64;
            }
        }
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += 1e-6;
    }
    m
}
