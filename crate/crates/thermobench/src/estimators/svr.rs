//! Epsilon-insensitive support vector regression with an RBF kernel,
//! trained by sequential minimal optimization on the 2n-variable dual
//! with maximal-violating-pair working-set selection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width. `None` uses 1 / (n_features * Var(X)) over all entries.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-4,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub feature_names: Vec<String>,
    pub gamma: f64,
    /// Support vectors, row-major (n_support x n_features).
    pub support_x: Vec<f64>,
    /// Dual coefficients alpha - alpha*, one per support vector.
    pub coeffs: Vec<f64>,
    pub bias: f64,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

fn default_gamma(x: &DMatrix<f64>) -> f64 {
    let n = (x.nrows() * x.ncols()) as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

/// SMO over theta in [0, C]^{2n}: index t < n carries sign +1 (alpha),
/// t >= n carries sign -1 (alpha*). Objective (minimized):
///   0.5 theta' Q theta + p' theta,
/// Q[s][t] = z_s z_t K(s mod n, t mod n), p = [eps - y; eps + y],
/// subject to z' theta = 0.
pub fn fit_svr(m: &FeatureMatrix, params: &SvrParams) -> Result<SvrModel> {
    if params.c <= 0.0 {
        return Err(Error::config("C must be > 0"));
    }
    if params.epsilon < 0.0 {
        return Err(Error::config("epsilon must be >= 0"));
    }
    let y = m.target_ref()?;
    let n = m.n_rows();
    if n == 0 {
        return Err(Error::data("cannot fit on empty matrix"));
    }
    let d = m.n_features();
    let gamma = match params.gamma {
        Some(g) if g > 0.0 => g,
        Some(_) => return Err(Error::config("gamma must be > 0")),
        None => default_gamma(&m.values),
    };
    let c = params.c;

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..d).map(|j| m.values[(i, j)]).collect())
        .collect();
    // Cached kernel matrix (n x n, symmetric).
    let mut kern = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(gamma, &rows[i], &rows[j]);
            kern[i * n + j] = v;
            kern[j * n + i] = v;
        }
    }
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };

    let mut theta = vec![0.0f64; 2 * n];
    // At theta = 0 the gradient equals p.
    let mut grad: Vec<f64> = (0..2 * n)
        .map(|t| {
            if t < n {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - n]
            }
        })
        .collect();

    let mut converged = false;
    let mut violation = f64::INFINITY;
    for _ in 0..params.max_iter {
        // Maximal violating pair: i maximizes -z g over I_up, j minimizes
        // -z g over I_low.
        let mut i_best: Option<(usize, f64)> = None;
        let mut j_best: Option<(usize, f64)> = None;
        for t in 0..2 * n {
            let z = sign(t);
            let score = -z * grad[t];
            let in_up = if z > 0.0 { theta[t] < c } else { theta[t] > 0.0 };
            let in_low = if z > 0.0 { theta[t] > 0.0 } else { theta[t] < c };
            if in_up && i_best.map_or(true, |(_, s)| score > s) {
                i_best = Some((t, score));
            }
            if in_low && j_best.map_or(true, |(_, s)| score < s) {
                j_best = Some((t, score));
            }
        }
        let ((i, m_up), (j, m_low)) = match (i_best, j_best) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                converged = true;
                break;
            }
        };
        violation = m_up - m_low;
        if violation <= params.tol {
            converged = true;
            break;
        }

        let (zi, zj) = (sign(i), sign(j));
        let (ri, rj) = (i % n, j % n);
        let a = (kern[ri * n + ri] + kern[rj * n + rj] - 2.0 * kern[ri * n + rj]).max(1e-12);
        // Direction d_i = z_i * lambda, d_j = -z_j * lambda; lambda > 0.
        let mut lambda = (m_up - m_low) / a;
        let cap_i = if zi > 0.0 { c - theta[i] } else { theta[i] };
        let cap_j = if zj > 0.0 { theta[j] } else { c - theta[j] };
        lambda = lambda.min(cap_i).min(cap_j);
        if lambda <= 0.0 {
            converged = true;
            break;
        }
        theta[i] += zi * lambda;
        theta[j] -= zj * lambda;

        let (di, dj) = (zi * lambda, -zj * lambda);
        for t in 0..2 * n {
            let zt = sign(t);
            let rt = t % n;
            grad[t] += zt * (zi * kern[rt * n + ri] * di + zj * kern[rt * n + rj] * dj);
        }
    }

    if !converged {
        return Err(Error::numerical(format!(
            "SVR did not converge within {} iterations (KKT violation {:.3e})",
            params.max_iter, violation
        )));
    }

    // Bias from the final violating-pair bounds: any value between the
    // up and low scores is KKT-consistent; take the midpoint.
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..2 * n {
        let z = sign(t);
        let score = -z * grad[t];
        if theta[t] > 0.0 && theta[t] < c {
            free_sum += score;
            free_count += 1;
        }
        let in_up = if z > 0.0 { theta[t] < c } else { theta[t] > 0.0 };
        let in_low = if z > 0.0 { theta[t] > 0.0 } else { theta[t] < c };
        if in_up {
            up = up.max(score);
        }
        if in_low {
            low = low.min(score);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (up + low) / 2.0
    };

    let mut support_x = Vec::new();
    let mut coeffs = Vec::new();
    for t in 0..n {
        let coef = theta[t] - theta[t + n];
        if coef != 0.0 {
            support_x.extend_from_slice(&rows[t]);
            coeffs.push(coef);
        }
    }
    Ok(SvrModel {
        feature_names: m.names.clone(),
        gamma,
        support_x,
        coeffs,
        bias,
    })
}

impl SvrModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let d = self.feature_names.len();
        let mut row = vec![0.0f64; d];
        (0..x.nrows())
            .map(|i| {
                for j in 0..d {
                    row[j] = x[(i, j)];
                }
                let mut acc = self.bias;
                for (s, coef) in self.coeffs.iter().enumerate() {
                    acc += coef * rbf(self.gamma, &row, &self.support_x[s * d..(s + 1) * d]);
                }
                acc
            })
            .collect()
    }
}
