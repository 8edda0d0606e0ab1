//! Reference computations used to check the scaled recursions.
//!
//! Nothing here is used on the tracking path. [`enumerate_likelihood`] sums
//! over every hidden path explicitly; [`matrix_form_alpha`] and
//! [`matrix_form_beta`] evaluate the unscaled forward and backward variables
//! as products of dense matrices with diagonal observation matrices.

use super::{
    check_dims, HmmError, InitialDistribution, ObservationSequence, Result, TransitionMatrix,
};

/// Largest number of paths [`enumerate_likelihood`] will visit.
pub const MAX_PATHS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub likelihood: f64,
    /// `posterior[t][i] = P(x_t = i | y)`.
    pub posterior: Vec<Vec<f64>>,
    /// `joint[t - 1][i * n + j] = P(x_{t-1} = i, x_t = j | y)` for `t >= 1`.
    pub joint: Vec<Vec<f64>>,
}

/// Exact likelihood and posteriors by summing over all `n^T` state paths.
pub fn enumerate_likelihood(
    mu: &InitialDistribution,
    a: &TransitionMatrix,
    obs: &ObservationSequence,
) -> Result<Enumeration> {
    let n = check_dims(mu, a, obs)?;
    let len = obs.len();
    let paths = (n as f64).powi(len as i32);
    if paths > MAX_PATHS as f64 {
        return Err(HmmError::TooLarge {
            paths,
            limit: MAX_PATHS,
        });
    }

    let mut posterior = vec![vec![0.0; n]; len];
    let mut joint = vec![vec![0.0; n * n]; len.saturating_sub(1)];
    let mut likelihood = 0.0;
    let mut path = vec![0usize; len];
    loop {
        let mut w = mu.as_slice()[path[0]] * obs.get(0).weight(path[0]);
        for t in 1..len {
            if w == 0.0 {
                break;
            }
            w *= a.get(path[t - 1], path[t]) * obs.get(t).weight(path[t]);
        }
        if w != 0.0 {
            likelihood += w;
            for t in 0..len {
                posterior[t][path[t]] += w;
                if t > 0 {
                    joint[t - 1][path[t - 1] * n + path[t]] += w;
                }
            }
        }
        // Odometer increment, last position fastest.
        let mut k = len;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
        }
        if k == 0 && path[0] == 0 {
            break;
        }
    }

    if likelihood > 0.0 {
        for row in posterior.iter_mut().chain(joint.iter_mut()) {
            row.iter_mut().for_each(|v| *v /= likelihood);
        }
    }
    Ok(Enumeration {
        likelihood,
        posterior,
        joint,
    })
}

type Dense = Vec<Vec<f64>>;

fn diag(b: &[f64]) -> Dense {
    let n = b.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = b[i];
    }
    m
}

fn row_times(v: &[f64], m: &Dense) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|j| (0..n).map(|i| v[i] * m[i][j]).sum())
        .collect()
}

fn times_col(m: &Dense, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Unscaled `alpha_t = mu B(y_0) A B(y_1) ... A B(y_t)` for every `t`.
pub fn matrix_form_alpha(
    mu: &InitialDistribution,
    a: &TransitionMatrix,
    obs: &ObservationSequence,
) -> Result<Vec<Vec<f64>>> {
    check_dims(mu, a, obs)?;
    let dense = a.rows();
    let mut out = Vec::with_capacity(obs.len());
    let mut v = row_times(mu.as_slice(), &diag(obs.get(0).weights()));
    out.push(v.clone());
    for t in 1..obs.len() {
        v = row_times(&row_times(&v, &dense), &diag(obs.get(t).weights()));
        out.push(v.clone());
    }
    Ok(out)
}

/// Unscaled `beta_t = A B(y_{t+1}) ... A B(y_{T-1}) 1` for every `t`.
pub fn matrix_form_beta(a: &TransitionMatrix, obs: &ObservationSequence) -> Result<Vec<Vec<f64>>> {
    let n = a.n();
    if obs.n_states() != n {
        return Err(HmmError::DimensionMismatch {
            what: "observation vector",
            expected: n,
            found: obs.n_states(),
        });
    }
    let dense = a.rows();
    let len = obs.len();
    let mut out = vec![vec![1.0; n]; len];
    for t in (0..len - 1).rev() {
        let weighted = times_col(&diag(obs.get(t + 1).weights()), &out[t + 1]);
        out[t] = times_col(&dense, &weighted);
    }
    Ok(out)
}
