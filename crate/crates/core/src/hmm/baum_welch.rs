use super::forward_backward::{accumulate, backward_sparse, forward_sparse};
use super::{HmmError, InitialDistribution, ObservationSequence, Result, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaumWelchOptions {
    pub max_iters: usize,
    /// Stop once the largest entrywise change of the matrix drops below this.
    pub tol: f64,
    /// Added to every in-support entry of re-estimated rows before renormalising.
    pub smoothing_eps: f64,
}

impl Default for BaumWelchOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            smoothing_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaumWelchResult {
    pub a_hat: TransitionMatrix,
    /// Pooled log-likelihood of every iterate, starting with `a0` and ending
    /// with `a_hat`; its length is `iters + 1`.
    pub loglik_trace: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
}

struct EStep {
    loglik: f64,
    xi_sum: Vec<f64>,
}

/// Pools expected transition counts over every sequence.
fn expectation(
    sequences: &[ObservationSequence],
    mu: &InitialDistribution,
    a: &TransitionMatrix,
) -> Result<EStep> {
    let n = a.n();
    let rows = a.sparse_rows();
    let mut xi_sum = vec![0.0; n * n];
    let mut loglik = 0.0;
    for (k, obs) in sequences.iter().enumerate() {
        let fwd = forward_sparse(mu, &rows, obs, n).map_err(|e| match e {
            HmmError::AllZeroStep { step } => {
                HmmError::InconsistentObservations { sequence: k, step }
            }
            other => other,
        })?;
        let bwd = backward_sparse(&rows, obs, &fwd);
        accumulate(&fwd, &bwd, &rows, obs, &mut xi_sum)?;
        loglik += fwd.log_likelihood();
    }
    Ok(EStep { loglik, xi_sum })
}

/// Re-estimates `a` from pooled expected counts. Rows whose state is never
/// left in expectation keep their current values.
fn maximization(
    current: &TransitionMatrix,
    support: &[bool],
    xi_sum: &[f64],
    eps: f64,
) -> TransitionMatrix {
    let n = current.n();
    let mut data = current.as_slice().to_vec();
    for i in 0..n {
        let counts = &xi_sum[i * n..(i + 1) * n];
        let denom: f64 = counts.iter().sum();
        if denom.is_nan() || denom <= 0.0 {
            continue;
        }
        let row = &mut data[i * n..(i + 1) * n];
        let mask = &support[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] = if mask[j] { counts[j] / denom } else { 0.0 };
        }
        if eps > 0.0 {
            let mut total = 0.0;
            for j in 0..n {
                if mask[j] {
                    row[j] += eps;
                }
                total += row[j];
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    TransitionMatrix::from_parts_unchecked(n, data, current.support().map(<[bool]>::to_vec))
}

/// Multi-sequence Baum-Welch for the transition matrix only.
///
/// Expected transition counts from all sequences are summed before the
/// maximisation step, so each sequence is weighted by its length. `mu` and
/// the observation weights are held fixed.
pub fn baum_welch(
    sequences: &[ObservationSequence],
    mu: &InitialDistribution,
    a0: &TransitionMatrix,
    opts: &BaumWelchOptions,
) -> Result<BaumWelchResult> {
    if sequences.is_empty() {
        return Err(HmmError::NoSequences);
    }
    let n = a0.n();
    if mu.len() != n {
        return Err(HmmError::DimensionMismatch {
            what: "initial distribution",
            expected: n,
            found: mu.len(),
        });
    }
    if let Some(bad) = sequences.iter().find(|s| s.n_states() != n) {
        return Err(HmmError::DimensionMismatch {
            what: "observation vector",
            expected: n,
            found: bad.n_states(),
        });
    }
    let support = a0.effective_support();

    let mut current = a0.clone();
    let mut trace = Vec::with_capacity(opts.max_iters + 1);
    let mut iters = 0;
    let mut converged = false;
    let mut step = expectation(sequences, mu, &current)?;
    while iters < opts.max_iters {
        trace.push(step.loglik);
        let next = maximization(&current, &support, &step.xi_sum, opts.smoothing_eps);
        let delta = next.max_abs_diff(&current);
        current = next;
        iters += 1;
        step = expectation(sequences, mu, &current)?;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    trace.push(step.loglik);
    log::debug!(
        "baum-welch: {} sequences, {iters} iterations, loglik {:.6} -> {:.6}",
        sequences.len(),
        trace[0],
        step.loglik
    );

    Ok(BaumWelchResult {
        a_hat: current,
        loglik_trace: trace,
        iters,
        converged,
    })
}
