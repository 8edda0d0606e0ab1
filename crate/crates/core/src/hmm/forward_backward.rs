use super::{
    check_dims, BeliefVector, HmmError, InitialDistribution, ObservationSequence, Result,
    TransitionMatrix,
};

/// Scaled forward variables.
///
/// Row `t` of `scaled_alpha` is `alpha_t` divided by `c_0 * ... * c_t`, where
/// `c_t` is the step normaliser, so each row sums to one and
/// `log P(y_0..y_{T-1}) = sum(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    n: usize,
    scaled_alpha: Vec<f64>,
    scale: Vec<f64>,
    log_scale: Vec<f64>,
}

impl ForwardPass {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.log_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_scale.is_empty()
    }

    pub fn alpha(&self, t: usize) -> &[f64] {
        &self.scaled_alpha[t * self.n..(t + 1) * self.n]
    }

    pub fn log_scale(&self) -> &[f64] {
        &self.log_scale
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_scale.iter().sum()
    }

    /// Step normaliser `c_t` (not its log).
    fn scale(&self, t: usize) -> f64 {
        self.scale[t]
    }
}

/// Scaled backward variables sharing the forward pass's normalisers.
///
/// `scaled_beta[t] = beta_t / (c_{t+1} * ... * c_{T-1})`, so that
/// `gamma_t = alpha_hat_t * beta_hat_t` with no further division.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardPass {
    n: usize,
    scaled_beta: Vec<f64>,
}

impl BackwardPass {
    pub fn len(&self) -> usize {
        self.scaled_beta.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.scaled_beta.is_empty()
    }

    pub fn beta(&self, t: usize) -> &[f64] {
        &self.scaled_beta[t * self.n..(t + 1) * self.n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedStats {
    n: usize,
    gamma: Vec<f64>,
    xi_sum: Vec<f64>,
}

impl SmoothedStats {
    pub fn n_states(&self) -> usize {
        self.n
    }

    /// `P(x_t = i | y)` for every state.
    pub fn gamma(&self, t: usize) -> &[f64] {
        &self.gamma[t * self.n..(t + 1) * self.n]
    }

    /// Expected number of `i -> j` transitions over the whole sequence.
    pub fn xi_sum(&self, i: usize, j: usize) -> f64 {
        self.xi_sum[i * self.n + j]
    }

    pub fn xi_sum_matrix(&self) -> &[f64] {
        &self.xi_sum
    }
}

pub fn forward(
    mu: &InitialDistribution,
    a: &TransitionMatrix,
    obs: &ObservationSequence,
) -> Result<ForwardPass> {
    let n = check_dims(mu, a, obs)?;
    let rows = a.sparse_rows();
    forward_sparse(mu, &rows, obs, n)
}

pub(crate) fn forward_sparse(
    mu: &InitialDistribution,
    rows: &[Vec<(usize, f64)>],
    obs: &ObservationSequence,
    n: usize,
) -> Result<ForwardPass> {
    let len = obs.len();
    let mut scaled_alpha = vec![0.0; len * n];
    let mut scale = Vec::with_capacity(len);

    let b0 = obs.get(0);
    for (i, slot) in scaled_alpha[..n].iter_mut().enumerate() {
        *slot = mu.as_slice()[i] * b0.weight(i);
    }
    scale.push(normalize(&mut scaled_alpha[..n]).ok_or(HmmError::AllZeroStep { step: 0 })?);

    for t in 1..len {
        let (done, rest) = scaled_alpha.split_at_mut(t * n);
        let prev = &done[(t - 1) * n..];
        let next = &mut rest[..n];
        propagate(prev, rows, next);
        let b = obs.get(t);
        for (j, v) in next.iter_mut().enumerate() {
            *v *= b.weight(j);
        }
        scale.push(normalize(next).ok_or(HmmError::AllZeroStep { step: t })?);
    }

    Ok(ForwardPass {
        n,
        scaled_alpha,
        log_scale: scale.iter().map(|c| c.ln()).collect(),
        scale,
    })
}

/// `next = prev^T A` over the sparse rows of `A`.
pub(crate) fn propagate(prev: &[f64], rows: &[Vec<(usize, f64)>], next: &mut [f64]) {
    next.iter_mut().for_each(|v| *v = 0.0);
    for (i, &p) in prev.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for &(j, aij) in &rows[i] {
            next[j] += p * aij;
        }
    }
}

/// Divides by the sum and returns it, or `None` for an all-zero vector.
pub(crate) fn normalize(v: &mut [f64]) -> Option<f64> {
    let s: f64 = v.iter().sum();
    if !s.is_finite() || s <= 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= s);
    Some(s)
}

pub fn backward(
    a: &TransitionMatrix,
    obs: &ObservationSequence,
    fwd: &ForwardPass,
) -> Result<BackwardPass> {
    let n = a.n();
    if obs.n_states() != n || fwd.n_states() != n {
        return Err(HmmError::DimensionMismatch {
            what: "backward inputs",
            expected: n,
            found: if obs.n_states() != n {
                obs.n_states()
            } else {
                fwd.n_states()
            },
        });
    }
    if fwd.len() != obs.len() {
        return Err(HmmError::DimensionMismatch {
            what: "forward pass length",
            expected: obs.len(),
            found: fwd.len(),
        });
    }
    Ok(backward_sparse(&a.sparse_rows(), obs, fwd))
}

pub(crate) fn backward_sparse(
    rows: &[Vec<(usize, f64)>],
    obs: &ObservationSequence,
    fwd: &ForwardPass,
) -> BackwardPass {
    let n = fwd.n;
    let len = obs.len();
    let mut scaled_beta = vec![0.0; len * n];
    scaled_beta[(len - 1) * n..]
        .iter_mut()
        .for_each(|v| *v = 1.0);

    let mut weighted = vec![0.0; n];
    for t in (0..len - 1).rev() {
        let (head, tail) = scaled_beta.split_at_mut((t + 1) * n);
        let next = &tail[..n];
        let cur = &mut head[t * n..];
        let b = obs.get(t + 1);
        let c = fwd.scale(t + 1);
        for (j, w) in weighted.iter_mut().enumerate() {
            *w = b.weight(j) * next[j];
        }
        for (i, slot) in cur.iter_mut().enumerate() {
            let s: f64 = rows[i].iter().map(|&(j, aij)| aij * weighted[j]).sum();
            *slot = s / c;
        }
    }
    BackwardPass { n, scaled_beta }
}

/// Filtered belief `P(x_t | y_0..y_t)` at step `t` (0-based).
pub fn filtered_posterior(fwd: &ForwardPass, t: usize) -> Result<BeliefVector> {
    if t >= fwd.len() {
        return Err(HmmError::TimeOutOfRange { t, len: fwd.len() });
    }
    BeliefVector::from_unnormalized(fwd.alpha(t).to_vec())
        .ok_or(HmmError::DegenerateBelief { step: t })
}

pub fn smoothed_stats(
    fwd: &ForwardPass,
    bwd: &BackwardPass,
    a: &TransitionMatrix,
    obs: &ObservationSequence,
) -> Result<SmoothedStats> {
    let n = a.n();
    if fwd.n_states() != n || bwd.n != n || obs.n_states() != n {
        return Err(HmmError::DimensionMismatch {
            what: "smoothing inputs",
            expected: n,
            found: fwd.n_states(),
        });
    }
    if fwd.len() != obs.len() || bwd.len() != obs.len() {
        return Err(HmmError::DimensionMismatch {
            what: "pass length",
            expected: obs.len(),
            found: fwd.len().min(bwd.len()),
        });
    }
    let rows = a.sparse_rows();
    let mut xi_sum = vec![0.0; n * n];
    let gamma = accumulate(fwd, bwd, &rows, obs, &mut xi_sum)?;
    Ok(SmoothedStats { n, gamma, xi_sum })
}

/// Fills `xi_sum` with `sum_{t>=1} xi_t(i, j)` and returns the gamma rows.
pub(crate) fn accumulate(
    fwd: &ForwardPass,
    bwd: &BackwardPass,
    rows: &[Vec<(usize, f64)>],
    obs: &ObservationSequence,
    xi_sum: &mut [f64],
) -> Result<Vec<f64>> {
    let n = fwd.n;
    let len = obs.len();
    let mut gamma = vec![0.0; len * n];
    for t in 0..len {
        let row = &mut gamma[t * n..(t + 1) * n];
        for (i, g) in row.iter_mut().enumerate() {
            *g = fwd.alpha(t)[i] * bwd.beta(t)[i];
        }
        normalize(row).ok_or(HmmError::DegenerateBelief { step: t })?;
    }

    let mut weighted = vec![0.0; n];
    for t in 1..len {
        let alpha = fwd.alpha(t - 1);
        let beta = bwd.beta(t);
        let b = obs.get(t);
        let c = fwd.scale(t);
        for (j, w) in weighted.iter_mut().enumerate() {
            *w = b.weight(j) * beta[j] / c;
        }
        for (i, &ai) in alpha.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for &(j, aij) in &rows[i] {
                xi_sum[i * n + j] += ai * aij * weighted[j];
            }
        }
    }
    Ok(gamma)
}

/// Joint posterior `P(x_{t-1} = i, x_t = j | y)` for one step `t >= 1`,
/// as a dense row-major `n x n` block.
pub fn pair_posterior(
    fwd: &ForwardPass,
    bwd: &BackwardPass,
    a: &TransitionMatrix,
    obs: &ObservationSequence,
    t: usize,
) -> Result<Vec<f64>> {
    if t == 0 || t >= obs.len() {
        return Err(HmmError::TimeOutOfRange { t, len: obs.len() });
    }
    let n = a.n();
    let alpha = fwd.alpha(t - 1);
    let beta = bwd.beta(t);
    let b = obs.get(t);
    let c = fwd.scale(t);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = alpha[i] * a.get(i, j) * b.weight(j) * beta[j] / c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::ObservationVector;

    fn seq(rows: &[&[f64]]) -> ObservationSequence {
        ObservationSequence::new(
            rows.iter()
                .map(|r| {
                    ObservationVector::from_weights(r.to_vec(), crate::hmm::ObservationKind::Graded)
                        .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_state_identity() {
        let mu = InitialDistribution::new(vec![1.0]).unwrap();
        let a = TransitionMatrix::identity(1).unwrap();
        let obs = seq(&[&[1.0], &[1.0], &[1.0]]);
        let f = forward(&mu, &a, &obs).unwrap();
        for t in 0..3 {
            assert_eq!(f.alpha(t), &[1.0]);
        }
        assert_eq!(f.log_likelihood(), 0.0);
        let b = backward(&a, &obs, &f).unwrap();
        for t in 0..3 {
            assert_eq!(b.beta(t), &[1.0]);
        }
        let s = smoothed_stats(&f, &b, &a, &obs).unwrap();
        assert_eq!(s.gamma(2), &[1.0]);
        assert_eq!(s.xi_sum(0, 0), 2.0);
    }

    #[test]
    fn point_mass_preserved_under_identity() {
        let mu = InitialDistribution::new(vec![1.0, 0.0]).unwrap();
        let a = TransitionMatrix::identity(2).unwrap();
        let obs = seq(&[&[1.0, 1.0][..]; 4]);
        let f = forward(&mu, &a, &obs).unwrap();
        for t in 0..4 {
            assert_eq!(f.alpha(t), &[1.0, 0.0]);
        }
        assert_eq!(f.log_likelihood(), 0.0);
    }

    #[test]
    fn last_beta_row_is_ones() {
        let mu = InitialDistribution::uniform(3).unwrap();
        let a = TransitionMatrix::from_rows(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.1, 0.8, 0.1],
            vec![0.6, 0.2, 0.2],
        ])
        .unwrap();
        let obs = seq(&[&[1.0, 0.0, 1.0], &[0.5, 1.0, 1.0], &[1.0, 1.0, 0.0]]);
        let f = forward(&mu, &a, &obs).unwrap();
        let b = backward(&a, &obs, &f).unwrap();
        assert_eq!(b.beta(2), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn all_zero_step_is_reported() {
        let mu = InitialDistribution::new(vec![1.0, 0.0]).unwrap();
        let a = TransitionMatrix::identity(2).unwrap();
        let obs = seq(&[&[1.0, 1.0], &[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(
            forward(&mu, &a, &obs),
            Err(HmmError::AllZeroStep { step: 2 })
        );
    }

    #[test]
    fn uniform_symmetry() {
        let mu = InitialDistribution::uniform(3).unwrap();
        let a = TransitionMatrix::new(3, vec![1.0 / 3.0; 9]).unwrap();
        let obs = seq(&[&[1.0, 1.0, 1.0]]);
        let f = forward(&mu, &a, &obs).unwrap();
        let p = filtered_posterior(&f, 0).unwrap();
        for &v in p.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn observed_empty_state_has_zero_posterior() {
        let mu = InitialDistribution::uniform(3).unwrap();
        let a = TransitionMatrix::new(3, vec![1.0 / 3.0; 9]).unwrap();
        let obs = seq(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 0.0]]);
        let f = forward(&mu, &a, &obs).unwrap();
        let p = filtered_posterior(&f, 1).unwrap();
        assert_eq!(p.as_slice()[2], 0.0);
        assert!(filtered_posterior(&f, 2).is_err());
    }

    #[test]
    fn deterministic_chain_gamma_is_one_hot() {
        // 0 -> 1 -> 2 -> 0 cycle with sightings only at the first step.
        let mu = InitialDistribution::point_mass(3, 0).unwrap();
        let a = TransitionMatrix::from_rows(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let obs = seq(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0],
        ]);
        let f = forward(&mu, &a, &obs).unwrap();
        let b = backward(&a, &obs, &f).unwrap();
        let s = smoothed_stats(&f, &b, &a, &obs).unwrap();
        for (t, truth) in [0, 1, 2, 0].into_iter().enumerate() {
            for i in 0..3 {
                assert_eq!(s.gamma(t)[i], if i == truth { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(s.xi_sum(0, 1), 1.0);
        assert_eq!(s.xi_sum(1, 2), 1.0);
        assert_eq!(s.xi_sum(2, 0), 1.0);
    }
}
