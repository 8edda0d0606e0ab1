//! Discrete hidden Markov model inference with known observation weights.
//!
//! The model is `(mu, A, b)` where only the transition matrix `A` is ever
//! learned. Observations are supplied directly as per-state weight vectors
//! `b_i(y_t)`, which is how negative-information tracking phrases them: a
//! zero wherever the state was seen to be empty.
//!
//! Long sequences are handled by rescaling every forward step to sum to one
//! and recording the log of the normaliser, so the data log-likelihood is the
//! sum of those logs.
//!
//! Time indices in this module are 0-based: step `t` of a sequence of length
//! `T` lives in `0..T`.

mod baum_welch;
mod forward_backward;
pub mod oracle;

pub use baum_welch::{baum_welch, BaumWelchOptions, BaumWelchResult};
pub use forward_backward::{
    backward, filtered_posterior, forward, pair_posterior, smoothed_stats, BackwardPass,
    ForwardPass, SmoothedStats,
};
pub(crate) use forward_backward::{normalize, propagate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when validating that probability vectors sum to one.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HmmError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("state space must contain at least one state")]
    EmptyStateSpace,
    #[error("observation sequence is empty")]
    EmptySequence,
    #[error("invalid probability {value} at {location}")]
    InvalidProbability { location: String, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) lies outside the support but equals {value}")]
    OutsideSupport { row: usize, col: usize, value: f64 },
    #[error("invalid observation vector: {0}")]
    InvalidObservation(String),
    #[error("forward step {step} has zero probability under the model")]
    AllZeroStep { step: usize },
    #[error("belief at step {step} is degenerate")]
    DegenerateBelief { step: usize },
    #[error("time index {t} out of range for a sequence of length {len}")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("sequence {sequence} has zero likelihood (first impossible step {step})")]
    InconsistentObservations { sequence: usize, step: usize },
    #[error("enumeration over {paths} paths exceeds the limit of {limit}")]
    TooLarge { paths: f64, limit: usize },
    #[error("no observation sequences supplied")]
    NoSequences,
}

pub type Result<T> = std::result::Result<T, HmmError>;

/// Dense, 0-based indexing of the hidden states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    n: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HmmError::EmptyStateSpace);
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(HmmError::EmptyStateSpace);
        }
        Ok(Self {
            n: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels
            .as_ref()
            .and_then(|l| l.get(i))
            .map(String::as_str)
    }
}

fn check_probability(location: impl FnOnce() -> String, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0 + STOCHASTIC_TOL).contains(&value) {
        Ok(())
    } else {
        Err(HmmError::InvalidProbability {
            location: location(),
            value,
        })
    }
}

/// Distribution of the hidden state at the first observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct InitialDistribution(Vec<f64>);

impl InitialDistribution {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(HmmError::EmptyStateSpace);
        }
        for (i, &p) in mu.iter().enumerate() {
            check_probability(|| format!("mu[{i}]"), p)?;
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(HmmError::NotStochastic { row: 0, sum });
        }
        Ok(Self(mu))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HmmError::EmptyStateSpace);
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(HmmError::DimensionMismatch {
                what: "point mass state",
                expected: n,
                found: state,
            });
        }
        let mut mu = vec![0.0; n];
        mu[state] = 1.0;
        Ok(Self(mu))
    }

    /// Equal mass on each listed state (duplicates collapse).
    pub fn uniform_over(n: usize, states: &[usize]) -> Result<Self> {
        let mut mu = vec![0.0; n];
        for &s in states {
            if s >= n {
                return Err(HmmError::DimensionMismatch {
                    what: "initial support state",
                    expected: n,
                    found: s,
                });
            }
            mu[s] = 1.0;
        }
        let k: f64 = mu.iter().sum();
        if k == 0.0 {
            return Err(HmmError::EmptyStateSpace);
        }
        mu.iter_mut().for_each(|p| *p /= k);
        Ok(Self(mu))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for InitialDistribution {
    type Error = HmmError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<InitialDistribution> for Vec<f64> {
    fn from(d: InitialDistribution) -> Self {
        d.0
    }
}

/// Row-stochastic transition matrix `a[i][j] = P(x_t = j | x_{t-1} = i)`.
///
/// When a support mask is present, entries outside it are exactly zero and
/// every learning step keeps them there.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
    support: Option<Vec<bool>>,
}

impl TransitionMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        Self::build(n, data, None)
    }

    pub fn with_support(n: usize, data: Vec<f64>, support: Vec<bool>) -> Result<Self> {
        if support.len() != n * n {
            return Err(HmmError::DimensionMismatch {
                what: "support mask",
                expected: n * n,
                found: support.len(),
            });
        }
        Self::build(n, data, Some(support))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(HmmError::DimensionMismatch {
                    what: "transition row",
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Self::new(n, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(n, data)
    }

    /// Each row uniform over its support entries.
    pub fn uniform_on_support(n: usize, support: Vec<bool>) -> Result<Self> {
        if support.len() != n * n {
            return Err(HmmError::DimensionMismatch {
                what: "support mask",
                expected: n * n,
                found: support.len(),
            });
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            let row = &support[i * n..(i + 1) * n];
            let k = row.iter().filter(|&&s| s).count();
            if k == 0 {
                return Err(HmmError::NotStochastic { row: i, sum: 0.0 });
            }
            for (j, &s) in row.iter().enumerate() {
                if s {
                    data[i * n + j] = 1.0 / k as f64;
                }
            }
        }
        Self::build(n, data, Some(support))
    }

    fn build(n: usize, data: Vec<f64>, support: Option<Vec<bool>>) -> Result<Self> {
        if n == 0 {
            return Err(HmmError::EmptyStateSpace);
        }
        if data.len() != n * n {
            return Err(HmmError::DimensionMismatch {
                what: "transition matrix",
                expected: n * n,
                found: data.len(),
            });
        }
        for i in 0..n {
            let row = &data[i * n..(i + 1) * n];
            for (j, &v) in row.iter().enumerate() {
                check_probability(|| format!("a[{i}][{j}]"), v)?;
                if let Some(mask) = &support {
                    if !mask[i * n + j] && v != 0.0 {
                        return Err(HmmError::OutsideSupport {
                            row: i,
                            col: j,
                            value: v,
                        });
                    }
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(HmmError::NotStochastic { row: i, sum });
            }
        }
        Ok(Self { n, data, support })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn support(&self) -> Option<&[bool]> {
        self.support.as_deref()
    }

    /// Structural support: the mask when present, otherwise the nonzero pattern.
    pub fn in_support(&self, i: usize, j: usize) -> bool {
        match &self.support {
            Some(mask) => mask[i * self.n + j],
            None => self.get(i, j) > 0.0,
        }
    }

    /// Support mask, materialising the nonzero pattern if no mask was given.
    pub fn effective_support(&self) -> Vec<bool> {
        match &self.support {
            Some(mask) => mask.clone(),
            None => self.data.iter().map(|&v| v > 0.0).collect(),
        }
    }

    /// Nonzero entries of each row as `(column, probability)` pairs.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `lambda * self + (1 - lambda) * other`, keeping the union of supports.
    pub fn convex_mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if other.n != self.n {
            return Err(HmmError::DimensionMismatch {
                what: "blended matrix",
                expected: self.n,
                found: other.n,
            });
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(HmmError::InvalidProbability {
                location: "blend lambda".into(),
                value: lambda,
            });
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        if lambda == 0.0 {
            return Ok(other.clone());
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let support = match (&self.support, &other.support) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| *x || *y).collect()),
            _ => None,
        };
        Ok(Self {
            n: self.n,
            data,
            support,
        })
    }

    pub(crate) fn from_parts_unchecked(
        n: usize,
        data: Vec<f64>,
        support: Option<Vec<bool>>,
    ) -> Self {
        Self { n, data, support }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    /// Binary weights: zero on states seen to be empty, one elsewhere.
    NegativeInfo,
    /// The agent was seen: one-hot on its state.
    DirectSighting,
    /// Arbitrary weights in `[0, 1]`, e.g. uncertain sensing.
    Graded,
}

/// Per-state observation weights `b_i(y_t)` for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector {
    b: Vec<f64>,
    kind: ObservationKind,
}

impl ObservationVector {
    /// Negative information: `b_i = 0` for every listed state, `1` otherwise.
    pub fn negative(n: usize, empty: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut b = vec![1.0; n];
        for i in empty {
            if i >= n {
                return Err(HmmError::DimensionMismatch {
                    what: "observed state",
                    expected: n,
                    found: i,
                });
            }
            b[i] = 0.0;
        }
        if !b.contains(&1.0) {
            return Err(HmmError::InvalidObservation(
                "negative observation rules out every state".into(),
            ));
        }
        Ok(Self {
            b,
            kind: ObservationKind::NegativeInfo,
        })
    }

    pub fn sighting(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(HmmError::DimensionMismatch {
                what: "sighted state",
                expected: n,
                found: state,
            });
        }
        let mut b = vec![0.0; n];
        b[state] = 1.0;
        Ok(Self {
            b,
            kind: ObservationKind::DirectSighting,
        })
    }

    /// No information at all.
    pub fn uninformative(n: usize) -> Self {
        Self {
            b: vec![1.0; n],
            kind: ObservationKind::NegativeInfo,
        }
    }

    /// Validates `b` against the requested kind.
    pub fn from_weights(b: Vec<f64>, kind: ObservationKind) -> Result<Self> {
        if b.is_empty() {
            return Err(HmmError::EmptyStateSpace);
        }
        for (i, &v) in b.iter().enumerate() {
            check_probability(|| format!("b[{i}]"), v)?;
        }
        match kind {
            ObservationKind::NegativeInfo => {
                if b.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(HmmError::InvalidObservation(
                        "negative-info weights must be 0 or 1".into(),
                    ));
                }
                if !b.contains(&1.0) {
                    return Err(HmmError::InvalidObservation(
                        "negative observation rules out every state".into(),
                    ));
                }
            }
            ObservationKind::DirectSighting => {
                let ones = b.iter().filter(|&&v| v == 1.0).count();
                let zeros = b.iter().filter(|&&v| v == 0.0).count();
                if ones != 1 || zeros != b.len() - 1 {
                    return Err(HmmError::InvalidObservation(
                        "a sighting must be one-hot".into(),
                    ));
                }
            }
            ObservationKind::Graded => {}
        }
        Ok(Self { b, kind })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn kind(&self) -> ObservationKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.b[i]
    }

    /// States with zero weight.
    pub fn zero_states(&self) -> Vec<usize> {
        self.b
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// The sighted state, for a direct sighting.
    pub fn sighted_state(&self) -> Option<usize> {
        match self.kind {
            ObservationKind::DirectSighting => self.b.iter().position(|&v| v == 1.0),
            _ => None,
        }
    }
}

/// Observations `y_1..y_T` of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    steps: Vec<ObservationVector>,
}

impl ObservationSequence {
    pub fn new(steps: Vec<ObservationVector>) -> Result<Self> {
        let first = steps.first().ok_or(HmmError::EmptySequence)?;
        let n = first.len();
        if let Some(bad) = steps.iter().find(|s| s.len() != n) {
            return Err(HmmError::DimensionMismatch {
                what: "observation vector",
                expected: n,
                found: bad.len(),
            });
        }
        Ok(Self { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.steps[0].len()
    }

    pub fn steps(&self) -> &[ObservationVector] {
        &self.steps
    }

    pub fn get(&self, t: usize) -> &ObservationVector {
        &self.steps[t]
    }

    pub fn push(&mut self, obs: ObservationVector) -> Result<()> {
        if obs.len() != self.n_states() {
            return Err(HmmError::DimensionMismatch {
                what: "observation vector",
                expected: self.n_states(),
                found: obs.len(),
            });
        }
        self.steps.push(obs);
        Ok(())
    }
}

/// Normalised filtered posterior over the states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    /// Normalises `v`; `None` when it carries no mass.
    pub fn from_unnormalized(mut v: Vec<f64>) -> Option<Self> {
        let s: f64 = v.iter().sum();
        if !s.is_finite() || s <= 0.0 {
            return None;
        }
        v.iter_mut().for_each(|p| *p /= s);
        Some(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable state; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.0[self.argmax()]
    }
}

pub(crate) fn check_dims(
    mu: &InitialDistribution,
    a: &TransitionMatrix,
    obs: &ObservationSequence,
) -> Result<usize> {
    let n = a.n();
    if mu.len() != n {
        return Err(HmmError::DimensionMismatch {
            what: "initial distribution",
            expected: n,
            found: mu.len(),
        });
    }
    if obs.n_states() != n {
        return Err(HmmError::DimensionMismatch {
            what: "observation vector",
            expected: n,
            found: obs.n_states(),
        });
    }
    Ok(n)
}
