use crate::grid::{GridMap, Position};
use crate::hmm::{normalize, propagate};
use crate::hmm::{BeliefVector, InitialDistribution, ObservationVector, TransitionMatrix};

use super::PursuitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    Updated,
    /// The observation was impossible under the model; the belief was reset
    /// to uniform over the states the observation leaves open.
    Collapsed,
}

/// Running forward filter for one game.
///
/// `turn` counts ingested observations; before the first one the belief is
/// the initial distribution itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    matrix: TransitionMatrix,
    rows: Vec<Vec<(usize, f64)>>,
    mu: InitialDistribution,
    alpha: Vec<f64>,
    loglik: f64,
    turn: usize,
    collapses: Vec<usize>,
}

impl TrackerState {
    pub fn new(
        map: &GridMap,
        mu: InitialDistribution,
        matrix: TransitionMatrix,
    ) -> Result<Self, PursuitError> {
        let n = map.n_states();
        for (what, found) in [
            ("initial distribution", mu.len()),
            ("transition matrix", matrix.n()),
        ] {
            if found != n {
                return Err(PursuitError::DimensionMismatch {
                    what,
                    expected: n,
                    found,
                });
            }
        }
        Ok(Self {
            rows: matrix.sparse_rows(),
            alpha: mu.as_slice().to_vec(),
            matrix,
            mu,
            loglik: 0.0,
            turn: 0,
            collapses: Vec::new(),
        })
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    pub fn mu(&self) -> &InitialDistribution {
        &self.mu
    }

    pub fn turn(&self) -> usize {
        self.turn
    }

    /// Accumulated log-likelihood of the ingested observations; `-inf` once
    /// the belief has collapsed.
    pub fn log_likelihood(&self) -> f64 {
        self.loglik
    }

    /// Turns (1-based observation counts) at which the belief collapsed.
    pub fn collapses(&self) -> &[usize] {
        &self.collapses
    }

    pub fn belief(&self) -> BeliefVector {
        BeliefVector::from_unnormalized(self.alpha.clone()).expect("tracker belief always has mass")
    }

    pub fn belief_slice(&self) -> &[f64] {
        &self.alpha
    }

    /// One forward step: `alpha <- (alpha A) * b`, renormalised. The first
    /// observation weights the initial distribution directly.
    pub fn ingest(&mut self, obs: &ObservationVector) -> Result<IngestOutcome, PursuitError> {
        let n = self.alpha.len();
        if obs.len() != n {
            return Err(PursuitError::DimensionMismatch {
                what: "observation vector",
                expected: n,
                found: obs.len(),
            });
        }
        let mut next = if self.turn == 0 {
            self.mu.as_slice().to_vec()
        } else {
            let mut v = vec![0.0; n];
            propagate(&self.alpha, &self.rows, &mut v);
            v
        };
        for (j, v) in next.iter_mut().enumerate() {
            *v *= obs.weight(j);
        }
        self.turn += 1;
        let outcome = match normalize(&mut next) {
            Some(c) => {
                self.loglik += c.ln();
                IngestOutcome::Updated
            }
            None => {
                next = obs
                    .weights()
                    .iter()
                    .map(|&b| if b > 0.0 { 1.0 } else { 0.0 })
                    .collect();
                normalize(&mut next).expect("observation leaves at least one state open");
                self.loglik = f64::NEG_INFINITY;
                self.collapses.push(self.turn);
                log::warn!(
                    "belief collapsed at observation {}; reset to the unobserved states",
                    self.turn
                );
                IngestOutcome::Collapsed
            }
        };
        self.alpha = next;
        Ok(outcome)
    }

    /// Most probable state, lowest index on ties.
    pub fn estimate_state(&self) -> usize {
        self.belief().argmax()
    }

    pub fn estimate_position(&self, map: &GridMap) -> Position {
        map.position(self.estimate_state())
    }
}
