#![allow(dead_code)]

use hmmtrack_core::hmm::{
    InitialDistribution, ObservationKind, ObservationSequence, ObservationVector, TransitionMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub mu: InitialDistribution,
    pub a: TransitionMatrix,
    pub obs: ObservationSequence,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_distribution(rng: &mut ChaCha8Rng, mask: &[bool]) -> Vec<f64> {
    let raw: Vec<f64> = mask
        .iter()
        .map(|&on| if on { rng.gen_range(0.05..1.0) } else { 0.0 })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Random row-stochastic matrix on a random support; every row keeps at
/// least one entry.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> TransitionMatrix {
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n {
        let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        if !mask.contains(&true) {
            mask[rng.gen_range(0..n)] = true;
        }
        data.extend(random_distribution(rng, &mask));
    }
    TransitionMatrix::new(n, data).unwrap()
}

pub fn random_mu(rng: &mut ChaCha8Rng, n: usize) -> InitialDistribution {
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    if !mask.contains(&true) {
        mask[0] = true;
    }
    InitialDistribution::new(random_distribution(rng, &mask)).unwrap()
}

fn sample(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc && v > 0.0 {
            return i;
        }
    }
    p.iter().rposition(|&v| v > 0.0).unwrap()
}

/// Hidden walk of length `len` from `(mu, a)`.
pub fn sample_path(
    rng: &mut ChaCha8Rng,
    mu: &InitialDistribution,
    a: &TransitionMatrix,
    len: usize,
) -> Vec<usize> {
    let mut x = sample(rng, mu.as_slice());
    let mut path = vec![x];
    for _ in 1..len {
        x = sample(rng, a.row(x));
        path.push(x);
    }
    path
}

/// Binary observations that never rule out the walk's true state, so the
/// sequence always has positive likelihood.
pub fn binary_observations(rng: &mut ChaCha8Rng, n: usize, path: &[usize]) -> ObservationSequence {
    let steps = path
        .iter()
        .map(|&x| {
            let b: Vec<f64> = (0..n)
                .map(|i| {
                    if i == x || rng.gen_bool(0.6) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            ObservationVector::from_weights(b, ObservationKind::NegativeInfo).unwrap()
        })
        .collect();
    ObservationSequence::new(steps).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_len: usize) -> Instance {
    let n = rng.gen_range(1..=max_n);
    let len = rng.gen_range(1..=max_len);
    let mu = random_mu(rng, n);
    let a = random_matrix(rng, n);
    let path = sample_path(rng, &mu, &a, len);
    let obs = binary_observations(rng, n, &path);
    Instance { mu, a, obs }
}

pub fn prefix(obs: &ObservationSequence, len: usize) -> ObservationSequence {
    ObservationSequence::new(obs.steps()[..len].to_vec()).unwrap()
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    if x == y {
        return true;
    }
    (x - y).abs() <= tol * x.abs().max(y.abs())
}
