use serde::{Deserialize, Serialize};

use crate::grid::GridMap;
use crate::pursuit::dijkstra;

use super::{EpisodeLog, ExperimentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    /// Number of moves on the map.
    ShortestPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DistanceOptions {
    pub metric: DistanceMetric,
    /// Skip turns on which the agent was in plain view.
    pub exclude_sighted: bool,
}

/// Mean Euclidean distance between the agent and the tracker's estimate over
/// every turn. Zero for an empty log.
pub fn mean_estimate_distance(log: &EpisodeLog) -> f64 {
    if log.records.is_empty() {
        return 0.0;
    }
    let total: f64 = log
        .records
        .iter()
        .map(|r| r.agent_pos.euclidean(r.belief_argmax))
        .sum();
    total / log.records.len() as f64
}

/// [`mean_estimate_distance`] with a choice of metric and turn filter.
/// Returns `None` when the filter leaves no turns.
pub fn mean_distance_with(log: &EpisodeLog, map: &GridMap, opts: &DistanceOptions) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in &log.records {
        if opts.exclude_sighted && r.sighting.is_some() {
            continue;
        }
        total += match opts.metric {
            DistanceMetric::Euclidean => r.agent_pos.euclidean(r.belief_argmax),
            DistanceMetric::ShortestPath => {
                let field = dijkstra(map, r.belief_argmax);
                let s = map.state_index(r.agent_pos)?;
                f64::from(field.distance(s)?)
            }
        };
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Welch's unequal-variance two-sample t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, ExperimentError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(ExperimentError::TooFewSamples {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(ExperimentError::NonFiniteSample);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Err(ExperimentError::DegenerateVariance);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = student_t_two_sided(t, df);
    Ok(WelchResult { t, df, p })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = C[0];
    for (k, &c) in C.iter().enumerate().skip(1) {
        sum += c / (x + k as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Outcome, TurnRecord};
    use crate::grid::Position;

    fn log(offsets: &[(usize, usize)]) -> EpisodeLog {
        let records = offsets
            .iter()
            .enumerate()
            .map(|(k, &(dx, dy))| TurnRecord {
                turn: k + 1,
                agent_pos: Position::new(1, 1),
                ai_pos: Position::new(0, 0),
                visible: vec![],
                sighting: None,
                belief_argmax: Position::new(1 + dx, 1 + dy),
                belief_argmax_prob: 1.0,
                distance: 0.0,
                collapsed: false,
            })
            .collect();
        EpisodeLog {
            strategy: "t".into(),
            outcome: Outcome::TurnLimit,
            records,
            observations: vec![],
            tracker_matrix: vec![],
            initial_state: 0,
        }
    }

    #[test]
    fn mean_distance_examples() {
        assert_eq!(mean_estimate_distance(&log(&[(0, 0), (0, 0)])), 0.0);
        assert_eq!(mean_estimate_distance(&log(&[(3, 4)])), 5.0);
        assert_eq!(mean_estimate_distance(&log(&[(0, 0), (1, 0), (0, 2)])), 1.0);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_symmetric_case() {
        // I_x(1, 1) = x and I_{1/2}(a, a) = 1/2.
        assert!((regularized_incomplete_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
        assert!((regularized_incomplete_beta(0.5, 3.5, 3.5) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn welch_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 3.0, 4.0, 5.0];
        let r = welch_t_test(&a, &b).unwrap();
        // Equal variances 5/3, so t = -1 / sqrt(5/6) and df = 6.
        assert!((r.t + 1.0 / (5.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((r.df - 6.0).abs() < 1e-12);
        let s = welch_t_test(&b, &a).unwrap();
        assert_eq!(s.t, -r.t);
        assert_eq!(s.p, r.p);
        let same = welch_t_test(&a, &a).unwrap();
        assert_eq!((same.t, same.p), (0.0, 1.0));
        assert!(matches!(
            welch_t_test(&[1.0, 1.0], &[2.0, 2.0]),
            Err(ExperimentError::DegenerateVariance)
        ));
        assert!(welch_t_test(&[1.0], &a).is_err());
    }
}
