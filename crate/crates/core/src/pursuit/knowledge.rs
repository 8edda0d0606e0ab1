use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::grid::GridMap;
use crate::hmm::{
    baum_welch, BaumWelchOptions, HmmError, InitialDistribution, ObservationKind,
    ObservationSequence, ObservationVector, TransitionMatrix,
};

use super::PursuitError;

pub const STORE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BLEND_LAMBDA: f64 = 0.5;
pub const DEFAULT_SHORT_WINDOW: usize = 3;

/// Everything the tracker has learned about one opponent on one map.
///
/// `long_term` is fitted to every archived episode, `short_term` only to the
/// most recent `short_window` of them; live tracking uses their convex blend.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeStore {
    map_hash: String,
    lambda: f64,
    short_window: usize,
    episodes: Vec<ObservationSequence>,
    long_term: TransitionMatrix,
    short_term: TransitionMatrix,
    learned: bool,
}

impl KnowledgeStore {
    /// Fresh store with both matrices uniform over the map's moves.
    pub fn new(map: &GridMap, lambda: f64, short_window: usize) -> Result<Self, PursuitError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(PursuitError::InvalidParameter(format!(
                "blend lambda {lambda} outside [0, 1]"
            )));
        }
        if short_window == 0 {
            return Err(PursuitError::InvalidParameter(
                "short window must be positive".into(),
            ));
        }
        let uniform = map.uniform_transition();
        Ok(Self {
            map_hash: map.hash(),
            lambda,
            short_window,
            episodes: Vec::new(),
            long_term: uniform.clone(),
            short_term: uniform,
            learned: false,
        })
    }

    pub fn with_defaults(map: &GridMap) -> Self {
        Self::new(map, DEFAULT_BLEND_LAMBDA, DEFAULT_SHORT_WINDOW)
            .expect("default parameters are valid")
    }

    pub fn map_hash(&self) -> &str {
        &self.map_hash
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn short_window(&self) -> usize {
        self.short_window
    }

    pub fn episodes(&self) -> &[ObservationSequence] {
        &self.episodes
    }

    pub fn long_term(&self) -> &TransitionMatrix {
        &self.long_term
    }

    pub fn short_term(&self) -> &TransitionMatrix {
        &self.short_term
    }

    /// Whether `learn` has run at least once.
    pub fn is_learned(&self) -> bool {
        self.learned
    }

    pub fn archive(&mut self, episode: ObservationSequence) -> Result<(), PursuitError> {
        if episode.n_states() != self.long_term.n() {
            return Err(PursuitError::DimensionMismatch {
                what: "archived episode",
                expected: self.long_term.n(),
                found: episode.n_states(),
            });
        }
        self.episodes.push(episode);
        Ok(())
    }

    /// Re-fits both matrices. The long-term fit is warm-started from the
    /// previous long-term matrix; the short-term fit always starts uniform.
    pub fn learn(
        &self,
        map: &GridMap,
        mu: &InitialDistribution,
        opts: &BaumWelchOptions,
    ) -> Result<Self, PursuitError> {
        if map.hash() != self.map_hash {
            return Err(PursuitError::MapMismatch {
                expected: self.map_hash.clone(),
                found: map.hash(),
            });
        }
        if self.episodes.is_empty() {
            return Err(PursuitError::NoEpisodes);
        }
        let uniform = map.uniform_transition();
        let long_seed = if self.learned {
            &self.long_term
        } else {
            &uniform
        };
        let long = baum_welch(&self.episodes, mu, long_seed, opts).map_err(episode_error(0))?;

        let first_recent = self.episodes.len().saturating_sub(self.short_window);
        let recent = &self.episodes[first_recent..];
        let short = baum_welch(recent, mu, &uniform, opts).map_err(episode_error(first_recent))?;

        Ok(Self {
            long_term: long.a_hat,
            short_term: short.a_hat,
            learned: true,
            ..self.clone()
        })
    }

    /// `lambda * long_term + (1 - lambda) * short_term`.
    pub fn blended_matrix(&self) -> TransitionMatrix {
        self.long_term
            .convex_mix(&self.short_term, self.lambda)
            .expect("store matrices share dimensions and lambda is validated")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PursuitError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, map: &GridMap) -> Result<Self, PursuitError> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text, map)
    }

    pub fn to_json(&self) -> Result<String, PursuitError> {
        let doc = StoreDocument {
            version: STORE_FORMAT_VERSION,
            map_hash: self.map_hash.clone(),
            lambda: prob17(self.lambda),
            short_window: self.short_window,
            learned: self.learned,
            n_states: self.long_term.n(),
            episodes: self
                .episodes
                .iter()
                .map(|e| e.steps().iter().map(ObservationRecord::from).collect())
                .collect(),
            long_term: matrix17(&self.long_term),
            short_term: matrix17(&self.short_term),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| PursuitError::Format(e.to_string()))
    }

    pub fn from_json(text: &str, map: &GridMap) -> Result<Self, PursuitError> {
        let header: serde_json::Value =
            serde_json::from_str(text).map_err(|_| PursuitError::FormatVersion { found: None })?;
        let version = header.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(STORE_FORMAT_VERSION as u64) {
            return Err(PursuitError::FormatVersion { found: version });
        }
        let doc: LoadedDocument =
            serde_json::from_value(header).map_err(|e| PursuitError::Format(e.to_string()))?;
        let hash = map.hash();
        if doc.map_hash != hash {
            return Err(PursuitError::MapMismatch {
                expected: doc.map_hash,
                found: hash,
            });
        }
        let n = map.n_states();
        if doc.n_states != n {
            return Err(PursuitError::DimensionMismatch {
                what: "stored state count",
                expected: n,
                found: doc.n_states,
            });
        }
        let support = map.uniform_transition().effective_support();
        let matrix = |rows: Vec<Vec<f64>>| -> Result<TransitionMatrix, PursuitError> {
            let data: Vec<f64> = rows.into_iter().flatten().collect();
            Ok(TransitionMatrix::with_support(n, data, support.clone())?)
        };
        let episodes = doc
            .episodes
            .into_iter()
            .map(|steps| {
                let vectors = steps
                    .into_iter()
                    .map(|r| r.into_vector(n))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ObservationSequence::new(vectors)?)
            })
            .collect::<Result<Vec<_>, PursuitError>>()?;
        let store = Self {
            map_hash: doc.map_hash,
            lambda: doc.lambda,
            short_window: doc.short_window,
            episodes,
            long_term: matrix(doc.long_term)?,
            short_term: matrix(doc.short_term)?,
            learned: doc.learned,
        };
        if !(0.0..=1.0).contains(&store.lambda) || store.short_window == 0 {
            return Err(PursuitError::Format("blend parameters out of range".into()));
        }
        Ok(store)
    }
}

fn episode_error(offset: usize) -> impl Fn(HmmError) -> PursuitError {
    move |e| match e {
        HmmError::InconsistentObservations { sequence, step } => {
            PursuitError::InconsistentEpisode {
                episode: sequence + offset,
                step,
            }
        }
        other => other.into(),
    }
}

/// Compact per-turn observation record; lossless for the binary kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationRecord {
    Negative { empty: Vec<usize> },
    Sighting { state: usize },
    Graded { weights: Vec<f64> },
}

impl From<&ObservationVector> for ObservationRecord {
    fn from(v: &ObservationVector) -> Self {
        match v.kind() {
            ObservationKind::NegativeInfo => Self::Negative {
                empty: v.zero_states(),
            },
            ObservationKind::DirectSighting => Self::Sighting {
                state: v.sighted_state().expect("sighting has a state"),
            },
            ObservationKind::Graded => Self::Graded {
                weights: v.weights().to_vec(),
            },
        }
    }
}

impl ObservationRecord {
    pub fn into_vector(self, n: usize) -> Result<ObservationVector, HmmError> {
        match self {
            Self::Negative { empty } => ObservationVector::negative(n, empty),
            Self::Sighting { state } => ObservationVector::sighting(n, state),
            Self::Graded { weights } => {
                if weights.len() != n {
                    return Err(HmmError::DimensionMismatch {
                        what: "graded observation",
                        expected: n,
                        found: weights.len(),
                    });
                }
                ObservationVector::from_weights(weights, ObservationKind::Graded)
            }
        }
    }
}

/// Decimal with 17 significant digits, enough to round-trip any `f64`.
fn prob17(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("formatted float is valid JSON")
}

fn matrix17(m: &TransitionMatrix) -> Vec<Vec<Box<RawValue>>> {
    m.as_slice()
        .chunks(m.n())
        .map(|row| row.iter().map(|&v| prob17(v)).collect())
        .collect()
}

#[derive(Serialize)]
struct StoreDocument {
    version: u32,
    map_hash: String,
    lambda: Box<RawValue>,
    short_window: usize,
    learned: bool,
    n_states: usize,
    episodes: Vec<Vec<ObservationRecord>>,
    long_term: Vec<Vec<Box<RawValue>>>,
    short_term: Vec<Vec<Box<RawValue>>>,
}

#[derive(Deserialize)]
struct LoadedDocument {
    map_hash: String,
    lambda: f64,
    short_window: usize,
    learned: bool,
    n_states: usize,
    episodes: Vec<Vec<ObservationRecord>>,
    long_term: Vec<Vec<f64>>,
    short_term: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_map;

    fn small() -> GridMap {
        parse_map("P..\n.#.\nA.G\n").unwrap()
    }

    #[test]
    fn fresh_store_is_uniform() {
        let m = small();
        let s = KnowledgeStore::with_defaults(&m);
        assert_eq!(s.long_term(), &m.uniform_transition());
        assert_eq!(s.blended_matrix(), m.uniform_transition());
        assert!(!s.is_learned());
    }

    #[test]
    fn parameters_validated() {
        let m = small();
        assert!(KnowledgeStore::new(&m, 1.5, 3).is_err());
        assert!(KnowledgeStore::new(&m, 0.5, 0).is_err());
    }

    #[test]
    fn learn_needs_episodes() {
        let m = small();
        let s = KnowledgeStore::with_defaults(&m);
        let mu = InitialDistribution::point_mass(m.n_states(), 0).unwrap();
        assert!(matches!(
            s.learn(&m, &mu, &BaumWelchOptions::default()),
            Err(PursuitError::NoEpisodes)
        ));
    }

    #[test]
    fn corrupted_header_is_version_error() {
        let m = small();
        let s = KnowledgeStore::with_defaults(&m);
        let text = s
            .to_json()
            .unwrap()
            .replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(matches!(
            KnowledgeStore::from_json(&text, &m),
            Err(PursuitError::FormatVersion { found: Some(7) })
        ));
        assert!(matches!(
            KnowledgeStore::from_json("{\"vers", &m),
            Err(PursuitError::FormatVersion { found: None })
        ));
    }

    #[test]
    fn other_map_rejected() {
        let m = small();
        let other = parse_map("P..\n...\nA.G\n").unwrap();
        let text = KnowledgeStore::with_defaults(&m).to_json().unwrap();
        assert!(matches!(
            KnowledgeStore::from_json(&text, &other),
            Err(PursuitError::MapMismatch { .. })
        ));
    }

    #[test]
    fn seventeen_digit_encoding() {
        assert_eq!(prob17(0.2).get(), "2.0000000000000001e-1");
        assert_eq!(prob17(1.0 / 3.0).get().parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
