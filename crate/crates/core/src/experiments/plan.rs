use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::{bundled_map, parse_map, GridMap};
use crate::hmm::BaumWelchOptions;
use crate::pursuit::{DEFAULT_BLEND_LAMBDA, DEFAULT_SHORT_WINDOW};

use super::{
    DistanceMetric, DistanceOptions, ExperimentError, GameRules, ScriptedStrategy, TouchRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    /// One strategy every game.
    Repeat,
    /// First strategy up to `switch_at`, the second afterwards.
    Switch,
    /// The two strategies take turns, starting with the first.
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerVariant {
    UniformStatic,
    PretrainedStatic,
    Adaptive,
}

impl TrackerVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::UniformStatic => "uniform_static",
            Self::PretrainedStatic => "pretrained_static",
            Self::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for TrackerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrackerVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform_static" => Ok(Self::UniformStatic),
            "pretrained_static" => Ok(Self::PretrainedStatic),
            "adaptive" => Ok(Self::Adaptive),
            other => Err(format!("unknown tracker variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub kind: PlanKind,
    pub strategies: Vec<ScriptedStrategy>,
    pub games: usize,
    /// Last game (1-based) played with the first strategy in a switch plan.
    pub switch_at: Option<usize>,
    pub variants: Vec<TrackerVariant>,
    pub seed: u64,
    /// Chance of an extra `Stay` before each scripted move.
    pub hesitation: f64,
    pub warmup_games: usize,
    /// Chance a warm-up walker takes a random step instead of a shortest-path one.
    pub warmup_noise: f64,
    pub learning: BaumWelchOptions,
    pub lambda: f64,
    pub short_window: usize,
    pub record_heatmaps: bool,
    /// Turns to keep heatmaps for; empty keeps every turn.
    pub heatmap_turns: Vec<usize>,
    pub distance: DistanceOptions,
    /// 1-based inclusive game range used for the Welch comparisons.
    pub compare_games: (usize, usize),
}

impl ExperimentPlan {
    pub fn new(kind: PlanKind, strategies: Vec<ScriptedStrategy>, games: usize) -> Self {
        Self {
            kind,
            strategies,
            games,
            switch_at: None,
            variants: vec![TrackerVariant::Adaptive],
            seed: 0,
            hesitation: 0.0,
            warmup_games: 5,
            warmup_noise: 0.25,
            learning: BaumWelchOptions::default(),
            lambda: DEFAULT_BLEND_LAMBDA,
            short_window: DEFAULT_SHORT_WINDOW,
            record_heatmaps: false,
            heatmap_turns: Vec::new(),
            distance: DistanceOptions::default(),
            compare_games: (games.saturating_sub(2).max(1), games),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidPlan(m));
        if self.games == 0 {
            return bad("games must be positive".into());
        }
        let need = match self.kind {
            PlanKind::Repeat => 1,
            PlanKind::Switch | PlanKind::Alternate => 2,
        };
        if self.strategies.len() != need {
            return bad(format!(
                "{:?} plan needs {need} strategies, got {}",
                self.kind,
                self.strategies.len()
            ));
        }
        match (self.kind, self.switch_at) {
            (PlanKind::Switch, Some(s)) if s >= 1 && s < self.games => {}
            (PlanKind::Switch, _) => return bad("switch plan needs 1 <= switch_at < games".into()),
            (_, Some(_)) => return bad("switch_at only applies to switch plans".into()),
            _ => {}
        }
        if self.variants.is_empty() {
            return bad("at least one tracker variant is required".into());
        }
        let mut seen = HashSet::new();
        if let Some(v) = self.variants.iter().find(|v| !seen.insert(**v)) {
            return bad(format!("variant {v} listed twice"));
        }
        for (name, p) in [
            ("hesitation", self.hesitation),
            ("warmup_noise", self.warmup_noise),
        ] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        if self.variants.contains(&TrackerVariant::PretrainedStatic) && self.warmup_games == 0 {
            return bad("pretrained_static needs warmup_games > 0".into());
        }
        let (lo, hi) = self.compare_games;
        if lo == 0 || lo > hi || hi > self.games {
            return bad(format!(
                "compare_games {lo}-{hi} is outside 1-{}",
                self.games
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) || self.short_window == 0 {
            return bad("lambda must lie in [0, 1] and short_window be positive".into());
        }
        Ok(())
    }

    /// Strategy for a 1-based game number.
    pub fn strategy_for(&self, game: usize) -> &ScriptedStrategy {
        let second = match self.kind {
            PlanKind::Repeat => false,
            PlanKind::Switch => game > self.switch_at.unwrap_or(self.games),
            PlanKind::Alternate => game.is_multiple_of(2),
        };
        &self.strategies[usize::from(second && self.strategies.len() > 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapSource {
    /// A map shipped with the crate, by name.
    Bundled(String),
    Path(PathBuf),
}

impl MapSource {
    /// Relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<GridMap, ExperimentError> {
        let (label, text) = match self {
            Self::Bundled(name) => match bundled_map(name) {
                Some(text) => (name.clone(), text.to_string()),
                None => {
                    return Err(ExperimentError::InvalidPlan(format!(
                        "no bundled map named {name:?}"
                    )))
                }
            },
            Self::Path(p) => {
                let full = base.join(p);
                let text =
                    std::fs::read_to_string(&full).map_err(|e| ExperimentError::io(&full, e))?;
                (full.display().to_string(), text)
            }
        };
        parse_map(&text).map_err(|source| ExperimentError::Map {
            path: label,
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    pub plan: ExperimentPlan,
    pub rules: GameRules,
    pub map: MapSource,
}

/// Reads a plan file and the map it names.
pub fn load_plan(path: impl AsRef<Path>) -> Result<(PlanConfig, GridMap), ExperimentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    let config = parse_plan(&text, &path.display().to_string())?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let map = config.map.load(base)?;
    Ok((config, map))
}

/// Parses `key = value` lines. `#` starts a comment; `strategy` may repeat
/// and takes `name: MOVES`.
pub fn parse_plan(text: &str, origin: &str) -> Result<PlanConfig, ExperimentError> {
    let mut kind = None;
    let mut games = None;
    let mut strategies = Vec::new();
    let mut rules = GameRules::default();
    let mut map = MapSource::Bundled("island".into());
    let mut compare = None;
    let mut plan = ExperimentPlan::new(PlanKind::Repeat, Vec::new(), 1);
    let mut seen = HashSet::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let err = |message: String| ExperimentError::Config {
            file: origin.to_string(),
            line,
            message,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key != "strategy" && !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key {key:?}")));
        }
        match key {
            "kind" => {
                kind = Some(match value {
                    "repeat" => PlanKind::Repeat,
                    "switch" => PlanKind::Switch,
                    "alternate" => PlanKind::Alternate,
                    _ => return Err(err(format!("unknown plan kind {value:?}"))),
                })
            }
            "games" => games = Some(num(value).map_err(err)?),
            "switch_at" => plan.switch_at = Some(num(value).map_err(err)?),
            "variant" | "variants" => {
                plan.variants = value
                    .split(',')
                    .map(|v| v.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(err)?
            }
            "strategy" => {
                let (name, moves) = value
                    .split_once(':')
                    .ok_or_else(|| err("strategy needs `name: MOVES`".into()))?;
                let s =
                    ScriptedStrategy::parse(name.trim(), moves).map_err(|e| err(e.to_string()))?;
                strategies.push(s);
            }
            "seed" => plan.seed = num(value).map_err(err)?,
            "hesitation" => plan.hesitation = num(value).map_err(err)?,
            "warmup_games" => plan.warmup_games = num(value).map_err(err)?,
            "warmup_noise" => plan.warmup_noise = num(value).map_err(err)?,
            "max_iters" => plan.learning.max_iters = num(value).map_err(err)?,
            "tol" => plan.learning.tol = num(value).map_err(err)?,
            "smoothing_eps" => plan.learning.smoothing_eps = num(value).map_err(err)?,
            "lambda" => plan.lambda = num(value).map_err(err)?,
            "short_window" => plan.short_window = num(value).map_err(err)?,
            "record_heatmaps" => plan.record_heatmaps = num(value).map_err(err)?,
            "heatmap_turns" => {
                plan.heatmap_turns = value
                    .split(',')
                    .map(|t| num(t.trim()))
                    .collect::<Result<_, _>>()
                    .map_err(err)?
            }
            "distance_metric" => {
                plan.distance.metric = match value {
                    "euclidean" => DistanceMetric::Euclidean,
                    "shortest_path" => DistanceMetric::ShortestPath,
                    _ => return Err(err(format!("unknown distance metric {value:?}"))),
                }
            }
            "exclude_sighted" => plan.distance.exclude_sighted = num(value).map_err(err)?,
            "compare_games" => {
                let (lo, hi) = value
                    .split_once('-')
                    .ok_or_else(|| err("compare_games takes a range like 8-10".into()))?;
                compare = Some((num(lo.trim()).map_err(err)?, num(hi.trim()).map_err(err)?));
            }
            "map" => {
                map = if Path::new(value).extension().is_some() || value.contains('/') {
                    MapSource::Path(value.into())
                } else {
                    MapSource::Bundled(value.into())
                }
            }
            "player_vision_radius" => rules.player_vision_radius = num(value).map_err(err)?,
            "ai_vision_radius" => rules.ai_vision_radius = num(value).map_err(err)?,
            "occupy_turns" | "occupy_turns_to_win" => {
                rules.occupy_turns_to_win = num(value).map_err(err)?
            }
            "touch_rule" => {
                rules.touch_rule = match value {
                    "same_tile" => TouchRule::SameTile,
                    "adjacent4" => TouchRule::Adjacent4,
                    _ => return Err(err(format!("unknown touch rule {value:?}"))),
                }
            }
            "max_turns" => rules.max_turns = num(value).map_err(err)?,
            "occlusion" => rules.occlusion = num(value).map_err(err)?,
            _ => return Err(err(format!("unknown key {key:?}"))),
        }
    }

    let at_end = |message: &str| ExperimentError::Config {
        file: origin.to_string(),
        line: last_line,
        message: message.to_string(),
    };
    plan.kind = kind.ok_or_else(|| at_end("missing `kind`"))?;
    plan.games = games.ok_or_else(|| at_end("missing `games`"))?;
    plan.strategies = strategies;
    plan.compare_games = compare.unwrap_or((plan.games.saturating_sub(2).max(1), plan.games));
    plan.validate().map_err(|e| at_end(&e.to_string()))?;
    rules.validate().map_err(|e| at_end(&e.to_string()))?;
    Ok(PlanConfig { plan, rules, map })
}

fn num<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse {value:?}"))
}
