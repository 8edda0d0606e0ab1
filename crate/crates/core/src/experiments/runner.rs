use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{GridMap, MoveAction, Position};
use crate::hmm::{BeliefVector, InitialDistribution, TransitionMatrix};
use crate::pursuit::{next_move, KnowledgeStore, TrackerState};

use super::{
    export_heatmap, export_learning_curve, mean_distance_with, run_game, welch_t_test, EpisodeLog,
    ExperimentError, ExperimentPlan, GameRules, Outcome, PlanConfig, PlanKind, ScriptedStrategy,
    TrackerVariant,
};

/// Stream reserved for the pretrained variant's warm-up games; per-game
/// streams use the game number.
const WARMUP_STREAM: u64 = u64::MAX;
/// Upper bound on a warm-up walker's path before it gives up on its goal.
const WARMUP_MAX_STEPS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCurve {
    pub variant: TrackerVariant,
    pub per_game_mean_distance: Vec<f64>,
    pub outcomes: Vec<Outcome>,
    pub turns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label: String,
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub kind: PlanKind,
    pub seed: u64,
    pub games: usize,
    pub variants: Vec<VariantCurve>,
    pub comparisons: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl StatsReport {
    pub fn curve(&self, variant: TrackerVariant) -> Option<&VariantCurve> {
        self.variants.iter().find(|c| c.variant == variant)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapFrame {
    /// 1-based game number.
    pub game: usize,
    /// 0 is the pre-game look.
    pub turn: usize,
    pub belief: BeliefVector,
}

#[derive(Debug, Clone)]
pub struct VariantRun {
    pub variant: TrackerVariant,
    pub logs: Vec<EpisodeLog>,
    pub heatmaps: Vec<HeatmapFrame>,
    /// Knowledge after the last game, for the learning variants.
    pub store: Option<KnowledgeStore>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: StatsReport,
    pub runs: Vec<VariantRun>,
}

fn initial(map: &GridMap) -> InitialDistribution {
    let start = map.state_index(map.player_start()).expect("start is floor");
    InitialDistribution::point_mass(map.n_states(), start).expect("start index in range")
}

fn game_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The scripted moves for one game, with seeded hesitations mixed in. Every
/// variant sees the same script for a given game number.
fn game_script(plan: &ExperimentPlan, game: usize) -> ScriptedStrategy {
    let base = plan.strategy_for(game);
    if plan.hesitation == 0.0 {
        return base.clone();
    }
    let mut rng = game_rng(plan.seed, game as u64);
    let mut moves = Vec::with_capacity(base.moves.len());
    for &m in &base.moves {
        if rng.gen_bool(plan.hesitation) {
            moves.push(MoveAction::Stay);
        }
        moves.push(m);
    }
    ScriptedStrategy {
        name: base.name.clone(),
        moves,
    }
}

/// Noisy walkers heading for random goals, used to pre-train the static
/// tracker.
pub fn warmup_strategies(
    map: &GridMap,
    rules: &GameRules,
    count: usize,
    noise: f64,
    rng: &mut impl Rng,
) -> Vec<ScriptedStrategy> {
    let goals: Vec<Position> = map.goals().iter().copied().collect();
    (0..count)
        .map(|k| {
            let goal = goals[rng.gen_range(0..goals.len())];
            let mut pos = map.player_start();
            let mut moves = Vec::new();
            while pos != goal && moves.len() < WARMUP_MAX_STEPS {
                let m = if rng.gen_bool(noise) {
                    let legal = map.legal_moves(pos);
                    legal[rng.gen_range(0..legal.len())]
                } else {
                    next_move(map, pos, goal)
                };
                pos = map.apply_move(pos, m).expect("legal move");
                moves.push(m);
            }
            moves.extend(std::iter::repeat_n(
                MoveAction::Stay,
                rules.occupy_turns_to_win,
            ));
            ScriptedStrategy {
                name: format!("warmup_{}", k + 1),
                moves,
            }
        })
        .collect()
}

fn pretrained_store(
    plan: &ExperimentPlan,
    map: &Arc<GridMap>,
    rules: &GameRules,
    mu: &InitialDistribution,
) -> Result<KnowledgeStore, ExperimentError> {
    let mut rng = game_rng(plan.seed, WARMUP_STREAM);
    let mut store = KnowledgeStore::new(map, plan.lambda, plan.short_window)?;
    for s in warmup_strategies(map, rules, plan.warmup_games, plan.warmup_noise, &mut rng) {
        let tracker = TrackerState::new(map, mu.clone(), map.uniform_transition())?;
        run_game(map, rules, &s, tracker, Some(&mut store), false)?;
    }
    Ok(store.learn(map, mu, &plan.learning)?)
}

fn run_variant(
    plan: &ExperimentPlan,
    map: &Arc<GridMap>,
    rules: &GameRules,
    variant: TrackerVariant,
) -> Result<VariantRun, ExperimentError> {
    let mu = initial(map);
    let mut store = match variant {
        TrackerVariant::UniformStatic => None,
        TrackerVariant::PretrainedStatic => Some(pretrained_store(plan, map, rules, &mu)?),
        TrackerVariant::Adaptive => Some(KnowledgeStore::new(map, plan.lambda, plan.short_window)?),
    };
    let frozen: Option<TransitionMatrix> = match variant {
        TrackerVariant::UniformStatic => Some(map.uniform_transition()),
        TrackerVariant::PretrainedStatic => store.as_ref().map(KnowledgeStore::blended_matrix),
        TrackerVariant::Adaptive => None,
    };

    let mut logs = Vec::with_capacity(plan.games);
    let mut heatmaps = Vec::new();
    for game in 1..=plan.games {
        let matrix = match (&frozen, &store) {
            (Some(m), _) => m.clone(),
            (None, Some(s)) => s.blended_matrix(),
            (None, None) => unreachable!("every variant has a matrix source"),
        };
        let tracker = TrackerState::new(map, mu.clone(), matrix)?;
        let script = game_script(plan, game);
        let archive = if variant == TrackerVariant::Adaptive {
            store.as_mut()
        } else {
            None
        };
        let run = run_game(map, rules, &script, tracker, archive, plan.record_heatmaps)?;
        if variant == TrackerVariant::Adaptive {
            let s = store.as_ref().expect("adaptive has a store");
            store = Some(s.learn(map, &mu, &plan.learning)?);
        }
        if let Some(beliefs) = run.beliefs {
            for (turn, belief) in beliefs.into_iter().enumerate() {
                if plan.heatmap_turns.is_empty() || plan.heatmap_turns.contains(&turn) {
                    heatmaps.push(HeatmapFrame { game, turn, belief });
                }
            }
        }
        log::debug!(
            "{variant} game {game}: {:?} after {} turns",
            run.log.outcome,
            run.log.turns()
        );
        logs.push(run.log);
    }
    Ok(VariantRun {
        variant,
        logs,
        heatmaps,
        store,
    })
}

/// Plays every variant through the plan. Each variant starts from scratch,
/// so their order does not matter.
pub fn run_experiment(
    plan: &ExperimentPlan,
    map: &Arc<GridMap>,
    rules: &GameRules,
) -> Result<ExperimentOutput, ExperimentError> {
    plan.validate()?;
    rules.validate()?;
    for s in &plan.strategies {
        s.validate(map)?;
    }
    let runs = plan
        .variants
        .iter()
        .map(|&v| run_variant(plan, map, rules, v))
        .collect::<Result<Vec<_>, _>>()?;

    let variants: Vec<VariantCurve> = runs
        .iter()
        .map(|r| VariantCurve {
            variant: r.variant,
            // Nothing left after filtering means every turn was a sighting,
            // where the estimate is exact.
            per_game_mean_distance: r
                .logs
                .iter()
                .map(|l| mean_distance_with(l, map, &plan.distance).unwrap_or(0.0))
                .collect(),
            outcomes: r.logs.iter().map(|l| l.outcome).collect(),
            turns: r.logs.iter().map(EpisodeLog::turns).collect(),
        })
        .collect();

    let mut comparisons = Vec::new();
    let mut notes = Vec::new();
    let (lo, hi) = plan.compare_games;
    if let Some(adaptive) = variants
        .iter()
        .find(|c| c.variant == TrackerVariant::Adaptive)
    {
        let a = &adaptive.per_game_mean_distance[lo - 1..hi];
        for other in variants
            .iter()
            .filter(|c| c.variant != TrackerVariant::Adaptive)
        {
            let b = &other.per_game_mean_distance[lo - 1..hi];
            let label = format!("adaptive vs {}, games {lo}-{hi}", other.variant);
            match welch_t_test(a, b) {
                Ok(r) => comparisons.push(Comparison {
                    label,
                    t: r.t,
                    p: r.p,
                    df: r.df,
                }),
                Err(e) => notes.push(format!("{label}: {e}")),
            }
        }
    }

    Ok(ExperimentOutput {
        report: StatsReport {
            kind: plan.kind,
            seed: plan.seed,
            games: plan.games,
            variants,
            comparisons,
            notes,
        },
        runs,
    })
}

/// Recomputes the tracker's belief after every logged observation.
pub fn replay_beliefs(
    log: &EpisodeLog,
    map: &GridMap,
) -> Result<Vec<BeliefVector>, ExperimentError> {
    let n = map.n_states();
    let mu = InitialDistribution::point_mass(n, log.initial_state)?;
    let mut tracker = TrackerState::new(map, mu, log.matrix(map)?)?;
    let seq = log.observation_sequence(n)?;
    let mut out = Vec::with_capacity(seq.len());
    for obs in seq.steps() {
        tracker.ingest(obs)?;
        out.push(tracker.belief());
    }
    Ok(out)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|e| ExperimentError::io(path, e))
}

fn mkdir(path: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(path).map_err(|e| ExperimentError::io(path, e))
}

/// Lays out a run directory:
///
/// ```text
/// report.json
/// learning_curve.csv
/// map.txt
/// games/<variant>/game_001.json
/// heatmaps/<variant>/game_001_turn_000.{csv,ppm}
/// knowledge/<variant>.json
/// ```
pub fn write_outputs(
    output: &ExperimentOutput,
    map: &GridMap,
    dir: &Path,
) -> Result<(), ExperimentError> {
    mkdir(dir)?;
    let mut report = serde_json::to_string_pretty(&output.report)?;
    report.push('\n');
    write_file(&dir.join("report.json"), report)?;
    export_learning_curve(&output.report, &dir.join("learning_curve.csv"))?;
    write_file(&dir.join("map.txt"), map.serialize())?;
    for run in &output.runs {
        let games = dir.join("games").join(run.variant.as_str());
        mkdir(&games)?;
        for (k, log) in run.logs.iter().enumerate() {
            let mut text = serde_json::to_string_pretty(log)?;
            text.push('\n');
            write_file(&games.join(format!("game_{:03}.json", k + 1)), text)?;
        }
        if !run.heatmaps.is_empty() {
            let heat = dir.join("heatmaps").join(run.variant.as_str());
            mkdir(&heat)?;
            for f in &run.heatmaps {
                let stem = heat.join(format!("game_{:03}_turn_{:03}", f.game, f.turn));
                export_heatmap(&f.belief, map, &stem, 1)?;
            }
        }
        if let Some(store) = &run.store {
            let knowledge = dir.join("knowledge");
            mkdir(&knowledge)?;
            store.save(knowledge.join(format!("{}.json", run.variant)))?;
        }
    }
    Ok(())
}

/// Runs a parsed plan and writes its run directory.
pub fn simulate(
    config: &PlanConfig,
    map: GridMap,
    out: &Path,
) -> Result<StatsReport, ExperimentError> {
    let map = Arc::new(map);
    let output = run_experiment(&config.plan, &map, &config.rules)?;
    write_outputs(&output, &map, out)?;
    Ok(output.report)
}
