use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{visible_set, GridMap, MoveAction, Position, VisibilitySpec};
use crate::hmm::{BeliefVector, ObservationSequence, TransitionMatrix};
use crate::pursuit::{next_move, IngestOutcome, KnowledgeStore, ObservationRecord, TrackerState};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchRule {
    SameTile,
    /// Same tile or a 4-neighbour.
    Adjacent4,
}

impl TouchRule {
    pub fn touching(self, a: Position, b: Position) -> bool {
        match self {
            Self::SameTile => a == b,
            Self::Adjacent4 => a.manhattan(b) <= 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameRules {
    pub player_vision_radius: usize,
    pub ai_vision_radius: usize,
    /// Consecutive turns on a goal the agent needs to win.
    pub occupy_turns_to_win: usize,
    pub touch_rule: TouchRule,
    pub max_turns: usize,
    pub occlusion: bool,
}

impl Default for GameRules {
    fn default() -> Self {
        Self {
            player_vision_radius: 2,
            ai_vision_radius: 1,
            occupy_turns_to_win: 3,
            touch_rule: TouchRule::Adjacent4,
            max_turns: 200,
            occlusion: false,
        }
    }
}

impl GameRules {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.occupy_turns_to_win == 0 || self.max_turns == 0 {
            return Err(ExperimentError::InvalidPlan(
                "occupy_turns and max_turns must be positive".into(),
            ));
        }
        Ok(())
    }

    fn ai_vision(&self) -> VisibilitySpec {
        VisibilitySpec {
            radius: self.ai_vision_radius,
            occlusion: self.occlusion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AgentWon,
    AiWon,
    TurnLimit,
    /// The agent gave up mid-game.
    Resigned,
}

/// A fixed move list played from the player start, then `Stay` forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedStrategy {
    pub name: String,
    pub moves: Vec<MoveAction>,
}

impl ScriptedStrategy {
    /// Moves written as `N`, `E`, `S`, `W` and `.` for stay; whitespace is ignored.
    pub fn parse(name: impl Into<String>, moves: &str) -> Result<Self, ExperimentError> {
        let name = name.into();
        let moves = moves
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                MoveAction::from_char(c).ok_or_else(|| {
                    ExperimentError::InvalidPlan(format!("strategy {name}: bad move {c:?}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { name, moves })
    }

    pub fn move_string(&self) -> String {
        self.moves.iter().map(|m| m.to_char()).collect()
    }

    pub fn action(&self, turn: usize) -> MoveAction {
        self.moves.get(turn).copied().unwrap_or(MoveAction::Stay)
    }

    /// Walks the script from the player start; every prefix must be legal.
    pub fn validate(&self, map: &GridMap) -> Result<Vec<Position>, ExperimentError> {
        let mut pos = map.player_start();
        let mut trail = vec![pos];
        for (k, &m) in self.moves.iter().enumerate() {
            pos = map
                .apply_move(pos, m)
                .map_err(|_| ExperimentError::ScriptIllegalMove {
                    strategy: self.name.clone(),
                    step: k + 1,
                    from: pos,
                    action: m,
                })?;
            trail.push(pos);
        }
        Ok(trail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub agent_pos: Position,
    pub ai_pos: Position,
    /// Tiles seen empty or occupied this turn, in row-major order.
    pub visible: Vec<Position>,
    pub sighting: Option<Position>,
    /// The estimate the tracker steered toward this turn.
    pub belief_argmax: Position,
    pub belief_argmax_prob: f64,
    /// Euclidean distance between the agent and the estimate.
    pub distance: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub collapsed: bool,
}

/// Everything needed to audit or replay one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub strategy: String,
    pub outcome: Outcome,
    pub records: Vec<TurnRecord>,
    /// Observations in tracker order: the pre-game look, then one per turn.
    pub observations: Vec<ObservationRecord>,
    /// Non-zero entries of the transition matrix the tracker used.
    pub tracker_matrix: Vec<Vec<(usize, f64)>>,
    pub initial_state: usize,
}

impl EpisodeLog {
    pub fn turns(&self) -> usize {
        self.records.len()
    }

    pub fn observation_sequence(&self, n: usize) -> Result<ObservationSequence, ExperimentError> {
        let steps = self
            .observations
            .iter()
            .map(|r| r.clone().into_vector(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ObservationSequence::new(steps)?)
    }

    pub fn matrix(&self, map: &GridMap) -> Result<TransitionMatrix, ExperimentError> {
        let n = map.n_states();
        let mut data = vec![0.0; n * n];
        for (i, row) in self.tracker_matrix.iter().enumerate() {
            for &(j, p) in row {
                if i >= n || j >= n {
                    return Err(ExperimentError::InvalidPlan(
                        "logged matrix does not fit the map".into(),
                    ));
                }
                data[i * n + j] = p;
            }
        }
        Ok(TransitionMatrix::with_support(
            n,
            data,
            map.uniform_transition().effective_support(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    Continue,
    Finished(Outcome),
}

/// One live game. The agent moves first each turn, then the tracker looks,
/// updates its belief and steps toward its estimate.
#[derive(Debug, Clone)]
pub struct Game {
    map: Arc<GridMap>,
    rules: GameRules,
    tracker: TrackerState,
    agent: Position,
    ai: Position,
    turn: usize,
    occupied: usize,
    strategy: String,
    records: Vec<TurnRecord>,
    observations: ObservationSequence,
    outcome: Option<Outcome>,
    beliefs: Option<Vec<BeliefVector>>,
}

impl Game {
    /// Sets up both avatars on their starts and ingests the pre-game look.
    pub fn new(
        map: Arc<GridMap>,
        rules: GameRules,
        mut tracker: TrackerState,
        strategy: impl Into<String>,
        record_beliefs: bool,
    ) -> Result<Self, ExperimentError> {
        rules.validate()?;
        let agent = map.player_start();
        let ai = map.ai_start();
        let (_, _, obs) = observe(&map, &rules, ai, agent)?;
        tracker.ingest(&obs)?;
        let beliefs = record_beliefs.then(|| vec![tracker.belief()]);
        Ok(Self {
            map,
            rules,
            tracker,
            agent,
            ai,
            turn: 0,
            occupied: 0,
            strategy: strategy.into(),
            records: Vec::new(),
            observations: ObservationSequence::new(vec![obs])?,
            outcome: None,
            beliefs,
        })
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn rules(&self) -> &GameRules {
        &self.rules
    }

    pub fn turn(&self) -> usize {
        self.turn
    }

    pub fn agent_pos(&self) -> Position {
        self.agent
    }

    pub fn ai_pos(&self) -> Position {
        self.ai
    }

    pub fn occupy_progress(&self) -> usize {
        self.occupied
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn tracker(&self) -> &TrackerState {
        &self.tracker
    }

    pub fn records(&self) -> &[TurnRecord] {
        &self.records
    }

    pub fn observations(&self) -> &ObservationSequence {
        &self.observations
    }

    /// Beliefs after each observation, index 0 being the pre-game look.
    pub fn beliefs(&self) -> Option<&[BeliefVector]> {
        self.beliefs.as_deref()
    }

    /// Plays one full turn. An illegal agent move leaves the game untouched.
    pub fn step(&mut self, action: MoveAction) -> Result<StepResult, ExperimentError> {
        if let Some(o) = self.outcome {
            return Err(ExperimentError::GameOver(o));
        }
        let agent =
            self.map
                .apply_move(self.agent, action)
                .map_err(|_| ExperimentError::IllegalMove {
                    from: self.agent,
                    action,
                })?;
        self.turn += 1;
        self.agent = agent;
        self.occupied = if self.map.goals().contains(&agent) {
            self.occupied + 1
        } else {
            0
        };

        let (visible, sighting, obs) = observe(&self.map, &self.rules, self.ai, agent)?;
        let collapsed = self.tracker.ingest(&obs)? == IngestOutcome::Collapsed;
        self.observations.push(obs)?;

        let belief = self.tracker.belief();
        let estimate = self.map.position(belief.argmax());
        let mut outcome = None;
        if self.occupied >= self.rules.occupy_turns_to_win {
            outcome = Some(Outcome::AgentWon);
        } else {
            let step = next_move(&self.map, self.ai, estimate);
            self.ai = self
                .map
                .apply_move(self.ai, step)
                .expect("planner only emits legal moves");
            if self.rules.touch_rule.touching(self.agent, self.ai) {
                outcome = Some(Outcome::AiWon);
            }
        }
        if outcome.is_none() && self.turn >= self.rules.max_turns {
            outcome = Some(Outcome::TurnLimit);
        }

        self.records.push(TurnRecord {
            turn: self.turn,
            agent_pos: agent,
            ai_pos: self.ai,
            visible: visible.into_iter().collect(),
            sighting,
            belief_argmax: estimate,
            belief_argmax_prob: belief.max(),
            distance: agent.euclidean(estimate),
            collapsed,
        });
        if let Some(b) = &mut self.beliefs {
            b.push(belief);
        }
        self.outcome = outcome;
        Ok(match outcome {
            Some(o) => StepResult::Finished(o),
            None => StepResult::Continue,
        })
    }

    /// Ends a running game with [`Outcome::Resigned`]. Observations so far
    /// stay in the log.
    pub fn resign(&mut self) -> Result<(), ExperimentError> {
        if let Some(o) = self.outcome {
            return Err(ExperimentError::GameOver(o));
        }
        self.outcome = Some(Outcome::Resigned);
        Ok(())
    }

    /// Finished log. Panics if the game is still running.
    pub fn into_log(self) -> EpisodeLog {
        let outcome = self.outcome.expect("game finished");
        EpisodeLog {
            strategy: self.strategy,
            outcome,
            records: self.records,
            observations: self
                .observations
                .steps()
                .iter()
                .map(ObservationRecord::from)
                .collect(),
            tracker_matrix: self.tracker.matrix().sparse_rows(),
            initial_state: self
                .map
                .state_index(self.map.player_start())
                .expect("start is floor"),
        }
    }
}

fn observe(
    map: &GridMap,
    rules: &GameRules,
    ai: Position,
    agent: Position,
) -> Result<
    (
        BTreeSet<Position>,
        Option<Position>,
        crate::hmm::ObservationVector,
    ),
    ExperimentError,
> {
    let visible = visible_set(map, ai, rules.ai_vision(), true);
    let sighting = (agent == ai || visible.contains(&agent)).then_some(agent);
    let obs = map.observation_vector(&visible, sighting)?;
    Ok((visible, sighting, obs))
}

/// Result of [`run_game`]: the log plus the per-observation beliefs when requested.
#[derive(Debug, Clone)]
pub struct GameRun {
    pub log: EpisodeLog,
    pub beliefs: Option<Vec<BeliefVector>>,
}

/// Plays a scripted game to completion and archives its observations into
/// `store` when one is given.
pub fn run_game(
    map: &Arc<GridMap>,
    rules: &GameRules,
    strategy: &ScriptedStrategy,
    tracker: TrackerState,
    store: Option<&mut KnowledgeStore>,
    record_beliefs: bool,
) -> Result<GameRun, ExperimentError> {
    strategy.validate(map)?;
    let mut game = Game::new(
        Arc::clone(map),
        *rules,
        tracker,
        strategy.name.clone(),
        record_beliefs,
    )?;
    loop {
        let action = strategy.action(game.turn());
        if let StepResult::Finished(_) = game.step(action)? {
            break;
        }
    }
    if let Some(store) = store {
        store.archive(game.observations().clone())?;
    }
    let beliefs = game.beliefs.take();
    Ok(GameRun {
        log: game.into_log(),
        beliefs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_map;
    use crate::hmm::InitialDistribution;

    fn tracker(map: &GridMap) -> TrackerState {
        let mu = InitialDistribution::point_mass(
            map.n_states(),
            map.state_index(map.player_start()).unwrap(),
        )
        .unwrap();
        TrackerState::new(map, mu, map.uniform_transition()).unwrap()
    }

    #[test]
    fn adjacent_start_is_caught_on_turn_one() {
        let map = Arc::new(parse_map("PA...\n....G\n").unwrap());
        let strat = ScriptedStrategy::parse("idle", "").unwrap();
        let run = run_game(
            &map,
            &GameRules::default(),
            &strat,
            tracker(&map),
            None,
            false,
        )
        .unwrap();
        assert_eq!(run.log.outcome, Outcome::AiWon);
        assert_eq!(run.log.turns(), 1);
    }

    #[test]
    fn unopposed_occupation_wins_at_n() {
        let map = Arc::new(parse_map("PG..........A\n").unwrap());
        let strat = ScriptedStrategy::parse("sit", "E").unwrap();
        let run = run_game(
            &map,
            &GameRules::default(),
            &strat,
            tracker(&map),
            None,
            false,
        )
        .unwrap();
        assert_eq!(run.log.outcome, Outcome::AgentWon);
        assert_eq!(run.log.turns(), 3);
        assert_eq!(run.log.observations.len(), 4);
    }

    #[test]
    fn illegal_move_does_not_consume_turn() {
        let map = Arc::new(parse_map("P...\n....\n...A\n...G\n").unwrap());
        let mut g = Game::new(
            Arc::clone(&map),
            GameRules::default(),
            tracker(&map),
            "t",
            false,
        )
        .unwrap();
        assert!(matches!(
            g.step(MoveAction::North),
            Err(ExperimentError::IllegalMove { .. })
        ));
        assert_eq!(g.turn(), 0);
        assert_eq!(g.agent_pos(), map.player_start());
        assert!(matches!(g.step(MoveAction::Stay), Ok(StepResult::Continue)));
        assert_eq!(g.turn(), 1);
    }

    #[test]
    fn script_validation_reports_step() {
        let map = parse_map("P..\n...\nA.G\n").unwrap();
        let s = ScriptedStrategy::parse("bad", "EEE").unwrap();
        assert!(matches!(
            s.validate(&map),
            Err(ExperimentError::ScriptIllegalMove { step: 3, .. })
        ));
        assert!(ScriptedStrategy::parse("x", "NQ").is_err());
        assert_eq!(
            ScriptedStrategy::parse("ok", "E E .")
                .unwrap()
                .move_string(),
            "EE."
        );
    }

    #[test]
    fn touch_rules() {
        let a = Position::new(2, 2);
        assert!(TouchRule::Adjacent4.touching(a, Position::new(2, 3)));
        assert!(!TouchRule::Adjacent4.touching(a, Position::new(3, 3)));
        assert!(!TouchRule::SameTile.touching(a, Position::new(2, 3)));
        assert!(TouchRule::SameTile.touching(a, a));
    }
}
