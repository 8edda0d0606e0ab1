use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, Mutex};

use hmmtrack_core::experiments::{mean_estimate_distance, EpisodeLog, Game, GameRules, StepResult};
use hmmtrack_core::grid::{bundled_map, parse_map, GridMap, MoveAction, Position, BUNDLED_MAPS};
use hmmtrack_core::hmm::{BaumWelchOptions, InitialDistribution};
use hmmtrack_core::pursuit::{
    KnowledgeStore, TrackerState, DEFAULT_BLEND_LAMBDA, DEFAULT_SHORT_WINDOW,
};

use crate::wire::{decode_client, ClientMessage, GameState, ServerMessage};
use crate::ServiceError;

pub type SessionId = String;

/// Rows of the belief, `None` on walls.
pub type BeliefGrid = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub rules: GameRules,
    pub learning: BaumWelchOptions,
    pub lambda: f64,
    pub short_window: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            rules: GameRules::default(),
            learning: BaumWelchOptions::default(),
            lambda: DEFAULT_BLEND_LAMBDA,
            short_window: DEFAULT_SHORT_WINDOW,
        }
    }
}

/// Messages to send back, plus a learning job to run off the request path
/// when a game just ended.
#[derive(Debug, Default)]
pub struct Reply {
    pub messages: Vec<ServerMessage>,
    pub learn: Option<LearnJob>,
}

impl Reply {
    fn message(m: ServerMessage) -> Self {
        Self {
            messages: vec![m],
            learn: None,
        }
    }
}

/// A snapshot of the store taken when a game ended.
#[derive(Debug)]
pub struct LearnJob {
    store: KnowledgeStore,
    map: Arc<GridMap>,
    mu: InitialDistribution,
    opts: BaumWelchOptions,
    games_played: usize,
}

impl LearnJob {
    /// Runs Baum-Welch. Blocking and potentially slow.
    pub fn run(self) -> Result<Learned, ServiceError> {
        let store = self.store.learn(&self.map, &self.mu, &self.opts)?;
        Ok(Learned {
            store,
            games_played: self.games_played,
        })
    }
}

#[derive(Debug)]
pub struct Learned {
    store: KnowledgeStore,
    games_played: usize,
}

/// One player's sequence of games against a tracker that learns between
/// them.
#[derive(Debug)]
pub struct Session {
    id: SessionId,
    map_name: String,
    map: Arc<GridMap>,
    config: SessionConfig,
    mu: InitialDistribution,
    store: KnowledgeStore,
    /// Number of archived episodes the store's matrices were fitted to.
    learned_through: usize,
    game: Option<Game>,
    games_played: usize,
    debug_belief: bool,
    last_log: Option<EpisodeLog>,
}

impl Session {
    pub fn new(
        id: SessionId,
        map_name: impl Into<String>,
        map: Arc<GridMap>,
        config: SessionConfig,
    ) -> Result<Self, ServiceError> {
        config.rules.validate()?;
        let start = map.state_index(map.player_start()).expect("start is floor");
        let mu = InitialDistribution::point_mass(map.n_states(), start)?;
        let store = KnowledgeStore::new(&map, config.lambda, config.short_window)?;
        Ok(Self {
            id,
            map_name: map_name.into(),
            map,
            config,
            mu,
            store,
            learned_through: 0,
            game: None,
            games_played: 0,
            debug_belief: false,
            last_log: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn store(&self) -> &KnowledgeStore {
        &self.store
    }

    pub fn games_played(&self) -> usize {
        self.games_played
    }

    pub fn debug_belief(&self) -> bool {
        self.debug_belief
    }

    pub fn game(&self) -> Option<&Game> {
        self.game.as_ref()
    }

    /// Log of the most recently finished game.
    pub fn last_log(&self) -> Option<&EpisodeLog> {
        self.last_log.as_ref()
    }

    pub fn welcome(&self) -> ServerMessage {
        ServerMessage::Welcome {
            session_id: self.id.clone(),
            map_name: self.map_name.clone(),
            width: self.map.width(),
            height: self.map.height(),
            rows: self.map.serialize().lines().map(str::to_string).collect(),
        }
    }

    /// Starts a game with the current blended matrix. Learning still in
    /// flight does not affect it.
    pub fn new_game(&mut self) -> Result<ServerMessage, ServiceError> {
        if self.game.is_some() {
            return Err(ServiceError::GameInProgress);
        }
        let tracker = TrackerState::new(&self.map, self.mu.clone(), self.store.blended_matrix())?;
        let name = format!("live_{}", self.games_played + 1);
        self.game = Some(Game::new(
            Arc::clone(&self.map),
            self.config.rules,
            tracker,
            name,
            false,
        )?);
        self.state()
    }

    /// Plays one turn. On the final turn the reply carries the last state,
    /// the result and a learning job.
    pub fn handle_move(&mut self, action: MoveAction) -> Result<Reply, ServiceError> {
        let game = self.game.as_mut().ok_or(ServiceError::NoLiveGame)?;
        let from = game.agent_pos();
        if self.map.apply_move(from, action).is_err() {
            return Err(ServiceError::IllegalMove { from, action });
        }
        let result = game.step(action)?;
        let state = self.state()?;
        match result {
            StepResult::Continue => Ok(Reply::message(state)),
            StepResult::Finished(_) => {
                let mut reply = self.finish_game()?;
                reply.messages.insert(0, state);
                Ok(reply)
            }
        }
    }

    pub fn resign(&mut self) -> Result<Reply, ServiceError> {
        self.game
            .as_mut()
            .ok_or(ServiceError::NoLiveGame)?
            .resign()?;
        self.finish_game()
    }

    /// Toggles the belief overlay; replies with a fresh state when a game is
    /// running.
    pub fn set_debug(&mut self, on: bool) -> Result<Option<ServerMessage>, ServiceError> {
        self.debug_belief = on;
        match self.game {
            Some(_) => self.state().map(Some),
            None => Ok(None),
        }
    }

    /// The tracker's current belief laid out on the map.
    pub fn snapshot_belief(&self) -> Result<BeliefGrid, ServiceError> {
        if !self.debug_belief {
            return Err(ServiceError::DebugDisabled);
        }
        let game = self.game.as_ref().ok_or(ServiceError::NoLiveGame)?;
        let belief = game.tracker().belief_slice();
        Ok((0..self.map.height())
            .map(|y| {
                (0..self.map.width())
                    .map(|x| self.map.state_index(Position::new(x, y)).map(|s| belief[s]))
                    .collect()
            })
            .collect())
    }

    fn state(&self) -> Result<ServerMessage, ServiceError> {
        let game = self.game.as_ref().ok_or(ServiceError::NoLiveGame)?;
        Ok(ServerMessage::State(GameState {
            turn: game.turn(),
            agent_pos: game.agent_pos(),
            ai_pos: game.ai_pos(),
            goals: self.map.goals().iter().copied().collect(),
            cameras: self.map.cameras().iter().copied().collect(),
            occupy_progress: game.occupy_progress(),
            belief_grid: if self.debug_belief {
                Some(self.snapshot_belief()?)
            } else {
                None
            },
        }))
    }

    fn finish_game(&mut self) -> Result<Reply, ServiceError> {
        let game = self.game.take().ok_or(ServiceError::NoLiveGame)?;
        self.store.archive(game.observations().clone())?;
        let log = game.into_log();
        self.games_played += 1;
        let over = ServerMessage::GameOver {
            outcome: log.outcome,
            mean_distance: mean_estimate_distance(&log),
        };
        self.last_log = Some(log);
        Ok(Reply {
            messages: vec![over],
            learn: Some(LearnJob {
                store: self.store.clone(),
                map: Arc::clone(&self.map),
                mu: self.mu.clone(),
                opts: self.config.learning,
                games_played: self.games_played,
            }),
        })
    }

    /// Installs a finished learning job. Results older than the store's
    /// current fit are dropped; episodes archived while the job ran are
    /// carried over.
    pub fn finish_learning(&mut self, result: Result<Learned, ServiceError>) -> ServerMessage {
        let learned = match result {
            Ok(l) => l,
            Err(e) => {
                log::warn!("session {}: learning failed: {e}", self.id);
                return (&e).into();
            }
        };
        let fitted = learned.store.episodes().len();
        if fitted > self.learned_through {
            let mut store = learned.store;
            for ep in &self.store.episodes()[fitted..] {
                store
                    .archive(ep.clone())
                    .expect("episodes come from the same map");
            }
            self.store = store;
            self.learned_through = fitted;
        }
        ServerMessage::LearningDone {
            games_played: learned.games_played,
        }
    }

    /// Dispatches a client message. Failures become `Error` messages.
    pub fn handle(&mut self, msg: ClientMessage) -> Reply {
        let result = match msg {
            ClientMessage::NewGame => self.new_game().map(Reply::message),
            ClientMessage::Move { action } => self.handle_move(action),
            ClientMessage::Resign => self.resign(),
            ClientMessage::SetDebug { on } => self.set_debug(on).map(|m| Reply {
                messages: m.into_iter().collect(),
                learn: None,
            }),
        };
        result.unwrap_or_else(|e| Reply::message((&e).into()))
    }

    pub fn handle_text(&mut self, text: &str) -> Reply {
        match decode_client(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => Reply::message((&e).into()),
        }
    }
}

/// Named maps and the sessions opened on them.
#[derive(Debug)]
pub struct SessionManager {
    maps: BTreeMap<String, Arc<GridMap>>,
    config: SessionConfig,
    live: Mutex<HashSet<SessionId>>,
}

impl SessionManager {
    /// Starts with the bundled maps.
    pub fn new(config: SessionConfig) -> Self {
        let mut maps = BTreeMap::new();
        for &name in BUNDLED_MAPS {
            let map = parse_map(bundled_map(name).expect("bundled")).expect("bundled maps parse");
            maps.insert(name.to_string(), Arc::new(map));
        }
        Self {
            maps,
            config,
            live: Mutex::new(HashSet::new()),
        }
    }

    pub fn add_map(&mut self, name: impl Into<String>, map: GridMap) {
        self.maps.insert(name.into(), Arc::new(map));
    }

    pub fn map_names(&self) -> impl Iterator<Item = &str> {
        self.maps.keys().map(String::as_str)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn create_session(&self, map_name: &str) -> Result<Session, ServiceError> {
        self.create_session_with(map_name, self.config.rules)
    }

    pub fn create_session_with(
        &self,
        map_name: &str,
        rules: GameRules,
    ) -> Result<Session, ServiceError> {
        let map = self
            .maps
            .get(map_name)
            .ok_or_else(|| ServiceError::UnknownMap(map_name.to_string()))?;
        let config = SessionConfig {
            rules,
            ..self.config.clone()
        };
        let mut live = self.live.lock().expect("session registry poisoned");
        let id = loop {
            let id = uuid::Uuid::new_v4().simple().to_string();
            if live.insert(id.clone()) {
                break id;
            }
        };
        drop(live);
        Session::new(id, map_name, Arc::clone(map), config)
    }

    pub fn close_session(&self, id: &str) {
        self.live
            .lock()
            .expect("session registry poisoned")
            .remove(id);
    }

    pub fn live_sessions(&self) -> usize {
        self.live.lock().expect("session registry poisoned").len()
    }
}
