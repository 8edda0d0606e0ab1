use std::collections::HashSet;
use std::sync::Arc;

use hmmtrack_core::experiments::{
    heatmap_csv, run_experiment, run_game, EpisodeLog, ExperimentPlan, GameRules, Outcome,
    PlanKind, ScriptedStrategy, TrackerVariant,
};
use hmmtrack_core::grid::{parse_map, MoveAction, Position, ISLAND_MAP};
use hmmtrack_core::hmm::InitialDistribution;
use hmmtrack_core::pursuit::{KnowledgeStore, TrackerState};
use hmmtrack_service::wire::{
    decode_server, encode_client, ClientMessage, GameState, ServerMessage,
};
use hmmtrack_service::{Session, SessionConfig, SessionManager};

const NORTH_WEST: &str = "SSWWWNNWWWWWWSSSSEESSWW";

fn manager() -> SessionManager {
    SessionManager::new(SessionConfig::default())
}

fn state(msg: &ServerMessage) -> &GameState {
    match msg {
        ServerMessage::State(s) => s,
        other => panic!("expected State, got {other:?}"),
    }
}

fn error_code(msgs: &[ServerMessage]) -> &str {
    match msgs {
        [ServerMessage::Error { code, .. }] => code,
        other => panic!("expected one Error, got {other:?}"),
    }
}

fn send(session: &mut Session, msg: ClientMessage) -> hmmtrack_service::Reply {
    session.handle_text(&encode_client(&msg))
}

/// Drives a scripted strategy through the message interface until the game
/// ends. Returns the states seen after each turn and the final reply.
fn play_over_wire(
    session: &mut Session,
    strategy: &ScriptedStrategy,
) -> (Vec<GameState>, hmmtrack_service::Reply) {
    let reply = send(session, ClientMessage::NewGame);
    let mut states = vec![state(&reply.messages[0]).clone()];
    for turn in 0.. {
        let reply = send(
            session,
            ClientMessage::Move {
                action: strategy.action(turn),
            },
        );
        states.push(state(&reply.messages[0]).clone());
        if reply.learn.is_some() {
            return (states, reply);
        }
    }
    unreachable!()
}

fn renamed(log: &EpisodeLog, name: &str) -> String {
    let mut log = log.clone();
    log.strategy = name.to_string();
    serde_json::to_string(&log).unwrap()
}

#[test]
fn session_ids_are_unique() {
    let m = manager();
    let ids: HashSet<String> = (0..200)
        .map(|_| m.create_session("island").unwrap().id().to_string())
        .collect();
    assert_eq!(ids.len(), 200);
    assert_eq!(m.live_sessions(), 200);
    m.close_session(ids.iter().next().unwrap());
    assert_eq!(m.live_sessions(), 199);
}

#[test]
fn unknown_map_is_rejected() {
    let e = manager().create_session("atlantis").unwrap_err();
    assert_eq!(e.code(), "unknown_map");
}

#[test]
fn new_game_starts_on_the_start_tiles() {
    let m = manager();
    let mut s = m.create_session("island").unwrap();
    let map = parse_map(ISLAND_MAP).unwrap();
    let reply = send(&mut s, ClientMessage::NewGame);
    assert!(reply.learn.is_none());
    let st = state(&reply.messages[0]);
    assert_eq!(st.turn, 0);
    assert_eq!(st.agent_pos, map.player_start());
    assert_eq!(st.ai_pos, map.ai_start());
    assert_eq!(st.goals, map.goals().iter().copied().collect::<Vec<_>>());
    assert_eq!(
        st.cameras,
        map.cameras().iter().copied().collect::<Vec<_>>()
    );
    assert_eq!(st.occupy_progress, 0);
    assert!(st.belief_grid.is_none());

    assert_eq!(
        error_code(&send(&mut s, ClientMessage::NewGame).messages),
        "game_in_progress"
    );
}

#[test]
fn moves_advance_one_turn_and_walls_do_not() {
    let mut s = manager().create_session("island").unwrap();
    assert_eq!(
        error_code(
            &send(
                &mut s,
                ClientMessage::Move {
                    action: MoveAction::Stay
                }
            )
            .messages
        ),
        "no_live_game"
    );
    send(&mut s, ClientMessage::NewGame);
    let reply = send(
        &mut s,
        ClientMessage::Move {
            action: MoveAction::Stay,
        },
    );
    assert_eq!(state(&reply.messages[0]).turn, 1);

    // The player start sits against the top wall.
    let reply = send(
        &mut s,
        ClientMessage::Move {
            action: MoveAction::North,
        },
    );
    assert_eq!(error_code(&reply.messages), "illegal_move");
    assert_eq!(s.game().unwrap().turn(), 1);
    assert_eq!(s.game().unwrap().records().len(), 1);

    let reply = send(
        &mut s,
        ClientMessage::Move {
            action: MoveAction::South,
        },
    );
    assert_eq!(state(&reply.messages[0]).turn, 2);
}

#[test]
fn malformed_messages_get_error_replies() {
    let mut s = manager().create_session("island").unwrap();
    assert_eq!(
        error_code(&s.handle_text("not json").messages),
        "bad_message"
    );
    assert_eq!(
        error_code(
            &s.handle_text(r#"{"type":"NewGame","protocol_version":7}"#)
                .messages
        ),
        "unsupported_version"
    );
}

#[test]
fn debug_grid_matches_the_tracker() {
    let map = parse_map(ISLAND_MAP).unwrap();
    let mut s = manager().create_session("island").unwrap();
    assert!(send(&mut s, ClientMessage::SetDebug { on: true })
        .messages
        .is_empty());
    let reply = send(&mut s, ClientMessage::NewGame);
    let grid = state(&reply.messages[0]).belief_grid.clone().unwrap();
    assert_eq!(grid.len(), map.height());
    assert!(grid.iter().all(|row| row.len() == map.width()));
    // Point-mass start, not yet observed moving: one-hot on the player start.
    let start = map.player_start();
    for (y, row) in grid.iter().enumerate() {
        for (x, cell) in row.iter().enumerate() {
            let p = Position::new(x, y);
            match map.state_index(p) {
                None => assert!(cell.is_none()),
                Some(_) => assert_eq!(*cell, Some(if p == start { 1.0 } else { 0.0 })),
            }
        }
    }

    for action in [
        MoveAction::South,
        MoveAction::South,
        MoveAction::West,
        MoveAction::Stay,
    ] {
        let reply = send(&mut s, ClientMessage::Move { action });
        let grid = state(&reply.messages[0]).belief_grid.clone().unwrap();
        let total: f64 = grid.iter().flatten().flatten().sum();
        assert!((total - 1.0).abs() < 1e-9);
        let csv: String = grid
            .iter()
            .map(|row| {
                let cells: Vec<String> = row
                    .iter()
                    .map(|c| c.map(|v| format!("{v:.6}")).unwrap_or_default())
                    .collect();
                cells.join(",") + "\n"
            })
            .collect();
        assert_eq!(
            csv,
            heatmap_csv(&s.game().unwrap().tracker().belief(), &map)
        );
    }

    let reply = send(&mut s, ClientMessage::SetDebug { on: false });
    assert!(state(&reply.messages[0]).belief_grid.is_none());
    assert_eq!(s.snapshot_belief().unwrap_err().code(), "debug_disabled");
}

#[test]
fn wire_games_match_headless_games() {
    let map = Arc::new(parse_map(ISLAND_MAP).unwrap());
    let rules = GameRules::default();
    let strategy = ScriptedStrategy::parse("north_west", NORTH_WEST).unwrap();
    let mut s = manager().create_session("island").unwrap();

    let mu = InitialDistribution::point_mass(
        map.n_states(),
        map.state_index(map.player_start()).unwrap(),
    )
    .unwrap();
    let mut store = KnowledgeStore::with_defaults(&map);
    for game in 1..=3 {
        let tracker = TrackerState::new(&map, mu.clone(), store.blended_matrix()).unwrap();
        let headless = run_game(&map, &rules, &strategy, tracker, Some(&mut store), false).unwrap();
        store = store.learn(&map, &mu, &Default::default()).unwrap();

        let (states, reply) = play_over_wire(&mut s, &strategy);
        let wire_log = s.last_log().unwrap();
        assert_eq!(
            renamed(wire_log, "north_west"),
            serde_json::to_string(&headless.log).unwrap(),
            "game {game}"
        );
        for (st, rec) in states[1..].iter().zip(&headless.log.records) {
            assert_eq!(
                (st.turn, st.agent_pos, st.ai_pos),
                (rec.turn, rec.agent_pos, rec.ai_pos)
            );
        }
        match &reply.messages[1] {
            ServerMessage::GameOver { outcome, .. } => assert_eq!(*outcome, headless.log.outcome),
            other => panic!("expected GameOver, got {other:?}"),
        }
        let done = s.finish_learning(reply.learn.unwrap().run());
        assert_eq!(done, ServerMessage::LearningDone { games_played: game });
    }
}

#[test]
fn wire_games_match_the_adaptive_experiment() {
    let map = Arc::new(parse_map(ISLAND_MAP).unwrap());
    let strategy = ScriptedStrategy::parse("north_west", NORTH_WEST).unwrap();
    let mut plan = ExperimentPlan::new(PlanKind::Repeat, vec![strategy.clone()], 3);
    plan.variants = vec![TrackerVariant::Adaptive];
    let out = run_experiment(&plan, &map, &GameRules::default()).unwrap();

    let mut s = manager().create_session("island").unwrap();
    for log in &out.runs[0].logs {
        let (_, reply) = play_over_wire(&mut s, &strategy);
        assert_eq!(
            renamed(s.last_log().unwrap(), "north_west"),
            serde_json::to_string(log).unwrap()
        );
        s.finish_learning(reply.learn.unwrap().run());
    }
}

#[test]
fn new_game_before_learning_uses_the_previous_matrix() {
    let map = parse_map(ISLAND_MAP).unwrap();
    let strategy = ScriptedStrategy::parse("north_west", NORTH_WEST).unwrap();
    let mut s = manager().create_session("island").unwrap();
    let (_, first) = play_over_wire(&mut s, &strategy);
    let job1 = first.learn.unwrap();

    send(&mut s, ClientMessage::NewGame);
    assert_eq!(
        *s.game().unwrap().tracker().matrix(),
        map.uniform_transition()
    );
    s.finish_learning(job1.run());
    assert_eq!(
        *s.game().unwrap().tracker().matrix(),
        map.uniform_transition()
    );
    assert!(s.store().is_learned());
    assert_ne!(s.store().blended_matrix(), map.uniform_transition());
}

#[test]
fn stale_learning_results_are_dropped() {
    let strategy = ScriptedStrategy::parse("north_west", NORTH_WEST).unwrap();
    let mut s = manager().create_session("island").unwrap();
    let (_, first) = play_over_wire(&mut s, &strategy);
    let (_, second) = play_over_wire(&mut s, &strategy);
    let (job1, job2) = (first.learn.unwrap(), second.learn.unwrap());

    let expected = job2.run().unwrap();
    let done = s.finish_learning(Ok(expected));
    assert_eq!(done, ServerMessage::LearningDone { games_played: 2 });
    let fitted = s.store().clone();
    let done = s.finish_learning(job1.run());
    assert_eq!(done, ServerMessage::LearningDone { games_played: 1 });
    assert_eq!(*s.store(), fitted);
}

#[test]
fn early_results_keep_later_episodes() {
    let strategy = ScriptedStrategy::parse("north_west", NORTH_WEST).unwrap();
    let mut s = manager().create_session("island").unwrap();
    let (_, first) = play_over_wire(&mut s, &strategy);
    play_over_wire(&mut s, &strategy);
    s.finish_learning(first.learn.unwrap().run());
    assert_eq!(s.store().episodes().len(), 2);
}

#[test]
fn resign_ends_and_archives_the_game() {
    let mut s = manager().create_session("island").unwrap();
    assert_eq!(
        error_code(&send(&mut s, ClientMessage::Resign).messages),
        "no_live_game"
    );
    send(&mut s, ClientMessage::NewGame);
    send(
        &mut s,
        ClientMessage::Move {
            action: MoveAction::South,
        },
    );
    let reply = send(&mut s, ClientMessage::Resign);
    match &reply.messages[..] {
        [ServerMessage::GameOver { outcome, .. }] => assert_eq!(*outcome, Outcome::Resigned),
        other => panic!("unexpected {other:?}"),
    }
    assert!(reply.learn.is_some());
    assert_eq!(s.games_played(), 1);
    assert_eq!(s.store().episodes().len(), 1);
    assert!(s.game().is_none());
}

#[test]
fn states_round_trip() {
    let mut s = manager().create_session("island").unwrap();
    send(&mut s, ClientMessage::SetDebug { on: true });
    let mut msgs = vec![s.welcome()];
    msgs.extend(send(&mut s, ClientMessage::NewGame).messages);
    for action in [MoveAction::South, MoveAction::South, MoveAction::West] {
        msgs.extend(send(&mut s, ClientMessage::Move { action }).messages);
    }
    msgs.extend(send(&mut s, ClientMessage::Resign).messages);
    for m in msgs {
        let text = hmmtrack_service::wire::encode_server(&m);
        assert_eq!(decode_server(&text).unwrap(), m);
    }
}
