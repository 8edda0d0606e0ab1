use hmmtrack_core::experiments::Outcome;
use hmmtrack_core::grid::{MoveAction, Position};
use hmmtrack_service::wire::{
    decode_client, decode_server, encode_client, encode_server, ClientMessage, GameState,
    ServerMessage,
};
use proptest::prelude::*;

fn position() -> impl Strategy<Value = Position> {
    (0usize..64, 0usize..64).prop_map(|(x, y)| Position::new(x, y))
}

fn grid() -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
    prop::collection::vec(
        prop::collection::vec(prop::option::of(0.0f64..=1.0), 1..6),
        1..6,
    )
}

fn server_message() -> impl Strategy<Value = ServerMessage> {
    prop_oneof![
        (
            0usize..300,
            position(),
            position(),
            prop::collection::vec(position(), 0..4),
            prop::collection::vec(position(), 0..8),
            0usize..4,
            prop::option::of(grid()),
        )
            .prop_map(
                |(turn, agent_pos, ai_pos, goals, cameras, occupy_progress, belief_grid)| {
                    ServerMessage::State(GameState {
                        turn,
                        agent_pos,
                        ai_pos,
                        goals,
                        cameras,
                        occupy_progress,
                        belief_grid,
                    })
                }
            ),
        (
            prop::sample::select(vec![
                Outcome::AgentWon,
                Outcome::AiWon,
                Outcome::TurnLimit,
                Outcome::Resigned
            ]),
            0.0f64..40.0
        )
            .prop_map(|(outcome, mean_distance)| ServerMessage::GameOver {
                outcome,
                mean_distance
            }),
        (0usize..1000).prop_map(|games_played| ServerMessage::LearningDone { games_played }),
        ("[a-z_]{1,12}", ".{0,40}").prop_map(|(code, text)| ServerMessage::Error { code, text }),
    ]
}

proptest! {
    #[test]
    fn server_messages_round_trip(msg in server_message()) {
        prop_assert_eq!(decode_server(&encode_server(&msg)).unwrap(), msg);
    }

    #[test]
    fn client_messages_round_trip(action in prop::sample::select(MoveAction::ALL.to_vec()), on: bool) {
        for msg in [ClientMessage::NewGame, ClientMessage::Resign, ClientMessage::Move { action }, ClientMessage::SetDebug { on }] {
            prop_assert_eq!(decode_client(&encode_client(&msg)).unwrap(), msg);
        }
    }
}
