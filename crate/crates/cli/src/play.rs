use std::io::{BufRead, Write};

use clap::Args;
use hmmtrack_core::grid::{GridMap, MoveAction, Position};
use hmmtrack_service::wire::{ClientMessage, GameState, ServerMessage};
use hmmtrack_service::{Session, SessionConfig, SessionManager};

use crate::{CliError, MapArg, Result};

#[derive(Debug, Args)]
pub struct PlayArgs {
    #[command(flatten)]
    map: MapArg,
    /// Show the tracker's most likely tile each turn.
    #[arg(long)]
    debug: bool,
}

const HELP: &str =
    "moves: n e s w . (several per line are fine); commands: new, resign, debug, quit";

fn render(map: &GridMap, s: &GameState) -> String {
    let estimate = s.belief_grid.as_ref().and_then(|g| {
        let mut best: Option<(f64, Position)> = None;
        for (y, row) in g.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, Position::new(x, y)));
                    }
                }
            }
        }
        best.map(|(_, p)| p)
    });
    let mut out = String::new();
    for y in 0..map.height() {
        for x in 0..map.width() {
            let p = Position::new(x, y);
            let c = if p == s.agent_pos {
                '@'
            } else if p == s.ai_pos {
                'X'
            } else if Some(p) == estimate {
                '?'
            } else if !map.is_floor(p) {
                '#'
            } else if map.goals().contains(&p) {
                'G'
            } else if map.cameras().contains(&p) {
                'C'
            } else {
                '.'
            };
            out.push(c);
        }
        out.push('\n');
    }
    out.push_str(&format!("turn {}  on goal {}\n", s.turn, s.occupy_progress));
    out
}

fn show(session: &Session, msgs: Vec<ServerMessage>, out: &mut impl Write) -> std::io::Result<()> {
    for m in msgs {
        match m {
            ServerMessage::State(s) => write!(out, "{}", render(session.map(), &s))?,
            ServerMessage::GameOver {
                outcome,
                mean_distance,
            } => writeln!(
                out,
                "game over: {outcome:?}, mean distance {mean_distance:.3}"
            )?,
            ServerMessage::LearningDone { games_played } => writeln!(
                out,
                "tracker updated after {games_played} games; type new to play again"
            )?,
            ServerMessage::Error { text, .. } => writeln!(out, "! {text}")?,
            ServerMessage::Welcome { .. } => {}
        }
    }
    Ok(())
}

/// Plays through the same session logic as the server. Learning runs
/// inline after each game.
pub fn run(args: PlayArgs) -> Result<()> {
    let mut manager = SessionManager::new(SessionConfig::default());
    manager.add_map("local", args.map.load()?);
    let mut session = manager.create_session("local")?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let io = |source| CliError::Io {
        path: "terminal".into(),
        source,
    };

    writeln!(out, "{HELP}").map_err(io)?;
    let mut pending = vec![
        ClientMessage::SetDebug { on: args.debug },
        ClientMessage::NewGame,
    ];
    let mut lines = stdin.lock().lines();
    loop {
        for msg in pending.drain(..) {
            let reply = session.handle(msg);
            show(&session, reply.messages, &mut out).map_err(io)?;
            if let Some(job) = reply.learn {
                let done = session.finish_learning(job.run());
                show(&session, vec![done], &mut out).map_err(io)?;
            }
        }
        out.flush().map_err(io)?;
        let Some(line) = lines.next() else { break };
        let line = line.map_err(io)?;
        match line.trim() {
            "quit" | "q" => break,
            "new" => pending.push(ClientMessage::NewGame),
            "resign" => pending.push(ClientMessage::Resign),
            "debug" => pending.push(ClientMessage::SetDebug {
                on: !session.debug_belief(),
            }),
            "" | "help" => writeln!(out, "{HELP}").map_err(io)?,
            moves => {
                let parsed: Option<Vec<MoveAction>> = moves
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(MoveAction::from_char)
                    .collect();
                match parsed {
                    Some(actions) => pending.extend(
                        actions
                            .into_iter()
                            .map(|action| ClientMessage::Move { action }),
                    ),
                    None => writeln!(out, "! could not read {moves:?}; {HELP}").map_err(io)?,
                }
            }
        }
    }
    Ok(())
}
