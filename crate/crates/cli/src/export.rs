use std::path::{Path, PathBuf};

use clap::Args;
use hmmtrack_core::experiments::{
    export_heatmap, export_learning_curve, replay_beliefs, EpisodeLog, StatsReport,
};
use hmmtrack_core::grid::parse_map;

use crate::{io_err, read_json, CliError, Result};

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Run directory written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    /// Output directory. Defaults to <run>/export.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only these variants (default: all in the run).
    #[arg(long)]
    variant: Vec<String>,
    /// Only these 1-based game numbers.
    #[arg(long)]
    game: Vec<usize>,
    /// Only these turns (0 is the pre-game look).
    #[arg(long)]
    turn: Vec<usize>,
    /// Pixels per tile side in the PPM files.
    #[arg(long, default_value_t = 8)]
    scale: usize,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    out.sort();
    Ok(out)
}

pub fn run(args: ExportArgs) -> Result<()> {
    let map_path = args.run.join("map.txt");
    let map_text = std::fs::read_to_string(&map_path).map_err(io_err(&map_path))?;
    let map = parse_map(&map_text).map_err(|source| CliError::Map {
        name: map_path.display().to_string(),
        source,
    })?;
    let out = args.out.clone().unwrap_or_else(|| args.run.join("export"));
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;

    let report: StatsReport = read_json(&args.run.join("report.json"))?;
    export_learning_curve(&report, &out.join("learning_curve.csv"))?;

    let mut frames = 0;
    for variant_dir in sorted_entries(&args.run.join("games"))? {
        let variant = variant_dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if !args.variant.is_empty() && !args.variant.contains(&variant) {
            continue;
        }
        let target = out.join("heatmaps").join(&variant);
        std::fs::create_dir_all(&target).map_err(io_err(&target))?;
        for (k, file) in sorted_entries(&variant_dir)?.iter().enumerate() {
            let game = k + 1;
            if !args.game.is_empty() && !args.game.contains(&game) {
                continue;
            }
            let log: EpisodeLog = read_json(file)?;
            let beliefs = replay_beliefs(&log, &map)?;
            // Replay must land on the logged estimates.
            for (rec, b) in log.records.iter().zip(&beliefs[1..]) {
                if map.position(b.argmax()) != rec.belief_argmax {
                    return Err(CliError::Usage(format!(
                        "{}: replay disagrees with the log at turn {}",
                        file.display(),
                        rec.turn
                    )));
                }
            }
            for (turn, belief) in beliefs.iter().enumerate() {
                if args.turn.is_empty() || args.turn.contains(&turn) {
                    let stem = target.join(format!("game_{game:03}_turn_{turn:03}"));
                    export_heatmap(belief, &map, &stem, args.scale)?;
                    frames += 1;
                }
            }
        }
    }
    println!(
        "wrote learning_curve.csv and {frames} heatmaps to {}",
        out.display()
    );
    Ok(())
}
