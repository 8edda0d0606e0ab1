use std::path::{Path, PathBuf};

use clap::Args;
use hmmtrack_core::experiments::EpisodeLog;
use hmmtrack_core::hmm::{BaumWelchOptions, InitialDistribution};
use hmmtrack_core::pursuit::{KnowledgeStore, DEFAULT_BLEND_LAMBDA, DEFAULT_SHORT_WINDOW};

use crate::{io_err, read_json, CliError, MapArg, Result};

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Knowledge store file. Created when missing and --logs is given.
    #[arg(long)]
    store: PathBuf,
    #[command(flatten)]
    map: MapArg,
    /// Directory of game log JSON files to archive before learning.
    #[arg(long)]
    logs: Vec<PathBuf>,
    /// Where to write the fitted store. Defaults to overwriting --store.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = BaumWelchOptions::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = BaumWelchOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = BaumWelchOptions::default().smoothing_eps)]
    smoothing_eps: f64,
    /// Blend weight of a newly created store.
    #[arg(long, default_value_t = DEFAULT_BLEND_LAMBDA)]
    lambda: f64,
    /// Short-term window of a newly created store.
    #[arg(long, default_value_t = DEFAULT_SHORT_WINDOW)]
    short_window: usize,
}

fn log_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn run(args: LearnArgs) -> Result<()> {
    let map = args.map.load()?;
    let mut store = if args.store.exists() {
        KnowledgeStore::load(&args.store, &map)?
    } else if !args.logs.is_empty() {
        KnowledgeStore::new(&map, args.lambda, args.short_window)?
    } else {
        return Err(CliError::Usage(format!(
            "{} does not exist; pass --logs to start a new store",
            args.store.display()
        )));
    };
    for dir in &args.logs {
        for file in log_files(dir)? {
            let log: EpisodeLog = read_json(&file)?;
            store.archive(log.observation_sequence(map.n_states())?)?;
        }
    }
    let opts = BaumWelchOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        smoothing_eps: args.smoothing_eps,
    };
    let start = map.state_index(map.player_start()).expect("start is floor");
    let mu = InitialDistribution::point_mass(map.n_states(), start)?;
    let before = store.blended_matrix();
    let learned = store.learn(&map, &mu, &opts)?;
    let out = args.out.as_ref().unwrap_or(&args.store);
    learned.save(out)?;
    println!(
        "fitted {} episodes; largest change in the blended matrix {:.6}",
        learned.episodes().len(),
        before.max_abs_diff(&learned.blended_matrix())
    );
    println!("wrote {}", out.display());
    Ok(())
}
