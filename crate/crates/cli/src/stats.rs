use std::path::{Path, PathBuf};

use clap::Args;
use hmmtrack_core::experiments::{welch_t_test, StatsReport, TrackerVariant};

use crate::{parse_range, read_json, CliError, Result};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// First run directory.
    run_a: PathBuf,
    /// Second run directory.
    run_b: PathBuf,
    /// Variant curve to take from both runs.
    #[arg(long, default_value = "adaptive")]
    variant: TrackerVariant,
    /// Variant for the second run, when it differs.
    #[arg(long)]
    variant_b: Option<TrackerVariant>,
    /// Games to compare, e.g. 8-10. Defaults to every game.
    #[arg(long, value_parser = parse_range)]
    games: Option<(usize, usize)>,
}

fn sample(run: &Path, variant: TrackerVariant, games: Option<(usize, usize)>) -> Result<Vec<f64>> {
    let report: StatsReport = read_json(&run.join("report.json"))?;
    let curve = report
        .curve(variant)
        .ok_or_else(|| CliError::Usage(format!("{} has no {variant} curve", run.display())))?;
    let d = &curve.per_game_mean_distance;
    let (lo, hi) = games.unwrap_or((1, d.len()));
    if hi > d.len() {
        return Err(CliError::Usage(format!(
            "{} has only {} games",
            run.display(),
            d.len()
        )));
    }
    Ok(d[lo - 1..hi].to_vec())
}

pub fn run(args: StatsArgs) -> Result<()> {
    let a = sample(&args.run_a, args.variant, args.games)?;
    let b = sample(
        &args.run_b,
        args.variant_b.unwrap_or(args.variant),
        args.games,
    )?;
    let r = welch_t_test(&a, &b)?;
    println!("t = {}", r.t);
    println!("df = {}", r.df);
    println!("p = {}", r.p);
    Ok(())
}
