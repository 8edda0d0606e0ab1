use std::path::PathBuf;

use clap::Args;
use hmmtrack_core::experiments::{load_plan, simulate};

use crate::Result;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Plan file (key = value lines).
    #[arg(long)]
    plan: PathBuf,
    /// Overrides the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory. Defaults to runs/<plan name>_seed<seed>.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let (mut config, map) = load_plan(&args.plan)?;
    if let Some(seed) = args.seed {
        config.plan.seed = seed;
    }
    let out = args.out.unwrap_or_else(|| {
        let stem = args
            .plan
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        PathBuf::from("runs").join(format!("{stem}_seed{}", config.plan.seed))
    });
    let report = simulate(&config, map, &out)?;

    for curve in &report.variants {
        let values: Vec<String> = curve
            .per_game_mean_distance
            .iter()
            .map(|d| format!("{d:.3}"))
            .collect();
        println!("{:<18} {}", curve.variant, values.join(" "));
    }
    for c in &report.comparisons {
        println!(
            "{}: t = {:.4}, df = {:.2}, p = {:.4e}",
            c.label, c.t, c.df, c.p
        );
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    println!("wrote {}", out.display());
    Ok(())
}
