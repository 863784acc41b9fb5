//! `vidsum stats`: corpus statistics table (always printed; also written
//! as JSON + text when an output directory is given).

use std::path::PathBuf;

use vidsum_core::model::load_dataset;
use vidsum_core::stats::{compute_stats, render_table};
use vidsum_core::{io, Result};

use crate::cmd::ensure_out_dir;
use crate::manifest::ManifestBuilder;

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    /// Dataset JSON to summarize.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory (optional; the table always goes to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &StatsArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new(
        "stats",
        serde_json::json!({ "dataset": args.dataset.display().to_string() }),
    );
    manifest.input_file(&args.dataset)?;

    let dataset = load_dataset(&args.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let stats = compute_stats(&dataset.records)?;
    let table = render_table(&stats);
    println!("{table}");

    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
        io::write_json_pretty(&out.join("stats.json"), &stats)?;
        io::write_atomic(&out.join("stats.txt"), format!("{table}\n").as_bytes())?;
        manifest.write(out)?;
    }
    Ok(())
}
