//! `vidsum filter`: remove annotated keyframes far from their caption's
//! feature centroid, emitting the filtered dataset and a variance report.

use std::path::PathBuf;

use vidsum_core::filter::{filter_video, FilterConfig, FilterReport};
use vidsum_core::model::{load_dataset, save_dataset, FeatureStore};
use vidsum_core::{io, Error, Result};

use crate::cmd::{ensure_out_dir, par_map_ordered};
use crate::manifest::ManifestBuilder;

#[derive(Debug, clap::Args)]
pub struct FilterArgs {
    /// Dataset JSON to filter.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory of VSFT feature files.
    #[arg(long)]
    pub features: PathBuf,
    /// Keyframes farther than mean + k_sigma * std from the slot centroid
    /// are removed.
    #[arg(long, default_value_t = 1.0)]
    pub k_sigma: f64,
    /// Keep at least this many keyframes per slot (closest first).
    #[arg(long, default_value_t = 1)]
    pub min_keep: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &FilterArgs) -> Result<()> {
    if !args.k_sigma.is_finite() {
        return Err(Error::validation("--k-sigma must be finite"));
    }
    let cfg = FilterConfig { k_sigma: args.k_sigma, min_keep: args.min_keep };

    let mut manifest = ManifestBuilder::new(
        "filter",
        serde_json::json!({
            "dataset": args.dataset.display().to_string(),
            "features": args.features.display().to_string(),
            "filter": cfg,
        }),
    );
    manifest.input_file(&args.dataset)?;
    manifest.input_dir(&args.features)?;

    let dataset = load_dataset(&args.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let store = FeatureStore::open(&args.features)?;

    let results = par_map_ordered(&dataset.records, |record| {
        let fm = store.load(&record.video_id)?;
        filter_video(record, &fm, &cfg)
    })?;

    let (filtered, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let report = FilterReport::from_videos(reports);

    ensure_out_dir(&args.out)?;
    save_dataset(&args.out.join("dataset_filtered.json"), &filtered)?;
    io::write_json_pretty(&args.out.join("filter_report.json"), &report)?;
    manifest.write(&args.out)?;

    println!(
        "filter: removed {}/{} annotations, mean slot variance {:.6} -> {:.6}",
        report.annotations_removed,
        report.annotations_before,
        report.mean_variance_before,
        report.mean_variance_after
    );
    Ok(())
}
