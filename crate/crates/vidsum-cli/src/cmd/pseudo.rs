//! `vidsum pseudo-gen`: deterministic synthetic span-structured instances
//! from an image-caption source pool.

use std::path::PathBuf;

use vidsum_core::pseudo::{gen_dataset, PseudoConfig, SourceMode};
use vidsum_core::Result;

use crate::cmd::ensure_out_dir;
use crate::manifest::ManifestBuilder;

#[derive(Debug, clap::Args)]
pub struct PseudoGenArgs {
    /// Source collection JSONL (image features + captions).
    #[arg(long)]
    pub source: PathBuf,
    /// Keyframe-caption pairs per instance.
    #[arg(long)]
    pub n: usize,
    /// Frames per generated instance.
    #[arg(long)]
    pub encoder_len: usize,
    /// Number of instances to generate.
    #[arg(long)]
    pub count: usize,
    /// Master seed; instance i derives seed ^ i.
    #[arg(long)]
    pub seed: u64,
    /// Noise scale relative to the mean feature value.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// How instances draw their source pairs.
    #[arg(long, value_enum, default_value_t = Mode::Sample)]
    pub mode: Mode,
    /// Draw an independent noise factor per element instead of per frame.
    #[arg(long)]
    pub noise_per_element: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Uniform distinct draws from the whole pool.
    Sample,
    /// One instance per story, in first-seen order.
    Story,
}

pub fn run(args: &PseudoGenArgs) -> Result<()> {
    let mut cfg = PseudoConfig::new(args.n, args.encoder_len, args.seed);
    cfg.beta = args.beta;
    cfg.noise_per_element = args.noise_per_element;
    let mode = match args.mode {
        Mode::Sample => SourceMode::Sample,
        Mode::Story => SourceMode::Story,
    };

    let mut manifest = ManifestBuilder::new(
        "pseudo-gen",
        serde_json::json!({
            "source": args.source.display().to_string(),
            "config": cfg,
            "mode": mode,
            "count": args.count,
        }),
    );
    manifest.input_file(&args.source)?;

    ensure_out_dir(&args.out)?;
    let pseudo_manifest = gen_dataset(&args.source, &args.out, args.count, &cfg, mode)?;
    for (name, digest) in &pseudo_manifest.feature_digests {
        manifest.input_digest(name, digest);
    }
    manifest.write(&args.out)?;

    println!("pseudo-gen: wrote {} instance(s)", pseudo_manifest.count);
    Ok(())
}
