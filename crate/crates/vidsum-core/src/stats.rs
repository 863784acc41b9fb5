//! Dataset statistics: exact integer tallies and their ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VideoRecord;

/// Name of the caption tokenizer used for word counts. The choice matters
/// for comparability, so it is carried in the output.
pub const TOKENIZER: &str = "whitespace";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub num_videos: u64,
    pub num_captions: u64,
    pub num_keyframes: u64,
    pub num_words: u64,
    pub avg_captions_per_video: f64,
    pub avg_keyframes_per_caption: f64,
    pub avg_words_per_caption: f64,
    pub tokenizer: String,
}

/// Tally the dataset. Averages are ratios of the exact integer tallies, so
/// they are invariant to record order and combine linearly across dataset
/// concatenation.
pub fn compute_stats(records: &[VideoRecord]) -> Result<DatasetStats> {
    if records.is_empty() {
        return Err(Error::validation("stats: empty dataset"));
    }
    let mut num_captions = 0u64;
    let mut num_keyframes = 0u64;
    let mut num_words = 0u64;
    for record in records {
        num_captions += record.references.len() as u64;
        for slot in &record.references {
            num_keyframes += slot.keyframes.len() as u64;
            num_words += slot.caption.split_whitespace().count() as u64;
        }
    }
    let num_videos = records.len() as u64;
    Ok(DatasetStats {
        num_videos,
        num_captions,
        num_keyframes,
        num_words,
        avg_captions_per_video: num_captions as f64 / num_videos as f64,
        avg_keyframes_per_caption: num_keyframes as f64 / num_captions as f64,
        avg_words_per_caption: num_words as f64 / num_captions as f64,
        tokenizer: TOKENIZER.to_string(),
    })
}

/// Aligned plain-text rendering.
pub fn render_table(stats: &DatasetStats) -> String {
    let rows = [
        ("videos", format!("{}", stats.num_videos)),
        ("captions / video", format!("{:.2}", stats.avg_captions_per_video)),
        ("keyframes / caption", format!("{:.2}", stats.avg_keyframes_per_caption)),
        ("words / caption", format!("{:.2}", stats.avg_words_per_caption)),
        ("tokenizer", stats.tokenizer.clone()),
    ];
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap();
    let value_width = rows.iter().map(|(_, v)| v.len()).max().unwrap();
    let mut out = String::new();
    for (label, value) in rows {
        out.push_str(&format!("{label:<label_width$}  {value:>value_width$}\n"));
    }
    out
}
