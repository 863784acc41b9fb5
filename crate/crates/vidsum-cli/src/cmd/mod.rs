//! One module per subcommand, plus shared plumbing.

pub mod akm;
pub mod beam;
pub mod eval;
pub mod filter;
pub mod pseudo;
pub mod select;
pub mod stats;

use std::path::Path;

use rayon::prelude::*;
use vidsum_core::{Error, Result};

/// Create the output directory (and parents) if needed.
pub(crate) fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Map `f` over `items` on the global thread pool, preserving input order.
/// On failure the FIRST error in input order is returned, so error reporting
/// does not depend on scheduling.
pub(crate) fn par_map_ordered<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Send + Sync,
{
    let results: Vec<Result<R>> = items.par_iter().map(f).collect();
    results.into_iter().collect()
}
