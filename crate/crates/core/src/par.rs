//! Data-parallel helpers with a sequential fallback.
//!
//! Pure analysis passes (per-file parsing, pairwise edge inference, scope
//! construction) fan out over independent items. With the `parallel` feature
//! enabled (the default) they run on rayon; without it the same entry points
//! degrade to plain iteration. Order of results always matches input order,
//! so outputs are identical in both builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving input order in the output.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential twin of [`map_collect`], always available.
///
/// Kept as a separate entry point so benchmarks can compare the two paths
/// within a single build.
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
