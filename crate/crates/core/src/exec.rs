//! Execution strategy: data-parallel inner loops with a sequential fallback.
//!
//! The crate's hot loops (distance-field rows, shooting fans, grid
//! classification) are embarrassingly parallel and must give bit-identical
//! results regardless of execution order. All of them funnel through
//! [`par_map_indexed`], which preserves index order in its output, so the
//! only difference between the `parallel` feature being on or off is wall
//! time.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`par_map_indexed`], always compiled. Exists so the
/// benchmark suite can compare both strategies within one build.
pub fn seq_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Whether this build dispatches the hot loops through rayon.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
