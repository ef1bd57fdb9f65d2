//! Trial-level parallelism. With the `parallel` feature the map runs on the
//! rayon pool; without it, sequentially. Output order is index order either
//! way, so results do not depend on the feature or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Sizes the global pool once; later calls and `threads == 0` are no-ops.
pub fn set_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Sequential reference of [`map_indexed`], kept for benchmarks.
pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
