//! Data-parallel map helpers with a sequential fallback.
//!
//! All Monte Carlo drivers fan out over independently seeded samples through
//! [`map_indexed`], which dispatches to rayon when the `parallel` feature is
//! enabled and to a plain loop otherwise. Results are collected in index
//! order and reduced sequentially, so output is bit-identical regardless of
//! worker count or feature selection.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to each index in `0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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
        map_indexed_seq(n, f)
    }
}

/// Sequential reference implementation of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Configure the global worker pool; call once at startup. `0` keeps the
/// library default (one worker per logical CPU). No-op without `parallel`.
pub fn configure_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        // ignore the error if a global pool was already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |i: usize| (i as f64).sin() * 1e6;
        let a = map_indexed(1000, f);
        let b = map_indexed_seq(1000, f);
        assert_eq!(a, b);
    }
}
