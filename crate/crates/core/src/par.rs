//! Order-preserving parallel map; sequential without the `parallel` feature.

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<R: Send, F: Fn(usize) -> R + Sync + Send>(range: std::ops::Range<usize>, f: F) -> Vec<R> {
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<R, F: Fn(usize) -> R>(range: std::ops::Range<usize>, f: F) -> Vec<R> {
    range.map(f).collect()
}
