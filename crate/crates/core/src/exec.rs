//! Feature-dispatched map for embarrassingly parallel sweeps.
//!
//! With the `parallel` feature (the default) work fans out across the rayon
//! pool; without it the same closure runs sequentially. The bounds are
//! identical in both modes so toggling the feature never changes what
//! compiles, and all callers are pure with per-item seeds, so the results
//! are identical too.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Send + Sync,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Send + Sync,
{
    items.into_iter().map(f).collect()
}
