//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) the map runs on rayon's pool;
//! without it the same call compiles to a plain iterator chain. Output
//! order always matches input order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to every item, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn par_map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Apply `f` to every item, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn par_map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    items.into_iter().map(f).collect()
}
