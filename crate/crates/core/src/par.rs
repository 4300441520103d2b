//! Optional data parallelism for the embarrassingly parallel map phases
//! (operator sweeps over coset bases, matrix assembly, exhaustive
//! equivariance).
//!
//! Built with the `parallel` feature the maps run on rayon when enabled at
//! runtime; without the feature, or when disabled (the default), they run
//! sequentially. Either way results come back in input order, so downstream
//! reports are byte-identical.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(false);

pub fn set_parallel(on: bool) {
    ENABLED.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::SeqCst)
}

/// Order-preserving map over a slice.
pub fn map_vec<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Order-preserving map over an index range.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}
