//! Execution policy for the data-parallel inner loops.
//!
//! Every parallel loop in the crate produces its results in index order and
//! reduces them sequentially afterwards, so switching between the two modes
//! never changes a single bit of output.

use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Selects the execution mode for subsequent calls. `Parallel` is a no-op
/// request when the crate is built without the `parallel` feature.
pub fn set_execution(mode: Execution) {
    FORCE_SEQUENTIAL.store(mode == Execution::Sequential, Ordering::Relaxed);
}

pub fn execution() -> Execution {
    if cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed) {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if execution() == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive chunks of `data` of length `chunk`, passing the
/// chunk index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if execution() == Execution::Parallel {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
    }
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
