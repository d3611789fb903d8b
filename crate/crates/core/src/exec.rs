//! Sequential or data-parallel execution of independent work items.
//!
//! Multi-start DBMR, k-means restarts and trajectory integration all map an
//! index range through a pure function. With the `parallel` feature the map
//! runs on the rayon pool; without it, [`Execution::Parallel`] silently
//! degrades to a sequential loop. Results are always returned in index order,
//! so the outcome never depends on scheduling.

/// How to evaluate a batch of independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Evaluate `f(0), ..., f(len - 1)` and collect the results in order.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }
}
