//! Scenario-, replication- and sweep-level parallelism.
//!
//! Every data-parallel loop in the crate goes through [`Execution`]. With the
//! `parallel` feature (on by default) `Execution::Parallel` fans out over the
//! rayon pool; without it both variants run sequentially. Output order always
//! matches input order, so results do not depend on the execution mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `true` when this mode will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..n`, collecting results in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps `f` over a slice, collecting results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        self.map_range(items.len(), |i| f(i, &items[i]))
    }
}

/// Caps the global rayon pool. Returns `false` if the pool was already built
/// (or when compiled without the `parallel` feature).
pub fn init_thread_pool(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}
