//! Data-parallel map with a sequential fallback.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; `None` uses the global pool. Without the
    /// `parallel` feature this runs sequentially.
    Parallel { threads: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            t => Execution::Parallel { threads: t },
        }
    }

    /// Number of workers this execution will use.
    pub fn workers(&self) -> usize {
        match self {
            Execution::Sequential => 1,
            Execution::Parallel { threads: Some(n) } => *n,
            Execution::Parallel { threads: None } => default_workers(),
        }
    }
}

#[cfg(feature = "parallel")]
fn default_workers() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn default_workers() -> usize {
    1
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>, String>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok(items.iter().map(f).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            match threads {
                None => Ok(items.par_iter().map(f).collect()),
                Some(n) => {
                    let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?;
                    Ok(pool.install(|| items.par_iter().map(f).collect()))
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => Ok(items.iter().map(f).collect()),
    }
}
