//! Worker policy shared by the quadrature, ensemble and sweep code.
//!
//! With the `parallel` feature the closures run on a dedicated rayon pool;
//! without it every call degrades to a plain sequential loop. Results are
//! always returned in input order, so downstream reductions do not depend on
//! scheduling.

/// Number of workers to use. `0` means "all available cores".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Workers(pub usize);

impl Workers {
    pub const SEQUENTIAL: Workers = Workers(1);

    pub fn all() -> Self {
        Workers(0)
    }

    pub fn is_sequential(self) -> bool {
        self.0 == 1 || !cfg!(feature = "parallel")
    }
}

impl Default for Workers {
    fn default() -> Self {
        Workers::all()
    }
}

/// Order-preserving map over `items`.
pub fn map<T, R, F>(workers: Workers, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers.is_sequential() || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    par::map(workers, items, f)
}

#[cfg(feature = "parallel")]
mod par {
    use super::Workers;
    use rayon::prelude::*;

    pub(super) fn map<T, R, F>(workers: Workers, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        if workers.0 == 0 {
            return items.par_iter().map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers.0).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
            // Pool creation only fails on resource exhaustion; the global pool
            // gives the same results.
            Err(_) => items.par_iter().map(f).collect(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod par {
    use super::Workers;

    pub(super) fn map<T, R, F>(_workers: Workers, items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }
}
