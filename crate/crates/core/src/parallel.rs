//! Fan-out over independent work items.
//!
//! With the `parallel` feature the map runs on the rayon pool; without it,
//! or with [`Execution::Sequential`], items run in order on the caller's
//! thread. Output order always follows input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

pub fn is_parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Caps the global pool at `threads` workers. Only the first call has an
/// effect; returns `false` if the pool was already initialised or the
/// `parallel` feature is off.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

pub fn map_indexed<T, R, F>(items: &[T], execution: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match execution {
        Execution::Sequential => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        Execution::Parallel => map_parallel(items, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..257).collect();
        let seq = map_indexed(&items, Execution::Sequential, |i, x| (i as u64) * 1000 + x * x);
        let par = map_indexed(&items, Execution::Parallel, |i, x| (i as u64) * 1000 + x * x);
        assert_eq!(seq, par);
    }
}
