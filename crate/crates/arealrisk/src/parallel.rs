//! Scoped-thread [`Executor`].

use std::num::NonZeroUsize;
use std::thread;

use arealrisk_core::exec::Executor;

/// Splits `0..n` into one contiguous chunk per worker; results come back in
/// index order, so the output does not depend on the worker count.
#[derive(Debug, Clone, Copy)]
pub struct Threads {
    workers: NonZeroUsize,
}

impl Threads {
    pub fn new(workers: usize) -> Self {
        Self { workers: NonZeroUsize::new(workers).unwrap_or(NonZeroUsize::MIN) }
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self { workers: thread::available_parallelism().unwrap_or(NonZeroUsize::MIN) }
    }

    pub fn workers(&self) -> usize {
        self.workers.get()
    }
}

impl Executor for Threads {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.workers.get().min(n);
        if workers <= 1 {
            return (0..n).map(f).collect();
        }
        let chunk = n.div_ceil(workers);
        let f = &f;
        thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .step_by(chunk)
                .map(|start| s.spawn(move || (start..(start + chunk).min(n)).map(f).collect::<Vec<T>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for workers in [1, 2, 3, 8, 100] {
            let out = Threads::new(workers).map(37, |i| i * i);
            assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(Threads::new(4).map(0, |i| i).is_empty());
        assert_eq!(Threads::new(0).workers(), 1);
    }
}
