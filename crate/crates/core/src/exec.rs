//! Work distribution for embarrassingly parallel loops.
//!
//! An [`Executor`] evaluates `f(0), f(1), …, f(n-1)` and returns the results in
//! index order. Every stochastic work item derives its randomness from its own
//! index, so any executor yields the same output.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}
