//! Data-parallel execution with a sequential fallback.
//!
//! Without the `parallel` feature, [`Execution::Parallel`] silently runs
//! sequentially. Results are always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work on more than one thread.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    pub fn is_parallel(self) -> bool {
        self == Execution::Parallel && Self::parallel_available()
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Maps over `0..n`.
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

    pub fn join<A, B, RA, RB>(self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return rayon::join(a, b);
        }
        (a(), b())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&items, |x| x * x);
        let par = Execution::Parallel.map(&items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(
            Execution::Parallel.map_range(10, |i| i + 1),
            (1..=10).collect::<Vec<_>>()
        );
    }

    #[test]
    fn join_returns_both() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            assert_eq!(exec.join(|| 1, || "b"), (1, "b"));
        }
    }
}
