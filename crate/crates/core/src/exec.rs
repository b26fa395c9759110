//! Execution backend for the data-parallel loops (sweep grid points and
//! Monte Carlo trials). Both backends produce identical results; the
//! parallel one needs the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Defaults to `Parallel` when it is compiled in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Backend {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Backend {
    /// Maps `f` over `items`, keeping input order.
    pub(crate) fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Backend::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Backend::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Folds `0..n` into per-thread accumulators and merges them. `merge`
    /// must be associative and commutative for the result to be
    /// schedule-independent.
    pub(crate) fn fold_range<A, I, F, M>(self, n: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, u64) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            Backend::Sequential => {
                let _ = merge;
                (0..n).fold(init(), fold)
            }
            #[cfg(feature = "parallel")]
            Backend::Parallel => (0..n).into_par_iter().fold(&init, &fold).reduce(&init, &merge),
        }
    }
}
