//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper preserves input order in its output, so a parallel run and a
//! sequential run of the same seeded job produce identical results.

/// How independent work items (reads, functions, samples) are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon when the `parallel` feature is on, otherwise sequential.
    #[default]
    Auto,
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        match self {
            Execution::Sequential => false,
            Execution::Auto | Execution::Parallel => cfg!(feature = "parallel"),
        }
    }
}

/// Evaluates `f(0..len)` and returns the results in index order.
pub fn map_indices<T, F>(len: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Maps a slice in order.
pub fn map_slice<S, T, F>(items: &[S], exec: Execution, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Splits `0..total` into fixed-size chunks, folds each chunk with `fold`
/// and combines the chunk results left to right.
pub fn fold_chunks<T, F, C>(total: u64, chunk: u64, exec: Execution, fold: F, combine: C) -> Option<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Send + Sync,
    C: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let chunks = total.div_ceil(chunk) as usize;
    let parts = map_indices(chunks, exec, |c| {
        let start = c as u64 * chunk;
        fold(start..(start + chunk).min(total))
    });
    parts.into_iter().reduce(combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        for exec in [Execution::Auto, Execution::Sequential, Execution::Parallel] {
            let v = map_indices(1000, exec, |i| i * i);
            assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
        }
    }

    #[test]
    fn chunked_fold_matches_direct_sum() {
        let direct: u64 = (0..12_345u64).sum();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let s = fold_chunks(12_345, 1000, exec, |r| r.sum::<u64>(), |a, b| a + b);
            assert_eq!(s, Some(direct));
        }
        assert_eq!(fold_chunks(0, 10, Execution::Sequential, |r| r.count(), |a, b| a + b), None);
    }
}
