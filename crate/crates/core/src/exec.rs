//! Batch execution with an optional rayon backend.
//!
//! Work is cut into fixed-size batches whose boundaries depend only on the
//! problem size. Each batch draws from its own forked stream and results are
//! combined in batch order, so parallel and sequential runs agree bit for bit.

/// How batched work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on; otherwise runs
    /// sequentially.
    #[default]
    Parallel,
}

/// Split `total` items into batches of at most `batch` items, returning the
/// `(batch_index, len)` of each.
pub(crate) fn batches(total: u64, batch: u64) -> Vec<(u64, u64)> {
    let batch = batch.max(1);
    let full = total / batch;
    let rem = total % batch;
    let mut out: Vec<(u64, u64)> = (0..full).map(|i| (i, batch)).collect();
    if rem > 0 {
        out.push((full, rem));
    }
    out
}

/// Map `f` over `items`, keeping the input order in the output.
pub(crate) fn map_ordered<I, T, F>(exec: Execution, items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        Execution::Parallel => parallel_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_split() {
        assert_eq!(batches(10, 4), vec![(0, 4), (1, 4), (2, 2)]);
        assert_eq!(batches(8, 4), vec![(0, 4), (1, 4)]);
        assert!(batches(0, 4).is_empty());
    }

    #[test]
    fn order_is_kept() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map_ordered(Execution::Sequential, items.clone(), |x| x * x);
        let par = map_ordered(Execution::Parallel, items, |x| x * x);
        assert_eq!(seq, par);
    }
}
