//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature enabled the helpers fan work out over rayon;
//! without it (or with [`Execution::Sequential`]) they run in place. Results
//! are always collected in input order and reductions are summed in a fixed
//! order, so outputs are bit-identical whatever the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Use rayon when compiled with the `parallel` feature, sequential otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Ordered map over a slice.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Ordered map over `0..n`.
pub fn map_range<U, F>(exec: Execution, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `items` into fixed-size chunks, folds each chunk with `fold`, and
/// merges the partial results left to right with `merge`.
///
/// Chunk boundaries depend only on `chunk` so the floating-point summation
/// order is the same sequentially and in parallel.
pub fn chunked_reduce<T, A, F, M>(
    exec: Execution,
    items: &[T],
    chunk: usize,
    fold: F,
    mut merge: M,
) -> Option<A>
where
    T: Sync,
    A: Send,
    F: Fn(&[T]) -> A + Sync + Send,
    M: FnMut(&mut A, A),
{
    let chunk = chunk.max(1);
    let chunks: Vec<&[T]> = items.chunks(chunk).collect();
    let partials = map(exec, &chunks, |c| fold(c));
    let mut it = partials.into_iter();
    let mut acc = it.next()?;
    for p in it {
        merge(&mut acc, p);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let sum = |exec| {
            chunked_reduce(exec, &xs, 64, |c| c.iter().sum::<f64>(), |a, b| *a += b).unwrap()
        };
        assert_eq!(
            sum(Execution::Sequential).to_bits(),
            sum(Execution::Parallel).to_bits()
        );
        let a = map(Execution::Sequential, &xs, |x| x * 2.0);
        let b = map(Execution::Parallel, &xs, |x| x * 2.0);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_reduce_is_none() {
        let xs: [f64; 0] = [];
        assert!(chunked_reduce(Execution::Parallel, &xs, 4, |c| c.len(), |a, b| *a += b).is_none());
    }
}
