//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these fan out over rayon; without it
//! they run plain loops. Both paths produce bit-identical results: work is
//! split at fixed chunk boundaries and every floating-point reduction happens
//! in index order, so thread scheduling never changes a sum.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk size for per-chunk accumulation in training loops.
pub const CHUNK: usize = 32;

/// Maps `f` over `items`, preserving order.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Accumulates one partial result per fixed-size chunk of `items`, in chunk
/// order. Callers fold the partials sequentially, which keeps reductions
/// deterministic regardless of thread count.
pub fn chunk_accumulate<T, A, F>(items: &[T], chunk: usize, f: F) -> Vec<A>
where
    T: Sync,
    A: Send,
    F: Fn(&[T]) -> A + Sync + Send,
{
    assert!(chunk > 0);
    #[cfg(feature = "parallel")]
    {
        items.par_chunks(chunk).map(|c| f(c)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks(chunk).map(|c| f(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let ys = map_collect(&xs, |x| x * 2);
        assert_eq!(ys, xs.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn chunked_sum_matches_sequential_sum_order() {
        // Partial sums folded in chunk order equal the plain chunked loop.
        let xs: Vec<f64> = (0..997).map(|i| (i as f64).sin()).collect();
        let partials = chunk_accumulate(&xs, CHUNK, |c| c.iter().sum::<f64>());
        let total: f64 = partials.iter().sum();
        let reference: f64 = xs
            .chunks(CHUNK)
            .map(|c| c.iter().sum::<f64>())
            .sum();
        assert_eq!(total.to_bits(), reference.to_bits());
    }
}
