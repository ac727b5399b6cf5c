//! Deterministic parallel helpers.
//!
//! Every helper here produces bit-identical output whether the `parallel`
//! feature is enabled or not: parallelism is only ever applied to independent
//! outputs (map-collect), and reductions happen over per-item partials folded
//! in index order. Floating-point accumulation order is therefore fixed.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n` and collect the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Always-sequential variant, kept callable regardless of features so the
/// bench suite can compare both paths in one build.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sum per-item partials in index order (deterministic reduction).
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).into_iter().sum()
}

/// Sequential twin of [`sum_indexed`].
pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).sum()
}

/// Minimum of `f(0..n)` under a total order; deterministic because min over a
/// total order is associative and commutative.
pub fn min_indexed<T, F>(n: usize, f: F) -> Option<T>
where
    T: Send + Ord,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).min()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).min()
    }
}

/// Maximum counterpart of [`min_indexed`].
pub fn max_indexed<T, F>(n: usize, f: F) -> Option<T>
where
    T: Send + Ord,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).max()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_sums_are_bit_identical() {
        let f = |i: usize| ((i * 2654435761) % 1000) as f64 * 1e-3 + (i as f64).sqrt();
        let a = sum_indexed(10_000, f);
        let b = sum_indexed_seq(10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
