//! Data-parallel helpers. With the `parallel` feature (default) work is
//! spread over the rayon pool; without it the same closures run in order on
//! the calling thread. Results are always returned in index order, so output
//! never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..n` and collects the results in index order.
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

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Pairwise (tree) summation. The reduction order depends only on the
/// length of the input.
pub fn pairwise_sum<T, F>(items: &[T], zero: T, add: &F) -> T
where
    T: Clone,
    F: Fn(&T, &T) -> T,
{
    match items.len() {
        0 => zero,
        1 => items[0].clone(),
        n => {
            let (lo, hi) = items.split_at(n / 2);
            add(&pairwise_sum(lo, zero.clone(), add), &pairwise_sum(hi, zero, add))
        }
    }
}

/// True when compiled with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        let v = map_indexed(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn pairwise_matches_sequential_for_integers() {
        let xs: Vec<u64> = (1..=1001).collect();
        assert_eq!(pairwise_sum(&xs, 0, &|a, b| a + b), 1001 * 1002 / 2);
        assert_eq!(pairwise_sum(&[] as &[u64], 0, &|a, b| a + b), 0);
    }
}
