//! Order-preserving parallel map over grid points.

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::error::{Error, Result};

/// Applies `f` to every item on `workers` threads (0 = rayon default) and
/// returns results in input order. The first failing index wins, so the
/// reported error does not depend on scheduling.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync,
{
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<R>> = pool.install(|| items.par_iter().enumerate().map(|(k, x)| f(k, x)).collect());
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order_for_any_worker_count() {
        let xs: Vec<u64> = (0..200).collect();
        let one = par_map(&xs, 1, |_, &x| Ok(x * x)).unwrap();
        let four = par_map(&xs, 4, |_, &x| Ok(x * x)).unwrap();
        assert_eq!(one, four);
        assert_eq!(one[13], 169);
    }

    #[test]
    fn reports_lowest_failing_index() {
        let xs: Vec<usize> = (0..100).collect();
        let err = par_map(&xs, 4, |k, _| if k % 30 == 7 { Err(Error::invalid(format!("{k}"))) } else { Ok(k) })
            .unwrap_err();
        assert!(err.to_string().contains(": 7"), "{err}");
    }
}
