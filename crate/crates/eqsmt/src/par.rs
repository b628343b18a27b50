//! Ordered parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work runs on a rayon pool of the
//! requested size; without it, or with one job, items are processed in order
//! on the calling thread. Results always come back in input order.

/// Number of hardware threads, at least 1.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Maps `f` over `items` using up to `jobs` threads.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()),
        Err(_) => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
    }
}

/// Maps `f` over `items` in order on the calling thread.
#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], _jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..100).collect();
        let seq = map(&items, 1, |i, x| (i as u64) * x);
        let par = map(&items, 4, |i, x| (i as u64) * x);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 100);
    }
}
