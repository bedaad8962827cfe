//! Data-parallel helpers with a sequential fallback.
//!
//! Every hot loop in the crate goes through these functions. With the
//! `parallel` feature they dispatch to rayon when the caller asks for
//! [`Exec::Parallel`]; without the feature, or with [`Exec::Sequential`],
//! they run a plain loop. Results are identical either way: each output
//! slot is written by exactly one closure call, and reductions are done
//! in a fixed chunk order.

use serde::{Deserialize, Serialize};

/// Execution policy for the data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this policy will actually run on the rayon pool.
    pub fn parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Sizes the global worker pool; call once, before any parallel work.
/// Without the `parallel` feature this only validates `n`.
pub fn set_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::Error::InvalidArgument("thread count must be >= 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(())
}

/// Fills `out[i] = f(i)`.
pub fn fill<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel() {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Applies `f(i, &mut out[i])` to every element.
pub fn for_each_mut<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel() {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, o)| f(i, o));
        return;
    }
    for (i, o) in out.iter_mut().enumerate() {
        f(i, o);
    }
}

/// Applies `f(chunk_index, chunk)` to consecutive chunks of `out`.
pub fn for_each_chunk_mut<T, F>(exec: Exec, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    for (i, c) in out.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

const SUM_CHUNK: usize = 1024;

/// Deterministic sum of `f(i)` for `i in 0..n`: fixed-size chunks summed
/// in index order, so the result does not depend on the thread count.
pub fn sum<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(SUM_CHUNK);
    let mut partial = vec![0.0; chunks];
    fill(exec, &mut partial, |c| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.iter().sum()
}

/// Deterministic maximum of `f(i)`; returns 0 for `n == 0`.
pub fn max<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(SUM_CHUNK);
    let mut partial = vec![0.0f64; chunks];
    fill(exec, &mut partial, |c| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(n);
        (lo..hi).map(&f).fold(0.0, f64::max)
    });
    partial.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_sums_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = sum(Exec::Sequential, 100_003, f);
        let b = sum(Exec::Parallel, 100_003, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(sum(Exec::Parallel, 0, |_| 1.0), 0.0);
        assert_eq!(max(Exec::Parallel, 0, |_| 1.0), 0.0);
    }

    #[test]
    fn fill_writes_every_slot() {
        let mut v = vec![0usize; 5000];
        fill(Exec::Parallel, &mut v, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
