//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool. Without it every call runs sequentially, so the
//! same code paths build on targets without threads.
//!
//! All helpers return results in index order, and reductions are performed
//! sequentially on the collected values, so results are bit-identical across
//! execution modes and thread counts.

/// How a sweep is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if is_parallel_available() {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[inline]
pub fn is_parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Map `f` over `0..count`, collecting in index order.
pub fn map_indexed<U, F>(exec: Execution, count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Map `f` over a slice, collecting in order.
pub fn map_slice<T, U, F>(exec: Execution, data: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            data.par_iter().map(f).collect()
        }
        _ => data.iter().map(f).collect(),
    }
}

/// Neumaier-compensated sum, evaluated left to right.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = map_indexed(Execution::Sequential, 10_000, f);
        let b = map_indexed(Execution::Parallel, 10_000, f);
        assert_eq!(a, b);
        assert_eq!(
            compensated_sum(a.iter().copied()).to_bits(),
            compensated_sum(b.iter().copied()).to_bits()
        );
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let vals = [1.0e16, 1.0, -1.0e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
    }
}
