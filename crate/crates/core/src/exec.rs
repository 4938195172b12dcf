//! Execution policy for data-parallel loops.
//!
//! `Exec::Parallel` uses rayon when the `parallel` feature is enabled and
//! silently runs sequentially otherwise, so callers never need their own
//! `cfg` switches.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when work is actually spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Applies `f` to `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to each item, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Fills `out[i] = f(i)`.
    pub fn fill<R, F>(self, out: &mut [R], f: F)
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(Exec::Sequential.map_range(1000, f), Exec::Parallel.map_range(1000, f));
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(Exec::Sequential.map(&items, |x| x * 2), Exec::Parallel.map(&items, |x| x * 2));
        let mut a = vec![0.0; 64];
        let mut b = vec![0.0; 64];
        Exec::Sequential.fill(&mut a, f);
        Exec::Parallel.fill(&mut b, f);
        assert_eq!(a, b);
    }
}
