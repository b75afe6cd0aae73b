//! Per-agent execution: sequential, or data-parallel over agents via rayon.
//!
//! Each agent's arithmetic is identical in both modes, so parallel results
//! match the sequential (canonical) ones bit for bit. Without the `parallel`
//! feature, [`Execution::Parallel`] silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Canonical mode: agents processed in index order on the calling thread.
    #[default]
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Apply `f(agent, row)` to every `width`-sized row of `data`.
    pub fn for_each_row<F>(self, data: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
            return;
        }
        data.chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }

    /// Like [`Execution::for_each_row`] over two equally shaped buffers.
    pub fn for_each_row2<F>(self, a: &mut [f64], b: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64], &mut [f64]) + Sync + Send,
    {
        debug_assert_eq!(a.len(), b.len());
        if width == 0 {
            return;
        }
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            a.par_chunks_mut(width)
                .zip(b.par_chunks_mut(width))
                .enumerate()
                .for_each(|(i, (ra, rb))| f(i, ra, rb));
            return;
        }
        a.chunks_mut(width)
            .zip(b.chunks_mut(width))
            .enumerate()
            .for_each(|(i, (ra, rb))| f(i, ra, rb));
    }

    /// Like [`Execution::for_each_row`] over three equally shaped buffers.
    pub fn for_each_row3<F>(self, a: &mut [f64], b: &mut [f64], c: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64], &mut [f64], &mut [f64]) + Sync + Send,
    {
        debug_assert_eq!(a.len(), b.len());
        debug_assert_eq!(a.len(), c.len());
        if width == 0 {
            return;
        }
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            a.par_chunks_mut(width)
                .zip(b.par_chunks_mut(width))
                .zip(c.par_chunks_mut(width))
                .enumerate()
                .for_each(|(i, ((ra, rb), rc))| f(i, ra, rb, rc));
            return;
        }
        a.chunks_mut(width)
            .zip(b.chunks_mut(width))
            .zip(c.chunks_mut(width))
            .enumerate()
            .for_each(|(i, ((ra, rb), rc))| f(i, ra, rb, rc));
    }

    /// `(0..n).map(f)` collected in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}
