//! Execution backend for the data-parallel kernels.
//!
//! With the `parallel` feature the kernels split amplitude and assignment
//! ranges across the rayon pool. Without it, or with [`Exec::Sequential`],
//! they run on the calling thread. Reductions are always performed over
//! fixed-size chunks in index order, so both backends return bit-identical
//! floating-point results.

/// Chunk length used by every ordered reduction.
pub const REDUCE_CHUNK: usize = 1 << 12;

/// Below this many elements the parallel backend runs sequentially anyway.
pub const PAR_THRESHOLD: usize = 1 << 13;

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
    /// Whether work over `len` elements should actually fan out.
    #[inline]
    pub fn fans_out(self, len: usize) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel && len >= PAR_THRESHOLD
    }
}

/// Ordered chunked sum of `f(i)` over `0..len`.
pub fn chunked_sum<F>(exec: Exec, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_chunks = len.div_ceil(REDUCE_CHUNK);
    let chunk = |c: usize| -> f64 {
        let start = c * REDUCE_CHUNK;
        let end = (start + REDUCE_CHUNK).min(len);
        (start..end).map(&f).sum::<f64>()
    };
    #[cfg(feature = "parallel")]
    if exec.fans_out(len) {
        use rayon::prelude::*;
        let partials: Vec<f64> = (0..n_chunks).into_par_iter().map(chunk).collect();
        return partials.into_iter().sum();
    }
    let _ = exec;
    (0..n_chunks).map(chunk).sum()
}

/// Fill `out[i] = f(i)`.
pub fn fill_indexed<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.fans_out(out.len()) {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
        return;
    }
    let _ = exec;
    out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

/// Map over independent items, preserving order.
pub fn map_items<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Exec::Parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_is_backend_independent() {
        let len = 3 * REDUCE_CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = chunked_sum(Exec::Sequential, len, f);
        let b = chunked_sum(Exec::Parallel, len, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(chunked_sum(Exec::default(), 0, |_| 1.0), 0.0);
    }
}
