//! Data-parallel helpers with a sequential fallback.
//!
//! Work is always cut into the same fixed partition of blocks and the
//! per-block results are returned in block order, so reductions performed
//! by the caller are bit-identical whatever the executor or thread count.

use std::ops::Range;

/// Execution strategy for data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled; otherwise identical
    /// to `Sequential`.
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

/// Splits `0..len` into at most `blocks` contiguous ranges of near-equal size.
pub fn partition(len: usize, blocks: usize) -> Vec<Range<usize>> {
    let blocks = blocks.max(1).min(len.max(1));
    let base = len / blocks;
    let extra = len % blocks;
    let mut out = Vec::with_capacity(blocks);
    let mut start = 0;
    for b in 0..blocks {
        let size = base + usize::from(b < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

/// Maps `f` over the fixed block partition of `0..len`; results come back in
/// block order.
pub fn map_blocks<T, F>(exec: Exec, len: usize, blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let parts = partition(len, blocks);
    map_items(exec, parts, f)
}

/// Maps `f` over owned items, preserving order.
pub fn map_items<I, T, F>(exec: Exec, items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
        _ => items.into_iter().map(f).collect(),
    }
}

/// Runs `f` inside a pool capped at `threads` workers. Without the
/// `parallel` feature this just calls `f`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}
