//! Deterministic data-parallel helpers.
//!
//! Work is split into fixed-size index ranges and partial results are
//! combined in range order. Outputs are therefore bit-identical whether the
//! `parallel` feature is enabled or not, and for any worker count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default chunk length for event-sized work items.
pub(crate) const CHUNK: usize = 1 << 16;

pub(crate) fn split_ranges(len: usize, chunk: usize) -> Vec<Range<usize>> {
    assert!(chunk > 0);
    (0..len.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(len))
        .collect()
}

/// Maps fixed chunks of `[0, len)`, collecting results in chunk order.
pub(crate) fn map_ranges<R: Send>(
    len: usize,
    chunk: usize,
    f: impl Fn(Range<usize>) -> R + Sync + Send,
) -> Vec<R> {
    let ranges = split_ranges(len, chunk);
    #[cfg(feature = "parallel")]
    {
        ranges.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(f).collect()
    }
}

/// Sequential twin of [`map_ranges`]; used by the `*_seq` fallback entry
/// points and the benchmark baselines.
pub(crate) fn map_ranges_seq<R>(
    len: usize,
    chunk: usize,
    f: impl Fn(Range<usize>) -> R,
) -> Vec<R> {
    split_ranges(len, chunk).into_iter().map(f).collect()
}

/// Order-preserving map over `[0, n)` of cheap per-item work.
pub(crate) fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().with_min_len(256).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Order-preserving map where each item is itself a large unit of work
/// (grid candidates, frame rows), so every index may become its own task.
pub(crate) fn map_indices_heavy<R: Send>(
    n: usize,
    f: impl Fn(usize) -> R + Sync + Send,
) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
