//! Deterministic data parallelism.
//!
//! The pipeline's heavy loops (scoring atoms, sampling kernel conditions)
//! are embarrassingly parallel maps over an index range. To keep outputs
//! byte-identical at any thread count, work is split into *contiguous*
//! index ranges, each worker fills its own slice, and the slices are
//! concatenated in range order — no atomics, no work stealing, no
//! reduction-order drift. Every arithmetic operation happens in the same
//! order as the serial loop; threads only change who executes it.

/// Map `f` over `0..n`, producing `Vec<T>` in index order.
///
/// `threads == 1` runs serially. Larger counts split `0..n` into at most
/// `threads` contiguous chunks. `f` must be pure (same index, same
/// output) for the determinism claim to hold; all closures here are.
pub fn parallel_map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    // Ceil-divide so every chunk but the last has equal length; chunk
    // boundaries depend only on (n, threads), not on timing.
    let chunk = n.div_ceil(threads);
    let mut out: Vec<Option<T>> = Vec::with_capacity(n);
    out.resize_with(n, || None);
    let slots = &mut out[..];
    std::thread::scope(|scope| {
        let mut rest = slots;
        let mut start = 0usize;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (mine, tail) = rest.split_at_mut(take);
            rest = tail;
            let base = start;
            start += take;
            let f = &f;
            scope.spawn(move || {
                for (off, slot) in mine.iter_mut().enumerate() {
                    *slot = Some(f(base + off));
                }
            });
        }
    });
    out.into_iter().map(|s| s.expect("worker filled its slice")).collect()
}
