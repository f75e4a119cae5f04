//! Minimal scoped-thread map. The worker count is capped by the
//! `NEEDLE_THREADS` environment variable when set.

pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("NEEDLE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        Some(n) if n >= 1 => n.min(avail.max(1)),
        _ => avail,
    }
}

/// Applies `f` to every item, splitting the index range over scoped
/// threads; output order matches input order.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let workers = thread_count().min(items.len().max(1));
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let mut out: Vec<Option<U>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);
    let out_chunks: Vec<&mut [Option<U>]> = out.chunks_mut(chunk).collect();
    std::thread::scope(|scope| {
        for (ci, out_chunk) in out_chunks.into_iter().enumerate() {
            let f = &f;
            let base = ci * chunk;
            let in_chunk = &items[base..(base + out_chunk.len())];
            scope.spawn(move || {
                for (slot, item) in out_chunk.iter_mut().zip(in_chunk) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    out.into_iter().map(|v| v.unwrap()).collect()
}
