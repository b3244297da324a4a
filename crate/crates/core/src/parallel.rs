//! Per-node parallel maps.
//!
//! Each output entry is computed independently, so results do not depend on
//! the thread count. Reductions are always done serially by the callers.

use rayon::prelude::*;

/// Below this many nodes the serial path is faster than spawning work.
const PAR_THRESHOLD: usize = 4096;

/// Evaluates `f` at every index in `0..len`, in order.
pub fn map_nodes<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if len < PAR_THRESHOLD || rayon::current_num_threads() == 1 {
        (0..len).map(f).collect()
    } else {
        (0..len).into_par_iter().with_min_len(1024).map(f).collect()
    }
}

/// Caps the global pool at `threads` workers. Later calls are ignored.
pub fn init_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global();
}

/// Reads `YMH_THREADS` and configures the pool accordingly.
pub fn init_from_env() {
    if let Some(t) = std::env::var("YMH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        init_threads(t);
    }
}
