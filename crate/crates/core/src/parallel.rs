//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the hot loops — batch gradient
//! accumulation, replay-plan scoring, multi-seed training, evaluation
//! rollouts — fan out over rayon. Without it the same chunked code runs on
//! one thread. Chunk boundaries and reduction order are fixed up front, so
//! results are bit-identical across thread counts and across the two builds.
//!
//! `L2E_THREADS` caps the worker pool; it is read once at first use.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Cap the global worker pool from `L2E_THREADS`. Safe to call repeatedly;
/// only the first call can take effect.
pub fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(v) = std::env::var("L2E_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    // errors just mean a pool already exists
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    }
}

/// Number of workers the parallel build would use.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Ordered map over items, parallel when the feature is enabled.
pub fn ordered_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Always-sequential twin of [`ordered_map`], kept for benchmarking the two
/// code paths against each other.
pub fn ordered_map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Run independent jobs by index, parallel when enabled. Used for per-seed
/// agents and evaluation rollouts.
pub fn ordered_tasks<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Accumulate per-item loss and gradient contributions over fixed chunks.
///
/// Each chunk gets its own scratch and gradient buffer; chunk partials are
/// reduced sequentially in chunk order. Identical chunking in the parallel
/// and sequential builds keeps the floating-point result independent of the
/// thread count.
pub fn accumulate_chunked<T, S, F>(
    items: &[T],
    grad_len: usize,
    chunk_size: usize,
    make_scratch: impl Fn() -> S + Sync,
    f: F,
) -> (f64, Vec<f64>)
where
    T: Sync,
    S: Send,
    F: Fn(&mut S, &T, &mut [f64]) -> f64 + Sync,
{
    assert!(chunk_size >= 1);
    let run_chunk = |chunk: &[T]| {
        let mut grads = vec![0.0; grad_len];
        let mut scratch = make_scratch();
        let mut loss = 0.0;
        for item in chunk {
            loss += f(&mut scratch, item, &mut grads);
        }
        (loss, grads)
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<(f64, Vec<f64>)> = items.par_chunks(chunk_size).map(run_chunk).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<(f64, Vec<f64>)> = items.chunks(chunk_size).map(run_chunk).collect();

    let mut total = 0.0;
    let mut grads = vec![0.0; grad_len];
    for (loss, g) in partials {
        total += loss;
        for (acc, v) in grads.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    (total, grads)
}

/// Always-sequential twin of [`accumulate_chunked`] with the same chunking
/// and the same reduction order, so the two agree bitwise.
pub fn accumulate_chunked_sequential<T, S, F>(
    items: &[T],
    grad_len: usize,
    chunk_size: usize,
    make_scratch: impl Fn() -> S,
    f: F,
) -> (f64, Vec<f64>)
where
    F: Fn(&mut S, &T, &mut [f64]) -> f64,
{
    assert!(chunk_size >= 1);
    let mut total = 0.0;
    let mut grads = vec![0.0; grad_len];
    for chunk in items.chunks(chunk_size) {
        let mut local = vec![0.0; grad_len];
        let mut local_loss = 0.0;
        let mut scratch = make_scratch();
        for item in chunk {
            local_loss += f(&mut scratch, item, &mut local);
        }
        total += local_loss;
        for (acc, v) in grads.iter_mut().zip(&local) {
            *acc += v;
        }
    }
    (total, grads)
}
