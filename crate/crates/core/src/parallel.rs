use rayon::ThreadPoolBuilder;

use crate::error::{Error, Result};

/// Runs `op` inside a dedicated rayon pool with `workers` threads (0 = one per core).
pub fn in_pool<T, F>(workers: usize, op: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(op))
}
