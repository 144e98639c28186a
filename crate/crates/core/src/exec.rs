//! Deterministic replication machinery.
//!
//! Every stochastic routine in this crate derives one RNG per work item from
//! a master seed and the item's index. Results are collected in index order,
//! so a run is reproducible bit for bit regardless of how many workers
//! execute it, and independent work items never share RNG state.
//!
//! With the `parallel` feature (on by default) replication loops fan out over
//! a rayon pool; without it they run sequentially through the same seeding
//! path. [`run_replications_seq`] is always available so the two code paths
//! can be compared directly (see `benches/par_vs_seq.rs`).

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Stream tags keep RNGs for unrelated purposes out of each other's way
/// even when they share a master seed and an index.
pub mod stream {
    pub const SAMPLING: u64 = 0x01;
    pub const MC_INTEGRAL: u64 = 0x02;
    pub const GAUSSIAN: u64 = 0x03;
    pub const MECKE: u64 = 0x04;
    pub const EXPERIMENT: u64 = 0x05;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `(master, stream, index)` into a single well-spread 64-bit seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index)
}

/// RNG for work item `index` of the given stream.
pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

/// Runs `reps` independent replications and collects results in index order.
///
/// Uses the rayon pool when the `parallel` feature is enabled; the output is
/// identical either way because item `i` always sees the same RNG.
pub fn run_replications<T, F>(reps: usize, master: u64, stream_tag: u64, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(master, stream_tag, i as u64);
                body(i, &mut rng)
            })
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_replications_seq(reps, master, stream_tag, body)
    }
}

/// Sequential twin of [`run_replications`]; same seeding, same output.
pub fn run_replications_seq<T, F>(reps: usize, master: u64, stream_tag: u64, body: F) -> Vec<T>
where
    F: Fn(usize, &mut ChaCha8Rng) -> T,
{
    (0..reps)
        .map(|i| {
            let mut rng = rng_for(master, stream_tag, i as u64);
            body(i, &mut rng)
        })
        .collect()
}

/// Runs `job` on a dedicated pool with the requested worker count.
///
/// `None` keeps the process default. With the `parallel` feature disabled the
/// worker count is irrelevant and `job` simply runs on the caller's thread.
pub fn with_worker_count<R, F>(workers: Option<usize>, job: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match workers {
            None => job(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("worker pool")
                .install(job),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        job()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn replications_are_order_independent() {
        let body = |i: usize, rng: &mut ChaCha8Rng| -> f64 { rng.random::<f64>() + i as f64 };
        let seq = run_replications_seq(64, 7, stream::SAMPLING, body);
        let par = run_replications(64, 7, stream::SAMPLING, body);
        assert_eq!(seq, par);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let body = |_: usize, rng: &mut ChaCha8Rng| rng.random::<u64>();
        let one = with_worker_count(Some(1), || run_replications(128, 3, 9, body));
        let eight = with_worker_count(Some(8), || run_replications(128, 3, 9, body));
        assert_eq!(one, eight);
    }

    #[test]
    fn streams_do_not_collide() {
        assert_ne!(derive_seed(1, 1, 0), derive_seed(1, 2, 0));
        assert_ne!(derive_seed(1, 1, 0), derive_seed(2, 1, 0));
        assert_ne!(derive_seed(1, 1, 0), derive_seed(1, 1, 1));
    }
}
