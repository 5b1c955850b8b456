//! Command-line driver for wigvol: field dumps, parameter sweeps,
//! verification suites and plot scripts.

pub mod config;
pub mod error;
pub mod plot;
pub mod sweep;
pub mod verify;

/// Size the global rayon pool: explicit value, else WIGVOL_THREADS, else rayon's default.
pub fn init_threads(threads: Option<usize>) {
    let n = threads.or_else(|| std::env::var("WIGVOL_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n.filter(|&n| n > 0) {
        // a second call (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
