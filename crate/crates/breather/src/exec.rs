//! Scoped-thread executor for the per-level solves.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use breather_core::breather::{Entry, Executor};
use breather_core::Result;

/// Runs the jobs of one level on up to `threads` scoped threads.
#[derive(Debug, Clone, Copy)]
pub struct ThreadExecutor {
    pub threads: usize,
}

impl ThreadExecutor {
    pub fn new(threads: usize) -> Self {
        ThreadExecutor { threads: threads.max(1) }
    }

    /// `BREATHER_THREADS`, else the available parallelism.
    pub fn from_env() -> Self {
        let n = std::env::var("BREATHER_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        Self::new(n)
    }
}

impl Executor for ThreadExecutor {
    fn run(&self, jobs: &[i32], f: &(dyn Fn(i32) -> Result<Entry> + Sync)) -> Vec<Result<Entry>> {
        let workers = self.threads.min(jobs.len());
        if workers <= 1 {
            return jobs.iter().map(|&n| f(n)).collect();
        }
        let next = AtomicUsize::new(0);
        let out: Mutex<Vec<Option<Result<Entry>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= jobs.len() {
                        break;
                    }
                    let r = f(jobs[i]);
                    out.lock().unwrap()[i] = Some(r);
                });
            }
        });
        out.into_inner().unwrap().into_iter().map(|r| r.expect("job not run")).collect()
    }
}
