use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

#[derive(Debug, Default)]
pub struct Metrics {
    pub renders: AtomicU64,
    pub render_us: AtomicU64,
    pub last_render_us: AtomicU64,
}

impl Metrics {
    pub fn record_render(&self, d: Duration) {
        let us = d.as_micros() as u64;
        self.renders.fetch_add(1, Ordering::Relaxed);
        self.render_us.fetch_add(us, Ordering::Relaxed);
        self.last_render_us.store(us, Ordering::Relaxed);
    }
}
