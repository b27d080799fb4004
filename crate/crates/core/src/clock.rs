//! Time sources. All timestamps are integer milliseconds.

use std::time::Instant;

pub type Millis = u64;

pub trait Clock {
    fn now_ms(&self) -> Millis;
}

/// Simulated time. Only moves forward, and only when told to.
#[derive(Debug, Default, Clone)]
pub struct VirtualClock {
    now: Millis,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves the clock to `at`. Earlier instants are ignored.
    pub fn advance_to(&mut self, at: Millis) {
        self.now = self.now.max(at);
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self) -> Millis {
        self.now
    }
}

/// Wall-clock milliseconds since construction, multiplied by `scale`.
///
/// The HTTP service uses it to drive the virtual clock, so a scale of
/// 100 replays a 1 s task in 10 ms of real time.
#[derive(Debug, Clone)]
pub struct ScaledWallClock {
    origin: Instant,
    scale: f64,
}

impl ScaledWallClock {
    pub fn new(scale: f64) -> Self {
        assert!(scale > 0.0, "time scale must be positive");
        Self {
            origin: Instant::now(),
            scale,
        }
    }
}

impl Clock for ScaledWallClock {
    fn now_ms(&self) -> Millis {
        (self.origin.elapsed().as_secs_f64() * 1000.0 * self.scale) as Millis
    }
}
