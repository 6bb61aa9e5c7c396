use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source for the limiter and retry backoff.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Manually driven clock: `sleep` advances time instantly. Used by tests to
/// check pacing without waiting.
#[derive(Debug, Default)]
pub struct SimulatedClock {
    now: Mutex<Duration>,
    slept: Mutex<Vec<Duration>>,
}

impl SimulatedClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }

    /// Every sleep requested so far, in order.
    pub fn sleeps(&self) -> Vec<Duration> {
        self.slept.lock().unwrap().clone()
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.slept.lock().unwrap().push(d);
        self.advance(d);
    }
}

/// Sliding-window limiter: at most `capacity` grants in any window of
/// `window` length. A rate of `r` requests per second becomes
/// `capacity = floor(r)` per second, or one grant per `1/r` seconds when
/// `r < 1`.
pub struct RateLimiter {
    clock: Arc<dyn Clock>,
    capacity: usize,
    window: Duration,
    grants: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn per_second(rate: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(rate > 0.0 && rate.is_finite(), "rate must be positive");
        let (capacity, window) = if rate >= 1.0 {
            (rate.floor() as usize, Duration::from_secs(1))
        } else {
            (1, Duration::from_secs_f64(1.0 / rate))
        };
        RateLimiter { clock, capacity, window, grants: Mutex::new(VecDeque::new()) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn window(&self) -> Duration {
        self.window
    }

    /// Blocks until a grant is available and returns the grant time.
    pub fn acquire(&self) -> Duration {
        let mut grants = self.grants.lock().unwrap();
        loop {
            let now = self.clock.now();
            while grants.front().is_some_and(|&t| t + self.window <= now) {
                grants.pop_front();
            }
            if grants.len() < self.capacity {
                grants.push_back(now);
                return now;
            }
            let oldest = *grants.front().expect("non-empty at capacity");
            self.clock.sleep(oldest + self.window - now);
        }
    }
}
