use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Minimum-interval limiter shared by every stage that talks to remote APIs.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_second(requests: f64) -> Self {
        let interval = if requests <= 0.0 || !requests.is_finite() {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(1.0 / requests)
        };
        RateLimiter {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    pub fn unlimited() -> Self {
        Self::per_second(0.0)
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may issue one request.
    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut slot = self.next_slot.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let start = match *slot {
                Some(t) if t > now => t,
                _ => now,
            };
            *slot = Some(start + self.interval);
            start.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn spaces_requests() {
        let limiter = Arc::new(RateLimiter::per_second(200.0));
        let start = Instant::now();
        std::thread::scope(|s| {
            for _ in 0..4 {
                let l = limiter.clone();
                s.spawn(move || {
                    for _ in 0..5 {
                        l.acquire();
                    }
                });
            }
        });
        // 20 requests at 5ms spacing: the last starts at >= 95ms
        assert!(start.elapsed() >= Duration::from_millis(90), "{:?}", start.elapsed());
    }

    #[test]
    fn unlimited_never_waits() {
        let l = RateLimiter::unlimited();
        let start = Instant::now();
        for _ in 0..1000 {
            l.acquire();
        }
        assert!(start.elapsed() < Duration::from_millis(50));
    }
}
