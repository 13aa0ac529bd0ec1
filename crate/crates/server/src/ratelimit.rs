use std::collections::{HashMap, VecDeque};
use std::hash::Hash;
use std::sync::Mutex;
use std::time::{Duration, Instant};

const WINDOW: Duration = Duration::from_secs(1);

/// Sliding one-second window per key.
pub struct RateLimiter<K> {
    limit: u32,
    hits: Mutex<HashMap<K, VecDeque<Instant>>>,
}

impl<K: Eq + Hash + Clone> RateLimiter<K> {
    /// `limit == 0` disables limiting.
    pub fn new(limit: u32) -> Self {
        Self {
            limit,
            hits: Mutex::new(HashMap::new()),
        }
    }

    pub fn check(&self, key: &K) -> bool {
        self.check_at(key, Instant::now())
    }

    pub fn check_at(&self, key: &K, now: Instant) -> bool {
        if self.limit == 0 {
            return true;
        }
        let mut hits = self.hits.lock().expect("rate limiter lock");
        if hits.len() > 4096 {
            hits.retain(|_, q| q.back().is_some_and(|t| now.duration_since(*t) < WINDOW));
        }
        let q = hits.entry(key.clone()).or_default();
        while q.front().is_some_and(|t| now.duration_since(*t) >= WINDOW) {
            q.pop_front();
        }
        if q.len() >= self.limit as usize {
            return false;
        }
        q.push_back(now);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixth_in_a_second_is_rejected() {
        let rl = RateLimiter::new(5);
        let t0 = Instant::now();
        for i in 0..5 {
            assert!(rl.check_at(&1, t0 + Duration::from_millis(i * 100)));
        }
        assert!(!rl.check_at(&1, t0 + Duration::from_millis(900)));
        assert!(rl.check_at(&2, t0 + Duration::from_millis(900)));
        assert!(rl.check_at(&1, t0 + Duration::from_millis(1001)));
    }

    #[test]
    fn zero_disables() {
        let rl = RateLimiter::new(0);
        assert!((0..100).all(|_| rl.check(&"k")));
    }
}
