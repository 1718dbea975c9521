//! Wall-clock helpers that degrade to no-ops on `wasm32`, where
//! `std::time::Instant` is unavailable.

#[cfg(not(target_arch = "wasm32"))]
mod imp {
    use std::time::{Duration, Instant};

    #[derive(Debug, Clone, Copy)]
    pub struct Stopwatch(Instant);

    impl Stopwatch {
        pub fn start() -> Self {
            Self(Instant::now())
        }

        pub fn elapsed_secs(&self) -> f64 {
            self.0.elapsed().as_secs_f64()
        }
    }

    #[derive(Debug, Clone, Copy)]
    pub struct Deadline(Instant);

    impl Deadline {
        pub fn after_secs(secs: f64) -> Self {
            Self(Instant::now() + Duration::from_secs_f64(secs.max(0.0)))
        }

        pub fn expired(&self) -> bool {
            Instant::now() >= self.0
        }
    }
}

#[cfg(target_arch = "wasm32")]
mod imp {
    #[derive(Debug, Clone, Copy)]
    pub struct Stopwatch;

    impl Stopwatch {
        pub fn start() -> Self {
            Self
        }

        pub fn elapsed_secs(&self) -> f64 {
            0.0
        }
    }

    #[derive(Debug, Clone, Copy)]
    pub struct Deadline;

    impl Deadline {
        pub fn after_secs(_secs: f64) -> Self {
            Self
        }

        pub fn expired(&self) -> bool {
            false
        }
    }
}

pub use imp::{Deadline, Stopwatch};
