//! Sample-path primitives shared by the queue simulator and the estimators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::{OFF, ON};

/// Deterministic per-replica stream: same `(seed, stream)` always yields the
/// same sequence regardless of which thread runs it.
pub fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exponential variate with the given rate; infinite when the rate is zero.
pub fn exp_sample<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln() / rate
}

pub fn poisson_sample<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        // multiplication method
        let limit = (-mean).exp();
        let mut k = 0u64;
        let mut prod = rng.random::<f64>();
        while prod > limit {
            k += 1;
            prod *= rng.random::<f64>();
        }
        return k;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Draws `ON` with probability `p_on`.
pub fn initial_state<R: Rng + ?Sized>(rng: &mut R, p_on: f64) -> usize {
    if bernoulli(rng, p_on) {
        ON
    } else {
        OFF
    }
}

/// Continuous-time ON/OFF chain with OFF->ON rate `up` and ON->OFF rate `down`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOffCtmc {
    pub up: f64,
    pub down: f64,
}

impl OnOffCtmc {
    pub fn exit_rate(&self, state: usize) -> f64 {
        if state == ON {
            self.down
        } else {
            self.up
        }
    }

    /// Runs the chain for `duration` from `state`; returns the final state
    /// and the time spent ON.
    pub fn advance<R: Rng + ?Sized>(&self, rng: &mut R, mut state: usize, duration: f64) -> (usize, f64) {
        let mut remaining = duration;
        let mut on_time = 0.0;
        loop {
            let hold = exp_sample(rng, self.exit_rate(state));
            if hold >= remaining {
                if state == ON {
                    on_time += remaining;
                }
                return (state, on_time);
            }
            if state == ON {
                on_time += hold;
            }
            remaining -= hold;
            state = 1 - state;
        }
    }
}
