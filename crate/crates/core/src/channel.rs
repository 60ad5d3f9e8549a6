//! Two-state ON/OFF abstraction of a Rayleigh block-fading link driven at a
//! fixed rate.
//!
//! The squared fading gain `z` is unit-mean exponential. A block is ON when
//! `log2(1 + gamma * z) > R`, i.e. when `z > psi = (2^R - 1) / gamma`, so the
//! stationary ON probability is `exp(-psi)`. The channel memory decays at
//! `kappa = nu + mu`, which fixes the switching rates:
//!
//! ```text
//! nu = kappa * exp(-psi)          (OFF -> ON)
//! mu = kappa * (1 - exp(-psi))    (ON -> OFF)
//! ```
//!
//! Simulation samples the chain once per block of duration `T`. With
//! `kappa * T` large (the figures use `kappa = 50`, `T = 1`) successive
//! blocks are nearly independent and the channel is effectively memoryless
//! at block resolution; pick `kappa * T <= 2` when memory matters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-rate link parameters: linear SNR, rate in bits/block, memory decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub gamma: f64,
    pub rate: f64,
    pub kappa: f64,
}

impl ChannelSpec {
    pub fn new(gamma: f64, rate: f64, kappa: f64) -> Result<Self> {
        let spec = ChannelSpec { gamma, rate, kappa };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be positive and finite, got {}", self.gamma)));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::invalid(format!("kappa must be positive and finite, got {}", self.kappa)));
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::invalid(format!("rate must be non-negative and finite, got {}", self.rate)));
        }
        Ok(())
    }

    /// Outage threshold on the channel gain, `(2^R - 1) / gamma`.
    pub fn psi(&self) -> f64 {
        (self.rate * std::f64::consts::LN_2).exp_m1() / self.gamma
    }
}

/// Continuous-time ON/OFF service chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffChain {
    /// OFF -> ON rate.
    pub nu: f64,
    /// ON -> OFF rate.
    pub mu: f64,
    pub p_on: f64,
    pub psi: f64,
}

impl OnOffChain {
    pub fn kappa(&self) -> f64 {
        self.nu + self.mu
    }
}

/// Maps a channel spec onto its ON/OFF chain.
pub fn derive_chain(spec: &ChannelSpec) -> Result<OnOffChain> {
    spec.validate()?;
    let psi = spec.psi();
    let p_on = (-psi).exp();
    // 1 - e^{-psi} computed as -expm1(-psi) keeps mu accurate for tiny psi
    let p_off = -(-psi).exp_m1();
    Ok(OnOffChain { nu: spec.kappa * p_on, mu: spec.kappa * p_off, p_on, psi })
}

/// Shannon capacity `log2(1 + gamma * z)` of a block with gain `z`.
pub fn instantaneous_capacity(gamma: f64, z: f64) -> f64 {
    (gamma * z).ln_1p() / std::f64::consts::LN_2
}

/// A block is ON only when the capacity strictly exceeds the rate; `R == C`
/// is an outage.
pub fn is_on(rate: f64, capacity: f64) -> bool {
    capacity > rate
}

/// Per-block transition kernel over `{OFF, ON}` (row = from, column = to).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockKernel {
    pub p: [[f64; 2]; 2],
    pub block_duration: f64,
}

pub const OFF: usize = 0;
pub const ON: usize = 1;

impl BlockKernel {
    /// Row-vector times kernel.
    pub fn step(&self, dist: [f64; 2]) -> [f64; 2] {
        [
            dist[0] * self.p[0][0] + dist[1] * self.p[1][0],
            dist[0] * self.p[0][1] + dist[1] * self.p[1][1],
        ]
    }

    pub fn compose(&self, other: &BlockKernel) -> BlockKernel {
        let mut p = [[0.0; 2]; 2];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.p[i][0] * other.p[0][j] + self.p[i][1] * other.p[1][j];
            }
        }
        BlockKernel { p, block_duration: self.block_duration + other.block_duration }
    }
}

/// Exact transition probabilities of the chain over a block of duration `t`.
pub fn discretize(chain: &OnOffChain, t: f64) -> Result<BlockKernel> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("block duration must be positive, got {t}")));
    }
    let p_on = chain.p_on;
    let p_off = 1.0 - p_on;
    // 1 - e^{-kappa t}, accurate as t -> 0
    let mix = -(-chain.kappa() * t).exp_m1();
    let off_to_on = p_on * mix;
    let on_to_off = p_off * mix;
    Ok(BlockKernel {
        p: [[1.0 - off_to_on, off_to_on], [on_to_off, 1.0 - on_to_off]],
        block_duration: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn zero_rate_is_always_on() {
        let c = derive_chain(&ChannelSpec::new(10.0, 0.0, 50.0).unwrap()).unwrap();
        assert_eq!(c.psi, 0.0);
        assert_eq!(c.p_on, 1.0);
        assert_eq!(c.nu, 50.0);
        assert_eq!(c.mu, 0.0);
    }

    #[test]
    fn rate_three_at_snr_ten() {
        let c = derive_chain(&ChannelSpec::new(10.0, 3.0, 50.0).unwrap()).unwrap();
        assert!(close(c.psi, 0.7, 1e-14));
        assert!(close(c.p_on, (-0.7f64).exp(), 1e-14));
        assert!(close(c.nu, 24.829_265_189_570_476, 1e-13));
        assert!(close(c.mu, 25.170_734_810_429_524, 1e-13));
        assert!(close(c.nu + c.mu, 50.0, 1e-12));
    }

    #[test]
    fn unit_snr_unit_rate() {
        let c = derive_chain(&ChannelSpec::new(1.0, 1.0, 2.0).unwrap()).unwrap();
        let e = (-1f64).exp();
        assert!(close(c.psi, 1.0, 1e-15));
        assert!(close(c.p_on, e, 1e-15));
        assert!(close(c.nu, 2.0 * e, 1e-15));
        assert!(close(c.mu, 2.0 * (1.0 - e), 1e-15));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ChannelSpec::new(0.0, 1.0, 1.0).is_err());
        assert!(ChannelSpec::new(1.0, -1.0, 1.0).is_err());
        assert!(ChannelSpec::new(1.0, 1.0, 0.0).is_err());
        assert!(derive_chain(&ChannelSpec { gamma: -1.0, rate: 1.0, kappa: 1.0 }).is_err());
        assert!(ChannelSpec::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(instantaneous_capacity(10.0, 0.0), 0.0);
        assert!(close(instantaneous_capacity(1.0, 1.0), 1.0, 1e-15));
        let c = instantaneous_capacity(10.0, 0.7);
        assert!(close(c, 3.0, 1e-14));
    }

    #[test]
    fn boundary_is_off() {
        assert!(!is_on(3.0, 3.0));
        assert!(is_on(3.0, 3.0 + 1e-12));
    }

    #[test]
    fn kernel_mixes_to_stationary() {
        let c = derive_chain(&ChannelSpec::new(10.0, 3.0, 50.0).unwrap()).unwrap();
        let k = discretize(&c, 14.0).unwrap();
        for row in k.p {
            assert!((row[0] - (1.0 - c.p_on)).abs() < 1e-12);
            assert!((row[1] - c.p_on).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_two_state_closed_form() {
        let chain = OnOffChain { nu: 1.0, mu: 1.0, p_on: 0.5, psi: 2f64.ln() };
        let k = discretize(&chain, 1.0).unwrap();
        assert!((k.p[ON][ON] - 0.567_667_641_618_306_3).abs() < 1e-15);
    }

    #[test]
    fn kernel_short_block_is_identity() {
        let c = derive_chain(&ChannelSpec::new(10.0, 3.0, 50.0).unwrap()).unwrap();
        let k = discretize(&c, 1e-15).unwrap();
        assert!((k.p[0][0] - 1.0).abs() < 1e-12 && (k.p[1][1] - 1.0).abs() < 1e-12);
        assert!(k.p[0][1] < 1e-12 && k.p[1][0] < 1e-12);
        assert!(discretize(&c, 0.0).is_err());
    }
}
