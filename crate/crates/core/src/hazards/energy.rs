//! Battery capacity degradation with charge cycles and per-step consumption.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const MAX_ENERGY_KWH: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModelParams {
    /// kWh consumed per decision step
    pub alpha: f64,
    /// charge-cycle count above which consumption becomes noisy
    pub beta: f64,
    /// gating threshold on the truncated Gaussian draw
    pub phi: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub c_min: u32,
    pub c_max: u32,
    pub noise_mean: f64,
    pub noise_sd: f64,
}

impl Default for EnergyModelParams {
    fn default() -> Self {
        EnergyModelParams {
            alpha: 5.0,
            beta: 3000.0,
            phi: 0.5,
            e_min: 100.0,
            e_max: 250.0,
            c_min: 0,
            c_max: 10_000,
            noise_mean: 0.5,
            noise_sd: 0.25,
        }
    }
}

impl EnergyModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("energy.alpha must be finite and >= 0"));
        }
        if !self.beta.is_finite() {
            return Err(Error::config("energy.beta must be finite"));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return Err(Error::config("energy.phi must lie in [0, 1]"));
        }
        if self.c_min > self.c_max {
            return Err(Error::config("energy.c_min must not exceed energy.c_max"));
        }
        for (name, e) in [("e_min", self.e_min), ("e_max", self.e_max)] {
            if !(0.0..=MAX_ENERGY_KWH).contains(&e) {
                return Err(Error::config(format!("energy.{name} must lie in [0, {MAX_ENERGY_KWH}] kWh")));
            }
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite() && self.noise_mean.is_finite()) {
            return Err(Error::config("energy.noise_sd must be positive and noise_mean finite"));
        }
        if self.e_max < self.e_min && !INVERTED_WARNED.swap(true, std::sync::atomic::Ordering::Relaxed) {
            log::warn!(
                "energy.e_max ({}) < energy.e_min ({}): capacity will increase with charge cycles",
                self.e_max,
                self.e_min
            );
        }
        Ok(())
    }
}

// sweeps validate the same document many times; say it once
static INVERTED_WARNED: std::sync::atomic::AtomicBool = std::sync::atomic::AtomicBool::new(false);

/// Maximum usable energy for a battery with `cycles` charge cycles: the
/// straight line through `(c_min, e_max)` and `(c_max, e_min)`.
pub fn energy_capacity(cycles: f64, p: &EnergyModelParams) -> Result<f64> {
    let (lo, hi) = (p.c_min as f64, p.c_max as f64);
    if !(lo..=hi).contains(&cycles) {
        return Err(Error::range(format!("charge cycles {cycles} outside [{lo}, {hi}]")));
    }
    if p.c_min == p.c_max {
        return Ok(p.e_max);
    }
    Ok(p.e_max + (p.e_min - p.e_max) * (cycles - lo) / (hi - lo))
}

pub fn sample_initial_cycles(rng: &mut SimRng, p: &EnergyModelParams) -> u32 {
    rng.random_range(p.c_min..=p.c_max)
}

/// Pluggable per-step energy consumption. The linear model is the only
/// built-in; other vehicle performance models slot in here.
pub trait ConsumptionModel: Send + Sync {
    fn consume(&self, cycles: u32, dt_steps: u32, rng: &mut SimRng) -> f64;
}

#[derive(Debug, Clone)]
pub struct LinearConsumption {
    params: EnergyModelParams,
    noise: TruncatedGaussian,
}

impl LinearConsumption {
    pub fn new(params: EnergyModelParams) -> Result<Self> {
        params.validate()?;
        Ok(LinearConsumption {
            noise: TruncatedGaussian::new(params.noise_mean, params.noise_sd, 0.0, 1.0)?,
            params,
        })
    }

    pub fn params(&self) -> &EnergyModelParams {
        &self.params
    }

    /// Extra consumption for one decision step of a worn battery.
    pub fn noise_term(&self, rng: &mut SimRng) -> f64 {
        let g = self.noise.sample(rng);
        if g > self.params.phi {
            g
        } else {
            0.0
        }
    }
}

impl ConsumptionModel for LinearConsumption {
    fn consume(&self, cycles: u32, dt_steps: u32, rng: &mut SimRng) -> f64 {
        let base = self.params.alpha * dt_steps as f64;
        if cycles as f64 <= self.params.beta {
            return base;
        }
        base + (0..dt_steps).map(|_| self.noise_term(rng)).sum::<f64>()
    }
}

/// Convenience wrapper matching the free-function form of the model.
pub fn consume_energy(cycles: u32, p: &EnergyModelParams, dt_steps: u32, rng: &mut SimRng) -> Result<f64> {
    Ok(LinearConsumption::new(*p)?.consume(cycles, dt_steps, rng))
}

/// Gaussian restricted to `[lo, hi]`, sampled by inverting the CDF so each
/// draw consumes exactly one uniform.
#[derive(Debug, Clone)]
pub struct TruncatedGaussian {
    normal: Normal,
    lo: f64,
    hi: f64,
    cdf_lo: f64,
    cdf_hi: f64,
}

impl TruncatedGaussian {
    pub fn new(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        let normal = Normal::new(mean, sd).map_err(|e| Error::config(format!("noise distribution: {e}")))?;
        let (cdf_lo, cdf_hi) = (normal.cdf(lo), normal.cdf(hi));
        if !(cdf_hi > cdf_lo) {
            return Err(Error::config("noise distribution has no mass inside [0, 1]"));
        }
        Ok(TruncatedGaussian {
            normal,
            lo,
            hi,
            cdf_lo,
            cdf_hi,
        })
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        let u: f64 = rng.random();
        let q = self.cdf_lo + u * (self.cdf_hi - self.cdf_lo);
        self.normal.inverse_cdf(q).clamp(self.lo, self.hi)
    }
}
