//! Sense/reconfigure latency and the user displacement it causes.

use crate::error::{Error, Result};

/// Delays of the six steps of one adaptation cycle, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencyBudget {
    /// Sensing the impinging wavefront.
    pub tau_s: f64,
    /// Relaying the sensed data to the server.
    pub tau_n_fwd: f64,
    /// Waiting in the server queue.
    pub tau_q: f64,
    /// Computing the configuration.
    pub tau_p: f64,
    /// Relaying the configuration back to the HSF.
    pub tau_n_rev: f64,
    /// Switching the HSF state.
    pub tau_c: f64,
}

impl LatencyBudget {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("latency.tau_s", self.tau_s),
            ("latency.tau_n_fwd", self.tau_n_fwd),
            ("latency.tau_q", self.tau_q),
            ("latency.tau_p", self.tau_p),
            ("latency.tau_n_rev", self.tau_n_rev),
            ("latency.tau_c", self.tau_c),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Total cycle duration.
    pub fn total(&self) -> f64 {
        total_latency(self)
    }
}

/// Constant-velocity walk along +x.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MobilityModel {
    /// m/s.
    pub speed: f64,
}

impl MobilityModel {
    pub fn new(speed: f64) -> Result<Self> {
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(Error::invalid("mobility.speed", format!("{speed} must be >= 0")));
        }
        Ok(Self { speed })
    }
}

pub fn total_latency(b: &LatencyBudget) -> f64 {
    b.tau_s + b.tau_n_fwd + b.tau_q + b.tau_p + b.tau_n_rev + b.tau_c
}

/// Distance walked during one cycle of length `tau_tot`.
pub fn dislocation(model: &MobilityModel, tau_tot: f64) -> f64 {
    model.speed * tau_tot
}
