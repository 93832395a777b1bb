use crate::mode::{Mode, PerMode};
use crate::netgraph::{SpeedTable, DEFAULT_SPEEDS};

pub const DAY_SECONDS: f64 = 86_400.0;

/// A half-open `[from_s, to_s)` window of constant congestion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CongestionWindow {
    pub from_s: f64,
    pub to_s: f64,
    pub mult: f64,
}

/// Per-mode base speeds and a piecewise-constant time-of-day multiplier.
/// Time not covered by any window runs at multiplier 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub base_speed: PerMode<f64>,
    pub congestion: Vec<CongestionWindow>,
}

impl Default for SpeedProfile {
    fn default() -> Self {
        SpeedProfile { base_speed: PerMode(DEFAULT_SPEEDS), congestion: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("clock must lie in [0, 86400)")]
pub struct ClockOutOfRange;

impl SpeedProfile {
    pub fn multiplier_at(&self, clock_s: f64) -> Result<f64, ClockOutOfRange> {
        if !(0.0..DAY_SECONDS).contains(&clock_s) {
            return Err(ClockOutOfRange);
        }
        Ok(self.congestion.iter().find(|w| w.from_s <= clock_s && clock_s < w.to_s).map_or(1.0, |w| w.mult))
    }

    pub fn speed(&self, mode: Mode, clock_s: f64) -> Result<f64, ClockOutOfRange> {
        Ok(self.base_speed.get(mode) * self.multiplier_at(clock_s)?)
    }

    pub fn speed_table(&self, clock_s: f64) -> Result<SpeedTable, ClockOutOfRange> {
        Ok(SpeedTable { base: self.base_speed, congestion: self.multiplier_at(clock_s)? })
    }
}
