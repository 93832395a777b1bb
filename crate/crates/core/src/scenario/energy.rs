use crate::mode::{Mode, PerMode};

/// Slack used when comparing state of charge against a requirement, so that
/// sums of exact half-percent quantities are not rejected by rounding.
pub const SOC_EPS: f64 = 1e-9;

/// Linear consumption: percent of SOC used per 100 s of riding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    rate_per_100s: PerMode<f64>,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel { rate_per_100s: PerMode([0.0; 4]) }
    }
}

impl EnergyModel {
    /// Builds a model from tool rates. Returns `None` if any rate is negative
    /// or not finite. The walking rate is always zero.
    pub fn new(rates: impl IntoIterator<Item = (Mode, f64)>) -> Option<Self> {
        let mut model = EnergyModel::default();
        for (mode, rate) in rates {
            if !(rate.is_finite() && rate >= 0.0) {
                return None;
            }
            if mode.is_tool() {
                model.rate_per_100s.set(mode, rate);
            }
        }
        Some(model)
    }

    pub fn rate(&self, mode: Mode) -> f64 {
        *self.rate_per_100s.get(mode)
    }

    /// Percent SOC consumed riding `mode` for `ride_seconds`.
    #[inline]
    pub fn energy_required(&self, mode: Mode, ride_seconds: f64) -> f64 {
        self.rate(mode) * ride_seconds / 100.0
    }

    /// Binary energy factor: whether `carried_soc` covers the ride.
    #[inline]
    pub fn feasible(&self, carried_soc: f64, mode: Mode, ride_seconds: f64) -> bool {
        mode == Mode::Walk || carried_soc - self.energy_required(mode, ride_seconds) >= -SOC_EPS
    }
}
