//! Adiabaticity rule for transfers and site-selective operations.

use serde::{Deserialize, Serialize};

use super::RegisterError;

pub const DEFAULT_MARGIN: f64 = 10.0;

/// τ ≥ margin · max(1/ω_t, 1/ω_e) with frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConstraint {
    /// Smallest relevant trap frequency.
    pub omega_t_hz: f64,
    /// Neighbouring-site frequency shift; only set for site-selective ops.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_e_hz: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TimingCheck {
    Ok,
    Violation { required_s: f64, actual_s: f64 },
}

impl TimingCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, TimingCheck::Ok)
    }
}

impl TimingConstraint {
    pub fn new(omega_t_hz: f64, omega_e_hz: Option<f64>, margin: f64) -> Result<Self, RegisterError> {
        let c = TimingConstraint { omega_t_hz, omega_e_hz, margin };
        c.validate()?;
        Ok(c)
    }

    pub fn global(omega_t_hz: f64) -> Self {
        TimingConstraint { omega_t_hz, omega_e_hz: None, margin: DEFAULT_MARGIN }
    }

    pub fn validate(&self) -> Result<(), RegisterError> {
        if !(self.omega_t_hz > 0.0) {
            return Err(RegisterError::InvalidConfig(format!(
                "trap frequency must be > 0, got {}",
                self.omega_t_hz
            )));
        }
        if let Some(e) = self.omega_e_hz {
            if !(e > 0.0) {
                return Err(RegisterError::InvalidConfig(format!(
                    "neighbouring-site shift must be > 0, got {e}"
                )));
            }
        }
        if !(self.margin >= 1.0) {
            return Err(RegisterError::InvalidConfig(format!("margin must be ≥ 1, got {}", self.margin)));
        }
        Ok(())
    }

    /// Shortest compliant duration in seconds.
    pub fn min_duration(&self) -> f64 {
        let slowest = match self.omega_e_hz {
            Some(e) => self.omega_t_hz.min(e),
            None => self.omega_t_hz,
        };
        self.margin / slowest
    }
}

pub fn validate_transfer_timing(constraint: &TimingConstraint, tau_s: f64) -> TimingCheck {
    let required = constraint.min_duration();
    if tau_s >= required * (1.0 - 1e-12) {
        TimingCheck::Ok
    } else {
        TimingCheck::Violation { required_s: required, actual_s: tau_s }
    }
}
