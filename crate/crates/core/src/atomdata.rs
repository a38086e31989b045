//! Atomic structure data: levels, E1 lines, and magnetic response.
//!
//! Every other module reads species data through [`SpeciesModel`]. The
//! bundled ⁸⁷Sr document lives in `data/sr87.json`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::halfint::HalfInt;
use crate::units::{nm_to_cm, BOHR_MAGNETON_HZ_PER_GAUSS};

const SR87_JSON: &str = include_str!("../data/sr87.json");

#[derive(Debug, thiserror::Error)]
pub enum SpeciesError {
    #[error("malformed species document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid species document: {0}")]
    Validation(String),
    #[error("unknown level {0:?}")]
    UnknownLevel(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("level {level} has no {what}")]
    MissingData { level: String, what: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelModel {
    pub name: String,
    #[serde(rename = "J")]
    pub j: HalfInt,
    /// Linear Zeeman coefficient κ in Hz/(G·m), used for J = 0 levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeeman_hz_per_gauss_per_m: Option<f64>,
    #[serde(rename = "g_J", default, skip_serializing_if = "Option::is_none")]
    pub g_j: Option<f64>,
    /// Spontaneous-emission lifetime in the combined lattices.
    #[serde(rename = "lifetime_s", default, skip_serializing_if = "Option::is_none")]
    pub lifetime_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    pub lower: String,
    pub upper: String,
    pub wavelength_nm: f64,
    pub oscillator_strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesModel {
    pub name: String,
    pub nuclear_spin: HalfInt,
    pub levels: Vec<LevelModel>,
    #[serde(default)]
    pub lines: Vec<TransitionLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// An internal state: a level plus its magnetic sublevel.
///
/// `m` is m_I when `f` is absent (J = 0 levels) and m_F otherwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomicState {
    pub level: String,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<HalfInt>,
    pub m: HalfInt,
}

impl AtomicState {
    pub fn nuclear(level: impl Into<String>, m_i: HalfInt) -> Self {
        AtomicState { level: level.into(), f: None, m: m_i }
    }

    pub fn hyperfine(level: impl Into<String>, f: HalfInt, m_f: HalfInt) -> Self {
        AtomicState { level: level.into(), f: Some(f), m: m_f }
    }

    /// The same state with `m` negated.
    pub fn mirrored(&self) -> Self {
        AtomicState { m: -self.m, ..self.clone() }
    }
}

impl std::fmt::Display for AtomicState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.f {
            Some(hf) => write!(f, "|{}, F={}, m={}>", self.level, hf, self.m),
            None => write!(f, "|{}, m={}>", self.level, self.m),
        }
    }
}

impl SpeciesModel {
    /// Parses and validates a species document.
    pub fn from_json(document: &str) -> Result<Self, SpeciesError> {
        let model: SpeciesModel = serde_json::from_str(document)?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, SpeciesError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            SpeciesError::Validation(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    /// The bundled ⁸⁷Sr model.
    pub fn sr87() -> Self {
        Self::from_json(SR87_JSON).expect("bundled 87Sr document is valid")
    }

    pub fn bundled_sr87_json() -> &'static str {
        SR87_JSON
    }

    pub fn validate(&self) -> Result<(), SpeciesError> {
        let invalid = |msg: String| Err(SpeciesError::Validation(msg));
        if self.nuclear_spin.twice() < 0 {
            return invalid(format!("negative nuclear spin {}", self.nuclear_spin));
        }
        let mut names = HashSet::new();
        for level in &self.levels {
            if !names.insert(level.name.as_str()) {
                return invalid(format!("duplicate level name {:?}", level.name));
            }
            if level.j.twice() < 0 {
                return invalid(format!("level {} has negative J", level.name));
            }
            if let Some(k) = level.zeeman_hz_per_gauss_per_m {
                if !k.is_finite() {
                    return invalid(format!("level {} has non-finite Zeeman coefficient", level.name));
                }
            }
            if let Some(g) = level.g_j {
                if !g.is_finite() {
                    return invalid(format!("level {} has non-finite g_J", level.name));
                }
            }
            if let Some(tau) = level.lifetime_s {
                if !(tau > 0.0) {
                    return invalid(format!("level {} has nonpositive lifetime", level.name));
                }
            }
        }
        for line in &self.lines {
            for end in [&line.lower, &line.upper] {
                if !names.contains(end.as_str()) {
                    return invalid(format!(
                        "line {} -> {} references unknown level {:?}",
                        line.lower, line.upper, end
                    ));
                }
            }
            if !(line.wavelength_nm > 0.0) || !line.wavelength_nm.is_finite() {
                return invalid(format!(
                    "line {} -> {} has nonpositive wavelength",
                    line.lower, line.upper
                ));
            }
            if !(line.oscillator_strength > 0.0) || !line.oscillator_strength.is_finite() {
                return invalid(format!(
                    "line {} -> {} has nonpositive oscillator strength",
                    line.lower, line.upper
                ));
            }
        }
        Ok(())
    }

    pub fn level(&self, name: &str) -> Result<&LevelModel, SpeciesError> {
        self.levels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| SpeciesError::UnknownLevel(name.to_string()))
    }

    /// Checks the angular-momentum constraints of a state against this species.
    pub fn validate_state(&self, state: &AtomicState) -> Result<&LevelModel, SpeciesError> {
        let level = self.level(&state.level)?;
        let i = self.nuclear_spin;
        let bad = |msg: String| Err(SpeciesError::InvalidState(format!("{state}: {msg}")));
        match state.f {
            Some(f) => {
                let lo = HalfInt::from_twice((level.j.twice() - i.twice()).abs());
                let hi = HalfInt::from_twice(level.j.twice() + i.twice());
                if f < lo || f > hi || !f.same_parity(hi) {
                    return bad(format!("F={f} not allowed for J={}, I={i}", level.j));
                }
                if state.m.abs() > f || !state.m.same_parity(f) {
                    return bad(format!("|m| must be ≤ F={f} in integer steps"));
                }
            }
            None => {
                if state.m.abs() > i || !state.m.same_parity(i) {
                    return bad(format!("|m_I| must be ≤ I={i} in integer steps"));
                }
            }
        }
        Ok(level)
    }

    /// Hyperfine Landé factor with the nuclear contribution neglected.
    pub fn hyperfine_g_factor(&self, level: &LevelModel, f: HalfInt) -> Result<f64, SpeciesError> {
        let g_j = level.g_j.ok_or_else(|| SpeciesError::MissingData {
            level: level.name.clone(),
            what: "g_J",
        })?;
        if f.twice() == 0 {
            return Ok(0.0);
        }
        let ff = f.casimir();
        Ok(g_j * (ff + level.j.casimir() - self.nuclear_spin.casimir()) / (2.0 * ff))
    }

    /// Linear Zeeman shift (Hz) of `state` in a field of `b_gauss`.
    ///
    /// J = 0 levels use the nuclear model κ·m·B; hyperfine states use
    /// m_F·g_F·μ_B·B.
    pub fn zeeman_shift(&self, state: &AtomicState, b_gauss: f64) -> Result<f64, SpeciesError> {
        let level = self.validate_state(state)?;
        let m = state.m.value();
        if level.j.twice() == 0 {
            let kappa = level.zeeman_hz_per_gauss_per_m.ok_or_else(|| SpeciesError::MissingData {
                level: level.name.clone(),
                what: "Zeeman coefficient",
            })?;
            return Ok(kappa * m * b_gauss);
        }
        let f = state.f.ok_or_else(|| {
            SpeciesError::InvalidState(format!("{state}: J > 0 level needs a hyperfine F"))
        })?;
        let g_f = self.hyperfine_g_factor(level, f)?;
        Ok(m * g_f * BOHR_MAGNETON_HZ_PER_GAUSS * b_gauss)
    }

    /// Energy gradient per unit length (Hz/cm) produced by a field gradient.
    pub fn zeeman_gradient_hz_per_cm(
        &self,
        state: &AtomicState,
        gradient_g_per_cm: f64,
    ) -> Result<f64, SpeciesError> {
        Ok(self.zeeman_shift(state, 1.0)?.abs() * gradient_g_per_cm)
    }

    /// Frequency difference (Hz) between identical atoms on neighbouring sites.
    pub fn gradient_site_splitting(
        &self,
        state: &AtomicState,
        gradient_g_per_cm: f64,
        spacing_nm: f64,
    ) -> Result<f64, SpeciesError> {
        if !(gradient_g_per_cm >= 0.0) {
            return Err(SpeciesError::InvalidArgument(format!(
                "gradient must be ≥ 0, got {gradient_g_per_cm}"
            )));
        }
        if !(spacing_nm > 0.0) {
            return Err(SpeciesError::InvalidArgument(format!(
                "site spacing must be > 0, got {spacing_nm}"
            )));
        }
        Ok(self.zeeman_gradient_hz_per_cm(state, gradient_g_per_cm)? * nm_to_cm(spacing_nm))
    }

    /// Lines with `level` as either endpoint.
    pub fn lines_of<'a>(&'a self, level: &'a str) -> impl Iterator<Item = &'a TransitionLine> + 'a {
        self.lines.iter().filter(move |l| l.lower == level || l.upper == level)
    }
}

/// Qubit and readout states of the ⁸⁷Sr encoding.
pub mod sr87 {
    use super::AtomicState;
    use crate::halfint::HalfInt;

    pub const GROUND: &str = "1S0";
    pub const CLOCK: &str = "3P0";
    pub const READOUT: &str = "3P2";

    pub fn qubit_zero() -> AtomicState {
        AtomicState::nuclear(GROUND, HalfInt::from_twice(-9))
    }

    pub fn qubit_one() -> AtomicState {
        AtomicState::nuclear(GROUND, HalfInt::from_twice(-7))
    }

    pub fn readout_zero() -> AtomicState {
        AtomicState::hyperfine(READOUT, HalfInt::from_twice(13), HalfInt::from_twice(-13))
    }

    pub fn readout_one() -> AtomicState {
        AtomicState::hyperfine(READOUT, HalfInt::from_twice(13), HalfInt::from_twice(-11))
    }
}
