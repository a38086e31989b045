//! Scalar AC polarizability by sum over E1 lines, tune-out search, and
//! lattice depth matching between the storage and transport lattices.
//!
//! α(ω) = Σ_k f_k / (ω_k² − ω²) in atomic units. A line contributes to its
//! lower level with its absorption oscillator strength and to its upper
//! level with the emission value −(2J_l+1)/(2J_u+1)·f.

use serde::{Deserialize, Serialize};

use crate::atomdata::{SpeciesError, SpeciesModel};
use crate::units::{omega_au_to_wavelength_nm, wavelength_nm_to_omega_au};

pub const DEFAULT_RESONANCE_WINDOW_NM: f64 = 0.01;
pub const ZERO_CROSSING_REL_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum PolarizabilityError {
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error("{wavelength_nm} nm lies within {window_nm} nm of the {lower} -> {upper} resonance at {line_nm} nm")]
    ResonanceWindow {
        wavelength_nm: f64,
        window_nm: f64,
        line_nm: f64,
        lower: String,
        upper: String,
    },
    #[error("empty wavelength range [{0}, {1}]")]
    EmptyRange(f64, f64),
    #[error("scan step must be > 0, got {0}")]
    NonPositiveStep(f64),
    #[error("invalid wavelength {0} nm")]
    InvalidWavelength(f64),
    #[error("transport lattice polarizability is zero")]
    ZeroTransportPolarizability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizabilitySample {
    pub wavelength_nm: f64,
    pub alpha_au: f64,
}

/// One term of the dispersion sum.
#[derive(Debug, Clone, Copy)]
struct Term {
    omega_au: f64,
    strength: f64,
    wavelength_nm: f64,
}

/// Polarizability calculator over one species.
#[derive(Debug, Clone, Copy)]
pub struct Polarizability<'a> {
    species: &'a SpeciesModel,
    resonance_window_nm: f64,
}

impl<'a> Polarizability<'a> {
    pub fn new(species: &'a SpeciesModel) -> Self {
        Polarizability { species, resonance_window_nm: DEFAULT_RESONANCE_WINDOW_NM }
    }

    pub fn with_resonance_window(mut self, window_nm: f64) -> Self {
        self.resonance_window_nm = window_nm.max(0.0);
        self
    }

    pub fn resonance_window_nm(&self) -> f64 {
        self.resonance_window_nm
    }

    fn terms(&self, level: &str) -> Result<Vec<(Term, &'a crate::atomdata::TransitionLine)>, SpeciesError> {
        let this = self.species.level(level)?;
        let mut out = Vec::new();
        for line in self.species.lines.iter().filter(|l| l.lower == level || l.upper == level) {
            let strength = if line.lower == level {
                line.oscillator_strength
            } else {
                let lower = self.species.level(&line.lower)?;
                let ratio = f64::from(lower.j.twice() + 1) / f64::from(this.j.twice() + 1);
                -ratio * line.oscillator_strength
            };
            let term = Term {
                omega_au: wavelength_nm_to_omega_au(line.wavelength_nm),
                strength,
                wavelength_nm: line.wavelength_nm,
            };
            out.push((term, line));
        }
        Ok(out)
    }

    /// Wavelengths (nm) of every resonance attached to `level`.
    pub fn resonances(&self, level: &str) -> Result<Vec<f64>, PolarizabilityError> {
        Ok(self.terms(level)?.into_iter().map(|(t, _)| t.wavelength_nm).collect())
    }

    /// α (a.u.) of `level` at a vacuum wavelength in nm.
    pub fn alpha(&self, level: &str, wavelength_nm: f64) -> Result<f64, PolarizabilityError> {
        if !(wavelength_nm > 0.0) {
            return Err(PolarizabilityError::InvalidWavelength(wavelength_nm));
        }
        let terms = self.terms(level)?;
        for (t, line) in &terms {
            if (wavelength_nm - t.wavelength_nm).abs() < self.resonance_window_nm {
                return Err(PolarizabilityError::ResonanceWindow {
                    wavelength_nm,
                    window_nm: self.resonance_window_nm,
                    line_nm: t.wavelength_nm,
                    lower: line.lower.clone(),
                    upper: line.upper.clone(),
                });
            }
        }
        Ok(sum_terms(terms.iter().map(|(t, _)| *t), wavelength_nm_to_omega_au(wavelength_nm)))
    }

    /// α (a.u.) at an angular frequency given directly in atomic units.
    /// No resonance window is applied.
    pub fn alpha_at_omega(&self, level: &str, omega_au: f64) -> Result<f64, PolarizabilityError> {
        let terms = self.terms(level)?;
        Ok(sum_terms(terms.iter().map(|(t, _)| *t), omega_au))
    }

    /// The static polarizability Σ f_k / ω_k².
    pub fn static_alpha(&self, level: &str) -> Result<f64, PolarizabilityError> {
        let terms = self.terms(level)?;
        Ok(terms.iter().map(|(t, _)| t.strength / (t.omega_au * t.omega_au)).sum())
    }

    fn in_window(&self, resonances: &[f64], wavelength_nm: f64) -> bool {
        resonances
            .iter()
            .any(|&r| (wavelength_nm - r).abs() < self.resonance_window_nm)
    }

    fn grid(range: (f64, f64), step: f64) -> Result<Vec<f64>, PolarizabilityError> {
        let (lo, hi) = range;
        if !(lo < hi) || !(lo > 0.0) {
            return Err(PolarizabilityError::EmptyRange(lo, hi));
        }
        if !(step > 0.0) {
            return Err(PolarizabilityError::NonPositiveStep(step));
        }
        let n = ((hi - lo) / step).floor() as usize;
        let mut grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
        if hi - grid[n] > 1e-9 * step {
            grid.push(hi);
        }
        Ok(grid)
    }

    /// Samples α on a uniform grid, skipping points inside resonance windows.
    pub fn scan(
        &self,
        level: &str,
        range_nm: (f64, f64),
        step_nm: f64,
    ) -> Result<Vec<PolarizabilitySample>, PolarizabilityError> {
        let resonances = self.resonances(level)?;
        let grid = Self::grid(range_nm, step_nm)?;
        let mut out = Vec::with_capacity(grid.len());
        for wl in grid {
            if self.in_window(&resonances, wl) {
                continue;
            }
            out.push(PolarizabilitySample { wavelength_nm: wl, alpha_au: self.alpha(level, wl)? });
        }
        Ok(out)
    }

    /// Tune-out wavelengths of `level` inside `range_nm`, sorted ascending.
    ///
    /// Sign changes between neighbouring grid samples are bracketed and
    /// refined by bisection; brackets that contain a resonance are poles,
    /// not zeros, and are skipped.
    pub fn find_zero_crossings(
        &self,
        level: &str,
        range_nm: (f64, f64),
        step_nm: f64,
    ) -> Result<Vec<f64>, PolarizabilityError> {
        let resonances = self.resonances(level)?;
        let samples = self.scan(level, range_nm, step_nm)?;
        let mut zeros = Vec::new();
        for pair in samples.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.alpha_au == 0.0 {
                zeros.push(a.wavelength_nm);
                continue;
            }
            if a.alpha_au.signum() == b.alpha_au.signum() || b.alpha_au == 0.0 {
                continue;
            }
            let pole_inside = resonances
                .iter()
                .any(|&r| r >= a.wavelength_nm && r <= b.wavelength_nm);
            if pole_inside {
                continue;
            }
            zeros.push(self.bisect(level, a, b)?);
        }
        if let Some(last) = samples.last() {
            if last.alpha_au == 0.0 {
                zeros.push(last.wavelength_nm);
            }
        }
        Ok(zeros)
    }

    fn bisect(
        &self,
        level: &str,
        mut lo: PolarizabilitySample,
        mut hi: PolarizabilitySample,
    ) -> Result<f64, PolarizabilityError> {
        loop {
            let mid = 0.5 * (lo.wavelength_nm + hi.wavelength_nm);
            if hi.wavelength_nm - lo.wavelength_nm <= ZERO_CROSSING_REL_TOL * mid
                || mid == lo.wavelength_nm
                || mid == hi.wavelength_nm
            {
                return Ok(mid);
            }
            let alpha = self.alpha(level, mid)?;
            if alpha == 0.0 {
                return Ok(mid);
            }
            let sample = PolarizabilitySample { wavelength_nm: mid, alpha_au: alpha };
            if alpha.signum() == lo.alpha_au.signum() {
                lo = sample;
            } else {
                hi = sample;
            }
        }
    }

    /// Sign changes of the differential polarizability α(a) − α(b).
    pub fn find_differential_crossings(
        &self,
        level_a: &str,
        level_b: &str,
        range_nm: (f64, f64),
        step_nm: f64,
    ) -> Result<Vec<f64>, PolarizabilityError> {
        let mut resonances = self.resonances(level_a)?;
        resonances.extend(self.resonances(level_b)?);
        let grid = Self::grid(range_nm, step_nm)?;
        let diff = |wl: f64| -> Result<f64, PolarizabilityError> {
            Ok(self.alpha(level_a, wl)? - self.alpha(level_b, wl)?)
        };
        let pts: Vec<(f64, f64)> = grid
            .into_iter()
            .filter(|&wl| !self.in_window(&resonances, wl))
            .map(|wl| diff(wl).map(|d| (wl, d)))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::new();
        for w in pts.windows(2) {
            let ((mut a, mut fa), (mut b, fb)) = (w[0], w[1]);
            if fa.signum() == fb.signum() || resonances.iter().any(|&r| r >= a && r <= b) {
                continue;
            }
            while b - a > ZERO_CROSSING_REL_TOL * a {
                let m = 0.5 * (a + b);
                let fm = diff(m)?;
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        Ok(out)
    }
}

fn sum_terms(terms: impl Iterator<Item = Term>, omega_au: f64) -> f64 {
    let w2 = omega_au * omega_au;
    terms.map(|t| t.strength / (t.omega_au * t.omega_au - w2)).sum()
}

/// Resonance frequency (a.u.) of a wavelength; re-exported for oracles.
pub fn omega_of(wavelength_nm: f64) -> f64 {
    wavelength_nm_to_omega_au(wavelength_nm)
}

pub fn wavelength_of(omega_au: f64) -> f64 {
    omega_au_to_wavelength_nm(omega_au)
}

/// One optical lattice acting on one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub wavelength_nm: f64,
    /// Intensity relative to the reference I₀.
    pub intensity: f64,
    pub level: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_frequency_hz: Option<f64>,
}

impl LatticeSpec {
    pub fn new(level: impl Into<String>, wavelength_nm: f64, intensity: f64) -> Self {
        LatticeSpec { wavelength_nm, intensity, level: level.into(), trap_frequency_hz: None }
    }
}

/// Depth α·I in units of (a.u.·I₀), scaled by `conversion` (1 for identity).
pub fn lattice_depth(
    spec: &LatticeSpec,
    species: &SpeciesModel,
    conversion: f64,
) -> Result<f64, PolarizabilityError> {
    if !(spec.intensity >= 0.0) {
        return Err(PolarizabilityError::InvalidWavelength(spec.intensity));
    }
    let alpha = Polarizability::new(species).alpha(&spec.level, spec.wavelength_nm)?;
    Ok(alpha * spec.intensity * conversion)
}

/// Transport intensity, relative to the storage intensity, that makes both
/// lattices equally deep: α_storage / α_transport.
pub fn match_depths(
    storage: &LatticeSpec,
    transport: &LatticeSpec,
    species: &SpeciesModel,
) -> Result<f64, PolarizabilityError> {
    let pol = Polarizability::new(species);
    let a_s = pol.alpha(&storage.level, storage.wavelength_nm)?;
    let a_t = pol.alpha(&transport.level, transport.wavelength_nm)?;
    depth_ratio(a_s, a_t)
}

pub fn depth_ratio(alpha_storage: f64, alpha_transport: f64) -> Result<f64, PolarizabilityError> {
    if alpha_transport == 0.0 {
        return Err(PolarizabilityError::ZeroTransportPolarizability);
    }
    Ok(alpha_storage / alpha_transport)
}
