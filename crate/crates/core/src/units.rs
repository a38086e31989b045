//! Unit conversions shared by the optics and addressing code.
//!
//! Wavelengths enter in nm; polarizability sums run in atomic units.

use std::f64::consts::PI;

/// Hartree energy expressed as a wavenumber (cm⁻¹), CODATA 2018.
pub const HARTREE_WAVENUMBER_PER_CM: f64 = 219_474.631_363_20;

/// Bohr magneton in frequency units (Hz/G).
pub const BOHR_MAGNETON_HZ_PER_GAUSS: f64 = 1.399_624e6;

pub const NM_PER_CM: f64 = 1.0e7;

/// Angular frequency of light of the given vacuum wavelength, in atomic units.
/// An infinite wavelength maps to zero frequency (the static limit).
pub fn wavelength_nm_to_omega_au(wavelength_nm: f64) -> f64 {
    NM_PER_CM / (wavelength_nm * HARTREE_WAVENUMBER_PER_CM)
}

pub fn omega_au_to_wavelength_nm(omega_au: f64) -> f64 {
    NM_PER_CM / (omega_au * HARTREE_WAVENUMBER_PER_CM)
}

pub fn nm_to_cm(nm: f64) -> f64 {
    nm / NM_PER_CM
}

/// Ordinary frequency (Hz) to angular frequency (rad/s).
pub fn hz_to_angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Wraps a phase into `[0, 2π)`. Values within 1e-12 of 2π snap to 0.
pub fn wrap_phase(phase: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = phase.rem_euclid(two_pi);
    if two_pi - w < 1e-12 {
        0.0
    } else {
        w
    }
}

/// Shortest signed distance between two phases, in `(-π, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}
