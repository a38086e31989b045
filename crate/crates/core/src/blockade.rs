//! Two-level non-Hermitian dynamics of a lossy blockade step.
//!
//! The blocked branch |g⟩ = |0x,1⟩ is driven to |e⟩ = |0x,1x⟩, which
//! carries the interaction shift and the two-body loss:
//!
//! H = Ω/2 (|e⟩⟨g| + |g⟩⟨e|) + (−Δ_U − iΓ/2) |e⟩⟨e|
//!
//! All rates are angular. The `from_ratios` constructor sets Ω = 1 so that
//! times are measured in units of 1/Ω.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{hz_to_angular, phase_distance, wrap_phase};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this |λ₊ − λ₋|/Ω the Jordan-form propagator is used.
pub const EXCEPTIONAL_POINT_TOL: f64 = 1e-12;

/// RK4 step bound as a fraction of the shortest dynamical time scale.
pub const RK4_STEP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlockadeError {
    #[error("invalid blockade parameters: {0}")]
    InvalidParams(String),
    #[error("evolution time must be finite and ≥ 0, got {0}")]
    InvalidTime(f64),
    #[error("RK4 step {dt} exceeds the bound {max}")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("a loss curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// The (Ω, Δ_U, Γ) triple, all angular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeParams {
    pub omega: f64,
    pub delta_u: f64,
    pub gamma: f64,
}

impl BlockadeParams {
    pub fn new(omega: f64, delta_u: f64, gamma: f64) -> Result<Self, BlockadeError> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(BlockadeError::InvalidParams(format!("Omega must be > 0, got {omega}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(BlockadeError::InvalidParams(format!("Gamma must be ≥ 0, got {gamma}")));
        }
        if !delta_u.is_finite() {
            return Err(BlockadeError::InvalidParams(format!("DeltaU must be finite, got {delta_u}")));
        }
        Ok(BlockadeParams { omega, delta_u, gamma })
    }

    /// Ω = 1 with Γ/Ω and Δ_U/Ω given.
    pub fn from_ratios(gamma_over_omega: f64, delta_over_omega: f64) -> Result<Self, BlockadeError> {
        Self::new(1.0, delta_over_omega, gamma_over_omega)
    }

    /// Converts ordinary frequencies (Hz) to angular rates.
    pub fn from_hz(rabi_hz: f64, delta_u_hz: f64, gamma_hz: f64) -> Result<Self, BlockadeError> {
        Self::new(hz_to_angular(rabi_hz), hz_to_angular(delta_u_hz), hz_to_angular(gamma_hz))
    }

    /// Time of a pulse of area Ω·t = `area`.
    pub fn time_for_area(&self, area: f64) -> f64 {
        area / self.omega
    }

    fn excited_diagonal(&self) -> Complex64 {
        Complex64::new(-self.delta_u, -0.5 * self.gamma)
    }

    /// The Hamiltonian as a row-major 2×2 matrix.
    pub fn hamiltonian(&self) -> [[Complex64; 2]; 2] {
        let half = Complex64::new(0.5 * self.omega, 0.0);
        [[Complex64::new(0.0, 0.0), half], [half, self.excited_diagonal()]]
    }

    /// The two eigenvalues c ± s of H.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let a = self.excited_diagonal();
        let c = 0.5 * a;
        let s = 0.5 * (a * a + self.omega * self.omega).sqrt();
        (c + s, c - s)
    }

    /// True when the eigenvalue pair is degenerate within tolerance.
    pub fn is_exceptional(&self) -> bool {
        let (lp, lm) = self.eigenvalues();
        (lp - lm).norm() < EXCEPTIONAL_POINT_TOL * self.omega
    }

    /// Largest step accepted by [`evolve_rk4`].
    pub fn max_rk4_step(&self) -> f64 {
        let mut scale = 2.0 * PI / self.omega;
        if self.gamma > 0.0 {
            scale = scale.min(1.0 / self.gamma);
        }
        if self.delta_u != 0.0 {
            scale = scale.min(2.0 * PI / self.delta_u.abs());
        }
        RK4_STEP_FRACTION * scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelAmplitudes {
    pub c_g: Complex64,
    pub c_e: Complex64,
}

impl TwoLevelAmplitudes {
    pub fn new(c_g: Complex64, c_e: Complex64) -> Self {
        TwoLevelAmplitudes { c_g, c_e }
    }

    pub fn ground() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.c_g - other.c_g).norm().max((self.c_e - other.c_e).norm())
    }

    fn apply(&self, u: &[[Complex64; 2]; 2]) -> Self {
        Self::new(
            u[0][0] * self.c_g + u[0][1] * self.c_e,
            u[1][0] * self.c_g + u[1][1] * self.c_e,
        )
    }
}

fn check_time(t: f64) -> Result<(), BlockadeError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(BlockadeError::InvalidTime(t));
    }
    Ok(())
}

/// sin(z)/z, with a series near the origin.
fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// exp(−iHt) as a row-major 2×2 matrix.
///
/// Writing H = c·1 + K with K² = s², the propagator is
/// e^{−ict}[cos(st) − i·t·sinc(st)·K]. For |st| ≥ 1 the equivalent
/// projector form is used so that large Γt cannot overflow.
pub fn propagator(params: &BlockadeParams, t: f64) -> Result<[[Complex64; 2]; 2], BlockadeError> {
    check_time(t)?;
    let a = params.excited_diagonal();
    let c = 0.5 * a;
    let half_omega = Complex64::new(0.5 * params.omega, 0.0);
    let k = [[-c, half_omega], [half_omega, c]];
    let s = 0.5 * (a * a + params.omega * params.omega).sqrt();
    let phase = (-I * c * t).exp();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let id = |r: usize, col: usize| if r == col { one } else { zero };

    let mut u = [[zero; 2]; 2];
    if (2.0 * s).norm() < EXCEPTIONAL_POINT_TOL * params.omega {
        // Jordan form: K is nilpotent.
        for r in 0..2 {
            for col in 0..2 {
                u[r][col] = phase * (id(r, col) - I * t * k[r][col]);
            }
        }
    } else if (s * t).norm() < 1.0 {
        let cos = (s * t).cos();
        let sc = t * sinc(s * t);
        for r in 0..2 {
            for col in 0..2 {
                u[r][col] = phase * (cos * id(r, col) - I * sc * k[r][col]);
            }
        }
    } else {
        let ep = (-I * (c + s) * t).exp();
        let em = (-I * (c - s) * t).exp();
        for r in 0..2 {
            for col in 0..2 {
                let ks = k[r][col] / s;
                u[r][col] = 0.5 * (ep * (id(r, col) + ks) + em * (id(r, col) - ks));
            }
        }
    }
    Ok(u)
}

/// exp(−iHt)·ψ₀.
pub fn evolve(
    params: &BlockadeParams,
    psi0: TwoLevelAmplitudes,
    t: f64,
) -> Result<TwoLevelAmplitudes, BlockadeError> {
    Ok(psi0.apply(&propagator(params, t)?))
}

/// Fixed-step classical RK4 integration of dψ/dt = −iHψ.
///
/// `dt` must not exceed [`BlockadeParams::max_rk4_step`]; the interval is
/// split into ⌈t/dt⌉ equal steps.
pub fn evolve_rk4(
    params: &BlockadeParams,
    psi0: TwoLevelAmplitudes,
    t: f64,
    dt: f64,
) -> Result<TwoLevelAmplitudes, BlockadeError> {
    check_time(t)?;
    let max = params.max_rk4_step();
    if !(dt > 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(BlockadeError::StepTooLarge { dt, max });
    }
    if t == 0.0 {
        return Ok(psi0);
    }
    let n = (t / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let m = params.hamiltonian();
    let rhs = |y: [Complex64; 2]| -> [Complex64; 2] {
        [-I * (m[0][0] * y[0] + m[0][1] * y[1]), -I * (m[1][0] * y[0] + m[1][1] * y[1])]
    };
    let axpy = |y: [Complex64; 2], k: [Complex64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    let mut y = [psi0.c_g, psi0.c_e];
    for _ in 0..n {
        let k1 = rhs(y);
        let k2 = rhs(axpy(y, k1, 0.5 * h));
        let k3 = rhs(axpy(y, k2, 0.5 * h));
        let k4 = rhs(axpy(y, k3, h));
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(TwoLevelAmplitudes::new(y[0], y[1]))
}

/// A step a factor of ten inside the RK4 bound.
pub fn default_rk4_step(params: &BlockadeParams) -> f64 {
    0.1 * params.max_rk4_step()
}

/// Γ_eff = Ω²Γ / [4(Δ_U² + Γ²/4)].
pub fn gamma_eff(params: &BlockadeParams) -> f64 {
    if params.gamma == 0.0 {
        return 0.0;
    }
    let denom = 4.0 * (params.delta_u * params.delta_u + 0.25 * params.gamma * params.gamma);
    params.omega * params.omega * params.gamma / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMethod {
    Analytic,
    Perturbative,
}

/// Probability that the blocked branch has decayed by time `t`.
pub fn loss_probability(
    params: &BlockadeParams,
    t: f64,
    method: LossMethod,
) -> Result<f64, BlockadeError> {
    check_time(t)?;
    if params.gamma == 0.0 {
        return Ok(0.0);
    }
    let loss = match method {
        LossMethod::Analytic => 1.0 - evolve(params, TwoLevelAmplitudes::ground(), t)?.norm_sqr(),
        LossMethod::Perturbative => -(-gamma_eff(params) * t).exp_m1(),
    };
    Ok(loss.clamp(0.0, 1.0))
}

/// Analytic loss sampled on a uniform Ωt grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    /// Dimensionless Ωt.
    pub times: Vec<f64>,
    pub loss: Vec<f64>,
}

/// Samples the analytic loss on `n_points` uniform points of Ωt ∈ [0, `omega_t_max`].
pub fn loss_curve(
    params: &BlockadeParams,
    omega_t_max: f64,
    n_points: usize,
) -> Result<LossCurve, BlockadeError> {
    if n_points < 2 {
        return Err(BlockadeError::TooFewPoints(n_points));
    }
    check_time(omega_t_max)?;
    let step = omega_t_max / (n_points - 1) as f64;
    let mut times = Vec::with_capacity(n_points);
    let mut loss = Vec::with_capacity(n_points);
    let mut running = 0.0f64;
    for i in 0..n_points {
        let wt = if i + 1 == n_points { omega_t_max } else { i as f64 * step };
        let p = loss_probability(params, params.time_for_area(wt), LossMethod::Analytic)?;
        running = running.max(p);
        times.push(wt);
        loss.push(running);
    }
    Ok(LossCurve { times, loss })
}

/// Outcome of the 2π step on the blocked branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    /// arg(c_g) after the pulse, in [0, 2π).
    pub phase_01: f64,
    pub loss_01: f64,
    /// Signed deviation of `phase_01` from 0, in (−π, π].
    pub residual_phase: f64,
}

/// Amplitudes after a pulse of area `area` (Ωt) on the blocked branch.
pub fn blocked_branch(params: &BlockadeParams, area: f64) -> Result<TwoLevelAmplitudes, BlockadeError> {
    evolve(params, TwoLevelAmplitudes::ground(), params.time_for_area(area))
}

pub fn blockade_gate_outcome(params: &BlockadeParams) -> Result<BranchReport, BlockadeError> {
    let psi = blocked_branch(params, 2.0 * PI)?;
    let arg = psi.c_g.arg();
    Ok(BranchReport {
        phase_01: wrap_phase(arg),
        loss_01: (1.0 - psi.norm_sqr()).clamp(0.0, 1.0),
        residual_phase: phase_distance(arg, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p(o: f64, d: f64, g: f64) -> BlockadeParams {
        BlockadeParams::new(o, d, g).unwrap()
    }

    #[test]
    fn hermitian_rabi_cycles() {
        let q = p(1.0, 0.0, 0.0);
        let full = evolve(&q, TwoLevelAmplitudes::ground(), 2.0 * PI).unwrap();
        assert!(full.max_abs_diff(&TwoLevelAmplitudes::new(c(-1.0, 0.0), c(0.0, 0.0))) < 1e-14);
        let half = evolve(&q, TwoLevelAmplitudes::ground(), PI).unwrap();
        assert!(half.max_abs_diff(&TwoLevelAmplitudes::new(c(0.0, 0.0), c(0.0, -1.0))) < 1e-14);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(BlockadeParams::new(0.0, 0.0, 1.0).is_err());
        assert!(BlockadeParams::new(1.0, 0.0, -1.0).is_err());
        assert!(BlockadeParams::new(1.0, f64::NAN, 0.0).is_err());
        let q = p(1.0, 0.0, 1.0);
        assert_eq!(
            evolve(&q, TwoLevelAmplitudes::ground(), -1.0),
            Err(BlockadeError::InvalidTime(-1.0))
        );
        assert!(matches!(
            evolve_rk4(&q, TwoLevelAmplitudes::ground(), 1.0, 0.1),
            Err(BlockadeError::StepTooLarge { .. })
        ));
        assert_eq!(loss_curve(&q, 1.0, 1), Err(BlockadeError::TooFewPoints(1)));
    }

    #[test]
    fn rk4_oracle_at_nonperturbative_point() {
        let q = p(1.0, 1.0, 1.0);
        let t = 2.0 * PI;
        let a = evolve(&q, TwoLevelAmplitudes::ground(), t).unwrap();
        let b = evolve_rk4(&q, TwoLevelAmplitudes::ground(), t, default_rk4_step(&q)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-8, "{}", a.max_abs_diff(&b));
        let z = evolve_rk4(&q, TwoLevelAmplitudes::ground(), 0.0, default_rk4_step(&q)).unwrap();
        assert_eq!(z, TwoLevelAmplitudes::ground());
    }

    #[test]
    fn exceptional_point_is_continuous() {
        // Δ = 0, Γ = 2Ω makes the eigenvalues coincide.
        let ep = p(1.0, 0.0, 2.0);
        assert!(ep.is_exceptional());
        let near = p(1.0, 0.0, 2.0 + 1e-7);
        assert!(!near.is_exceptional());
        for t in [0.3, 2.0 * PI, 40.0] {
            let a = evolve(&ep, TwoLevelAmplitudes::ground(), t).unwrap();
            let b = evolve(&near, TwoLevelAmplitudes::ground(), t).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-6, "t={t}");
            let r = evolve_rk4(&ep, TwoLevelAmplitudes::ground(), t, default_rk4_step(&ep)).unwrap();
            assert!(a.max_abs_diff(&r) < 1e-8, "t={t}");
        }
    }

    #[test]
    fn large_gamma_time_does_not_overflow() {
        let q = p(1.0, 0.0, 1e4);
        let psi = evolve(&q, TwoLevelAmplitudes::ground(), 1e3).unwrap();
        assert!(psi.c_g.is_finite() && psi.c_e.is_finite());
        assert!(psi.norm_sqr() <= 1.0);
    }

    #[test]
    fn gamma_eff_closed_form() {
        assert!((gamma_eff(&p(1.0, 0.0, 10.0)) - 0.1).abs() < 1e-15);
        assert_eq!(gamma_eff(&p(1.0, 3.0, 0.0)), 0.0);
        assert!((gamma_eff(&p(1.0, 10.0, 2.0)) - 2.0 / 404.0).abs() < 1e-15);
    }

    #[test]
    fn loss_at_time_zero() {
        let q = p(1.0, 0.0, 100.0);
        assert_eq!(loss_probability(&q, 0.0, LossMethod::Analytic).unwrap(), 0.0);
        assert_eq!(loss_probability(&q, 0.0, LossMethod::Perturbative).unwrap(), 0.0);
    }

    #[test]
    fn strong_loss_gate_end_value() {
        // Oracle: RK4 integration of the same generator.
        let q = p(1.0, 0.0, 100.0);
        let t = 2.0 * PI;
        let rk = evolve_rk4(&q, TwoLevelAmplitudes::ground(), t, default_rk4_step(&q)).unwrap();
        let loss = loss_probability(&q, t, LossMethod::Analytic).unwrap();
        assert!((loss - (1.0 - rk.norm_sqr())).abs() < 1e-8);
        assert!((loss - 0.0606).abs() < 1e-3, "{loss}");
    }

    #[test]
    fn perturbative_agreement_once_settled() {
        for &(g, d) in &[(20.0, 0.0), (100.0, 0.0), (1000.0, 0.0), (20.0, 10.0), (100.0, 100.0)] {
            let q = p(1.0, d, g);
            for i in 0..=60 {
                let wt = PI / 2.0 + i as f64 * (1.5 * PI) / 60.0;
                let a = loss_probability(&q, wt, LossMethod::Analytic).unwrap();
                let b = loss_probability(&q, wt, LossMethod::Perturbative).unwrap();
                assert!((a - b).abs() <= 0.1 * b, "Γ={g} Δ={d} Ωt={wt}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_gamma_curve_is_zero() {
        let curve = loss_curve(&p(1.0, 5.0, 0.0), 2.0 * PI, 50).unwrap();
        assert!(curve.loss.iter().all(|&l| l == 0.0));
        assert_eq!(*curve.times.last().unwrap(), 2.0 * PI);
    }

    #[test]
    fn curves_are_monotone() {
        for g in [1.0, 10.0, 100.0, 1000.0] {
            let curve = loss_curve(&p(1.0, 0.0, g), 2.0 * PI, 200).unwrap();
            assert!(curve.loss.windows(2).all(|w| w[1] >= w[0]));
            assert!(curve.loss.iter().all(|&l| (0.0..=1.0).contains(&l)));
        }
    }

    #[test]
    fn branch_report_cases() {
        let r = blockade_gate_outcome(&p(1.0, 100.0, 0.0)).unwrap();
        assert!(r.loss_01 < 1e-12);
        assert!(r.residual_phase.abs() <= 0.02 && r.residual_phase.abs() >= 0.005, "{r:?}");

        let r = blockade_gate_outcome(&p(1.0, 0.0, 100.0)).unwrap();
        let expected = 1.0 - (-2.0 * PI / 100.0f64).exp();
        assert!((r.loss_01 - expected).abs() < 0.1 * expected);

        let r = blockade_gate_outcome(&p(1e-4, 0.0, 1.0)).unwrap();
        assert!(r.loss_01 < 1e-3 && r.residual_phase.abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn branch_report_json_keys() {
        let r = blockade_gate_outcome(&p(1.0, 100.0, 0.0)).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        for key in ["phase_01", "loss_01", "residual_phase"] {
            assert!(v.get(key).is_some());
        }
    }
}
