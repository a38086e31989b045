//! Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use aeqsim_core::atomdata::sr87;
use aeqsim_core::blockade::{
    evolve, evolve_rk4, loss_curve, loss_probability, BlockadeParams, LossMethod, TwoLevelAmplitudes,
};
use aeqsim_core::budget::{intensity_noise_shift, magnetic_noise_shift};
use aeqsim_core::compiler::{compile_circuit, price, schedule_duration, GateMechanism};
use aeqsim_core::polarizability::{match_depths, omega_of, wavelength_of, LatticeSpec};
use aeqsim_core::register::{blockade_gate_truth_table, execute_truth_table};
use aeqsim_core::units::phase_distance;
use aeqsim_core::{AtomicState, Circuit, Device, Gate, HalfInt, NoiseModel, Polarizability, SpeciesModel};
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    let psi0 = TwoLevelAmplitudes::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
    for omega in [0.5, 1.0, 3.0] {
        for delta in [0.0, 1.0, 10.0] {
            // 2(1 + 1e-6): next to the exceptional point at Δ = 0.
            for gamma in [0.0, 2.0 * (1.0 + 1e-6), 20.0] {
                let p = BlockadeParams::new(omega, delta * omega, gamma * omega).map_err(|e| e.to_string())?;
                for wt in [PI / 3.0, PI, 2.0 * PI] {
                    let t = wt / omega;
                    let a = evolve(&p, psi0, t).map_err(|e| e.to_string())?;
                    let b = evolve_rk4(&p, psi0, t, 0.1 * p.max_rk4_step()).map_err(|e| e.to_string())?;
                    worst = worst.max(a.max_abs_diff(&b));
                }
                count += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        count == 27 && worst <= 1e-8 && secs < 1.0,
        format!("{count} grid points, max |Δamp| = {worst:.2e}, {secs:.3} s"),
    )
}

fn c2_perturbative_regime() -> Outcome {
    let n = 400;
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    let mut settled = 0.0f64;
    for g in [20.0, 100.0, 1000.0] {
        for d in [0.0, 10.0, 100.0] {
            let p = BlockadeParams::from_ratios(g, d).map_err(|e| e.to_string())?;
            assert!(Complex64::new(p.delta_u, p.gamma / 2.0).norm() >= 10.0 * p.omega);
            for k in 1..=n {
                let wt = 2.0 * PI * k as f64 / n as f64;
                let t = p.time_for_area(wt);
                let exact = loss_probability(&p, t, LossMethod::Analytic).map_err(|e| e.to_string())?;
                let approx = loss_probability(&p, t, LossMethod::Perturbative).map_err(|e| e.to_string())?;
                let r = rel(approx, exact);
                if r > worst.0 {
                    worst = (r, g, d, wt);
                }
                if wt >= PI / 2.0 {
                    settled = settled.max(r);
                }
            }
        }
    }
    check(
        worst.0 <= 0.1,
        format!(
            "max relative error {:.3} at Γ/Ω={}, Δ/Ω={}, Ωt={:.4}; {:.4} for Ωt ∈ [π/2, 2π]",
            worst.0, worst.1, worst.2, worst.3, settled
        ),
    )
}

fn c3_loss_vs_gamma() -> Outcome {
    let mut losses = Vec::new();
    let mut detail = Vec::new();
    let mut ok = true;
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let mut csv = String::from("omega_t,gamma_10,gamma_100,gamma_1000\n");
    let mut curves = Vec::new();
    for g in [10.0, 100.0, 1000.0] {
        let p = BlockadeParams::from_ratios(g, 0.0).map_err(|e| e.to_string())?;
        let l = loss_probability(&p, p.time_for_area(2.0 * PI), LossMethod::Analytic).map_err(|e| e.to_string())?;
        let expected = 1.0 - (-2.0 * PI / g).exp();
        if g >= 20.0 {
            ok &= rel(l, expected) <= 0.1;
        }
        detail.push(format!("Γ/Ω={g}: {l:.5} (1−e^(−2π/{g}) = {expected:.5})"));
        losses.push(l);
        curves.push(loss_curve(&p, 2.0 * PI, 201).map_err(|e| e.to_string())?);
    }
    ok &= losses.windows(2).all(|w| w[1] < w[0]);
    for k in 0..201 {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            curves[0].times[k], curves[0].loss[k], curves[1].loss[k], curves[2].loss[k]
        ));
    }
    std::fs::write(dir.join("loss_vs_gamma.csv"), csv).map_err(|e| e.to_string())?;
    check(ok, detail.join("; "))
}

fn c4_loss_vs_delta() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for g in [1.0, 10.0] {
        let mut row = Vec::new();
        for d in [0.0, 1.0, 10.0, 100.0] {
            let p = BlockadeParams::from_ratios(g, d).map_err(|e| e.to_string())?;
            row.push(loss_probability(&p, p.time_for_area(2.0 * PI), LossMethod::Analytic).map_err(|e| e.to_string())?);
        }
        ok &= row.windows(2).all(|w| w[1] <= w[0]);
        detail.push(format!("Γ/Ω={g}: {:?}", row.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()));
    }
    check(ok, detail.join("; "))
}

fn c5_blockade_truth_table() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [100.0, 1000.0] {
        let p = BlockadeParams::from_ratios(0.0, d).map_err(|e| e.to_string())?;
        let t = blockade_gate_truth_table(&p, 1.0).map_err(|e| e.to_string())?;
        let bound = 2.0 / d;
        let others = [t.phases[0], t.phases[2], t.phases[3]].iter().all(|&x| phase_distance(x, 0.0).abs() < 1e-9);
        ok &= others && t.residual_phase.abs() <= bound && t.losses.iter().all(|&l| l < 1e-12);
        detail.push(format!("Δ/Ω={d}: residual {:.2e} (bound {bound:.0e})", t.residual_phase));
    }
    let p = BlockadeParams::from_ratios(100.0, 0.0).map_err(|e| e.to_string())?;
    let t = blockade_gate_truth_table(&p, 1.0).map_err(|e| e.to_string())?;
    let expected = 1.0 - (-2.0 * PI / 100.0f64).exp();
    ok &= rel(t.losses[1], expected) <= 0.1;
    ok &= t.phases.iter().zip([0.0, PI, 0.0, 0.0]).all(|(a, b)| phase_distance(*a, b).abs() < 0.1);
    detail.push(format!("Γ/Ω=100: loss_01 {:.5} vs {expected:.5}", t.losses[1]));
    check(ok, detail.join("; "))
}

fn c6_phase_gate() -> Outcome {
    let species = Arc::new(SpeciesModel::sr87());
    let mut ok = true;
    let mut detail = Vec::new();
    for (u, t) in [(1000.0, 0.5e-3), (500.0, 0.3e-3), (2000.0, 0.9e-3)] {
        let device = Device::new(11).with_mechanism(GateMechanism::Collisional { u_hz: u, hold_s: Some(t) });
        let s = compile_circuit(&Circuit::new(6, vec![Gate::cz(0, 5)]), &device).map_err(|e| e.to_string())?;
        let background: Vec<(usize, u8)> = (1..5).map(|q| (q, (q % 2) as u8)).collect();
        let table = execute_truth_table(&species, &device.register_config(), (0, 5), &background, &s.ops())
            .map_err(|e| e.to_string())?;
        let phi = 2.0 * PI * u * t;
        let want = [0.0, phi, 0.0, 0.0];
        let err = table.phases.iter().zip(want).map(|(a, b)| phase_distance(*a, b).abs()).fold(0.0, f64::max);
        let pop = table.populations.iter().all(|p| (p - 1.0).abs() < 1e-12);
        ok &= err < 1e-9 && pop;
        detail.push(format!("U={u} Hz, T={t} s: φ={:.4}π, max error {err:.1e}", (phi / PI) % 2.0));
    }
    check(ok, detail.join("; "))
}

fn c7_addressing() -> Outcome {
    let sr = SpeciesModel::sr87();
    let st = sr87::readout_zero();
    let grad = sr.zeeman_gradient_hz_per_cm(&st, 100.0).map_err(|e| e.to_string())?;
    let split = sr.gradient_site_splitting(&st, 100.0, 344.6).map_err(|e| e.to_string())?;
    let clock = AtomicState::nuclear("3P0", HalfInt::from_twice(-9));
    let per_m = sr.gradient_site_splitting(&clock, 100.0, 344.6).map_err(|e| e.to_string())? / 4.5;
    check(
        rel(grad, 410e6) <= 0.05 && rel(split, 15e3) <= 0.1 && rel(per_m, 1.0) <= 0.1,
        format!("{:.1} MHz/cm, {:.2} kHz neighbour splitting, ³P₀ {per_m:.3} Hz per m_I", grad / 1e6, split / 1e3),
    )
}

fn c8_noise() -> Outcome {
    let sr = SpeciesModel::sr87();
    let (a, b) = (sr87::qubit_zero(), sr87::qubit_one());
    let mag = magnetic_noise_shift(&sr, (&a, &b), 1e-3).map_err(|e| e.to_string())?;
    let int = intensity_noise_shift(25e3, 1e-6).map_err(|e| e.to_string())?;
    let k = |l: &str| sr.level(l).ok().and_then(|l| l.zeeman_hz_per_gauss_per_m);
    let diff = match (k("3P0"), k("1S0")) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => return Err("missing clock coefficients".into()),
    };
    check(
        (mag - 0.185).abs() < 1e-9 && mag < 0.3 && int < 0.05 && (diff - 110.0).abs() <= 1.0,
        format!("ΔB shift {mag:.4} Hz, intensity {int:.4}, clock differential {diff} Hz/G"),
    )
}

fn synthetic_two_line() -> SpeciesModel {
    let doc = serde_json::json!({
        "name": "two-line",
        "nuclear_spin": "0",
        "levels": [
            {"name": "g", "J": "0", "zeeman_hz_per_gauss_per_m": 0.0},
            {"name": "e1", "J": "1", "zeeman_hz_per_gauss_per_m": 0.0},
            {"name": "e2", "J": "1", "zeeman_hz_per_gauss_per_m": 0.0}
        ],
        "lines": [
            {"lower": "g", "upper": "e1", "wavelength_nm": wavelength_of(0.1), "oscillator_strength": 1.0},
            {"lower": "g", "upper": "e2", "wavelength_nm": wavelength_of(0.2), "oscillator_strength": 0.5}
        ]
    });
    SpeciesModel::from_json(&doc.to_string()).expect("synthetic species")
}

fn c9_polarizability() -> Outcome {
    let syn = synthetic_two_line();
    let zeros = Polarizability::new(&syn)
        .find_zero_crossings("g", (wavelength_of(0.25), wavelength_of(0.05)), 0.5)
        .map_err(|e| e.to_string())?;
    // f₁/(ω₁² − ω²) + f₂/(ω₂² − ω²) = 0 ⇒ ω² = (f₁ω₂² + f₂ω₁²)/(f₁ + f₂) = 0.03.
    let exact = 0.03f64.sqrt();
    let syn_err = zeros.first().map_or(f64::INFINITY, |&z| rel(omega_of(z), exact));

    let sr = SpeciesModel::sr87();
    let pol = Polarizability::new(&sr);
    let a_g = pol.alpha("1S0", 627.0).map_err(|e| e.to_string())?;
    let a_c = pol.alpha("3P0", 689.2).map_err(|e| e.to_string())?;
    let zero = pol
        .find_zero_crossings("3P0", (600.0, 660.0), 0.1)
        .map_err(|e| e.to_string())?
        .into_iter()
        .min_by(|a, b| (a - 627.0).abs().total_cmp(&(b - 627.0).abs()));
    let zero = zero.ok_or("no ³P₀ zero between 600 and 660 nm")?;
    let ratio = match_depths(&LatticeSpec::new("1S0", zero, 1.0), &LatticeSpec::new("3P0", 689.2, 1.0), &sr)
        .map_err(|e| e.to_string())?;
    check(
        zeros.len() == 1
            && syn_err <= 1e-9
            && rel(a_g, 430.0) <= 0.2
            && rel(a_c, 1550.0) <= 0.2
            && (zero - 627.0).abs() <= 5.0
            && rel(ratio, 0.25) <= 0.15,
        format!(
            "synthetic zero rel. error {syn_err:.1e}; α(¹S₀,627)={a_g:.1}, α(³P₀,689.2)={a_c:.1} a.u.; ³P₀ zero {zero:.3} nm; depth ratio {ratio:.4}"
        ),
    )
}

fn c10_end_to_end() -> Outcome {
    let noise = NoiseModel::reference(&SpeciesModel::sr87());
    let params = BlockadeParams::from_hz(200.0, 0.0, 20e3).map_err(|e| e.to_string())?;
    let device = Device::blockade(3, &params);
    let cz = Circuit::new(2, vec![Gate::cz(0, 1)]);
    let s = compile_circuit(&cz, &device).map_err(|e| e.to_string())?;
    let b = price(&s, &noise).map_err(|e| e.to_string())?;
    let d = schedule_duration(&s);

    let coll = compile_circuit(&cz, &Device::new(3)).map_err(|e| e.to_string())?;
    let bc = price(&coll, &noise).map_err(|e| e.to_string())?;
    check(
        b.total_fidelity > 0.99 && (1e-3..=10e-3).contains(&d),
        format!(
            "blockade Γ/Ω=100: F={:.4} (loss item {:.4}), {:.2} ms; collisional reference: F={:.4}, {:.2} ms",
            b.total_fidelity,
            b.item("blockade_loss").unwrap_or(0.0),
            d * 1e3,
            bc.total_fidelity,
            schedule_duration(&coll) * 1e3
        ),
    )
}

fn c11_properties() -> Outcome {
    let start = Instant::now();
    let mut failed = Vec::new();
    for (name, suite) in common::suites() {
        if let Err(e) = suite(common::CASES) {
            failed.push(format!("{name}: {e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let n = common::suites().len();
    if failed.is_empty() && secs < 30.0 {
        Ok(format!("{n} suites × {} cases in {secs:.1} s", common::CASES))
    } else {
        failed.push(format!("{secs:.1} s"));
        Err(failed.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("closed form vs RK4", c1_oracle_equivalence),
        ("perturbative regime", c2_perturbative_regime),
        ("loss vs Γ/Ω", c3_loss_vs_gamma),
        ("loss vs Δ/Ω", c4_loss_vs_delta),
        ("blockade truth table", c5_blockade_truth_table),
        ("phase-gate execution", c6_phase_gate),
        ("addressing numbers", c7_addressing),
        ("Zeeman and noise budget", c8_noise),
        ("polarizability", c9_polarizability),
        ("end-to-end fidelity", c10_end_to_end),
        ("property suites", c11_properties),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(d) => println!("PASS {:>2} {name}: {d}", k + 1),
            Err(d) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {d}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
