//! Randomized property checks shared by the proptest target and the
//! acceptance runner. Each returns Err with the shrunk counterexample.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use aeqsim_core::blockade::{evolve, evolve_rk4, BlockadeParams, TwoLevelAmplitudes};
use aeqsim_core::compiler::{compile_circuit, Circuit, CompileError, Device, Gate};
use aeqsim_core::register::{ProtocolOp, Register, RegisterConfig, TransferDirection};
use aeqsim_core::SpeciesModel;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 1000;

pub type Suite = fn(u32) -> Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn params() -> impl Strategy<Value = BlockadeParams> {
    (0.1f64..10.0, -50.0f64..50.0, 0.0f64..100.0)
        .prop_map(|(o, d, g)| BlockadeParams::new(o, d * o, g * o).unwrap())
}

fn state() -> impl Strategy<Value = TwoLevelAmplitudes> {
    (0.0f64..PI, 0.0f64..2.0 * PI).prop_map(|(theta, phi)| {
        TwoLevelAmplitudes::new(
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        )
    })
}

/// ‖ψ(t₂)‖ ≤ ‖ψ(t₁)‖ for t₂ > t₁; equality when Γ = 0.
pub fn norm_monotonicity(cases: u32) -> Result<(), String> {
    let strat = (params(), state(), 0.0f64..20.0, 0.0f64..20.0, any::<bool>());
    runner(cases)
        .run(&strat, |(p, psi, a, b, lossless)| {
            let p = if lossless { BlockadeParams::new(p.omega, p.delta_u, 0.0).unwrap() } else { p };
            let (t1, t2) = (a.min(b) / p.omega, a.max(b) / p.omega);
            let n1 = evolve(&p, psi, t1).unwrap().norm_sqr();
            let n2 = evolve(&p, psi, t2).unwrap().norm_sqr();
            prop_assert!(n2 <= n1 + 1e-10, "{n2} > {n1}");
            if p.gamma == 0.0 {
                prop_assert!((n2 - 1.0).abs() < 1e-10 && (n1 - 1.0).abs() < 1e-10);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// evolve(t₁ + t₂) = evolve(evolve(t₁), t₂).
pub fn semigroup(cases: u32) -> Result<(), String> {
    let strat = (params(), state(), 0.0f64..15.0, 0.0f64..15.0);
    runner(cases)
        .run(&strat, |(p, psi, a, b)| {
            let (t1, t2) = (a / p.omega, b / p.omega);
            let whole = evolve(&p, psi, t1 + t2).unwrap();
            let parts = evolve(&p, evolve(&p, psi, t1).unwrap(), t2).unwrap();
            prop_assert!(whole.max_abs_diff(&parts) <= 1e-10, "{}", whole.max_abs_diff(&parts));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Closed form against RK4 at a tenth of the step bound.
pub fn rk4_agreement(cases: u32) -> Result<(), String> {
    let strat = (
        (0.2f64..5.0, -20.0f64..20.0, 0.0f64..20.0).prop_map(|(o, d, g)| BlockadeParams::new(o, d * o, g * o).unwrap()),
        state(),
        0.0f64..(2.0 * PI),
    );
    runner(cases)
        .run(&strat, |(p, psi, wt)| {
            let t = wt / p.omega;
            let a = evolve(&p, psi, t).unwrap();
            let b = evolve_rk4(&p, psi, t, 0.1 * p.max_rk4_step()).unwrap();
            prop_assert!(a.max_abs_diff(&b) <= 1e-8, "{}", a.max_abs_diff(&b));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Random register, random |0⟩ components moved to the transport lattice,
/// shift(+k) then shift(−k) gives back the identical state.
pub fn shift_round_trip(cases: u32) -> Result<(), String> {
    let species = Arc::new(SpeciesModel::sr87());
    let strat = (2usize..10)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(prop::option::of(0u8..2), n), -9i64..10, any::<bool>()));
    runner(cases)
        .run(&strat, |(n, bits, k, superpose)| {
            let atoms: Vec<(usize, u8)> = bits.iter().enumerate().filter_map(|(s, b)| b.map(|b| (s, b))).collect();
            let mut reg = Register::basis(species.clone(), RegisterConfig::new(n), &atoms).unwrap();
            let mut prep = Vec::new();
            if superpose && !atoms.is_empty() {
                let enc = &reg.config().encoding;
                prep.push(ProtocolOp::Pulse(aeqsim_core::register::PulseOp::new(
                    enc.zero.clone(),
                    enc.one.clone(),
                    PI / 2.0,
                    aeqsim_core::register::Target::Global,
                )));
            }
            prep.push(ProtocolOp::transfer(TransferDirection::StorageToTransport, 0, None));
            reg.run(&prep).unwrap();
            let before: Vec<_> = reg.branches().map(|(c, a)| (c.clone(), *a)).collect();
            let mut moved = reg.clone();
            if moved.apply_op(&ProtocolOp::shift(k)).is_err() {
                // Off the register: rejected, and the state is untouched.
                let after: Vec<_> = moved.branches().map(|(c, a)| (c.clone(), *a)).collect();
                prop_assert_eq!(after, before);
                return Ok(());
            }
            moved.apply_op(&ProtocolOp::shift(-k)).unwrap();
            let after: Vec<_> = moved.branches().map(|(c, a)| (c.clone(), *a)).collect();
            prop_assert_eq!(after, before);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..n, -6.0f64..6.0).prop_map(|(q, a)| Gate::rx(q, a)),
        (0..n, -6.0f64..6.0).prop_map(|(q, a)| Gate::rz(q, a)),
        (0..n, 0..n, 0.1f64..6.0).prop_map(|(i, j, a)| Gate { angle: Some(a), ..Gate::cz(i, j) }),
    ]
}

/// Compiled circuits return every atom to its home site, from any input.
pub fn schedule_position_restoration(cases: u32) -> Result<(), String> {
    let species = Arc::new(SpeciesModel::sr87());
    let strat = (2usize..5).prop_flat_map(|n| {
        (Just(n), prop::collection::vec(gate(n), 0..4), prop::collection::vec(0u8..2, n), 0usize..4)
    });
    runner(cases)
        .run(&strat, |(n, gates, bits, extra)| {
            // Keep CZs whose partner lands on a free site of the device.
            let n_sites = 2 * n + extra;
            let gates: Vec<Gate> = gates
                .into_iter()
                .filter(|g| g.targets.len() == 1 || {
                    let (i, j) = (g.targets[0] as i64, g.targets[1] as i64);
                    i != j && (n as i64..n_sites as i64).contains(&(2 * j - i))
                })
                .collect();
            let schedule = compile_circuit(&Circuit::new(n, gates), &Device::new(n_sites)).unwrap();
            let qubits: Vec<(usize, u8)> = bits.iter().cloned().enumerate().collect();
            let mut reg = Register::basis(species.clone(), schedule.device.register_config(), &qubits).unwrap();
            reg.run(&schedule.ops()).unwrap();
            let home: Vec<usize> = (0..n).collect();
            for (cfg, _) in reg.branches() {
                let sites: Vec<usize> = cfg.iter().map(|r| r.site).collect();
                prop_assert_eq!(&sites, &home);
            }
            prop_assert!((reg.norm_sqr() - 1.0).abs() < 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Two CZs in one moment compile iff their footprints {i, j, 2j − i} are
/// disjoint (same displacement, landing sites free).
pub fn parallel_layer_disjointness(cases: u32) -> Result<(), String> {
    let strat = (3usize..7, 1usize..3).prop_flat_map(|(n, d)| (Just(n), 0..n - d, 0..n - d, Just(d), any::<bool>()));
    runner(cases)
        .run(&strat, |(n, a1, a2, d, neg)| {
            // Both gates move by the same ±d.
            let ((i1, j1), (i2, j2)) = if neg { ((a1 + d, a1), (a2 + d, a2)) } else { ((a1, a1 + d), (a2, a2 + d)) };
            let n_sites = 3 * n + 8;
            // Qubits sit on 0..n; place the device so that landings can be free.
            let c = Circuit::new(n, vec![Gate::cz(i1, j1).at(0), Gate::cz(i2, j2).at(0)]);
            let fp = |i: usize, j: usize| [i as i64, j as i64, 2 * j as i64 - i as i64];
            let (a, b) = (fp(i1, j1), fp(i2, j2));
            let overlap = a.iter().any(|x| b.contains(x));
            let landings_free = [a[2], b[2]].iter().all(|&l| l >= n as i64 && l < n_sites as i64);
            match compile_circuit(&c, &Device::new(n_sites)) {
                Ok(s) => {
                    prop_assert!(!overlap, "overlapping CZ{:?} CZ{:?} accepted", (i1, j1), (i2, j2));
                    prop_assert_eq!(s.layers.len(), 1);
                }
                Err(CompileError::OverlappingTargets { .. }) => prop_assert!(overlap),
                Err(CompileError::Unschedulable(_)) => prop_assert!(!landings_free || overlap),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
            if !overlap && landings_free {
                prop_assert!(compile_circuit(&c, &Device::new(n_sites)).is_ok());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// The five suites gathered for the acceptance runner.
pub fn suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("norm monotonicity", norm_monotonicity),
        ("semigroup composition", semigroup),
        ("shift round trip", shift_round_trip),
        ("schedule position restoration", schedule_position_restoration),
        ("parallel-layer disjointness", parallel_layer_disjointness),
    ]
}
