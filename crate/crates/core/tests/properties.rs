mod common;

use aeqsim_core::atomdata::sr87;
use aeqsim_core::budget::{exposure_budget, LayerExposure, Occupation};
use aeqsim_core::{AtomicState, HalfInt, NoiseModel, SpeciesModel};
use proptest::prelude::*;

#[test]
fn norm_is_non_increasing() {
    common::norm_monotonicity(common::CASES).unwrap();
}

#[test]
fn evolution_composes() {
    common::semigroup(common::CASES).unwrap();
}

#[test]
fn closed_form_matches_rk4() {
    common::rk4_agreement(common::CASES).unwrap();
}

#[test]
fn shifts_undo_each_other() {
    common::shift_round_trip(common::CASES).unwrap();
}

#[test]
fn compiled_schedules_restore_positions() {
    common::schedule_position_restoration(common::CASES).unwrap();
}

#[test]
fn parallel_layers_are_disjoint() {
    common::parallel_layer_disjointness(common::CASES).unwrap();
}

fn any_state() -> impl Strategy<Value = AtomicState> {
    prop_oneof![
        (-9i32..=9).prop_filter("odd", |m| m % 2 != 0).prop_map(|m| AtomicState::nuclear("1S0", HalfInt::from_twice(m))),
        (-9i32..=9).prop_filter("odd", |m| m % 2 != 0).prop_map(|m| AtomicState::nuclear("3P0", HalfInt::from_twice(m))),
        (-13i32..=13)
            .prop_filter("odd", |m| m % 2 != 0)
            .prop_map(|m| AtomicState::hyperfine("3P2", HalfInt::from_twice(13), HalfInt::from_twice(m))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: common::CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn zeeman_is_odd_and_linear(state in any_state(), b in -10.0f64..10.0, k in -4.0f64..4.0) {
        let sr = SpeciesModel::sr87();
        let s = sr.zeeman_shift(&state, b).unwrap();
        prop_assert_eq!(s, -sr.zeeman_shift(&state.mirrored(), b).unwrap());
        prop_assert_eq!(s, -sr.zeeman_shift(&state, -b).unwrap());
        let scaled = sr.zeeman_shift(&state, k * b).unwrap();
        prop_assert!((scaled - k * s).abs() <= 1e-12 * (1.0 + scaled.abs()));
    }

    #[test]
    fn splitting_is_linear(g in 0.0f64..500.0, a in 100.0f64..1000.0, k in 0.1f64..10.0) {
        let sr = SpeciesModel::sr87();
        let st = sr87::readout_zero();
        let base = sr.gradient_site_splitting(&st, g, a).unwrap();
        let tol = 1e-12 * (1.0 + base.abs() * k);
        prop_assert!((sr.gradient_site_splitting(&st, k * g, a).unwrap() - k * base).abs() <= tol);
        prop_assert!((sr.gradient_site_splitting(&st, g, k * a).unwrap() - k * base).abs() <= tol);
    }

    #[test]
    fn more_exposure_never_helps(
        d in 0.0f64..0.05,
        occ in 0.0f64..0.05,
        shared in 0.0f64..0.05,
        loss in 0.0f64..0.5,
        extra in 0.0f64..0.05,
        which in 0usize..4,
    ) {
        let sr = SpeciesModel::sr87();
        let noise = NoiseModel::reference(&sr);
        let base = LayerExposure {
            duration_s: d,
            occupation: vec![Occupation::new("3P2", occ)],
            shared_site_s: shared,
            blockade_loss: loss,
        };
        let mut more = base.clone();
        match which {
            0 => more.duration_s += extra,
            1 => more.occupation[0].duration_s += extra,
            2 => more.shared_site_s += extra,
            _ => more.blockade_loss = (loss + extra).min(1.0),
        }
        let f0 = exposure_budget(&sr, [&base], &noise, None).unwrap().total_fidelity;
        let f1 = exposure_budget(&sr, [&more], &noise, None).unwrap().total_fidelity;
        prop_assert!(f1 <= f0 + 1e-15, "{f1} > {f0}");
    }
}
