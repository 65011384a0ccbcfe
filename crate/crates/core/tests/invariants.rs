//! Invariants of the public API, checked on random parameters.

use ncdt_core::averaged::{bessel_j0, stationary_states, StationaryKind};
use ncdt_core::integrator::{propagate, Propagation};
use ncdt_core::model::{physical_to_model, PhysicalParams};
use ncdt_core::observables::{localization, return_intensity};
use ncdt_core::{zone_reduce, Amplitudes, Complex64, ModelParams, Nonlinearity};
use proptest::prelude::*;

fn nonlinearity() -> impl Strategy<Value = Nonlinearity> {
    prop_oneof![Just(Nonlinearity::Focusing), Just(Nonlinearity::Defocusing)]
}

fn lab() -> PhysicalParams {
    PhysicalParams {
        wavelength: 1.55e-6,
        n2: 1.2e-17,
        sigma_eff: 12e-12,
        power: 100.0,
        bend_amplitude: 10e-6,
        bend_period: 1e-2,
        separation: 15e-6,
        substrate_index: 1.5,
        transfer_length: 2e-2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zone_reduction_lands_in_first_zone(eps in -100.0..100.0f64, w in 0.5..20.0f64) {
        let r = zone_reduce(eps, w);
        prop_assert!(r > -0.5 * w - 1e-12 && r <= 0.5 * w + 1e-12);
        let k = (eps - r) / w;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn propagation_keeps_the_norm(
        w in 2.0..12.0f64,
        s in 0.0..3.0f64,
        chi in 0.0..1.0f64,
        nl in nonlinearity(),
        theta in 0.0..1.5f64,
    ) {
        let p = ModelParams::from_ratios(w, s, chi, nl).unwrap();
        let start = Amplitudes::normalized(
            Complex64::new(theta.cos(), 0.0),
            Complex64::new(0.0, theta.sin()),
        ).unwrap();
        let traj = propagate(&p, &start, &Propagation::new(&p, 10.0)).unwrap();
        prop_assert!(traj.is_valid());
        prop_assert!(traj.norm_drift < 1e-10);
        let p_return = return_intensity(&traj).unwrap();
        prop_assert!(p_return.iter().all(|x| (-1e-12..=1.0 + 1e-9).contains(x)));
        prop_assert_eq!(localization(&traj).unwrap(), p_return.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn stationary_states_solve_the_averaged_dimer(
        v_eff in -1.0..1.0f64,
        chi in 0.0..2.0f64,
        nl in nonlinearity(),
    ) {
        let states = stationary_states(v_eff, chi, nl);
        let broken = states.iter().filter(|s| matches!(s.kind, StationaryKind::BrokenA | StationaryKind::BrokenB)).count();
        prop_assert_eq!(broken > 0, chi > v_eff.abs() * (1.0 + 1e-12));
        for s in &states {
            prop_assert!(s.residual(v_eff, chi, nl) < 1e-12);
            let norm = s.phi[0].norm_sqr() + s.phi[1].norm_sqr();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn defocusing_negates_and_exchanges_levels(v_eff in -1.0..1.0f64, chi in 0.0..2.0f64) {
        let focus = stationary_states(v_eff, chi, Nonlinearity::Focusing);
        let defocus = stationary_states(v_eff, chi, Nonlinearity::Defocusing);
        prop_assert_eq!(focus.len(), defocus.len());
        let mu = |states: &[ncdt_core::averaged::StationaryState], kind| {
            states.iter().find(|s| s.kind == kind).map(|s| s.mu)
        };
        use StationaryKind::*;
        for (a, b) in [(Symmetric, Antisymmetric), (Antisymmetric, Symmetric), (BrokenA, BrokenA)] {
            if let (Some(x), Some(y)) = (mu(&defocus, a), mu(&focus, b)) {
                prop_assert!((x + y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nonlinearity_scales_with_power(factor in 0.1..10.0f64) {
        let base = physical_to_model(&lab(), Nonlinearity::Focusing).unwrap();
        let scaled = physical_to_model(
            &PhysicalParams { power: lab().power * factor, ..lab() },
            Nonlinearity::Focusing,
        ).unwrap();
        prop_assert!((scaled.chi() / base.chi() - factor).abs() < 1e-12 * factor);
        prop_assert_eq!(scaled.drive(), base.drive());
        prop_assert_eq!(scaled.coupling(), base.coupling());
    }

    #[test]
    fn j0_is_bounded(x in 0.0..30.0f64) {
        prop_assert!(bessel_j0(x).abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn straight_guides_have_no_drive() {
    let p = physical_to_model(
        &PhysicalParams {
            bend_amplitude: 0.0,
            ..lab()
        },
        Nonlinearity::Focusing,
    )
    .unwrap();
    assert_eq!(p.drive(), 0.0);
    assert_eq!(p.drive_ratio(), 0.0);
}
