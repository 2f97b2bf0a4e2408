//! Cross-module checks through the public API.

use bohmnl_core::closed_form::{eta_common, eta_sch, v_common, v_sch};
use bohmnl_core::gaussian_engine::{
    drift_diffusion, initial_moments, kernel_from_moments, moments_at, propagate, quantum_force, velocity_coeffs,
    Particle,
};
use bohmnl_core::measures::{eta_engine, EtaCurve};
use bohmnl_core::trajectories::{integrate, velocity_field, EngineField, ForceField};
use bohmnl_core::{make_params, ConfigPoint, Model, Scenario};
use proptest::prelude::*;

fn model(s: Scenario, g: f64, temp: f64, mu: f64) -> Model {
    Model::new(s, make_params(g, temp, mu).unwrap())
}

#[test]
fn common_bath_tends_to_unitary_linearly_in_gamma() {
    let (mu, temp) = (0.4, 10.0);
    let gap = |g: f64| {
        let p = make_params(g, temp, mu).unwrap();
        let mut worst = 0.0f64;
        for &t in &[0.3, 1.0, 2.5] {
            for &(x1, x2) in &[(1.0, -0.5), (-2.0, 0.3), (0.7, 0.7)] {
                let q = ConfigPoint::new(x1, x2, t);
                worst = worst.max((v_common(q, &p).unwrap().v1 - v_sch(q, mu).v1).abs());
            }
            worst = worst.max((eta_common(t, &p).unwrap() - eta_sch(t, mu)).abs());
        }
        worst
    };
    let (a, b, c) = (gap(1e-4), gap(5e-5), gap(2.5e-5));
    assert!((a / b - 2.0).abs() < 0.05 && (b / c - 2.0).abs() < 0.05, "{a} {b} {c}");
    assert!(gap(1e-9) < 1e-7);
}

#[test]
fn separable_state_feels_a_common_bath() {
    // distinct baths leave μ = 1 uncorrelated; a shared bath does not
    let d = EtaCurve::closed_form(&model(Scenario::DistinctBaths, 0.1, 10.0, 1.0), 5.0, 0.1).unwrap();
    let c = EtaCurve::closed_form(&model(Scenario::CommonBath, 0.1, 10.0, 1.0), 5.0, 0.1).unwrap();
    assert!(d.values.iter().all(|&v| v == 0.0));
    assert!(c.values.iter().skip(1).all(|&v| v > 0.0));
}

#[test]
fn routed_fields_agree_with_engine_on_trajectories() {
    for s in Scenario::ALL {
        let md = model(s, 0.1, 15.0, 0.6);
        let routed = velocity_field(&md, 3.0, 0.01).unwrap();
        let engine = EngineField::tabulated(md, 3.0, 0.01).unwrap();
        let a = integrate(routed.as_ref(), -0.8, 1.1, 3.0, 0.01).unwrap();
        let b = integrate(&engine, -0.8, 1.1, 3.0, 0.01).unwrap();
        let (p, q) = (a.points.last().unwrap(), b.points.last().unwrap());
        assert!((p.0 - q.0).abs() < 1e-8 && (p.1 - q.1).abs() < 1e-8, "{s}");
    }
}

#[test]
fn engine_field_force_matches_kernel_force() {
    let md = model(Scenario::CommonBath, 0.1, 10.0, 0.5);
    let f = EngineField::new(md);
    let k = kernel_from_moments(&moments_at(&md, 1.7).unwrap()).unwrap();
    let a = f.force(0.4, -1.2, 1.7).unwrap();
    assert!((a.f1 - quantum_force(&k, Particle::One, 0.4, -1.2)).abs() < 1e-12);
    assert!((a.f2 - quantum_force(&k, Particle::Two, 0.4, -1.2)).abs() < 1e-12);
}

#[test]
fn distinct_bath_coupling_rises_then_decays() {
    let md = model(Scenario::DistinctBaths, 0.1, 10.0, 0.5);
    let c = EtaCurve::engine(&md, 1.0, 0.05).unwrap();
    let early = c.values[1];
    assert!(early > 0.0 && c.values[6] > early);
    assert!(eta_engine(&md, 30.0).unwrap() < 1e-2 * c.values.iter().cloned().fold(0.0, f64::max));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_matches_closed_form_velocity(
        x1 in -3.0f64..3.0, x2 in -3.0f64..3.0, t in 0.05f64..6.0,
        mu in 0.15f64..1.0, temp in 1.0f64..25.0, g in 0.02f64..0.3,
    ) {
        let p = make_params(g, temp, mu).unwrap();
        let m = moments_at(&Model::new(Scenario::CommonBath, p), t).unwrap();
        let a = velocity_coeffs(&m).unwrap().apply(x1, x2);
        let b = v_common(ConfigPoint::new(x1, x2, t), &p).unwrap();
        prop_assert!((a.v1 - b.v1).abs() < 1e-8 && (a.v2 - b.v2).abs() < 1e-8);
    }

    #[test]
    fn semigroup_through_public_api(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, s in 0usize..3) {
        let md = model(Scenario::ALL[s], 0.1, 10.0, 0.35);
        let dd = drift_diffusion(&md);
        let m0 = initial_moments(0.35).unwrap();
        let direct = propagate(&m0, &dd, t1 + t2).unwrap();
        let chained = propagate(&propagate(&m0, &dd, t1).unwrap(), &dd, t2).unwrap();
        let scale = direct.cov.amax().max(1.0);
        prop_assert!((direct.cov - chained.cov).amax() < 1e-9 * scale);
    }

    #[test]
    fn coupling_is_exchange_symmetric(t in 0.0f64..8.0, s in 0usize..3, mu in 0.1f64..1.0) {
        let v = velocity_coeffs(&moments_at(&model(Scenario::ALL[s], 0.1, 10.0, mu), t).unwrap()).unwrap();
        prop_assert!((v.0[(0, 1)] - v.0[(1, 0)]).abs() <= 1e-12 * v.0.amax().max(1e-12));
    }

    #[test]
    fn fields_are_odd(x1 in -3.0f64..3.0, x2 in -3.0f64..3.0, t in 0.0f64..4.0, s in 0usize..3) {
        let f = velocity_field(&model(Scenario::ALL[s], 0.1, 10.0, 0.45), 4.0, 0.01).unwrap();
        let a = f.velocity(x1, x2, t).unwrap();
        let b = f.velocity(-x1, -x2, t).unwrap();
        prop_assert!(a.v1 == -b.v1 && a.v2 == -b.v2);
    }
}
