//! Property suites: structural invariants that must hold for randomly drawn
//! inputs, not just on hand-picked cases.
//!
//! Each suite is an independent test: energy conservation along the flow,
//! flow reversibility, chord-length invariance along a geodesic, Carnot
//! group associativity, and the vanishing of the characteristic-point
//! fraction as the detection threshold shrinks.

use nalgebra::DVector;
use proptest::prelude::*;
use srlab_core::carnot::{random_spec, CarnotModel};
use srlab_core::constants::sphere_area;
use srlab_core::domain::Hemisphere;
use srlab_core::flow::{chord_data, integrate_geodesic, FlowOptions};
use srlab_core::model::{characteristic_scan, BandModel, MartinetModel, SphereKind, SphereModel};
use srlab_core::quadrature::sphere_rule;
use srlab_core::sampling::{rng_for, unit_sphere};
use srlab_core::{FrameCovector, Model};

fn test_models() -> Vec<Box<dyn Model>> {
    vec![
        Box::new(BandModel::new(0.1)),
        Box::new(MartinetModel),
        Box::new(SphereModel::new(SphereKind::Round, 2)),
        Box::new(SphereModel::new(SphereKind::Chf, 1)),
        Box::new(SphereModel::new(SphereKind::Qhf, 1)),
        Box::new(CarnotModel::heisenberg(1)),
    ]
}

fn random_reduced(model: &dyn Model, seed: u64) -> FrameCovector {
    let mut rng = rng_for(seed, 11);
    let q = if model.on_sphere() {
        unit_sphere(&mut rng, model.chart_dim())
    } else {
        DVector::from_fn(model.chart_dim(), |_, _| {
            rand::Rng::gen::<f64>(&mut rng) * 0.8 - 0.4
        })
    };
    let u = unit_sphere(&mut rng, model.rank());
    FrameCovector::reduced(q, u, model.corank())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    /// H and the vertical momentum are conserved along random geodesics on
    /// every bundled model.
    #[test]
    fn energy_and_vertical_momentum_are_conserved(seed in 0u64..1_000_000) {
        for (mi, model) in test_models().iter().enumerate() {
            let fc = random_reduced(model.as_ref(), seed ^ (mi as u64) << 32);
            let trace = integrate_geodesic(model.as_ref(), &fc, 3.0, &FlowOptions::default())
                .unwrap();
            prop_assert!(trace.h_drift < 1e-9, "{}: H drift {:.2e}", model.id(), trace.h_drift);
            prop_assert!(trace.v_drift < 1e-9, "{}: v drift {:.2e}", model.id(), trace.v_drift);
        }
    }

    /// Running a geodesic for time t, reversing the covector, and running
    /// for t again returns to the start point.
    #[test]
    fn flow_is_reversible(seed in 0u64..1_000_000) {
        for (mi, model) in test_models().iter().enumerate() {
            let fc = random_reduced(model.as_ref(), seed ^ (mi as u64) << 24);
            let t = 1.7;
            let opts = FlowOptions::default();
            let fwd = integrate_geodesic(model.as_ref(), &fc, t, &opts).unwrap();
            let end = model.covector_from_state(fwd.states.last().unwrap());
            let back = integrate_geodesic(model.as_ref(), &end.reversed(), t, &opts).unwrap();
            let ret = model.covector_from_state(back.states.last().unwrap());
            let dev = (ret.q - &fc.q).norm();
            prop_assert!(dev < 1e-7, "{}: return deviation {:.2e}", model.id(), dev);
        }
    }

    /// Step-2 Carnot multiplication is associative and inverses cancel.
    #[test]
    fn carnot_group_is_associative(seed in 0u64..1_000_000, coords in prop::collection::vec(-2.0f64..2.0, 15)) {
        let spec = random_spec(seed);
        let dim = spec.k + spec.m2;
        let take = |lo: usize| DVector::from_fn(dim, |i, _| coords[lo + i]);
        let (a, b, c) = (take(0), take(5), take(10));
        let ab_c = spec.multiply(&spec.multiply(&a, &b).unwrap(), &c).unwrap();
        let a_bc = spec.multiply(&a, &spec.multiply(&b, &c).unwrap()).unwrap();
        prop_assert!((ab_c - a_bc).norm() < 1e-12);
        let id = spec.multiply(&a, &spec.inverse(&a)).unwrap();
        prop_assert!(id.norm() < 1e-12);
    }

    /// The full-sphere fiber rule reproduces the quadratic-moment identity
    /// ∫ ⟨u, Qu⟩ dη = |S^{k−1}| tr(Q) / k for random symmetric Q.
    #[test]
    fn fiber_rule_quadratic_moments(seed in 0u64..1_000_000) {
        let mut rng = rng_for(seed, 23);
        for k in 2..=4usize {
            let mut q = nalgebra::DMatrix::from_fn(k, k, |_, _| {
                rand::Rng::gen::<f64>(&mut rng) * 2.0 - 1.0
            });
            q = (&q + q.transpose()) * 0.5;
            let rule = sphere_rule(k, 48).unwrap();
            let got = rule.integrate(|u| (u.transpose() * &q * u)[(0, 0)]);
            let expect = sphere_area(k - 1) * q.trace() / k as f64;
            prop_assert!((got - expect).abs() < 1e-8, "k={k}: {got} vs {expect}");
        }
    }
}

/// The chord length L = ℓ(λ) + ℓ(−λ) is invariant along the geodesic: moving
/// the base point by time s trades forward for backward length.
#[test]
fn chord_length_is_flow_invariant() {
    let model = SphereModel::new(SphereKind::Chf, 1);
    let domain = Hemisphere;
    let opts = FlowOptions::default();
    let mut rng = rng_for(41, 3);
    let mut checked = 0;
    for seed in 0..12u64 {
        let mut q = unit_sphere(&mut rng, 4);
        q[0] = q[0].abs().max(0.2);
        q /= q.norm();
        let u = unit_sphere(&mut rng, 2);
        let fc = FrameCovector::reduced(q, u, 1);
        let cd0 = chord_data(&model, &domain, &fc, 10.0, &opts).unwrap();
        if cd0.capped() || cd0.l_fwd < 0.2 {
            continue;
        }
        let s = 0.5 * cd0.l_fwd;
        let mid = integrate_geodesic(&model, &fc, s, &opts).unwrap();
        let fc_mid = model.covector_from_state(mid.states.last().unwrap());
        let cd1 = chord_data(&model, &domain, &fc_mid, 10.0, &opts).unwrap();
        assert!(
            (cd1.chord() - cd0.chord()).abs() < 1e-6,
            "seed {seed}: L moved from {} to {}",
            cd0.chord(),
            cd1.chord()
        );
        assert!((cd1.l_fwd - (cd0.l_fwd - s)).abs() < 1e-6);
        checked += 1;
    }
    assert!(checked >= 6, "only {checked} usable chords");
}

/// The σ-weighted characteristic fraction of the boundary tends to zero with
/// the detection threshold (characteristic points have measure zero).
#[test]
fn characteristic_fraction_vanishes_with_threshold() {
    let model = SphereModel::new(SphereKind::Chf, 1);
    let domain = Hemisphere;
    let mut fractions = Vec::new();
    for eps in [0.3, 0.1, 0.03, 0.01] {
        let mut rng = rng_for(77, 5);
        let scan = characteristic_scan(&model, &domain, 4000, eps, &mut rng).unwrap();
        fractions.push(scan.fraction);
    }
    for w in fractions.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "fractions not decreasing: {fractions:?}");
    }
    assert!(
        *fractions.last().unwrap() < 0.01,
        "characteristic fraction at ε = 0.01 is {:.3e}",
        fractions.last().unwrap()
    );
}
