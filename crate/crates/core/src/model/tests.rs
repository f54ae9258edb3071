use super::*;
use crate::domain::Hemisphere;
use crate::sampling::{rng_for, unit_sphere};
use approx::assert_abs_diff_eq;
use nalgebra::DVector;

fn random_sphere_point(dim: usize, seed: u64) -> DVector<f64> {
    let mut rng = rng_for(seed, 0);
    unit_sphere(&mut rng, dim)
}

fn all_sphere_models() -> Vec<SphereModel> {
    vec![
        SphereModel::new(SphereKind::Round, 2),
        SphereModel::new(SphereKind::Round, 3),
        SphereModel::new(SphereKind::Chf, 1),
        SphereModel::new(SphereKind::Chf, 2),
        SphereModel::new(SphereKind::Qhf, 1),
    ]
}

#[test]
fn sphere_frames_are_orthonormal_and_tangent() {
    for (mi, model) in all_sphere_models().into_iter().enumerate() {
        let q = random_sphere_point(model.chart_dim(), 10 + mi as u64);
        let h = model.horizontal_frame(&q);
        let v = model.vertical_frame(&q);
        assert_eq!(h.len(), model.rank());
        assert_eq!(v.len(), model.corank());
        let all: Vec<&DVector<f64>> = h.iter().chain(v.iter()).collect();
        for (i, a) in all.iter().enumerate() {
            assert_abs_diff_eq!(a.dot(&q), 0.0, epsilon = 1e-12);
            for (j, b) in all.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a.dot(b), expect, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn qhf_vertical_fields_are_orthogonal_unit_tangents() {
    let model = SphereModel::new(SphereKind::Qhf, 1);
    let q = random_sphere_point(8, 3);
    for a in 0..3 {
        let za = model.apply_vertical(a, &q);
        assert_abs_diff_eq!(za.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(za.dot(&q), 0.0, epsilon = 1e-12);
        for b in (a + 1)..3 {
            assert_abs_diff_eq!(za.dot(&model.apply_vertical(b, &q)), 0.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn finite_difference_brackets_match_analytic_martinet() {
    let model = MartinetModel;
    let q = DVector::from_vec(vec![0.7, -0.3, 0.2]);
    let analytic = model.bracket_tensors(&q);
    let fd = fd_bracket_tensors(&model, &q);
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..1 {
                assert_abs_diff_eq!(
                    analytic.c.get(i, j, l),
                    fd.c.get(i, j, l),
                    epsilon = 1e-6
                );
            }
        }
    }
    assert!(fd.a.max_abs() < 1e-6, "a residual {}", fd.a.max_abs());
    assert!(fd.d.max_abs() < 1e-6, "d residual {}", fd.d.max_abs());
    assert!(fd.b.max_abs() < 1e-6, "b residual {}", fd.b.max_abs());
}

#[test]
fn chart_state_roundtrip() {
    let model = MartinetModel;
    let fc = FrameCovector {
        q: DVector::from_vec(vec![0.3, 0.1, -0.2]),
        u: DVector::from_vec(vec![0.6, 0.8]),
        v: DVector::from_vec(vec![0.25]),
    };
    let s = model.state_from_covector(&fc);
    let back = model.covector_from_state(&s);
    assert!((back.q - &fc.q).norm() < 1e-14);
    assert!((back.u - &fc.u).norm() < 1e-14);
    assert!((back.v - &fc.v).norm() < 1e-14);
    assert_abs_diff_eq!(model.state_hamiltonian(&s), 0.5, epsilon = 1e-14);
}

#[test]
fn sphere_state_roundtrip_preserves_frame_momenta() {
    for (mi, model) in all_sphere_models().into_iter().enumerate() {
        let q = random_sphere_point(model.chart_dim(), 40 + mi as u64);
        let mut rng = rng_for(50 + mi as u64, 1);
        let u = unit_sphere(&mut rng, model.rank());
        let fc = FrameCovector::reduced(q, u, model.corank());
        let s = model.state_from_covector(&fc);
        let back = model.covector_from_state(&s);
        // Frame coordinates are recovered exactly because the pointwise
        // frame choice is deterministic.
        assert!((back.u - &fc.u).norm() < 1e-12, "{}", model.id());
        assert!(back.v.norm() < 1e-12, "{}", model.id());
        assert_abs_diff_eq!(model.state_hamiltonian(&s), 0.5, epsilon = 1e-12);
    }
}

#[test]
fn sphere_hamiltonian_is_frame_rotation_invariant() {
    // H depends only on (q, p), not on the frame used to build p from u:
    // rotating u and the frame together gives the same state.
    let model = SphereModel::new(SphereKind::Qhf, 1);
    let q = random_sphere_point(8, 7);
    let mut rng = rng_for(8, 2);
    let u = unit_sphere(&mut rng, model.rank());
    let fc = FrameCovector::reduced(q.clone(), u, model.corank());
    let s = model.state_from_covector(&fc);
    assert_abs_diff_eq!(model.state_hamiltonian(&s), fc.hamiltonian(), epsilon = 1e-12);
}

#[test]
fn hamiltonian_ignores_vertical_momentum() {
    // The sub-Riemannian Hamiltonian is degenerate in v.
    let model = SphereModel::new(SphereKind::Chf, 1);
    let q = random_sphere_point(4, 9);
    let mut rng = rng_for(9, 4);
    let u = unit_sphere(&mut rng, model.rank());
    let with_v = FrameCovector { q: q.clone(), u: u.clone(), v: DVector::from_vec(vec![0.7]) };
    let s = model.state_from_covector(&with_v);
    assert_abs_diff_eq!(model.state_hamiltonian(&s), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(model.state_vertical_norm(&s), 0.7, epsilon = 1e-12);
}

#[test]
fn horizontal_normal_on_chf_equator() {
    let model = SphereModel::new(SphereKind::Chf, 1);
    let domain = Hemisphere;
    // Non-characteristic equator point: y₀ = 0.
    let q = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
    match horizontal_normal(&model, &domain, &q, 1e-6).unwrap() {
        NormalResult::Normal { chart, grad_h_norm, frame_coords } => {
            assert_abs_diff_eq!(grad_h_norm, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(frame_coords.norm(), 1.0, epsilon = 1e-12);
            // The normal must point into {x₀ > 0}.
            assert_abs_diff_eq!(chart[0], 1.0, epsilon = 1e-12);
        }
        NormalResult::Characteristic { .. } => panic!("unexpected characteristic point"),
    }
    // Characteristic point: y₀ = ±1 (the vertical field is the only missing
    // tangent direction and it is tangent to the equator elsewhere only).
    let qc = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
    match horizontal_normal(&model, &domain, &qc, 1e-6).unwrap() {
        NormalResult::Characteristic { grad_h_norm } => assert!(grad_h_norm < 1e-10),
        NormalResult::Normal { .. } => panic!("expected characteristic point"),
    }
}

#[test]
fn chf_horizontal_gradient_norm_closed_form() {
    // |∇_H x₀|² = 1 − x₀² − y₀² on the unit sphere.
    let model = SphereModel::new(SphereKind::Chf, 1);
    for seed in 0..5 {
        let q = random_sphere_point(4, 60 + seed);
        let gh: f64 = model.horizontal_frame(&q).iter().map(|x| x[0] * x[0]).sum();
        let expect = 1.0 - q[0] * q[0] - q[1] * q[1];
        assert_abs_diff_eq!(gh, expect, epsilon = 1e-12);
    }
}

#[test]
fn local_frames_agree_with_pointwise_frames_at_base() {
    for (mi, model) in all_sphere_models().into_iter().enumerate() {
        let q = random_sphere_point(model.chart_dim(), 70 + mi as u64);
        let frames = model.local_frames(&q);
        let fp = frames(&q);
        let pointwise = model.horizontal_frame(&q);
        for (a, b) in fp.horizontal.iter().zip(&pointwise) {
            assert!((a - b).norm() < 1e-10, "{}", model.id());
        }
    }
}

#[test]
fn registry_builds_all_ids() {
    for (id, param) in [
        ("round-sphere", Some(2.0)),
        ("chf", Some(1.0)),
        ("qhf", Some(1.0)),
        ("heisenberg", Some(1.0)),
        ("martinet", None),
        ("spherical-band", Some(0.1)),
    ] {
        let m = model_by_id(id, param).unwrap();
        assert!(m.rank() >= 1);
        assert!(m.manifold_dim() > m.rank() || matches!(id, "round-sphere"));
    }
    assert!(model_by_id("nope", None).is_err());
    assert!(model_by_id("chf", None).is_err());
    assert!(model_by_id("chf", Some(0.5)).is_err());
}

#[test]
fn band_and_martinet_dimensions() {
    let band = BandModel::new(0.1);
    assert_eq!(band.rank(), 1);
    assert_eq!(band.corank(), 1);
    assert_abs_diff_eq!(band.eps(), 0.1);
    let mar = MartinetModel;
    assert_eq!(mar.rank(), 2);
    assert_eq!(mar.corank(), 1);
    // Analytic and finite-difference brackets agree for the band (all zero).
    let q = DVector::from_vec(vec![1.3, 0.4]);
    let fd = fd_bracket_tensors(&band, &q);
    assert!(fd.c.max_abs() < 1e-9 && fd.d.max_abs() < 1e-9);
}
