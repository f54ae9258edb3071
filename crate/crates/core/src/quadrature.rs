//! Gauss–Legendre quadrature and product-angle rules on small spheres.
//!
//! The fiber measure of the reduced unit bundle at a point is the round
//! measure of S^{k−1} written in an orthonormal horizontal frame, so every
//! fiber integral in this crate reduces to quadrature over a low-dimensional
//! sphere. Deterministic product-angle rules cover k ≤ 4; a Monte-Carlo rule
//! with the same interface covers larger ranks.

use crate::error::{Error, Result};
use crate::sampling::{unit_sphere, SeededRng};
use nalgebra::{DMatrix, DVector};

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre polynomial P_n (initial guesses from the Chebyshev asymptotic).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0_f64, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // Recompute derivative at the converged root for the weight.
        let (mut p0, mut p1) = (1.0_f64, x);
        for j in 2..=n {
            let jf = j as f64;
            let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to [a, b], returned as (node, weight) pairs.
pub fn gl_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    xs.iter().zip(&ws).map(|(&x, &w)| (mid + half * x, half * w)).collect()
}

/// A quadrature rule on (part of) the unit sphere S^{k−1}: weighted nodes
/// whose weights include all angular Jacobians, so `Σ w_i f(u_i) ≈ ∫ f dvol`.
#[derive(Debug, Clone)]
pub struct FiberRule {
    /// Unit vectors in ℝ^k paired with positive weights.
    pub nodes: Vec<(DVector<f64>, f64)>,
    /// Standard error estimate when the rule is Monte-Carlo (None when
    /// deterministic).
    pub is_monte_carlo: bool,
}

impl FiberRule {
    /// Total mass Σ w_i of the rule.
    pub fn mass(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    /// Apply the rule to an integrand on unit vectors.
    pub fn integrate<F: FnMut(&DVector<f64>) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().map(|(u, w)| w * f(u)).sum()
    }

    /// Apply the rule after rotating nodes by an orthonormal matrix whose
    /// columns form the target frame (first column = preferred axis).
    pub fn integrate_rotated<F: FnMut(&DVector<f64>) -> f64>(&self, basis: &DMatrix<f64>, mut f: F) -> f64 {
        self.nodes.iter().map(|(u, w)| w * f(&(basis * u))).sum()
    }
}

/// Deterministic product-angle rule over the full sphere S^{k−1}, k ≤ 4,
/// with `n` Gauss–Legendre nodes per angle.
pub fn sphere_rule(k: usize, n: usize) -> Result<FiberRule> {
    let tau = 2.0 * std::f64::consts::PI;
    let nodes = match k {
        1 => vec![
            (DVector::from_vec(vec![1.0]), 1.0),
            (DVector::from_vec(vec![-1.0]), 1.0),
        ],
        2 => circle_nodes(0.0, tau, n),
        3 => two_sphere_nodes(-1.0, 1.0, n),
        4 => three_sphere_nodes(0.0, std::f64::consts::PI, n),
        _ => {
            return Err(Error::Dimension(format!(
                "deterministic sphere rule supports rank ≤ 4, got {k}"
            )))
        }
    };
    Ok(FiberRule { nodes, is_monte_carlo: false })
}

/// Deterministic rule over the hemisphere {u₁ > 0} of S^{k−1}, k ≤ 4.
pub fn hemisphere_rule(k: usize, n: usize) -> Result<FiberRule> {
    let fpi = std::f64::consts::FRAC_PI_2;
    let nodes = match k {
        1 => vec![(DVector::from_vec(vec![1.0]), 1.0)],
        2 => circle_nodes(-fpi, fpi, n),
        3 => two_sphere_nodes(0.0, 1.0, n),
        4 => three_sphere_nodes(0.0, fpi, n),
        _ => {
            return Err(Error::Dimension(format!(
                "deterministic hemisphere rule supports rank ≤ 4, got {k}"
            )))
        }
    };
    Ok(FiberRule { nodes, is_monte_carlo: false })
}

/// Monte-Carlo rule on S^{k−1} for ranks beyond the deterministic schemes.
pub fn sphere_rule_mc(k: usize, n: usize, rng: &mut SeededRng) -> FiberRule {
    let w = crate::constants::sphere_area(k - 1) / n as f64;
    let nodes = (0..n).map(|_| (unit_sphere(rng, k), w)).collect();
    FiberRule { nodes, is_monte_carlo: true }
}

/// u = (cos θ, sin θ) with θ ∈ [a, b].
fn circle_nodes(a: f64, b: f64, n: usize) -> Vec<(DVector<f64>, f64)> {
    gl_on(a, b, n)
        .into_iter()
        .map(|(t, w)| (DVector::from_vec(vec![t.cos(), t.sin()]), w))
        .collect()
}

/// u = (t, √(1−t²) cos φ, √(1−t²) sin φ); dvol = dt dφ; t ∈ [t_lo, t_hi].
fn two_sphere_nodes(t_lo: f64, t_hi: f64, n: usize) -> Vec<(DVector<f64>, f64)> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(n * n);
    for (t, wt) in gl_on(t_lo, t_hi, n) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (phi, wp) in gl_on(0.0, tau, n) {
            out.push((DVector::from_vec(vec![t, s * phi.cos(), s * phi.sin()]), wt * wp));
        }
    }
    out
}

/// u = (cos ψ, sin ψ · ω), ω ∈ S²; dvol = sin²ψ dψ dvol_{S²}; ψ ∈ [ψ_lo, ψ_hi].
fn three_sphere_nodes(psi_lo: f64, psi_hi: f64, n: usize) -> Vec<(DVector<f64>, f64)> {
    let inner = two_sphere_nodes(-1.0, 1.0, n);
    let mut out = Vec::with_capacity(n * inner.len());
    for (psi, wp) in gl_on(psi_lo, psi_hi, n) {
        let (c, s) = (psi.cos(), psi.sin());
        for (omega, wo) in &inner {
            out.push((
                DVector::from_vec(vec![c, s * omega[0], s * omega[1], s * omega[2]]),
                s * s * wp * wo,
            ));
        }
    }
    out
}

/// Orthonormal basis of ℝ^k whose first column is the given unit vector,
/// completed by Gram–Schmidt over the standard basis (largest-residual pivot).
pub fn basis_with_first_axis(e: &DVector<f64>) -> DMatrix<f64> {
    let k = e.len();
    let mut cols: Vec<DVector<f64>> = vec![e.clone()];
    let mut candidates: Vec<DVector<f64>> =
        (0..k).map(|i| DVector::from_fn(k, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    while cols.len() < k {
        // Orthogonalize every remaining candidate and keep the largest.
        let mut best: Option<(f64, DVector<f64>)> = None;
        for cand in &candidates {
            let mut r = cand.clone();
            for c in &cols {
                let d = c.dot(&r);
                r -= c * d;
            }
            let nr = r.norm();
            if best.as_ref().map_or(true, |(bn, _)| nr > *bn) {
                best = Some((nr, r));
            }
        }
        let (nr, r) = best.expect("nonempty candidates");
        cols.push(r / nr);
        candidates.retain(|c| {
            let mut r = c.clone();
            for col in &cols {
                let d = col.dot(&r);
                r -= col * d;
            }
            r.norm() > 1e-8
        });
    }
    DMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::sphere_area;
    use crate::sampling::rng_for;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // Degree-9 polynomial with a 5-point rule must be exact.
        let rule = gl_on(-1.0, 3.0, 5);
        let num: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        let exact = (3.0_f64.powi(10) - (-1.0_f64).powi(10)) / 10.0;
        assert_abs_diff_eq!(num, exact, epsilon = 1e-9 * exact.abs());
    }

    #[test]
    fn gl_node_count_and_symmetry() {
        let (xs, ws) = gauss_legendre(64);
        assert_eq!(xs.len(), 64);
        assert_abs_diff_eq!(ws.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        for i in 0..32 {
            assert_abs_diff_eq!(xs[i], -xs[63 - i], epsilon = 1e-14);
        }
    }

    #[test]
    fn sphere_rules_have_correct_mass() {
        for k in 1..=4 {
            let full = sphere_rule(k, 48).unwrap();
            assert_abs_diff_eq!(full.mass(), sphere_area(k - 1), epsilon = 1e-10);
            let hemi = hemisphere_rule(k, 48).unwrap();
            assert_abs_diff_eq!(hemi.mass(), sphere_area(k - 1) / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_form_identity_on_spheres() {
        // ∫ uᵀQu dvol = |S^{k−1}| tr(Q) / k for any symmetric Q.
        let mut rng = rng_for(11, 0);
        for k in 2..=4 {
            let m = DMatrix::from_fn(k, k, |_, _| crate::sampling::standard_normal(&mut rng));
            let q = (&m + m.transpose()) * 0.5;
            let rule = sphere_rule(k, 64).unwrap();
            let val = rule.integrate(|u| (u.transpose() * &q * u)[(0, 0)]);
            let exact = sphere_area(k - 1) * q.trace() / k as f64;
            assert_abs_diff_eq!(val, exact, epsilon = 1e-9 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn cosine_hemisphere_identity() {
        // ∫_{u₁>0} u₁ dvol = |S^k|/(2π).
        for k in 2..=4 {
            let rule = hemisphere_rule(k, 64).unwrap();
            let val = rule.integrate(|u| u[0]);
            assert_abs_diff_eq!(val, sphere_area(k) / (2.0 * PI), epsilon = 1e-9);
        }
    }

    #[test]
    fn mc_rule_matches_deterministic_within_errors() {
        let mut rng = rng_for(5, 2);
        let rule = sphere_rule_mc(5, 200_000, &mut rng);
        let val = rule.integrate(|u| u[0] * u[0]);
        let exact = sphere_area(4) / 5.0;
        assert!((val - exact).abs() < 0.05 * exact, "{val} vs {exact}");
    }

    #[test]
    fn basis_with_first_axis_is_orthonormal() {
        let mut rng = rng_for(9, 3);
        for k in 2..=5 {
            let e = unit_sphere(&mut rng, k);
            let b = basis_with_first_axis(&e);
            let eye = DMatrix::<f64>::identity(k, k);
            assert!((b.transpose() * &b - eye).norm() < 1e-12);
            assert!((b.column(0) - &e).norm() < 1e-14);
        }
    }
}
