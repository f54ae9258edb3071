//! Closed-form constants: sphere areas, Hardy constants, p-trigonometric π_p.

use statrs::function::gamma::gamma;

/// Surface area |S^m| of the unit m-sphere in ℝ^{m+1}: 2 π^{(m+1)/2} / Γ((m+1)/2).
pub fn sphere_area(m: usize) -> f64 {
    let s = (m as f64 + 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(s) / gamma(s)
}

/// The generalized half-period π_p = 2π (p−1)^{1/p} / (p sin(π/p)).
///
/// At p = 2 this reduces to π.
pub fn pi_p(p: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * pi * (p - 1.0).powf(1.0 / p) / (p * (pi / p).sin())
}

/// Sharp p-Hardy fiber constant C_{p,k} = Γ((k+p)/2) / (2 Γ((1+p)/2) π^{(k−1)/2}).
///
/// Its inverse equals 2 ∫_{S^{k−1} ∩ {u₁>0}} u₁^p dvol. At p = 2 it
/// simplifies to k / |S^{k−1}|.
pub fn c_pk(p: f64, k: usize) -> f64 {
    let pi = std::f64::consts::PI;
    gamma((k as f64 + p) / 2.0) / (2.0 * gamma((1.0 + p) / 2.0) * pi.powf((k as f64 - 1.0) / 2.0))
}

/// Hardy constant k π² / |S^{k−1}| (the p = 2 case of π_p^p C_{p,k}).
pub fn hardy_constant(k: usize) -> f64 {
    let pi = std::f64::consts::PI;
    k as f64 * pi * pi / sphere_area(k - 1)
}

/// Boundary-weighted fiber normalization ∫_{⟨λ,n⟩>0} ⟨λ,n⟩ dη = |S^k| / (2π)
/// over the unit (k−1)-sphere fiber.
pub fn cosine_hemisphere_mass(k: usize) -> f64 {
    sphere_area(k) / (2.0 * std::f64::consts::PI)
}

/// Isoperimetric constant C = 2π |S^{k−1}| / |S^k|.
pub fn isoperimetric_constant(k: usize) -> f64 {
    2.0 * std::f64::consts::PI * sphere_area(k - 1) / sphere_area(k)
}
