//! Bounded domains with boundary: defining functions, interior and boundary
//! samplers, and volume/perimeter estimates.
//!
//! A domain is M = {U > 0} for a Lipschitz defining function U. Interior
//! samplers draw from the model volume ω restricted to M. Boundary samplers
//! return weighted points such that the sample mean of `weight · F` estimates
//! ∫_{∂M} F dσ, where σ is the horizontal perimeter measure: relative to the
//! hypersurface measure dS of the chosen reference (Euclidean in open charts,
//! round on embedded spheres) its density is |∇_H U| / |∇_ref U|.

use crate::constants::sphere_area;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::quadrature::gl_on;
use crate::sampling::{mean_stderr, rng_for, unit_sphere, SeededRng};
use nalgebra::DVector;
use rand::Rng;

/// A measured (or analytically known) volume or perimeter.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeasureEstimate {
    /// The value.
    pub value: f64,
    /// Standard error when the value is a Monte-Carlo estimate.
    pub stderr: Option<f64>,
    /// How the value was obtained: `analytic`, `deterministic-quadrature`,
    /// or `monte-carlo`.
    pub provenance: String,
}

impl MeasureEstimate {
    fn analytic(value: f64) -> Self {
        Self { value, stderr: None, provenance: "analytic".into() }
    }

    fn quadrature(value: f64) -> Self {
        Self { value, stderr: None, provenance: "deterministic-quadrature".into() }
    }

    fn monte_carlo(value: f64, stderr: f64) -> Self {
        Self { value, stderr: Some(stderr), provenance: "monte-carlo".into() }
    }
}

/// A boundary point with its perimeter weight: `mean(weight · F)` over
/// samples estimates ∫_{∂M} F dσ.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    /// Boundary point in chart coordinates.
    pub q: DVector<f64>,
    /// Importance weight carrying the total reference area and the σ-density.
    pub weight: f64,
}

/// A bounded domain inside a model's chart.
pub trait Domain: Send + Sync {
    /// Identifier for reports.
    fn id(&self) -> String;
    /// Defining function U (positive inside, zero on ∂M).
    fn defining_fn(&self, q: &DVector<f64>) -> f64;
    /// Chart gradient of U (one-sided where U is only Lipschitz).
    fn defining_grad(&self, q: &DVector<f64>) -> DVector<f64>;
    /// Whether `q` lies strictly inside.
    fn contains(&self, q: &DVector<f64>) -> bool {
        self.defining_fn(q) > 0.0
    }
    /// Characteristic length (sets march steps and integration caps).
    fn length_scale(&self) -> f64;
    /// Draw an interior point distributed as ω|_M.
    fn sample_interior(&self, model: &dyn Model, rng: &mut SeededRng) -> Result<DVector<f64>>;
    /// Draw a weighted boundary point (see [`BoundarySample`]).
    fn sample_boundary(&self, model: &dyn Model, rng: &mut SeededRng) -> Result<BoundarySample>;
    /// ω(M).
    fn volume(&self, model: &dyn Model, n: usize, seed: u64) -> Result<MeasureEstimate>;
    /// σ(∂M).
    fn boundary_area(&self, model: &dyn Model, n: usize, seed: u64) -> Result<MeasureEstimate>;
}

// ---------------------------------------------------------------------------
// Hemisphere of an embedded sphere model.
// ---------------------------------------------------------------------------

/// The hemisphere {x₀ > 0} of an ambient-embedded sphere model.
///
/// ω(M) = |S^n|/2 exactly. The boundary is the equator {x₀ = 0} ≅ S^{n−1};
/// since the sphere-tangential gradient of x₀ has unit norm there, the
/// σ-density relative to the round equator measure is |∇_H x₀|, which by the
/// block structure of the vertical fields depends only on the radius ρ of
/// the vertical coordinates in the first block, so σ(∂M) reduces to a smooth
/// one-dimensional quadrature. Boundary points where that radius is 1 are
/// characteristic (the distribution is tangent to the equator there).
#[derive(Debug, Clone, Copy, Default)]
pub struct Hemisphere;

impl Hemisphere {
    /// |∇_H x₀| at an equator point, from the model frames.
    fn grad_h(&self, model: &dyn Model, q: &DVector<f64>) -> f64 {
        model.horizontal_frame(q).iter().map(|x| x[0] * x[0]).sum::<f64>().sqrt()
    }
}

impl Domain for Hemisphere {
    fn id(&self) -> String {
        "hemisphere".into()
    }

    fn defining_fn(&self, q: &DVector<f64>) -> f64 {
        q[0]
    }

    fn defining_grad(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(q.len());
        g[0] = 1.0;
        g
    }

    fn length_scale(&self) -> f64 {
        std::f64::consts::FRAC_PI_2
    }

    fn sample_interior(&self, model: &dyn Model, rng: &mut SeededRng) -> Result<DVector<f64>> {
        let mut q = unit_sphere(rng, model.chart_dim());
        if q[0] < 0.0 {
            q[0] = -q[0];
        }
        Ok(q)
    }

    fn sample_boundary(&self, model: &dyn Model, rng: &mut SeededRng) -> Result<BoundarySample> {
        let amb = model.chart_dim();
        let eq = unit_sphere(rng, amb - 1);
        let mut q = DVector::zeros(amb);
        for i in 1..amb {
            q[i] = eq[i - 1];
        }
        let area = sphere_area(amb - 2);
        let weight = area * self.grad_h(model, &q);
        Ok(BoundarySample { q, weight })
    }

    fn volume(&self, model: &dyn Model, _n: usize, _seed: u64) -> Result<MeasureEstimate> {
        Ok(MeasureEstimate::analytic(0.5 * sphere_area(model.manifold_dim())))
    }

    fn boundary_area(&self, model: &dyn Model, _n: usize, _seed: u64) -> Result<MeasureEstimate> {
        let amb = model.chart_dim();
        let m = amb - 2; // equator dimension
        let j = model.corank(); // vertical coordinates pinned in block 0
        if j == 0 {
            return Ok(MeasureEstimate::analytic(sphere_area(m)));
        }
        if j > m {
            return Err(Error::Dimension(format!(
                "hemisphere boundary quadrature needs corank ≤ equator dimension ({j} > {m})"
            )));
        }
        // Split the equator over the block-0 vertical radius ρ = sin α:
        // ∫_{S^m} f(ρ) dS = |S^{j−1}||S^{m−j}| ∫₀^{π/2} f sin^{j−1}α cos^{m−j}α dα,
        // with the model queried at a representative point for f = |∇_H x₀|.
        let mut total = 0.0;
        for (alpha, w) in gl_on(0.0, std::f64::consts::FRAC_PI_2, 200) {
            let (s, c) = alpha.sin_cos();
            let mut q = DVector::zeros(amb);
            q[1] = s;
            q[j + 1] = c;
            total += w * self.grad_h(model, &q) * s.powi(j as i32 - 1) * c.powi((m - j) as i32);
        }
        total *= sphere_area(j - 1) * sphere_area(m - j);
        Ok(MeasureEstimate::quadrature(total))
    }
}

// ---------------------------------------------------------------------------
// Equatorial band.
// ---------------------------------------------------------------------------

/// The band {|θ − π/2| < ε} in the (θ, φ) chart with ω = dθ ∧ dφ.
///
/// Both faces are circles of chart length 2π; the meridian field is normal
/// to them, so σ(∂M) = 4π exactly and there are no characteristic points.
#[derive(Debug, Clone, Copy)]
pub struct BandDomain {
    eps: f64,
}

impl BandDomain {
    /// Band of half-width ε about θ = π/2.
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0 && eps < 1.0);
        Self { eps }
    }

    /// Half-width ε.
    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Domain for BandDomain {
    fn id(&self) -> String {
        format!("band({})", self.eps)
    }

    fn defining_fn(&self, q: &DVector<f64>) -> f64 {
        self.eps - (q[0] - std::f64::consts::FRAC_PI_2).abs()
    }

    fn defining_grad(&self, q: &DVector<f64>) -> DVector<f64> {
        let s = if q[0] >= std::f64::consts::FRAC_PI_2 { -1.0 } else { 1.0 };
        DVector::from_vec(vec![s, 0.0])
    }

    fn length_scale(&self) -> f64 {
        self.eps
    }

    fn sample_interior(&self, _model: &dyn Model, rng: &mut SeededRng) -> Result<DVector<f64>> {
        let theta = std::f64::consts::FRAC_PI_2 + self.eps * (2.0 * rng.gen::<f64>() - 1.0);
        let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        Ok(DVector::from_vec(vec![theta, phi]))
    }

    fn sample_boundary(&self, _model: &dyn Model, rng: &mut SeededRng) -> Result<BoundarySample> {
        let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let theta = std::f64::consts::FRAC_PI_2 + side * self.eps;
        let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        Ok(BoundarySample {
            q: DVector::from_vec(vec![theta, phi]),
            weight: 4.0 * std::f64::consts::PI,
        })
    }

    fn volume(&self, _model: &dyn Model, _n: usize, _seed: u64) -> Result<MeasureEstimate> {
        Ok(MeasureEstimate::analytic(4.0 * std::f64::consts::PI * self.eps))
    }

    fn boundary_area(&self, _model: &dyn Model, _n: usize, _seed: u64) -> Result<MeasureEstimate> {
        Ok(MeasureEstimate::analytic(4.0 * std::f64::consts::PI))
    }
}

// ---------------------------------------------------------------------------
// Heisenberg Carnot–Carathéodory ball.
// ---------------------------------------------------------------------------

/// The sub-Riemannian ball {d_cc(0, ·) < R} of the first Heisenberg group
/// (exponential coordinates (x, y, z), frame X₁ = ∂_x − ½y ∂_z,
/// X₂ = ∂_y + ½x ∂_z).
///
/// The distance to the origin is computed from the closed-form geodesics:
/// with ρ = √(x² + y²), the swing angle θ ∈ (0, 2π) solves
/// (θ − sin θ) / (8 sin²(θ/2)) = |z| / ρ² and the distance is
/// ρθ / (2 sin(θ/2)); the limits are ρ for z = 0 and 2√(π|z|) on the axis.
#[derive(Debug, Clone, Copy)]
pub struct HeisenbergBall {
    r: f64,
}

impl HeisenbergBall {
    /// Ball of Carnot–Carathéodory radius R around the identity.
    pub fn new(r: f64) -> Self {
        assert!(r > 0.0);
        Self { r }
    }

    /// Radius R.
    pub fn radius(&self) -> f64 {
        self.r
    }

    /// Carnot–Carathéodory distance from the origin.
    pub fn distance(x: f64, y: f64, z: f64) -> f64 {
        let rho2 = x * x + y * y;
        let rho = rho2.sqrt();
        let za = z.abs();
        if za < 1e-300 {
            return rho;
        }
        if rho < 1e-14 * za.sqrt() {
            return 2.0 * (std::f64::consts::PI * za).sqrt();
        }
        let mu = za / rho2;
        // μ(θ) = (θ − sin θ)/(8 sin²(θ/2)) is increasing from 0 to ∞.
        let f = |theta: f64| (theta - theta.sin()) / (8.0 * (0.5 * theta).sin().powi(2)) - mu;
        let (mut lo, mut hi) = (1e-12, 2.0 * std::f64::consts::PI - 1e-12);
        if f(hi) < 0.0 {
            // μ beyond the resolvable range: effectively on the axis.
            return 2.0 * (std::f64::consts::PI * za).sqrt();
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        rho * theta / (2.0 * (0.5 * theta).sin())
    }

    /// Endpoint of the unit-speed geodesic from the origin with initial
    /// horizontal direction (cos φ, sin φ) and vertical momentum w, at time t.
    pub fn exp_map(phi: f64, w: f64, t: f64) -> DVector<f64> {
        let (sp, cp) = phi.sin_cos();
        let wt = w * t;
        let (zeta_re, zeta_im, z) = if wt.abs() < 1e-5 {
            // Series for (e^{iwt} − 1)/(iw) · t-normalized and z = (wt − sin wt)/(2w²).
            let re = t * (1.0 - wt * wt / 6.0);
            let im = t * (wt / 2.0 - wt * wt * wt / 24.0);
            (re, im, w * t * t * t / 12.0)
        } else {
            let re = wt.sin() / w;
            let im = (1.0 - wt.cos()) / w;
            (re, im, (wt - wt.sin()) / (2.0 * w * w))
        };
        // Rotate the chord by the initial phase.
        let x = cp * zeta_re - sp * zeta_im;
        let y = sp * zeta_re + cp * zeta_im;
        DVector::from_vec(vec![x, y, z])
    }

    fn grad_fd(&self, q: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6 * self.r;
        DVector::from_fn(3, |c, _| {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[c] += h;
            qm[c] -= h;
            (self.defining_fn(&qp) - self.defining_fn(&qm)) / (2.0 * h)
        })
    }
}

impl Domain for HeisenbergBall {
    fn id(&self) -> String {
        format!("heisenberg-ball({})", self.r)
    }

    fn defining_fn(&self, q: &DVector<f64>) -> f64 {
        self.r - Self::distance(q[0], q[1], q[2])
    }

    fn defining_grad(&self, q: &DVector<f64>) -> DVector<f64> {
        self.grad_fd(q)
    }

    fn length_scale(&self) -> f64 {
        self.r
    }

    fn sample_interior(&self, _model: &dyn Model, rng: &mut SeededRng) -> Result<DVector<f64>> {
        // Rejection inside the bounding box |x|, |y| ≤ R, |z| ≤ R²/(4π).
        let zmax = self.r * self.r / (4.0 * std::f64::consts::PI);
        for _ in 0..100_000 {
            let q = DVector::from_vec(vec![
                self.r * (2.0 * rng.gen::<f64>() - 1.0),
                self.r * (2.0 * rng.gen::<f64>() - 1.0),
                zmax * (2.0 * rng.gen::<f64>() - 1.0),
            ]);
            if self.contains(&q) {
                return Ok(q);
            }
        }
        Err(Error::Sampling("rejection sampler exhausted for Heisenberg ball".into()))
    }

    fn sample_boundary(&self, _model: &dyn Model, rng: &mut SeededRng) -> Result<BoundarySample> {
        // Boundary chart (φ, w) ↦ exp-map endpoint at time R; w ranges over
        // (−2π/R, 2π/R), the minimality window.
        let wmax = 2.0 * std::f64::consts::PI / self.r;
        let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let margin = 1e-4;
        let w = wmax * (1.0 - margin) * (2.0 * rng.gen::<f64>() - 1.0);
        let q = Self::exp_map(phi, w, self.r);
        // Euclidean area element of the chart by finite differences.
        let h = 1e-5;
        let dphi = (Self::exp_map(phi + h, w, self.r) - Self::exp_map(phi - h, w, self.r)) / (2.0 * h);
        let dw = (Self::exp_map(phi, w + h, self.r) - Self::exp_map(phi, w - h, self.r)) / (2.0 * h);
        let cross = DVector::from_vec(vec![
            dphi[1] * dw[2] - dphi[2] * dw[1],
            dphi[2] * dw[0] - dphi[0] * dw[2],
            dphi[0] * dw[1] - dphi[1] * dw[0],
        ]);
        // σ-density relative to dS_E is |∇_H U| / |∇_E U|; the distance
        // satisfies |∇_H d| = 1 away from the axis.
        let grad = self.grad_fd(&q);
        let gh = {
            let (x, y) = (q[0], q[1]);
            let x1 = grad[0] - 0.5 * y * grad[2];
            let x2 = grad[1] + 0.5 * x * grad[2];
            (x1 * x1 + x2 * x2).sqrt()
        };
        let ge = grad.norm().max(1e-300);
        let param_area = 2.0 * std::f64::consts::PI * 2.0 * wmax * (1.0 - margin);
        Ok(BoundarySample { q, weight: param_area * cross.norm() * gh / ge })
    }

    fn volume(&self, model: &dyn Model, n: usize, seed: u64) -> Result<MeasureEstimate> {
        let mut rng = rng_for(seed, 41);
        let zmax = self.r * self.r / (4.0 * std::f64::consts::PI);
        let box_vol = (2.0 * self.r) * (2.0 * self.r) * (2.0 * zmax);
        let _ = model;
        let hits: Vec<f64> = (0..n.max(1000))
            .map(|_| {
                let q = DVector::from_vec(vec![
                    self.r * (2.0 * rng.gen::<f64>() - 1.0),
                    self.r * (2.0 * rng.gen::<f64>() - 1.0),
                    zmax * (2.0 * rng.gen::<f64>() - 1.0),
                ]);
                if self.contains(&q) {
                    box_vol
                } else {
                    0.0
                }
            })
            .collect();
        let (mean, stderr) = mean_stderr(&hits);
        Ok(MeasureEstimate::monte_carlo(mean, stderr))
    }

    fn boundary_area(&self, model: &dyn Model, n: usize, seed: u64) -> Result<MeasureEstimate> {
        let mut rng = rng_for(seed, 42);
        let weights: Vec<f64> = (0..n.max(1000))
            .map(|_| self.sample_boundary(model, &mut rng).map(|b| b.weight))
            .collect::<Result<_>>()?;
        let (mean, stderr) = mean_stderr(&weights);
        Ok(MeasureEstimate::monte_carlo(mean, stderr))
    }
}

// ---------------------------------------------------------------------------
// Axis-aligned box for open-chart models.
// ---------------------------------------------------------------------------

/// An axis-aligned box Π_i (c_i − h_i, c_i + h_i) in an open chart with
/// Lebesgue ω. U is the distance to the nearest face; faces orthogonal to a
/// direction not spanned by the distribution are entirely characteristic and
/// carry zero σ.
#[derive(Debug, Clone)]
pub struct BoxDomain {
    center: DVector<f64>,
    halfwidth: DVector<f64>,
}

impl BoxDomain {
    /// Box with the given center and positive halfwidths.
    pub fn new(center: DVector<f64>, halfwidth: DVector<f64>) -> Self {
        assert_eq!(center.len(), halfwidth.len());
        assert!(halfwidth.iter().all(|&h| h > 0.0));
        Self { center, halfwidth }
    }

    /// Centered box, same halfwidth in every coordinate.
    pub fn cube(dim: usize, halfwidth: f64) -> Self {
        Self::new(DVector::zeros(dim), DVector::from_element(dim, halfwidth))
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    /// Index of the face whose distance attains U (ties broken by index).
    fn active_face(&self, q: &DVector<f64>) -> usize {
        (0..self.dim())
            .min_by(|&a, &b| {
                let da = self.halfwidth[a] - (q[a] - self.center[a]).abs();
                let db = self.halfwidth[b] - (q[b] - self.center[b]).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
    }

    /// Euclidean area of the pair of faces orthogonal to axis `c`.
    fn face_pair_area(&self, c: usize) -> f64 {
        2.0 * (0..self.dim())
            .filter(|&i| i != c)
            .map(|i| 2.0 * self.halfwidth[i])
            .product::<f64>()
    }
}

impl Domain for BoxDomain {
    fn id(&self) -> String {
        "box".into()
    }

    fn defining_fn(&self, q: &DVector<f64>) -> f64 {
        (0..self.dim())
            .map(|i| self.halfwidth[i] - (q[i] - self.center[i]).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn defining_grad(&self, q: &DVector<f64>) -> DVector<f64> {
        let c = self.active_face(q);
        let mut g = DVector::zeros(self.dim());
        g[c] = if q[c] >= self.center[c] { -1.0 } else { 1.0 };
        g
    }

    fn length_scale(&self) -> f64 {
        self.halfwidth.max()
    }

    fn sample_interior(&self, _model: &dyn Model, rng: &mut SeededRng) -> Result<DVector<f64>> {
        Ok(DVector::from_fn(self.dim(), |i, _| {
            self.center[i] + self.halfwidth[i] * (2.0 * rng.gen::<f64>() - 1.0)
        }))
    }

    fn sample_boundary(&self, model: &dyn Model, rng: &mut SeededRng) -> Result<BoundarySample> {
        // Pick a face pair proportionally to Euclidean area, uniform on it.
        let areas: Vec<f64> = (0..self.dim()).map(|c| self.face_pair_area(c)).collect();
        let total: f64 = areas.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut face = 0;
        for (c, a) in areas.iter().enumerate() {
            if pick < *a {
                face = c;
                break;
            }
            pick -= a;
        }
        let mut q = DVector::from_fn(self.dim(), |i, _| {
            self.center[i] + self.halfwidth[i] * (2.0 * rng.gen::<f64>() - 1.0)
        });
        q[face] = self.center[face]
            + if rng.gen::<bool>() { self.halfwidth[face] } else { -self.halfwidth[face] };
        // |∇_E U| = 1 on faces, so the σ-density is |∇_H U| directly.
        let grad = self.defining_grad(&q);
        let gh = model
            .horizontal_frame(&q)
            .iter()
            .map(|x| {
                let d = x.dot(&grad);
                d * d
            })
            .sum::<f64>()
            .sqrt();
        Ok(BoundarySample { q, weight: total * gh })
    }

    fn volume(&self, model: &dyn Model, _n: usize, _seed: u64) -> Result<MeasureEstimate> {
        let _ = model; // Lebesgue ω: density 1 for all chart models used here.
        Ok(MeasureEstimate::analytic(
            (0..self.dim()).map(|i| 2.0 * self.halfwidth[i]).product(),
        ))
    }

    fn boundary_area(&self, model: &dyn Model, n: usize, seed: u64) -> Result<MeasureEstimate> {
        let mut rng = rng_for(seed, 43);
        let weights: Vec<f64> = (0..n.max(1000))
            .map(|_| self.sample_boundary(model, &mut rng).map(|b| b.weight))
            .collect::<Result<_>>()?;
        let (mean, stderr) = mean_stderr(&weights);
        Ok(MeasureEstimate::monte_carlo(mean, stderr))
    }
}
