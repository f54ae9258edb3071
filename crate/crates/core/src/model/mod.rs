//! Geometry registry: frames, brackets, volume densities, boundary normals.
//!
//! A [`Model`] is an immutable description of a sub-Riemannian structure
//! (N, D, g) together with a chosen Riemannian extension: a chart, an
//! orthonormal horizontal frame X₁..X_k spanning D, an orthonormal vertical
//! frame Z₁..Z_{n−k} spanning the complement, the volume density of ω, and
//! the structural functions expanding all pairwise frame brackets.
//!
//! Covectors are carried in frame coordinates (q, u, v) with
//! u_i = ⟨λ, X_i⟩ and v_j = ⟨λ, Z_j⟩; the reduced bundle is {v = 0} and the
//! Hamiltonian is ½|u|², so unit covectors have |u| = 1.

mod band;
mod martinet;
mod sphere;

pub use band::BandModel;
pub use martinet::MartinetModel;
pub use sphere::{SphereKind, SphereModel};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::sampling::SeededRng;
use nalgebra::{DMatrix, DVector};

/// A covector in frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCovector {
    /// Chart point (ambient coordinates for sphere models).
    pub q: DVector<f64>,
    /// Horizontal momenta u_i = ⟨λ, X_i⟩ (length k).
    pub u: DVector<f64>,
    /// Vertical momenta v_j = ⟨λ, Z_j⟩ (length n − k).
    pub v: DVector<f64>,
}

impl FrameCovector {
    /// A reduced covector (v = 0).
    pub fn reduced(q: DVector<f64>, u: DVector<f64>, corank: usize) -> Self {
        Self { q, u, v: DVector::zeros(corank) }
    }

    /// The sub-Riemannian Hamiltonian ½|u|²; degenerate in v.
    pub fn hamiltonian(&self) -> f64 {
        0.5 * self.u.norm_squared()
    }

    /// True when 2H = |u|² = 1 within `tol`.
    pub fn is_unit(&self, tol: f64) -> bool {
        (self.u.norm_squared() - 1.0).abs() <= tol
    }

    /// The covector with reversed momenta (same base point).
    pub fn reversed(&self) -> Self {
        Self { q: self.q.clone(), u: -&self.u, v: -&self.v }
    }
}

/// Dense rank-3 coefficient array with fixed small dimensions.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    d0: usize,
    d1: usize,
    d2: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    /// Zero tensor of shape (d0, d1, d2).
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Self { d0, d1, d2, data: vec![0.0; d0 * d1 * d2] }
    }

    /// Entry (i, j, l).
    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.data[(i * self.d1 + j) * self.d2 + l]
    }

    /// Set entry (i, j, l).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, l: usize, val: f64) {
        self.data[(i * self.d1 + j) * self.d2 + l] = val;
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Shape (d0, d1, d2).
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.d0, self.d1, self.d2)
    }
}

/// Structural functions at a point: frame-expansion coefficients of all
/// pairwise Lie brackets,
/// `[X_i, X_j] = Σ_l b_{ij}^l X_l + Σ_l c_{ij}^l Z_l`,
/// `[X_i, Z_j] = Σ_l a_{ij}^l X_l + Σ_l d_{ij}^l Z_l`,
/// `[Z_i, Z_j] = Σ_l e_{ij}^l Z_l` (horizontal part of vertical brackets is
/// not used by any check and is dropped).
#[derive(Debug, Clone)]
pub struct BracketTensors {
    /// Rank k.
    pub k: usize,
    /// Corank n − k.
    pub corank: usize,
    /// b: (k, k, k).
    pub b: Tensor3,
    /// c: (k, k, corank).
    pub c: Tensor3,
    /// a: (k, corank, k).
    pub a: Tensor3,
    /// d: (k, corank, corank).
    pub d: Tensor3,
    /// e: (corank, corank, corank).
    pub e: Tensor3,
}

impl BracketTensors {
    /// All-zero structural functions (flat frame).
    pub fn zeros(k: usize, corank: usize) -> Self {
        Self {
            k,
            corank,
            b: Tensor3::zeros(k, k, k),
            c: Tensor3::zeros(k, k, corank),
            a: Tensor3::zeros(k, corank, k),
            d: Tensor3::zeros(k, corank, corank),
            e: Tensor3::zeros(corank, corank, corank),
        }
    }

    /// Poisson bracket {u_j, u_i}(λ) = ⟨λ, [X_j, X_i]⟩ from the expansions.
    pub fn poisson_uu(&self, j: usize, i: usize, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for l in 0..self.k {
            s += self.b.get(j, i, l) * u[l];
        }
        for l in 0..self.corank {
            s += self.c.get(j, i, l) * v[l];
        }
        s
    }

    /// Poisson bracket {u_i, v_j}(λ) = ⟨λ, [X_i, Z_j]⟩ from the expansions.
    pub fn poisson_uv(&self, i: usize, j: usize, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for l in 0..self.k {
            s += self.a.get(i, j, l) * u[l];
        }
        for l in 0..self.corank {
            s += self.d.get(i, j, l) * v[l];
        }
        s
    }
}

/// Structural classification used by the reduction certificates to decide
/// which auxiliary residual (skew or trace) applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionClass {
    /// Tamed by a totally geodesic foliation: d_{ij}^l skew in (j, l).
    Foliation,
    /// Carnot group: tr(ad_{X_i}) = 0.
    Carnot,
    /// Neither auxiliary criterion applies.
    Other,
}

/// Horizontal and vertical frames evaluated at one point.
#[derive(Debug, Clone)]
pub struct FramePair {
    /// X₁..X_k, chart components.
    pub horizontal: Vec<DVector<f64>>,
    /// Z₁..Z_{n−k}, chart components.
    pub vertical: Vec<DVector<f64>>,
}

/// A (sub-)Riemannian model geometry. Implementations are immutable and all
/// methods are pure, so models may be shared freely across workers.
pub trait Model: Send + Sync {
    /// Identifier, e.g. `chf(1)` or `heisenberg(2)`.
    fn id(&self) -> String;
    /// Number of chart coordinates (n for open charts, n + 1 for
    /// ambient-embedded sphere models).
    fn chart_dim(&self) -> usize;
    /// Manifold dimension n.
    fn manifold_dim(&self) -> usize;
    /// Rank k of the distribution.
    fn rank(&self) -> usize;
    /// Corank n − k.
    fn corank(&self) -> usize {
        self.manifold_dim() - self.rank()
    }
    /// Whether states live on the unit sphere of the chart space and must be
    /// renormalized during integration.
    fn on_sphere(&self) -> bool {
        false
    }
    /// Whether `q` lies in the chart domain.
    fn in_chart(&self, _q: &DVector<f64>) -> bool {
        true
    }
    /// Orthonormal horizontal frame at `q`.
    fn horizontal_frame(&self, q: &DVector<f64>) -> Vec<DVector<f64>>;
    /// Orthonormal vertical frame at `q` (the chosen Riemannian extension).
    fn vertical_frame(&self, q: &DVector<f64>) -> Vec<DVector<f64>>;
    /// Density of the volume ω in chart coordinates.
    fn volume_density(&self, _q: &DVector<f64>) -> f64 {
        1.0
    }
    /// Structural functions at `q`. The default is a five-point
    /// finite-difference oracle over [`Model::local_frames`].
    fn bracket_tensors(&self, q: &DVector<f64>) -> BracketTensors {
        fd_bracket_tensors(self, q)
    }
    /// A frame field smooth near `q0` agreeing with the pointwise frames at
    /// `q0`, for finite differencing. The default reuses the global frame
    /// maps, which is correct whenever they are smooth in the chart.
    fn local_frames(&self, _q0: &DVector<f64>) -> Box<dyn Fn(&DVector<f64>) -> FramePair + '_> {
        Box::new(move |q| FramePair {
            horizontal: self.horizontal_frame(q),
            vertical: self.vertical_frame(q),
        })
    }
    /// Classification for the auxiliary reduction residuals.
    fn reduction_class(&self) -> ReductionClass {
        ReductionClass::Other
    }
    /// Cut length c(λ) for reduced unit covectors, where analytically known
    /// (π on round-sphere/Hopf models).
    fn cut_length(&self, _fc: &FrameCovector) -> Option<f64> {
        None
    }

    // --- flow state representation -------------------------------------

    /// Dimension of the ODE state. Convention: the first `chart_dim`
    /// components of a state are always the chart point q.
    fn state_dim(&self) -> usize;
    /// Encode a frame covector as an ODE state.
    fn state_from_covector(&self, fc: &FrameCovector) -> DVector<f64>;
    /// Decode an ODE state into frame coordinates.
    fn covector_from_state(&self, s: &DVector<f64>) -> FrameCovector;
    /// Hamiltonian vector field in state coordinates.
    fn flow_rhs(&self, s: &DVector<f64>, ds: &mut DVector<f64>);
    /// Project a state back onto its constraint set (sphere models).
    fn normalize_state(&self, _s: &mut DVector<f64>) {}
    /// Hamiltonian evaluated on a state.
    fn state_hamiltonian(&self, s: &DVector<f64>) -> f64;
    /// |v| evaluated on a state (drift monitor for reduced starts).
    fn state_vertical_norm(&self, s: &DVector<f64>) -> f64;
}

/// Chart point stored in a state (first `chart_dim` components, by
/// convention).
pub fn state_position(model: &dyn Model, s: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(model.chart_dim(), |i, _| s[i])
}

// ---------------------------------------------------------------------------
// Generic frame-coordinate flow for open-chart models.
// ---------------------------------------------------------------------------

/// Hamiltonian vector field in frame coordinates (q, u, v):
/// q̇ = Σ u_i X_i, u̇_i = Σ_j u_j {u_j, u_i}, v̇_j = Σ_i u_i {u_i, v_j},
/// with Poisson brackets from the structural functions.
pub fn chart_flow_rhs(model: &dyn Model, s: &DVector<f64>, ds: &mut DVector<f64>) {
    let n = model.chart_dim();
    let k = model.rank();
    let m = model.corank();
    let q = state_position(model, s);
    let u = DVector::from_fn(k, |i, _| s[n + i]);
    let v = DVector::from_fn(m, |j, _| s[n + k + j]);
    let bt = model.bracket_tensors(&q);
    let frames = model.horizontal_frame(&q);
    ds.fill(0.0);
    for i in 0..k {
        for c in 0..n {
            ds[c] += u[i] * frames[i][c];
        }
    }
    for i in 0..k {
        let mut du = 0.0;
        for j in 0..k {
            du += u[j] * bt.poisson_uu(j, i, &u, &v);
        }
        ds[n + i] = du;
    }
    for j in 0..m {
        let mut dv = 0.0;
        for i in 0..k {
            dv += u[i] * bt.poisson_uv(i, j, &u, &v);
        }
        ds[n + k + j] = dv;
    }
}

/// State encoding for open-chart models: [q; u; v].
pub fn chart_state_from_covector(model: &dyn Model, fc: &FrameCovector) -> DVector<f64> {
    let n = model.chart_dim();
    let k = model.rank();
    let m = model.corank();
    let mut s = DVector::zeros(n + k + m);
    for c in 0..n {
        s[c] = fc.q[c];
    }
    for i in 0..k {
        s[n + i] = fc.u[i];
    }
    for j in 0..m {
        s[n + k + j] = fc.v[j];
    }
    s
}

/// Inverse of [`chart_state_from_covector`].
pub fn chart_covector_from_state(model: &dyn Model, s: &DVector<f64>) -> FrameCovector {
    let n = model.chart_dim();
    let k = model.rank();
    let m = model.corank();
    FrameCovector {
        q: state_position(model, s),
        u: DVector::from_fn(k, |i, _| s[n + i]),
        v: DVector::from_fn(m, |j, _| s[n + k + j]),
    }
}

// ---------------------------------------------------------------------------
// Finite-difference bracket oracle.
// ---------------------------------------------------------------------------

/// Five-point-stencil Lie brackets of the local frame fields, expanded in
/// the frame at `q`. Truncation error is O(h⁴) with h = 1e−3·(1 + |q|),
/// comfortably below the 1e−9 certificate tolerances for our analytic
/// frames.
pub fn fd_bracket_tensors<M: Model + ?Sized>(model: &M, q: &DVector<f64>) -> BracketTensors {
    let dim = model.chart_dim();
    let k = model.rank();
    let m = model.corank();
    let h = 1e-3 * (1.0 + q.norm());
    let frames_at = model.local_frames(q);

    let flatten = |fp: &FramePair| -> Vec<DVector<f64>> {
        fp.horizontal.iter().chain(fp.vertical.iter()).cloned().collect()
    };
    let center = flatten(&frames_at(q));
    let nf = k + m;

    // Jacobians J_f[c] = ∂(field)/∂q_c for every frame field, 5-point stencil.
    let mut jac: Vec<DMatrix<f64>> = vec![DMatrix::zeros(dim, dim); nf];
    for c in 0..dim {
        let shifted = |step: f64| -> Vec<DVector<f64>> {
            let mut qq = q.clone();
            qq[c] += step;
            flatten(&frames_at(&qq))
        };
        let fm2 = shifted(-2.0 * h);
        let fm1 = shifted(-h);
        let fp1 = shifted(h);
        let fp2 = shifted(2.0 * h);
        for f in 0..nf {
            let deriv = (&fm2[f] - &fp2[f] + (&fp1[f] - &fm1[f]) * 8.0) / (12.0 * h);
            for r in 0..dim {
                jac[f][(r, c)] = deriv[r];
            }
        }
    }

    // [A, B](q) = J_B·A − J_A·B, expanded over the frame columns by normal
    // equations (the frame spans the tangent space; any normal leak of the
    // sphere models is orthogonal and ignored).
    let cols: Vec<DVector<f64>> = center.clone();
    let gram = DMatrix::from_fn(nf, nf, |i, j| cols[i].dot(&cols[j]));
    let gram_inv = gram.clone().try_inverse().expect("frame Gram matrix invertible");
    let expand = |w: &DVector<f64>| -> DVector<f64> {
        let rhs = DVector::from_fn(nf, |i, _| cols[i].dot(w));
        &gram_inv * rhs
    };
    let bracket = |a: usize, b: usize| -> DVector<f64> { &jac[b] * &center[a] - &jac[a] * &center[b] };

    let mut bt = BracketTensors::zeros(k, m);
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let coef = expand(&bracket(i, j));
            for l in 0..k {
                bt.b.set(i, j, l, coef[l]);
            }
            for l in 0..m {
                bt.c.set(i, j, l, coef[k + l]);
            }
        }
    }
    for i in 0..k {
        for j in 0..m {
            let coef = expand(&bracket(i, k + j));
            for l in 0..k {
                bt.a.set(i, j, l, coef[l]);
            }
            for l in 0..m {
                bt.d.set(i, j, l, coef[k + l]);
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let coef = expand(&bracket(k + i, k + j));
            for l in 0..m {
                bt.e.set(i, j, l, coef[k + l]);
            }
        }
    }
    bt
}

// ---------------------------------------------------------------------------
// Boundary normals and the characteristic-point scan.
// ---------------------------------------------------------------------------

/// Result of the horizontal-normal computation at a boundary point.
#[derive(Debug, Clone)]
pub enum NormalResult {
    /// The inward unit horizontal normal, in frame coordinates and chart
    /// components, together with |∇_H U|.
    Normal {
        /// Frame coefficients n_i = X_i(U)/|∇_H U| (a unit vector of ℝ^k).
        frame_coords: DVector<f64>,
        /// Chart components Σ n_i X_i.
        chart: DVector<f64>,
        /// Norm of the horizontal gradient of U at the point.
        grad_h_norm: f64,
    },
    /// The distribution is tangent to the boundary here (|∇_H U| < ε).
    Characteristic {
        /// Norm of the horizontal gradient of U at the point.
        grad_h_norm: f64,
    },
}

/// Inward unit horizontal normal n_q = Σ X_i(U) X_i / |∇_H U| at a boundary
/// point of `domain`, or the characteristic flag when |∇_H U| < `eps_char`.
///
/// The sign is automatically inward because X_i(U) appears in both factors:
/// dU(n_q) = |∇_H U| > 0.
pub fn horizontal_normal(
    model: &dyn Model,
    domain: &dyn Domain,
    q: &DVector<f64>,
    eps_char: f64,
) -> Result<NormalResult> {
    let boundary_tol = 1e-10 * (1.0 + domain.length_scale());
    if domain.defining_fn(q).abs() > boundary_tol.max(1e-8) {
        return Err(Error::Precondition(format!(
            "horizontal_normal: point is not on the boundary (U = {:.3e})",
            domain.defining_fn(q)
        )));
    }
    let grad = domain.defining_grad(q);
    let frames = model.horizontal_frame(q);
    let xu = DVector::from_fn(model.rank(), |i, _| frames[i].dot(&grad));
    let gh = xu.norm();
    if gh < eps_char {
        return Ok(NormalResult::Characteristic { grad_h_norm: gh });
    }
    let frame_coords = &xu / gh;
    let mut chart = DVector::zeros(model.chart_dim());
    for i in 0..model.rank() {
        chart += &frames[i] * frame_coords[i];
    }
    Ok(NormalResult::Normal { frame_coords, chart, grad_h_norm: gh })
}

/// Report of the empirical boundary scan for characteristic points.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CharacteristicScan {
    /// σ-weighted fraction of boundary samples with |∇_H U| < ε_char.
    pub fraction: f64,
    /// Smallest |∇_H U| observed.
    pub min_grad: f64,
    /// Median |∇_H U| observed.
    pub median_grad: f64,
    /// Threshold used.
    pub eps_char: f64,
    /// Sample count.
    pub n: usize,
}

/// Empirical σ-fraction of characteristic boundary points.
pub fn characteristic_scan(
    model: &dyn Model,
    domain: &dyn Domain,
    n: usize,
    eps_char: f64,
    rng: &mut SeededRng,
) -> Result<CharacteristicScan> {
    let mut grads = Vec::with_capacity(n);
    let mut w_hit = 0.0;
    let mut w_tot = 0.0;
    for _ in 0..n {
        let bs = domain.sample_boundary(model, rng)?;
        let grad = domain.defining_grad(&bs.q);
        let frames = model.horizontal_frame(&bs.q);
        let gh = DVector::from_fn(model.rank(), |i, _| frames[i].dot(&grad)).norm()
            / grad.norm().max(1e-300);
        grads.push(gh);
        w_tot += bs.weight;
        if gh < eps_char {
            w_hit += bs.weight;
        }
    }
    grads.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(CharacteristicScan {
        fraction: w_hit / w_tot,
        min_grad: grads[0],
        median_grad: grads[grads.len() / 2],
        eps_char,
        n,
    })
}

// ---------------------------------------------------------------------------
// Registry.
// ---------------------------------------------------------------------------

/// Construct a model by identifier: `round-sphere(d)`, `chf(d)`, `qhf(d)`,
/// `heisenberg(d)`, `martinet`, `spherical-band(eps)`.
/// Carnot specs are built through [`crate::carnot::CarnotModel`] directly.
pub fn model_by_id(id: &str, param: Option<f64>) -> Result<Box<dyn Model>> {
    let int_param = || -> Result<usize> {
        let p = param.ok_or_else(|| Error::Parse(format!("model `{id}` needs a parameter")))?;
        if p < 1.0 || p.fract() != 0.0 {
            return Err(Error::Parse(format!("model `{id}` needs a positive integer parameter")));
        }
        Ok(p as usize)
    };
    match id {
        "round-sphere" => Ok(Box::new(SphereModel::new(SphereKind::Round, int_param()?))),
        "chf" => Ok(Box::new(SphereModel::new(SphereKind::Chf, int_param()?))),
        "qhf" => Ok(Box::new(SphereModel::new(SphereKind::Qhf, int_param()?))),
        "heisenberg" => Ok(Box::new(crate::carnot::CarnotModel::heisenberg(int_param()?))),
        "martinet" => Ok(Box::new(MartinetModel)),
        "spherical-band" => {
            let eps = param.ok_or_else(|| Error::Parse("spherical-band needs ε".into()))?;
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Parse("spherical-band ε must lie in (0, 1)".into()));
            }
            Ok(Box::new(BandModel::new(eps)))
        }
        other => Err(Error::Parse(format!("unknown model id `{other}`"))),
    }
}

#[cfg(test)]
mod tests;
