//! Sphere-based models: the round sphere and the complex / quaternionic
//! Hopf fibration structures, in ambient Euclidean coordinates.
//!
//! All three live on the unit sphere of ℝ^m. The vertical distribution is
//! spanned by linear fields ξ_a(q) = A_a q for skew matrices A_a (none for
//! the round sphere, the complex structure for CHF, the three quaternionic
//! structures for QHF); the horizontal space is the orthogonal complement of
//! the verticals inside the tangent space. Because the ξ_a are orthonormal
//! along the unit sphere, the Hamiltonian has the closed ambient form
//!
//! 2H(q, p) = |q|²|p|² − ⟨q,p⟩² − Σ_a ⟨p, A_a q⟩²,
//!
//! whose canonical flow preserves |q| and ⟨q,p⟩ exactly and restricts to the
//! sub-Riemannian geodesic flow on {|q| = 1, ⟨q,p⟩ = 0}. On the reduced set
//! (all ⟨p, A_a q⟩ = 0) trajectories are ambient great circles, which is the
//! statement that the sub-Riemannian and extended Riemannian flows agree
//! there.

use super::{FrameCovector, FramePair, Model, ReductionClass};
use nalgebra::DVector;

/// Which sphere structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereKind {
    /// Round S^d, Riemannian (rank = dimension).
    Round,
    /// Complex Hopf fibration on S^{2d+1}, rank 2d, corank 1.
    Chf,
    /// Quaternionic Hopf fibration on S^{4d+3}, rank 4d, corank 3.
    Qhf,
}

/// Sphere model with parameter d (see [`SphereKind`] for dimensions).
#[derive(Debug, Clone)]
pub struct SphereModel {
    kind: SphereKind,
    d: usize,
    amb: usize,
}

impl SphereModel {
    /// Build a sphere model of the given kind and parameter d ≥ 1.
    pub fn new(kind: SphereKind, d: usize) -> Self {
        assert!(d >= 1);
        let amb = match kind {
            SphereKind::Round => d + 1,
            SphereKind::Chf => 2 * d + 2,
            SphereKind::Qhf => 4 * d + 4,
        };
        Self { kind, d, amb }
    }

    /// Kind accessor.
    pub fn kind(&self) -> SphereKind {
        self.kind
    }

    /// Number of vertical generators A_a.
    pub fn n_vertical(&self) -> usize {
        match self.kind {
            SphereKind::Round => 0,
            SphereKind::Chf => 1,
            SphereKind::Qhf => 3,
        }
    }

    /// Apply the a-th vertical generator: w ↦ A_a w.
    ///
    /// CHF uses the complex structure acting on coordinate pairs
    /// (x, y) ↦ (−y, x). QHF acts blockwise on quaternion coordinates
    /// (x, y, z, w): A_I gives (y, −x, w, −z), A_J gives (z, −w, −x, y),
    /// A_K gives (w, z, −y, −x). All are skew with A_a q ⟂ q and the three
    /// QHF fields mutually orthogonal along spheres.
    pub fn apply_vertical(&self, a: usize, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.amb);
        match self.kind {
            SphereKind::Round => unreachable!("round sphere has no vertical generators"),
            SphereKind::Chf => {
                debug_assert_eq!(a, 0);
                for b in 0..self.amb / 2 {
                    let (x, y) = (w[2 * b], w[2 * b + 1]);
                    out[2 * b] = -y;
                    out[2 * b + 1] = x;
                }
            }
            SphereKind::Qhf => {
                for b in 0..self.amb / 4 {
                    let (x, y, z, ww) = (w[4 * b], w[4 * b + 1], w[4 * b + 2], w[4 * b + 3]);
                    let blk = match a {
                        0 => [y, -x, ww, -z],
                        1 => [z, -ww, -x, y],
                        2 => [ww, z, -y, -x],
                        _ => unreachable!("QHF has three vertical generators"),
                    };
                    for (i, val) in blk.into_iter().enumerate() {
                        out[4 * b + i] = val;
                    }
                }
            }
        }
        out
    }

    /// Directions every frame vector must be orthogonal to: the ambient
    /// normal and the vertical unit fields.
    fn constraint_dirs(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let nq = q.norm();
        let mut dirs = vec![q / nq];
        for a in 0..self.n_vertical() {
            dirs.push(self.apply_vertical(a, q) / nq);
        }
        dirs
    }

    /// Orthonormalize `seeds` against `constraints` and each other, in
    /// order, dropping nothing; panics if a seed degenerates (callers choose
    /// seeds to avoid that, or use the pivoted variant).
    fn project_frame(
        constraints: &[DVector<f64>],
        seeds: &[DVector<f64>],
    ) -> Vec<DVector<f64>> {
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(seeds.len());
        for seed in seeds {
            let mut r = seed.clone();
            for c in constraints.iter().chain(out.iter()) {
                let d = c.dot(&r);
                r -= c * d;
            }
            let nr = r.norm();
            assert!(nr > 1e-6, "horizontal frame seed degenerated (residual {nr:.3e})");
            out.push(r / nr);
        }
        out
    }
}

impl Model for SphereModel {
    fn id(&self) -> String {
        match self.kind {
            SphereKind::Round => format!("round-sphere({})", self.d),
            SphereKind::Chf => format!("chf({})", self.d),
            SphereKind::Qhf => format!("qhf({})", self.d),
        }
    }

    fn chart_dim(&self) -> usize {
        self.amb
    }

    fn manifold_dim(&self) -> usize {
        self.amb - 1
    }

    fn rank(&self) -> usize {
        self.manifold_dim() - self.n_vertical()
    }

    fn on_sphere(&self) -> bool {
        true
    }

    fn in_chart(&self, q: &DVector<f64>) -> bool {
        (q.norm() - 1.0).abs() < 1e-6
    }

    /// Pointwise orthonormal horizontal frame by pivoted Gram–Schmidt of the
    /// standard basis against the normal and vertical directions. The choice
    /// is deterministic per point; smoothness is not promised (fiber
    /// integrals and momentum coordinates are invariant under pointwise
    /// rotations of the frame). For differentiation use
    /// [`Model::local_frames`].
    fn horizontal_frame(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let constraints = self.constraint_dirs(q);
        let k = self.rank();
        let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(k);
        let mut candidates: Vec<DVector<f64>> = (0..self.amb)
            .map(|i| DVector::from_fn(self.amb, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        while chosen.len() < k {
            let mut best: Option<(f64, usize)> = None;
            for (idx, cand) in candidates.iter().enumerate() {
                let mut r = cand.clone();
                for c in constraints.iter().chain(chosen.iter()) {
                    let d = c.dot(&r);
                    r -= c * d;
                }
                let nr = r.norm();
                if best.map_or(true, |(bn, _)| nr > bn) {
                    best = Some((nr, idx));
                }
            }
            let (_, idx) = best.expect("candidates nonempty");
            let mut r = candidates.swap_remove(idx);
            for c in constraints.iter().chain(chosen.iter()) {
                let d = c.dot(&r);
                r -= c * d;
            }
            chosen.push(r.clone() / r.norm());
        }
        chosen
    }

    fn vertical_frame(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let nq = q.norm();
        (0..self.n_vertical()).map(|a| self.apply_vertical(a, q) / nq).collect()
    }

    /// Frame field smooth near `q0`: the pivoted frame at `q0` is carried to
    /// nearby points by projection onto the horizontal space and un-pivoted
    /// Gram–Schmidt, which is smooth while the projections stay independent
    /// (always true in a neighborhood of `q0`).
    fn local_frames(&self, q0: &DVector<f64>) -> Box<dyn Fn(&DVector<f64>) -> FramePair + '_> {
        let base = self.horizontal_frame(q0);
        Box::new(move |q| {
            let constraints = self.constraint_dirs(q);
            FramePair {
                horizontal: Self::project_frame(&constraints, &base),
                vertical: self.vertical_frame(q),
            }
        })
    }

    fn reduction_class(&self) -> ReductionClass {
        match self.kind {
            SphereKind::Round => ReductionClass::Other,
            SphereKind::Chf | SphereKind::Qhf => ReductionClass::Foliation,
        }
    }

    /// Reduced geodesics are great circles; the cut length is π.
    fn cut_length(&self, _fc: &FrameCovector) -> Option<f64> {
        Some(std::f64::consts::PI)
    }

    fn state_dim(&self) -> usize {
        2 * self.amb
    }

    fn state_from_covector(&self, fc: &FrameCovector) -> DVector<f64> {
        // Evaluate the frames at the caller's exact point: the pivoted frame
        // choice can flip under 1-ulp perturbations (ties on symmetric
        // points), and fc.u is only meaningful in the frame at fc.q.
        let frames = self.horizontal_frame(&fc.q);
        let verts = self.vertical_frame(&fc.q);
        let q = &fc.q / fc.q.norm();
        let mut p = DVector::zeros(self.amb);
        for (i, x) in frames.iter().enumerate() {
            p += x * fc.u[i];
        }
        for (a, z) in verts.iter().enumerate() {
            p += z * fc.v[a];
        }
        let mut s = DVector::zeros(2 * self.amb);
        for i in 0..self.amb {
            s[i] = q[i];
            s[self.amb + i] = p[i];
        }
        s
    }

    fn covector_from_state(&self, s: &DVector<f64>) -> FrameCovector {
        let q = DVector::from_fn(self.amb, |i, _| s[i]);
        let p = DVector::from_fn(self.amb, |i, _| s[self.amb + i]);
        let frames = self.horizontal_frame(&q);
        let verts = self.vertical_frame(&q);
        FrameCovector {
            u: DVector::from_fn(self.rank(), |i, _| p.dot(&frames[i])),
            v: DVector::from_fn(self.n_vertical(), |a, _| p.dot(&verts[a])),
            q,
        }
    }

    /// Canonical flow of 2H = |q|²|p|² − ⟨q,p⟩² − Σ β_a² with β_a = ⟨p, A_a q⟩:
    /// q̇ = |q|² p − ⟨q,p⟩ q − Σ β_a A_a q,
    /// ṗ = −|p|² q + ⟨q,p⟩ p − Σ β_a A_a p.
    fn flow_rhs(&self, s: &DVector<f64>, ds: &mut DVector<f64>) {
        let m = self.amb;
        let q = DVector::from_fn(m, |i, _| s[i]);
        let p = DVector::from_fn(m, |i, _| s[m + i]);
        let s2 = q.norm_squared();
        let p2 = p.norm_squared();
        let alpha = q.dot(&p);
        let mut dq = &p * s2 - &q * alpha;
        let mut dp = &q * (-p2) + &p * alpha;
        for a in 0..self.n_vertical() {
            let aq = self.apply_vertical(a, &q);
            let beta = p.dot(&aq);
            dq -= &aq * beta;
            dp -= self.apply_vertical(a, &p) * beta;
        }
        for i in 0..m {
            ds[i] = dq[i];
            ds[m + i] = dp[i];
        }
    }

    /// Project back onto the constraint set {|q| = 1, ⟨q,p⟩ = 0}; both are
    /// exact invariants of the flow, so this only removes integrator noise.
    fn normalize_state(&self, s: &mut DVector<f64>) {
        let m = self.amb;
        let mut q = DVector::from_fn(m, |i, _| s[i]);
        let mut p = DVector::from_fn(m, |i, _| s[m + i]);
        q /= q.norm();
        let alpha = q.dot(&p);
        p -= &q * alpha;
        for i in 0..m {
            s[i] = q[i];
            s[m + i] = p[i];
        }
    }

    fn state_hamiltonian(&self, s: &DVector<f64>) -> f64 {
        let m = self.amb;
        let q = DVector::from_fn(m, |i, _| s[i]);
        let p = DVector::from_fn(m, |i, _| s[m + i]);
        let mut two_h = q.norm_squared() * p.norm_squared() - q.dot(&p).powi(2);
        for a in 0..self.n_vertical() {
            two_h -= p.dot(&self.apply_vertical(a, &q)).powi(2);
        }
        0.5 * two_h
    }

    fn state_vertical_norm(&self, s: &DVector<f64>) -> f64 {
        let m = self.amb;
        let q = DVector::from_fn(m, |i, _| s[i]);
        let p = DVector::from_fn(m, |i, _| s[m + i]);
        let nq = q.norm();
        (0..self.n_vertical())
            .map(|a| (p.dot(&self.apply_vertical(a, &q)) / nq).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
