//! Step-2 Carnot groups: structure constants, group law, reduced geodesics,
//! horizontal diameter, and the eigenvalue/isoperimetric corollaries.
//!
//! In exponential coordinates (x, z) ∈ ℝ^k × ℝ^{m₂} the product is
//! (x, z) ⋆ (x′, z′) = (x + x′, z + z′ + f(x, x′)) with
//! f(x, x′)_l = ½ Σ_{ij} x_i c_{ij}^l x′_j, and reduced geodesics are
//! left-translated straight lines t ↦ q ⋆ (ut, 0). The Heisenberg groups are
//! the special case c_{ij}^1 = J_{ij} with J the standard symplectic matrix.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::model::{
    chart_covector_from_state, chart_flow_rhs, chart_state_from_covector, BracketTensors,
    FrameCovector, Model, ReductionClass, Tensor3,
};
use crate::sampling::{rng_for, unit_sphere, SeededRng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Structure constants of a step-2 stratified Lie algebra.
#[derive(Debug, Clone)]
pub struct CarnotSpec {
    /// First-layer (horizontal) dimension k.
    pub k: usize,
    /// Second-layer dimension m₂.
    pub m2: usize,
    /// c_{ij}^l with shape (k, k, m₂), skew in (i, j).
    pub c: Tensor3,
}

impl CarnotSpec {
    /// Build a spec, checking skew-symmetry.
    pub fn new(k: usize, m2: usize, c: Tensor3) -> Result<Self> {
        if c.shape() != (k, k, m2) {
            return Err(Error::Dimension(format!(
                "structure constants must have shape ({k}, {k}, {m2}), got {:?}",
                c.shape()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                for l in 0..m2 {
                    if (c.get(i, j, l) + c.get(j, i, l)).abs() > 1e-12 {
                        return Err(Error::Parse(format!(
                            "structure constants not skew at ({i}, {j}, {l})"
                        )));
                    }
                }
            }
        }
        Ok(Self { k, m2, c })
    }

    /// The Heisenberg group H^d: k = 2d, m₂ = 1, c_{ij}^1 = J_{ij}.
    pub fn heisenberg(d: usize) -> Self {
        let k = 2 * d;
        let mut c = Tensor3::zeros(k, k, 1);
        for i in 0..d {
            c.set(i, d + i, 0, 1.0);
            c.set(d + i, i, 0, -1.0);
        }
        Self { k, m2: 1, c }
    }

    /// The abelian group ℝ^{k+m₂} (all constants zero).
    pub fn abelian(k: usize, m2: usize) -> Self {
        Self { k, m2, c: Tensor3::zeros(k, k, m2) }
    }

    /// Whether the second layer is spanned by brackets of the first
    /// (bracket-generating at step 2).
    pub fn is_bracket_generating(&self) -> bool {
        if self.m2 == 0 {
            return true;
        }
        let pairs: Vec<(usize, usize)> =
            (0..self.k).flat_map(|i| (i + 1..self.k).map(move |j| (i, j))).collect();
        let mat = DMatrix::from_fn(pairs.len(), self.m2, |r, l| {
            let (i, j) = pairs[r];
            self.c.get(i, j, l)
        });
        mat.rank(1e-10) == self.m2
    }

    /// Group product (x, z) ⋆ (x′, z′).
    pub fn multiply(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.k + self.m2;
        if a.len() != n || b.len() != n {
            return Err(Error::Dimension(format!(
                "group elements must have dimension {n}, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let mut out = a + b;
        for l in 0..self.m2 {
            let mut f = 0.0;
            for i in 0..self.k {
                for j in 0..self.k {
                    f += a[i] * self.c.get(i, j, l) * b[j];
                }
            }
            out[self.k + l] += 0.5 * f;
        }
        Ok(out)
    }

    /// Group inverse (−x, −z) (exact at step 2 since f(x, −x) = 0).
    pub fn inverse(&self, a: &DVector<f64>) -> DVector<f64> {
        -a
    }

    /// Reduced geodesic γ(t) = q ⋆ (ut, 0) with |u| = 1.
    pub fn reduced_geodesic(&self, q: &DVector<f64>, u: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        if u.len() != self.k {
            return Err(Error::Dimension(format!(
                "horizontal direction must have dimension {}, got {}",
                self.k,
                u.len()
            )));
        }
        let mut step = DVector::zeros(self.k + self.m2);
        for i in 0..self.k {
            step[i] = u[i] * t;
        }
        self.multiply(q, &step)
    }

    /// Parse the structured text format: a header line `k m2` followed by
    /// lines `i j l value` (1-based indices); the skew counterpart of every
    /// entry is filled in automatically and conflicting duplicates are
    /// rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty Carnot spec".into()))?;
        let hp: Vec<&str> = header.split_whitespace().collect();
        if hp.len() != 2 {
            return Err(Error::Parse(format!("expected header `k m2`, got `{header}`")));
        }
        let k: usize = hp[0].parse().map_err(|_| Error::Parse(format!("bad k `{}`", hp[0])))?;
        let m2: usize = hp[1].parse().map_err(|_| Error::Parse(format!("bad m2 `{}`", hp[1])))?;
        let mut c = Tensor3::zeros(k, k, m2);
        let mut seen = std::collections::HashSet::new();
        for (lineno, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected `i j l value`", lineno + 2)));
            }
            let idx = |s: &str, max: usize, name: &str| -> Result<usize> {
                let v: usize =
                    s.parse().map_err(|_| Error::Parse(format!("bad index `{s}`")))?;
                if v < 1 || v > max {
                    return Err(Error::Parse(format!("{name} index {v} out of range 1..={max}")));
                }
                Ok(v - 1)
            };
            let i = idx(parts[0], k, "i")?;
            let j = idx(parts[1], k, "j")?;
            let l = idx(parts[2], m2, "l")?;
            let val: f64 =
                parts[3].parse().map_err(|_| Error::Parse(format!("bad value `{}`", parts[3])))?;
            if i == j && val != 0.0 {
                return Err(Error::Parse(format!("diagonal entry ({}, {}) must vanish", i + 1, j + 1)));
            }
            if !seen.insert((i.min(j), i.max(j), l)) {
                return Err(Error::Parse(format!(
                    "duplicate entry for ({}, {}, {})",
                    i + 1,
                    j + 1,
                    l + 1
                )));
            }
            c.set(i, j, l, val);
            c.set(j, i, l, -val);
        }
        Self::new(k, m2, c)
    }
}

/// A step-2 Carnot group as a [`Model`]: global exponential chart on
/// ℝ^{k+m₂}, left-invariant frames
/// X_i = ∂_{x_i} + ½ Σ_l (Σ_j c_{ji}^l x_j) ∂_{z_l}, Z_l = ∂_{z_l},
/// ω = Lebesgue (Haar) measure.
#[derive(Debug, Clone)]
pub struct CarnotModel {
    spec: CarnotSpec,
    id: String,
}

impl CarnotModel {
    /// Wrap a spec with a display id.
    pub fn new(spec: CarnotSpec, id: impl Into<String>) -> Self {
        Self { spec, id: id.into() }
    }

    /// The Heisenberg group model `heisenberg(d)`.
    pub fn heisenberg(d: usize) -> Self {
        Self::new(CarnotSpec::heisenberg(d), format!("heisenberg({d})"))
    }

    /// Structure constants.
    pub fn spec(&self) -> &CarnotSpec {
        &self.spec
    }
}

impl Model for CarnotModel {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn chart_dim(&self) -> usize {
        self.spec.k + self.spec.m2
    }

    fn manifold_dim(&self) -> usize {
        self.chart_dim()
    }

    fn rank(&self) -> usize {
        self.spec.k
    }

    fn horizontal_frame(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        let (k, m2) = (self.spec.k, self.spec.m2);
        (0..k)
            .map(|i| {
                let mut x = DVector::zeros(k + m2);
                x[i] = 1.0;
                for l in 0..m2 {
                    let mut s = 0.0;
                    for j in 0..k {
                        s += self.spec.c.get(j, i, l) * q[j];
                    }
                    x[k + l] = 0.5 * s;
                }
                x
            })
            .collect()
    }

    fn vertical_frame(&self, _q: &DVector<f64>) -> Vec<DVector<f64>> {
        let (k, m2) = (self.spec.k, self.spec.m2);
        (0..m2)
            .map(|l| {
                let mut z = DVector::zeros(k + m2);
                z[k + l] = 1.0;
                z
            })
            .collect()
    }

    fn bracket_tensors(&self, _q: &DVector<f64>) -> BracketTensors {
        let mut bt = BracketTensors::zeros(self.spec.k, self.spec.m2);
        bt.c = self.spec.c.clone();
        bt
    }

    fn reduction_class(&self) -> ReductionClass {
        ReductionClass::Carnot
    }

    fn state_dim(&self) -> usize {
        2 * self.chart_dim()
    }

    fn state_from_covector(&self, fc: &FrameCovector) -> DVector<f64> {
        chart_state_from_covector(self, fc)
    }

    fn covector_from_state(&self, s: &DVector<f64>) -> FrameCovector {
        chart_covector_from_state(self, s)
    }

    fn flow_rhs(&self, s: &DVector<f64>, ds: &mut DVector<f64>) {
        chart_flow_rhs(self, s, ds);
    }

    fn state_hamiltonian(&self, s: &DVector<f64>) -> f64 {
        let n = self.chart_dim();
        0.5 * (0..self.spec.k).map(|i| s[n + i] * s[n + i]).sum::<f64>()
    }

    fn state_vertical_norm(&self, s: &DVector<f64>) -> f64 {
        let n = self.chart_dim();
        let k = self.spec.k;
        (0..self.spec.m2).map(|l| s[n + k + l] * s[n + k + l]).sum::<f64>().sqrt()
    }
}

/// Result of the horizontal-diameter search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiameterEstimate {
    /// Best chord found (a certified lower bound on diam_H).
    pub diameter: f64,
    /// Best chord before pattern-search refinement.
    pub sampled: f64,
    /// Monte-Carlo sample count.
    pub n_samples: usize,
    /// Pattern-search iterations performed.
    pub refine_iters: usize,
}

/// Chord length of the line t ↦ q ⋆ (ut, 0) inside the domain (forward plus
/// backward exit), by marching plus bisection. Returns None when an exit was
/// not bracketed within 8 length scales (unbounded or pathological domain).
pub fn line_chord(
    spec: &CarnotSpec,
    domain: &dyn Domain,
    q: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<Option<f64>> {
    let t_cap = 8.0 * domain.length_scale();
    let mut total = 0.0;
    for dir in [1.0, -1.0] {
        let inside = |t: f64| -> Result<bool> {
            Ok(domain.defining_fn(&spec.reduced_geodesic(q, u, dir * t)?) >= 0.0)
        };
        // March outward to bracket the exit.
        let step = domain.length_scale() / 16.0;
        let mut lo = 0.0;
        let mut hi = None;
        let mut t = step;
        while t <= t_cap {
            if inside(t)? {
                lo = t;
            } else {
                hi = Some(t);
                break;
            }
            t += step;
        }
        let Some(mut hi) = hi else {
            return Ok(None);
        };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        total += 0.5 * (lo + hi);
    }
    Ok(Some(total))
}

/// Horizontal diameter by Monte-Carlo over (q, u) plus coordinate pattern
/// search from the best sample. The result is a lower bound on diam_H; the
/// corollary reports label its direction accordingly.
pub fn horizontal_diameter(
    spec: &CarnotSpec,
    domain: &dyn Domain,
    model: &dyn Model,
    n_samples: usize,
    refine_iters: usize,
    seed: u64,
) -> Result<DiameterEstimate> {
    let mut rng = rng_for(seed, 90);
    let mut best = 0.0_f64;
    let mut best_qu: Option<(DVector<f64>, DVector<f64>)> = None;
    for _ in 0..n_samples {
        let q = domain.sample_interior(model, &mut rng)?;
        let u = unit_sphere(&mut rng, spec.k);
        if let Some(chord) = line_chord(spec, domain, &q, &u)? {
            if chord > best {
                best = chord;
                best_qu = Some((q, u));
            }
        }
    }
    let sampled = best;
    let Some((mut q, mut u)) = best_qu else {
        return Err(Error::Numeric("no finite chord found in diameter search".into()));
    };
    let mut radius = 0.1 * domain.length_scale();
    for _ in 0..refine_iters {
        let mut improved = false;
        // Perturb the base point and the direction separately.
        for _ in 0..8 {
            let mut qq = q.clone();
            for c in 0..qq.len() {
                qq[c] += radius * (rng.gen::<f64>() - 0.5);
            }
            if domain.defining_fn(&qq) < 0.0 {
                continue;
            }
            let mut uu = &u + unit_sphere(&mut rng, spec.k) * (0.5 * radius);
            uu /= uu.norm();
            if let Some(chord) = line_chord(spec, domain, &qq, &uu)? {
                if chord > best {
                    best = chord;
                    q = qq;
                    u = uu;
                    improved = true;
                }
            }
        }
        if !improved {
            radius *= 0.7;
            if radius < 1e-9 * domain.length_scale() {
                break;
            }
        }
    }
    Ok(DiameterEstimate { diameter: best, sampled, n_samples, refine_iters })
}

/// The two Carnot-group corollary bounds, with the measured perimeter ratio.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CarnotBounds {
    /// Horizontal diameter estimate used in the denominators.
    pub diameter: DiameterEstimate,
    /// λ₁ lower bound k π² / diam_H².
    pub lambda1_bound: f64,
    /// Perimeter-ratio lower bound 2π |S^{k−1}| / (|S^k| diam_H).
    pub iso_bound: f64,
    /// Monte-Carlo estimate of σ(∂M)/ω(M) and its standard error.
    pub sigma_over_omega: f64,
    /// Standard error of the ratio estimate.
    pub sigma_over_omega_stderr: f64,
    /// Whether σ/ω ≥ iso_bound within 3 standard errors.
    pub iso_inequality_holds: bool,
}

/// Evaluate the two corollary bounds on a bounded domain and check the
/// isoperimetric one against a Monte-Carlo perimeter ratio.
pub fn carnot_bounds(
    model: &CarnotModel,
    domain: &dyn Domain,
    n_samples: usize,
    seed: u64,
) -> Result<CarnotBounds> {
    let spec = model.spec();
    let diameter = horizontal_diameter(spec, domain, model, n_samples.max(64), 200, seed)?;
    let k = spec.k;
    let pi = std::f64::consts::PI;
    let lambda1_bound = k as f64 * pi * pi / (diameter.diameter * diameter.diameter);
    let iso_bound = crate::constants::isoperimetric_constant(k) / diameter.diameter;

    let sigma = domain.boundary_area(model, n_samples, seed.wrapping_add(1))?;
    let omega = domain.volume(model, n_samples, seed.wrapping_add(2))?;
    let ratio = sigma.value / omega.value;
    // First-order error propagation for the quotient.
    let rel = |v: f64, s: Option<f64>| s.unwrap_or(0.0) / v;
    let ratio_stderr =
        ratio * (rel(sigma.value, sigma.stderr).powi(2) + rel(omega.value, omega.stderr).powi(2)).sqrt();
    Ok(CarnotBounds {
        diameter,
        lambda1_bound,
        iso_bound,
        sigma_over_omega: ratio,
        sigma_over_omega_stderr: ratio_stderr,
        iso_inequality_holds: ratio >= iso_bound - 3.0 * ratio_stderr,
    })
}

/// A convenient pseudorandom bracket-generating step-2 spec for tests:
/// k = 3, m₂ = 2 with randomized skew constants.
pub fn random_spec(seed: u64) -> CarnotSpec {
    let mut rng: SeededRng = rng_for(seed, 17);
    loop {
        let (k, m2) = (3, 2);
        let mut c = Tensor3::zeros(k, k, m2);
        for i in 0..k {
            for j in (i + 1)..k {
                for l in 0..m2 {
                    let val = (rng.gen::<f64>() * 4.0 - 2.0).round() / 2.0;
                    c.set(i, j, l, val);
                    c.set(j, i, l, -val);
                }
            }
        }
        let spec = CarnotSpec::new(k, m2, c).expect("constructed skew");
        if spec.is_bracket_generating() {
            return spec;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoxDomain;
    use approx::assert_abs_diff_eq;

    fn rand_elem(rng: &mut SeededRng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn group_axioms_hold() {
        for spec in [CarnotSpec::heisenberg(1), CarnotSpec::heisenberg(2), random_spec(3)] {
            let n = spec.k + spec.m2;
            let mut rng = rng_for(1, 0);
            for _ in 0..20 {
                let a = rand_elem(&mut rng, n);
                let b = rand_elem(&mut rng, n);
                let c = rand_elem(&mut rng, n);
                let ab_c = spec.multiply(&spec.multiply(&a, &b).unwrap(), &c).unwrap();
                let a_bc = spec.multiply(&a, &spec.multiply(&b, &c).unwrap()).unwrap();
                assert!((ab_c - a_bc).norm() < 1e-12, "associativity");
                let id = spec.multiply(&a, &spec.inverse(&a)).unwrap();
                assert!(id.norm() < 1e-12, "inverse");
            }
        }
    }

    #[test]
    fn heisenberg_frames_have_the_symplectic_twist() {
        let model = CarnotModel::heisenberg(1);
        let q = DVector::from_vec(vec![0.3, -0.7, 0.1]);
        let frames = model.horizontal_frame(&q);
        // X₁ = ∂_x − ½ y ∂_z, X₂ = ∂_y + ½ x ∂_z.
        assert!((&frames[0] - DVector::from_vec(vec![1.0, 0.0, 0.35])).norm() < 1e-14);
        assert!((&frames[1] - DVector::from_vec(vec![0.0, 1.0, 0.15])).norm() < 1e-14);
        let bt = model.bracket_tensors(&q);
        assert_abs_diff_eq!(bt.c.get(0, 1, 0), 1.0);
        assert_abs_diff_eq!(bt.c.get(1, 0, 0), -1.0);
        // The analytic constants agree with the finite-difference oracle.
        let fd = crate::model::fd_bracket_tensors(&model, &q);
        assert!((fd.c.get(0, 1, 0) - 1.0).abs() < 1e-7);
        assert!(fd.a.max_abs() < 1e-7 && fd.d.max_abs() < 1e-7);
    }

    #[test]
    fn bracket_generation_detection() {
        assert!(CarnotSpec::heisenberg(1).is_bracket_generating());
        assert!(CarnotSpec::heisenberg(3).is_bracket_generating());
        assert!(!CarnotSpec::abelian(2, 1).is_bracket_generating());
        assert!(CarnotSpec::abelian(3, 0).is_bracket_generating());
        assert!(random_spec(11).is_bracket_generating());
    }

    #[test]
    fn parser_roundtrip_and_errors() {
        let spec = CarnotSpec::parse("2 1\n1 2 1 1.0\n").unwrap();
        let reference = CarnotSpec::heisenberg(1);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(spec.c.get(i, j, 0), reference.c.get(i, j, 0));
            }
        }
        // Comments and blank lines are fine.
        assert!(CarnotSpec::parse("# c\n3 2\n\n1 2 1 0.5\n2 3 2 -1\n").is_ok());
        assert!(CarnotSpec::parse("").is_err());
        assert!(CarnotSpec::parse("2\n").is_err());
        assert!(CarnotSpec::parse("2 1\n1 2 1\n").is_err());
        assert!(CarnotSpec::parse("2 1\n1 1 1 1.0\n").is_err(), "diagonal entry");
        assert!(CarnotSpec::parse("2 1\n1 2 1 1.0\n2 1 1 1.0\n").is_err(), "conflicting skew pair");
        assert!(CarnotSpec::parse("2 1\n1 3 1 1.0\n").is_err(), "index range");
    }

    #[test]
    fn straight_chords_in_a_cube() {
        let spec = CarnotSpec::heisenberg(1);
        let domain = BoxDomain::cube(3, 1.0);
        let q = DVector::zeros(3);
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let chord = line_chord(&spec, &domain, &q, &u).unwrap().unwrap();
        assert_abs_diff_eq!(chord, 2.0, epsilon = 1e-9);
        let diag = DVector::from_vec(vec![1.0, 1.0]) / 2.0_f64.sqrt();
        let chord = line_chord(&spec, &domain, &q, &diag).unwrap().unwrap();
        assert_abs_diff_eq!(chord, 2.0 * 2.0_f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn diameter_search_finds_the_cube_diagonal() {
        let model = CarnotModel::heisenberg(1);
        let domain = BoxDomain::cube(3, 1.0);
        let est =
            horizontal_diameter(model.spec(), &domain, &model, 400, 200, 5).unwrap();
        // The longest reduced chord is the diagonal of the (x, y) square.
        let exact = 2.0 * 2.0_f64.sqrt();
        assert!(est.diameter <= exact + 1e-6, "diameter {} exceeds {exact}", est.diameter);
        assert!(est.diameter > 0.95 * exact, "diameter {} too small", est.diameter);
        assert!(est.diameter >= est.sampled);
    }

    #[test]
    fn carnot_bounds_hold_on_the_cube() {
        let model = CarnotModel::heisenberg(1);
        let domain = BoxDomain::cube(3, 1.0);
        let bounds = carnot_bounds(&model, &domain, 2000, 9).unwrap();
        assert!(bounds.lambda1_bound > 0.0);
        assert!(bounds.iso_bound > 0.0);
        assert!(
            bounds.iso_inequality_holds,
            "σ/ω = {} ± {} vs bound {}",
            bounds.sigma_over_omega, bounds.sigma_over_omega_stderr, bounds.iso_bound
        );
    }
}
