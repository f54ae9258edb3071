//! Separated radial eigenproblems on hemisphere domains.
//!
//! On the hemisphere of each embedded sphere model the first Dirichlet
//! eigenfunction is a function of the distance r from the pole alone, and
//! the operator separates into a one-dimensional Sturm–Liouville problem on
//! (0, π/2):
//!
//! −(1/w)(w g′)′ + Ṽ g = λ g,   w(r) the radial volume density,
//!
//! with a regular-singular (natural) endpoint at 0 and Dirichlet at π/2.
//! The radial profiles are: round S^d: w = sin^{d−1} r, Ṽ = 0; complex Hopf
//! models: w = sin^{2d−1} r cos r, Ṽ = tan² r; quaternionic Hopf models:
//! w = sin^{4d−1} r cos³ r, Ṽ = 3 tan² r. In all three cases g = cos r is
//! the exact ground state with λ = d, 2d, 4d respectively, which gives a
//! closed-form residual check for the discretization.

use crate::error::{Error, Result};

/// A separated radial problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatedCase {
    /// Hemisphere of the round S^d.
    Round(usize),
    /// Hemisphere of the complex Hopf model with parameter d.
    Chf(usize),
    /// Hemisphere of the quaternionic Hopf model with parameter d.
    Qhf(usize),
}

impl SeparatedCase {
    /// Display name.
    pub fn id(&self) -> String {
        match self {
            Self::Round(d) => format!("round-sphere({d})"),
            Self::Chf(d) => format!("chf({d})"),
            Self::Qhf(d) => format!("qhf({d})"),
        }
    }

    /// First-derivative coefficient p(r) = w′/w.
    pub fn drift(&self, r: f64) -> f64 {
        let cot = 1.0 / r.tan();
        let tan = r.tan();
        match self {
            Self::Round(d) => (*d as f64 - 1.0) * cot,
            Self::Chf(d) => (2.0 * *d as f64 - 1.0) * cot - tan,
            Self::Qhf(d) => (4.0 * *d as f64 - 1.0) * cot - 3.0 * tan,
        }
    }

    /// Potential Ṽ(r) (entering as +Ṽ on the left-hand side).
    pub fn potential(&self, r: f64) -> f64 {
        let t2 = r.tan().powi(2);
        match self {
            Self::Round(_) => 0.0,
            Self::Chf(_) => t2,
            Self::Qhf(_) => 3.0 * t2,
        }
    }

    /// Radial weight w(r).
    pub fn weight(&self, r: f64) -> f64 {
        let (s, c) = r.sin_cos();
        match self {
            Self::Round(d) => s.powi(*d as i32 - 1),
            Self::Chf(d) => s.powi(2 * *d as i32 - 1) * c,
            Self::Qhf(d) => s.powi(4 * *d as i32 - 1) * c.powi(3),
        }
    }

    /// The exact first Dirichlet eigenvalue (ground state g = cos r).
    pub fn lambda_exact(&self) -> f64 {
        match self {
            Self::Round(d) => *d as f64,
            Self::Chf(d) => 2.0 * *d as f64,
            Self::Qhf(d) => 4.0 * *d as f64,
        }
    }
}

/// Maximum pointwise residual of the separated operator on the candidate
/// ground state g = cos r, using closed-form derivatives:
/// |g″ + p g′ − Ṽ g + λ g| over an interior grid.
pub fn cylindrical_residual(case: SeparatedCase) -> f64 {
    let lambda = case.lambda_exact();
    let n = 2000;
    let mut worst = 0.0_f64;
    for i in 1..n {
        let r = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
        let (s, c) = r.sin_cos();
        let g = c;
        let dg = -s;
        let ddg = -c;
        let res = ddg + case.drift(r) * dg - case.potential(r) * g + lambda * g;
        worst = worst.max(res.abs());
    }
    worst
}

/// Solve a symmetric tridiagonal system (Thomas algorithm).
fn tridiag_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        c[i] = if i < n - 1 { off[i] / m } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// First eigenvalue of the separated problem on an `n`-cell shifted mesh
/// r_i = (i + ½)h, h = (π/2)/n, by inverse power iteration on the
/// similarity-symmetrized flux discretization.
pub fn eigenvalue(case: SeparatedCase, n: usize) -> Result<f64> {
    if n < 8 {
        return Err(Error::Precondition("eigensolve needs at least 8 cells".into()));
    }
    let h = std::f64::consts::FRAC_PI_2 / n as f64;
    let r = |i: usize| (i as f64 + 0.5) * h;
    let w_half = |i: usize| case.weight((i as f64 + 1.0) * h); // w at r_{i+½}
    let w0_half = case.weight(0.0); // w at the left face (0 for all cases)

    // Symmetric matrix S = B^{−1/2} L B^{−1/2}, B = diag(w_i), where L is
    // the flux form of −(w g′)′/w + Ṽ with ghost g = −g_{n−1} past π/2
    // (Dirichlet at the wall) and zero flux through r = 0.
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n {
        let wl = if i == 0 { w0_half } else { w_half(i - 1) };
        let wr = w_half(i);
        let wall = if i == n - 1 { 2.0 * wr } else { wr };
        let wi = case.weight(r(i));
        diag[i] = (wl + wall) / (h * h * wi) + case.potential(r(i));
    }
    for i in 0..n - 1 {
        off[i] = -w_half(i) / (h * h * (case.weight(r(i)) * case.weight(r(i + 1))).sqrt());
    }

    // Inverse power iteration with zero shift (S is positive definite).
    let mut x: Vec<f64> = (0..n).map(|i| r(i).cos() * case.weight(r(i)).sqrt()).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|a| *a /= nx);
    let mut lambda = 0.0;
    for _ in 0..500 {
        let y = tridiag_solve(&diag, &off, &x);
        let ny = norm(&y);
        let x_new: Vec<f64> = y.iter().map(|a| a / ny).collect();
        // Rayleigh quotient of the normalized iterate.
        let mut sx = vec![0.0; n];
        for i in 0..n {
            sx[i] = diag[i] * x_new[i];
            if i > 0 {
                sx[i] += off[i - 1] * x_new[i - 1];
            }
            if i < n - 1 {
                sx[i] += off[i] * x_new[i + 1];
            }
        }
        let rq: f64 = x_new.iter().zip(&sx).map(|(a, b)| a * b).sum();
        let done = (rq - lambda).abs() < 1e-14 * rq.abs().max(1.0);
        lambda = rq;
        x = x_new;
        if done {
            break;
        }
    }
    Ok(lambda)
}

/// Eigenvalue with grid-refinement study and Richardson extrapolation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectralResult {
    /// (cells, eigenvalue) per grid, coarse to fine.
    pub per_grid: Vec<(usize, f64)>,
    /// Richardson extrapolation (4λ_fine − λ_coarse)/3 of the last pair.
    pub extrapolated: f64,
    /// The exact value for the case.
    pub exact: f64,
}

/// Run the eigensolve on a doubling sequence of grids and extrapolate.
pub fn eigenvalue_study(case: SeparatedCase, grids: &[usize]) -> Result<SpectralResult> {
    if grids.len() < 2 {
        return Err(Error::Precondition("eigenvalue study needs at least two grids".into()));
    }
    let mut per_grid = Vec::with_capacity(grids.len());
    for &n in grids {
        per_grid.push((n, eigenvalue(case, n)?));
    }
    let (n_c, l_c) = per_grid[per_grid.len() - 2];
    let (n_f, l_f) = per_grid[per_grid.len() - 1];
    if n_f != 2 * n_c {
        return Err(Error::Precondition("final grids must double for Richardson".into()));
    }
    Ok(SpectralResult {
        per_grid,
        extrapolated: (4.0 * l_f - l_c) / 3.0,
        exact: case.lambda_exact(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residuals_vanish_on_closed_form_ground_states() {
        for case in [
            SeparatedCase::Round(2),
            SeparatedCase::Round(3),
            SeparatedCase::Chf(1),
            SeparatedCase::Chf(2),
            SeparatedCase::Qhf(1),
        ] {
            let res = cylindrical_residual(case);
            assert!(res < 1e-10, "{}: residual {res:.3e}", case.id());
        }
    }

    #[test]
    fn eigenvalues_converge_to_exact_values() {
        for case in [SeparatedCase::Round(2), SeparatedCase::Chf(1), SeparatedCase::Qhf(1)] {
            let study = eigenvalue_study(case, &[1024, 2048, 4096]).unwrap();
            let err = (study.extrapolated - study.exact).abs();
            assert!(err < 1e-3, "{}: λ = {} vs {}", case.id(), study.extrapolated, study.exact);
            // Refinement must reduce the error monotonically.
            let e1 = (study.per_grid[0].1 - study.exact).abs();
            let e2 = (study.per_grid[1].1 - study.exact).abs();
            let e3 = (study.per_grid[2].1 - study.exact).abs();
            assert!(e3 < e2 && e2 < e1, "{}: errors {e1:.2e} {e2:.2e} {e3:.2e}", case.id());
        }
    }

    #[test]
    fn tridiag_solver_matches_dense_solve() {
        let diag = [4.0, 5.0, 6.0, 5.0];
        let off = [-1.0, -2.0, -1.5];
        let rhs = [1.0, 0.0, 2.0, -1.0];
        let x = tridiag_solve(&diag, &off, &rhs);
        // Verify A x = rhs directly.
        for i in 0..4 {
            let mut ax = diag[i] * x[i];
            if i > 0 {
                ax += off[i - 1] * x[i - 1];
            }
            if i < 3 {
                ax += off[i] * x[i + 1];
            }
            assert!((ax - rhs[i]).abs() < 1e-12);
        }
    }
}
