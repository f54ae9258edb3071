//! Scenario configuration: a named (model, domain) pair plus a list of
//! checks to run, loaded from TOML.

use serde::Deserialize;

/// A complete scenario file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Scenario name; also the stem of the report file.
    pub name: String,
    /// Base seed for every stochastic check (overridable with `--seed`).
    pub seed: u64,
    /// Model to instantiate.
    pub model: ModelSpec,
    /// Domain to instantiate.
    pub domain: DomainSpec,
    /// Shared numerical options.
    #[serde(default)]
    pub options: Options,
    /// Checks to run, in order. An empty list is valid and yields a
    /// passing report with no checks.
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl Scenario {
    /// Parse a scenario from TOML text.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("scenario parse error: {e}"))
    }
}

/// Model identifier plus optional numeric parameter, matching the core
/// model registry (`round-sphere`, `chf`, `qhf`, `heisenberg`, `martinet`,
/// `spherical-band`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    pub param: Option<f64>,
}

/// Domain identifier plus optional numeric parameter (`hemisphere`,
/// `spherical-band(eps)`, `heisenberg-ball(r)`, `cube(halfwidth)`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub id: String,
    pub param: Option<f64>,
}

/// Numerical options shared by all checks in the scenario.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Integration cap in units of the domain length scale.
    pub cap_scales: f64,
    /// Relative ODE tolerance.
    pub rtol: f64,
    /// Absolute ODE tolerance.
    pub atol: f64,
    /// Horizontal-gradient threshold for characteristic boundary points.
    pub eps_char: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { cap_scales: 8.0, rtol: 1e-9, atol: 1e-9, eps_char: 1e-6 }
    }
}

/// Integrand choice for the balance check.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// F ≡ 1.
    #[default]
    One,
    /// F = ⟨λ, ∇_H q₁⟩², the squared horizontal pairing of the first
    /// coordinate.
    PairingSq,
}

/// Test-function choice for the Hardy-type checks.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// f(q) = q₁ (extremal on embedded hemispheres; not boundary-vanishing
    /// on every domain).
    #[default]
    FirstCoordinate,
    /// f = cos((θ − π/2)·π/(2ε)) on the spherical band: vanishes at both
    /// edges and is extremal for the one-dimensional problem.
    BandCos,
}

/// Separated eigenproblem case.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralCase {
    Round,
    Chf,
    Qhf,
}

fn d_points() -> usize {
    25
}
fn d_red_tol() -> f64 {
    1e-9
}
fn d_n() -> usize {
    400
}
fn d_eps() -> f64 {
    0.01
}
fn d_frac() -> f64 {
    0.05
}
fn d_z() -> f64 {
    4.0
}
fn d_tol() -> f64 {
    1e-3
}
fn d_grids() -> Vec<usize> {
    vec![512, 1024]
}

/// One check to run.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Algebraic residuals of the two reduction hypotheses at sampled
    /// chart points.
    Reduction {
        #[serde(default = "d_points")]
        points: usize,
        #[serde(default = "d_red_tol")]
        tolerance: f64,
    },
    /// σ-weighted fraction of characteristic boundary points.
    Characteristic {
        #[serde(default = "d_n")]
        n: usize,
        #[serde(default = "d_eps")]
        eps_char: f64,
        #[serde(default = "d_frac")]
        max_fraction: f64,
    },
    /// Interior/boundary balance of the reduced kinematic measure.
    Santalo {
        #[serde(default = "d_n")]
        n: usize,
        #[serde(default)]
        integrand: Integrand,
        #[serde(default = "d_z")]
        z_max: f64,
        /// Optional closed-form value both sides must match.
        expected: Option<f64>,
    },
    /// Hardy-type inequality on paired samples.
    Hardy {
        #[serde(default = "d_n")]
        n: usize,
        #[serde(default)]
        function: ProfileKind,
        /// Expect the equality case (ratio = 1) instead of a strict
        /// inequality.
        #[serde(default)]
        equality: bool,
    },
    /// L^p Hardy-type inequalities, both radius variants per exponent.
    PHardy {
        #[serde(default = "d_n")]
        n: usize,
        p: Vec<f64>,
        #[serde(default)]
        function: ProfileKind,
    },
    /// First-eigenvalue lower bound from the chord-length supremum.
    Lambda1 {
        #[serde(default = "d_n")]
        n: usize,
        /// Known λ₁; the bound must not exceed it.
        exact: Option<f64>,
        /// Known chord supremum to verify against.
        l_sup_expected: Option<f64>,
        #[serde(default = "d_tol")]
        tolerance: f64,
    },
    /// Perimeter-ratio bound σ/ω(M̃) ≥ 2π|S^{k−1}|/(|S^k| ℓ̃_sup).
    Isoperimetric {
        #[serde(default = "d_n")]
        n: usize,
        /// Expect the equality case (|z| ≤ 3) instead of one-sided slack.
        #[serde(default)]
        equality: bool,
    },
    /// 1-D separated eigensolve with Richardson extrapolation against the
    /// exact hemisphere eigenvalue.
    Spectral {
        case: SpectralCase,
        #[serde(default = "d_grids")]
        grids: Vec<usize>,
        #[serde(default = "d_tol")]
        tolerance: f64,
    },
    /// Step-2 Carnot group corollaries: diameter-based λ₁ and perimeter
    /// bounds on the scenario domain (model must be `heisenberg`).
    Carnot {
        #[serde(default = "d_n")]
        n: usize,
    },
}

impl CheckSpec {
    /// snake_case name used in the report.
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Reduction { .. } => "reduction",
            CheckSpec::Characteristic { .. } => "characteristic",
            CheckSpec::Santalo { .. } => "santalo",
            CheckSpec::Hardy { .. } => "hardy",
            CheckSpec::PHardy { .. } => "p_hardy",
            CheckSpec::Lambda1 { .. } => "lambda1",
            CheckSpec::Isoperimetric { .. } => "isoperimetric",
            CheckSpec::Spectral { .. } => "spectral",
            CheckSpec::Carnot { .. } => "carnot",
        }
    }
}
