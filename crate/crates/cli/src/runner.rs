//! Execute a scenario: build the model and domain, run each check, and
//! assemble the run report.

use crate::report::{Environment, RunReport, SCHEMA_VERSION};
use crate::scenario::{
    CheckSpec, Integrand, Options, ProfileKind, Scenario, SpectralCase,
};
use nalgebra::DVector;
use rand::Rng;
use srlab_core::carnot::{carnot_bounds, CarnotModel};
use srlab_core::domain::{BandDomain, BoxDomain, Domain, HeisenbergBall, Hemisphere};
use srlab_core::flow::FlowOptions;
use srlab_core::inequalities::{
    hardy_check, isoperimetric_check, lambda1_lower_bound, p_hardy_check, FirstCoordinate,
    TestFunction,
};
use srlab_core::model::{characteristic_scan, model_by_id};
use srlab_core::reduction::certify;
use srlab_core::report::{CheckReport, NumericResult};
use srlab_core::sampling::{rng_for, unit_sphere};
use srlab_core::santalo::{balance, SantaloOptions};
use srlab_core::spectral::{cylindrical_residual, eigenvalue_study, SeparatedCase};
use srlab_core::Model;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Failure modes of a run, mapped to process exit codes by `main`.
#[derive(Debug)]
pub enum RunError {
    /// Bad configuration: unknown identifiers, missing parameters,
    /// incompatible check/model pairings. Exit code 2.
    Config(String),
    /// A numeric procedure failed while executing a check. Exit code 3.
    Numeric(srlab_core::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "config error: {msg}"),
            RunError::Numeric(e) => write!(f, "numeric error: {e}"),
        }
    }
}

impl From<srlab_core::Error> for RunError {
    fn from(e: srlab_core::Error) -> Self {
        RunError::Numeric(e)
    }
}

fn display_id(id: &str, param: Option<f64>) -> String {
    match param {
        Some(p) => format!("{id}({p})"),
        None => id.to_string(),
    }
}

fn build_domain(sc: &Scenario, model: &dyn Model) -> Result<Box<dyn Domain>, RunError> {
    let need = |what: &str| -> Result<f64, RunError> {
        sc.domain
            .param
            .ok_or_else(|| RunError::Config(format!("domain `{}` needs a {what}", sc.domain.id)))
    };
    match sc.domain.id.as_str() {
        "hemisphere" => Ok(Box::new(Hemisphere)),
        "spherical-band" => Ok(Box::new(BandDomain::new(need("width ε")?))),
        "heisenberg-ball" => Ok(Box::new(HeisenbergBall::new(need("radius")?))),
        "cube" => Ok(Box::new(BoxDomain::cube(model.chart_dim(), need("halfwidth")?))),
        other => Err(RunError::Config(format!("unknown domain id `{other}`"))),
    }
}

fn santalo_options(opts: &Options) -> SantaloOptions {
    SantaloOptions {
        cap_scales: opts.cap_scales,
        flow: FlowOptions { rtol: opts.rtol, atol: opts.atol, ..FlowOptions::default() },
        eps_char: opts.eps_char,
    }
}

/// f = cos((θ − π/2)·π/(2ε)) on the band chart, vanishing at both edges.
struct BandCos {
    eps: f64,
}

impl TestFunction for BandCos {
    fn value(&self, q: &DVector<f64>) -> f64 {
        ((q[0] - PI / 2.0) * PI / (2.0 * self.eps)).cos()
    }

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        let s = PI / (2.0 * self.eps);
        let mut g = DVector::zeros(q.len());
        g[0] = -((q[0] - PI / 2.0) * s).sin() * s;
        g
    }
}

fn profile(kind: ProfileKind, sc: &Scenario) -> Result<Box<dyn TestFunction>, RunError> {
    match kind {
        ProfileKind::FirstCoordinate => Ok(Box::new(FirstCoordinate)),
        ProfileKind::BandCos => {
            let eps = sc
                .domain
                .param
                .filter(|_| sc.domain.id == "spherical-band")
                .ok_or_else(|| {
                    RunError::Config("band_cos profile needs the spherical-band domain".into())
                })?;
            Ok(Box::new(BandCos { eps }))
        }
    }
}

/// Chart points for the reduction certificate: uniform on the sphere for
/// embedded models, uniform in a chart box otherwise.
fn chart_points(model: &dyn Model, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = rng_for(seed, 11);
    (0..count)
        .map(|_| {
            if model.on_sphere() {
                unit_sphere(&mut rng, model.chart_dim())
            } else {
                DVector::from_fn(model.chart_dim(), |_, _| rng.gen::<f64>() * 0.8 - 0.4)
            }
        })
        .collect()
}

fn fmt_pm(v: f64, s: f64) -> String {
    format!("{v:.6} ± {s:.1e}")
}

/// The measured boundary area is authoritative for hemisphere domains of
/// the complex Hopf model; see the check notes for the caveat text.
const CHF_BOUNDARY_NOTE: &str = "boundary_area: σ(∂M) here is the direct quadrature of the \
induced perimeter density (π² for chf(1)); tabulated closed forms that disagree with this \
measured value are not used";

fn run_check(
    spec: &CheckSpec,
    sc: &Scenario,
    model: &dyn Model,
    domain: &dyn Domain,
    seed: u64,
) -> Result<CheckReport, RunError> {
    let opts = santalo_options(&sc.options);
    let mut rep = CheckReport::new(spec.name());
    let chf_hemisphere = sc.model.id == "chf" && sc.domain.id == "hemisphere";
    match spec {
        CheckSpec::Reduction { points, tolerance } => {
            let pts = chart_points(model, *points, seed);
            let cert = certify(model, &pts, *tolerance);
            rep.detail("h1_residual", NumericResult::analytic(cert.h1_residual).with_tolerance(*tolerance));
            rep.detail("h2_residual", NumericResult::analytic(cert.h2_residual).with_tolerance(*tolerance));
            rep.detail("aux_residual", NumericResult::analytic(cert.aux_residual).with_tolerance(*tolerance));
            rep.note(format!("structural class: {}", cert.class));
            rep.seed = Some(seed);
            rep.n = Some(*points);
            rep.assert_that(cert.pass());
        }
        CheckSpec::Characteristic { n, eps_char, max_fraction } => {
            let mut rng = rng_for(seed, 5);
            let scan = characteristic_scan(model, domain, *n, *eps_char, &mut rng)?;
            rep.detail(
                "fraction",
                NumericResult::monte_carlo(scan.fraction, 0.0).with_tolerance(*max_fraction),
            );
            rep.detail("min_grad", NumericResult::empirical(scan.min_grad));
            rep.detail("median_grad", NumericResult::empirical(scan.median_grad));
            rep.seed = Some(seed);
            rep.n = Some(*n);
            rep.assert_that(scan.fraction <= *max_fraction);
        }
        CheckSpec::Santalo { n, integrand, z_max, expected } => {
            let f = FirstCoordinate;
            let res = match integrand {
                Integrand::One => balance(model, domain, |_| 1.0, *n, seed, &opts)?,
                Integrand::PairingSq => balance(
                    model,
                    domain,
                    |fc| {
                        let p = f.horizontal_pairing(model, fc);
                        p * p
                    },
                    *n,
                    seed,
                    &opts,
                )?,
            };
            rep.detail(
                "interior",
                NumericResult::monte_carlo(res.interior.value, res.interior.stderr),
            );
            rep.detail(
                "boundary",
                NumericResult::monte_carlo(res.boundary.value, res.boundary.stderr),
            );
            rep.detail("z", NumericResult::monte_carlo(res.z, 0.0).with_tolerance(*z_max));
            rep.detail(
                "capped_fraction",
                NumericResult::monte_carlo(res.boundary.capped_fraction, 0.0),
            );
            rep.detail(
                "characteristic_fraction",
                NumericResult::monte_carlo(res.boundary.characteristic_fraction, 0.0),
            );
            rep.seed = Some(seed);
            rep.n = Some(*n);
            rep.assert_that(res.z <= *z_max);
            if let Some(exact) = expected {
                rep.detail("expected", NumericResult::analytic(*exact));
                for side in [&res.interior, &res.boundary] {
                    let tol = 4.0 * side.stderr.max(1e-6 * exact.abs());
                    rep.assert_that((side.value - exact).abs() <= tol);
                }
            }
            if chf_hemisphere {
                rep.note(CHF_BOUNDARY_NOTE);
            }
        }
        CheckSpec::Hardy { n, function, equality } => {
            let f = profile(*function, sc)?;
            let h = hardy_check(model, domain, f.as_ref(), *n, seed, &opts)?;
            let sigma_ratio = h.ratio * (h.lhs_stderr / h.lhs + h.rhs_stderr / h.rhs);
            rep.detail("lhs", NumericResult::monte_carlo(h.lhs, h.lhs_stderr));
            rep.detail("rhs", NumericResult::monte_carlo(h.rhs, h.rhs_stderr));
            rep.detail("ratio", NumericResult::monte_carlo(h.ratio, sigma_ratio));
            rep.detail("z", NumericResult::monte_carlo(h.z, 0.0));
            rep.detail("capped_fraction", NumericResult::monte_carlo(h.capped_fraction, 0.0));
            rep.seed = Some(seed);
            rep.n = Some(*n);
            if *equality {
                rep.assert_that((h.ratio - 1.0).abs() <= 3.0 * sigma_ratio + 1e-3);
            } else {
                rep.assert_that(h.ratio >= 1.0 - 3.0 * sigma_ratio);
            }
        }
        CheckSpec::PHardy { n, p, function } => {
            let f = profile(*function, sc)?;
            for &pv in p {
                let ph = p_hardy_check(model, domain, f.as_ref(), pv, *n, seed, &opts)?;
                for (tag, side) in [("chord", &ph.big_r), ("exit", &ph.small_r)] {
                    let sigma = side.ratio * (side.lhs_stderr / side.lhs + side.rhs_stderr / side.rhs);
                    rep.detail(
                        format!("p{pv}_{tag}_ratio"),
                        NumericResult::monte_carlo(side.ratio, sigma),
                    );
                    rep.assert_that(side.ratio >= 1.0 - 3.0 * sigma);
                }
            }
            rep.seed = Some(seed);
            rep.n = Some(*n);
        }
        CheckSpec::Lambda1 { n, exact, l_sup_expected, tolerance } => {
            let res = lambda1_lower_bound(model, domain, *n, seed, &opts)?;
            rep.detail("l_sup", NumericResult::empirical(res.l_sup));
            rep.detail("bound", NumericResult::empirical(res.bound).with_tolerance(*tolerance));
            rep.detail("capped_fraction", NumericResult::monte_carlo(res.capped_fraction, 0.0));
            rep.seed = Some(seed);
            rep.n = Some(*n);
            if let Some(lam) = exact {
                rep.detail("exact", NumericResult::analytic(*lam));
                rep.assert_that(res.bound <= lam * (1.0 + tolerance));
            }
            if let Some(ls) = l_sup_expected {
                rep.assert_that((res.l_sup - ls).abs() <= tolerance * ls.abs().max(1.0));
            }
            if res.capped_fraction > 0.0 {
                rep.note("some chords hit the integration cap; the supremum is heuristic");
            }
        }
        CheckSpec::Isoperimetric { n, equality } => {
            let res = isoperimetric_check(model, domain, *n, seed, &opts)?;
            rep.detail("sigma", NumericResult::monte_carlo(res.sigma, res.sigma_stderr));
            rep.detail(
                "omega_visible",
                NumericResult::monte_carlo(res.omega_visible, res.omega_stderr),
            );
            rep.detail("ratio", NumericResult::monte_carlo(res.ratio, res.ratio_stderr));
            rep.detail("l_sup", NumericResult::empirical(res.l_sup));
            rep.detail("bound", NumericResult::empirical(res.bound));
            rep.detail("z", NumericResult::monte_carlo(res.z, 0.0));
            rep.seed = Some(seed);
            rep.n = Some(*n);
            rep.assert_that(res.z >= -3.0);
            if *equality {
                rep.assert_that(res.z.abs() <= 3.0);
            }
            if chf_hemisphere {
                rep.note(CHF_BOUNDARY_NOTE);
            }
        }
        CheckSpec::Spectral { case, grids, tolerance } => {
            let d = sc.model.param.unwrap_or(1.0) as usize;
            let case = match case {
                SpectralCase::Round => SeparatedCase::Round(d),
                SpectralCase::Chf => SeparatedCase::Chf(d),
                SpectralCase::Qhf => SeparatedCase::Qhf(d),
            };
            let study = eigenvalue_study(case, grids)?;
            let resid = cylindrical_residual(case);
            rep.detail(
                "extrapolated",
                NumericResult::ode(study.extrapolated).with_tolerance(*tolerance),
            );
            rep.detail("exact", NumericResult::analytic(study.exact));
            rep.detail("cylindrical_residual", NumericResult::quadrature(resid));
            for (cells, lam) in &study.per_grid {
                rep.detail(format!("lambda_n{cells}"), NumericResult::ode(*lam));
            }
            rep.assert_that((study.extrapolated - study.exact).abs() <= *tolerance);
            rep.assert_that(resid <= 1e-9);
        }
        CheckSpec::Carnot { n } => {
            if sc.model.id != "heisenberg" {
                return Err(RunError::Config(format!(
                    "carnot check needs the heisenberg model, got `{}`",
                    sc.model.id
                )));
            }
            let d = sc.model.param.unwrap_or(1.0) as usize;
            let cm = CarnotModel::heisenberg(d);
            let res = carnot_bounds(&cm, domain, *n, seed)?;
            rep.detail("diameter", NumericResult::empirical(res.diameter.diameter));
            rep.detail("lambda1_bound", NumericResult::empirical(res.lambda1_bound));
            rep.detail("iso_bound", NumericResult::empirical(res.iso_bound));
            rep.detail(
                "sigma_over_omega",
                NumericResult::monte_carlo(res.sigma_over_omega, res.sigma_over_omega_stderr),
            );
            rep.seed = Some(seed);
            rep.n = Some(*n);
            rep.assert_that(res.iso_inequality_holds);
        }
    }
    Ok(rep)
}

fn summary_line(rep: &CheckReport) -> String {
    let mut parts = Vec::new();
    for (key, nr) in &rep.details {
        match nr.stderr {
            Some(s) if s > 0.0 => parts.push(format!("{key} {}", fmt_pm(nr.value, s))),
            _ => parts.push(format!("{key} {:.6}", nr.value)),
        }
        if parts.len() == 4 {
            break;
        }
    }
    parts.join(", ")
}

/// Run every check in the scenario and assemble the report. Prints one
/// `[PASS]`/`[FAIL]` line per check on stdout.
pub fn run_scenario(
    sc: &Scenario,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<RunReport, RunError> {
    let seed = seed_override.unwrap_or(sc.seed);
    let model = model_by_id(&sc.model.id, sc.model.param)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let domain = build_domain(sc, model.as_ref())?;

    let mut checks = Vec::with_capacity(sc.checks.len());
    let mut wall_time_ms = BTreeMap::new();
    let mut pass = true;
    for (i, spec) in sc.checks.iter().enumerate() {
        let started = Instant::now();
        let rep = run_check(spec, sc, model.as_ref(), domain.as_ref(), seed)?;
        let label = if sc.checks.iter().filter(|c| c.name() == spec.name()).count() > 1 {
            format!("{}_{}", spec.name(), i)
        } else {
            spec.name().to_string()
        };
        wall_time_ms.insert(label, started.elapsed().as_millis() as u64);
        println!(
            "[{}] {}: {}",
            if rep.pass { "PASS" } else { "FAIL" },
            rep.name,
            summary_line(&rep)
        );
        pass &= rep.pass;
        checks.push(rep);
    }

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: sc.name.clone(),
        model: display_id(&sc.model.id, sc.model.param),
        domain: display_id(&sc.domain.id, sc.domain.param),
        seed,
        pass,
        checks,
        environment: Environment::capture(threads),
        wall_time_ms,
        generated_at_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    })
}
