//! Hamiltonian flow integration: embedded Runge–Kutta 5(4) with dense
//! output, geodesic traces, and first-exit detection against a domain.
//!
//! The integrator is the classic Dormand–Prince 5(4) pair with the standard
//! quartic interpolant, first-same-as-last evaluation reuse, and PI-free
//! step-size control. Sphere-embedded models are reprojected onto their
//! constraint set after every accepted step; conservation drift is monitored
//! on the fly.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::model::{state_position, FrameCovector, Model};
use nalgebra::DVector;
use std::io::Write;

// Dormand–Prince 5(4) tableau (the Hamiltonian fields are autonomous, so
// the stage abscissae are not needed).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrator options.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute tolerance.
    pub atol: f64,
    /// Maximum step size (0 means one tenth of the horizon).
    pub h_max: f64,
    /// Maximum accepted + rejected steps.
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-11, h_max: 0.0, max_steps: 1_000_000 }
    }
}

/// One accepted step's interpolant coefficients.
#[derive(Debug, Clone)]
struct DenseSegment {
    t0: f64,
    h: f64,
    rcont: [DVector<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> DVector<f64> {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        &self.rcont[0]
            + (&self.rcont[1] + (&self.rcont[2] + (&self.rcont[3] + &self.rcont[4] * th1) * theta) * th1)
                * theta
    }
}

/// A numerically integrated geodesic with dense output.
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    /// Accepted step times, starting at 0.
    pub times: Vec<f64>,
    /// States at the accepted times.
    pub states: Vec<DVector<f64>>,
    segments: Vec<DenseSegment>,
    /// Max |H − H(0)| over accepted states.
    pub h_drift: f64,
    /// Max vertical norm over accepted states.
    pub v_drift: f64,
    /// Total accepted steps.
    pub accepted: usize,
    /// Total rejected steps.
    pub rejected: usize,
}

impl GeodesicTrace {
    /// Final time reached.
    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// State at time t ∈ [0, t_end] by dense interpolation.
    pub fn state_at(&self, t: f64) -> DVector<f64> {
        if self.segments.is_empty() || t <= 0.0 {
            return self.states[0].clone();
        }
        if t >= self.t_end() {
            return self.states.last().unwrap().clone();
        }
        let idx = match self
            .segments
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.segments[idx].eval(t)
    }

    /// Write the trace as CSV: `t, q_1..q_n, u_1..u_k, v_1..v_m, H`.
    pub fn write_csv<W: Write>(&self, model: &dyn Model, out: &mut W) -> std::io::Result<()> {
        let (n, k, m) = (model.chart_dim(), model.rank(), model.corank());
        write!(out, "t")?;
        for i in 1..=n {
            write!(out, ",q_{i}")?;
        }
        for i in 1..=k {
            write!(out, ",u_{i}")?;
        }
        for j in 1..=m {
            write!(out, ",v_{j}")?;
        }
        writeln!(out, ",H")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let fc = model.covector_from_state(s);
            write!(out, "{t:.12e}")?;
            for x in fc.q.iter().chain(fc.u.iter()).chain(fc.v.iter()) {
                write!(out, ",{x:.12e}")?;
            }
            writeln!(out, ",{:.12e}", model.state_hamiltonian(s))?;
        }
        Ok(())
    }
}

/// Integrate the Hamiltonian flow from `state0` for time `t_end` > 0.
pub fn integrate_state(
    model: &dyn Model,
    state0: DVector<f64>,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<GeodesicTrace> {
    integrate_until(model, state0, t_end, opts, |_, _| false).map(|(tr, _)| tr)
}

/// Integrate a covector's geodesic for time `t_end`.
pub fn integrate_geodesic(
    model: &dyn Model,
    fc: &FrameCovector,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<GeodesicTrace> {
    integrate_state(model, model.state_from_covector(fc), t_end, opts)
}

/// Core loop: integrate until `t_end` or until `stop(t, state)` returns true
/// at an accepted step endpoint; reports whether the stop fired.
fn integrate_until(
    model: &dyn Model,
    mut y: DVector<f64>,
    t_end: f64,
    opts: &FlowOptions,
    mut stop: impl FnMut(f64, &DVector<f64>) -> bool,
) -> Result<(GeodesicTrace, bool)> {
    if !(t_end > 0.0) {
        return Err(Error::Precondition(format!("integration horizon must be positive, got {t_end}")));
    }
    let dim = y.len();
    let h_max = if opts.h_max > 0.0 { opts.h_max } else { t_end / 10.0 };
    model.normalize_state(&mut y);
    let h0 = model.state_hamiltonian(&y);

    let mut trace = GeodesicTrace {
        times: vec![0.0],
        states: vec![y.clone()],
        segments: Vec::new(),
        h_drift: 0.0,
        v_drift: model.state_vertical_norm(&y),
        accepted: 0,
        rejected: 0,
    };

    let mut k: Vec<DVector<f64>> = (0..7).map(|_| DVector::zeros(dim)).collect();
    let rhs = |s: &DVector<f64>, out: &mut DVector<f64>| model.flow_rhs(s, out);
    let mut k1 = DVector::zeros(dim);
    rhs(&y, &mut k1);
    k[0] = k1;

    let mut t = 0.0;
    let mut h = (1e-3 * t_end).min(h_max);
    let mut stopped = false;

    for _ in 0..opts.max_steps {
        if t >= t_end || stopped {
            break;
        }
        if t + h > t_end {
            h = t_end - t;
        }
        // Stage evaluations (k1 is fresh from FSAL or initialization).
        let y2 = &y + &k[0] * (A21 * h);
        rhs(&y2, &mut k[1]);
        let y3 = &y + (&k[0] * A31 + &k[1] * A32) * h;
        rhs(&y3, &mut k[2]);
        let y4 = &y + (&k[0] * A41 + &k[1] * A42 + &k[2] * A43) * h;
        rhs(&y4, &mut k[3]);
        let y5 = &y + (&k[0] * A51 + &k[1] * A52 + &k[2] * A53 + &k[3] * A54) * h;
        rhs(&y5, &mut k[4]);
        let y6 = &y + (&k[0] * A61 + &k[1] * A62 + &k[2] * A63 + &k[3] * A64 + &k[4] * A65) * h;
        rhs(&y6, &mut k[5]);
        let ynew = &y + (&k[0] * B1 + &k[2] * B3 + &k[3] * B4 + &k[4] * B5 + &k[5] * B6) * h;
        rhs(&ynew, &mut k[6]);

        // Embedded error estimate.
        let errv =
            (&k[0] * E1 + &k[2] * E3 + &k[3] * E4 + &k[4] * E5 + &k[5] * E6 + &k[6] * E7) * h;
        let mut err = 0.0;
        for i in 0..dim {
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            let r = errv[i] / sc;
            err += r * r;
        }
        err = (err / dim as f64).sqrt();

        if err <= 1.0 {
            // Dense output coefficients.
            let ydiff = &ynew - &y;
            let bspl = &k[0] * h - &ydiff;
            let rcont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                &ydiff - &k[6] * h - &bspl,
                (&k[0] * D1 + &k[2] * D3 + &k[3] * D4 + &k[4] * D5 + &k[5] * D6 + &k[6] * D7) * h,
            ];
            trace.segments.push(DenseSegment { t0: t, h, rcont });

            t += h;
            y = ynew;
            model.normalize_state(&mut y);
            rhs(&y, &mut k[6]);
            k.swap(0, 6); // FSAL

            trace.h_drift = trace.h_drift.max((model.state_hamiltonian(&y) - h0).abs());
            trace.v_drift = trace.v_drift.max(model.state_vertical_norm(&y));
            trace.times.push(t);
            trace.states.push(y.clone());
            trace.accepted += 1;
            if stop(t, &y) {
                stopped = true;
            }
        } else {
            trace.rejected += 1;
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h = (h * factor).min(h_max);
        if !h.is_finite() || h < 1e-15 * t_end.max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t:.6e}")));
        }
    }
    if t < t_end && !stopped {
        return Err(Error::Integration(format!(
            "step budget exhausted at t = {t:.6e} of {t_end:.6e}"
        )));
    }
    Ok((trace, stopped))
}

/// Result of integrating a geodesic to its first boundary exit.
#[derive(Debug, Clone)]
pub struct ExitTrace {
    /// The trace, whose final state sits on the exit point (or at the cap).
    pub trace: GeodesicTrace,
    /// Exit length ℓ (equals the cap time when `capped`).
    pub length: f64,
    /// True when no exit was found before the time cap.
    pub capped: bool,
    /// True when the exit was detected inside a step that re-entered
    /// (a grazing contact resolved to its first crossing).
    pub grazing: bool,
}

/// Integrate the geodesic of `fc` until it leaves `domain`, refining the
/// crossing on the dense interpolant.
///
/// Starts on the boundary are armed once U rises above a small band; a
/// trajectory that never leaves the band (a tangential start) runs to the
/// cap and is reported as capped. Interior dips below zero inside a single
/// step are caught by probing the interpolant.
pub fn exit_trace(
    model: &dyn Model,
    domain: &dyn Domain,
    fc: &FrameCovector,
    t_cap: f64,
    opts: &FlowOptions,
) -> Result<ExitTrace> {
    let band = 1e-9 * (1.0 + domain.length_scale());
    let u_of = |s: &DVector<f64>| domain.defining_fn(&state_position(model, s));

    let state0 = model.state_from_covector(fc);
    let u_start = u_of(&state0);
    if u_start < -band {
        return Err(Error::Precondition(format!(
            "exit_trace: start is outside the domain (U = {u_start:.3e})"
        )));
    }
    let mut armed = u_start > band;
    let stop = move |_t: f64, s: &DVector<f64>| {
        let u = u_of(s);
        if u > band {
            armed = true;
            false
        } else {
            (armed && u <= 0.0) || u < -band
        }
    };
    let (mut trace, stopped) = integrate_until(model, state0, t_cap, opts, stop)?;

    // Scan accepted segments for the first crossing, probing interior points
    // of each interpolant for grazing dips. Skip until U has left the band.
    let probes = 8;
    let mut armed_scan = u_start > band;
    let mut crossing: Option<(usize, f64, f64, bool)> = None; // (seg, t_lo, t_hi, grazing)
    'outer: for (si, seg) in trace.segments.iter().enumerate() {
        let mut t_prev = seg.t0;
        let mut u_prev = u_of(&seg.eval(t_prev));
        for p in 1..=probes {
            let tt = seg.t0 + seg.h * p as f64 / probes as f64;
            let u = u_of(&seg.eval(tt));
            if armed_scan && u_prev > 0.0 && u <= 0.0 {
                // A dip that re-enters before the end of the step would have
                // been missed by the endpoint stop alone.
                let grazing = p < probes && u_of(&seg.eval(seg.t0 + seg.h)) > 0.0;
                crossing = Some((si, t_prev, tt, grazing));
                break 'outer;
            }
            if u > band {
                armed_scan = true;
            }
            t_prev = tt;
            u_prev = u;
        }
    }

    let Some((si, mut lo, mut hi, grazing)) = crossing else {
        if stopped {
            // The stop fired but the scan saw no arming crossing: a boundary
            // start drifting outward through the band. Refine to the first
            // time the band is left (≈ 0 for a strictly outward start).
            let mut t_exit = trace.t_end();
            'fall: for (si, seg) in trace.segments.iter().enumerate() {
                let mut t_prev = seg.t0;
                for p in 1..=probes {
                    let tt = seg.t0 + seg.h * p as f64 / probes as f64;
                    if u_of(&seg.eval(tt)) < -band {
                        let (mut lo, mut hi) = (t_prev, tt);
                        for _ in 0..80 {
                            let mid = 0.5 * (lo + hi);
                            if u_of(&seg.eval(mid)) >= -band {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                            if hi - lo < 1e-15 * (1.0 + hi) {
                                break;
                            }
                        }
                        t_exit = 0.5 * (lo + hi);
                        let exit_state = seg.eval(t_exit);
                        let keep = trace.times.iter().take_while(|&&t| t < t_exit).count();
                        trace.times.truncate(keep);
                        trace.states.truncate(keep);
                        trace.segments.truncate(si + 1);
                        trace.times.push(t_exit);
                        trace.states.push(exit_state);
                        break 'fall;
                    }
                    t_prev = tt;
                }
            }
            return Ok(ExitTrace { trace, length: t_exit, capped: false, grazing: false });
        }
        let length = trace.t_end();
        return Ok(ExitTrace { trace, length, capped: true, grazing: false });
    };

    // Bisection on the interpolant to the crossing time.
    let seg = &trace.segments[si];
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if u_of(&seg.eval(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi) {
            break;
        }
    }
    let t_exit = 0.5 * (lo + hi);
    let exit_state = seg.eval(t_exit);

    // Truncate the trace at the exit.
    let keep = trace.times.iter().take_while(|&&t| t < t_exit).count();
    trace.times.truncate(keep);
    trace.states.truncate(keep);
    trace.segments.truncate(si + 1);
    trace.times.push(t_exit);
    trace.states.push(exit_state);

    Ok(ExitTrace { trace, length: t_exit, capped: false, grazing })
}

/// Exit data of a unit covector in both directions.
#[derive(Debug, Clone)]
pub struct ChordData {
    /// Forward exit length ℓ(λ).
    pub l_fwd: f64,
    /// Backward exit length ℓ(−λ).
    pub l_bwd: f64,
    /// Forward run hit the time cap.
    pub fwd_capped: bool,
    /// Backward run hit the time cap.
    pub bwd_capped: bool,
    /// Analytic cut length, when the model knows it.
    pub cut: Option<f64>,
}

impl ChordData {
    /// Chord length L = ℓ(λ) + ℓ(−λ).
    pub fn chord(&self) -> f64 {
        self.l_fwd + self.l_bwd
    }

    /// Whether either direction was capped.
    pub fn capped(&self) -> bool {
        self.fwd_capped || self.bwd_capped
    }

    /// Reduced length ℓ̃ = min(ℓ, cut) in the forward direction.
    pub fn l_tilde_fwd(&self) -> f64 {
        match self.cut {
            Some(c) => self.l_fwd.min(c),
            None => self.l_fwd,
        }
    }

    /// Reduced chord L̃ = ℓ̃(λ) + ℓ̃(−λ).
    pub fn chord_tilde(&self) -> f64 {
        let l1 = self.l_tilde_fwd();
        let l2 = match self.cut {
            Some(c) => self.l_bwd.min(c),
            None => self.l_bwd,
        };
        l1 + l2
    }
}

/// Exit lengths of `fc` and its reversal, without retaining traces.
pub fn chord_data(
    model: &dyn Model,
    domain: &dyn Domain,
    fc: &FrameCovector,
    t_cap: f64,
    opts: &FlowOptions,
) -> Result<ChordData> {
    let fwd = exit_trace(model, domain, fc, t_cap, opts)?;
    let bwd = exit_trace(model, domain, &fc.reversed(), t_cap, opts)?;
    Ok(ChordData {
        l_fwd: fwd.length,
        l_bwd: bwd.length,
        fwd_capped: fwd.capped,
        bwd_capped: bwd.capped,
        cut: model.cut_length(fc),
    })
}
