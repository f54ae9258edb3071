//! A band around the equator of S² with the rank-1 meridian distribution.
//!
//! Chart coordinates (θ, φ): polar angle θ ∈ (0, π) and longitude φ. The
//! distribution is D = span{∂_θ} with the round metric dθ² restricted to it,
//! so horizontal (reduced) geodesics run along meridians at unit speed and a
//! band of half-width ε has chord length 2ε for every reduced covector. D is
//! not bracket-generating — the flow/reduction machinery applies regardless.
//!
//! The vertical extension is the flat one: Z = ∂_φ with ω = dθ ∧ dφ. All
//! structural functions then vanish, so both reduction hypotheses hold
//! exactly. (With the round extension Z = ∂_φ/sin θ the reduced Liouville
//! volume is not flow-invariant off the equator; the horizontal geometry —
//! hence every length and bound computed here — is identical either way.)

use super::{
    chart_covector_from_state, chart_flow_rhs, chart_state_from_covector, BracketTensors,
    FrameCovector, Model, ReductionClass,
};
use nalgebra::DVector;

/// Spherical band model of half-width ε about the equator θ = π/2.
#[derive(Debug, Clone, Copy)]
pub struct BandModel {
    eps: f64,
}

impl BandModel {
    /// Build the band model; ε ∈ (0, 1) is stored for the domain helpers.
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0 && eps < 1.0);
        Self { eps }
    }

    /// Half-width ε.
    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Model for BandModel {
    fn id(&self) -> String {
        format!("spherical-band({})", self.eps)
    }

    fn chart_dim(&self) -> usize {
        2
    }

    fn manifold_dim(&self) -> usize {
        2
    }

    fn rank(&self) -> usize {
        1
    }

    fn in_chart(&self, q: &DVector<f64>) -> bool {
        q[0] > 0.05 && q[0] < std::f64::consts::PI - 0.05
    }

    fn horizontal_frame(&self, _q: &DVector<f64>) -> Vec<DVector<f64>> {
        vec![DVector::from_vec(vec![1.0, 0.0])]
    }

    fn vertical_frame(&self, _q: &DVector<f64>) -> Vec<DVector<f64>> {
        vec![DVector::from_vec(vec![0.0, 1.0])]
    }

    fn bracket_tensors(&self, _q: &DVector<f64>) -> BracketTensors {
        BracketTensors::zeros(1, 1)
    }

    fn reduction_class(&self) -> ReductionClass {
        ReductionClass::Foliation
    }

    /// Meridian geodesics are great circles of the underlying sphere, so the
    /// cut length is π.
    fn cut_length(&self, _fc: &FrameCovector) -> Option<f64> {
        Some(std::f64::consts::PI)
    }

    fn state_dim(&self) -> usize {
        4
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
        0.5 * s[2] * s[2]
    }

    fn state_vertical_norm(&self, s: &DVector<f64>) -> f64 {
        s[3].abs()
    }
}
