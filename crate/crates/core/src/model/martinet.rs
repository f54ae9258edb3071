//! The Martinet structure on ℝ³: X₁ = ∂_x, X₂ = ∂_y + x²/2 ∂_z.
//!
//! The only nonzero bracket is [X₁, X₂] = x ∂_z, so the distribution is
//! bracket-generating away from {x = 0} at step 2 and everywhere at step 3.
//! The vertical extension is the unit field Z = ∂_z and ω is Lebesgue
//! measure. Since [X_i, Z] = 0, the z-line foliation is totally geodesic and
//! both reduction hypotheses hold exactly.

use super::{
    chart_covector_from_state, chart_flow_rhs, chart_state_from_covector, BracketTensors,
    FrameCovector, Model, ReductionClass,
};
use nalgebra::DVector;

/// The Martinet model (global chart on ℝ³, rank 2).
#[derive(Debug, Clone, Copy)]
pub struct MartinetModel;

impl Model for MartinetModel {
    fn id(&self) -> String {
        "martinet".into()
    }

    fn chart_dim(&self) -> usize {
        3
    }

    fn manifold_dim(&self) -> usize {
        3
    }

    fn rank(&self) -> usize {
        2
    }

    fn horizontal_frame(&self, q: &DVector<f64>) -> Vec<DVector<f64>> {
        vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, q[0] * q[0] / 2.0]),
        ]
    }

    fn vertical_frame(&self, _q: &DVector<f64>) -> Vec<DVector<f64>> {
        vec![DVector::from_vec(vec![0.0, 0.0, 1.0])]
    }

    fn bracket_tensors(&self, q: &DVector<f64>) -> BracketTensors {
        let mut bt = BracketTensors::zeros(2, 1);
        // [X₁, X₂] = x ∂_z = x Z.
        bt.c.set(0, 1, 0, q[0]);
        bt.c.set(1, 0, 0, -q[0]);
        bt
    }

    fn reduction_class(&self) -> ReductionClass {
        ReductionClass::Foliation
    }

    fn state_dim(&self) -> usize {
        6
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
        0.5 * (s[3] * s[3] + s[4] * s[4])
    }

    fn state_vertical_norm(&self, s: &DVector<f64>) -> f64 {
        s[5].abs()
    }
}
