//! Solved-trajectory container: polynomial reconstruction of states and
//! controls at arbitrary times, dense sampling for export, and the
//! continuous-time defect metric.

use super::DynamicsFn;
use crate::collocation::{barycentric_interpolate, diff_matrix_full, CollocationScheme};
use crate::error::{Error, Result};
use crate::manifolds::ManifoldChart;
use crate::scalar::{lift, Dual};
use std::sync::Arc;

/// One knot segment: ambient base state plus tangent deviant samples at the
/// state support points and control samples at the control support points.
pub struct TrajectorySegment {
    pub base: Vec<f64>,
    /// (d+1) rows; row 0 is identically zero (deviant at the segment start).
    pub deviants: Vec<Vec<f64>>,
    /// (du+1) rows; row 0 is the knot control.
    pub controls: Vec<Vec<f64>>,
}

pub struct TrajectoryPhase {
    pub t_start: f64,
    pub duration: f64,
    pub control_dim: usize,
    pub segments: Vec<TrajectorySegment>,
    pub state_scheme: Arc<CollocationScheme>,
    pub control_scheme: Arc<CollocationScheme>,
    pub dynamics: DynamicsFn,
}

pub struct Trajectory {
    pub chart: ManifoldChart,
    pub phases: Vec<TrajectoryPhase>,
}

impl TrajectoryPhase {
    fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    /// Segment-local evaluation at τ ∈ [0, 1].
    pub(crate) fn eval_segment(
        &self,
        chart: &ManifoldChart,
        k: usize,
        tau: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let seg = &self.segments[k];
        let dev = barycentric_interpolate(
            &self.state_scheme.support,
            &self.state_scheme.bary_weights,
            &seg.deviants,
            tau,
        )
        .expect("state interpolation on a fixed support");
        let state = chart
            .exp(&seg.base, &dev)
            .expect("reconstruction state on fixed chart");
        let control = if self.control_dim > 0 {
            barycentric_interpolate(
                &self.control_scheme.support,
                &self.control_scheme.bary_weights,
                &seg.controls,
                tau,
            )
            .expect("control interpolation on a fixed support")
        } else {
            Vec::new()
        };
        (state, control)
    }
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.phases.first().map_or(0.0, |p| p.t_start)
    }

    pub fn t_end(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.t_end())
    }

    /// State and control at time t. Right-continuous at phase boundaries:
    /// the boundary instant evaluates on the jump-map image side.
    pub fn reconstruct(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (t0, tf) = (self.t_start(), self.t_end());
        if t < t0 - 1e-9 || t > tf + 1e-9 {
            return Err(Error::Domain {
                reason: format!("time {t} outside trajectory span [{t0}, {tf}]"),
            });
        }
        let t = t.clamp(t0, tf);
        let p = self
            .phases
            .iter()
            .rposition(|ph| t >= ph.t_start)
            .unwrap_or(0);
        let phase = &self.phases[p];
        let n_seg = phase.segments.len();
        let local = ((t - phase.t_start) / phase.duration).clamp(0.0, 1.0) * n_seg as f64;
        // At an interior knot the floor lands on the opening segment at τ = 0
        // (the continuity-correct value); at the phase end it clamps to the
        // last segment at τ = 1.
        let k = (local.floor() as usize).min(n_seg - 1);
        let tau = local - k as f64;
        Ok(phase.eval_segment(&self.chart, k, tau))
    }

    /// Dense rows for export: per segment `samples_per_segment` points at
    /// τ = i/K for i < K, plus the phase-end state evaluated from the last
    /// segment's own polynomial (the pre-jump left limit).
    pub fn sample(&self, samples_per_segment: usize) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        let k_per = samples_per_segment.max(1);
        let mut rows = Vec::new();
        for phase in &self.phases {
            let n_seg = phase.segments.len();
            let h = phase.duration / n_seg as f64;
            for k in 0..n_seg {
                for i in 0..k_per {
                    let tau = i as f64 / k_per as f64;
                    let t = phase.t_start + (k as f64 + tau) * h;
                    let (x, u) = phase.eval_segment(&self.chart, k, tau);
                    rows.push((t, x, u));
                }
            }
            let (x, u) = phase.eval_segment(&self.chart, n_seg - 1, 1.0);
            rows.push((phase.t_end(), x, u));
        }
        rows
    }

    /// Pre-jump (left) and post-jump (right) states at each phase boundary.
    pub fn phase_boundary_states(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut pairs = Vec::new();
        for w in self.phases.windows(2) {
            let left = w[0]
                .eval_segment(&self.chart, w[0].segments.len() - 1, 1.0)
                .0;
            let right = w[1].eval_segment(&self.chart, 0, 0.0).0;
            pairs.push((left, right));
        }
        pairs
    }

    /// Max-norm dynamics residual ‖x̃'(τ)/h − f(x(τ), u(τ))‖∞ over a dense
    /// τ grid in every segment; the headline continuous-time feasibility
    /// metric. The deviant derivative comes from differentiating the
    /// barycentric interpolant exactly.
    pub fn defect_norm(&self, samples_per_segment: usize) -> f64 {
        let grid = samples_per_segment.max(2);
        let mut worst = 0.0_f64;
        for phase in &self.phases {
            let n_seg = phase.segments.len();
            let h = phase.duration / n_seg as f64;
            let full = diff_matrix_full(&phase.state_scheme.support)
                .expect("differentiation matrix on a fixed support");
            let nt = self.chart.tangent_dim();
            let mut rate = vec![Dual::constant(0.0); nt];
            for k in 0..n_seg {
                let seg = &phase.segments[k];
                let deriv = crate::collocation::derivative_samples(&full, &seg.deviants);
                for i in 0..=grid {
                    let tau = i as f64 / grid as f64;
                    let (state, control) = phase.eval_segment(&self.chart, k, tau);
                    let ddev = barycentric_interpolate(
                        &phase.state_scheme.support,
                        &phase.state_scheme.bary_weights,
                        &deriv,
                        tau,
                    )
                    .expect("derivative interpolation on a fixed support");
                    let state_d = lift(&state);
                    let control_d = lift(&control);
                    for v in rate.iter_mut() {
                        *v = Dual::constant(0.0);
                    }
                    (phase.dynamics)(&state_d, &control_d, &mut rate);
                    for r in 0..nt {
                        worst = worst.max((ddev[r] / h - rate[r].re).abs());
                    }
                }
            }
        }
        worst
    }
}
