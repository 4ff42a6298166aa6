//! Direct transcription of multi-phase Bolza problems into sparse NLPs.
//!
//! Each phase is split into knot segments carrying one Radau collocation
//! polynomial. States are parameterized locally: every segment stores tangent
//! deviants relative to its own base knot state, and knot states themselves
//! are deviants around fixed reference states taken from the initial guess.
//! All decision variables are therefore tangent-sized, and group-valued
//! states (quaternions, poses) stay on their manifold by construction — no
//! normalization constraints appear in the NLP.

pub mod trajectory;

pub use trajectory::{Trajectory, TrajectoryPhase, TrajectorySegment};

use crate::collocation::{barycentric_interpolate, CollocationScheme, SchemeCache};
use crate::error::{Error, Result};
use crate::manifolds::ManifoldChart;
use crate::nlp::{ConstraintBlock, NlpProblem, ObjectiveBlock};
use crate::scalar::{lift, Dual};
use std::ops::Range;
use std::sync::Arc;

/// Dynamics callback: (ambient state, control) → tangent-rate (units 1/s).
pub type DynamicsFn = Arc<dyn Fn(&[Dual], &[Dual], &mut [Dual]) + Send + Sync>;
/// Running cost integrand: (ambient state, control) → scalar.
pub type RunningCostFn = Arc<dyn Fn(&[Dual], &[Dual]) -> Dual + Send + Sync>;
/// Terminal cost: ambient state → scalar.
pub type TerminalCostFn = Arc<dyn Fn(&[Dual]) -> Dual + Send + Sync>;
/// Boundary residual: (initial state, final state) → residual vector.
pub type BoundaryFn = Arc<dyn Fn(&[Dual], &[Dual], &mut [Dual]) + Send + Sync>;
/// Jump map: ambient state at a phase end → ambient state opening the next.
pub type JumpFn = Arc<dyn Fn(&[Dual], &mut [Dual]) + Send + Sync>;
/// Path constraint: (ambient state, control) → constrained vector.
pub type PathFn = Arc<dyn Fn(&[Dual], &[Dual], &mut [Dual]) + Send + Sync>;
/// Initial-guess hook: global time → (ambient state, control).
pub type GuessFn = Arc<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// Bounded path constraint evaluated at every collocation node.
#[derive(Clone)]
pub struct PathConstraintSpec {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eval: PathFn,
}

/// One phase of the problem: dynamics, cost, and mesh parameters.
#[derive(Clone)]
pub struct PhaseSpec {
    pub dynamics: DynamicsFn,
    pub running_cost: Option<RunningCostFn>,
    pub path_constraints: Option<PathConstraintSpec>,
    /// Fixed phase duration in seconds.
    pub duration: f64,
    /// Knot segments N.
    pub segments: usize,
    /// State polynomial degree (collocation nodes per segment).
    pub state_degree: usize,
    /// Control polynomial degree.
    pub control_degree: usize,
    pub control_dim: usize,
}

/// Equality residual tying the trajectory endpoints, b(x(t0), x(tf)) = 0.
#[derive(Clone)]
pub struct BoundaryConstraintSpec {
    pub dim: usize,
    pub eval: BoundaryFn,
}

/// Multi-phase Bolza problem over a manifold chart.
#[derive(Clone)]
pub struct ProblemSpec {
    pub chart: ManifoldChart,
    pub phases: Vec<PhaseSpec>,
    pub terminal_cost: Option<TerminalCostFn>,
    pub boundary: Option<BoundaryConstraintSpec>,
    /// One map per phase transition; length = phases − 1.
    pub jump_maps: Vec<JumpFn>,
    /// Ambient state opening phase 0; pinned by the transcription.
    pub start_state: Vec<f64>,
    /// Ambient state the default initial guess interpolates toward.
    pub goal_state: Option<Vec<f64>>,
    /// Overrides the default guess when present.
    pub initial_guess: Option<GuessFn>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::Construction {
                phase: None,
                reason: "problem has no phases".into(),
            });
        }
        if self.jump_maps.len() + 1 != self.phases.len() {
            return Err(Error::Construction {
                phase: None,
                reason: format!(
                    "{} phases require {} jump maps, got {}",
                    self.phases.len(),
                    self.phases.len() - 1,
                    self.jump_maps.len()
                ),
            });
        }
        let amb = self.chart.ambient_dim();
        if self.start_state.len() != amb {
            return Err(Error::Construction {
                phase: None,
                reason: format!(
                    "start state has {} components, chart ambient dimension is {amb}",
                    self.start_state.len()
                ),
            });
        }
        self.chart.check_membership(&self.start_state, 1e-9)?;
        if let Some(goal) = &self.goal_state {
            if goal.len() != amb {
                return Err(Error::Construction {
                    phase: None,
                    reason: format!(
                        "goal state has {} components, chart ambient dimension is {amb}",
                        goal.len()
                    ),
                });
            }
            self.chart.check_membership(goal, 1e-9)?;
        }
        for (p, ph) in self.phases.iter().enumerate() {
            let fail = |reason: String| Error::Construction {
                phase: Some(p),
                reason,
            };
            if !(ph.duration > 0.0) {
                return Err(fail(format!("duration {} must be positive", ph.duration)));
            }
            if ph.segments == 0 {
                return Err(fail("segment count must be at least 1".into()));
            }
            if ph.state_degree == 0 || ph.control_degree == 0 {
                return Err(fail("polynomial degrees must be at least 1".into()));
            }
            if let Some(path) = &ph.path_constraints {
                if path.lower.len() != path.dim || path.upper.len() != path.dim {
                    return Err(fail(format!(
                        "path constraint bounds must both have {} entries",
                        path.dim
                    )));
                }
                for i in 0..path.dim {
                    if path.lower[i] > path.upper[i] {
                        return Err(fail(format!("path bound {i} has lower above upper")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Σ_p ( N_p·(n_x̃·d_x̃ + n_u·d_u) + (N_p+1)·(n_x̃ + n_u) ): collocation
/// deviants and controls per segment plus knot deviants and knot controls.
pub fn count_decision_variables(spec: &ProblemSpec) -> usize {
    let nt = spec.chart.tangent_dim();
    spec.phases
        .iter()
        .map(|ph| {
            ph.segments * (nt * ph.state_degree + ph.control_dim * ph.control_degree)
                + (ph.segments + 1) * (nt + ph.control_dim)
        })
        .sum()
}

/// Σ_p ( n_x̃ + N_p·(n_x̃·d_x̃ + n_x̃ + n_u) ): per phase one tangent-sized
/// pinning block (initial condition or jump map), then per segment the
/// collocation rows, knot continuity, and control knot matching. Boundary
/// residual rows, when a boundary constraint is present, come on top.
pub fn count_equality_constraints(spec: &ProblemSpec) -> usize {
    let nt = spec.chart.tangent_dim();
    spec.phases
        .iter()
        .map(|ph| nt + ph.segments * (nt * ph.state_degree + nt + ph.control_dim))
        .sum()
}

#[derive(Clone, Copy, Debug)]
pub struct TranscriptionInfo {
    pub n_vars: usize,
    pub n_eq: usize,
    pub n_ineq: usize,
    /// Unit-norm rows added by the normalization baseline (0 for tangent).
    pub normalization_rows: usize,
}

/// Variable layout of one phase. Order: knot deviants, knot controls, then
/// per segment its collocation deviants followed by collocation controls.
#[derive(Clone, Copy, Debug)]
struct PhaseLayout {
    base: usize,
    nt: usize,
    nu: usize,
    d: usize,
    du: usize,
    segments: usize,
}

impl PhaseLayout {
    fn knot_ctrl_base(&self) -> usize {
        self.base + (self.segments + 1) * self.nt
    }
    fn seg_base(&self) -> usize {
        self.knot_ctrl_base() + (self.segments + 1) * self.nu
    }
    fn seg_stride(&self) -> usize {
        self.d * self.nt + self.du * self.nu
    }
    fn kappa(&self, k: usize) -> Range<usize> {
        let s = self.base + k * self.nt;
        s..s + self.nt
    }
    fn mu(&self, k: usize) -> Range<usize> {
        let s = self.knot_ctrl_base() + k * self.nu;
        s..s + self.nu
    }
    /// Collocation deviant j ∈ 1..=d of segment k.
    fn xdev(&self, k: usize, j: usize) -> Range<usize> {
        let s = self.seg_base() + k * self.seg_stride() + (j - 1) * self.nt;
        s..s + self.nt
    }
    /// Collocation control j ∈ 1..=du of segment k.
    fn ctrl(&self, k: usize, j: usize) -> Range<usize> {
        let s = self.seg_base() + k * self.seg_stride() + self.d * self.nt + (j - 1) * self.nu;
        s..s + self.nu
    }
    fn end(&self) -> usize {
        self.seg_base() + self.segments * self.seg_stride()
    }
}

struct PhaseData {
    layout: PhaseLayout,
    /// Fixed ambient reference state per knot, length segments + 1.
    refs: Vec<Vec<f64>>,
    state_scheme: Arc<CollocationScheme>,
    control_scheme: Arc<CollocationScheme>,
    dynamics: DynamicsFn,
    duration: f64,
    t_start: f64,
}

/// Transcribed problem: the NLP plus everything needed to seed and decode it.
pub struct Transcription {
    pub nlp: NlpProblem,
    pub info: TranscriptionInfo,
    chart: ManifoldChart,
    phases: Vec<PhaseData>,
    z0: Vec<f64>,
}

impl Transcription {
    /// Default initial decision vector: zero knot deviants, collocation
    /// deviants tracking the reference path, controls from the guess hook
    /// (zero without one).
    pub fn initial_vector(&self) -> Vec<f64> {
        self.z0.clone()
    }

    pub fn sparsity_report(&self) -> serde_json::Value {
        self.nlp.sparsity_report()
    }

    /// Decode a decision vector into a sampled trajectory.
    pub fn trajectory(&self, z: &[f64]) -> Result<Trajectory> {
        if z.len() != self.nlp.n_vars {
            return Err(Error::DimensionMismatch {
                context: "trajectory decision vector",
                expected: self.nlp.n_vars,
                got: z.len(),
            });
        }
        let mut phases = Vec::with_capacity(self.phases.len());
        for pd in &self.phases {
            let lay = &pd.layout;
            let mut segments = Vec::with_capacity(lay.segments);
            for k in 0..lay.segments {
                let kappa = &z[lay.kappa(k)];
                let base = self.chart.exp(&pd.refs[k], kappa)?;
                let mut deviants = Vec::with_capacity(lay.d + 1);
                deviants.push(vec![0.0; lay.nt]);
                for j in 1..=lay.d {
                    deviants.push(z[lay.xdev(k, j)].to_vec());
                }
                let mut controls = Vec::with_capacity(lay.du + 1);
                controls.push(z[lay.mu(k)].to_vec());
                for j in 1..=lay.du {
                    controls.push(z[lay.ctrl(k, j)].to_vec());
                }
                segments.push(TrajectorySegment {
                    base,
                    deviants,
                    controls,
                });
            }
            phases.push(TrajectoryPhase {
                t_start: pd.t_start,
                duration: pd.duration,
                control_dim: lay.nu,
                segments,
                state_scheme: pd.state_scheme.clone(),
                control_scheme: pd.control_scheme.clone(),
                dynamics: pd.dynamics.clone(),
            });
        }
        Ok(Trajectory {
            chart: self.chart.clone(),
            phases,
        })
    }
}

/// Tangent-space transcription (the default variant).
pub fn transcribe(spec: &ProblemSpec, cache: &mut SchemeCache) -> Result<Transcription> {
    transcribe_impl(spec, cache, &[])
}

/// Ambient-coordinate baseline: states become plain Euclidean unknowns, the
/// dynamics are converted to ambient rates through the chart kinematics, and
/// one unit-norm equality row is added per quaternion block at every
/// collocation node. Exists for constraint-count and convergence comparisons
/// against the tangent variant.
pub fn transcribe_normalization_baseline(
    spec: &ProblemSpec,
    cache: &mut SchemeCache,
) -> Result<Transcription> {
    spec.validate()?;
    let offsets = spec.chart.quaternion_offsets();
    if offsets.is_empty() {
        eprintln!(
            "warning: normalization baseline on a chart without quaternion blocks; \
             emitting the plain ambient transcription"
        );
    }
    let ambient = ambientize(spec);
    transcribe_impl(&ambient, cache, &offsets)
}

/// Rewrite the problem over a flat chart of the full ambient dimension,
/// wrapping each phase's dynamics so tangent rates become ambient rates.
fn ambientize(spec: &ProblemSpec) -> ProblemSpec {
    let chart = spec.chart.clone();
    let nt = chart.tangent_dim();
    let phases = spec
        .phases
        .iter()
        .map(|ph| {
            let inner = ph.dynamics.clone();
            let chart = chart.clone();
            let wrapped: DynamicsFn = Arc::new(move |x, u, out| {
                let mut rate = vec![Dual::constant(0.0); nt];
                inner(x, u, &mut rate);
                let amb = chart
                    .ambient_rate(x, &rate)
                    .expect("ambient rate on fixed chart");
                out.copy_from_slice(&amb);
            });
            PhaseSpec {
                dynamics: wrapped,
                ..ph.clone()
            }
        })
        .collect();
    ProblemSpec {
        chart: ManifoldChart::euclidean(spec.chart.ambient_dim()),
        phases,
        ..spec.clone()
    }
}

/// Dimensions threaded into the per-segment closures.
#[derive(Clone, Copy)]
struct SegDims {
    nt: usize,
    nu: usize,
    d: usize,
    du: usize,
}

impl SegDims {
    /// Local layout of a segment block: [κ | x̃₁..x̃_d | μ | u₁..u_du].
    fn kappa(&self) -> Range<usize> {
        0..self.nt
    }
    fn xdev(&self, j: usize) -> Range<usize> {
        let s = self.nt + (j - 1) * self.nt;
        s..s + self.nt
    }
    fn mu(&self) -> Range<usize> {
        let s = self.nt + self.d * self.nt;
        s..s + self.nu
    }
    fn ctrl(&self, j: usize) -> Range<usize> {
        let s = self.nt + self.d * self.nt + self.nu + (j - 1) * self.nu;
        s..s + self.nu
    }
}

/// Control polynomial (support {0} ∪ control nodes) evaluated at the state
/// collocation node, as a coefficient row over [μ, u₁..u_du].
fn control_coefficients(control: &CollocationScheme, t: f64) -> Result<Vec<f64>> {
    let n = control.support.len();
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    barycentric_interpolate(&control.support, &control.bary_weights, &basis, t)
}

/// Gather state and control at collocation node j from a segment's locals.
fn node_state_control(
    chart: &ManifoldChart,
    base: &[Dual],
    dims: &SegDims,
    coeffs: &[Vec<f64>],
    local: &[Dual],
    j: usize,
) -> (Vec<Dual>, Vec<Dual>) {
    let state = chart
        .exp(base, &local[dims.xdev(j)])
        .expect("collocation state on fixed chart");
    let mut u = vec![Dual::constant(0.0); dims.nu];
    if dims.nu > 0 {
        let row = &coeffs[j - 1];
        for (c, uc) in u.iter_mut().enumerate() {
            let mut acc = local[dims.mu()][c] * row[0];
            for i in 1..=dims.du {
                acc += local[dims.ctrl(i)][c] * row[i];
            }
            *uc = acc;
        }
    }
    (state, u)
}

fn transcribe_impl(
    spec: &ProblemSpec,
    cache: &mut SchemeCache,
    norm_offsets: &[usize],
) -> Result<Transcription> {
    spec.validate()?;
    let chart = spec.chart.clone();
    let nt = chart.tangent_dim();
    let amb = chart.ambient_dim();
    let n_vars = count_decision_variables(spec);
    let mut nlp = NlpProblem::new(n_vars);
    let mut z0 = vec![0.0; n_vars];
    let total_duration: f64 = spec.phases.iter().map(|p| p.duration).sum();

    // Reference path for the default guess: the geodesic from start to goal,
    // parameterized by global time. With no goal the references sit at start.
    let goal_delta = match &spec.goal_state {
        Some(goal) => Some(chart.log(&spec.start_state, goal)?),
        None => None,
    };
    let guess_state = |t: f64| -> Result<Vec<f64>> {
        match &spec.initial_guess {
            Some(g) => {
                let (state, _) = g(t);
                if state.len() != amb {
                    return Err(Error::Construction {
                        phase: None,
                        reason: format!(
                            "initial guess returned a state of {} components, expected {amb}",
                            state.len()
                        ),
                    });
                }
                Ok(state)
            }
            None => match &goal_delta {
                Some(delta) => {
                    let frac = (t / total_duration).clamp(0.0, 1.0);
                    let step: Vec<f64> = delta.iter().map(|v| frac * v).collect();
                    chart.exp(&spec.start_state, &step)
                }
                None => Ok(spec.start_state.clone()),
            },
        }
    };
    let guess_control = |t: f64, nu: usize, phase: usize| -> Result<Vec<f64>> {
        match &spec.initial_guess {
            Some(g) => {
                let (_, u) = g(t);
                if u.len() != nu {
                    return Err(Error::Construction {
                        phase: Some(phase),
                        reason: format!(
                            "initial guess returned a control of {} components, expected {nu}",
                            u.len()
                        ),
                    });
                }
                Ok(u)
            }
            None => Ok(vec![0.0; nu]),
        }
    };

    let mut phases = Vec::with_capacity(spec.phases.len());
    let mut base = 0;
    let mut t_cursor = 0.0;
    let mut normalization_rows = 0;

    for (p, ph) in spec.phases.iter().enumerate() {
        let state_scheme = Arc::new(cache.get(ph.state_degree)?.clone());
        let control_scheme = Arc::new(cache.get(ph.control_degree)?.clone());
        let d = ph.state_degree;
        let du = ph.control_degree;
        let nu = ph.control_dim;
        let n_seg = ph.segments;
        let h = ph.duration / n_seg as f64;
        let dims = SegDims { nt, nu, d, du };
        let layout = PhaseLayout {
            base,
            nt,
            nu,
            d,
            du,
            segments: n_seg,
        };

        // Control interpolation coefficients at each state node.
        let coeffs: Arc<Vec<Vec<f64>>> = Arc::new(
            state_scheme
                .nodes
                .iter()
                .map(|&t| control_coefficients(&control_scheme, t))
                .collect::<Result<_>>()?,
        );

        // Knot references and the initial decision vector.
        let mut refs = Vec::with_capacity(n_seg + 1);
        for k in 0..=n_seg {
            refs.push(guess_state(t_cursor + k as f64 * h)?);
        }
        for k in 0..=n_seg {
            let t_k = t_cursor + k as f64 * h;
            z0[layout.mu(k)].copy_from_slice(&guess_control(t_k, nu, p)?);
        }
        for k in 0..n_seg {
            let t_k = t_cursor + k as f64 * h;
            for j in 1..=d {
                let t_kj = t_k + state_scheme.nodes[j - 1] * h;
                let target = guess_state(t_kj)?;
                let dev = chart.log(&refs[k], &target).map_err(|e| Error::Construction {
                    phase: Some(p),
                    reason: format!("initial guess leaves the reference chart: {e}"),
                })?;
                z0[layout.xdev(k, j)].copy_from_slice(&dev);
                z0[layout.ctrl(k, j)].copy_from_slice(&guess_control(t_kj, nu, p)?);
            }
        }

        // Pinning: phase 0 fixes the start state; later phases tie their
        // opening knot to the jump-map image of the previous phase end.
        if p == 0 {
            let vars: Vec<usize> = layout.kappa(0).collect();
            nlp.eq_blocks.push(ConstraintBlock {
                label: format!("phase{p}/pin"),
                dim: nt,
                vars,
                eval: Box::new(move |local, out| out.copy_from_slice(local)),
            });
        } else {
            let prev: &PhaseData = &phases[p - 1];
            let prev_layout = prev.layout;
            let prev_ref = prev.refs[prev_layout.segments].clone();
            let cur_ref = refs[0].clone();
            let jump = spec.jump_maps[p - 1].clone();
            let chart_c = chart.clone();
            let mut vars: Vec<usize> = prev_layout.kappa(prev_layout.segments).collect();
            vars.extend(layout.kappa(0));
            nlp.eq_blocks.push(ConstraintBlock {
                label: format!("phase{p}/jump"),
                dim: nt,
                vars,
                eval: Box::new(move |local, out| {
                    let prev_base = lift(&prev_ref);
                    let cur_base = lift(&cur_ref);
                    let nt_l = out.len();
                    let end_state = chart_c
                        .exp(&prev_base, &local[0..nt_l])
                        .expect("phase end state");
                    let mut image = vec![Dual::constant(0.0); prev_base.len()];
                    jump(&end_state, &mut image);
                    let opening = chart_c
                        .exp(&cur_base, &local[nt_l..2 * nt_l])
                        .expect("phase opening state");
                    match chart_c.log(&opening, &image) {
                        Ok(r) => out.copy_from_slice(&r),
                        Err(_) => out.fill(Dual::constant(f64::NAN)),
                    }
                }),
            });
        }

        for k in 0..n_seg {
            let ref_k = refs[k].clone();
            let mut vars: Vec<usize> = layout.kappa(k).collect();
            for j in 1..=d {
                vars.extend(layout.xdev(k, j));
            }
            vars.extend(layout.mu(k));
            for j in 1..=du {
                vars.extend(layout.ctrl(k, j));
            }

            // Collocation: h·f(x(τ_j), u(τ_j)) − [D·X̃]_j = 0, first support
            // row pinned to zero deviant.
            {
                let chart_c = chart.clone();
                let ref_c = ref_k.clone();
                let scheme = state_scheme.clone();
                let coeffs = coeffs.clone();
                let dynamics = ph.dynamics.clone();
                nlp.eq_blocks.push(ConstraintBlock {
                    label: format!("phase{p}/seg{k}/collocation"),
                    dim: d * nt,
                    vars: vars.clone(),
                    eval: Box::new(move |local, out| {
                        let base_ref = lift(&ref_c);
                        let x_k = chart_c
                            .exp(&base_ref, &local[dims.kappa()])
                            .expect("segment base state");
                        let mut f = vec![Dual::constant(0.0); dims.nt];
                        for j in 1..=dims.d {
                            let (state, u) =
                                node_state_control(&chart_c, &x_k, &dims, &coeffs, local, j);
                            for v in f.iter_mut() {
                                *v = Dual::constant(0.0);
                            }
                            dynamics(&state, &u, &mut f);
                            let drow = &scheme.diff_matrix[j - 1];
                            for r in 0..dims.nt {
                                let mut acc = f[r] * h;
                                for i in 1..=dims.d {
                                    acc -= local[dims.xdev(i)][r] * drow[i];
                                }
                                out[(j - 1) * dims.nt + r] = acc;
                            }
                        }
                    }),
                });
            }

            // Running cost quadrature over the segment, scaled by h.
            if let Some(cost) = &ph.running_cost {
                let chart_c = chart.clone();
                let ref_c = ref_k.clone();
                let scheme = state_scheme.clone();
                let coeffs = coeffs.clone();
                let cost = cost.clone();
                nlp.objective_blocks.push(ObjectiveBlock {
                    label: format!("phase{p}/seg{k}/running-cost"),
                    vars: vars.clone(),
                    eval: Box::new(move |local| {
                        let base_ref = lift(&ref_c);
                        let x_k = chart_c
                            .exp(&base_ref, &local[dims.kappa()])
                            .expect("segment base state");
                        let mut acc = Dual::constant(0.0);
                        for j in 1..=dims.d {
                            let (state, u) =
                                node_state_control(&chart_c, &x_k, &dims, &coeffs, local, j);
                            acc += cost(&state, &u) * (h * scheme.quad_weights[j - 1]);
                        }
                        acc
                    }),
                });
            }

            // Path constraints at the collocation nodes, one-sided rows per
            // finite bound: c − upper ≤ 0 and lower − c ≤ 0.
            if let Some(path) = &ph.path_constraints {
                let n_upper = path.upper.iter().filter(|b| b.is_finite()).count();
                let n_lower = path.lower.iter().filter(|b| b.is_finite()).count();
                let rows_per_node = n_upper + n_lower;
                if rows_per_node > 0 {
                    let chart_c = chart.clone();
                    let ref_c = ref_k.clone();
                    let coeffs = coeffs.clone();
                    let path = path.clone();
                    nlp.ineq_blocks.push(ConstraintBlock {
                        label: format!("phase{p}/seg{k}/path"),
                        dim: d * rows_per_node,
                        vars: vars.clone(),
                        eval: Box::new(move |local, out| {
                            let base_ref = lift(&ref_c);
                            let x_k = chart_c
                                .exp(&base_ref, &local[dims.kappa()])
                                .expect("segment base state");
                            let mut row = 0;
                            let mut c = vec![Dual::constant(0.0); path.dim];
                            for j in 1..=dims.d {
                                let (state, u) =
                                    node_state_control(&chart_c, &x_k, &dims, &coeffs, local, j);
                                for v in c.iter_mut() {
                                    *v = Dual::constant(0.0);
                                }
                                (path.eval)(&state, &u, &mut c);
                                for i in 0..path.dim {
                                    if path.upper[i].is_finite() {
                                        out[row] = c[i] - path.upper[i];
                                        row += 1;
                                    }
                                }
                                for i in 0..path.dim {
                                    if path.lower[i].is_finite() {
                                        out[row] = Dual::constant(path.lower[i]) - c[i];
                                        row += 1;
                                    }
                                }
                            }
                        }),
                    });
                }
            }

            // Unit-norm rows for the normalization baseline.
            if !norm_offsets.is_empty() {
                let ref_c = ref_k.clone();
                let offsets = norm_offsets.to_vec();
                let mut nvars: Vec<usize> = layout.kappa(k).collect();
                for j in 1..=d {
                    nvars.extend(layout.xdev(k, j));
                }
                normalization_rows += d * offsets.len();
                nlp.eq_blocks.push(ConstraintBlock {
                    label: format!("phase{p}/seg{k}/norm"),
                    dim: d * offsets.len(),
                    vars: nvars,
                    eval: Box::new(move |local, out| {
                        // Flat chart: the node state is ref + κ + x̃_j.
                        for j in 1..=dims.d {
                            for (qi, &off) in offsets.iter().enumerate() {
                                let mut s = Dual::constant(-1.0);
                                for c in 0..4 {
                                    let v = local[dims.kappa()][off + c]
                                        + local[dims.xdev(j)][off + c]
                                        + ref_c[off + c];
                                    s += v * v;
                                }
                                out[(j - 1) * offsets.len() + qi] = s;
                            }
                        }
                    }),
                });
            }

            // Knot continuity: the segment-end state reproduces knot k+1.
            {
                let chart_c = chart.clone();
                let ref_c = ref_k.clone();
                let ref_next = refs[k + 1].clone();
                let mut cvars: Vec<usize> = layout.kappa(k).collect();
                cvars.extend(layout.xdev(k, d));
                cvars.extend(layout.kappa(k + 1));
                nlp.eq_blocks.push(ConstraintBlock {
                    label: format!("phase{p}/seg{k}/continuity"),
                    dim: nt,
                    vars: cvars,
                    eval: Box::new(move |local, out| {
                        let nt_l = out.len();
                        let x_k = chart_c
                            .exp(&lift(&ref_c), &local[0..nt_l])
                            .expect("segment base state");
                        let end = chart_c
                            .exp(&x_k, &local[nt_l..2 * nt_l])
                            .expect("segment end state");
                        let next = chart_c
                            .exp(&lift(&ref_next), &local[2 * nt_l..3 * nt_l])
                            .expect("next knot state");
                        match chart_c.log(&next, &end) {
                            Ok(r) => out.copy_from_slice(&r),
                            Err(_) => out.fill(Dual::constant(f64::NAN)),
                        }
                    }),
                });
            }

            // Control knot matching: last collocation control equals the next
            // knot control (the control polynomial's τ = 1 sample).
            if nu > 0 {
                let mut mvars: Vec<usize> = layout.ctrl(k, du).collect();
                mvars.extend(layout.mu(k + 1));
                nlp.eq_blocks.push(ConstraintBlock {
                    label: format!("phase{p}/seg{k}/control-match"),
                    dim: nu,
                    vars: mvars,
                    eval: Box::new(move |local, out| {
                        for c in 0..out.len() {
                            out[c] = local[c] - local[out.len() + c];
                        }
                    }),
                });
            }
        }

        phases.push(PhaseData {
            layout,
            refs,
            state_scheme,
            control_scheme,
            dynamics: ph.dynamics.clone(),
            duration: ph.duration,
            t_start: t_cursor,
        });
        base = layout.end();
        t_cursor += ph.duration;
    }

    // Terminal cost at the final knot of the last phase.
    if let Some(terminal) = &spec.terminal_cost {
        let last = phases.last().expect("validated: at least one phase");
        let ref_f = last.refs[last.layout.segments].clone();
        let chart_c = chart.clone();
        let terminal = terminal.clone();
        nlp.objective_blocks.push(ObjectiveBlock {
            label: "terminal".into(),
            vars: last.layout.kappa(last.layout.segments).collect(),
            eval: Box::new(move |local| {
                let xf = chart_c
                    .exp(&lift(&ref_f), local)
                    .expect("terminal state");
                terminal(&xf)
            }),
        });
    }

    // Boundary residual rows on top of the structural count.
    if let Some(boundary) = &spec.boundary {
        let first = &phases[0];
        let last = phases.last().expect("validated: at least one phase");
        let ref_0 = first.refs[0].clone();
        let ref_f = last.refs[last.layout.segments].clone();
        let chart_c = chart.clone();
        let eval = boundary.eval.clone();
        let mut vars: Vec<usize> = first.layout.kappa(0).collect();
        vars.extend(last.layout.kappa(last.layout.segments));
        nlp.eq_blocks.push(ConstraintBlock {
            label: "boundary".into(),
            dim: boundary.dim,
            vars,
            eval: Box::new(move |local, out| {
                let half = local.len() / 2;
                let x0 = chart_c
                    .exp(&lift(&ref_0), &local[0..half])
                    .expect("boundary initial state");
                let xf = chart_c
                    .exp(&lift(&ref_f), &local[half..])
                    .expect("boundary final state");
                eval(&x0, &xf, out);
            }),
        });
    }

    let n_eq = nlp.num_eq();
    let boundary_rows = spec.boundary.as_ref().map_or(0, |b| b.dim);
    debug_assert_eq!(
        n_eq,
        count_equality_constraints(spec) + boundary_rows + normalization_rows
    );
    let info = TranscriptionInfo {
        n_vars,
        n_eq,
        n_ineq: nlp.num_ineq(),
        normalization_rows,
    };
    Ok(Transcription {
        nlp,
        info,
        chart,
        phases,
        z0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::{solve, SolverOptions};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn euclidean_phase(
        dim: usize,
        control_dim: usize,
        segments: usize,
        degree: usize,
        dynamics: DynamicsFn,
    ) -> PhaseSpec {
        let _ = dim;
        PhaseSpec {
            dynamics,
            running_cost: None,
            path_constraints: None,
            duration: 1.0,
            segments,
            state_degree: degree,
            control_degree: degree,
            control_dim,
        }
    }

    /// f = u on Euclidean(1).
    fn scalar_integrator() -> DynamicsFn {
        Arc::new(|_x, u, out| out[0] = u[0])
    }

    fn double_integrator_spec(segments: usize, degree: usize) -> ProblemSpec {
        let dynamics: DynamicsFn = Arc::new(|x, u, out| {
            out[0] = x[1];
            out[1] = u[0];
        });
        let cost: RunningCostFn = Arc::new(|_x, u| u[0] * u[0]);
        let boundary: BoundaryFn = Arc::new(|_x0, xf, out| {
            out[0] = xf[0] - 1.0;
            out[1] = xf[1];
        });
        ProblemSpec {
            chart: ManifoldChart::euclidean(2),
            phases: vec![PhaseSpec {
                dynamics,
                running_cost: Some(cost),
                path_constraints: None,
                duration: 1.0,
                segments,
                state_degree: degree,
                control_degree: degree,
                control_dim: 1,
            }],
            terminal_cost: None,
            boundary: Some(BoundaryConstraintSpec {
                dim: 2,
                eval: boundary,
            }),
            jump_maps: vec![],
            start_state: vec![0.0, 0.0],
            goal_state: Some(vec![1.0, 0.0]),
            initial_guess: None,
        }
    }

    #[test]
    fn counts_match_worked_examples() {
        // N=2, d_x̃=d_u=3, n_x̃=n_u=2 → 2(6+6) + 3·4 = 36 variables.
        let spec = ProblemSpec {
            chart: ManifoldChart::euclidean(2),
            phases: vec![euclidean_phase(2, 2, 2, 3, Arc::new(|_x, _u, out| {
                out[0] = Dual::constant(0.0);
                out[1] = Dual::constant(0.0);
            }))],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![],
            start_state: vec![0.0, 0.0],
            goal_state: None,
            initial_guess: None,
        };
        assert_eq!(count_decision_variables(&spec), 36);
        // Same shape: equalities 2 + 2(6+2+2) = 22.
        assert_eq!(count_equality_constraints(&spec), 22);

        // Smallest case: N=1, d=du=1, n_x̃=n_u=1 → 1(1+1) + 2(2) = 6.
        let small = ProblemSpec {
            chart: ManifoldChart::euclidean(1),
            phases: vec![euclidean_phase(1, 1, 1, 1, scalar_integrator())],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![],
            start_state: vec![0.0],
            goal_state: None,
            initial_guess: None,
        };
        assert_eq!(count_decision_variables(&small), 6);

        // Two identical phases double the count.
        let mut doubled = spec.clone();
        doubled.phases.push(doubled.phases[0].clone());
        doubled.jump_maps.push(Arc::new(|x, out| out.copy_from_slice(x)));
        assert_eq!(count_decision_variables(&doubled), 72);
        assert_eq!(count_equality_constraints(&doubled), 44);
    }

    #[test]
    fn emitted_counts_equal_formulas() {
        let mut cache = SchemeCache::new();
        let jump: JumpFn = Arc::new(|x, out| out.copy_from_slice(x));
        let spec = ProblemSpec {
            chart: ManifoldChart::euclidean(2),
            phases: vec![
                euclidean_phase(2, 1, 2, 3, Arc::new(|x, _u, out| {
                    out[0] = x[1];
                    out[1] = Dual::constant(0.0);
                })),
                euclidean_phase(2, 1, 3, 2, Arc::new(|x, _u, out| {
                    out[0] = x[1];
                    out[1] = Dual::constant(0.0);
                })),
            ],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![jump],
            start_state: vec![1.0, 0.0],
            goal_state: None,
            initial_guess: None,
        };
        let tr = transcribe(&spec, &mut cache).unwrap();
        assert_eq!(tr.nlp.n_vars, count_decision_variables(&spec));
        assert_eq!(tr.nlp.num_eq(), count_equality_constraints(&spec));
        assert_eq!(tr.info.normalization_rows, 0);
    }

    #[test]
    fn boundary_rows_come_on_top_of_the_formula() {
        let mut cache = SchemeCache::new();
        let spec = double_integrator_spec(3, 3);
        let tr = transcribe(&spec, &mut cache).unwrap();
        assert_eq!(
            tr.nlp.num_eq(),
            count_equality_constraints(&spec) + 2,
            "boundary residual rows are extra"
        );
    }

    #[test]
    fn single_node_transcription_has_the_analytic_structure() {
        // N=1, d=1 on Euclidean(1), f = u: the one collocation row is
        // h·u₁ − x̃₁ and the objective is B₁·u₁²·h with B₁ = 1, h = 1.
        let mut cache = SchemeCache::new();
        let cost: RunningCostFn = Arc::new(|_x, u| u[0] * u[0]);
        let spec = ProblemSpec {
            chart: ManifoldChart::euclidean(1),
            phases: vec![PhaseSpec {
                running_cost: Some(cost),
                ..euclidean_phase(1, 1, 1, 1, scalar_integrator())
            }],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![],
            start_state: vec![0.0],
            goal_state: None,
            initial_guess: None,
        };
        let tr = transcribe(&spec, &mut cache).unwrap();
        assert_eq!(tr.nlp.n_vars, 6);
        assert_eq!(tr.nlp.num_eq(), 4);

        // Layout: [κ0, κ1, μ0, μ1, x̃1, u1].
        let z = [0.3, -0.2, 0.9, 0.4, 0.7, 1.1];
        let by_label = |tag: &str| -> Vec<f64> {
            tr.nlp
                .eq_blocks
                .iter()
                .find(|b| b.label.contains(tag))
                .unwrap()
                .residuals(&z)
        };
        close(by_label("pin")[0], 0.3, 1e-15);
        close(by_label("collocation")[0], 1.1 - 0.7, 1e-15);
        // Continuity: (ref0 + κ0 + x̃1) − (ref1 + κ1) with refs at 0.
        close(by_label("continuity")[0], 0.3 + 0.7 - (-0.2), 1e-15);
        close(by_label("control-match")[0], 1.1 - 0.4, 1e-15);
        close(tr.nlp.objective(&z), 1.1 * 1.1, 1e-15);
    }

    #[test]
    fn zero_dynamics_solution_has_zero_deviants() {
        let mut cache = SchemeCache::new();
        let frozen: DynamicsFn = Arc::new(|_x, _u, out| out[0] = Dual::constant(0.0));
        let spec = ProblemSpec {
            chart: ManifoldChart::euclidean(1),
            phases: vec![euclidean_phase(1, 1, 2, 3, frozen)],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![],
            start_state: vec![2.5],
            goal_state: None,
            initial_guess: None,
        };
        let tr = transcribe(&spec, &mut cache).unwrap();
        let mut z0 = tr.initial_vector();
        // Kick the deviants; feasibility must pull them back to zero.
        for v in z0.iter_mut() {
            *v += 0.1;
        }
        let (z, report) = solve(&tr.nlp, &z0, &SolverOptions::default()).unwrap();
        assert!(report.converged());
        let traj = tr.trajectory(&z).unwrap();
        for seg in &traj.phases[0].segments {
            for row in &seg.deviants {
                for &v in row {
                    assert!(v.abs() <= 1e-8, "deviant {v} should vanish");
                }
            }
        }
        assert!(traj.defect_norm(7) <= 1e-8);
    }

    #[test]
    fn euclidean_baseline_matches_tangent_cost() {
        let mut cache = SchemeCache::new();
        let spec = double_integrator_spec(3, 3);
        let tangent = transcribe(&spec, &mut cache).unwrap();
        let baseline = transcribe_normalization_baseline(&spec, &mut cache).unwrap();
        assert_eq!(baseline.info.normalization_rows, 0);
        assert_eq!(baseline.nlp.n_vars, tangent.nlp.n_vars);
        assert_eq!(baseline.nlp.num_eq(), tangent.nlp.num_eq());
        let opts = SolverOptions::default();
        let (_, rt) = solve(&tangent.nlp, &tangent.initial_vector(), &opts).unwrap();
        let (_, rb) = solve(&baseline.nlp, &baseline.initial_vector(), &opts).unwrap();
        assert!(rt.converged() && rb.converged());
        close(rt.objective, rb.objective, 1e-6);
        close(rt.objective, 12.0, 1e-5);
    }

    #[test]
    fn normalization_baseline_adds_rows_per_quaternion_node() {
        let mut cache = SchemeCache::new();
        let chart = ManifoldChart::from_blocks(vec![
            crate::manifolds::Block::Euclidean(3),
            crate::manifolds::Block::Quaternion,
        ])
        .unwrap();
        let dynamics: DynamicsFn = Arc::new(|x, u, out| {
            out[0] = u[0];
            out[1] = u[1];
            out[2] = u[2];
            out[3] = x[0];
            out[4] = x[1];
            out[5] = x[2];
        });
        let spec = ProblemSpec {
            chart,
            phases: vec![PhaseSpec {
                dynamics,
                running_cost: None,
                path_constraints: None,
                duration: 1.0,
                segments: 5,
                state_degree: 3,
                control_degree: 3,
                control_dim: 3,
            }],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![],
            start_state: vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            goal_state: None,
            initial_guess: None,
        };
        let baseline = transcribe_normalization_baseline(&spec, &mut cache).unwrap();
        // One row per quaternion block at each of the 5·3 collocation nodes.
        assert_eq!(baseline.info.normalization_rows, 15);
        let ambient_formula = count_equality_constraints(&ambientize(&spec));
        assert_eq!(baseline.nlp.num_eq(), ambient_formula + 15);
    }

    #[test]
    fn collocation_blocks_touch_only_their_segment_and_base_knot() {
        let mut cache = SchemeCache::new();
        let spec = double_integrator_spec(3, 3);
        let tr = transcribe(&spec, &mut cache).unwrap();
        let z = tr.initial_vector();
        let block = tr
            .nlp
            .eq_blocks
            .iter()
            .find(|b| b.label == "phase0/seg1/collocation")
            .unwrap();
        let r0 = block.residuals(&z);
        let lay = tr.phases[0].layout;
        // Perturb everything outside segment 1's variables and knot 1.
        let mut protected: Vec<usize> = lay.kappa(1).collect();
        protected.extend(lay.mu(1));
        for j in 1..=lay.d {
            protected.extend(lay.xdev(1, j));
        }
        for j in 1..=lay.du {
            protected.extend(lay.ctrl(1, j));
        }
        let mut z_kicked = z.clone();
        for i in 0..z_kicked.len() {
            if !protected.contains(&i) {
                z_kicked[i] += 0.37;
            }
        }
        let r1 = block.residuals(&z_kicked);
        for (a, b) in r0.iter().zip(&r1) {
            close(*a, *b, 0.0);
        }
        // And perturbing an in-segment variable does change the residual.
        let mut z_inside = z.clone();
        z_inside[lay.xdev(1, 1).start] += 0.37;
        let r2 = block.residuals(&z_inside);
        assert!(r0.iter().zip(&r2).any(|(a, b)| (a - b).abs() > 1e-12));
    }

    #[test]
    fn initial_guess_hook_seeds_the_vector() {
        let mut cache = SchemeCache::new();
        let guess: GuessFn = Arc::new(|t| (vec![t * t, 2.0 * t], vec![2.0]));
        let mut spec = double_integrator_spec(2, 2);
        spec.initial_guess = Some(guess);
        let tr = transcribe(&spec, &mut cache).unwrap();
        let traj = tr.trajectory(&tr.initial_vector()).unwrap();
        for &t in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let (x, u) = traj.reconstruct(t).unwrap();
            // The quadratic guess is inside the degree-2 polynomial family,
            // so reconstruction reproduces it exactly at knots and nodes (and
            // by uniqueness everywhere).
            close(x[0], t * t, 1e-12);
            close(x[1], 2.0 * t, 1e-12);
            close(u[0], 2.0, 1e-12);
        }
    }

    #[test]
    fn reconstruct_is_exact_at_knots_and_nodes() {
        let mut cache = SchemeCache::new();
        let spec = double_integrator_spec(4, 3);
        let tr = transcribe(&spec, &mut cache).unwrap();
        let z = tr.initial_vector();
        let traj = tr.trajectory(&z).unwrap();
        let scheme = tr.phases[0].state_scheme.clone();
        let h = 0.25;
        for k in 0..4 {
            let (x, _) = traj.reconstruct(k as f64 * h).unwrap();
            for (a, b) in x.iter().zip(&tr.phases[0].refs[k]) {
                close(*a, *b, 1e-12);
            }
            for j in 1..=3usize {
                let t = k as f64 * h + scheme.nodes[j - 1] * h;
                let (x, _) = traj.reconstruct(t).unwrap();
                let lay = tr.phases[0].layout;
                let expected = tr
                    .chart
                    .exp(&traj.phases[0].segments[k].base, &z[lay.xdev(k, j)])
                    .unwrap();
                for (a, b) in x.iter().zip(&expected) {
                    close(*a, *b, 1e-9);
                }
            }
        }
        // Continuity at interior knots within 1e-9: left-limit sample vs knot.
        for k in 1..4usize {
            let left = traj.phases[0].eval_segment(&traj.chart, k - 1, 1.0).0;
            let (right, _) = traj.reconstruct(k as f64 * h).unwrap();
            for (a, b) in left.iter().zip(&right) {
                close(*a, *b, 1e-9);
            }
        }
    }

    #[test]
    fn reconstruct_rejects_out_of_range_times() {
        let mut cache = SchemeCache::new();
        let spec = double_integrator_spec(2, 2);
        let tr = transcribe(&spec, &mut cache).unwrap();
        let traj = tr.trajectory(&tr.initial_vector()).unwrap();
        assert!(matches!(
            traj.reconstruct(-0.1),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(traj.reconstruct(1.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn defect_is_exactly_zero_for_zero_dynamics() {
        let mut cache = SchemeCache::new();
        let frozen: DynamicsFn = Arc::new(|_x, _u, out| out[0] = Dual::constant(0.0));
        let spec = ProblemSpec {
            chart: ManifoldChart::euclidean(1),
            phases: vec![euclidean_phase(1, 0, 2, 3, frozen)],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![],
            start_state: vec![1.0],
            goal_state: None,
            initial_guess: None,
        };
        let tr = transcribe(&spec, &mut cache).unwrap();
        let traj = tr.trajectory(&tr.initial_vector()).unwrap();
        assert_eq!(traj.defect_norm(5), 0.0);
    }

    #[test]
    fn multi_phase_structure_and_boundary_sampling() {
        let mut cache = SchemeCache::new();
        let flip: JumpFn = Arc::new(|x, out| out[0] = -x[0]);
        let spec = ProblemSpec {
            chart: ManifoldChart::euclidean(1),
            phases: vec![
                euclidean_phase(1, 0, 2, 2, Arc::new(|_x, _u, out| {
                    out[0] = Dual::constant(1.0)
                })),
                euclidean_phase(1, 0, 2, 2, Arc::new(|_x, _u, out| {
                    out[0] = Dual::constant(1.0)
                })),
            ],
            terminal_cost: None,
            boundary: None,
            jump_maps: vec![flip],
            start_state: vec![0.0],
            goal_state: None,
            initial_guess: None,
        };
        let tr = transcribe(&spec, &mut cache).unwrap();
        assert_eq!(tr.nlp.num_eq(), count_equality_constraints(&spec));
        assert!(tr
            .nlp
            .eq_blocks
            .iter()
            .any(|b| b.label == "phase1/jump"));
        let (z, report) = solve(&tr.nlp, &tr.initial_vector(), &SolverOptions::default()).unwrap();
        assert!(report.converged());
        let traj = tr.trajectory(&z).unwrap();
        // ẋ = 1 for one second per phase, jump negates: 0 → 1, then −1 → 0.
        let bounds = traj.phase_boundary_states();
        assert_eq!(bounds.len(), 1);
        close(bounds[0].0[0], 1.0, 1e-7);
        close(bounds[0].1[0], -1.0, 1e-7);
        let (xf, _) = traj.reconstruct(2.0).unwrap();
        close(xf[0], 0.0, 1e-7);
        // Right continuity: the boundary instant reads the post-jump side.
        let (xb, _) = traj.reconstruct(1.0).unwrap();
        close(xb[0], -1.0, 1e-7);
        // The export rows carry both sides of the jump at t = 1.
        let rows = traj.sample(4);
        let at_boundary: Vec<f64> = rows
            .iter()
            .filter(|(t, _, _)| (t - 1.0).abs() < 1e-12)
            .map(|(_, x, _)| x[0])
            .collect();
        assert_eq!(at_boundary.len(), 2);
    }

    #[test]
    fn validation_rejects_malformed_specs() {
        let mut cache = SchemeCache::new();
        let base = double_integrator_spec(2, 2);

        let mut no_phases = base.clone();
        no_phases.phases.clear();
        assert!(matches!(
            transcribe(&no_phases, &mut cache),
            Err(Error::Construction { phase: None, .. })
        ));

        let mut bad_jumps = base.clone();
        bad_jumps.jump_maps.push(Arc::new(|x, out| out.copy_from_slice(x)));
        assert!(transcribe(&bad_jumps, &mut cache).is_err());

        let mut bad_start = base.clone();
        bad_start.start_state = vec![0.0];
        assert!(matches!(
            transcribe(&bad_start, &mut cache),
            Err(Error::Construction { phase: None, .. })
        ));

        let mut bad_duration = base.clone();
        bad_duration.phases[0].duration = 0.0;
        assert!(matches!(
            transcribe(&bad_duration, &mut cache),
            Err(Error::Construction { phase: Some(0), .. })
        ));

        let mut bad_degree = base;
        bad_degree.phases[0].state_degree = 0;
        assert!(matches!(
            transcribe(&bad_degree, &mut cache),
            Err(Error::Construction { phase: Some(0), .. })
        ));
    }

    #[test]
    fn path_constraints_emit_rows_per_finite_bound() {
        let mut cache = SchemeCache::new();
        let mut spec = double_integrator_spec(2, 2);
        let eval: PathFn = Arc::new(|_x, u, out| out[0] = u[0]);
        spec.phases[0].path_constraints = Some(PathConstraintSpec {
            dim: 1,
            lower: vec![-8.0],
            upper: vec![8.0],
            eval,
        });
        let tr = transcribe(&spec, &mut cache).unwrap();
        // 2 segments × 2 nodes × (1 upper + 1 lower).
        assert_eq!(tr.nlp.num_ineq(), 8);
        let opts = SolverOptions::default();
        let (z, report) = solve(&tr.nlp, &tr.initial_vector(), &opts).unwrap();
        assert!(report.converged());
        // Loose bounds leave the optimum as-is (u* spans ±6).
        let traj = tr.trajectory(&z).unwrap();
        let (_, u) = traj.reconstruct(0.0).unwrap();
        close(u[0], 6.0, 1e-4);
    }
}
