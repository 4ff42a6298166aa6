//! Augmented-Lagrangian solver.
//!
//! Outer loop: multiplier estimates for equalities and plus-function penalty
//! terms for inequalities (no slack variables), penalty escalated by a fixed
//! factor when feasibility stalls. Inner loop: bound-projected L-BFGS with
//! Armijo backtracking on the augmented Lagrangian. The inner stationarity
//! measure at the updated multipliers doubles as the KKT stationarity norm.

use super::{derivatives::audit_derivatives, NlpProblem};
use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::VecDeque;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Maximum constraint violation accepted at convergence.
    pub feas_tol: f64,
    /// Projected-gradient norm accepted at convergence.
    pub opt_tol: f64,
    pub max_outer: usize,
    /// Inner iteration budget per outer iteration.
    pub max_inner: usize,
    pub initial_penalty: f64,
    /// Multiplicative penalty escalation factor.
    pub penalty_growth: f64,
    pub penalty_cap: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// Audit block Jacobians against finite differences before solving.
    pub audit_jacobians: bool,
    pub audit_probes: usize,
    pub audit_rel_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-6,
            max_outer: 50,
            max_inner: 600,
            initial_penalty: 100.0,
            penalty_growth: 10.0,
            penalty_cap: 1e12,
            memory: 20,
            audit_jacobians: false,
            audit_probes: 20,
            audit_rel_tol: 1e-5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    InfeasibleStationary,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Outer (multiplier/penalty) iterations.
    pub iterations: usize,
    /// Total inner quasi-Newton iterations.
    pub inner_iterations: usize,
    pub objective: f64,
    pub max_eq_violation: f64,
    pub max_ineq_violation: f64,
    /// Projected gradient norm of the Lagrangian at the final multipliers.
    pub stationarity: f64,
    pub wall_ms: f64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Primal/dual estimates carried between solves for warm starting.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub z: Vec<f64>,
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    /// Penalty weight; `None` falls back to the options default.
    pub penalty: Option<f64>,
}

/// Build a warm-start state from a previous solution and multiplier
/// estimates. Empty multiplier vectors behave as a cold start.
pub fn warm_start(
    z: Vec<f64>,
    eq_multipliers: Vec<f64>,
    ineq_multipliers: Vec<f64>,
) -> SolverState {
    SolverState {
        z,
        eq_multipliers,
        ineq_multipliers,
        penalty: None,
    }
}

/// Contract for alternative NLP backends operating on the same problem data.
/// The built-in augmented-Lagrangian method is the only in-tree implementor;
/// external wrappers can plug in here without touching transcription.
pub trait ExternalSolver {
    fn name(&self) -> &str;
    fn solve(
        &mut self,
        nlp: &NlpProblem,
        z0: &[f64],
        options: &SolverOptions,
    ) -> Result<(Vec<f64>, SolveReport)>;
}

/// Built-in solver behind the [`ExternalSolver`] interface.
pub struct AugmentedLagrangian;

impl ExternalSolver for AugmentedLagrangian {
    fn name(&self) -> &str {
        "augmented-lagrangian"
    }
    fn solve(
        &mut self,
        nlp: &NlpProblem,
        z0: &[f64],
        options: &SolverOptions,
    ) -> Result<(Vec<f64>, SolveReport)> {
        solve(nlp, z0, options)
    }
}

/// Cold-start solve from `z0` (projected into bounds if outside).
pub fn solve(
    nlp: &NlpProblem,
    z0: &[f64],
    options: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let state = SolverState {
        z: z0.to_vec(),
        eq_multipliers: Vec::new(),
        ineq_multipliers: Vec::new(),
        penalty: None,
    };
    let (z, report, _) = solve_warm(nlp, state, options)?;
    Ok((z, report))
}

/// Solve from a warm-start state; returns the final state for chaining.
pub fn solve_warm(
    nlp: &NlpProblem,
    state: SolverState,
    options: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport, SolverState)> {
    nlp.validate()?;
    let t0 = Instant::now();
    let n_eq = nlp.num_eq();
    let n_ineq = nlp.num_ineq();

    if state.z.len() != nlp.n_vars {
        return Err(Error::DimensionMismatch {
            context: "warm-start primal vector",
            expected: nlp.n_vars,
            got: state.z.len(),
        });
    }
    let mut lam = match state.eq_multipliers.len() {
        0 => vec![0.0; n_eq],
        n if n == n_eq => state.eq_multipliers,
        n => {
            return Err(Error::DimensionMismatch {
                context: "warm-start equality multipliers",
                expected: n_eq,
                got: n,
            })
        }
    };
    let mut mu = match state.ineq_multipliers.len() {
        0 => vec![0.0; n_ineq],
        n if n == n_ineq => state.ineq_multipliers,
        n => {
            return Err(Error::DimensionMismatch {
                context: "warm-start inequality multipliers",
                expected: n_ineq,
                got: n,
            })
        }
    };
    for m in mu.iter_mut() {
        *m = m.max(0.0);
    }

    if options.audit_jacobians {
        audit_derivatives(
            nlp,
            &state.z,
            options.audit_probes,
            options.audit_rel_tol,
            2024,
        )?;
    }

    let mut z = state.z;
    project(&mut z, &nlp.lower, &nlp.upper);

    let constrained = n_eq + n_ineq > 0;
    let mut rho = state.penalty.unwrap_or(options.initial_penalty).max(1.0);
    let mut omega = if constrained {
        (1.0 / rho).max(0.1 * options.opt_tol)
    } else {
        options.opt_tol
    };
    let mut eta = (1.0 / rho.powf(0.1)).max(0.1 * options.feas_tol);

    let mut status = SolveStatus::MaxIterations;
    let mut outer_done = 0;
    let mut inner_total = 0;
    let mut last_pg = f64::INFINITY;
    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (violation, objective, z)
    let mut cap_stall = 0;

    for outer in 0..options.max_outer {
        let inner = inner_minimize(nlp, &mut z, &lam, &mu, rho, omega, options, outer)?;
        inner_total += inner.iters;
        last_pg = inner.pg;
        outer_done = outer + 1;

        let c = nlp.eq_residuals(&z);
        let g = nlp.ineq_residuals(&z);
        let v_eq = c.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let v_in = g.iter().fold(0.0_f64, |m, &v| m.max(v.max(0.0)));
        let viol = v_eq.max(v_in);
        // Inequality progress is measured against the shifted residual so
        // inactive constraints with positive multipliers still count.
        let comp_in = g
            .iter()
            .zip(&mu)
            .fold(0.0_f64, |m, (&gj, &mj)| m.max(gj.max(-mj / rho).abs()));
        let composite = v_eq.max(comp_in);

        let obj = nlp.objective(&z);
        if best
            .as_ref()
            .map(|(bv, bo, _)| viol < *bv || (viol == *bv && obj < *bo))
            .unwrap_or(true)
        {
            best = Some((viol, obj, z.clone()));
        }

        // The inner loop minimized L(·; λ + ρc, max(0, μ + ρg)) implicitly, so
        // its projected-gradient norm is the stationarity of the updated pair.
        let lam_next: Vec<f64> = lam
            .iter()
            .zip(&c)
            .map(|(&l, &ci)| (l + rho * ci).clamp(-1e12, 1e12))
            .collect();
        let mu_next: Vec<f64> = mu
            .iter()
            .zip(&g)
            .map(|(&m, &gi)| (m + rho * gi).max(0.0).min(1e12))
            .collect();

        if viol <= options.feas_tol && inner.pg <= options.opt_tol {
            lam = lam_next;
            mu = mu_next;
            status = SolveStatus::Converged;
            break;
        }

        if composite <= eta {
            lam = lam_next;
            mu = mu_next;
            eta = (eta / rho.powf(0.9)).max(0.1 * options.feas_tol);
            omega = (omega / rho).max(0.1 * options.opt_tol);
        } else {
            let grown = (rho * options.penalty_growth).min(options.penalty_cap);
            if grown >= options.penalty_cap && rho >= options.penalty_cap {
                cap_stall += 1;
                if cap_stall >= 3 && viol > options.feas_tol {
                    status = SolveStatus::InfeasibleStationary;
                    break;
                }
            }
            rho = grown;
            eta = (1.0 / rho.powf(0.1)).max(0.1 * options.feas_tol);
            omega = (1.0 / rho).max(0.1 * options.opt_tol);
        }
    }

    // On failure, fall back to the best iterate seen rather than the last one.
    if status != SolveStatus::Converged {
        if let Some((bv, _, bz)) = &best {
            let cur = current_violation(nlp, &z);
            if *bv < cur {
                z = bz.clone();
            }
        }
    }

    let c = nlp.eq_residuals(&z);
    let g = nlp.ineq_residuals(&z);
    let report = SolveReport {
        status,
        iterations: outer_done,
        inner_iterations: inner_total,
        objective: nlp.objective(&z),
        max_eq_violation: c.iter().fold(0.0_f64, |m, &v| m.max(v.abs())),
        max_ineq_violation: g.iter().fold(0.0_f64, |m, &v| m.max(v.max(0.0))),
        stationarity: last_pg,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    };
    let final_state = SolverState {
        z: z.clone(),
        eq_multipliers: lam,
        ineq_multipliers: mu,
        penalty: Some(rho),
    };
    Ok((z, report, final_state))
}

fn current_violation(nlp: &NlpProblem, z: &[f64]) -> f64 {
    let c = nlp.eq_residuals(z);
    let g = nlp.ineq_residuals(z);
    c.iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()))
        .max(g.iter().fold(0.0_f64, |m, &v| m.max(v.max(0.0))))
}

fn project(z: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..z.len() {
        z[i] = z[i].clamp(lower[i], upper[i]);
    }
}

fn projected_gradient_norm(z: &[f64], grad: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut norm = 0.0_f64;
    for i in 0..z.len() {
        let step = (z[i] - grad[i]).clamp(lower[i], upper[i]) - z[i];
        norm = norm.max(step.abs());
    }
    norm
}

/// Augmented-Lagrangian value at z; NaN propagates to the caller.
fn merit_value(nlp: &NlpProblem, z: &[f64], lam: &[f64], mu: &[f64], rho: f64) -> f64 {
    let mut val = nlp.objective(z);
    let mut row = 0;
    for b in &nlp.eq_blocks {
        for ci in b.residuals(z) {
            val += lam[row] * ci + 0.5 * rho * ci * ci;
            row += 1;
        }
    }
    row = 0;
    for b in &nlp.ineq_blocks {
        for gi in b.residuals(z) {
            let a = mu[row] + rho * gi;
            if a > 0.0 {
                val += (a * a - mu[row] * mu[row]) / (2.0 * rho);
            } else {
                val += -mu[row] * mu[row] / (2.0 * rho);
            }
            row += 1;
        }
    }
    val
}

/// Merit value and gradient, assembled blockwise: grad = ∇f + Jᵀw with
/// w = λ + ρc on equalities and max(0, μ + ρg) on inequalities.
fn merit_value_and_grad(
    nlp: &NlpProblem,
    z: &[f64],
    lam: &[f64],
    mu: &[f64],
    rho: f64,
    grad: &mut [f64],
) -> f64 {
    grad.fill(0.0);
    let mut val = 0.0;
    for b in &nlp.objective_blocks {
        let (v, local) = b.value_and_gradient(z);
        val += v;
        for (slot, g) in b.vars.iter().zip(local) {
            grad[*slot] += g;
        }
    }
    let mut row = 0;
    for b in &nlp.eq_blocks {
        let (vals, jac) = b.residuals_and_jacobian(z);
        let n_local = b.vars.len();
        for (r, &ci) in vals.iter().enumerate() {
            let w = lam[row + r] + rho * ci;
            val += lam[row + r] * ci + 0.5 * rho * ci * ci;
            for (c, &slot) in b.vars.iter().enumerate() {
                grad[slot] += w * jac[r * n_local + c];
            }
        }
        row += b.dim;
    }
    row = 0;
    for b in &nlp.ineq_blocks {
        let (vals, jac) = b.residuals_and_jacobian(z);
        let n_local = b.vars.len();
        for (r, &gi) in vals.iter().enumerate() {
            let a = mu[row + r] + rho * gi;
            if a > 0.0 {
                val += (a * a - mu[row + r] * mu[row + r]) / (2.0 * rho);
                for (c, &slot) in b.vars.iter().enumerate() {
                    grad[slot] += a * jac[r * n_local + c];
                }
            } else {
                val += -mu[row + r] * mu[row + r] / (2.0 * rho);
            }
        }
        row += b.dim;
    }
    val
}

struct InnerOutcome {
    pg: f64,
    iters: usize,
}

#[allow(clippy::too_many_arguments)]
fn inner_minimize(
    nlp: &NlpProblem,
    z: &mut Vec<f64>,
    lam: &[f64],
    mu: &[f64],
    rho: f64,
    omega: f64,
    options: &SolverOptions,
    outer: usize,
) -> Result<InnerOutcome> {
    let n = z.len();
    let mut grad = vec![0.0; n];
    let mut m = merit_value_and_grad(nlp, z, lam, mu, rho, &mut grad);
    if !m.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::PoisonedEvaluation {
            outer_iter: outer,
            detail: "merit or gradient non-finite at inner-loop entry".into(),
        });
    }

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut iters = 0;
    let mut pg = projected_gradient_norm(z, &grad, &nlp.lower, &nlp.upper);

    while pg > omega && iters < options.max_inner {
        let mut dir = two_loop_direction(&grad, &s_hist, &y_hist);
        let mut dd: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if !dd.is_finite() || dd >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -g;
            }
            dd = -grad.iter().map(|g| g * g).sum::<f64>();
        }

        // Fresh memory: scale the steepest-descent step to unit length.
        let mut alpha = if s_hist.is_empty() {
            let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            (1.0 / gnorm.max(1.0)).min(1.0)
        } else {
            1.0
        };
        let _ = dd;

        let mut accepted = None;
        for _ in 0..60 {
            let mut z_new: Vec<f64> = z.iter().zip(&dir).map(|(&v, d)| v + alpha * d).collect();
            project(&mut z_new, &nlp.lower, &nlp.upper);
            let step_norm = z_new
                .iter()
                .zip(z.iter())
                .fold(0.0_f64, |mx, (a, b)| mx.max((a - b).abs()));
            if step_norm == 0.0 {
                break;
            }
            let decrease: f64 = grad
                .iter()
                .zip(z_new.iter().zip(z.iter()))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            let m_new = merit_value(nlp, &z_new, lam, mu, rho);
            if m_new.is_finite() && m_new <= m + 1e-4 * decrease.min(0.0) && decrease < 0.0 {
                accepted = Some((z_new, m_new));
                break;
            }
            alpha *= 0.5;
        }

        match accepted {
            None => {
                if s_hist.is_empty() {
                    break; // steepest descent stalled: nothing further to try
                }
                s_hist.clear();
                y_hist.clear();
            }
            Some((z_new, _)) => {
                let mut grad_new = vec![0.0; n];
                let m_new = merit_value_and_grad(nlp, &z_new, lam, mu, rho, &mut grad_new);
                if !m_new.is_finite() || grad_new.iter().any(|g| !g.is_finite()) {
                    return Err(Error::PoisonedEvaluation {
                        outer_iter: outer,
                        detail: format!("non-finite merit gradient at inner iteration {iters}"),
                    });
                }
                let s: Vec<f64> = z_new.iter().zip(z.iter()).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                let sn: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                let yn: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if sy > 1e-10 * sn * yn {
                    s_hist.push_back(s);
                    y_hist.push_back(y);
                    if s_hist.len() > options.memory {
                        s_hist.pop_front();
                        y_hist.pop_front();
                    }
                }
                *z = z_new;
                m = m_new;
                grad = grad_new;
                iters += 1;
            }
        }
        pg = projected_gradient_norm(z, &grad, &nlp.lower, &nlp.upper);
    }

    Ok(InnerOutcome { pg, iters })
}

/// Standard two-loop recursion; returns the negated quasi-Newton direction.
fn two_loop_direction(
    grad: &[f64],
    s_hist: &VecDeque<Vec<f64>>,
    y_hist: &VecDeque<Vec<f64>>,
) -> Vec<f64> {
    let mut q = grad.to_vec();
    if s_hist.is_empty() {
        for v in q.iter_mut() {
            *v = -*v;
        }
        return q;
    }
    let k = s_hist.len();
    let mut alphas = vec![0.0; k];
    let mut rhos = vec![0.0; k];
    for i in (0..k).rev() {
        let sy: f64 = s_hist[i].iter().zip(&y_hist[i]).map(|(a, b)| a * b).sum();
        rhos[i] = 1.0 / sy;
        let a = rhos[i] * s_hist[i].iter().zip(&q).map(|(s, q)| s * q).sum::<f64>();
        alphas[i] = a;
        for (qv, yv) in q.iter_mut().zip(&y_hist[i]) {
            *qv -= a * yv;
        }
    }
    let last = k - 1;
    let sy: f64 = s_hist[last]
        .iter()
        .zip(&y_hist[last])
        .map(|(a, b)| a * b)
        .sum();
    let yy: f64 = y_hist[last].iter().map(|v| v * v).sum();
    let gamma = sy / yy;
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for i in 0..k {
        let b = rhos[i] * y_hist[i].iter().zip(&q).map(|(y, q)| y * q).sum::<f64>();
        for (qv, sv) in q.iter_mut().zip(&s_hist[i]) {
            *qv += (alphas[i] - b) * sv;
        }
    }
    for v in q.iter_mut() {
        *v = -*v;
    }
    q
}
