//! Sparse NLP data model with a forward-mode derivative provider and a
//! built-in augmented-Lagrangian solver.
//!
//! A problem is a set of blocks. Each block names the global decision
//! variables it reads (`vars`) and evaluates its residuals on that gathered
//! local slice, so Jacobians are dense per block and sparse globally.

pub mod derivatives;
pub mod solver;

pub use derivatives::{audit_derivatives, forward_derivatives, forward_gradient};
pub use solver::{
    solve, solve_warm, warm_start, ExternalSolver, SolveReport, SolveStatus, SolverOptions,
    SolverState,
};

use crate::error::{Error, Result};
use crate::scalar::Dual;

pub type BlockEvalFn = Box<dyn Fn(&[Dual], &mut [Dual]) + Send + Sync>;
pub type ObjectiveEvalFn = Box<dyn Fn(&[Dual]) -> Dual + Send + Sync>;

/// Additive objective contribution reading a subset of the variables.
pub struct ObjectiveBlock {
    pub label: String,
    pub vars: Vec<usize>,
    pub eval: ObjectiveEvalFn,
}

/// Residual block: `dim` outputs computed from the gathered `vars` slice.
/// Equality blocks demand residual = 0; inequality blocks demand residual ≤ 0.
pub struct ConstraintBlock {
    pub label: String,
    pub dim: usize,
    pub vars: Vec<usize>,
    pub eval: BlockEvalFn,
}

impl ConstraintBlock {
    fn gather(&self, z: &[f64]) -> Vec<Dual> {
        self.vars.iter().map(|&i| Dual::constant(z[i])).collect()
    }

    /// Residual values at z.
    pub fn residuals(&self, z: &[f64]) -> Vec<f64> {
        let locals = self.gather(z);
        let mut out = vec![Dual::constant(0.0); self.dim];
        (self.eval)(&locals, &mut out);
        out.into_iter().map(|d| d.re).collect()
    }

    /// Residuals plus the dense local Jacobian (row-major, dim × vars.len()),
    /// one forward sweep per local variable.
    pub fn residuals_and_jacobian(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_local = self.vars.len();
        let mut locals = self.gather(z);
        let mut out = vec![Dual::constant(0.0); self.dim];
        let mut values = vec![0.0; self.dim];
        let mut jac = vec![0.0; self.dim * n_local];
        if n_local == 0 {
            (self.eval)(&locals, &mut out);
            for (v, d) in values.iter_mut().zip(&out) {
                *v = d.re;
            }
            return (values, jac);
        }
        for c in 0..n_local {
            locals[c].du = 1.0;
            for o in out.iter_mut() {
                *o = Dual::constant(0.0);
            }
            (self.eval)(&locals, &mut out);
            locals[c].du = 0.0;
            for (r, d) in out.iter().enumerate() {
                jac[r * n_local + c] = d.du;
                if c == 0 {
                    values[r] = d.re;
                }
            }
        }
        (values, jac)
    }
}

impl ObjectiveBlock {
    fn gather(&self, z: &[f64]) -> Vec<Dual> {
        self.vars.iter().map(|&i| Dual::constant(z[i])).collect()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        (self.eval)(&self.gather(z)).re
    }

    /// Value plus local gradient, one sweep per variable.
    pub fn value_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut locals = self.gather(z);
        let mut grad = vec![0.0; self.vars.len()];
        if locals.is_empty() {
            return ((self.eval)(&locals).re, grad);
        }
        let mut value = 0.0;
        for c in 0..locals.len() {
            locals[c].du = 1.0;
            let d = (self.eval)(&locals);
            locals[c].du = 0.0;
            grad[c] = d.du;
            if c == 0 {
                value = d.re;
            }
        }
        (value, grad)
    }
}

/// Flattened NLP: minimize the sum of objective blocks subject to equality and
/// inequality blocks and variable bounds (±∞ allowed).
pub struct NlpProblem {
    pub n_vars: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective_blocks: Vec<ObjectiveBlock>,
    pub eq_blocks: Vec<ConstraintBlock>,
    pub ineq_blocks: Vec<ConstraintBlock>,
}

impl NlpProblem {
    /// Unconstrained, unbounded shell with no blocks yet.
    pub fn new(n_vars: usize) -> Self {
        NlpProblem {
            n_vars,
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            objective_blocks: Vec::new(),
            eq_blocks: Vec::new(),
            ineq_blocks: Vec::new(),
        }
    }

    pub fn num_eq(&self) -> usize {
        self.eq_blocks.iter().map(|b| b.dim).sum()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_blocks.iter().map(|b| b.dim).sum()
    }

    /// Structural sanity: bound ordering, block variable indices in range.
    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.n_vars || self.upper.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                context: "bound vectors",
                expected: self.n_vars,
                got: self.lower.len().min(self.upper.len()),
            });
        }
        for i in 0..self.n_vars {
            if self.lower[i] > self.upper[i] {
                return Err(Error::Domain {
                    reason: format!(
                        "lower bound {} above upper bound {} at variable {i}",
                        self.lower[i], self.upper[i]
                    ),
                });
            }
        }
        let all_blocks = self.eq_blocks.iter().chain(self.ineq_blocks.iter());
        for b in all_blocks {
            if let Some(&bad) = b.vars.iter().find(|&&v| v >= self.n_vars) {
                return Err(Error::Domain {
                    reason: format!("block '{}' references variable {bad}", b.label),
                });
            }
        }
        for b in &self.objective_blocks {
            if let Some(&bad) = b.vars.iter().find(|&&v| v >= self.n_vars) {
                return Err(Error::Domain {
                    reason: format!("objective block '{}' references variable {bad}", b.label),
                });
            }
        }
        Ok(())
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.objective_blocks.iter().map(|b| b.value(z)).sum()
    }

    pub fn objective_gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.n_vars];
        for b in &self.objective_blocks {
            let (_, local) = b.value_and_gradient(z);
            for (slot, g) in b.vars.iter().zip(local) {
                grad[*slot] += g;
            }
        }
        grad
    }

    fn stacked_residuals(blocks: &[ConstraintBlock], z: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(blocks.iter().map(|b| b.dim).sum());
        for b in blocks {
            out.extend(b.residuals(z));
        }
        out
    }

    pub fn eq_residuals(&self, z: &[f64]) -> Vec<f64> {
        Self::stacked_residuals(&self.eq_blocks, z)
    }

    pub fn ineq_residuals(&self, z: &[f64]) -> Vec<f64> {
        Self::stacked_residuals(&self.ineq_blocks, z)
    }

    fn stacked_jacobian(blocks: &[ConstraintBlock], z: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut trips = Vec::new();
        let mut row0 = 0;
        for b in blocks {
            let (_, jac) = b.residuals_and_jacobian(z);
            let n_local = b.vars.len();
            for r in 0..b.dim {
                for (c, &col) in b.vars.iter().enumerate() {
                    let v = jac[r * n_local + c];
                    if v != 0.0 {
                        trips.push((row0 + r, col, v));
                    }
                }
            }
            row0 += b.dim;
        }
        trips
    }

    /// Equality Jacobian as (row, col, value) triplets; structural zeros and
    /// exact numeric zeros are omitted.
    pub fn eq_jacobian(&self, z: &[f64]) -> Vec<(usize, usize, f64)> {
        Self::stacked_jacobian(&self.eq_blocks, z)
    }

    pub fn ineq_jacobian(&self, z: &[f64]) -> Vec<(usize, usize, f64)> {
        Self::stacked_jacobian(&self.ineq_blocks, z)
    }

    /// Per-block sparsity summary (structural triplet counts) for debugging.
    pub fn sparsity_report(&self) -> serde_json::Value {
        let describe = |blocks: &[ConstraintBlock]| -> Vec<serde_json::Value> {
            blocks
                .iter()
                .map(|b| {
                    serde_json::json!({
                        "label": b.label,
                        "rows": b.dim,
                        "vars": b.vars.len(),
                        "triplets": b.dim * b.vars.len(),
                    })
                })
                .collect()
        };
        serde_json::json!({
            "n_vars": self.n_vars,
            "equality_blocks": describe(&self.eq_blocks),
            "inequality_blocks": describe(&self.ineq_blocks),
            "objective_blocks": self.objective_blocks.iter().map(|b| {
                serde_json::json!({"label": b.label, "vars": b.vars.len()})
            }).collect::<Vec<_>>(),
        })
    }
}

/// Convenience for tests and small models: a dense equality/inequality block
/// over all variables.
pub fn dense_block<F>(label: &str, dim: usize, n_vars: usize, f: F) -> ConstraintBlock
where
    F: Fn(&[Dual], &mut [Dual]) + Send + Sync + 'static,
{
    ConstraintBlock {
        label: label.to_string(),
        dim,
        vars: (0..n_vars).collect(),
        eval: Box::new(f),
    }
}

/// Dense objective over all variables.
pub fn dense_objective<F>(label: &str, n_vars: usize, f: F) -> ObjectiveBlock
where
    F: Fn(&[Dual]) -> Dual + Send + Sync + 'static,
{
    ObjectiveBlock {
        label: label.to_string(),
        vars: (0..n_vars).collect(),
        eval: Box::new(f),
    }
}
