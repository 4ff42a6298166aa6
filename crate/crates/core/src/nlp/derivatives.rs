//! Forward-mode derivative provider: dual-number sweeps and the
//! finite-difference audit used before solves in audit mode.

use super::NlpProblem;
use crate::error::{Error, Result};
use crate::scalar::Dual;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Jacobian triplets (row, col, ∂f_row/∂z_col) of a vector function by one
/// dual sweep per seed column. Exact zeros are omitted.
pub fn forward_derivatives<F>(
    f: F,
    n_out: usize,
    z: &[f64],
    seeds: &[usize],
) -> Result<Vec<(usize, usize, f64)>>
where
    F: Fn(&[Dual], &mut [Dual]),
{
    let mut inputs: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = vec![Dual::constant(0.0); n_out];
    let mut trips = Vec::new();
    for &c in seeds {
        if c >= z.len() {
            return Err(Error::DimensionMismatch {
                context: "forward_derivatives seed",
                expected: z.len(),
                got: c,
            });
        }
        inputs[c].du = 1.0;
        for o in out.iter_mut() {
            *o = Dual::constant(0.0);
        }
        f(&inputs, &mut out);
        inputs[c].du = 0.0;
        for (r, d) in out.iter().enumerate() {
            if !d.re.is_finite() || !d.du.is_finite() {
                return Err(Error::Domain {
                    reason: format!(
                        "non-finite evaluation while differentiating variable {c} (output {r})"
                    ),
                });
            }
            if d.du != 0.0 {
                trips.push((r, c, d.du));
            }
        }
    }
    Ok(trips)
}

/// Gradient of a scalar function by one sweep per variable.
pub fn forward_gradient<F>(f: F, z: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[Dual]) -> Dual,
{
    let mut inputs: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
    let mut grad = vec![0.0; z.len()];
    for c in 0..z.len() {
        inputs[c].du = 1.0;
        let d = f(&inputs);
        inputs[c].du = 0.0;
        if !d.re.is_finite() || !d.du.is_finite() {
            return Err(Error::Domain {
                reason: format!("non-finite evaluation while differentiating variable {c}"),
            });
        }
        grad[c] = d.du;
    }
    Ok(grad)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

/// Randomized audit of every block's dual-sweep Jacobian against central
/// finite differences. Probes perturb `z0`; returns the worst relative gap or
/// an error when it exceeds `rel_tol`.
pub fn audit_derivatives(
    nlp: &NlpProblem,
    z0: &[f64],
    probes: usize,
    rel_tol: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut worst_label = String::new();
    for _ in 0..probes {
        let z: Vec<f64> = z0
            .iter()
            .map(|&v| v + 0.05 * (1.0 + v.abs()) * rng.random_range(-1.0..1.0))
            .collect();
        for block in nlp.eq_blocks.iter().chain(nlp.ineq_blocks.iter()) {
            let (_, jac) = block.residuals_and_jacobian(&z);
            let n_local = block.vars.len();
            let mut locals: Vec<Dual> =
                block.vars.iter().map(|&i| Dual::constant(z[i])).collect();
            let mut out = vec![Dual::constant(0.0); block.dim];
            for c in 0..n_local {
                let h = 6e-6 * (1.0 + locals[c].re.abs());
                let base = locals[c].re;
                locals[c].re = base + h;
                (block.eval)(&locals, &mut out);
                let plus: Vec<f64> = out.iter().map(|d| d.re).collect();
                locals[c].re = base - h;
                for o in out.iter_mut() {
                    *o = Dual::constant(0.0);
                }
                (block.eval)(&locals, &mut out);
                locals[c].re = base;
                for r in 0..block.dim {
                    let fd = (plus[r] - out[r].re) / (2.0 * h);
                    let gap = relative_gap(jac[r * n_local + c], fd);
                    if gap > worst {
                        worst = gap;
                        worst_label = block.label.clone();
                    }
                }
            }
        }
        for block in &nlp.objective_blocks {
            let (_, grad) = block.value_and_gradient(&z);
            let mut locals: Vec<Dual> =
                block.vars.iter().map(|&i| Dual::constant(z[i])).collect();
            for c in 0..block.vars.len() {
                let h = 6e-6 * (1.0 + locals[c].re.abs());
                let base = locals[c].re;
                locals[c].re = base + h;
                let plus = (block.eval)(&locals).re;
                locals[c].re = base - h;
                let minus = (block.eval)(&locals).re;
                locals[c].re = base;
                let fd = (plus - minus) / (2.0 * h);
                let gap = relative_gap(grad[c], fd);
                if gap > worst {
                    worst = gap;
                    worst_label = block.label.clone();
                }
            }
        }
    }
    if worst > rel_tol {
        return Err(Error::Domain {
            reason: format!(
                "jacobian audit failed: relative gap {worst:.3e} in block '{worst_label}' \
                 exceeds {rel_tol:.1e}"
            ),
        });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::{dense_block, dense_objective};
    use crate::scalar::Real;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn sin_derivative_at_zero() {
        let trips = forward_derivatives(
            |z, out| out[0] = z[0].sin(),
            1,
            &[0.0],
            &[0],
        )
        .unwrap();
        assert_eq!(trips, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn dense_jacobian_example() {
        let trips = forward_derivatives(
            |z, out| {
                out[0] = z[0] * z[1];
                out[1] = z[0] + z[1];
            },
            2,
            &[2.0, 3.0],
            &[0, 1],
        )
        .unwrap();
        let mut dense = [[0.0; 2]; 2];
        for (r, c, v) in trips {
            dense[r][c] = v;
        }
        assert_eq!(dense, [[3.0, 2.0], [1.0, 1.0]]);
    }

    #[test]
    fn random_polynomial_matches_central_differences() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 20;
        let coeffs: Vec<(usize, usize, f64)> = (0..40)
            .map(|_| {
                (
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let cs = coeffs.clone();
        let f = move |z: &[Dual], out: &mut [Dual]| {
            out[0] = Dual::constant(0.0);
            out[1] = Dual::constant(1.0);
            for &(i, j, c) in &cs {
                out[0] = out[0] + z[i] * z[j] * c;
                out[1] = out[1] + z[i] * z[i] * z[j] * c;
            }
        };
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let seeds: Vec<usize> = (0..n).collect();
        let trips = forward_derivatives(&f, 2, &z, &seeds).unwrap();
        let mut dense = vec![vec![0.0; n]; 2];
        for (r, c, v) in trips {
            dense[r][c] = v;
        }
        for c in 0..n {
            let h = 1e-6;
            let mut zp = z.clone();
            zp[c] += h;
            let mut zm = z.clone();
            zm[c] -= h;
            let lift = |v: &[f64]| -> Vec<Dual> { v.iter().map(|&x| Dual::constant(x)).collect() };
            let mut op = [Dual::constant(0.0); 2];
            let mut om = [Dual::constant(0.0); 2];
            f(&lift(&zp), &mut op);
            f(&lift(&zm), &mut om);
            for r in 0..2 {
                let fd = (op[r].re - om[r].re) / (2.0 * h);
                let rel = (dense[r][c] - fd).abs() / 1.0_f64.max(fd.abs());
                assert!(rel < 1e-6, "entry ({r},{c}): {} vs {}", dense[r][c], fd);
            }
        }
    }

    #[test]
    fn sqrt_of_negative_reports_domain_error() {
        let err = forward_derivatives(
            |z, out| out[0] = z[0].sqrt(),
            1,
            &[-1.0],
            &[0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        let msg = err.to_string();
        assert!(msg.contains("variable 0"), "message was: {msg}");
    }

    #[test]
    fn audit_passes_smooth_problem_and_catches_wrong_jacobian() {
        let mut nlp = crate::nlp::NlpProblem::new(3);
        nlp.objective_blocks.push(dense_objective("obj", 3, |z| {
            z[0] * z[0] + (z[1] * z[2]).sin()
        }));
        nlp.eq_blocks.push(dense_block("eq", 1, 3, |z, out| {
            out[0] = z[0] * z[1] + z[2].exp();
        }));
        let worst = audit_derivatives(&nlp, &[0.3, -0.2, 0.5], 20, 1e-5, 7).unwrap();
        assert!(worst < 1e-5);

        // A block whose value path disagrees with its derivative path: the
        // audit must flag it.
        nlp.eq_blocks.push(ConstraintBlockBroken::block());
        assert!(audit_derivatives(&nlp, &[0.3, -0.2, 0.5], 5, 1e-5, 7).is_err());
    }

    struct ConstraintBlockBroken;
    impl ConstraintBlockBroken {
        fn block() -> crate::nlp::ConstraintBlock {
            crate::nlp::ConstraintBlock {
                label: "broken".into(),
                dim: 1,
                vars: vec![0],
                eval: Box::new(|z, out| {
                    // Derivative payload deliberately dropped.
                    out[0] = Dual::constant(z[0].re * z[0].re);
                }),
            }
        }
    }
}
