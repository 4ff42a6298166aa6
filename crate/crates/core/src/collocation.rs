//! Legendre-Gauss-Radau collocation machinery on the unit segment.
//!
//! Flipped-Radau convention: the d nodes live in (0, 1] with the segment end
//! included, so the last collocation state doubles as the segment-end state.
//! Interpolation runs on the extended support {0} ∪ nodes, which carries the
//! known segment-start value.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::collections::HashMap;
use std::fmt;

/// Nodes, weights, and differentiation data for one polynomial degree.
#[derive(Clone, Debug)]
pub struct CollocationScheme {
    /// Number of collocation nodes per segment.
    pub degree: usize,
    /// Collocation nodes in (0, 1], ascending, last exactly 1.
    pub nodes: Vec<f64>,
    /// Interpolation support: {0} ∪ nodes, length degree + 1.
    pub support: Vec<f64>,
    /// Quadrature weights over the nodes; positive, summing to 1.
    pub quad_weights: Vec<f64>,
    /// Row j = derivative of the support interpolant evaluated at nodes[j].
    pub diff_matrix: Vec<Vec<f64>>,
    /// Barycentric weights of `support`, normalized to unit max magnitude.
    pub bary_weights: Vec<f64>,
}

impl CollocationScheme {
    pub fn new(degree: usize) -> Result<Self> {
        let nodes = compute_lgr_nodes(degree)?;
        let mut support = Vec::with_capacity(degree + 1);
        support.push(0.0);
        support.extend_from_slice(&nodes);
        let quad_weights = compute_quadrature_weights(&nodes)?;
        let diff_matrix = compute_diff_matrix(&support)?;
        let bary_weights = barycentric_weights(&support)?;
        Ok(CollocationScheme {
            degree,
            nodes,
            support,
            quad_weights,
            diff_matrix,
            bary_weights,
        })
    }
}

impl fmt::Display for CollocationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LGR scheme, degree {}", self.degree)?;
        writeln!(f, "{:>4}  {:>24}  {:>24}", "j", "node", "quad weight")?;
        for j in 0..self.degree {
            writeln!(
                f,
                "{:>4}  {:>24.17e}  {:>24.17e}",
                j + 1,
                self.nodes[j],
                self.quad_weights[j]
            )?;
        }
        Ok(())
    }
}

/// Memoized schemes keyed by degree; transcription pulls from here so repeated
/// phases share node computations.
#[derive(Default)]
pub struct SchemeCache {
    map: HashMap<usize, CollocationScheme>,
}

impl SchemeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, degree: usize) -> Result<&CollocationScheme> {
        if !self.map.contains_key(&degree) {
            let scheme = CollocationScheme::new(degree)?;
            self.map.insert(degree, scheme);
        }
        Ok(&self.map[&degree])
    }
}

/// P_n(s) and P_n'(s) on [-1, 1] by the three-term recurrence.
fn legendre_with_derivative(n: usize, s: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, s);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * s * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Value of the flipped-Radau polynomial P_{d-1}(s) - P_d(s) at s = 2t - 1.
/// Zero (to roundoff) at every collocation node, including t = 1.
pub fn radau_residual(degree: usize, t: f64) -> f64 {
    let s = 2.0 * t - 1.0;
    let (p_d, _) = legendre_with_derivative(degree, s);
    let (p_dm1, _) = legendre_with_derivative(degree.saturating_sub(1), s);
    p_dm1 - p_d
}

fn radau_value_derivative(degree: usize, s: f64) -> (f64, f64) {
    let (p_d, d_d) = legendre_with_derivative(degree, s);
    let (p_dm1, d_dm1) = legendre_with_derivative(degree - 1, s);
    (p_dm1 - p_d, d_dm1 - d_d)
}

/// Flipped (right) Radau nodes of the given degree, mapped to (0, 1].
pub fn compute_lgr_nodes(degree: usize) -> Result<Vec<f64>> {
    if degree == 0 {
        return Err(Error::InvalidDegree { degree });
    }
    if degree > 20 {
        eprintln!(
            "warning: collocation degree {degree} > 20; node computation proceeds \
             but interpolation is increasingly ill-conditioned"
        );
    }
    // The d-th node is the included endpoint s = 1; the remaining d-1 roots are
    // interior and found by bracketed bisection plus a Newton polish.
    let wanted = degree - 1;
    let mut roots = Vec::with_capacity(wanted);
    if wanted > 0 {
        let mut grid_n = 50 * degree;
        loop {
            roots.clear();
            let hi = 1.0 - 1e-6;
            let lo = -1.0;
            let mut prev_s = lo;
            let mut prev_v = radau_value_derivative(degree, lo).0;
            for i in 1..=grid_n {
                let s = lo + (hi - lo) * i as f64 / grid_n as f64;
                let v = radau_value_derivative(degree, s).0;
                if prev_v == 0.0 {
                    roots.push(prev_s);
                } else if prev_v * v < 0.0 {
                    roots.push(refine_root(degree, prev_s, s));
                }
                prev_s = s;
                prev_v = v;
            }
            if roots.len() == wanted {
                break;
            }
            grid_n *= 2;
            if grid_n > 50 * degree * 16 {
                return Err(Error::DegenerateNodes {
                    detail: format!(
                        "found {} of {} interior Radau roots at degree {}",
                        roots.len(),
                        wanted,
                        degree
                    ),
                });
            }
        }
    }
    let mut nodes: Vec<f64> = roots.iter().map(|s| (s + 1.0) / 2.0).collect();
    nodes.push(1.0);
    Ok(nodes)
}

fn refine_root(degree: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = radau_value_derivative(degree, lo).0;
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        let f_mid = radau_value_derivative(degree, mid).0;
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (v, d) = radau_value_derivative(degree, s);
        if d == 0.0 {
            break;
        }
        let step = v / d;
        let next = s - step;
        if next > lo - 1e-12 && next < hi + 1e-12 {
            s = next;
        }
    }
    s
}

/// Gauss-Legendre rule with n points on [0, 1]; used to integrate the Lagrange
/// basis when forming Radau quadrature weights.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Roots of P_n on (-1, 1), bracketed on a grid then bisected.
    let mut roots = Vec::with_capacity(n);
    let grid_n = 60 * n.max(1);
    let mut prev_s = -1.0;
    let mut prev_v = legendre_with_derivative(n, prev_s).0;
    for i in 1..=grid_n {
        let s = -1.0 + 2.0 * i as f64 / grid_n as f64;
        let v = legendre_with_derivative(n, s).0;
        if v == 0.0 {
            // Grid point is an exact root (s = 0 for odd n).
            roots.push(s);
        } else if prev_v * v < 0.0 {
            let (mut lo, mut hi, mut f_lo) = (prev_s, s, prev_v);
            while hi - lo > 1e-15 {
                let mid = 0.5 * (lo + hi);
                let f_mid = legendre_with_derivative(n, mid).0;
                if f_lo * f_mid <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    f_lo = f_mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_s = s;
        prev_v = v;
    }
    debug_assert_eq!(roots.len(), n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &s in &roots {
        let (_, d) = legendre_with_derivative(n, s);
        let w = 2.0 / ((1.0 - s * s) * d * d);
        nodes.push((s + 1.0) / 2.0);
        weights.push(w / 2.0);
    }
    (nodes, weights)
}

fn check_strictly_increasing(points: &[f64]) -> Result<()> {
    for i in 1..points.len() {
        if points[i] <= points[i - 1] {
            return Err(Error::DegenerateNodes {
                detail: format!(
                    "points not strictly increasing at index {i}: {} then {}",
                    points[i - 1],
                    points[i]
                ),
            });
        }
    }
    Ok(())
}

/// Quadrature weight B_j = ∫₀¹ ℓ_j(t) dt with ℓ_j the Lagrange basis over the
/// collocation nodes alone (degree d-1 polynomials).
pub fn compute_quadrature_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    if nodes.is_empty() {
        return Err(Error::DegenerateNodes {
            detail: "empty node set".into(),
        });
    }
    check_strictly_increasing(nodes)?;
    if nodes.len() == 1 {
        return Ok(vec![1.0]);
    }
    let w = barycentric_weights(nodes)?;
    let (gl_nodes, gl_weights) = gauss_legendre_unit(nodes.len() + 2);
    let mut out = vec![0.0; nodes.len()];
    for (&t, &gw) in gl_nodes.iter().zip(&gl_weights) {
        // Evaluate every basis function at t via the second barycentric form.
        let mut terms = Vec::with_capacity(nodes.len());
        let mut denom = 0.0;
        for (j, &tj) in nodes.iter().enumerate() {
            let term = w[j] / (t - tj);
            terms.push(term);
            denom += term;
        }
        for j in 0..nodes.len() {
            out[j] += gw * terms[j] / denom;
        }
    }
    Ok(out)
}

/// Barycentric weights of a support set, normalized to unit max magnitude.
pub fn barycentric_weights(support: &[f64]) -> Result<Vec<f64>> {
    check_strictly_increasing(support)?;
    let n = support.len();
    let mut w = vec![1.0; n];
    for i in 0..n {
        for k in 0..n {
            if k != i {
                w[i] /= support[i] - support[k];
            }
        }
    }
    let scale = w.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateNodes {
            detail: "barycentric weights degenerate".into(),
        });
    }
    for v in &mut w {
        *v /= scale;
    }
    Ok(w)
}

/// Square differentiation matrix on the full support: entry [r][i] is the
/// derivative of basis ℓ_i at support[r]. Diagonal entries are the negated row
/// sums, so each row sums to zero by construction.
pub fn diff_matrix_full(support: &[f64]) -> Result<Vec<Vec<f64>>> {
    let w = barycentric_weights(support)?;
    let n = support.len();
    let mut d = vec![vec![0.0; n]; n];
    for r in 0..n {
        let mut diag = 0.0;
        for i in 0..n {
            if i != r {
                let entry = (w[i] / w[r]) / (support[r] - support[i]);
                d[r][i] = entry;
                diag -= entry;
            }
        }
        d[r][r] = diag;
    }
    Ok(d)
}

/// Differentiation matrix rows at the collocation nodes (support minus the
/// leading 0): the d×(d+1) operator appearing in the collocation constraints.
pub fn compute_diff_matrix(support: &[f64]) -> Result<Vec<Vec<f64>>> {
    let full = diff_matrix_full(support)?;
    Ok(full.into_iter().skip(1).collect())
}

/// Evaluate the vector-valued interpolant over `support` at t via the second
/// barycentric form. Queries within 1e-14 of a support point return that
/// sample exactly.
pub fn barycentric_interpolate<T: Real>(
    support: &[f64],
    weights: &[f64],
    samples: &[Vec<T>],
    t: f64,
) -> Result<Vec<T>> {
    if support.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            context: "barycentric_interpolate samples",
            expected: support.len(),
            got: samples.len(),
        });
    }
    if weights.len() != support.len() {
        return Err(Error::DimensionMismatch {
            context: "barycentric_interpolate weights",
            expected: support.len(),
            got: weights.len(),
        });
    }
    for (k, &tk) in support.iter().enumerate() {
        if (t - tk).abs() < 1e-14 {
            return Ok(samples[k].clone());
        }
    }
    let dim = samples.first().map_or(0, |s| s.len());
    let mut num = vec![T::zero(); dim];
    let mut denom = 0.0;
    for (k, sample) in samples.iter().enumerate() {
        if sample.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "barycentric_interpolate sample width",
                expected: dim,
                got: sample.len(),
            });
        }
        let c = weights[k] / (t - support[k]);
        denom += c;
        for (acc, &v) in num.iter_mut().zip(sample) {
            *acc += T::from_f64(c) * v;
        }
    }
    let inv = T::from_f64(1.0 / denom);
    for v in &mut num {
        *v = *v * inv;
    }
    Ok(num)
}

/// Derivative samples of the interpolant at every support point:
/// rows of `diff_matrix_full` applied to the samples.
pub fn derivative_samples(full_diff: &[Vec<f64>], samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = samples.first().map_or(0, |s| s.len());
    full_diff
        .iter()
        .map(|row| {
            let mut out = vec![0.0; dim];
            for (&c, sample) in row.iter().zip(samples) {
                for (o, &v) in out.iter_mut().zip(sample) {
                    *o += c * v;
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(matches!(
            compute_lgr_nodes(0),
            Err(Error::InvalidDegree { degree: 0 })
        ));
    }

    #[test]
    fn nodes_match_closed_forms() {
        let n1 = compute_lgr_nodes(1).unwrap();
        assert_eq!(n1, vec![1.0]);

        let n2 = compute_lgr_nodes(2).unwrap();
        close(n2[0], 1.0 / 3.0, 1e-14);
        assert_eq!(n2[1], 1.0);

        let n3 = compute_lgr_nodes(3).unwrap();
        let s6 = 6.0_f64.sqrt();
        close(n3[0], (4.0 - s6) / 10.0, 1e-14);
        close(n3[1], (4.0 + s6) / 10.0, 1e-14);
        assert_eq!(n3[2], 1.0);
    }

    #[test]
    fn nodes_are_converged_roots() {
        for d in 1..=8 {
            let nodes = compute_lgr_nodes(d).unwrap();
            assert_eq!(nodes.len(), d);
            for &t in &nodes {
                assert!(t > 0.0 && t <= 1.0);
                assert!(
                    radau_residual(d, t).abs() < 1e-13,
                    "degree {d} node {t} residual {}",
                    radau_residual(d, t)
                );
            }
            for i in 1..d {
                assert!(nodes[i] > nodes[i - 1]);
            }
            assert_eq!(nodes[d - 1], 1.0);
        }
    }

    #[test]
    fn quadrature_weights_match_closed_forms() {
        assert_eq!(compute_quadrature_weights(&[1.0]).unwrap(), vec![1.0]);
        let w = compute_quadrature_weights(&[1.0 / 3.0, 1.0]).unwrap();
        close(w[0], 0.75, 1e-14);
        close(w[1], 0.25, 1e-14);
    }

    #[test]
    fn quadrature_weights_positive_and_normalized() {
        for d in 1..=8 {
            let nodes = compute_lgr_nodes(d).unwrap();
            let w = compute_quadrature_weights(&nodes).unwrap();
            assert!(w.iter().all(|&v| v > 0.0));
            close(w.iter().sum::<f64>(), 1.0, 1e-13);
        }
    }

    #[test]
    fn quadrature_exactness_boundary_at_degree_three() {
        // Degree 3 integrates monomials through t^4 (= 2d-2) exactly and first
        // fails at t^5.
        let nodes = compute_lgr_nodes(3).unwrap();
        let w = compute_quadrature_weights(&nodes).unwrap();
        for m in 0..=4usize {
            let q: f64 = nodes
                .iter()
                .zip(&w)
                .map(|(&t, &b)| b * t.powi(m as i32))
                .sum();
            close(q, 1.0 / (m as f64 + 1.0), 1e-13);
        }
        let q5: f64 = nodes.iter().zip(&w).map(|(&t, &b)| b * t.powi(5)).sum();
        assert!((q5 - 1.0 / 6.0).abs() > 1e-6);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        assert!(matches!(
            compute_quadrature_weights(&[0.5, 0.5]),
            Err(Error::DegenerateNodes { .. })
        ));
        assert!(matches!(
            compute_diff_matrix(&[0.0, 0.3, 0.3, 1.0]),
            Err(Error::DegenerateNodes { .. })
        ));
    }

    #[test]
    fn diff_matrix_closed_forms() {
        let d1 = compute_diff_matrix(&[0.0, 1.0]).unwrap();
        assert_eq!(d1.len(), 1);
        close(d1[0][0], -1.0, 1e-14);
        close(d1[0][1], 1.0, 1e-14);

        // f(t) = t on {0, 1/3, 1}: derivative 1 at both nodes.
        let support = [0.0, 1.0 / 3.0, 1.0];
        let d = compute_diff_matrix(&support).unwrap();
        for row in &d {
            let v: f64 = row.iter().zip(&support).map(|(c, t)| c * t).sum();
            close(v, 1.0, 1e-13);
        }
        // f(t) = t^2: derivative 2t -> [2/3, 2].
        let expect = [2.0 / 3.0, 2.0];
        for (row, e) in d.iter().zip(expect) {
            let v: f64 = row.iter().zip(&support).map(|(c, t)| c * t * t).sum();
            close(v, e, 1e-13);
        }
    }

    #[test]
    fn diff_matrix_rows_sum_to_zero() {
        for d in 1..=8 {
            let scheme = CollocationScheme::new(d).unwrap();
            for row in &scheme.diff_matrix {
                let s: f64 = row.iter().sum();
                assert!(s.abs() < 1e-12, "degree {d} row sum {s}");
            }
        }
    }

    #[test]
    fn interpolation_hits_support_exactly() {
        let scheme = CollocationScheme::new(3).unwrap();
        let samples: Vec<Vec<f64>> = scheme
            .support
            .iter()
            .map(|&t| vec![t.sin(), t * t])
            .collect();
        for (k, &t) in scheme.support.iter().enumerate() {
            let v =
                barycentric_interpolate(&scheme.support, &scheme.bary_weights, &samples, t)
                    .unwrap();
            assert_eq!(v, samples[k]);
        }
    }

    #[test]
    fn interpolation_reproduces_quadratic() {
        let support = vec![0.0, 1.0 / 3.0, 1.0];
        let w = barycentric_weights(&support).unwrap();
        let samples: Vec<Vec<f64>> = support.iter().map(|&t| vec![t * t]).collect();
        let v = barycentric_interpolate(&support, &w, &samples, 0.5).unwrap();
        close(v[0], 0.25, 1e-15);
    }

    #[test]
    fn interpolation_matches_direct_polynomial_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=6usize {
            let scheme = CollocationScheme::new(d).unwrap();
            let coeffs: Vec<f64> = (0..=d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let poly = |t: f64| {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            };
            let samples: Vec<Vec<f64>> =
                scheme.support.iter().map(|&t| vec![poly(t)]).collect();
            for _ in 0..100 {
                let t: f64 = rng.random_range(0.0..1.0);
                let v = barycentric_interpolate(
                    &scheme.support,
                    &scheme.bary_weights,
                    &samples,
                    t,
                )
                .unwrap();
                close(v[0], poly(t), 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_matches_naive_lagrange_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scheme = CollocationScheme::new(5).unwrap();
        let samples: Vec<Vec<f64>> = scheme
            .support
            .iter()
            .map(|_| vec![rng.random_range(-1.0..1.0)])
            .collect();
        let naive = |t: f64| {
            let mut acc = 0.0;
            for (i, s) in samples.iter().enumerate() {
                let mut l = 1.0;
                for (k, &tk) in scheme.support.iter().enumerate() {
                    if k != i {
                        l *= (t - tk) / (scheme.support[i] - tk);
                    }
                }
                acc += l * s[0];
            }
            acc
        };
        for _ in 0..200 {
            let t: f64 = rng.random_range(0.0..1.0);
            let v = barycentric_interpolate(&scheme.support, &scheme.bary_weights, &samples, t)
                .unwrap();
            close(v[0], naive(t), 1e-11);
        }
    }

    #[test]
    fn sample_count_mismatch_rejected() {
        let scheme = CollocationScheme::new(2).unwrap();
        let samples = vec![vec![0.0]; 2];
        assert!(matches!(
            barycentric_interpolate(&scheme.support, &scheme.bary_weights, &samples, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn derivative_samples_reproduce_polynomial_derivative() {
        let scheme = CollocationScheme::new(4).unwrap();
        let full = diff_matrix_full(&scheme.support).unwrap();
        let samples: Vec<Vec<f64>> = scheme
            .support
            .iter()
            .map(|&t| vec![t * t * t - 0.5 * t])
            .collect();
        let derivs = derivative_samples(&full, &samples);
        for (row, &t) in derivs.iter().zip(&scheme.support) {
            close(row[0], 3.0 * t * t - 0.5, 1e-12);
        }
    }

    #[test]
    fn scheme_debug_table_prints_17_digits() {
        let scheme = CollocationScheme::new(2).unwrap();
        let text = format!("{scheme}");
        assert!(text.contains("degree 2"));
        assert!(text.contains("e0") || text.contains("e-"));
    }
}
