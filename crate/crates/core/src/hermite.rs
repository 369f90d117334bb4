//! Hermite functions, composite Gauss-Legendre quadrature and expansion in
//! the Hermite basis.
//!
//! `phi_n` are the L2-normalized eigenfunctions of `H = -d^2/dx^2 + x^2`,
//! `H phi_n = (2n+1) phi_n`, generated from `phi_0 = pi^{-1/4} exp(-x^2/2)`
//! by the creation operator. They are evaluated with the normalized
//! three-term recurrence
//!
//! ```text
//! phi_{n+1}(x) = x sqrt(2/(n+1)) phi_n(x) - sqrt(n/(n+1)) phi_{n-1}(x)
//! ```
//!
//! which stays in range for every index used here (up to a few hundred);
//! the explicit Hermite polynomials overflow long before that.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::HermiteSequence;

/// Largest index the library is exercised at.
pub const DESK_N_MAX: usize = 128;

/// `phi_n(x)`.
pub fn eval_hermite(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[phi_0(x), ..., phi_{n_max}(x)]` in one pass of the recurrence.
pub fn eval_hermite_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    fill_hermite(n_max, x, &mut out);
    out
}

fn fill_hermite(n_max: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max == 0 {
        return;
    }
    out.push(2f64.sqrt() * x * out[0]);
    for k in 1..n_max {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
}

/// Row-major table `t[i * (n_max + 1) + k] = phi_k(nodes[i])`.
pub fn hermite_table(n_max: usize, nodes: &[f64]) -> Vec<f64> {
    let width = n_max + 1;
    let mut table = Vec::with_capacity(nodes.len() * width);
    let mut row = Vec::with_capacity(width);
    for &x in nodes {
        fill_hermite(n_max, x, &mut row);
        table.extend_from_slice(&row);
    }
    table
}

/// Default integration half-width for products involving `phi_k`, `k <= n_max`:
/// the classical turning point of `phi_{2 n_max}` plus a decay pad.
pub fn default_half_width(n_max: usize) -> f64 {
    (2.0 * (2.0 * n_max as f64 + 1.0)).sqrt() + 6.0
}

/// Evaluator for `phi_0 .. phi_{n_max}` and their derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermiteBasis {
    pub n_max: usize,
}

impl HermiteBasis {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        eval_hermite(n, x)
    }

    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        eval_hermite_all(self.n_max, x)
    }

    /// `phi_n'(x) = -sqrt((n+1)/2) phi_{n+1}(x) + sqrt(n/2) phi_{n-1}(x)`.
    pub fn derivative(&self, n: usize, x: f64) -> f64 {
        let phi = eval_hermite_all(n + 1, x);
        ladder_derivative(&phi, n)
    }

    /// `phi_n''` from two applications of the ladder identity.
    pub fn second_derivative(&self, n: usize, x: f64) -> f64 {
        let phi = eval_hermite_all(n + 2, x);
        let nf = n as f64;
        let up = -((nf + 1.0) / 2.0).sqrt() * ladder_derivative(&phi, n + 1);
        let down = if n > 0 {
            (nf / 2.0).sqrt() * ladder_derivative(&phi, n - 1)
        } else {
            0.0
        };
        up + down
    }

    pub fn default_quadrature(&self) -> QuadratureRule {
        QuadratureRule::for_products(self.n_max)
    }
}

fn ladder_derivative(phi: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    let lower = if n > 0 { phi[n - 1] } else { 0.0 };
    -((nf + 1.0) / 2.0).sqrt() * phi[n + 1] + (nf / 2.0).sqrt() * lower
}

/// Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let step = p / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = z;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * z * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (z * p - p_prev) / (z * z - 1.0);
    (p, dp)
}

/// Composite Gauss-Legendre rule on `[-half_width, half_width]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    half_width: f64,
    panels: usize,
    order_per_panel: usize,
}

impl QuadratureRule {
    pub fn composite_gauss_legendre(
        half_width: f64,
        panels: usize,
        order_per_panel: usize,
    ) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature half-width must be positive, got {half_width}"
            )));
        }
        if panels == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one panel".into()));
        }
        if order_per_panel < 2 {
            return Err(Error::InvalidParameter(format!(
                "order per panel must be at least 2, got {order_per_panel}"
            )));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(order_per_panel);
        let h = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order_per_panel);
        let mut weights = Vec::with_capacity(panels * order_per_panel);
        for p in 0..panels {
            let left = -half_width + p as f64 * h;
            for (t, w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(left + 0.5 * h * (1.0 + t));
                weights.push(0.5 * h * w);
            }
        }
        Ok(Self {
            nodes,
            weights,
            half_width,
            panels,
            order_per_panel,
        })
    }

    /// A rule adequate for integrals of `phi_m phi_n` (times smooth,
    /// slowly varying factors) with `m, n <= n_max`.
    pub fn for_products(n_max: usize) -> Self {
        let half_width = default_half_width(n_max);
        let panels = (2.0 * half_width).ceil() as usize;
        Self::composite_gauss_legendre(half_width, panels, 32).expect("valid default rule")
    }

    /// The same window with twice as many panels.
    pub fn refined(&self) -> Self {
        Self::composite_gauss_legendre(self.half_width, 2 * self.panels, self.order_per_panel)
            .expect("refinement of a valid rule")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order_per_panel(&self) -> usize {
        self.order_per_panel
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Complex samples of a function on a list of real nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        Ok(Self { nodes, values })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Coefficients `<f, phi_k>` for `k <= n_max`, integrated with `quad`.
pub fn hermite_coefficients<F>(f: F, n_max: usize, quad: &QuadratureRule) -> HermiteSequence
where
    F: Fn(f64) -> Complex64,
{
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut phi = Vec::with_capacity(n_max + 1);
    for (&x, &w) in quad.nodes().iter().zip(quad.weights()) {
        let fx = f(x) * w;
        fill_hermite(n_max, x, &mut phi);
        for (c, &p) in coeffs.iter_mut().zip(&phi) {
            *c += fx * p;
        }
    }
    HermiteSequence::new(coeffs)
}

/// `sum_k c_k phi_k(x)` at each of `xs`.
pub fn synthesize(seq: &HermiteSequence, xs: &[f64]) -> GridFunction {
    let n_max = seq.len().saturating_sub(1);
    let mut phi = Vec::with_capacity(seq.len());
    let values = xs
        .iter()
        .map(|&x| {
            if seq.is_empty() {
                return Complex64::new(0.0, 0.0);
            }
            fill_hermite(n_max, x, &mut phi);
            seq.coeffs().iter().zip(&phi).map(|(c, &p)| c * p).sum()
        })
        .collect();
    GridFunction {
        nodes: xs.to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ground_state_value() {
        assert!((eval_hermite(0, 0.0) - 0.751_125_544_464_942_5).abs() < 1e-15);
        let want = 2f64.sqrt() * PI.powf(-0.25) * (-0.5f64).exp();
        assert!((eval_hermite(1, 1.0) - want).abs() < 1e-15);
        for n in [1, 3, 7, 41] {
            assert_eq!(eval_hermite(n, 0.0), 0.0);
        }
    }

    #[test]
    fn closed_forms_for_low_indices() {
        for i in -40..=40 {
            let x = i as f64 * 0.17;
            let g = PI.powf(-0.25) * (-0.5 * x * x).exp();
            let closed = [g, 2f64.sqrt() * x * g, (2.0 * x * x - 1.0) / 2f64.sqrt() * g];
            for (n, want) in closed.iter().enumerate() {
                assert!((eval_hermite(n, x) - want).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn parity() {
        for n in 0..60 {
            for x in [0.3, 1.7, 4.2, 9.9] {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((eval_hermite(n, -x) - sign * eval_hermite(n, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_matches_single() {
        let all = eval_hermite_all(50, 2.3);
        for (n, v) in all.iter().enumerate() {
            assert!((v - eval_hermite(n, 2.3)).abs() < 1e-14);
        }
        assert_eq!(eval_hermite_all(0, 1.0).len(), 1);
    }

    #[test]
    fn zero_count_inside_turning_points() {
        for n in [1usize, 2, 5, 10, 25, 40] {
            let turn = (2.0 * n as f64 + 1.0).sqrt();
            let samples = 20_000;
            let mut changes = 0;
            let mut prev = eval_hermite(n, -turn);
            for i in 1..=samples {
                let x = -turn + 2.0 * turn * i as f64 / samples as f64;
                let v = eval_hermite(n, x);
                if v != 0.0 && prev != 0.0 && v.signum() != prev.signum() {
                    changes += 1;
                }
                if v != 0.0 {
                    prev = v;
                }
            }
            assert_eq!(changes, n, "n={n}");
        }
    }

    #[test]
    fn eigenrelation_through_ladder_identities() {
        let basis = HermiteBasis::new(40);
        for n in [0usize, 1, 4, 13, 30] {
            for x in [-3.1, -0.4, 0.0, 1.25, 5.0] {
                let lhs = -basis.second_derivative(n, x) + x * x * basis.eval(n, x);
                let rhs = (2.0 * n as f64 + 1.0) * basis.eval(n, x);
                assert!((lhs - rhs).abs() < 1e-9, "n={n} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn first_derivative_matches_finite_difference() {
        let basis = HermiteBasis::new(20);
        for n in [0usize, 3, 9] {
            let x = 0.7;
            let h = 1e-5;
            let fd = (eval_hermite(n, x + h) - eval_hermite(n, x - h)) / (2.0 * h);
            assert!((basis.derivative(n, x) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let rule = QuadratureRule::composite_gauss_legendre(1.0, 1, 2).unwrap();
        assert!((rule.integrate(|x| x * x) - 2.0 / 3.0).abs() < 1e-15);
        let rule = QuadratureRule::composite_gauss_legendre(1.0, 1, 10).unwrap();
        assert!((rule.integrate(|x| x.powi(18)) - 2.0 / 19.0).abs() < 1e-14);
        for order in [2, 3, 7, 16, 33] {
            let (nodes, weights) = gauss_legendre(order);
            assert!(nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(weights.iter().all(|&w| w > 0.0));
            assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn composite_rule_invariants() {
        let rule = QuadratureRule::composite_gauss_legendre(9.5, 13, 12).unwrap();
        assert_eq!(rule.len(), 13 * 12);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        assert!((rule.weights().iter().sum::<f64>() - 19.0).abs() < 1e-12);
        assert_eq!(rule.refined().len(), 2 * rule.len());
    }

    #[test]
    fn quadrature_rejects_bad_parameters() {
        assert!(QuadratureRule::composite_gauss_legendre(0.0, 1, 4).is_err());
        assert!(QuadratureRule::composite_gauss_legendre(-2.0, 1, 4).is_err());
        assert!(QuadratureRule::composite_gauss_legendre(f64::NAN, 1, 4).is_err());
        assert!(QuadratureRule::composite_gauss_legendre(1.0, 0, 4).is_err());
        assert!(QuadratureRule::composite_gauss_legendre(1.0, 1, 1).is_err());
    }

    #[test]
    fn normalization_and_orthogonality() {
        let rule = QuadratureRule::composite_gauss_legendre(8.0, 16, 16).unwrap();
        let norm = rule.integrate(|x| eval_hermite(0, x).powi(2));
        assert!((norm - 1.0).abs() < 1e-10);
        let cross = rule.integrate(|x| eval_hermite(5, x) * eval_hermite(7, x));
        assert!(cross.abs() < 1e-10);
    }

    #[test]
    fn coefficients_of_basis_functions() {
        let quad = QuadratureRule::for_products(10);
        let seq = hermite_coefficients(|x| c(eval_hermite(3, x)), 10, &quad);
        for (k, ck) in seq.coeffs().iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((ck - c(want)).norm() < 1e-10);
        }
        let seq = hermite_coefficients(|x| c(x * eval_hermite(0, x)), 10, &quad);
        for (k, ck) in seq.coeffs().iter().enumerate() {
            let want = if k == 1 { 0.5f64.sqrt() } else { 0.0 };
            assert!((ck - c(want)).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn coefficients_against_trapezoid_oracle() {
        // Independent oracle: plain trapezoid rule on a fine uniform grid,
        // exponentially accurate for Gaussian-decaying integrands.
        let n_max = 12;
        let f = |x: f64| (-0.5 * x * x).exp();
        let (half, pts) = (20.0, 40_001);
        let h = 2.0 * half / (pts - 1) as f64;
        let oracle: Vec<f64> = (0..=n_max)
            .map(|k| {
                (0..pts)
                    .map(|i| {
                        let x = -half + i as f64 * h;
                        let w = if i == 0 || i == pts - 1 { 0.5 } else { 1.0 };
                        w * h * f(x) * eval_hermite(k, x)
                    })
                    .sum()
            })
            .collect();
        assert!((oracle[0] - PI.powf(0.25)).abs() < 1e-12);
        let seq = hermite_coefficients(|x| c(f(x)), n_max, &QuadratureRule::for_products(n_max));
        for (k, want) in oracle.iter().enumerate() {
            assert!((seq.get(k) - c(*want)).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn synthesis() {
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.5).collect();
        let g = synthesize(&HermiteSequence::unit(3, 6), &xs);
        for (x, v) in g.nodes().iter().zip(g.values()) {
            assert!((v.re - eval_hermite(3, *x)).abs() < 1e-15);
        }
        let g = synthesize(&HermiteSequence::zeros(9), &xs);
        assert!(g.values().iter().all(|v| v.norm() == 0.0));
        let quad = QuadratureRule::for_products(8);
        let seq = hermite_coefficients(|x| c(eval_hermite(2, x)), 8, &quad);
        let g = synthesize(&seq, &xs);
        for (x, v) in g.nodes().iter().zip(g.values()) {
            assert!((v - c(eval_hermite(2, *x))).norm() < 1e-9);
        }
    }

    #[test]
    fn grid_function_lengths() {
        assert!(GridFunction::new(vec![0.0, 1.0], vec![c(1.0)]).is_err());
    }
}
