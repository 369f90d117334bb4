//! Symbol to matrix and back.
//!
//! `K_{m,n} = sqrt(2 pi) (-i)^n / (2 pi) * int int e^{i x xi} a(x, xi)
//! phi_n(xi) phi_m(x) dx dxi`, the matrix of the operator with left symbol
//! `a` under `F f(xi) = int e^{-i xi x} f(x) dx`. The double integral is a
//! plain tensor Gauss-Legendre rule on `[-L, L]^2`; every entry is
//! recomputed with twice the panels and the difference is its error
//! estimate.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{default_half_width, hermite_table, QuadratureRule};
use crate::matrix::{OperatorMatrix, Provenance};
use crate::symbols::Symbol;

/// Nodes whose Hermite values are all below this contribute nothing.
const NEGLIGIBLE_PHI: f64 = 1e-18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationConfig {
    pub half_width: f64,
    pub panels: usize,
    pub order_per_panel: usize,
    /// Ceiling on `|K - K_doubled|` before an entry is flagged.
    pub tolerance: f64,
}

impl QuantizationConfig {
    /// Defaults for entries with indices up to `max_index`.
    pub fn for_size(max_index: usize) -> Self {
        let half_width = default_half_width(max_index);
        Self {
            half_width,
            panels: (2.0 * half_width).ceil() as usize,
            order_per_panel: 32,
            tolerance: 1e-8,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.panels * self.order_per_panel
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::composite_gauss_legendre(self.half_width, self.panels, self.order_per_panel)
    }

    /// Checks the window reaches past the turning point of the largest
    /// index and that there are at least `4 max_index + 32` nodes per axis.
    pub fn validate(&self, max_index: usize) -> Result<()> {
        let turning = (2.0 * max_index as f64 + 1.0).sqrt();
        if !(self.half_width > turning) {
            return Err(Error::InvalidParameter(format!(
                "window {} does not cover the turning point {turning:.3} of index {max_index}",
                self.half_width
            )));
        }
        if self.nodes_per_axis() < 4 * max_index + 32 {
            return Err(Error::InvalidParameter(format!(
                "{} nodes per axis, need at least {}",
                self.nodes_per_axis(),
                4 * max_index + 32
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// One entry with its node-doubling estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub m: usize,
    pub n: usize,
    pub estimate: Complex64,
    pub doubled: Complex64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct Quantized {
    /// Entries from the refined rule; non-converged entries are flagged.
    pub matrix: OperatorMatrix,
    pub convergence: Vec<ConvergenceRecord>,
    pub tolerance: f64,
}

impl Quantized {
    pub fn nonconverged(&self) -> usize {
        self.convergence.iter().filter(|r| r.delta > self.tolerance).count()
    }

    pub fn nonconverged_fraction(&self) -> f64 {
        if self.convergence.is_empty() {
            0.0
        } else {
            self.nonconverged() as f64 / self.convergence.len() as f64
        }
    }

    pub fn max_delta(&self) -> f64 {
        self.convergence.iter().map(|r| r.delta).fold(0.0, f64::max)
    }

    /// CSV with columns `m, n, estimate_re, estimate_im, doubled_re,
    /// doubled_im, delta`.
    pub fn write_convergence_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "m",
            "n",
            "estimate_re",
            "estimate_im",
            "doubled_re",
            "doubled_im",
            "delta",
        ])?;
        for r in &self.convergence {
            out.write_record([
                r.m.to_string(),
                r.n.to_string(),
                format!("{:.17e}", r.estimate.re),
                format!("{:.17e}", r.estimate.im),
                format!("{:.17e}", r.doubled.re),
                format!("{:.17e}", r.doubled.im),
                format!("{:.3e}", r.delta),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Raw quadrature of the `rows x cols` block with one rule on both axes.
fn quantize_with_rule(sym: &Symbol, rows: usize, cols: usize, rule: &QuadratureRule) -> Result<Vec<Complex64>> {
    let nodes = rule.nodes();
    let weights = rule.weights();
    let phi_x = hermite_table(rows - 1, nodes);
    let phi_xi = hermite_table(cols - 1, nodes);
    let significant = |table: &[f64], width: usize, i: usize| {
        table[i * width..(i + 1) * width]
            .iter()
            .any(|v| v.abs() >= NEGLIGIBLE_PHI)
    };
    let xs: Vec<usize> = (0..nodes.len()).filter(|&i| significant(&phi_x, rows, i)).collect();
    let xis: Vec<usize> = (0..nodes.len()).filter(|&j| significant(&phi_xi, cols, j)).collect();

    // Inner x-integral per xi node: I_m(j) = sum_i w_i e^{i x_i xi_j} a phi_m(x_i).
    let inner: Vec<Result<Vec<Complex64>>> = xis
        .par_iter()
        .map(|&j| {
            let xi = nodes[j];
            let mut acc = vec![Complex64::new(0.0, 0.0); rows];
            for &i in &xs {
                let x = nodes[i];
                let a = sym.eval(x, xi);
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "symbol is not finite at ({x}, {xi})"
                    )));
                }
                let v = a * Complex64::from_polar(weights[i], x * xi);
                for (s, &p) in acc.iter_mut().zip(&phi_x[i * rows..(i + 1) * rows]) {
                    *s += v * p;
                }
            }
            Ok(acc)
        })
        .collect();

    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for (&j, acc) in xis.iter().zip(inner) {
        let acc = acc?;
        let w = weights[j];
        for n in 0..cols {
            let p = w * phi_xi[j * cols + n];
            if p == 0.0 {
                continue;
            }
            for (m, &s) in acc.iter().enumerate() {
                out[m * cols + n] += s * p;
            }
        }
    }
    let scale = 1.0 / (2.0 * PI).sqrt();
    for n in 0..cols {
        let phase = minus_i_pow(n) * scale;
        for m in 0..rows {
            out[m * cols + n] *= phase;
        }
    }
    Ok(out)
}

fn minus_i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

fn i_pow(n: usize) -> Complex64 {
    minus_i_pow(n).conj()
}

/// The `rows x cols` matrix of the operator with left symbol `sym`.
pub fn quantize(sym: &Symbol, rows: usize, cols: usize, cfg: &QuantizationConfig) -> Result<Quantized> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("empty matrix requested".into()));
    }
    cfg.validate(rows.max(cols) - 1)?;
    let rule = cfg.rule()?;
    let coarse = quantize_with_rule(sym, rows, cols, &rule)?;
    let fine = quantize_with_rule(sym, rows, cols, &rule.refined())?;
    let mut convergence = Vec::with_capacity(rows * cols);
    let mut flagged = Vec::new();
    for m in 0..rows {
        for n in 0..cols {
            let i = m * cols + n;
            let delta = (fine[i] - coarse[i]).norm();
            if delta > cfg.tolerance {
                flagged.push((m, n));
            }
            convergence.push(ConvergenceRecord {
                m,
                n,
                estimate: coarse[i],
                doubled: fine[i],
                delta,
            });
        }
    }
    let matrix = OperatorMatrix::new(rows, cols, fine)?
        .with_provenance(Provenance::Quantized)
        .with_flagged(flagged);
    Ok(Quantized {
        matrix,
        convergence,
        tolerance: cfg.tolerance,
    })
}

/// `K(x, y) = sum_{m,n} K_{m,n} phi_m(x) phi_n(y)` over the reported block;
/// `out[i][j]` is the value at `(xs[i], ys[j])`.
pub fn dequantize_kernel(k: &OperatorMatrix, xs: &[f64], ys: &[f64]) -> Vec<Vec<Complex64>> {
    let (rows, cols) = (k.reported_rows(), k.reported_cols());
    if rows == 0 || cols == 0 {
        return vec![vec![Complex64::new(0.0, 0.0); ys.len()]; xs.len()];
    }
    let phi_y = hermite_table(cols - 1, ys);
    xs.par_iter()
        .map(|&x| {
            let c = row_coefficients(k, rows, cols, x);
            (0..ys.len())
                .map(|j| {
                    c.iter()
                        .zip(&phi_y[j * cols..(j + 1) * cols])
                        .map(|(c, &p)| c * p)
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// `c_n(x) = sum_m K_{m,n} phi_m(x)`.
fn row_coefficients(k: &OperatorMatrix, rows: usize, cols: usize, x: f64) -> Vec<Complex64> {
    let phi = hermite_table(rows - 1, &[x]);
    let mut c = vec![Complex64::new(0.0, 0.0); cols];
    for (m, &p) in phi.iter().enumerate() {
        for (n, cn) in c.iter_mut().enumerate() {
            *cn += k.get(m, n) * p;
        }
    }
    c
}

/// `a(x, xi) = int e^{-i (x - y) xi} K(x, y) dy` with the kernel synthesized
/// from the reported block and the `y` integral done with `quad`;
/// `out[i][j]` is the value at `(xs[i], xis[j])`.
pub fn dequantize_symbol(
    k: &OperatorMatrix,
    xs: &[f64],
    xis: &[f64],
    quad: &QuadratureRule,
) -> Vec<Vec<Complex64>> {
    let (rows, cols) = (k.reported_rows(), k.reported_cols());
    if rows == 0 || cols == 0 {
        return vec![vec![Complex64::new(0.0, 0.0); xis.len()]; xs.len()];
    }
    let ys = quad.nodes();
    let phi_y = hermite_table(cols - 1, ys);
    xs.par_iter()
        .map(|&x| {
            let c = row_coefficients(k, rows, cols, x);
            let kernel: Vec<Complex64> = (0..ys.len())
                .map(|q| {
                    c.iter()
                        .zip(&phi_y[q * cols..(q + 1) * cols])
                        .map(|(c, &p)| c * p)
                        .sum()
                })
                .collect();
            xis.iter()
                .map(|&xi| {
                    let s: Complex64 = kernel
                        .iter()
                        .zip(ys.iter().zip(quad.weights()))
                        .map(|(kv, (&y, &w))| kv * Complex64::from_polar(w, y * xi))
                        .sum();
                    s * Complex64::from_polar(1.0, -x * xi)
                })
                .collect()
        })
        .collect()
}

/// The same symbol through the Fourier eigenrelation of the Hermite
/// functions: `sqrt(2 pi) e^{-i x xi} sum K_{m,n} phi_m(x) i^n phi_n(xi)`.
pub fn dequantize_symbol_spectral(k: &OperatorMatrix, xs: &[f64], xis: &[f64]) -> Vec<Vec<Complex64>> {
    let (rows, cols) = (k.reported_rows(), k.reported_cols());
    if rows == 0 || cols == 0 {
        return vec![vec![Complex64::new(0.0, 0.0); xis.len()]; xs.len()];
    }
    let phi_xi = hermite_table(cols - 1, xis);
    let root = (2.0 * PI).sqrt();
    xs.iter()
        .map(|&x| {
            let c = row_coefficients(k, rows, cols, x);
            xis.iter()
                .enumerate()
                .map(|(j, &xi)| {
                    let s: Complex64 = c
                        .iter()
                        .enumerate()
                        .map(|(n, cn)| cn * i_pow(n) * phi_xi[j * cols + n])
                        .sum();
                    s * Complex64::from_polar(root, -x * xi)
                })
                .collect()
        })
        .collect()
}

/// Outcome of comparing `quantize(d a / dx)` with the four-term combination
/// of entries of `quantize(a)`.
#[derive(Clone, Debug)]
pub struct DerivativeCheck {
    pub residual: f64,
    /// Largest node-doubling delta over both quantizations.
    pub quadrature_delta: f64,
    pub lhs: OperatorMatrix,
    pub rhs: OperatorMatrix,
}

/// Largest entrywise distance, over `m < rows`, `n < cols`, between
/// `quantize(d a / dx)` and
/// `sqrt((n+1)/2) Delta K_{m-1,n} + (sqrt((n+1)/2) - sqrt(m/2)) K_{m-1,n}
///  + sqrt(n/2) Delta K_{m,n-1} + (sqrt((m+1)/2) - sqrt(n/2)) K_{m+1,n}`
/// with `K = quantize(a)` and negative indices read as zero.
pub fn quantize_derivative_check(
    sym: &Symbol,
    rows: usize,
    cols: usize,
    cfg: &QuantizationConfig,
) -> Result<DerivativeCheck> {
    let dx = sym.derivative(1, 0)?;
    let lhs = quantize(&dx, rows, cols, cfg)?;
    let k = quantize(sym, rows + 1, cols + 1, cfg)?;
    let km = &k.matrix;
    let at = |m: isize, n: isize| km.get_or_zero(m, n);
    let rhs = OperatorMatrix::from_fn(rows, cols, |m, n| {
        let (mi, ni) = (m as isize, n as isize);
        let (mf, nf) = (m as f64, n as f64);
        let up = ((nf + 1.0) / 2.0).sqrt();
        let d_prev_row = at(mi, ni + 1) - at(mi - 1, ni);
        let d_prev_col = at(mi + 1, ni) - at(mi, ni - 1);
        d_prev_row * up
            + at(mi - 1, ni) * (up - (mf / 2.0).sqrt())
            + d_prev_col * (nf / 2.0).sqrt()
            + at(mi + 1, ni) * (((mf + 1.0) / 2.0).sqrt() - (nf / 2.0).sqrt())
    });
    let residual = lhs.matrix.max_diff(&rhs);
    Ok(DerivativeCheck {
        residual,
        quadrature_delta: lhs.max_delta().max(k.max_delta()),
        lhs: lhs.matrix,
        rhs,
    })
}
