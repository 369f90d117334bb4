//! Named operators with exact matrices, commutators, the action on
//! coefficient sequences, weighted norms and the commutator (Beals) test.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{l2_norm, matmul, pointwise_mul, OperatorMatrix, Provenance};
use crate::sequence::HermiteSequence;

/// Relative change allowed between half and full truncation.
pub const BEALS_STABILITY: f64 = 0.10;
/// Norms at or below this on both truncations count as zero.
pub const BEALS_ZERO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "param", rename_all = "snake_case")]
pub enum NamedOperator {
    /// `(1 + H)^{s/2}`.
    HarmonicPower(f64),
    Harmonic,
    /// `phi_k -> phi_{k-1}`.
    Shift,
    ShiftAdjoint,
    Creation,
    Annihilation,
    MultiplyX,
    DerivativeX,
    Identity,
    #[serde(skip)]
    Custom(OperatorMatrix),
}

impl NamedOperator {
    /// Looks up an operator by its command-line name.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let op = match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "harmonic_power" => NamedOperator::HarmonicPower(param.ok_or_else(|| {
                Error::InvalidParameter("harmonic_power needs a parameter s".into())
            })?),
            "harmonic" => NamedOperator::Harmonic,
            "shift" => NamedOperator::Shift,
            "shift_adjoint" => NamedOperator::ShiftAdjoint,
            "creation" => NamedOperator::Creation,
            "annihilation" => NamedOperator::Annihilation,
            "multiply_x" => NamedOperator::MultiplyX,
            "derivative_x" => NamedOperator::DerivativeX,
            "identity" => NamedOperator::Identity,
            other => {
                return Err(Error::InvalidParameter(format!("unknown operator `{other}`")));
            }
        };
        Ok(op)
    }

    /// Width of the band `|m - n|` the exact matrix lives on.
    pub fn band(&self) -> Option<usize> {
        match self {
            NamedOperator::HarmonicPower(_) | NamedOperator::Harmonic | NamedOperator::Identity => Some(0),
            NamedOperator::Custom(k) => k.band(),
            _ => Some(1),
        }
    }

    /// Isotropic order of the operator, where it is known.
    pub fn order(&self) -> Option<f64> {
        match self {
            NamedOperator::HarmonicPower(s) => Some(*s),
            NamedOperator::Harmonic => Some(2.0),
            NamedOperator::Shift | NamedOperator::ShiftAdjoint | NamedOperator::Identity => Some(0.0),
            NamedOperator::Creation
            | NamedOperator::Annihilation
            | NamedOperator::MultiplyX
            | NamedOperator::DerivativeX => Some(1.0),
            NamedOperator::Custom(_) => None,
        }
    }

    fn entry(&self, m: usize, n: usize) -> f64 {
        let nf = n as f64;
        let up = m == n + 1;
        let down = m + 1 == n;
        match self {
            NamedOperator::HarmonicPower(s) => diag(m, n, (2.0 + 2.0 * nf).powf(s / 2.0)),
            NamedOperator::Harmonic => diag(m, n, 2.0 * nf + 1.0),
            NamedOperator::Identity => diag(m, n, 1.0),
            NamedOperator::Shift => indicator(down),
            NamedOperator::ShiftAdjoint => indicator(up),
            NamedOperator::Creation => indicator(up) * (nf + 1.0).sqrt(),
            NamedOperator::Annihilation => indicator(down) * nf.sqrt(),
            NamedOperator::MultiplyX => {
                indicator(up) * ((nf + 1.0) / 2.0).sqrt() + indicator(down) * (nf / 2.0).sqrt()
            }
            NamedOperator::DerivativeX => {
                -indicator(up) * ((nf + 1.0) / 2.0).sqrt() + indicator(down) * (nf / 2.0).sqrt()
            }
            NamedOperator::Custom(_) => unreachable!("custom matrices are copied, not generated"),
        }
    }

    /// The exact `rows x cols` matrix with no pad.
    pub fn matrix_of(&self, rows: usize, cols: usize) -> Result<OperatorMatrix> {
        if let NamedOperator::Custom(k) = self {
            return k.leading_block(rows, cols);
        }
        Ok(OperatorMatrix::from_real_fn(rows, cols, |m, n| self.entry(m, n)).with_band(self.band()))
    }

    /// A `(size + pad)`-square matrix whose reported block is `size x size`.
    pub fn padded(&self, size: usize, pad: usize) -> Result<OperatorMatrix> {
        Ok(self.matrix_of(size + pad, size + pad)?.with_pad(pad))
    }
}

fn diag(m: usize, n: usize, v: f64) -> f64 {
    if m == n {
        v
    } else {
        0.0
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `AB - BA` through two truncated products.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let ab = matmul(a, b)?;
    let ba = matmul(b, a)?;
    Ok(ab.sub(&ba))
}

/// `[A, H]_{m,n} = 2 (n - m) A_{m,n}`; exact, no pad consumed.
pub fn commutator_with_h(a: &OperatorMatrix) -> OperatorMatrix {
    pointwise_mul(a, |m, n| 2.0 * (n as f64 - m as f64)).with_provenance(Provenance::Composed)
}

/// `[A, Z]_{m,n} = A_{m,n-1} - A_{m+1,n}` with `A_{m,-1} = 0`. Consumes one
/// row and one column of pad.
pub fn commutator_with_z(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    if a.pad() == 0 {
        return Err(Error::PadExhausted(
            "commutator with the shift needs one row of pad".into(),
        ));
    }
    let (rows, cols) = (a.rows() - 1, a.cols() - 1);
    let out = OperatorMatrix::from_fn(rows, cols, |m, n| {
        a.get_or_zero(m as isize, n as isize - 1) - a.get(m + 1, n)
    });
    let flagged = a
        .flagged()
        .iter()
        .copied()
        .filter(|&(m, n)| m < rows && n < cols)
        .collect();
    Ok(out
        .with_pad(a.pad() - 1)
        .with_band(a.band().map(|b| b + 1))
        .with_provenance(Provenance::Composed)
        .with_flagged(flagged))
}

/// Matrix-vector product; `u` is zero-extended to the column count.
pub fn apply(a: &OperatorMatrix, u: &HermiteSequence) -> Result<HermiteSequence> {
    if u.len() > a.cols() {
        return Err(Error::Dimension(format!(
            "sequence of length {} for a matrix with {} columns",
            u.len(),
            a.cols()
        )));
    }
    let out = (0..a.rows())
        .map(|m| {
            u.coeffs()
                .iter()
                .enumerate()
                .map(|(n, c)| a.get(m, n) * c)
                .sum::<Complex64>()
        })
        .collect();
    Ok(HermiteSequence::new(out))
}

/// The truncated `H^{s_in} -> H^{s_out}` norm: the largest singular value of
/// `D_{s_out} A D_{s_in}^{-1}` with `D_s = diag((1+k)^{s/2})`.
pub fn operator_norm_between(a: &OperatorMatrix, s_in: f64, s_out: f64) -> f64 {
    let weighted = pointwise_mul(a, |m, n| {
        (1.0 + m as f64).powf(s_out / 2.0) * (1.0 + n as f64).powf(-s_in / 2.0)
    });
    l2_norm(&weighted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellVerdict {
    Bounded,
    Unstable,
    PadExhausted,
}

impl CellVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellVerdict::Bounded => "bounded",
            CellVerdict::Unstable => "unstable",
            CellVerdict::PadExhausted => "pad_exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BealsCell {
    pub alpha: usize,
    pub beta: usize,
    pub s: f64,
    pub norm_half: f64,
    pub norm_full: f64,
    pub ratio: f64,
    pub pad_consumed: usize,
    pub verdict: CellVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BealsReport {
    pub r: f64,
    pub alpha_max: usize,
    pub beta_max: usize,
    pub s_list: Vec<f64>,
    pub stability: f64,
    pub cells: Vec<BealsCell>,
    pub pass: bool,
}

impl BealsReport {
    pub fn cell(&self, alpha: usize, beta: usize, s: f64) -> Option<&BealsCell> {
        self.cells
            .iter()
            .find(|c| c.alpha == alpha && c.beta == beta && c.s == s)
    }

    pub fn pad_exhausted(&self) -> bool {
        self.cells.iter().any(|c| c.verdict == CellVerdict::PadExhausted)
    }

    /// One row per `(alpha, beta, s)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "beta", "s", "norm_half", "norm_full", "ratio", "verdict"])?;
        for c in &self.cells {
            out.write_record([
                c.alpha.to_string(),
                c.beta.to_string(),
                c.s.to_string(),
                format!("{:.9e}", c.norm_half),
                format!("{:.9e}", c.norm_full),
                format!("{:.6}", c.ratio),
                c.verdict.as_str().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `[.., H]` applied `alpha` times after `[.., Z]` applied `beta` times.
fn iterated(a: &OperatorMatrix, alpha: usize, beta: usize) -> Result<OperatorMatrix> {
    let mut b = a.clone();
    for _ in 0..beta {
        b = commutator_with_z(&b)?;
    }
    for _ in 0..alpha {
        b = commutator_with_h(&b);
    }
    Ok(b)
}

/// Checks that the iterated commutators `H^(alpha) Z^(beta) (A)` stay
/// bounded `H^{r+s-2 beta} -> H^s` as the truncation grows from half to
/// full size. `a` needs `pad >= beta_max`; the half-size matrix is its
/// leading block with the same pad.
pub fn beals_test(
    a: &OperatorMatrix,
    r: f64,
    alpha_max: usize,
    beta_max: usize,
    s_list: &[f64],
) -> Result<BealsReport> {
    if s_list.is_empty() {
        return Err(Error::InvalidParameter("empty s list".into()));
    }
    let pad = a.pad();
    let half_size = a.reported_rows().min(a.reported_cols()) / 2;
    if half_size == 0 {
        return Err(Error::Dimension("matrix too small for a half truncation".into()));
    }
    let half = a.leading_block(half_size + pad, half_size + pad)?;
    let full = a.leading_block(a.reported_rows().min(a.reported_cols()) + pad, a.reported_rows().min(a.reported_cols()) + pad)?;

    let mut grid = Vec::new();
    for alpha in 0..=alpha_max {
        for beta in 0..=beta_max {
            for &s in s_list {
                grid.push((alpha, beta, s));
            }
        }
    }
    let cells: Vec<BealsCell> = grid
        .par_iter()
        .map(|&(alpha, beta, s)| {
            let s_in = r + s - 2.0 * beta as f64;
            let pair = iterated(&half, alpha, beta).and_then(|h| Ok((h, iterated(&full, alpha, beta)?)));
            match pair {
                Ok((h, f)) => {
                    let norm_half = operator_norm_between(&h, s_in, s);
                    let norm_full = operator_norm_between(&f, s_in, s);
                    let zero = norm_half.max(norm_full) <= BEALS_ZERO;
                    let ratio = if norm_half > 0.0 {
                        norm_full / norm_half
                    } else if zero {
                        1.0
                    } else {
                        f64::INFINITY
                    };
                    let verdict = if zero || (ratio - 1.0).abs() < BEALS_STABILITY {
                        CellVerdict::Bounded
                    } else {
                        CellVerdict::Unstable
                    };
                    BealsCell {
                        alpha,
                        beta,
                        s,
                        norm_half,
                        norm_full,
                        ratio,
                        pad_consumed: beta,
                        verdict,
                    }
                }
                Err(_) => BealsCell {
                    alpha,
                    beta,
                    s,
                    norm_half: f64::NAN,
                    norm_full: f64::NAN,
                    ratio: f64::NAN,
                    pad_consumed: pad,
                    verdict: CellVerdict::PadExhausted,
                },
            }
        })
        .collect();
    let pass = cells.iter().all(|c| c.verdict == CellVerdict::Bounded);
    Ok(BealsReport {
        r,
        alpha_max,
        beta_max,
        s_list: s_list.to_vec(),
        stability: BEALS_STABILITY,
        cells,
        pass,
    })
}
