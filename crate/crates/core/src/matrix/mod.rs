//! Truncated operator matrices `K_{m,n} = <A phi_n, phi_m>` and the discrete
//! calculus on them.
//!
//! An [`OperatorMatrix`] stores a computed block of the infinite matrix.
//! The outer `pad` rows and columns are held back from the reported block so
//! that shifts, differences and products stay exact on what is reported.
//! When an operation needs more pad than is left, the reported block
//! shrinks and the operation says so.

mod classify;
mod nd;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use classify::{
    classify, emit_plot_series, fit_order, BandFit, ClassifierConfig, ClassifierReport,
    ConstantEstimate, PlotPoint, PlotSeries,
};
pub use nd::{
    counterexample_2d, counterexample_2d_at, creation_first_axis, BandValue, BoxConstant,
    CounterexampleReport, OperatorMatrixNd,
};

use crate::error::{Error, Result};

/// Entries whose truncated sums end on terms larger than this are flagged.
pub const LEAKAGE_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Quantized,
    Composed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    pad: usize,
    provenance: Provenance,
    band: Option<usize>,
    flagged: Vec<(usize, usize)>,
}

impl OperatorMatrix {
    /// Row-major entries; every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: i / cols.max(1),
                col: i % cols.max(1),
            });
        }
        Ok(Self {
            rows,
            cols,
            data,
            pad: 0,
            provenance: Provenance::Analytic,
            band: None,
            flagged: Vec::new(),
        })
    }

    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> Complex64,
    {
        let mut data = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                data.push(f(m, n));
            }
        }
        Self::new(rows, cols, data).expect("finite entries")
    }

    pub fn from_real_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64,
    {
        Self::from_fn(rows, cols, |m, n| Complex64::new(f(m, n), 0.0))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Complex64::new(0.0, 0.0)).with_band(Some(0))
    }

    pub fn identity(size: usize) -> Self {
        Self::diagonal(size, |_| 1.0)
    }

    pub fn diagonal<F: Fn(usize) -> f64>(size: usize, f: F) -> Self {
        Self::from_real_fn(size, size, |m, n| if m == n { f(n) } else { 0.0 }).with_band(Some(0))
    }

    /// `K_{m,n} = (1+m+n)^r (1+|m-n|)^(-p)`, a closed-form member of the
    /// order-`r` family used to exercise the classifier.
    pub fn generated(size: usize, r: f64, p: f64) -> Self {
        Self::from_real_fn(size, size, |m, n| {
            (1.0 + (m + n) as f64).powf(r) * (1.0 + m.abs_diff(n) as f64).powf(-p)
        })
    }

    pub fn with_pad(mut self, pad: usize) -> Self {
        self.pad = pad.min(self.rows).min(self.cols);
        self
    }

    pub fn with_band(mut self, band: Option<usize>) -> Self {
        self.band = band;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_flagged(mut self, flagged: Vec<(usize, usize)>) -> Self {
        self.flagged = flagged;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn band(&self) -> Option<usize> {
        self.band
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Entries flagged as non-converged or leaking truncation error.
    pub fn flagged(&self) -> &[(usize, usize)] {
        &self.flagged
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn reported_rows(&self) -> usize {
        self.rows - self.pad
    }

    pub fn reported_cols(&self) -> usize {
        self.cols - self.pad
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.cols + n]
    }

    /// Entry with `phi_{-1} := 0`: negative indices read as zero. Indices
    /// past the computed block panic.
    pub fn get_or_zero(&self, m: isize, n: isize) -> Complex64 {
        if m < 0 || n < 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.get(m as usize, n as usize)
        }
    }

    /// The leading `rows x cols` sub-block, keeping as much pad as fits.
    pub fn leading_block(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows > self.rows || cols > self.cols {
            return Err(Error::Dimension(format!(
                "leading block {rows}x{cols} of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut out = Self::from_fn(rows, cols, |m, n| self.get(m, n));
        out.pad = self.pad.min(rows).min(cols);
        out.provenance = self.provenance;
        out.band = self.band;
        out.flagged = self
            .flagged
            .iter()
            .copied()
            .filter(|&(m, n)| m < rows && n < cols)
            .collect();
        Ok(out)
    }

    /// The reported block as a pad-free matrix.
    pub fn reported(&self) -> Self {
        let mut out = self
            .leading_block(self.reported_rows(), self.reported_cols())
            .expect("reported block is inside the computed block");
        out.pad = 0;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn map<F: Fn(usize, usize, Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for m in 0..self.rows {
            for n in 0..self.cols {
                let i = m * self.cols + n;
                out.data[i] = f(m, n, self.data[i]);
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|_, _, z| z * c)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::from_fn(self.cols, self.rows, |m, n| self.get(n, m).conj());
        out.pad = self.pad;
        out.provenance = self.provenance;
        out.band = self.band;
        out.flagged = self.flagged.iter().map(|&(m, n)| (n, m)).collect();
        out
    }

    /// `self - other` on the common leading block.
    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    fn combine<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Self {
        let reported_rows = self.reported_rows().min(other.reported_rows());
        let reported_cols = self.reported_cols().min(other.reported_cols());
        let rows = self.rows.min(other.rows);
        let cols = self.cols.min(other.cols);
        let pad = (rows - reported_rows).min(cols - reported_cols);
        let mut out = Self::from_fn(reported_rows + pad, reported_cols + pad, |m, n| {
            f(self.get(m, n), other.get(m, n))
        });
        out.pad = pad;
        out.provenance = Provenance::Composed;
        out.band = match (self.band, other.band) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        out.flagged = merge_flags(&self.flagged, &other.flagged, out.rows, out.cols);
        out
    }

    /// Largest `|m - n|` among entries above `floor`.
    pub fn numerical_band(&self, floor: f64) -> usize {
        let mut band = 0;
        for m in 0..self.rows {
            for n in 0..self.cols {
                if self.get(m, n).norm() > floor {
                    band = band.max(m.abs_diff(n));
                }
            }
        }
        band
    }

    /// Max entrywise distance on the common reported block.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let rows = self.reported_rows().min(other.reported_rows());
        let cols = self.reported_cols().min(other.reported_cols());
        let mut d: f64 = 0.0;
        for m in 0..rows {
            for n in 0..cols {
                d = d.max((self.get(m, n) - other.get(m, n)).norm());
            }
        }
        d
    }
}

/// On-disk form: row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub pad: usize,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<(usize, usize)>,
    pub entries: Vec<[f64; 2]>,
}

impl From<&OperatorMatrix> for MatrixDocument {
    fn from(k: &OperatorMatrix) -> Self {
        Self {
            rows: k.rows,
            cols: k.cols,
            pad: k.pad,
            provenance: k.provenance,
            band: k.band,
            flagged: k.flagged.clone(),
            entries: k.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixDocument> for OperatorMatrix {
    type Error = Error;

    fn try_from(doc: MatrixDocument) -> Result<Self> {
        if doc.pad > doc.rows.min(doc.cols) {
            return Err(Error::Dimension(format!(
                "pad {} exceeds a {}x{} matrix",
                doc.pad, doc.rows, doc.cols
            )));
        }
        let data = doc.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let mut k = OperatorMatrix::new(doc.rows, doc.cols, data)?;
        k.pad = doc.pad;
        k.provenance = doc.provenance;
        k.band = doc.band;
        k.flagged = doc.flagged;
        Ok(k)
    }
}

impl OperatorMatrix {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MatrixDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn write_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &MatrixDocument::from(self))?;
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(r: R) -> Result<Self> {
        let doc: MatrixDocument = serde_json::from_reader(r)?;
        doc.try_into()
    }
}

fn merge_flags(
    a: &[(usize, usize)],
    b: &[(usize, usize)],
    rows: usize,
    cols: usize,
) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = a
        .iter()
        .chain(b)
        .copied()
        .filter(|&(m, n)| m < rows && n < cols)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `(Delta^alpha K)(m, n)`, where `(Delta K)(m, n) = K(m+1, n+1) - K(m, n)`.
/// The computed block shrinks by `alpha`; the pad absorbs the loss first.
pub fn delta(k: &OperatorMatrix, alpha: usize) -> Result<OperatorMatrix> {
    if alpha >= k.rows || alpha >= k.cols {
        return Err(Error::Truncation {
            alpha,
            rows: k.rows,
            cols: k.cols,
        });
    }
    let mut cur = k.clone();
    for _ in 0..alpha {
        let next = OperatorMatrix::from_fn(cur.rows - 1, cur.cols - 1, |m, n| {
            cur.get(m + 1, n + 1) - cur.get(m, n)
        });
        cur = OperatorMatrix {
            pad: cur.pad.saturating_sub(1),
            flagged: cur
                .flagged
                .iter()
                .filter(|&&(m, n)| m < next.rows && n < next.cols)
                .copied()
                .collect(),
            provenance: cur.provenance,
            band: cur.band,
            ..next
        };
    }
    Ok(cur)
}

/// `(AB)_{m,n} = sum_k A_{m,k} B_{k,n}` over the shared inner truncation.
///
/// With band hints on both factors, the result is trimmed to the region
/// where no term of the infinite sum is missing, and it is an error if that
/// region does not cover the reported blocks. Without hints every reported
/// entry whose last summed term exceeds [`LEAKAGE_THRESHOLD`] is flagged.
pub fn matmul(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let inner = a.cols.min(b.rows);
    if inner == 0 {
        return Err(Error::Dimension("empty inner dimension".into()));
    }
    let exact_rows = match a.band {
        Some(w) => a.rows.min(inner.saturating_sub(w)),
        None => a.rows,
    };
    let exact_cols = match b.band {
        Some(w) => b.cols.min(inner.saturating_sub(w)),
        None => b.cols,
    };
    let want_rows = a.reported_rows();
    let want_cols = b.reported_cols();
    if exact_rows < want_rows || exact_cols < want_cols {
        return Err(Error::PadExhausted(format!(
            "product of {}x{} (pad {}, band {:?}) and {}x{} (pad {}, band {:?}) is exact only on {}x{}",
            a.rows, a.cols, a.pad, a.band, b.rows, b.cols, b.pad, b.band, exact_rows, exact_cols
        )));
    }
    let pad = (exact_rows - want_rows).min(exact_cols - want_cols);
    let rows = want_rows + pad;
    let cols = want_cols + pad;
    let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
    for m in 0..rows {
        let arow = &a.data[m * a.cols..m * a.cols + inner];
        for (k, &amk) in arow.iter().enumerate() {
            if amk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b.data[k * b.cols..k * b.cols + cols];
            for (out, &bkn) in data[m * cols..(m + 1) * cols].iter_mut().zip(brow) {
                *out += amk * bkn;
            }
        }
    }
    let mut flagged = Vec::new();
    if a.band.is_none() || b.band.is_none() {
        for m in 0..want_rows {
            for n in 0..want_cols {
                if (a.get(m, inner - 1) * b.get(inner - 1, n)).norm() > LEAKAGE_THRESHOLD {
                    flagged.push((m, n));
                }
            }
        }
    }
    let mut out = OperatorMatrix::new(rows, cols, data)?;
    out.pad = pad;
    out.provenance = Provenance::Composed;
    out.band = match (a.band, b.band) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    };
    out.flagged = merge_flags(&flagged, &merge_flags(&a.flagged, &b.flagged, rows, inner), rows, cols);
    Ok(out)
}

/// Schur-test bound `sqrt(max row sum * max column sum)` of `|K|` on the
/// reported block.
pub fn schur_norm_bound(k: &OperatorMatrix) -> f64 {
    let (rows, cols) = (k.reported_rows(), k.reported_cols());
    let mut max_row: f64 = 0.0;
    let mut col_sums = vec![0.0; cols];
    for m in 0..rows {
        let mut row = 0.0;
        for (n, c) in col_sums.iter_mut().enumerate() {
            let v = k.get(m, n).norm();
            row += v;
            *c += v;
        }
        max_row = max_row.max(row);
    }
    let max_col = col_sums.into_iter().fold(0.0, f64::max);
    (max_row * max_col).sqrt()
}

/// Largest singular value of the reported block by power iteration on
/// `K* K`.
pub fn l2_norm(k: &OperatorMatrix) -> f64 {
    let (rows, cols) = (k.reported_rows(), k.reported_cols());
    spectral_norm(rows, cols, |m, n| k.get(m, n))
}

pub(crate) fn spectral_norm<F>(rows: usize, cols: usize, entry: F) -> f64
where
    F: Fn(usize, usize) -> Complex64,
{
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut a = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        for n in 0..cols {
            a.push(entry(m, n));
        }
    }
    if a.iter().all(|z| z.norm() == 0.0) {
        return 0.0;
    }
    // Deterministic start with components in every direction.
    let mut v: Vec<Complex64> = (0..cols)
        .map(|j| Complex64::new(1.0 + 0.5 * ((j as f64) * 0.7).sin(), 0.3 * ((j as f64) * 1.3).cos()))
        .collect();
    normalize(&mut v);
    let mut w = vec![Complex64::new(0.0, 0.0); rows];
    let mut estimate = 0.0;
    for iter in 0..5000 {
        for (m, wm) in w.iter_mut().enumerate() {
            *wm = a[m * cols..(m + 1) * cols].iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let norm_w = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for (m, wm) in w.iter().enumerate() {
            for (z, x) in v.iter_mut().zip(&a[m * cols..(m + 1) * cols]) {
                *z += x.conj() * wm;
            }
        }
        let next = norm_w;
        let converged = iter > 2 && (next - estimate).abs() <= 1e-15 * next;
        estimate = next;
        if normalize(&mut v) == 0.0 || converged {
            break;
        }
    }
    estimate
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// Cumulative `sum |K_{m,n}|^2` over each leading `b x b` block.
pub fn frobenius_tail(k: &OperatorMatrix, block_sizes: &[usize]) -> Result<Vec<f64>> {
    if block_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("block sizes must increase".into()));
    }
    if let Some(&last) = block_sizes.last() {
        if last > k.reported_rows() || last > k.reported_cols() {
            return Err(Error::Dimension(format!(
                "block {last} exceeds the {}x{} reported block",
                k.reported_rows(),
                k.reported_cols()
            )));
        }
    }
    Ok(block_sizes
        .iter()
        .map(|&b| {
            let mut s = 0.0;
            for m in 0..b {
                for n in 0..b {
                    s += k.get(m, n).norm_sqr();
                }
            }
            s
        })
        .collect())
}

/// Entrywise product `K_{m,n} g(m, n)`.
pub fn pointwise_mul<G: Fn(usize, usize) -> f64>(k: &OperatorMatrix, g: G) -> OperatorMatrix {
    k.map(|m, n, z| z * g(m, n))
}
