//! Empirical membership test for the symbol-matrix classes: growth of
//! `Delta^alpha K` along the diagonal bands and rapid off-diagonal decay.

use std::io::Write;

use serde::Serialize;

use super::{delta, OperatorMatrix};
use crate::error::{Error, Result};
use crate::fit::{least_squares_slope, tail_slope};

pub const DEFAULT_FLOOR: f64 = 1e-13;
pub const SLOPE_SLACK: f64 = 0.15;
pub const STABILITY_SLACK: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifierConfig {
    pub r: f64,
    pub alpha_max: usize,
    pub n_max: u32,
    pub floor: f64,
    /// Bands `|m - n| <= band_limit` are fitted.
    pub band_limit: usize,
    pub min_points: usize,
    pub slope_slack: f64,
    pub stability_slack: f64,
}

impl ClassifierConfig {
    pub fn new(r: f64, alpha_max: usize, n_max: u32) -> Self {
        Self {
            r,
            alpha_max,
            n_max,
            floor: DEFAULT_FLOOR,
            band_limit: 8,
            min_points: 8,
            slope_slack: SLOPE_SLACK,
            stability_slack: STABILITY_SLACK,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandFit {
    pub alpha: usize,
    /// `d = m - n`.
    pub band: i64,
    pub points: usize,
    pub slope: Option<f64>,
    pub threshold: f64,
    pub pass: Option<bool>,
}

impl BandFit {
    pub fn verdict(&self) -> &'static str {
        match self.pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "insufficient_data",
        }
    }
}

/// `C_{alpha,N}` evaluated on the full reported block and on its leading
/// half.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub alpha: usize,
    pub n: u32,
    pub full: f64,
    pub half: f64,
    pub stable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub alpha: usize,
    pub band: i64,
    pub log_index: f64,
    pub log_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotSeries {
    pub points: Vec<PlotPoint>,
    pub note: Option<String>,
}

impl PlotSeries {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "band", "log_index", "log_abs"])?;
        for p in &self.points {
            out.write_record([
                p.alpha.to_string(),
                p.band.to_string(),
                format!("{:.12e}", p.log_index),
                format!("{:.12e}", p.log_abs),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifierReport {
    pub config: ClassifierConfig,
    pub fits: Vec<BandFit>,
    /// Diagonal-band slope per alpha.
    pub diagonal_slopes: Vec<Option<f64>>,
    /// Fitted exponent of the weighted band maxima against `1 + |d|`, per
    /// alpha. Diagnostic only.
    pub off_diagonal_exponents: Vec<Option<f64>>,
    pub constants: Vec<ConstantEstimate>,
    /// `(alpha, band)` pairs with too few entries above the floor.
    pub insufficient: Vec<(usize, i64)>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    series: Vec<PlotPoint>,
}

impl ClassifierReport {
    pub fn fit(&self, alpha: usize, band: i64) -> Option<&BandFit> {
        self.fits.iter().find(|f| f.alpha == alpha && f.band == band)
    }

    pub fn constant(&self, alpha: usize, n: u32) -> Option<&ConstantEstimate> {
        self.constants.iter().find(|c| c.alpha == alpha && c.n == n)
    }

    /// One row per `(alpha, band)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "band", "points", "slope", "threshold", "verdict"])?;
        for f in &self.fits {
            out.write_record([
                f.alpha.to_string(),
                f.band.to_string(),
                f.points.to_string(),
                f.slope.map(|s| format!("{s:.6}")).unwrap_or_default(),
                format!("{:.6}", f.threshold),
                f.verdict().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_constants_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "n", "full", "half", "stable"])?;
        for c in &self.constants {
            out.write_record([
                c.alpha.to_string(),
                c.n.to_string(),
                format!("{:.9e}", c.full),
                format!("{:.9e}", c.half),
                c.stable.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Points `(log(1+m+n), log|K_{m,n}|)` on band `d = m - n` of the reported
/// block, skipping entries at or below `floor`.
fn band_points(k: &OperatorMatrix, band: i64, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = (k.reported_rows() as i64, k.reported_cols() as i64);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let start = (-band).max(0);
    let mut n = start;
    while n < cols && n + band < rows {
        let m = n + band;
        let v = k.get(m as usize, n as usize).norm();
        if v > floor {
            xs.push(((1 + m + n) as f64).ln());
            ys.push(v.ln());
        }
        n += 1;
    }
    (xs, ys)
}

/// `sup |K_{m,n}| (1+m+n)^{alpha-r} (1+|m-n|)^N` over the leading
/// `rows x cols` part of the reported block.
fn weighted_sup(k: &OperatorMatrix, rows: usize, cols: usize, shift: f64, n: u32, floor: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for m in 0..rows {
        for c in 0..cols {
            let v = k.get(m, c).norm();
            if v <= floor {
                continue;
            }
            let w = (1.0 + (m + c) as f64).powf(shift) * (1.0 + m.abs_diff(c) as f64).powi(n as i32);
            sup = sup.max(v * w);
        }
    }
    sup
}

pub fn classify(k: &OperatorMatrix, config: &ClassifierConfig) -> Result<ClassifierReport> {
    if !(config.floor >= 0.0) || !config.r.is_finite() {
        return Err(Error::InvalidParameter("floor and r must be finite, floor >= 0".into()));
    }
    let mut fits = Vec::new();
    let mut diagonal_slopes = Vec::new();
    let mut off_diagonal_exponents = Vec::new();
    let mut constants = Vec::new();
    let mut insufficient = Vec::new();
    let mut failures = Vec::new();
    let mut series = Vec::new();
    let limit = config.band_limit as i64;

    for alpha in 0..=config.alpha_max {
        let d = delta(k, alpha)?;
        let threshold = config.r - alpha as f64 + config.slope_slack;
        let mut diag = None;
        for band in -limit..=limit {
            let (xs, ys) = band_points(&d, band, config.floor);
            for (x, y) in xs.iter().zip(&ys) {
                series.push(PlotPoint {
                    alpha,
                    band,
                    log_index: *x,
                    log_abs: *y,
                });
            }
            let (slope, pass) = if xs.len() >= config.min_points {
                let s = tail_slope(&xs, &ys);
                (s, s.map(|s| s <= threshold))
            } else {
                if !xs.is_empty() || band == 0 {
                    insufficient.push((alpha, band));
                }
                (None, None)
            };
            if pass == Some(false) {
                failures.push(format!(
                    "alpha {alpha} band {band}: slope {:.4} above {threshold:.4}",
                    slope.unwrap_or(f64::NAN)
                ));
            }
            if band == 0 {
                diag = slope;
            }
            fits.push(BandFit {
                alpha,
                band,
                points: xs.len(),
                slope,
                threshold,
                pass,
            });
        }
        diagonal_slopes.push(diag);

        let shift = alpha as f64 - config.r;
        let (rows, cols) = (d.reported_rows(), d.reported_cols());
        for n in 0..=config.n_max {
            let full = weighted_sup(&d, rows, cols, shift, n, config.floor);
            let half = weighted_sup(&d, rows / 2, cols / 2, shift, n, config.floor);
            let stable = full <= (1.0 + config.stability_slack) * half || full == 0.0;
            if !stable {
                failures.push(format!(
                    "alpha {alpha} N {n}: constant grows from {half:.4e} to {full:.4e}"
                ));
            }
            constants.push(ConstantEstimate {
                alpha,
                n,
                full,
                half,
                stable,
            });
        }

        let (mut bx, mut by) = (Vec::new(), Vec::new());
        for band in 0..rows.max(cols) as i64 {
            let mut sup: f64 = 0.0;
            for b in [band, -band] {
                let mut n = (-b).max(0);
                while n < cols as i64 && n + b < rows as i64 {
                    let m = n + b;
                    let v = d.get(m as usize, n as usize).norm();
                    if v > config.floor {
                        sup = sup.max(v * (1.0 + (m + n) as f64).powf(shift));
                    }
                    n += 1;
                }
            }
            if sup > 0.0 {
                bx.push((1.0 + band as f64).ln());
                by.push(sup.ln());
            }
        }
        off_diagonal_exponents.push(least_squares_slope(&bx, &by));
    }

    Ok(ClassifierReport {
        config: config.clone(),
        fits,
        diagonal_slopes,
        off_diagonal_exponents,
        constants,
        insufficient,
        pass: failures.is_empty(),
        failures,
        series,
    })
}

/// Diagonal slopes of `log|Delta^alpha K|_{n,n}` against `log(1+2n)` for
/// alpha = 0, 1, 2; `None` where the diagonal is below the floor.
pub fn fit_order(k: &OperatorMatrix) -> Result<[Option<f64>; 3]> {
    let mut out = [None; 3];
    for (alpha, slot) in out.iter_mut().enumerate() {
        let d = delta(k, alpha)?;
        let (xs, ys) = band_points(&d, 0, DEFAULT_FLOOR);
        *slot = tail_slope(&xs, &ys);
    }
    Ok(out)
}

/// The fitted points behind a report, for plotting.
pub fn emit_plot_series(report: &ClassifierReport) -> PlotSeries {
    let note = if report.series.is_empty() {
        Some(format!(
            "no entries above floor {:e}; nothing to plot",
            report.config.floor
        ))
    } else {
        None
    };
    PlotSeries {
        points: report.series.clone(),
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn harmonic(size: usize, s: f64) -> OperatorMatrix {
        OperatorMatrix::diagonal(size, |n| (2.0 + 2.0 * n as f64).powf(s / 2.0))
    }

    fn shift(size: usize) -> OperatorMatrix {
        OperatorMatrix::from_real_fn(size, size, |m, n| if n == m + 1 { 1.0 } else { 0.0 })
    }

    fn creation(size: usize) -> OperatorMatrix {
        OperatorMatrix::from_real_fn(size, size, |m, n| {
            if m == n + 1 {
                (n as f64 + 1.0).sqrt()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn shift_is_order_zero() {
        let z = shift(64);
        let rep = classify(&z, &ClassifierConfig::new(0.0, 2, 4)).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
        assert!(rep.fit(0, -1).unwrap().slope.unwrap().abs() < 1e-12);
        assert_eq!(delta(&z, 1).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn harmonic_half_order() {
        let k = harmonic(128, 1.0);
        assert!(classify(&k, &ClassifierConfig::new(0.5, 2, 4)).unwrap().pass);
        let rep = classify(&k, &ClassifierConfig::new(0.0, 2, 4)).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.fit(0, 0).unwrap().pass, Some(false));
    }

    #[test]
    fn creation_half_order() {
        let rep = classify(&creation(96), &ClassifierConfig::new(0.5, 2, 4)).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
    }

    #[test]
    fn fit_order_examples() {
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let r = fit_order(&harmonic(128, s)).unwrap();
            assert!((r[0].unwrap() - s / 2.0).abs() < 0.05, "s={s} {r:?}");
            assert!((r[1].unwrap() - (s / 2.0 - 1.0)).abs() < 0.1, "s={s} {r:?}");
        }
        let r = fit_order(&OperatorMatrix::identity(64)).unwrap();
        assert!(r[0].unwrap().abs() < 1e-12);
        assert_eq!(r[1], None);
        let h = OperatorMatrix::diagonal(128, |n| 2.0 * n as f64 + 1.0);
        assert!((fit_order(&h).unwrap()[0].unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn generated_family_orders() {
        for r in [-1.0, -0.5, 0.5, 1.0] {
            let k = OperatorMatrix::generated(96, r, 8.0);
            let rep = classify(&k, &ClassifierConfig::new(r, 2, 4)).unwrap();
            assert!(rep.pass, "r={r} {:?}", rep.failures);
            let d = delta(&k, 1).unwrap();
            let rep = classify(&d, &ClassifierConfig::new(r - 1.0, 1, 4)).unwrap();
            assert!(rep.pass, "r={r} {:?}", rep.failures);
        }
    }

    #[test]
    fn pointwise_weight_shifts_order() {
        let k = OperatorMatrix::generated(96, 0.0, 8.0);
        for s in [-1.0, 1.0] {
            let w = super::super::pointwise_mul(&k, |m, n| (1.0 + (m + n) as f64).powf(s));
            assert!(classify(&w, &ClassifierConfig::new(s, 2, 4)).unwrap().pass);
        }
    }

    #[test]
    fn plot_series_slopes_drop_by_one_per_delta() {
        let k = OperatorMatrix::generated(128, -0.75, 8.0);
        let rep = classify(&k, &ClassifierConfig::new(-0.75, 2, 2)).unwrap();
        let s = emit_plot_series(&rep);
        for alpha in 0..=2usize {
            let (xs, ys): (Vec<f64>, Vec<f64>) = s
                .points
                .iter()
                .filter(|p| p.alpha == alpha && p.band == 0)
                .map(|p| (p.log_index, p.log_abs))
                .unzip();
            let slope = crate::fit::tail_slope(&xs, &ys).unwrap();
            let want = -0.75 - alpha as f64;
            assert!((slope - want).abs() < 0.1, "alpha={alpha} slope={slope}");
        }
    }

    #[test]
    fn zero_matrix_series_is_empty() {
        let rep = classify(&OperatorMatrix::zeros(40, 40), &ClassifierConfig::new(0.0, 1, 2)).unwrap();
        assert!(rep.pass);
        let s = emit_plot_series(&rep);
        assert!(s.points.is_empty());
        assert!(s.note.is_some());
    }

    #[test]
    fn csv_has_one_row_per_fit() {
        let rep = classify(&harmonic(48, 1.0), &ClassifierConfig::new(0.5, 1, 1)).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + rep.fits.len());
        assert_eq!(rep.fits.len(), 2 * 17);
    }

    #[test]
    fn complex_entries_use_modulus() {
        let k = OperatorMatrix::from_fn(64, 64, |m, n| {
            if m == n {
                Complex64::new(0.0, (1.0 + n as f64).sqrt())
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!((fit_order(&k).unwrap()[0].unwrap() - 0.5).abs() < 0.05);
    }
}
