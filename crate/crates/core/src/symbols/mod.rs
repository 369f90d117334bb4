//! Isotropic symbols `a(x, xi)` and the checks run on them.
//!
//! A symbol of order `r` satisfies
//! `|d_x^alpha d_xi^beta a(x, xi)| <= C (1 + |x| + |xi|)^(r - alpha - beta)`.
//! Symbols here are either closed-form [`Expr`]s with exact derivatives or
//! opaque closures differentiated by central differences.

mod expr;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use expr::Expr;

use crate::error::{Error, Result};
use crate::fit::least_squares_slope;

/// Highest total derivative order trusted to finite differences.
pub const FD_MAX_ORDER: usize = 4;

/// Default relative finite-difference step, scaled by `1 + |x| + |xi|`.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

type SymbolFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Analytic(Expr),
    Sampled { f: SymbolFn, step: f64 },
}

/// An evaluation interface `(x, xi) -> C` with a declared order and a
/// derivative strategy.
#[derive(Clone)]
pub struct Symbol {
    repr: Repr,
    order: f64,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Analytic(e) => write!(f, "Symbol({e}, order {})", self.order),
            Repr::Sampled { step, .. } => {
                write!(f, "Symbol(<closure>, step {step}, order {})", self.order)
            }
        }
    }
}

impl Symbol {
    pub fn from_expr(expr: Expr, order: f64) -> Self {
        Self {
            repr: Repr::Analytic(expr),
            order,
        }
    }

    /// Parses `src` in the expression vocabulary; the declared order
    /// defaults to the expression's growth bound.
    pub fn parse(src: &str, order: Option<f64>) -> Result<Self> {
        let expr = Expr::parse(src)?;
        let order = order.unwrap_or_else(|| {
            let g = expr.growth_order();
            if g.is_finite() {
                g
            } else {
                0.0
            }
        });
        Ok(Self::from_expr(expr, order))
    }

    /// A symbol known only through evaluation; derivatives use central
    /// differences with step `DEFAULT_FD_STEP * (1 + |x| + |xi|)`.
    pub fn from_fn<F>(f: F, order: f64) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            repr: Repr::Sampled {
                f: Arc::new(f),
                step: DEFAULT_FD_STEP,
            },
            order,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        if let Repr::Sampled { step: s, .. } = &mut self.repr {
            *s = step;
        }
        self
    }

    /// Forgets the closed form, keeping only point evaluation.
    pub fn sampled(&self) -> Self {
        let this = self.clone();
        Self::from_fn(move |x, xi| this.eval(x, xi), self.order)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Analytic(e) => Some(e),
            Repr::Sampled { .. } => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.repr, Repr::Analytic(_))
    }

    pub fn eval(&self, x: f64, xi: f64) -> Complex64 {
        match &self.repr {
            Repr::Analytic(e) => e.eval(x, xi),
            Repr::Sampled { f, .. } => f(x, xi),
        }
    }

    /// `d_x^alpha d_xi^beta a(x, xi)`.
    pub fn partial(&self, alpha: usize, beta: usize, x: f64, xi: f64) -> Result<Complex64> {
        match &self.repr {
            Repr::Analytic(e) => Ok(e.partial(alpha, beta).eval(x, xi)),
            Repr::Sampled { f, step } => {
                check_fd_order(alpha + beta)?;
                Ok(central_partial(f.as_ref(), *step, alpha, beta, x, xi))
            }
        }
    }

    /// The symbol `d_x^alpha d_xi^beta a` of order `r - alpha - beta`.
    pub fn derivative(&self, alpha: usize, beta: usize) -> Result<Symbol> {
        let order = self.order - (alpha + beta) as f64;
        match &self.repr {
            Repr::Analytic(e) => Ok(Symbol::from_expr(e.partial(alpha, beta), order)),
            Repr::Sampled { f, step } => {
                check_fd_order(alpha + beta)?;
                let (f, step) = (f.clone(), *step);
                Ok(Symbol::from_fn(
                    move |x, xi| central_partial(f.as_ref(), step, alpha, beta, x, xi),
                    order,
                ))
            }
        }
    }
}

fn check_fd_order(order: usize) -> Result<()> {
    if order > FD_MAX_ORDER {
        return Err(Error::DerivativeOrder {
            order,
            limit: FD_MAX_ORDER,
        });
    }
    Ok(())
}

/// Tensor-product central difference; each one-dimensional stencil is
/// `sum_j (-1)^j C(k, j) f(t + (k/2 - j) h) / h^k`, second-order accurate.
fn central_partial(
    f: &(dyn Fn(f64, f64) -> Complex64 + Send + Sync),
    step: f64,
    alpha: usize,
    beta: usize,
    x: f64,
    xi: f64,
) -> Complex64 {
    let k = alpha + beta;
    if k == 0 {
        return f(x, xi);
    }
    // Higher orders need larger steps to keep roundoff below truncation error.
    let base = match k {
        1 | 2 => step,
        _ => step.max(f64::EPSILON.powf(1.0 / (k as f64 + 2.0))),
    };
    let h = base * (1.0 + x.abs() + xi.abs());
    let sx = stencil(alpha);
    let sxi = stencil(beta);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(ox, cx) in &sx {
        for &(oxi, cxi) in &sxi {
            acc += f(x + ox * h, xi + oxi * h) * (cx * cxi);
        }
    }
    acc / h.powi(k as i32)
}

fn stencil(k: usize) -> Vec<(f64, f64)> {
    let mut binom = 1.0;
    (0..=k)
        .map(|j| {
            let c = if j % 2 == 0 { binom } else { -binom };
            let offset = k as f64 / 2.0 - j as f64;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
            (offset, c)
        })
        .collect()
}

/// `(1 + x^2 + xi^2)^(s/2)`, the principal symbol of `(1+H)^(s/2)`.
pub fn harmonic_symbol(s: f64) -> Symbol {
    Symbol::from_expr(Expr::Bracket(s).simplify(), s)
}

/// `a~ = (-2 i xi d_x + 2 i x d_xi - d_x^2 + d_xi^2) a`, the symbol with
/// `(H_x - H_xi)[e^{i x xi} a] = e^{i x xi} a~`; same declared order.
pub fn oscillator_conjugation(sym: &Symbol) -> Result<Symbol> {
    match &sym.repr {
        Repr::Analytic(a) => {
            let two_i = Expr::constant(Complex64::new(0.0, 2.0));
            let e = Expr::Sum(vec![
                Expr::Product(vec![
                    Expr::constant(Complex64::new(0.0, -2.0)),
                    Expr::Xi,
                    a.partial(1, 0),
                ]),
                Expr::Product(vec![two_i, Expr::X, a.partial(0, 1)]),
                Expr::Product(vec![Expr::real(-1.0), a.partial(2, 0)]),
                a.partial(0, 2),
            ])
            .simplify();
            Ok(Symbol::from_expr(e, sym.order))
        }
        Repr::Sampled { f, step } => {
            let (f, step) = (f.clone(), *step);
            let i = Complex64::new(0.0, 1.0);
            Ok(Symbol::from_fn(
                move |x, xi| {
                    let p = |a, b| central_partial(f.as_ref(), step, a, b, x, xi);
                    -2.0 * i * xi * p(1, 0) + 2.0 * i * x * p(0, 1) - p(2, 0) + p(0, 2)
                },
                sym.order,
            ))
        }
    }
}

/// `n` points on the l1 circle `|x| + |xi| = radius`, corners included.
pub fn l1_circle(radius: f64, samples: usize) -> Vec<(f64, f64)> {
    (0..samples)
        .map(|k| {
            let t = 4.0 * k as f64 / samples as f64;
            let side = t.floor();
            let u = (t - side) * radius;
            match side as u8 {
                0 => (radius - u, u),
                1 => (-u, radius - u),
                2 => (-radius + u, -u),
                _ => (u, -radius + u),
            }
        })
        .collect()
}

/// Angular samples per probe circle.
pub const PROBE_SAMPLES: usize = 64;

/// Default radii for [`estimate_order`].
pub const ORDER_RADII: [f64; 6] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];

/// Least-squares slope of `log sup_{|x|+|xi|=R} |a|` against `log(1+R)`.
/// `None` when `a` vanishes on every probe circle.
pub fn estimate_order(sym: &Symbol, radii: &[f64]) -> Result<Option<f64>> {
    check_radii(radii)?;
    if radii.last().copied().unwrap_or(0.0) < 32.0 {
        return Err(Error::InvalidParameter(
            "order estimation needs a probe radius of at least 32".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in radii {
        let sup = l1_circle(r, PROBE_SAMPLES)
            .into_iter()
            .map(|(x, xi)| sym.eval(x, xi).norm())
            .fold(0.0, f64::max);
        if sup > 0.0 {
            xs.push((1.0 + r).ln());
            ys.push(sup.ln());
        }
    }
    if xs.len() < 2 {
        return Ok(None);
    }
    Ok(least_squares_slope(&xs, &ys))
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "probe radii must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Probe geometry and thresholds for [`verify_symbol_class`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolProbe {
    pub radii: Vec<f64>,
    pub samples: usize,
    /// Weighted sups above this fail outright.
    pub ceiling: f64,
    /// Allowed growth between consecutive radii in the trend check.
    pub trend_slack: f64,
    /// The trend check starts at the first radius at or above this.
    pub trend_from: f64,
}

impl Default for SymbolProbe {
    fn default() -> Self {
        Self {
            radii: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            samples: PROBE_SAMPLES,
            ceiling: 1e6,
            trend_slack: 0.10,
            trend_from: 16.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClassEntry {
    pub alpha: usize,
    pub beta: usize,
    /// `sup |d^alpha d^beta a| (1+|x|+|xi|)^(alpha+beta-r)` on each circle.
    pub weighted_sups: Vec<f64>,
    pub sup: f64,
    /// Growth slope of the weighted sups in `log(1+R)`.
    pub slope: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClassReport {
    pub order: f64,
    pub probe: SymbolProbe,
    pub entries: Vec<SymbolClassEntry>,
    pub pass: bool,
}

impl SymbolClassReport {
    pub fn entry(&self, alpha: usize, beta: usize) -> Option<&SymbolClassEntry> {
        self.entries.iter().find(|e| e.alpha == alpha && e.beta == beta)
    }
}

pub fn verify_symbol_class(
    sym: &Symbol,
    r: f64,
    alpha_max: usize,
    beta_max: usize,
) -> Result<SymbolClassReport> {
    verify_symbol_class_with(sym, r, alpha_max, beta_max, &SymbolProbe::default())
}

pub fn verify_symbol_class_with(
    sym: &Symbol,
    r: f64,
    alpha_max: usize,
    beta_max: usize,
    probe: &SymbolProbe,
) -> Result<SymbolClassReport> {
    check_radii(&probe.radii)?;
    let circles: Vec<Vec<(f64, f64)>> =
        probe.radii.iter().map(|&rad| l1_circle(rad, probe.samples)).collect();
    let mut entries = Vec::new();
    for alpha in 0..=alpha_max {
        for beta in 0..=beta_max {
            let d = sym.derivative(alpha, beta)?;
            let shift = (alpha + beta) as f64 - r;
            let weighted_sups: Vec<f64> = circles
                .iter()
                .map(|pts| {
                    pts.iter()
                        .map(|&(x, xi)| {
                            d.eval(x, xi).norm() * (1.0 + x.abs() + xi.abs()).powf(shift)
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            let sup = weighted_sups.iter().copied().fold(0.0, f64::max);
            let below_ceiling = sup.is_finite() && sup <= probe.ceiling;
            let trend_ok = probe
                .radii
                .iter()
                .zip(&weighted_sups)
                .zip(probe.radii.iter().zip(&weighted_sups).skip(1))
                .filter(|((&r0, _), _)| r0 >= probe.trend_from)
                .all(|((_, &w0), (_, &w1))| w1 <= (1.0 + probe.trend_slack) * w0);
            let (lx, ly): (Vec<f64>, Vec<f64>) = probe
                .radii
                .iter()
                .zip(&weighted_sups)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&rad, &w)| ((1.0 + rad).ln(), w.ln()))
                .unzip();
            entries.push(SymbolClassEntry {
                alpha,
                beta,
                slope: least_squares_slope(&lx, &ly),
                pass: below_ceiling && trend_ok,
                weighted_sups,
                sup,
            });
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(SymbolClassReport {
        order: r,
        probe: probe.clone(),
        entries,
        pass,
    })
}
