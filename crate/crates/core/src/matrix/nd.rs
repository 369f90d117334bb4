//! Matrices indexed by multi-index pairs in dimension `d <= 2`, the box
//! operators acting on them, and the two-dimensional creation-operator
//! example.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::least_squares_slope;

/// `K[m][n]` for `m, n` in `{0..=cutoff}^d`, stored row-major over the
/// flattened multi-indices (last component fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrixNd {
    dim: usize,
    cutoff: usize,
    data: Vec<Complex64>,
}

impl OperatorMatrixNd {
    pub fn from_fn<F>(dim: usize, cutoff: usize, f: F) -> Result<Self>
    where
        F: Fn(&[usize], &[usize]) -> Complex64,
    {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=2")));
        }
        let side = cutoff + 1;
        let count = side.pow(dim as u32);
        let mut data = Vec::with_capacity(count * count);
        let mut m = vec![0; dim];
        let mut n = vec![0; dim];
        for i in 0..count {
            unflatten(i, side, &mut m);
            for j in 0..count {
                unflatten(j, side, &mut n);
                let v = f(&m, &n);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                data.push(v);
            }
        }
        Ok(Self { dim, cutoff, data })
    }

    pub fn zeros(dim: usize, cutoff: usize) -> Result<Self> {
        Self::from_fn(dim, cutoff, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn count(&self) -> usize {
        (self.cutoff + 1).pow(self.dim as u32)
    }

    fn flat(&self, idx: &[isize]) -> Option<usize> {
        let side = (self.cutoff + 1) as isize;
        let mut out = 0;
        for &c in idx {
            if c < 0 || c >= side {
                return None;
            }
            out = out * side + c;
        }
        Some(out as usize)
    }

    pub fn get(&self, m: &[usize], n: &[usize]) -> Complex64 {
        let mi: Vec<isize> = m.iter().map(|&c| c as isize).collect();
        let ni: Vec<isize> = n.iter().map(|&c| c as isize).collect();
        self.get_signed(&mi, &ni)
            .expect("multi-index inside the cutoff")
    }

    /// Entry with negative components read as zero; `None` past the cutoff.
    fn get_signed(&self, m: &[isize], n: &[isize]) -> Option<Complex64> {
        if m.iter().chain(n).any(|&c| c < 0) {
            return Some(Complex64::new(0.0, 0.0));
        }
        let i = self.flat(m)?;
        let j = self.flat(n)?;
        Some(self.data[i * self.count() + j])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        let cutoff = self.cutoff.min(other.cutoff);
        let mut d: f64 = 0.0;
        for_each_pair(self.dim, cutoff, |m, n| {
            d = d.max((self.get(m, n) - other.get(m, n)).norm());
        });
        d
    }

    fn shrink<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[isize], &[isize]) -> Complex64,
    {
        if self.cutoff < 2 {
            return Err(Error::InvalidParameter(format!(
                "cutoff {} too small for a shifted combination",
                self.cutoff
            )));
        }
        Self::from_fn(self.dim, self.cutoff - 1, |m, n| {
            let mi: Vec<isize> = m.iter().map(|&c| c as isize).collect();
            let ni: Vec<isize> = n.iter().map(|&c| c as isize).collect();
            f(&mi, &ni)
        })
    }

    fn at(&self, m: &[isize], n: &[isize]) -> Complex64 {
        self.get_signed(m, n)
            .expect("shifted index stays inside the computed block")
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::InvalidParameter(format!(
                "axis {axis} in dimension {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Discrete `x_k` derivative:
    /// `sqrt((n_k+1)/2) K[m][n+e] - sqrt(n_k/2) K[m][n-e]
    ///  + sqrt((m_k+1)/2) K[m+e][n] - sqrt(m_k/2) K[m-e][n]`,
    /// reported on `cutoff - 1`.
    pub fn box_x(&self, axis: usize) -> Result<Self> {
        self.check_axis(axis)?;
        self.shrink(|m, n| {
            let (mk, nk) = (m[axis] as f64, n[axis] as f64);
            let (mp, mm) = (shifted(m, axis, 1), shifted(m, axis, -1));
            let (np, nm) = (shifted(n, axis, 1), shifted(n, axis, -1));
            self.at(m, &np) * ((nk + 1.0) / 2.0).sqrt() - self.at(m, &nm) * (nk / 2.0).sqrt()
                + self.at(&mp, n) * ((mk + 1.0) / 2.0).sqrt()
                - self.at(&mm, n) * (mk / 2.0).sqrt()
        })
    }

    /// Discrete `xi_k` derivative (times `i`):
    /// `sqrt((m_k+1)/2) K[m+e][n] + sqrt(m_k/2) K[m-e][n]
    ///  - sqrt((n_k+1)/2) K[m][n+e] - sqrt(n_k/2) K[m][n-e]`,
    /// reported on `cutoff - 1`.
    pub fn box_xi(&self, axis: usize) -> Result<Self> {
        self.check_axis(axis)?;
        self.shrink(|m, n| {
            let (mk, nk) = (m[axis] as f64, n[axis] as f64);
            let (mp, mm) = (shifted(m, axis, 1), shifted(m, axis, -1));
            let (np, nm) = (shifted(n, axis, 1), shifted(n, axis, -1));
            self.at(&mp, n) * ((mk + 1.0) / 2.0).sqrt() + self.at(&mm, n) * (mk / 2.0).sqrt()
                - self.at(m, &np) * ((nk + 1.0) / 2.0).sqrt()
                - self.at(m, &nm) * (nk / 2.0).sqrt()
        })
    }

    /// `K[m+e][n+e] - K[m][n]` along one axis, reported on `cutoff - 1`.
    pub fn delta_axis(&self, axis: usize) -> Result<Self> {
        self.check_axis(axis)?;
        self.shrink(|m, n| self.at(&shifted(m, axis, 1), &shifted(n, axis, 1)) - self.at(m, n))
    }

    /// Applies `box_x` per `alpha` and `box_xi` per `beta`, axis by axis.
    pub fn box_power(&self, alpha: &[usize], beta: &[usize]) -> Result<Self> {
        let mut cur = self.clone();
        for (axis, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
            for _ in 0..a {
                cur = cur.box_x(axis)?;
            }
            for _ in 0..b {
                cur = cur.box_xi(axis)?;
            }
        }
        Ok(cur)
    }

    /// Largest deviation from
    /// `(m_k - n_k) K[m][n] = sqrt(m_k/2) (box_x + box_xi)K[m-e][n]
    ///  - sqrt(n_k/2) (box_x - box_xi)K[m][n-e]`
    /// on the block where both sides are available.
    pub fn mode_identity_residual(&self, axis: usize) -> Result<f64> {
        let bx = self.box_x(axis)?;
        let bxi = self.box_xi(axis)?;
        let cutoff = self.cutoff - 1;
        let mut worst: f64 = 0.0;
        for_each_pair(self.dim, cutoff, |m, n| {
            let mi: Vec<isize> = m.iter().map(|&c| c as isize).collect();
            let ni: Vec<isize> = n.iter().map(|&c| c as isize).collect();
            let (mk, nk) = (m[axis] as f64, n[axis] as f64);
            let lhs = self.get(m, n) * (mk - nk);
            let mm = shifted(&mi, axis, -1);
            let nm = shifted(&ni, axis, -1);
            let plus = bx.at(&mm, &ni) + bxi.at(&mm, &ni);
            let minus = bx.at(&mi, &nm) - bxi.at(&mi, &nm);
            let rhs = plus * (mk / 2.0).sqrt() - minus * (nk / 2.0).sqrt();
            worst = worst.max((lhs - rhs).norm());
        });
        Ok(worst)
    }
}

fn unflatten(mut i: usize, side: usize, out: &mut [usize]) {
    for c in out.iter_mut().rev() {
        *c = i % side;
        i /= side;
    }
}

fn shifted(idx: &[isize], axis: usize, by: isize) -> Vec<isize> {
    let mut out = idx.to_vec();
    out[axis] += by;
    out
}

fn for_each_pair<F: FnMut(&[usize], &[usize])>(dim: usize, cutoff: usize, mut f: F) {
    let side = cutoff + 1;
    let count = side.pow(dim as u32);
    let mut m = vec![0; dim];
    let mut n = vec![0; dim];
    for i in 0..count {
        unflatten(i, side, &mut m);
        for j in 0..count {
            unflatten(j, side, &mut n);
            f(&m, &n);
        }
    }
}

/// `Delta_{e_1} K` on the band `m = n + e_1` at fixed `n_1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandValue {
    pub n1: usize,
    pub computed: f64,
    /// `2 / (sqrt(n_1+3) + sqrt(n_1+1))`.
    pub stated: f64,
    /// `1 / (sqrt(n_1+2) + sqrt(n_1+1))`.
    pub closed_form: f64,
}

/// `sup |box^{alpha,beta} K| / (1+|m|+|n|)^{(r-|alpha|-|beta|)/2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxConstant {
    pub alpha: [usize; 2],
    pub beta: [usize; 2],
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub cutoff: usize,
    pub band_values: Vec<BandValue>,
    /// Largest `|computed - stated|` over the band.
    pub stated_form_error: f64,
    /// Largest `|computed - closed_form|` over the band.
    pub closed_form_error: f64,
    /// Slope in `n_2` at each fixed `n_1` (log|Delta_{e_1}K| against
    /// `log(1+|m|+|n|)`).
    pub slopes_in_n2: Vec<(usize, f64)>,
    pub max_abs_slope_in_n2: f64,
    /// `sup |Delta_{e_1}K| (1+|m|+|n|)^{1/2}` on the full and half cutoff:
    /// the one-dimensional decay bound, which keeps growing.
    pub one_d_bound_full: f64,
    pub one_d_bound_half: f64,
    pub box_order: f64,
    pub box_constants: Vec<BoxConstant>,
    pub box_constant: f64,
    /// Largest residual of the mode identity on either axis.
    pub mode_identity_residual: f64,
}

/// The creation operator in the first variable, `phi_n -> sqrt(n_1+1)
/// phi_{n+e_1}`, as a two-dimensional matrix.
pub fn creation_first_axis(cutoff: usize) -> Result<OperatorMatrixNd> {
    OperatorMatrixNd::from_fn(2, cutoff, |m, n| {
        if m[0] == n[0] + 1 && m[1] == n[1] {
            Complex64::new((n[0] as f64 + 1.0).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Diagnostics for the creation operator in the first of two variables at
/// cutoff 24: its diagonal difference is bounded but does not decay in
/// `n_2`, while the box-operator estimate of order 1 holds.
pub fn counterexample_2d() -> Result<CounterexampleReport> {
    counterexample_2d_at(24)
}

pub fn counterexample_2d_at(cutoff: usize) -> Result<CounterexampleReport> {
    let k = creation_first_axis(cutoff)?;
    let dk = k.delta_axis(0)?;
    let top = dk.cutoff();

    let mut band_values = Vec::new();
    let (mut stated_err, mut closed_err): (f64, f64) = (0.0, 0.0);
    for n1 in 0..top {
        let computed = dk.get(&[n1 + 1, 0], &[n1, 0]).re;
        let x = n1 as f64;
        let stated = 2.0 / ((x + 3.0).sqrt() + (x + 1.0).sqrt());
        let closed_form = 1.0 / ((x + 2.0).sqrt() + (x + 1.0).sqrt());
        stated_err = stated_err.max((computed - stated).abs());
        closed_err = closed_err.max((computed - closed_form).abs());
        band_values.push(BandValue {
            n1,
            computed,
            stated,
            closed_form,
        });
    }

    let mut slopes = Vec::new();
    for n1 in 0..top {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for n2 in 0..=top {
            let v = dk.get(&[n1 + 1, n2], &[n1, n2]).norm();
            if v > 0.0 {
                xs.push((1.0 + (2 * (n1 + n2) + 1) as f64).ln());
                ys.push(v.ln());
            }
        }
        if let Some(s) = least_squares_slope(&xs, &ys) {
            slopes.push((n1, s));
        }
    }
    let max_abs_slope = slopes.iter().map(|&(_, s)| s.abs()).fold(0.0, f64::max);

    let weighted = |limit: usize| {
        let mut sup: f64 = 0.0;
        for_each_pair(2, top, |m, n| {
            if m.iter().chain(n).all(|&c| c <= limit) {
                let size = (m.iter().sum::<usize>() + n.iter().sum::<usize>()) as f64;
                sup = sup.max(dk.get(m, n).norm() * (1.0 + size).sqrt());
            }
        });
        sup
    };
    let one_d_full = weighted(top);
    let one_d_half = weighted(top / 2);

    let order = 1.0;
    let mut box_constants = Vec::new();
    let multi = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
    for alpha in multi {
        for beta in multi {
            let total = alpha[0] + alpha[1] + beta[0] + beta[1];
            if total > 2 {
                continue;
            }
            let b = k.box_power(&alpha, &beta)?;
            let exponent = (order - total as f64) / 2.0;
            let mut sup: f64 = 0.0;
            for_each_pair(2, b.cutoff(), |m, n| {
                let size = (m.iter().sum::<usize>() + n.iter().sum::<usize>()) as f64;
                sup = sup.max(b.get(m, n).norm() / (1.0 + size).powf(exponent));
            });
            box_constants.push(BoxConstant { alpha, beta, sup });
        }
    }
    let box_constant = box_constants.iter().map(|c| c.sup).fold(0.0, f64::max);
    let mode_identity_residual = k.mode_identity_residual(0)?.max(k.mode_identity_residual(1)?);

    Ok(CounterexampleReport {
        cutoff,
        band_values,
        stated_form_error: stated_err,
        closed_form_error: closed_err,
        slopes_in_n2: slopes,
        max_abs_slope_in_n2: max_abs_slope,
        one_d_bound_full: one_d_full,
        one_d_bound_half: one_d_half,
        box_order: order,
        box_constants,
        box_constant,
        mode_identity_residual,
    })
}
