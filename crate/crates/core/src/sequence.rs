//! Truncated Hermite coefficient sequences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients `c_k = <f, phi_k>` for `k` up to the truncation, with an
/// optional cache of rapid-decay seminorms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteSequence {
    coeffs: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    seminorms: Vec<(u32, f64)>,
}

impl HermiteSequence {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self {
            coeffs,
            seminorms: Vec::new(),
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len])
    }

    /// The sequence with a single unit coefficient at index `k`.
    pub fn unit(k: usize, len: usize) -> Self {
        assert!(k < len, "unit index {k} outside length {len}");
        let mut c = vec![Complex64::new(0.0, 0.0); len];
        c[k] = Complex64::new(1.0, 0.0);
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Precomputes `seminorm(N)` for each requested `N`.
    pub fn with_seminorms(mut self, orders: &[u32]) -> Self {
        self.seminorms = orders
            .iter()
            .map(|&n| (n, compute_seminorm(&self.coeffs, n)))
            .collect();
        self
    }

    /// `sup_k (1+k)^N |c_k|` over the truncation.
    pub fn seminorm(&self, order: u32) -> f64 {
        self.seminorms
            .iter()
            .find(|(n, _)| *n == order)
            .map(|&(_, v)| v)
            .unwrap_or_else(|| compute_seminorm(&self.coeffs, order))
    }

    /// Isotropic Sobolev norm `sqrt(sum_k (1+k)^s |c_k|^2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (1.0 + k as f64).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn compute_seminorm(coeffs: &[Complex64], order: u32) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| (1.0 + k as f64).powi(order as i32) * c.norm())
        .fold(0.0, f64::max)
}
