//! Truncated power series in one variable.
//!
//! A [`Series`] of order `p` stores the coefficients `c[0..=p]` of
//! `c0 + c1 e + ... + cp e^p` and drops everything of higher degree.
//! Composition of two series is the systematic form of the chain rule
//! (Faà di Bruno), which is how derivative jets of iterated maps are
//! propagated to arbitrary order.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<f64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    /// Build from Taylor coefficients, padding or truncating to `order`.
    pub fn from_coeffs(coeffs: &[f64], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (dst, src) in s.coeffs.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        s
    }

    /// Build from derivative values `d[j] = f^(j)(x)`, so `c[j] = d[j] / j!`.
    pub fn from_derivatives(derivs: &[f64], order: usize) -> Self {
        let mut s = Self::zero(order);
        let mut fact = 1.0;
        for (j, dst) in s.coeffs.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            if let Some(d) = derivs.get(j) {
                *dst = d / fact;
            }
        }
        s
    }

    /// Derivative values `j! c[j]`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j > 0 {
                    fact *= j as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Same series with the constant term removed.
    pub fn without_constant(&self) -> Self {
        let mut s = self.clone();
        s.coeffs[0] = 0.0;
        s
    }

    /// `self(inner(e))` where `self` is expanded around `inner(0)`, so only the
    /// non-constant part of `inner` is substituted.
    pub fn compose(&self, inner: &Series) -> Series {
        let order = self.order().min(inner.order());
        let delta = Series::from_coeffs(&inner.without_constant().coeffs, order);
        let mut acc = Series::constant(self.coeff(order), order);
        for j in (0..order).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += self.coeffs[j];
        }
        acc
    }

    /// Compositional inverse of a series with zero constant term and nonzero
    /// linear term: returns `b` with `self(b(e)) = e + O(e^{p+1})`.
    ///
    /// Returns `None` when the linear coefficient vanishes.
    pub fn revert(&self) -> Option<Series> {
        let order = self.order();
        let a1 = self.coeff(1);
        if a1 == 0.0 || !a1.is_finite() {
            return None;
        }
        let a = self.without_constant();
        let mut b = Series::zero(order);
        if order >= 1 {
            b.coeffs[1] = 1.0 / a1;
        }
        for n in 2..=order {
            // coefficient n of a(b) with b_n still zero; a1 b_n must cancel it
            let partial = a.compose(&b);
            b.coeffs[n] = -partial.coeff(n) / a1;
        }
        Some(b)
    }

    /// `self^m`, truncated.
    pub fn powi(&self, m: usize) -> Series {
        let mut acc = Series::constant(1.0, self.order());
        for _ in 0..m {
            acc = &acc * self;
        }
        acc
    }
}

impl Mul for &Series {
    type Output = Series;

    fn mul(self, rhs: &Series) -> Series {
        let order = self.order().min(rhs.order());
        let mut out = Series::zero(order);
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(order + 1 - i) {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, rhs: &Series) -> Series {
        let order = self.order().min(rhs.order());
        Series {
            coeffs: (0..=order).map(|j| self.coeff(j) + rhs.coeff(j)).collect(),
        }
    }
}

impl Sub for &Series {
    type Output = Series;

    fn sub(self, rhs: &Series) -> Series {
        let order = self.order().min(rhs.order());
        Series {
            coeffs: (0..=order).map(|j| self.coeff(j) - rhs.coeff(j)).collect(),
        }
    }
}

/// Partial Bell polynomials `B_{n,m}(x1, x2, ...)` for `1 <= m <= n <= p`,
/// evaluated at the derivative values `xs[k-1] = x_k`.
///
/// Entry `[n][m]` holds `B_{n,m}`; row and column 0 are unused except
/// `B_{0,0} = 1`.
pub fn partial_bell(xs: &[f64], p: usize) -> Vec<Vec<f64>> {
    let mut derivs = vec![0.0];
    derivs.extend(xs.iter().take(p).copied());
    let g = Series::from_derivatives(&derivs, p);
    let mut table = vec![vec![0.0; p + 1]; p + 1];
    table[0][0] = 1.0;
    let mut power = Series::constant(1.0, p);
    let mut m_fact = 1.0;
    for m in 1..=p {
        power = &power * &g;
        m_fact *= m as f64;
        let d = power.derivatives();
        for (n, row) in table.iter_mut().enumerate().skip(m) {
            row[m] = d[n] / m_fact;
        }
    }
    table
}
