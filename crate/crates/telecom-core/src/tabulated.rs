//! Numeric inversion of a continuous CDF from a log-spaced table.
//!
//! The table brackets the quantile; the bracket is then narrowed by
//! Illinois regula falsi against the exact CDF until the residual meets the
//! target. Tables over unbounded supports are extended until the remaining
//! mass is negligible, and quantiles past the last node are bracketed by
//! doubling.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type CdfFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TabulatedCdf {
    cdf: CdfFn,
    nodes: Vec<f64>,
    values: Vec<f64>,
    tol: f64,
}

impl fmt::Debug for TabulatedCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TabulatedCdf")
            .field("lo", &self.nodes[0])
            .field("hi", &self.nodes[self.nodes.len() - 1])
            .field("points", &self.nodes.len())
            .field("tol", &self.tol)
            .finish()
    }
}

const MAX_REFINE: usize = 200;

impl TabulatedCdf {
    /// `cdf` must be nondecreasing and continuous on `[lo, hi]` with
    /// `cdf(lo) = 0`; `hi` may be infinite.
    pub fn build<F>(cdf: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo > 0.0 && lo.is_finite() && hi > lo) {
            return Err(Error::Inversion(format!("bad table range [{lo}, {hi}]")));
        }
        if points < 2 || !(tol > 0.0) {
            return Err(Error::Inversion("table needs >= 2 points and tol > 0".into()));
        }
        let mut top = hi;
        if !top.is_finite() {
            top = lo * 2.0;
            while 1.0 - cdf(top) > 1e-13 {
                top *= 2.0;
                if !top.is_finite() {
                    return Err(Error::Inversion("CDF does not approach 1".into()));
                }
            }
        }
        let ratio = (top / lo).ln() / (points - 1) as f64;
        let nodes: Vec<f64> = (0..points)
            .map(|i| match i {
                0 => lo,
                i if i == points - 1 => top,
                i => lo * (ratio * i as f64).exp(),
            })
            .collect();
        let mut values: Vec<f64> = nodes.iter().map(|&x| cdf(x).clamp(0.0, 1.0)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Inversion("non-finite CDF value in table".into()));
        }
        for i in 1..values.len() {
            values[i] = values[i].max(values[i - 1]);
        }
        Ok(Self { cdf: Arc::new(cdf), nodes, values, tol })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quantile at level `u ∈ [0, 1)`, accurate to `|F(x) - u| ≤ tol` or to
    /// machine resolution of `x`.
    pub fn invert(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Inversion(format!("level {u} outside [0, 1)")));
        }
        let last = self.nodes.len() - 1;
        if u <= self.values[0] {
            return Ok(self.nodes[0]);
        }
        let (mut a, mut b, mut fa, mut fb) = if u >= self.values[last] {
            let mut a = self.nodes[last];
            let mut fa = self.values[last];
            let mut b = 2.0 * a;
            let mut fb = (self.cdf)(b);
            while fb < u {
                a = b;
                fa = fb;
                b *= 2.0;
                if !b.is_finite() {
                    return Err(Error::Inversion(format!("quantile {u} beyond range")));
                }
                fb = (self.cdf)(b);
            }
            (a, b, fa, fb)
        } else {
            // First node with value > u.
            let j = self.values.partition_point(|&v| v <= u);
            (self.nodes[j - 1], self.nodes[j], self.values[j - 1], self.values[j])
        };
        let mut side = 0i8;
        for _ in 0..MAX_REFINE {
            let x = if fb > fa { (a + (u - fa) * (b - a) / (fb - fa)).clamp(a, b) } else { 0.5 * (a + b) };
            let fx = (self.cdf)(x);
            if (fx - u).abs() <= self.tol || b - a <= 4.0 * f64::EPSILON * b {
                return Ok(x);
            }
            if fx < u {
                a = x;
                fa = fx;
                if side == -1 {
                    fb = u + 0.5 * (fb - u);
                }
                side = -1;
            } else {
                b = x;
                fb = fx;
                if side == 1 {
                    fa = u - 0.5 * (u - fa);
                }
                side = 1;
            }
        }
        Err(Error::Inversion(format!("no convergence to {:e} at level {u}", self.tol)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverts_bounded_power_law() {
        let table = TabulatedCdf::build(|x: f64| (x * x).min(1.0), 1e-6, 1.0, 2048, 1e-10).unwrap();
        for &u in &[0.01, 0.25, 0.5, 0.81, 0.999] {
            assert_relative_eq!(table.invert(u).unwrap(), u.sqrt(), max_relative = 1e-8);
        }
    }

    #[test]
    fn inverts_unbounded_pareto() {
        let table = TabulatedCdf::build(|x: f64| 1.0 - x.powi(-3), 1.0, f64::INFINITY, 512, 1e-10).unwrap();
        for &u in &[0.1, 0.5, 0.9, 0.999_999] {
            let x = table.invert(u).unwrap();
            assert!((1.0 - x.powi(-3) - u).abs() <= 1e-10);
        }
    }

    #[test]
    fn rejects_bad_levels() {
        let table = TabulatedCdf::build(|x: f64| x.min(1.0), 0.1, 1.0, 16, 1e-8).unwrap();
        assert!(table.invert(1.0).is_err());
        assert!(table.invert(-0.1).is_err());
    }
}
