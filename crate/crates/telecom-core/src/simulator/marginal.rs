//! Exact law of `Y(t)` for compactly supported rewards.
//!
//! The Lévy-Khintchine exponent integrates by parts against the tail
//! `T(v) = μ[v, ∞)`:
//! `ln E e^{iθY} = Q ∫ (e^{iθv} - 1 - iθv) μ(dv) = Q ∫_0^∞ iθ (e^{iθv} - 1) T(v) dv`,
//! and Gil-Pelaez inverts it. Independent of the jump samplers, so it serves
//! as an oracle for them.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::measures::TailMeasure;
use crate::quadrature::Quadrature;

/// Cap on oscillation panels per exponent evaluation.
const MAX_PERIODS: f64 = 1e5;

/// `ln E exp(iθ Y(t))`.
pub fn log_cf(m: &TailMeasure, theta: f64) -> Result<Complex64> {
    let top = m.max_jump();
    if !top.is_finite() {
        return Err(domain("exact law needs a compactly supported reward"));
    }
    if theta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let th = theta.abs();
    if th * top / (2.0 * PI) > MAX_PERIODS {
        return Err(Error::Integration(format!("too many oscillations at theta = {theta}")));
    }
    let g = m.gamma();
    let quad = Quadrature::with_tolerances(1e-11, 1e-14);
    let term = |v: f64| Complex64::i() * th * (Complex64::from_polar(1.0, th * v) - 1.0) * m.tail_unchecked(v);

    // Head (0, v1]: v = v1 x^p with p = 1/(2-γ) removes the v^(1-γ) cusp.
    let v1 = (PI / th).min(top);
    let p = 1.0 / (2.0 - g);
    let head = |x: f64, part: fn(Complex64) -> f64| {
        if x <= 0.0 {
            return 0.0;
        }
        part(term(v1 * x.powf(p))) * v1 * p * x.powf(p - 1.0)
    };
    let re = |z: Complex64| z.re;
    let im = |z: Complex64| z.im;
    let mut value = Complex64::new(
        quad.integrate(|x| head(x, re), 0.0, 1.0)?.value,
        quad.integrate(|x| head(x, im), 0.0, 1.0)?.value,
    );
    if v1 < top {
        let step = PI / th;
        let mut breaks = vec![v1];
        let mut b = v1 + step;
        while b < top {
            breaks.push(b);
            b += step;
        }
        breaks.push(top);
        value += Complex64::new(
            quad.integrate_with_breaks(|v| term(v).re, &breaks)?.value,
            quad.integrate_with_breaks(|v| term(v).im, &breaks)?.value,
        );
    }
    let value = value * m.q();
    Ok(if theta < 0.0 { value.conj() } else { value })
}

/// CDF of `Y(t)/scale` on `[-x_max, x_max]`, from the characteristic
/// function tabulated on fixed 21-point Kronrod panels.
#[derive(Debug, Clone)]
pub struct MarginalCdf {
    x_max: f64,
    /// `(θ, weight, φ(θ))` in scaled units.
    nodes: Vec<(f64, f64, Complex64)>,
}

impl MarginalCdf {
    pub fn new(m: &TailMeasure, scale: f64, x_max: f64) -> Result<Self> {
        if !(scale > 0.0 && x_max > 0.0) {
            return Err(domain("scale and x_max must be positive"));
        }
        // Truncate where |φ| < e^-40.
        let mut top = 1.0;
        while log_cf(m, top / scale)?.re > -40.0 {
            top *= 1.5;
            if top > 1e6 {
                return Err(Error::Integration("characteristic function does not decay".into()));
            }
        }
        let panels = ((top * x_max / PI).ceil() as usize * 2).max(64);
        let width = top / panels as f64;
        let mut nodes = Vec::with_capacity(21 * panels);
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for (x, w) in KRONROD.iter() {
                for sign in [-1.0, 1.0] {
                    if *x == 0.0 && sign < 0.0 {
                        continue;
                    }
                    let th = mid + sign * x * 0.5 * width;
                    nodes.push((th, w * 0.5 * width, log_cf(m, th / scale)?.exp()));
                }
            }
        }
        Ok(Self { x_max, nodes })
    }

    /// `P(Y(t)/scale ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.abs() > self.x_max {
            return Err(domain(format!("x = {x} outside the tabulated range")));
        }
        let sum: f64 =
            self.nodes.iter().map(|&(th, w, phi)| w * (Complex64::from_polar(1.0, -th * x) * phi).im / th).sum();
        Ok((0.5 - sum / PI).clamp(0.0, 1.0))
    }
}

/// Nonnegative Kronrod abscissae on [-1, 1] with their weights.
const KRONROD: [(f64, f64); 11] = [
    (0.000000000000000000000000000000000, 0.149445554002916905664936468389821),
    (0.148874338981631210884826001129720, 0.147739104901338491374841515972068),
    (0.294392862701460198131126603103866, 0.142775938577060080797094273138717),
    (0.433395394129247190799265943165784, 0.134709217311473325928054001771707),
    (0.562757134668604683339000099272694, 0.123491976262065851077208323174560),
    (0.679409568299024406234327365114874, 0.109387158802297641899210590325805),
    (0.780817726586416897063717578345042, 0.093125454583697605535065465083366),
    (0.865063366688984510732096688423493, 0.075039674810919952767043140916190),
    (0.930157491355708226001207180059508, 0.054755896574351996031381300244580),
    (0.973906528517171720077964012084452, 0.032558162307964727478818972459390),
    (0.995657163025808080735527280689003, 0.011694638867371874278064396062192),
];
