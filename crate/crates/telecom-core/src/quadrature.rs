//! Adaptive Gauss–Kronrod (10/21-point) integration.
//!
//! Global adaptive bisection: the subinterval with the largest error
//! estimate is split until the summed error meets the tolerance or the
//! subdivision cap is reached. Endpoint singularities of algebraic type are
//! tolerated (the rule never evaluates the endpoints), but callers with
//! strong singularities should substitute first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_346_870,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and limits for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 0.0, max_subdivisions: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single 21-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Integrates `f` over the finite interval `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, starting from the given
    /// panel boundaries (kinks or discontinuities of the integrand).
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Estimate> {
        if points.len() < 2 {
            return Err(Error::Integration("need at least two break points".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::Integration("non-finite integration limits".into()));
        }
        let (lo, hi) = (points[0], points[points.len() - 1]);
        if lo == hi {
            return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
        }
        if lo > hi {
            let reversed: Vec<f64> = points.iter().rev().copied().collect();
            let est = self.integrate_with_breaks(f, &reversed)?;
            return Ok(Estimate { value: -est.value, ..est });
        }
        let mut breaks: Vec<f64> = points.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        let mut evaluations = 0;
        for w in breaks.windows(2) {
            let (value, error) = kronrod21(&f, w[0], w[1]);
            evaluations += 21;
            total += value;
            total_err += error;
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }

        let mut subdivisions = heap.len();
        while total_err > self.tolerance(total) {
            if !total.is_finite() || !total_err.is_finite() {
                return Err(Error::Integration(format!("non-finite integrand on [{lo}, {hi}]")));
            }
            if subdivisions >= self.max_subdivisions {
                return Err(Error::Integration(format!(
                    "subdivision cap {} reached on [{lo}, {hi}]: value {total:e}, error {total_err:e}",
                    self.max_subdivisions
                )));
            }
            let worst = match heap.pop() {
                Some(p) => p,
                None => break,
            };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Interval exhausted at machine precision; accept if the
                // remaining error is dominated by roundoff.
                heap.push(worst);
                if total_err <= 1e3 * self.tolerance(total).max(f64::EPSILON * total.abs()) {
                    break;
                }
                return Err(Error::Integration(format!("interval resolution exhausted on [{lo}, {hi}]")));
            }
            let (v1, e1) = kronrod21(&f, worst.a, mid);
            let (v2, e2) = kronrod21(&f, mid, worst.b);
            evaluations += 42;
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
            heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
            subdivisions += 1;
        }
        // Re-sum to shed accumulated update drift.
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        Ok(Estimate { value, error, evaluations })
    }

    /// Integrates over `[a, ∞)` through the map `x = a + w / (1 - w)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> Result<Estimate> {
        let g = |w: f64| {
            let one_minus = 1.0 - w;
            let x = a + w / one_minus;
            f(x) / (one_minus * one_minus)
        };
        self.integrate(g, 0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        let q = Quadrature::default();
        let est = q.integrate(|x| x.powi(20) + 3.0 * x.powi(7), -1.0, 2.0).unwrap();
        let exact = (2f64.powi(21) + 1.0) / 21.0 + 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert_relative_eq!(est.value, exact, max_relative = 1e-13);
    }

    #[test]
    fn algebraic_endpoint_singularity() {
        let q = Quadrature::default();
        let est = q.integrate(|x: f64| x.powf(-0.5), 0.0, 1.0).unwrap();
        assert_relative_eq!(est.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn semi_infinite_power_tail() {
        let q = Quadrature::default();
        let est = q.integrate_to_infinity(|x: f64| x.powf(-2.5), 1.0).unwrap();
        assert_relative_eq!(est.value, 1.0 / 1.5, max_relative = 1e-9);
    }

    #[test]
    fn breaks_handle_kinks() {
        let q = Quadrature::default();
        let est = q.integrate_with_breaks(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0]).unwrap();
        assert_relative_eq!(est.value, 0.045 + 0.245, max_relative = 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = Quadrature::default();
        let est = q.integrate(|x: f64| x.exp(), 1.0, 0.0).unwrap();
        assert_relative_eq!(est.value, -(1f64.exp() - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn subdivision_cap_is_reported() {
        let q = Quadrature { rel_tol: 1e-14, abs_tol: 0.0, max_subdivisions: 3 };
        let err = q.integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0).unwrap_err();
        assert!(matches!(err, Error::Integration(_)));
    }
}
