use approx::assert_relative_eq;
use num_complex::Complex64;
use telecom_core::{Quadrature, StableSpec};

/// `∫_U^∞ e^{iu} u^{-s} du` by repeated integration by parts; terms shrink
/// like `(s+k)/U`.
fn oscillatory_tail(s: f64, big_u: f64) -> Complex64 {
    let i = Complex64::i();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut ik = Complex64::new(1.0, 0.0);
    // k-th derivative of u^{-s} at U.
    let mut deriv = big_u.powf(-s);
    for k in 0..30 {
        sum += ik * deriv;
        ik *= i;
        deriv *= -(s + k as f64) / big_u;
    }
    -(Complex64::from_polar(1.0, big_u) / i) * sum
}

/// `∫_0^∞ (e^{iu} - 1 - iu) u^{-γ-1} du`, computed without the closed form.
fn unit_exponent(gamma: f64) -> Complex64 {
    let quad = Quadrature::with_tolerances(1e-13, 1e-15);
    // On [0, 1] integrate the Taylor series of cos u - 1 and sin u - u
    // term by term: Σ (-1)^k / (j! (j - γ)) over even or odd j ≥ 2.
    let head = |odd: bool| {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for j in 1..40usize {
            fact *= j as f64;
            if j >= 2 && (j % 2 == 1) == odd {
                let sign = if (j / 2) % 2 == 1 { -1.0 } else { 1.0 };
                sum += sign / (fact * (j as f64 - gamma));
            }
        }
        sum
    };
    let re_part: fn(f64) -> f64 = |u| -2.0 * (0.5 * u).sin().powi(2);
    let im_part: fn(f64) -> f64 = |u| u.sin() - u;
    let big_u = 2.0 * std::f64::consts::PI * 60.0;
    let mut breaks = vec![1.0];
    let mut b = std::f64::consts::PI;
    while b < big_u {
        breaks.push(b);
        b += std::f64::consts::PI;
    }
    breaks.push(big_u);
    let body =
        |part: fn(f64) -> f64| quad.integrate_with_breaks(|u| part(u) * u.powf(-gamma - 1.0), &breaks).unwrap().value;
    let tail = oscillatory_tail(gamma + 1.0, big_u);
    // -∫_U^∞ u^{-γ-1} du and -∫_U^∞ u^{-γ} du in closed form.
    let re = head(false) + body(re_part) + tail.re - big_u.powf(-gamma) / gamma;
    let im = head(true) + body(im_part) + tail.im - big_u.powf(1.0 - gamma) / (gamma - 1.0);
    Complex64::new(re, im)
}

#[test]
fn characteristic_exponent_matches_direct_integral() {
    for gamma in [1.5, 1.3] {
        let spec = StableSpec::new(1.0, gamma).unwrap();
        let unit = unit_exponent(gamma);
        for k in 0..20 {
            let theta = -10.0 + 20.0 * (k as f64 + 0.5) / 20.0;
            let mut oracle = unit * theta.abs().powf(gamma);
            if theta < 0.0 {
                oracle = oracle.conj();
            }
            let got = spec.log_cf(theta);
            assert!((got - oracle).norm() <= 1e-8 * oracle.norm(), "gamma {gamma}, theta {theta}: {got} vs {oracle}");
        }
    }
}

#[test]
fn cf_basic_properties() {
    let spec = StableSpec::new(1.0, 1.5).unwrap();
    assert_eq!(spec.cf(0.0), Complex64::new(1.0, 0.0));
    for theta in [0.1, 1.0, 3.0, 7.5] {
        assert_eq!(spec.cf(-theta), spec.cf(theta).conj());
        assert!(spec.cf(theta).norm() <= 1.0);
    }
    assert_relative_eq!(spec.log_cf(1.0).re, -1.671_085_516_4, max_relative = 1e-9);
}

#[test]
fn exponent_is_linear_in_q() {
    let one = StableSpec::new(1.0, 1.5).unwrap();
    for n in [2.0, 3.0, 7.0] {
        let many = StableSpec::new(n, 1.5).unwrap();
        for theta in [-2.0, 0.3, 1.7] {
            let lhs = one.log_cf(theta) * n;
            let rhs = many.log_cf(theta);
            assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm());
        }
    }
}

#[test]
fn tail_asymptotic_examples() {
    let spec = StableSpec::new(1.0, 1.5).unwrap();
    assert_relative_eq!(spec.tail_asymptotic(100.0), 6.666_666_666_666_667e-4, max_relative = 1e-14);
    assert_relative_eq!(
        spec.tail_asymptotic(200.0) / spec.tail_asymptotic(100.0),
        2f64.powf(-1.5),
        max_relative = 1e-14
    );
    let double = StableSpec::new(2.0, 1.5).unwrap();
    assert_relative_eq!(double.tail_asymptotic(37.0), 2.0 * spec.tail_asymptotic(37.0), max_relative = 1e-14);
}

#[test]
fn survival_matches_power_tail_at_fifty() {
    let spec = StableSpec::new(1.0, 1.5).unwrap();
    let ratio = spec.survival(50.0).unwrap() * 50f64.powf(1.5) * 1.5;
    assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
}

#[test]
fn cdf_limits_and_monotonicity() {
    let spec = StableSpec::new(1.0, 1.5).unwrap();
    assert!(spec.cdf(-20.0).unwrap() < 1e-6);
    assert!(spec.cdf(1e4).unwrap() > 1.0 - 1e-5);
    let xs: Vec<f64> = (0..200).map(|i| -8.0 + 0.1 * i as f64).collect();
    let fs = spec.cdf_grid(&xs).unwrap();
    assert!(fs.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn two_inversions_agree() {
    for (q, g) in [(1.0, 1.5), (1.5, 1.5), (1.0, 1.2), (0.5, 1.8)] {
        let spec = StableSpec::new(q, g).unwrap();
        for i in 0..41 {
            let x = -6.0 + 0.5 * i as f64;
            let a = spec.cdf(x).unwrap();
            let b = spec.cdf_fixed_panels(x);
            assert!((a - b).abs() <= 1e-6, "q {q} gamma {g} x {x}: {a} vs {b}");
        }
    }
}

#[test]
fn inverted_law_has_mean_zero() {
    let spec = StableSpec::new(1.0, 1.5).unwrap();
    let quad = Quadrature::with_tolerances(1e-8, 1e-8);
    let top = 400.0;
    let right = quad.integrate_with_breaks(|x| spec.survival(x).unwrap(), &[0.0, 2.0, 10.0, 50.0, top]).unwrap().value;
    // Beyond `top` the survival function is (Q/γ) x^{-γ} to O(x^{-2γ}).
    let far = spec.q / spec.gamma * top.powf(1.0 - spec.gamma) / (spec.gamma - 1.0);
    let left = quad.integrate_with_breaks(|x| spec.cdf(x).unwrap(), &[-30.0, -10.0, -2.0, 0.0]).unwrap().value;
    let mean = right + far - left;
    assert!(mean.abs() < 1e-3, "mean {mean}");
}
