use serde::{Deserialize, Serialize};

use crate::distributions::RewardLaw;
use crate::error::{check_gamma, check_positive, domain, Error, Result};
use crate::measures::NuMeasure;
use crate::quadrature::Quadrature;
use crate::stats::{Moments, Z95};
use crate::streams::par_fold;

const DOMAIN_DIN: u64 = 0x4449_4e00;

/// `D t ρ^(-γ)` with `D = Q E R^γ / γ`.
pub fn moderate_asymptotic(q: f64, gamma: f64, reward_moment: f64, t: f64, rho: f64) -> f64 {
    q * reward_moment / gamma * t * rho.powf(-gamma)
}

/// `m(m-1) / (γ(γ-1)(m-γ+1)(m-γ))`.
pub fn ultra_constant(m: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(m > gamma) {
        return Err(domain(format!("need m > gamma, got m = {m}")));
    }
    Ok(m * (m - 1.0) / (gamma * (gamma - 1.0) * (m - gamma + 1.0) * (m - gamma)))
}

/// `Q D t^(-(γ-1)) P(R ≥ ρ/t)` for a regularly varying reward tail.
pub fn ultra_asymptotic(q: f64, gamma: f64, reward: &RewardLaw, t: f64, rho: f64) -> Result<f64> {
    let m = reward.regular_variation_index().ok_or_else(|| domain("reward tail is not regularly varying"))?;
    Ok(q * ultra_constant(m, gamma)? * t.powf(1.0 - gamma) * reward.tail(rho / t))
}

fn check_kappa(reward: &RewardLaw, kappa: f64) -> Result<()> {
    check_positive("kappa", kappa)?;
    if reward.tail(kappa) <= 0.0 {
        return Err(domain(format!("P(R >= {kappa}) = 0: no single session reaches the level")));
    }
    if reward.atom_mass(kappa) > 0.0 {
        return Err(domain(format!("reward has an atom at kappa = {kappa}")));
    }
    Ok(())
}

/// Single-session constant
/// `κ^(-γ)/γ E(R^γ; R ≥ κ) + (2-γ)κ^(1-γ)/((γ-1)γ) E(R^(γ-1); R ≥ κ)`.
pub fn intermediate_constant_1(gamma: f64, reward: &RewardLaw, kappa: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_kappa(reward, kappa)?;
    let g = gamma;
    Ok(kappa.powf(-g) / g * reward.truncated_moment(g, kappa)?
        + (2.0 - g) * kappa.powf(1.0 - g) / ((g - 1.0) * g) * reward.truncated_moment(g - 1.0, kappa)?)
}

/// Same constant as `∫_(0,1] P(sR ≥ κ) ν(ds)` by quadrature.
pub fn intermediate_constant_1_quadrature(gamma: f64, reward: &RewardLaw, kappa: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_kappa(reward, kappa)?;
    let nu = NuMeasure::new(gamma)?;
    let lo = (kappa / reward.ess_sup()).min(1.0);
    let mut breaks = vec![lo, 1.0];
    let inner = kappa / reward.ess_inf();
    if inner > lo && inner < 1.0 {
        breaks.insert(1, inner);
    }
    if let RewardLaw::Discrete { atoms } = reward {
        breaks.extend(atoms.iter().map(|a| kappa / a.value).filter(|&s| s > lo && s < 1.0));
        breaks.sort_by(f64::total_cmp);
    }
    let f = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        reward.tail(kappa / s) * nu.density(s).unwrap_or(0.0)
    };
    let quad = Quadrature::with_rel_tol(1e-12);
    let est = quad.integrate_with_breaks(f, &breaks)?;
    Ok(est.value + nu.atom() * reward.tail(kappa))
}

/// Number of sessions needed to reach `κ` and the derived cut-offs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionCount {
    pub n: usize,
    /// Midpoint of the feasible range; `None` for unbounded rewards.
    pub zeta: Option<f64>,
    /// `(1-ζ)κ/(n-ζ)`; 0 when `ζ` is undefined.
    pub eta: f64,
    /// `(n-1)η/(κ-η)`: below it no `s_m` contributes.
    pub s_star: f64,
}

/// Smallest `n` with `P(R ≥ κ/n) > 0`, with `ζ ∈ (0, 1)` chosen mid-range
/// among the values satisfying `P(R ≥ κ/(n-ζ)) = 0`.
pub fn required_sessions(reward: &RewardLaw, kappa: f64) -> Result<SessionCount> {
    check_positive("kappa", kappa)?;
    let ess = reward.ess_sup();
    if !ess.is_finite() {
        return Ok(SessionCount { n: 1, zeta: None, eta: 0.0, s_star: 0.0 });
    }
    let mut n = 1usize;
    while reward.tail(kappa / n as f64) <= 0.0 {
        n += 1;
    }
    // P(R ≥ κ/(n-ζ)) = 0 iff ζ > n - κ/ess (≥ when ess carries no atom);
    // either way some ζ < 1 works iff the bound is below 1.
    let lower = (n as f64 - kappa / ess).max(0.0);
    if lower >= 1.0 {
        return Err(Error::CriticalCase(format!(
            "kappa = {kappa}: only zeta = 1 satisfies the session condition with n = {n}"
        )));
    }
    let zeta = 0.5 * (lower + 1.0);
    let nf = n as f64;
    let eta = (1.0 - zeta) * kappa / (nf - zeta);
    Ok(SessionCount { n, zeta: Some(zeta), eta, s_star: (nf - 1.0) * eta / (kappa - eta) })
}

/// Monte Carlo value with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl ConstantEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn relative_half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low) / self.value
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(1/n!) ∫_{[0,1]^n} P(s_1 R_1 + … + s_n R_n ≥ κ) ν(ds_1)…ν(ds_n)`.
///
/// Coordinates `s_1 … s_{n-1}` are drawn from `ν` restricted to
/// `[s_*, 1]`; the last coordinate is integrated exactly,
/// `∫ 1{s R_n ≥ x} ν(ds) = ν[max(x/R_n, s_*), 1]` for `x ≤ R_n`.
pub fn intermediate_constant_n(
    gamma: f64,
    reward: &RewardLaw,
    kappa: f64,
    n: usize,
    replicates: u64,
    seed: u64,
) -> Result<ConstantEstimate> {
    check_gamma(gamma)?;
    check_positive("kappa", kappa)?;
    if n == 0 || replicates < 2 {
        return Err(domain("need n >= 1 and at least two replicates"));
    }
    let nu = NuMeasure::new(gamma)?;
    let s_min = if n == 1 {
        0.0
    } else {
        let count = required_sessions(reward, kappa)?;
        if count.n != n {
            return Err(domain(format!("kappa = {kappa} needs {} sessions, not {n}", count.n)));
        }
        count.s_star
    };
    if n >= 2 && !(s_min > 0.0) {
        return Err(domain("no positive lower cut-off for the session sizes"));
    }
    let restricted_mass = if n == 1 { 1.0 } else { nu.tail(s_min)? };
    let moments = par_fold(
        replicates as usize,
        seed,
        DOMAIN_DIN + n as u64,
        Moments::default,
        |acc, _, rng| {
            let mut x = kappa;
            for _ in 1..n {
                let s = nu.sample_restricted(s_min, rng);
                x -= s * reward.sample(rng);
            }
            let r = reward.sample(rng);
            let value = if x <= 0.0 {
                restricted_mass
            } else if x <= r {
                let lo = (x / r).max(s_min);
                nu_tail_clamped(&nu, lo)
            } else {
                0.0
            };
            acc.push(value);
        },
        Moments::merge,
    );
    let scale = restricted_mass.powi(n as i32 - 1) / factorial(n);
    let half = Z95 * moments.std_error();
    Ok(ConstantEstimate {
        value: scale * moments.mean,
        ci_low: scale * (moments.mean - half),
        ci_high: scale * (moments.mean + half),
        replicates,
        seed,
    })
}

fn nu_tail_clamped(nu: &NuMeasure, s0: f64) -> f64 {
    nu.tail(s0.min(1.0)).unwrap_or(0.0)
}

/// Two-session constant for `R ~ Uniform(0, b)` by nested quadrature over
/// the density and atom branches of `ν ⊗ ν`, with
/// `P(αX + βY ≥ κ)` for independent uniforms in closed form.
pub fn intermediate_constant_2_uniform(gamma: f64, reward: &RewardLaw, kappa: f64) -> Result<f64> {
    let RewardLaw::Uniform { b } = *reward else {
        return Err(domain("two-session quadrature needs a uniform reward"));
    };
    let count = required_sessions(reward, kappa)?;
    if count.n != 2 {
        return Err(domain(format!("kappa = {kappa} needs {} sessions, not 2", count.n)));
    }
    let nu = NuMeasure::new(gamma)?;
    let s_min = count.s_star;
    let atom = nu.atom();
    let k = kappa / b;
    // P(s1 X + s2 Y ≥ k) for X, Y uniform on [0, 1].
    let p = |s1: f64, s2: f64| {
        let excess = s1 + s2 - k;
        if excess <= 0.0 {
            return 0.0;
        }
        if k >= s1.max(s2) {
            // Corner triangle of the unit square; no cancellation.
            return excess * excess / (2.0 * s1 * s2);
        }
        let sq = |x: f64| if x > 0.0 { x * x } else { 0.0 };
        let below = (sq(k) - sq(k - s1) - sq(k - s2) + sq(k - s1 - s2)) / (2.0 * s1 * s2);
        (1.0 - below).clamp(0.0, 1.0)
    };
    // Inner tolerance well below the outer one keeps the outer integrand smooth.
    let inner_quad = Quadrature::with_tolerances(1e-13, 1e-16);
    let quad = Quadrature::with_rel_tol(1e-10);
    let dens = |s: f64| nu.density(s).unwrap_or(0.0);
    let inner = |s1: f64| -> Result<f64> {
        let mut breaks = vec![s_min, 1.0];
        let kink = k - s1;
        if kink > s_min && kink < 1.0 {
            breaks.insert(1, kink);
        }
        let est = inner_quad.integrate_with_breaks(|s2| dens(s2) * p(s1, s2), &breaks)?;
        Ok(est.value + atom * p(s1, 1.0))
    };
    let mut breaks = vec![s_min, 1.0];
    let kink = k - 1.0;
    if kink > s_min && kink < 1.0 {
        breaks.insert(1, kink);
    }
    let failure = std::cell::Cell::new(None);
    let outer = quad.integrate_with_breaks(
        |s1| match inner(s1) {
            Ok(v) => dens(s1) * v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        &breaks,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(0.5 * (outer.value + atom * inner(1.0)?))
}
