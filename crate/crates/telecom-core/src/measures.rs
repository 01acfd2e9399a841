//! Intensity measures of the Telecom process.
//!
//! * `μ_t^(ℓ)`: image of `ds du / u^(γ+1)` under the overlap kernel
//!   `ℓ_t(s, u) = |[s, s+u] ∩ [0, t]|`. It lives on `(0, t]`, with a density
//!   on `(0, t)` and an atom at `ℓ = t`.
//! * `μ_t^(ℓ,r)`: image of `μ_t^(ℓ) ⊗ F_R` under `(ℓ, r) ↦ rℓ`, the jump
//!   intensity of `Y(t)` (up to the factor `Q`).
//! * `ν = μ_1^(ℓ)`, the scale-free version on `(0, 1]`.
//!
//! Every tail, partial mean and partial second moment of `μ_t^(ℓ,r)` reduces
//! to truncated reward moments, so the closed forms below are exact for all
//! shipped reward laws. Quadrature routes are kept as independent checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{power_law_inverse, RewardLaw};
use crate::error::{check_gamma, check_positive, domain, Error, Result};
use crate::quadrature::Quadrature;
use crate::tabulated::TabulatedCdf;

/// Telecom intensity `Q · μ_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelecomParams {
    pub q: f64,
    pub gamma: f64,
}

impl TelecomParams {
    pub fn new(q: f64, gamma: f64) -> Result<Self> {
        check_positive("Q", q)?;
        check_gamma(gamma)?;
        Ok(Self { q, gamma })
    }

    /// Limit parameters of a service system in the critical-intensity
    /// regime: `Q = L c_U γ`.
    pub fn from_service(l: f64, c_u: f64, gamma: f64) -> Result<Self> {
        check_positive("L", l)?;
        check_positive("c_U", c_u)?;
        Self::new(l * c_u * gamma, gamma)
    }
}

/// `|[s, s+u] ∩ [0, t]|`.
pub fn kernel_ell(s: f64, u: f64, t: f64) -> f64 {
    if !(u > 0.0 && t > 0.0) {
        return 0.0;
    }
    ((s + u).min(t) - s.max(0.0)).max(0.0)
}

fn second_coef(gamma: f64) -> f64 {
    (2.0 - gamma) / ((gamma - 1.0) * gamma)
}

pub(crate) fn ell_tail(t: f64, gamma: f64, ell0: f64) -> f64 {
    if ell0 > t {
        return 0.0;
    }
    t * ell0.powf(-gamma) / gamma + second_coef(gamma) * ell0.powf(1.0 - gamma)
}

pub(crate) fn ell_atom(t: f64, gamma: f64) -> f64 {
    t.powf(1.0 - gamma) / ((gamma - 1.0) * gamma)
}

pub(crate) fn ell_density(t: f64, gamma: f64, ell: f64) -> f64 {
    t * ell.powf(-1.0 - gamma) + (2.0 - gamma) / gamma * ell.powf(-gamma)
}

/// `μ_t^(ℓ)[ℓ0, t]`, zero for `ℓ0 > t`.
pub fn mu_ell_tail(t: f64, gamma: f64, ell0: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_positive("t", t)?;
    if !(ell0 > 0.0) {
        return Err(domain(format!("ell0 must be positive, got {ell0}")));
    }
    Ok(ell_tail(t, gamma, ell0))
}

/// Weight of the atom of `μ_t^(ℓ)` at `ℓ = t`.
pub fn mu_ell_atom(t: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_positive("t", t)?;
    Ok(ell_atom(t, gamma))
}

/// Density of `μ_t^(ℓ)` on `(0, t)`.
pub fn mu_ell_density(t: f64, gamma: f64, ell: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_positive("t", t)?;
    if !(ell > 0.0 && ell < t) {
        return Err(domain(format!("density defined on (0, {t}), got {ell}")));
    }
    Ok(ell_density(t, gamma, ell))
}

/// Draw from `μ_t^(ℓ)` restricted to `[ell0, t]` and normalised.
pub(crate) fn sample_ell_above<R: Rng + ?Sized>(t: f64, gamma: f64, ell0: f64, rng: &mut R) -> f64 {
    debug_assert!(ell0 > 0.0 && ell0 <= t);
    let atom = ell_atom(t, gamma);
    // Continuous part = mixture of two truncated power laws.
    let w1 = t * (ell0.powf(-gamma) - t.powf(-gamma)) / gamma;
    let w2 = (2.0 - gamma) / gamma * (ell0.powf(1.0 - gamma) - t.powf(1.0 - gamma)) / (gamma - 1.0);
    let total = atom + w1 + w2;
    let u = rng.random::<f64>() * total;
    if u < atom {
        return t;
    }
    let v = rng.random::<f64>();
    if u < atom + w1 {
        power_law_inverse(ell0, t, -1.0 - gamma, v)
    } else {
        power_law_inverse(ell0, t, -gamma, v)
    }
}

/// The measure `ν` on `(0, 1]`: density `s^(-γ-1) + ((2-γ)/γ) s^(-γ)` plus an
/// atom `1/(γ(γ-1))` at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuMeasure {
    gamma: f64,
}

impl NuMeasure {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn atom(&self) -> f64 {
        ell_atom(1.0, self.gamma)
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        mu_ell_density(1.0, self.gamma, s)
    }

    /// `ν[s0, 1]`, atom included.
    pub fn tail(&self, s0: f64) -> Result<f64> {
        if !(s0 > 0.0 && s0 <= 1.0) {
            return Err(domain(format!("nu tail needs s0 in (0, 1], got {s0}")));
        }
        Ok(ell_tail(1.0, self.gamma, s0))
    }

    /// Draw from `ν` restricted to `[s_min, 1]`, normalised.
    pub fn sample_restricted<R: Rng + ?Sized>(&self, s_min: f64, rng: &mut R) -> f64 {
        sample_ell_above(1.0, self.gamma, s_min, rng)
    }
}

/// Analytic handle on `μ_t^(ℓ)` and `μ_t^(ℓ,r)` for a fixed horizon `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMeasure {
    t: f64,
    params: TelecomParams,
    reward: RewardLaw,
    moment_gamma: f64,
}

impl TailMeasure {
    /// Requires `E R^γ < ∞`, without which `Y(t)` is not defined.
    pub fn new(t: f64, params: TelecomParams, reward: RewardLaw) -> Result<Self> {
        check_positive("t", t)?;
        let params = TelecomParams::new(params.q, params.gamma)?;
        reward.validate()?;
        let moment_gamma = reward.moment(params.gamma)?;
        Ok(Self { t, params, reward, moment_gamma })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn q(&self) -> f64 {
        self.params.q
    }

    pub fn params(&self) -> TelecomParams {
        self.params
    }

    pub fn reward(&self) -> &RewardLaw {
        &self.reward
    }

    /// Same measure at another horizon.
    pub fn with_horizon(&self, t: f64) -> Result<Self> {
        Self::new(t, self.params, self.reward.clone())
    }

    /// `E R^γ`.
    pub fn reward_moment(&self) -> f64 {
        self.moment_gamma
    }

    fn upper(&self, p: f64, kappa: f64) -> f64 {
        // Orders used here are γ and γ-1, both finite once E R^γ is.
        self.reward.truncated_moment(p, kappa).expect("truncated moment of order <= gamma is finite")
    }

    /// Largest attainable jump `t · ess_sup(R)`.
    pub fn max_jump(&self) -> f64 {
        self.t * self.reward.ess_sup()
    }

    /// `μ_t^(ℓ,r)[v, ∞)`.
    pub fn tail(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(domain(format!("jump level must be positive, got {v}")));
        }
        Ok(self.tail_unchecked(v))
    }

    pub(crate) fn tail_unchecked(&self, v: f64) -> f64 {
        let g = self.gamma();
        let kappa = v / self.t;
        let a = self.t * v.powf(-g) / g;
        let b = second_coef(g) * v.powf(1.0 - g);
        a * self.upper(g, kappa) + b * self.upper(g - 1.0, kappa)
    }

    /// `∫ μ_t^(ℓ)[v/r, t] F_R(dr)` by adaptive quadrature over `r > v/t`.
    pub fn tail_quadrature(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(domain(format!("jump level must be positive, got {v}")));
        }
        let (t, g) = (self.t, self.gamma());
        let quad = Quadrature::with_rel_tol(1e-9);
        self.reward.expect_above(v / t, |r| ell_tail(t, g, (v / r).min(t)), &quad)
    }

    /// Majorant `E R^γ t v^(-γ) / (γ(γ-1))`.
    pub fn tail_bound(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(domain(format!("jump level must be positive, got {v}")));
        }
        let g = self.gamma();
        if !self.moment_gamma.is_finite() {
            return Err(domain("E R^gamma is infinite"));
        }
        Ok(self.moment_gamma * self.t * v.powf(-g) / (g * (g - 1.0)))
    }

    /// `∫_{[v0, ∞)} v μ_t^(ℓ,r)(dv)`.
    pub fn mean_above(&self, v0: f64) -> Result<f64> {
        if !(v0 > 0.0) {
            return Err(domain(format!("threshold must be positive, got {v0}")));
        }
        Ok(self.mean_above_unchecked(v0))
    }

    pub(crate) fn mean_above_unchecked(&self, v0: f64) -> f64 {
        // ∫_{[ℓ0, t]} ℓ μ_t^(ℓ)(dℓ) = t ℓ0^(1-γ)/(γ-1) - ℓ0^(2-γ)/γ
        let g = self.gamma();
        let kappa = v0 / self.t;
        self.t * v0.powf(1.0 - g) / (g - 1.0) * self.upper(g, kappa) - v0.powf(2.0 - g) / g * self.upper(g - 1.0, kappa)
    }

    /// Same quantity through `v0 μ[v0, ∞) + ∫_{v0}^∞ μ[v, ∞) dv`.
    pub fn mean_above_quadrature(&self, v0: f64) -> Result<f64> {
        if !(v0 > 0.0) {
            return Err(domain(format!("threshold must be positive, got {v0}")));
        }
        let head = v0 * self.tail_unchecked(v0);
        let quad = Quadrature::with_rel_tol(1e-10);
        let top = self.max_jump();
        let rest = if top.is_finite() {
            if top <= v0 {
                0.0
            } else {
                quad.integrate(|v| self.tail_unchecked(v), v0, top)?.value
            }
        } else {
            quad.integrate_to_infinity(|v| self.tail_unchecked(v), v0)?.value
        };
        Ok(head + rest)
    }

    /// `∫_{(0, eps)} v² μ_t^(ℓ,r)(dv)`.
    pub fn second_moment_below(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(domain(format!("threshold must be positive, got {eps}")));
        }
        let (t, g) = (self.t, self.gamma());
        let kappa = eps / t;
        let b = (2.0 - g) / g;
        let partial = t * eps.powf(2.0 - g) / (2.0 - g) * self.upper(g, kappa)
            + b * eps.powf(3.0 - g) / (3.0 - g) * self.upper(g - 1.0, kappa);
        // Rewards r < eps/t see the whole of μ_t^(ℓ), atom included.
        let full = t.powf(3.0 - g) * (1.0 / (2.0 - g) + b / (3.0 - g) + 1.0 / ((g - 1.0) * g));
        Ok(partial + full * self.reward.lower_moment(2.0, kappa))
    }

    /// Sampler for jumps from `μ_t^(ℓ,r)` restricted to `[v0, ∞)`.
    /// Returns `None` when that restriction carries no mass.
    pub fn jump_sampler(&self, v0: f64, marginal: RewardMarginal) -> Result<Option<JumpSampler>> {
        if !(v0 > 0.0) {
            return Err(domain(format!("threshold must be positive, got {v0}")));
        }
        let g = self.gamma();
        let kappa0 = v0 / self.t;
        let a = self.t * v0.powf(-g) / g * self.upper(g, kappa0);
        let b = second_coef(g) * v0.powf(1.0 - g) * self.upper(g - 1.0, kappa0);
        let mass = a + b;
        if !(mass > 0.0) {
            return Ok(None);
        }
        let table = match marginal {
            RewardMarginal::Exact => None,
            RewardMarginal::Tabulated => Some(self.reward_marginal_table(v0)?),
        };
        Ok(Some(JumpSampler {
            t: self.t,
            gamma: g,
            v0,
            kappa0,
            mass,
            first_weight: a / mass,
            reward: self.reward.clone(),
            table,
        }))
    }

    /// CDF of the reward carried by a jump above `v0`:
    /// `r ↦ P(R ≤ r | jump ≥ v0)` through truncated moments.
    pub fn reward_marginal_cdf(&self, v0: f64, r: f64) -> f64 {
        let g = self.gamma();
        let kappa0 = v0 / self.t;
        if r < kappa0 {
            return 0.0;
        }
        let a = self.t * v0.powf(-g) / g;
        let b = second_coef(g) * v0.powf(1.0 - g);
        let above = |k: f64| a * self.upper(g, k) + b * self.upper(g - 1.0, k);
        let total = above(kappa0);
        // Continuous laws only: P(R > r) and P(R >= r) agree.
        (1.0 - above(r) / total).clamp(0.0, 1.0)
    }

    fn reward_marginal_table(&self, v0: f64) -> Result<TabulatedCdf> {
        if !self.reward.is_continuous() {
            return Err(Error::Domain("tabulated reward marginal needs a continuous reward law".into()));
        }
        let lo = (v0 / self.t).max(self.reward.ess_inf());
        let hi = self.reward.ess_sup();
        let measure = self.clone();
        TabulatedCdf::build(move |r| measure.reward_marginal_cdf(v0, r), lo, hi, 2048, 1e-8)
    }
}

/// How the reward component of a big jump is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMarginal {
    /// Two-component size-biased mixture, sampled in closed form.
    #[default]
    Exact,
    /// Numeric inversion of a tabulated CDF.
    Tabulated,
}

/// Draws jumps `v = rℓ` from `μ_t^(ℓ,r)` restricted to `[v0, ∞)`.
///
/// The reward has marginal `∝ μ_t^(ℓ)[v0/r, t] F_R(dr)` on `r ≥ v0/t`, which
/// splits into the size-biased laws of orders γ and γ-1. Given `r`, `ℓ`
/// follows `μ_t^(ℓ)` restricted to `[v0/r, t]`, atom at `t` included.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    t: f64,
    gamma: f64,
    v0: f64,
    kappa0: f64,
    mass: f64,
    first_weight: f64,
    reward: RewardLaw,
    table: Option<TabulatedCdf>,
}

impl JumpSampler {
    /// `μ_t^(ℓ,r)[v0, ∞)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn threshold(&self) -> f64 {
        self.v0
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if let Some(table) = &self.table {
            return table.invert(rng.random::<f64>());
        }
        let order = if rng.random::<f64>() < self.first_weight { self.gamma } else { self.gamma - 1.0 };
        self.reward.sample_size_biased(order, self.kappa0, rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let r = self.sample_reward(rng)?;
        let ell0 = (self.v0 / r).min(self.t);
        let ell = sample_ell_above(self.t, self.gamma, ell0, rng);
        Ok((r * ell).max(self.v0))
    }
}
