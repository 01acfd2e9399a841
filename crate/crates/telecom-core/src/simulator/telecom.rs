use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{poisson, std_normal};
use crate::error::{domain, Error, Result};
use crate::measures::{JumpSampler, RewardMarginal, TailMeasure};
use crate::quadrature::Quadrature;

/// Expected number of simulated small jumps per sample.
pub const DEFAULT_JUMP_BUDGET: f64 = 1024.0;

/// Target ratio of the neglected sub-ε variance bound to the full `Y°`
/// variance bound.
const VARIANCE_RATIO: f64 = 1e-6;

/// Treatment of the compensated jumps below `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Residual {
    /// Centred normal with the exact variance `Q ∫_{(0,ε)} v² μ(dv)`.
    #[default]
    Gaussian,
    /// Omitted.
    Drop,
}

/// Split points for `Y = Y° + Y† - E_t`: jumps in `[ε, v0)` are simulated
/// one by one, jumps `≥ v0` form `Y†`, jumps below `ε` form the residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub v0: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub residual: Residual,
}

impl SplitConfig {
    pub fn new(v0: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < v0 && v0.is_finite()) {
            return Err(domain(format!("need 0 < epsilon < v0, got {epsilon}, {v0}")));
        }
        Ok(Self { v0, epsilon, residual: Residual::Gaussian })
    }

    pub fn with_residual(self, residual: Residual) -> Self {
        Self { residual, ..self }
    }

    /// `ε` at which the sub-ε variance bound `D_2 t ε^(2-γ)` is a fraction
    /// `1e-6` of the bound at `v0`.
    pub fn variance_rule_epsilon(gamma: f64, v0: f64) -> f64 {
        v0 * VARIANCE_RATIO.powf(1.0 / (2.0 - gamma))
    }

    /// Largest of the variance-rule `ε` and the `ε` at which the expected
    /// number of jumps in `[ε, v0)` equals `budget`.
    pub fn with_budget(m: &TailMeasure, v0: f64, budget: f64) -> Result<Self> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(domain(format!("v0 must be positive, got {v0}")));
        }
        if !(budget >= 1.0) {
            return Err(domain(format!("jump budget must be >= 1, got {budget}")));
        }
        let q = m.q();
        let top = m.tail_unchecked(v0);
        let count = |e: f64| q * (m.tail_unchecked(e) - top);
        let rule = Self::variance_rule_epsilon(m.gamma(), v0);
        if count(rule) <= budget {
            return Self::new(v0, rule);
        }
        // count is decreasing in ε, count(rule) > budget, count(v0) = 0.
        let (mut lo, mut hi) = (rule.ln(), v0.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count(mid.exp()) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Self::new(v0, hi.exp())
    }
}

/// One draw of `Y(t)` with its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelecomSample {
    pub value: f64,
    pub big_jump_count: u64,
    pub big_sum: f64,
    pub small_sum: f64,
    pub centering: f64,
}

/// `E_t = Q ∫_{[v0,∞)} v μ(dv)`.
pub fn centering(m: &TailMeasure, v0: f64) -> Result<f64> {
    Ok(m.q() * m.mean_above(v0)?)
}

/// `D_1 t v0^(1-γ)` with `D_1 = Q E R^γ / (γ-1)²`.
pub fn centering_bound(m: &TailMeasure, v0: f64) -> f64 {
    let g = m.gamma();
    m.q() * m.reward_moment() / ((g - 1.0) * (g - 1.0)) * m.t() * v0.powf(1.0 - g)
}

/// `Q ∫_{(0,v0)} (e^{λv} - 1 - λv) μ(dv)`, integrated by parts against
/// `μ[v, v0)` under `v = v0 x^{1/(2-γ)}`, which removes the `v^{1-γ}`
/// singularity at 0.
pub fn log_exp_moment_small(m: &TailMeasure, v0: f64, lambda: f64) -> Result<f64> {
    if !(v0 > 0.0) || !(lambda >= 0.0) {
        return Err(domain(format!("need v0 > 0 and lambda >= 0, got {v0}, {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let g = m.gamma();
    let top = m.tail_unchecked(v0);
    let p = 1.0 / (2.0 - g);
    let f = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        let v = v0 * x.powf(p);
        let jac = v0 * p * x.powf(p - 1.0);
        lambda * (lambda * v).exp_m1() * (m.tail_unchecked(v) - top) * jac
    };
    let mut breaks = vec![0.0, 1.0];
    let kink = m.max_jump();
    if kink < v0 {
        breaks.insert(1, (kink / v0).powf(2.0 - g));
    }
    let est = Quadrature::with_rel_tol(1e-11).integrate_with_breaks(f, &breaks)?;
    Ok(m.q() * est.value)
}

/// `E exp(λ Y°(t))`, failing with an overflow error when the exponent
/// exceeds `cap`.
pub fn exp_moment_small(m: &TailMeasure, v0: f64, lambda: f64, cap: f64) -> Result<f64> {
    let e = log_exp_moment_small(m, v0, lambda)?;
    if e > cap {
        return Err(Error::Overflow(format!("exponent {e:e} above cap {cap:e}")));
    }
    Ok(e.exp())
}

/// Exponential Chebyshev bound on `P(Y° ≥ y)` with the split at `v0`:
/// `exp(y/v0) (A v0/y)^{y/v0}` for `y > A v0`, where
/// `A = Q (D_3 + 3 D_4) t v0^{-γ}`; 1 otherwise.
pub fn chernoff_bound(m: &TailMeasure, v0: f64, y: f64) -> f64 {
    let g = m.gamma();
    let er = m.reward_moment();
    let d3 = 2f64.powf(g) * er / (g * (g - 1.0));
    let d4 = 2f64.powf(g - 1.0) * er / (g * (g - 1.0) * (2.0 - g));
    let a = m.q() * (d3 + 3.0 * d4) * m.t() * v0.powf(-g);
    if y <= a * v0 {
        return 1.0;
    }
    let k = y / v0;
    (k + k * (a * v0 / y).ln()).exp().min(1.0)
}

/// Sampler of `Y(t)` for one horizon and split.
#[derive(Debug, Clone)]
pub struct TelecomSimulator {
    measure: TailMeasure,
    split: SplitConfig,
    big: Option<JumpSampler>,
    small: Option<JumpSampler>,
    big_rate: f64,
    small_rate: f64,
    compensator: f64,
    residual_sd: f64,
    centering: f64,
}

impl TelecomSimulator {
    pub fn new(measure: &TailMeasure, split: SplitConfig, marginal: RewardMarginal) -> Result<Self> {
        let split = SplitConfig::new(split.v0, split.epsilon)?.with_residual(split.residual);
        let q = measure.q();
        let big = measure.jump_sampler(split.v0, marginal)?;
        let small = measure.jump_sampler(split.epsilon, marginal)?;
        let big_rate = q * big.as_ref().map_or(0.0, JumpSampler::mass);
        let small_rate = q * small.as_ref().map_or(0.0, JumpSampler::mass);
        let compensator = q * (measure.mean_above_unchecked(split.epsilon) - measure.mean_above_unchecked(split.v0));
        let residual_var = match split.residual {
            Residual::Gaussian => q * measure.second_moment_below(split.epsilon)?,
            Residual::Drop => 0.0,
        };
        Ok(Self {
            measure: measure.clone(),
            split,
            big,
            small,
            big_rate,
            small_rate,
            compensator,
            residual_sd: residual_var.sqrt(),
            centering: q * measure.mean_above_unchecked(split.v0),
        })
    }

    pub fn measure(&self) -> &TailMeasure {
        &self.measure
    }

    pub fn split(&self) -> SplitConfig {
        self.split
    }

    /// `E_t`.
    pub fn centering(&self) -> f64 {
        self.centering
    }

    /// `Q μ[v0, ∞)`, the mean number of big jumps.
    pub fn big_jump_rate(&self) -> f64 {
        self.big_rate
    }

    /// Mean number of jumps simulated in `[ε, v0)`.
    pub fn small_jump_rate(&self) -> f64 {
        self.small_rate - self.big_rate
    }

    /// Variance carried by the residual term.
    pub fn residual_variance(&self) -> f64 {
        self.residual_sd * self.residual_sd
    }

    /// `D_2 t ε^(2-γ)`, the bound on the variance below `ε`.
    pub fn neglected_variance_bound(&self) -> f64 {
        self.variance_bound_at(self.split.epsilon)
    }

    /// `D_2 t v0^(2-γ)`, the bound on `Var Y°`.
    pub fn small_variance_bound(&self) -> f64 {
        self.variance_bound_at(self.split.v0)
    }

    fn variance_bound_at(&self, v: f64) -> f64 {
        let g = self.measure.gamma();
        let d2 = 2.0 * self.measure.q() * self.measure.reward_moment() / (g * (g - 1.0) * (2.0 - g));
        d2 * self.measure.t() * v.powf(2.0 - g)
    }

    /// Exact `Var Y° = Q ∫_{(0,v0)} v² μ(dv)`.
    pub fn small_variance(&self) -> Result<f64> {
        Ok(self.measure.q() * self.measure.second_moment_below(self.split.v0)?)
    }

    /// One jump from `μ` restricted to `[v0, ∞)`; `None` when that set
    /// carries no mass.
    pub fn big_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<f64>> {
        match &self.big {
            Some(s) => s.sample(rng).map(Some),
            None => Ok(None),
        }
    }

    /// All jumps `≥ v0` of one realisation.
    pub fn sample_big_jumps<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let Some(sampler) = &self.big else {
            return Ok(Vec::new());
        };
        let n = poisson(self.big_rate, rng);
        (0..n).map(|_| sampler.sample(rng)).collect()
    }

    /// `Y°(t)`: compensated jumps in `[ε, v0)` plus the residual.
    pub fn sample_small_part<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let mut sum = 0.0;
        if let Some(sampler) = &self.small {
            // Thinning: jumps from [ε, ∞) landing in [v0, ∞) are discarded.
            let n = poisson(self.small_rate, rng);
            for _ in 0..n {
                let v = sampler.sample(rng)?;
                if v < self.split.v0 {
                    sum += v;
                }
            }
        }
        let residual = if self.residual_sd > 0.0 { self.residual_sd * std_normal(rng) } else { 0.0 };
        Ok(sum - self.compensator + residual)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TelecomSample> {
        let small_sum = self.sample_small_part(rng)?;
        let jumps = self.sample_big_jumps(rng)?;
        let big_sum: f64 = jumps.iter().sum();
        Ok(TelecomSample {
            value: small_sum + big_sum - self.centering,
            big_jump_count: jumps.len() as u64,
            big_sum,
            small_sum,
            centering: self.centering,
        })
    }
}
