//! Infinite-source Poisson service system.
//!
//! Sessions `(s, u, r)` arrive at rate `λ` on the whole line; the integral
//! workload over `[0, T]` is `W*(T) = Σ r ℓ_T(s, u)`. Only sessions meeting
//! `[0, T_max]` matter: arrivals in `[0, T_max]` and sessions already running
//! at time 0.
//!
//! The hybrid method keeps every session with `u ≥ τ` exact and replaces the
//! aggregate of the shorter ones by a Gaussian vector with their exact mean
//! and covariance on the grid. It requires `τ` below every grid gap, where
//! the covariance formula holds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{poisson, std_normal};
use crate::distributions::{DurationLaw, RewardLaw};
use crate::error::{check_positive, domain, Error, Result};
use crate::measures::{kernel_ell, TelecomParams};

/// Service system parameters at time scale `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSystemParams {
    pub lambda: f64,
    pub duration: DurationLaw,
    pub reward: RewardLaw,
    pub a: f64,
    /// Critical-intensity constant, when `λ = L a^(γ-1)`.
    pub l: Option<f64>,
}

impl ServiceSystemParams {
    pub fn new(lambda: f64, duration: DurationLaw, reward: RewardLaw, a: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain(format!("lambda must be >= 0, got {lambda}")));
        }
        check_positive("a", a)?;
        duration.validate()?;
        reward.validate()?;
        reward.mean()?;
        Ok(Self { lambda, duration, reward, a, l: None })
    }

    /// `λ = L a^(γ-1)`.
    pub fn critical(l: f64, duration: DurationLaw, reward: RewardLaw, a: f64) -> Result<Self> {
        check_positive("L", l)?;
        check_positive("a", a)?;
        let lambda = l * a.powf(duration.gamma() - 1.0);
        let mut p = Self::new(lambda, duration, reward, a)?;
        p.l = Some(l);
        Ok(p)
    }

    /// Limiting Telecom parameters `Q = L c_U γ`.
    pub fn telecom_params(&self) -> Result<TelecomParams> {
        let l = self.l.ok_or_else(|| Error::Config("Telecom limit needs critical-intensity mode".into()))?;
        TelecomParams::from_service(l, self.duration.tail_constant(), self.duration.gamma())
    }

    /// Messages for parameter choices outside the Telecom regime
    /// `γ < δ`, where `δ` is the reward tail index (2 for finite variance).
    pub fn regime_warnings(&self) -> Vec<String> {
        let g = self.duration.gamma();
        let delta = self.reward.tail_index().min(2.0);
        let mut out = Vec::new();
        if !(g < delta) {
            out.push(format!("reward tail index {delta} does not exceed duration index {g}"));
        }
        out
    }

    /// `E R · E U · λ`, the mean workload rate.
    pub fn mean_rate(&self) -> f64 {
        self.reward.mean().unwrap_or(f64::INFINITY) * self.duration.mean() * self.lambda
    }
}

/// How sessions are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadMethod {
    /// Every session individually.
    Exact,
    /// Sessions with `u ≥ τ` individually, the rest Gaussian. Without an
    /// explicit `tau` the threshold targets `budget` exact sessions.
    Hybrid { tau: Option<f64>, budget: f64 },
}

/// Precomputed sampler for `W*(a t)` on a fixed grid of `t ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct WorkloadSimulator {
    params: ServiceSystemParams,
    /// Absolute horizons `a t`, sorted, all positive.
    horizons: Vec<f64>,
    /// Grid positions of the positive horizons.
    slots: Vec<usize>,
    grid_len: usize,
    tau: f64,
    gauss_mean: Vec<f64>,
    gauss_chol: Vec<Vec<f64>>,
}

impl WorkloadSimulator {
    /// `cap` bounds the expected number of individually simulated sessions.
    pub fn new(params: &ServiceSystemParams, t_grid: &[f64], method: WorkloadMethod, cap: f64) -> Result<Self> {
        if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(domain("t grid must be sorted within [0, 1]"));
        }
        let slots: Vec<usize> = (0..t_grid.len()).filter(|&i| t_grid[i] > 0.0).collect();
        let horizons: Vec<f64> = slots.iter().map(|&i| params.a * t_grid[i]).collect();
        let t_max = horizons.last().copied().unwrap_or(0.0);
        let d = &params.duration;
        let um = d.u_min();
        let min_gap = horizons
            .iter()
            .scan(0.0, |prev, &h| {
                let gap = h - *prev;
                *prev = h;
                Some(gap)
            })
            .fold(f64::INFINITY, f64::min);

        let exact_count = |tau: f64| params.lambda * (t_max * d.tail(tau.max(um)) + upper_mean(d, tau));
        let tau = match method {
            WorkloadMethod::Exact => 0.0,
            WorkloadMethod::Hybrid { tau: Some(tau), .. } => {
                if tau > min_gap {
                    return Err(domain(format!("tau {tau} exceeds the smallest grid gap {min_gap}")));
                }
                tau
            }
            WorkloadMethod::Hybrid { tau: None, budget } => {
                // Sessions starting in [0, T_max] dominate the count.
                let target = um * (params.lambda * t_max / budget.max(1.0)).powf(1.0 / d.gamma());
                target.min(min_gap)
            }
        };
        let tau = if tau <= um { 0.0 } else { tau };
        let expected = exact_count(tau);
        if expected > cap {
            return Err(Error::Resource(format!("expected {expected:e} simulated sessions exceeds cap {cap:e}")));
        }

        let (gauss_mean, gauss_chol) = if tau > 0.0 && params.lambda > 0.0 {
            gaussian_part(params, &horizons, tau)?
        } else {
            (vec![0.0; horizons.len()], Vec::new())
        };
        Ok(Self { params: params.clone(), horizons, slots, grid_len: t_grid.len(), tau, gauss_mean, gauss_chol })
    }

    /// Duration threshold of the hybrid method; 0 when exact.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Expected number of individually simulated sessions.
    pub fn expected_sessions(&self) -> f64 {
        let d = &self.params.duration;
        let t_max = self.horizons.last().copied().unwrap_or(0.0);
        self.params.lambda * (t_max * d.tail(self.tau.max(d.u_min())) + upper_mean(d, self.tau))
    }

    /// `W*(a t)` on the grid.
    pub fn simulate_workload<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut acc = vec![0.0; self.horizons.len()];
        let Some(&t_max) = self.horizons.last() else {
            return vec![0.0; self.grid_len];
        };
        let p = &self.params;
        let d = &p.duration;
        let floor = self.tau.max(d.u_min());
        let add = |s: f64, u: f64, r: f64, acc: &mut [f64]| {
            for (w, &h) in acc.iter_mut().zip(&self.horizons) {
                *w += r * kernel_ell(s, u, h);
            }
        };

        // Arrivals in [0, T_max] with u >= τ.
        let n_in = poisson(p.lambda * t_max * d.tail(floor), rng);
        for _ in 0..n_in {
            let s = t_max * rng.random::<f64>();
            let u = d.sample_at_least(floor, rng);
            let r = p.reward.sample(rng);
            add(s, u, r, &mut acc);
        }
        // Sessions running at time 0.
        let n_past = poisson(p.lambda * upper_mean(d, self.tau), rng);
        for _ in 0..n_past {
            let (s, u) = if self.tau > 0.0 {
                let u = d.sample_size_biased_at_least(floor, rng);
                (-u * rng.random::<f64>(), u)
            } else {
                let age = d.sample_age(rng);
                (-age, d.sample_at_least(age, rng))
            };
            let r = p.reward.sample(rng);
            add(s, u, r, &mut acc);
        }
        if !self.gauss_chol.is_empty() {
            let z: Vec<f64> = (0..acc.len()).map(|_| std_normal(rng)).collect();
            for (i, w) in acc.iter_mut().enumerate() {
                let dot: f64 = self.gauss_chol[i].iter().zip(&z).map(|(l, z)| l * z).sum();
                *w += self.gauss_mean[i] + dot;
            }
        }
        let mut out = vec![0.0; self.grid_len];
        for (&slot, w) in self.slots.iter().zip(acc) {
            out[slot] = w;
        }
        out
    }

    /// `Z_a(t) = (W*(a t) - E R E U λ a t) / a`.
    pub fn simulate_z<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let a = self.params.a;
        let rate = self.params.mean_rate();
        let w = self.simulate_workload(rng);
        let mut out = vec![0.0; self.grid_len];
        for (&slot, &h) in self.slots.iter().zip(&self.horizons) {
            out[slot] = (w[slot] - rate * h) / a;
        }
        out
    }
}

/// `E(U 1{U ≥ τ})`, the full mean for `τ ≤ u_min`.
fn upper_mean(d: &DurationLaw, tau: f64) -> f64 {
    if tau <= d.u_min() {
        d.mean()
    } else {
        d.mean() - d.lower_moment(1.0, tau)
    }
}

/// Mean and Cholesky factor of the short-session aggregate.
fn gaussian_part(p: &ServiceSystemParams, horizons: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = &p.duration;
    let er = p.reward.mean()?;
    let er2 = p.reward.moment(2.0)?;
    let (m1, m2, m3) = (d.lower_moment(1.0, tau), d.lower_moment(2.0, tau), d.lower_moment(3.0, tau));
    let mean: Vec<f64> = horizons.iter().map(|&h| p.lambda * er * m1 * h).collect();
    let k = horizons.len();
    let mut cov = vec![vec![0.0; k]; k];
    #[allow(clippy::needless_range_loop)]
    for i in 0..k {
        for j in 0..=i {
            let lo = horizons[j];
            let c = if i == j { lo * m2 - m3 / 3.0 } else { lo * m2 - m3 / 6.0 };
            cov[i][j] = p.lambda * er2 * c;
            cov[j][i] = cov[i][j];
        }
    }
    Ok((mean, cholesky(&cov)?))
}

fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d < 0.0 {
                    return Err(Error::Config("short-session covariance not positive definite".into()));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { (a[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    Ok(l)
}
