use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::simulator::{chernoff_bound, TelecomSimulator};
use crate::stats::{agresti_coull_variance, wilson, Moments, Z95};
use crate::streams::par_fold;

const DOMAIN_CRUDE: u64 = 0x4352_5544;
const DOMAIN_COND: u64 = 0x434f_4e44_0000;

/// Poisson remainder above which more big-jump terms are added, relative
/// to the estimate.
const REMAINDER_TARGET: f64 = 0.01;
/// Poisson remainder above which the estimate is rejected.
const REMAINDER_LIMIT: f64 = 0.1;
const MAX_TERMS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Crude,
    Conditional,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Crude => "crude",
            Method::Conditional => "conditional",
        }
    }
}

/// One term `P(N_0 = n) · P(Y° - E_t + V_1 + … + V_n ≥ ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTerm {
    pub n: usize,
    pub weight: f64,
    pub probability: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDiagnostics {
    pub big_jump_rate: f64,
    pub n_max: usize,
    /// `P(N_0 > n_max)`.
    pub remainder: f64,
    pub terms: Vec<ConditionalTerm>,
}

/// Tail probability estimate with a 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: u64,
    pub method: Method,
    pub seed: u64,
    pub conditional: Option<ConditionalDiagnostics>,
}

impl TailEstimate {
    pub fn overlaps(&self, other: &TailEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

#[derive(Default)]
struct Hits {
    hits: u64,
    error: Option<Error>,
}

impl Hits {
    fn merge(mut self, other: Self) -> Self {
        self.hits += other.hits;
        self.error = self.error.or(other.error);
        self
    }
}

/// Fraction of `replicates` draws of `Y(t)` with `Y(t) ≥ ρ`, Wilson interval.
pub fn tail_estimate_crude(sim: &TelecomSimulator, rho: f64, replicates: u64, seed: u64) -> Result<TailEstimate> {
    if replicates == 0 {
        return Err(domain("need at least one replicate"));
    }
    let acc = par_fold(
        replicates as usize,
        seed,
        DOMAIN_CRUDE,
        Hits::default,
        |acc, _, rng| match sim.sample(rng) {
            Ok(s) => acc.hits += u64::from(s.value >= rho),
            Err(e) => acc.error = acc.error.take().or(Some(e)),
        },
        Hits::merge,
    );
    if let Some(e) = acc.error {
        return Err(e);
    }
    let (lo, hi) = wilson(acc.hits, replicates, Z95);
    let p = acc.hits as f64 / replicates as f64;
    Ok(TailEstimate {
        p_hat: p,
        ci_low: lo.min(p),
        ci_high: hi.max(p),
        replicates,
        method: Method::Crude,
        seed,
        conditional: None,
    })
}

struct Term {
    moments: Moments,
    hits: u64,
    error: Option<Error>,
}

impl Term {
    fn new() -> Self {
        Self { moments: Moments::default(), hits: 0, error: None }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            moments: self.moments.merge(other.moments),
            hits: self.hits + other.hits,
            error: self.error.or(other.error),
        }
    }
}

/// Conditional probability of exceeding `ρ` given exactly `n` big jumps,
/// with its standard error and indicator hit count. The last jump is integrated out through
/// `P(V ≥ x) = μ[max(x, v0), ∞)/μ[v0, ∞)`.
fn conditional_term(sim: &TelecomSimulator, rho: f64, n: usize, replicates: u64, seed: u64) -> Result<(f64, f64, u64)> {
    let m = sim.measure();
    let v0 = sim.split().v0;
    let base = m.tail_unchecked(v0);
    let shift = rho + sim.centering();
    let acc = par_fold(
        replicates as usize,
        seed,
        DOMAIN_COND + n as u64,
        Term::new,
        |acc, _, rng| {
            let mut step = || -> Result<f64> {
                let mut x = shift - sim.sample_small_part(rng)?;
                if n == 0 {
                    return Ok(if x <= 0.0 { 1.0 } else { 0.0 });
                }
                for _ in 1..n {
                    x -= sim.big_jump(rng)?.unwrap_or(0.0);
                }
                Ok(if x <= v0 { 1.0 } else { m.tail_unchecked(x) / base })
            };
            match step() {
                Ok(v) => {
                    acc.moments.push(v);
                    acc.hits += u64::from(v == 1.0);
                }
                Err(e) => acc.error = acc.error.take().or(Some(e)),
            }
        },
        Term::merge,
    );
    if let Some(e) = acc.error {
        return Err(e);
    }
    let var = if n == 0 { agresti_coull_variance(acc.hits, replicates, Z95) } else { acc.moments.std_error().powi(2) };
    Ok((acc.moments.mean, var.sqrt(), acc.hits))
}

/// `Σ_{n ≤ n_max} P(N_0 = n) P(Y° - E_t + V_1 + … + V_n ≥ ρ)` with exact
/// Poisson weights and `replicates` draws per term. `n_max` grows while the
/// Poisson remainder `P(N_0 > n_max)` exceeds 1% of the estimate; a
/// remainder above 10% is a configuration error.
pub fn tail_estimate_conditional(
    sim: &TelecomSimulator,
    rho: f64,
    n_max: usize,
    replicates: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if replicates < 2 {
        return Err(domain("need at least two replicates"));
    }
    let lambda = sim.big_jump_rate();
    let weight = |n: usize| -> f64 {
        if lambda == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        (n as f64 * lambda.ln() - lambda - ln_factorial(n)).exp()
    };
    let remainder = |n_max: usize| -> f64 {
        // Tail sum of the Poisson weights, summed directly for accuracy.
        let mut sum = 0.0;
        let mut k = n_max + 1;
        loop {
            let w = weight(k);
            sum += w;
            if w <= 1e-18 * sum.max(1e-300) || k > n_max + 400 || w == 0.0 {
                break;
            }
            k += 1;
        }
        sum
    };

    let mut terms: Vec<ConditionalTerm> = Vec::new();
    let mut zero_hits = 0;
    let mut n_top = if lambda == 0.0 { 0 } else { n_max };
    let mut n = 0;
    loop {
        while n <= n_top {
            let w = weight(n);
            let (p, se, hits) = if w > 0.0 { conditional_term(sim, rho, n, replicates, seed)? } else { (0.0, 0.0, 0) };
            if n == 0 {
                zero_hits = hits;
            }
            terms.push(ConditionalTerm { n, weight: w, probability: p, std_error: se });
            n += 1;
        }
        let p_hat: f64 = terms.iter().map(|t| t.weight * t.probability).sum();
        let rem = if lambda == 0.0 { 0.0 } else { remainder(n_top) };
        if rem > REMAINDER_TARGET * p_hat && n_top < MAX_TERMS {
            n_top += 1;
            continue;
        }
        if rem > REMAINDER_LIMIT * p_hat {
            return Err(Error::Config(format!(
                "Poisson remainder {rem:e} exceeds 10% of the estimate {p_hat:e} with n_max = {n_top}"
            )));
        }
        // A no-jump term without hits says only that its probability is
        // small; it contributes one-sidedly, capped by the exponential
        // Chebyshev bound on P(Y° ≥ ρ + E_t).
        let one_sided = zero_hits == 0 && terms[0].weight > 0.0;
        let se = terms
            .iter()
            .filter(|t| !(one_sided && t.n == 0))
            .map(|t| (t.weight * t.std_error).powi(2))
            .sum::<f64>()
            .sqrt();
        let extra = if one_sided {
            let upper = wilson(0, replicates, Z95).1;
            let bound = chernoff_bound(sim.measure(), sim.split().v0, rho + sim.centering());
            terms[0].weight * upper.min(bound)
        } else {
            0.0
        };
        return Ok(TailEstimate {
            p_hat,
            ci_low: (p_hat - Z95 * se).max(0.0),
            ci_high: (p_hat + Z95 * se + extra).min(1.0),
            replicates,
            method: Method::Conditional,
            seed,
            conditional: Some(ConditionalDiagnostics { big_jump_rate: lambda, n_max: n_top, remainder: rem, terms }),
        });
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}
