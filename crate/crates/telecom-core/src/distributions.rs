//! Reward and duration laws.
//!
//! Every law here has a closed-form inverse CDF, closed-form tail and
//! closed-form truncated moments `E(R^p 1{R >= kappa})`. Rewards are strictly
//! positive, so `tail(0) = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::Quadrature;

/// Samples from the density proportional to `x^exponent` on `[lo, hi]`.
/// `hi` may be infinite when `exponent < -1`.
pub(crate) fn power_law_inverse(lo: f64, hi: f64, exponent: f64, u: f64) -> f64 {
    let q = exponent + 1.0;
    if q.abs() < 1e-12 {
        return lo * (hi / lo).powf(u);
    }
    let ratio = if hi.is_infinite() { 0.0 } else { (hi / lo).powf(q) };
    let x = lo * (1.0 + u * (ratio - 1.0)).powf(1.0 / q);
    x.clamp(lo, hi)
}

/// `∫_lo^hi x^exponent dx`, with `hi` possibly infinite.
pub(crate) fn power_integral(lo: f64, hi: f64, exponent: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let q = exponent + 1.0;
    if q.abs() < 1e-12 {
        return (hi / lo).ln();
    }
    if hi.is_infinite() {
        debug_assert!(q < 0.0);
        return -lo.powf(q) / q;
    }
    (hi.powf(q) - lo.powf(q)) / q
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

/// One atom of a discrete reward law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

/// Distribution of the resource (reward) `R` held by a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardLaw {
    /// Point mass at `c`.
    Degenerate { c: f64 },
    /// Uniform on `[0, b]`.
    Uniform { b: f64 },
    /// `P(R >= x) = (x / x_min)^(-m)` for `x >= x_min`.
    Pareto { m: f64, x_min: f64 },
    /// Pareto density `∝ x^(-m-1)` restricted to `[x_min, x_max]`.
    TruncatedPareto { m: f64, x_min: f64, x_max: f64 },
    /// Finitely many atoms; weights are normalised on construction.
    Discrete { atoms: Vec<Atom> },
}

impl RewardLaw {
    pub fn degenerate(c: f64) -> Result<Self> {
        let law = RewardLaw::Degenerate { c };
        law.validate()?;
        Ok(law)
    }

    pub fn uniform(b: f64) -> Result<Self> {
        let law = RewardLaw::Uniform { b };
        law.validate()?;
        Ok(law)
    }

    pub fn pareto(m: f64, x_min: f64) -> Result<Self> {
        let law = RewardLaw::Pareto { m, x_min };
        law.validate()?;
        Ok(law)
    }

    pub fn truncated_pareto(m: f64, x_min: f64, x_max: f64) -> Result<Self> {
        let law = RewardLaw::TruncatedPareto { m, x_min, x_max };
        law.validate()?;
        Ok(law)
    }

    /// Builds a discrete law from `(value, weight)` pairs.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self> {
        let atoms = points.iter().map(|&(value, weight)| Atom { value, weight }).collect();
        let mut law = RewardLaw::Discrete { atoms };
        law.validate()?;
        law.normalize();
        Ok(law)
    }

    /// Checks parameter domains. Deserialised laws must pass through this
    /// (and [`RewardLaw::normalize`]) before use.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, x: f64| -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(domain(format!("reward parameter {name} must be positive, got {x}")))
            }
        };
        match self {
            RewardLaw::Degenerate { c } => pos("c", *c),
            RewardLaw::Uniform { b } => pos("b", *b),
            RewardLaw::Pareto { m, x_min } => {
                pos("m", *m)?;
                pos("x_min", *x_min)
            }
            RewardLaw::TruncatedPareto { m, x_min, x_max } => {
                pos("m", *m)?;
                pos("x_min", *x_min)?;
                pos("x_max", *x_max)?;
                if x_max <= x_min {
                    return Err(domain("truncated pareto needs x_min < x_max"));
                }
                Ok(())
            }
            RewardLaw::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(domain("discrete reward law needs at least one atom"));
                }
                for a in atoms {
                    pos("atom value", a.value)?;
                    pos("atom weight", a.weight)?;
                }
                Ok(())
            }
        }
    }

    /// Rescales discrete weights to sum to one and sorts atoms by value.
    pub fn normalize(&mut self) {
        if let RewardLaw::Discrete { atoms } = self {
            let total: f64 = atoms.iter().map(|a| a.weight).sum();
            for a in atoms.iter_mut() {
                a.weight /= total;
            }
            atoms.sort_by(|x, y| x.value.total_cmp(&y.value));
        }
    }

    fn trunc_norm(m: f64, x_min: f64, x_max: f64) -> f64 {
        x_min.powf(-m) - x_max.powf(-m)
    }

    /// `P(R >= x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            RewardLaw::Degenerate { c } => {
                if x <= *c {
                    1.0
                } else {
                    0.0
                }
            }
            RewardLaw::Uniform { b } => {
                if x <= 0.0 {
                    1.0
                } else if x >= *b {
                    0.0
                } else {
                    1.0 - x / b
                }
            }
            RewardLaw::Pareto { m, x_min } => {
                if x <= *x_min {
                    1.0
                } else {
                    (x / x_min).powf(-m)
                }
            }
            RewardLaw::TruncatedPareto { m, x_min, x_max } => {
                if x <= *x_min {
                    1.0
                } else if x >= *x_max {
                    0.0
                } else {
                    (x.powf(-m) - x_max.powf(-m)) / Self::trunc_norm(*m, *x_min, *x_max)
                }
            }
            RewardLaw::Discrete { atoms } => atoms.iter().filter(|a| a.value >= x).map(|a| a.weight).sum(),
        }
    }

    /// `P(R = x)`.
    pub fn atom_mass(&self, x: f64) -> f64 {
        match self {
            RewardLaw::Degenerate { c } if *c == x => 1.0,
            RewardLaw::Discrete { atoms } => atoms.iter().filter(|a| a.value == x).map(|a| a.weight).sum(),
            _ => 0.0,
        }
    }

    /// True when the law has no atoms.
    pub fn is_continuous(&self) -> bool {
        !matches!(self, RewardLaw::Degenerate { .. } | RewardLaw::Discrete { .. })
    }

    /// Essential supremum; `f64::INFINITY` for unbounded support.
    pub fn ess_sup(&self) -> f64 {
        match self {
            RewardLaw::Degenerate { c } => *c,
            RewardLaw::Uniform { b } => *b,
            RewardLaw::Pareto { .. } => f64::INFINITY,
            RewardLaw::TruncatedPareto { x_max, .. } => *x_max,
            RewardLaw::Discrete { atoms } => atoms.iter().map(|a| a.value).fold(0.0, f64::max),
        }
    }

    /// Lower end of the support.
    pub fn ess_inf(&self) -> f64 {
        match self {
            RewardLaw::Degenerate { c } => *c,
            RewardLaw::Uniform { .. } => 0.0,
            RewardLaw::Pareto { x_min, .. } | RewardLaw::TruncatedPareto { x_min, .. } => *x_min,
            RewardLaw::Discrete { atoms } => atoms.iter().map(|a| a.value).fold(f64::INFINITY, f64::min),
        }
    }

    /// Index `m` of regular variation of the tail, when the tail is
    /// regularly varying (only the untruncated Pareto law).
    pub fn regular_variation_index(&self) -> Option<f64> {
        match self {
            RewardLaw::Pareto { m, .. } => Some(*m),
            _ => None,
        }
    }

    /// Tail index `delta` in `(1, 2]`; finite-variance laws report 2.
    pub fn tail_index(&self) -> f64 {
        match self {
            RewardLaw::Pareto { m, .. } if *m < 2.0 => *m,
            _ => 2.0,
        }
    }

    /// `E(R^p 1{R >= kappa})`; `kappa = 0` gives the full moment.
    pub fn truncated_moment(&self, p: f64, kappa: f64) -> Result<f64> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(domain(format!("moment order must be positive, got {p}")));
        }
        let v = match self {
            RewardLaw::Degenerate { c } => {
                if *c >= kappa {
                    c.powf(p)
                } else {
                    0.0
                }
            }
            RewardLaw::Uniform { b } => {
                let k = kappa.max(0.0);
                if k >= *b {
                    0.0
                } else {
                    power_integral(k, *b, p) / b
                }
            }
            RewardLaw::Pareto { m, x_min } => {
                if p >= *m {
                    return Err(domain(format!("E R^{p} is infinite for a Pareto law of index {m}")));
                }
                let k = kappa.max(*x_min);
                m * x_min.powf(*m) * k.powf(p - m) / (m - p)
            }
            RewardLaw::TruncatedPareto { m, x_min, x_max } => {
                let k = kappa.max(*x_min);
                if k >= *x_max {
                    0.0
                } else {
                    m * power_integral(k, *x_max, p - m - 1.0) / Self::trunc_norm(*m, *x_min, *x_max)
                }
            }
            RewardLaw::Discrete { atoms } => {
                atoms.iter().filter(|a| a.value >= kappa).map(|a| a.weight * a.value.powf(p)).sum()
            }
        };
        Ok(v)
    }

    /// `E R^p`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        self.truncated_moment(p, 0.0)
    }

    /// `E(R^p 1{R < kappa})`; finite for every law and every `p > 0`.
    pub fn lower_moment(&self, p: f64, kappa: f64) -> f64 {
        match self {
            RewardLaw::Degenerate { c } => {
                if *c < kappa {
                    c.powf(p)
                } else {
                    0.0
                }
            }
            RewardLaw::Uniform { b } => {
                let k = kappa.min(*b);
                if k <= 0.0 {
                    0.0
                } else {
                    power_integral(0.0, k, p) / b
                }
            }
            RewardLaw::Pareto { m, x_min } => {
                if kappa <= *x_min {
                    0.0
                } else {
                    m * x_min.powf(*m) * power_integral(*x_min, kappa, p - m - 1.0)
                }
            }
            RewardLaw::TruncatedPareto { m, x_min, x_max } => {
                let k = kappa.min(*x_max);
                if k <= *x_min {
                    0.0
                } else {
                    m * power_integral(*x_min, k, p - m - 1.0) / Self::trunc_norm(*m, *x_min, *x_max)
                }
            }
            RewardLaw::Discrete { atoms } => {
                atoms.iter().filter(|a| a.value < kappa).map(|a| a.weight * a.value.powf(p)).sum()
            }
        }
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1.0)
    }

    /// Lebesgue density, `None` for laws with atoms.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            RewardLaw::Uniform { b } => Some(if x >= 0.0 && x <= *b { 1.0 / b } else { 0.0 }),
            RewardLaw::Pareto { m, x_min } => {
                Some(if x >= *x_min { m * x_min.powf(*m) * x.powf(-m - 1.0) } else { 0.0 })
            }
            RewardLaw::TruncatedPareto { m, x_min, x_max } => Some(if x >= *x_min && x <= *x_max {
                m * x.powf(-m - 1.0) / Self::trunc_norm(*m, *x_min, *x_max)
            } else {
                0.0
            }),
            RewardLaw::Degenerate { .. } | RewardLaw::Discrete { .. } => None,
        }
    }

    /// `E(f(R) 1{R >= kappa})` by adaptive quadrature against the density,
    /// or by summation over atoms. Used as an independent check of the
    /// closed forms.
    pub fn expect_above<F: Fn(f64) -> f64>(&self, kappa: f64, f: F, quad: &Quadrature) -> Result<f64> {
        match self {
            RewardLaw::Degenerate { c } => Ok(if *c >= kappa { f(*c) } else { 0.0 }),
            RewardLaw::Discrete { atoms } => {
                Ok(atoms.iter().filter(|a| a.value >= kappa).map(|a| a.weight * f(a.value)).sum())
            }
            _ => {
                let lo = kappa.max(self.ess_inf());
                let hi = self.ess_sup();
                if lo >= hi {
                    return Ok(0.0);
                }
                let g = |x: f64| f(x) * self.density(x).unwrap_or(0.0);
                let est =
                    if hi.is_infinite() { quad.integrate_to_infinity(g, lo)? } else { quad.integrate(g, lo, hi)? };
                Ok(est.value)
            }
        }
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RewardLaw::Degenerate { c } => *c,
            RewardLaw::Uniform { b } => b * rng.random::<f64>(),
            RewardLaw::Pareto { m, x_min } => x_min * open_unit(rng).powf(-1.0 / m),
            RewardLaw::TruncatedPareto { m, x_min, x_max } => {
                let u = rng.random::<f64>();
                let z = Self::trunc_norm(*m, *x_min, *x_max);
                (x_min.powf(-m) - u * z).powf(-1.0 / m).clamp(*x_min, *x_max)
            }
            RewardLaw::Discrete { atoms } => pick_atom(atoms, |a| a.weight, rng.random::<f64>()),
        }
    }

    /// Draw from the size-biased, truncated law
    /// `r^p 1{r >= kappa} F_R(dr) / E(R^p 1{R >= kappa})`.
    pub fn sample_size_biased<R: Rng + ?Sized>(&self, p: f64, kappa: f64, rng: &mut R) -> Result<f64> {
        let empty = || Error::Domain(format!("no reward mass above {kappa}"));
        let u = rng.random::<f64>();
        match self {
            RewardLaw::Degenerate { c } => {
                if *c >= kappa {
                    Ok(*c)
                } else {
                    Err(empty())
                }
            }
            RewardLaw::Uniform { b } => {
                let k = kappa.max(0.0);
                if k >= *b {
                    return Err(empty());
                }
                if k == 0.0 {
                    // density ∝ r^p on [0, b]
                    return Ok(b * u.powf(1.0 / (p + 1.0)));
                }
                Ok(power_law_inverse(k, *b, p, u))
            }
            RewardLaw::Pareto { m, x_min } => {
                if p >= *m {
                    return Err(domain("size-biased Pareto law has infinite mass"));
                }
                let k = kappa.max(*x_min);
                Ok(power_law_inverse(k, f64::INFINITY, p - m - 1.0, u))
            }
            RewardLaw::TruncatedPareto { m, x_min, x_max } => {
                let k = kappa.max(*x_min);
                if k >= *x_max {
                    return Err(empty());
                }
                Ok(power_law_inverse(k, *x_max, p - m - 1.0, u))
            }
            RewardLaw::Discrete { atoms } => {
                let eligible: Vec<Atom> = atoms.iter().copied().filter(|a| a.value >= kappa).collect();
                if eligible.is_empty() {
                    return Err(empty());
                }
                let total: f64 = eligible.iter().map(|a| a.weight * a.value.powf(p)).sum();
                Ok(pick_atom(&eligible, |a| a.weight * a.value.powf(p) / total, u))
            }
        }
    }
}

fn pick_atom<W: Fn(&Atom) -> f64>(atoms: &[Atom], weight: W, u: f64) -> f64 {
    let mut acc = 0.0;
    for a in atoms {
        acc += weight(a);
        if u < acc {
            return a.value;
        }
    }
    atoms[atoms.len() - 1].value
}

/// Session duration law: Pareto with tail index `gamma` in `(1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationLaw {
    /// `P(U > u) = (u / u_min)^(-gamma)` for `u >= u_min`.
    Pareto { gamma: f64, u_min: f64 },
}

impl DurationLaw {
    pub fn pareto(gamma: f64, u_min: f64) -> Result<Self> {
        let law = DurationLaw::Pareto { gamma, u_min };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let DurationLaw::Pareto { gamma, u_min } = *self;
        crate::error::check_gamma(gamma)?;
        crate::error::check_positive("u_min", u_min)
    }

    pub fn gamma(&self) -> f64 {
        let DurationLaw::Pareto { gamma, .. } = *self;
        gamma
    }

    pub fn u_min(&self) -> f64 {
        let DurationLaw::Pareto { u_min, .. } = *self;
        u_min
    }

    /// Tail constant `c_U` in `P(U > u) ~ c_U u^(-gamma)`.
    pub fn tail_constant(&self) -> f64 {
        self.u_min().powf(self.gamma())
    }

    /// `P(U > u)`.
    pub fn tail(&self, u: f64) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        if u < um {
            1.0
        } else {
            (u / um).powf(-g)
        }
    }

    pub fn mean(&self) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        g * um / (g - 1.0)
    }

    /// `E(U^k 1{U < tau})`.
    pub fn lower_moment(&self, k: f64, tau: f64) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        if tau <= um {
            return 0.0;
        }
        g * um.powf(g) * power_integral(um, tau, k - g - 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        um * open_unit(rng).powf(-1.0 / g)
    }

    /// Draw from `U | U >= floor`.
    pub fn sample_at_least<R: Rng + ?Sized>(&self, floor: f64, rng: &mut R) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        floor.max(um) * open_unit(rng).powf(-1.0 / g)
    }

    /// Draw from the size-biased law `u F_U(du) / E(U 1{U >= floor})`
    /// restricted to `u >= floor`.
    pub fn sample_size_biased_at_least<R: Rng + ?Sized>(&self, floor: f64, rng: &mut R) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        floor.max(um) * open_unit(rng).powf(-1.0 / (g - 1.0))
    }

    /// Draw from the equilibrium (age) law with density `P(U > x) / E U`.
    pub fn sample_age<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (g, um) = (self.gamma(), self.u_min());
        // Mass (g - 1) / g sits uniformly on [0, u_min]; the rest is Pareto(g - 1).
        if rng.random::<f64>() < (g - 1.0) / g {
            um * rng.random::<f64>()
        } else {
            um * open_unit(rng).powf(-1.0 / (g - 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_examples() {
        assert_eq!(RewardLaw::uniform(1.0).unwrap().tail(0.25), 0.75);
        assert_relative_eq!(RewardLaw::pareto(3.0, 1.0).unwrap().tail(2.0), 0.125);
        let d = RewardLaw::degenerate(1.0).unwrap();
        assert_eq!(d.tail(1.0), 1.0);
        assert_eq!(d.tail(1.0001), 0.0);
        for law in [
            RewardLaw::uniform(2.0).unwrap(),
            RewardLaw::pareto(2.5, 0.5).unwrap(),
            RewardLaw::truncated_pareto(1.2, 1.0, 10.0).unwrap(),
            RewardLaw::discrete(&[(0.3, 1.0), (0.7, 1.0)]).unwrap(),
        ] {
            assert_eq!(law.tail(0.0), 1.0);
        }
    }

    #[test]
    fn truncated_moment_examples() {
        let u = RewardLaw::uniform(1.0).unwrap();
        assert_relative_eq!(u.truncated_moment(1.5, 0.0).unwrap(), 0.4, max_relative = 1e-14);
        assert_relative_eq!(u.truncated_moment(1.5, 0.5).unwrap(), 0.329_289_321_881_345_2, max_relative = 1e-12);
        let p = RewardLaw::pareto(3.0, 1.0).unwrap();
        assert_relative_eq!(p.truncated_moment(1.5, 0.0).unwrap(), 2.0, max_relative = 1e-14);
        assert!(matches!(p.truncated_moment(3.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ess_sup_examples() {
        assert_eq!(RewardLaw::uniform(1.0).unwrap().ess_sup(), 1.0);
        assert!(RewardLaw::pareto(3.0, 1.0).unwrap().ess_sup().is_infinite());
        let mix = RewardLaw::discrete(&[(0.3, 0.5), (0.7, 0.5)]).unwrap();
        assert_eq!(mix.ess_sup(), 0.7);
    }

    #[test]
    fn lower_plus_upper_is_full_moment() {
        let laws = [
            RewardLaw::uniform(1.0).unwrap(),
            RewardLaw::pareto(3.0, 1.0).unwrap(),
            RewardLaw::truncated_pareto(1.5, 1.0, 5.0).unwrap(),
            RewardLaw::discrete(&[(0.3, 0.5), (0.7, 0.5)]).unwrap(),
            RewardLaw::degenerate(2.0).unwrap(),
        ];
        for law in &laws {
            for &k in &[0.1, 0.5, 1.0, 1.7, 3.0] {
                let full = law.moment(1.5).unwrap();
                let split = law.lower_moment(1.5, k) + law.truncated_moment(1.5, k).unwrap();
                assert_relative_eq!(full, split, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn power_law_inverse_hits_the_ends() {
        assert_relative_eq!(power_law_inverse(2.0, 5.0, 1.0, 0.0), 2.0);
        assert_relative_eq!(power_law_inverse(2.0, 5.0, 1.0, 1.0), 5.0, max_relative = 1e-14);
        assert_relative_eq!(power_law_inverse(2.0, 5.0, -1.0, 1.0), 5.0, max_relative = 1e-14);
        assert!(power_law_inverse(1.0, f64::INFINITY, -2.5, 0.999_999).is_finite());
    }

    #[test]
    fn age_law_has_equilibrium_mean() {
        // E[age] = E U^2 / (2 E U) is infinite for gamma < 2, so check the
        // distribution function instead: P(age <= u_min) = (g - 1) / g.
        let d = DurationLaw::pareto(1.5, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let below = (0..n).filter(|_| d.sample_age(&mut rng) <= 2.0).count();
        assert!((below as f64 / n as f64 - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn duration_moments() {
        let d = DurationLaw::pareto(1.5, 1.0).unwrap();
        assert_relative_eq!(d.mean(), 3.0);
        assert_relative_eq!(d.tail_constant(), 1.0);
        // E[U 1{U < tau}] + E[U 1{U >= tau}] = E U
        let tau: f64 = 7.0;
        let upper = 1.5 * tau.powf(-0.5) / 0.5;
        assert_relative_eq!(d.lower_moment(1.0, tau) + upper, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn serde_tagged_records() {
        let law: RewardLaw = serde_json::from_str(r#"{"kind":"uniform","b":1.0}"#).unwrap();
        assert_eq!(law, RewardLaw::Uniform { b: 1.0 });
        let law: RewardLaw = serde_json::from_str(r#"{"kind":"pareto","m":3.0,"x_min":1.0}"#).unwrap();
        assert_eq!(law.regular_variation_index(), Some(3.0));
    }
}
