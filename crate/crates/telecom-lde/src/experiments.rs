//! One function per experiment. Each returns rows, diagnostics and regime
//! warnings; none of them touches the filesystem.

use serde_json::{json, Value};
use telecom_core::lde::{
    intermediate_constant_1, intermediate_constant_1_quadrature, intermediate_constant_2_uniform,
    intermediate_constant_n, moderate_asymptotic, required_sessions, tail_estimate_conditional, tail_estimate_crude,
    ultra_asymptotic, ultra_constant, Method, TailEstimate,
};
use telecom_core::simulator::{
    MarginalCdf, ServiceSystemParams, SplitConfig, TelecomSimulator, WorkloadMethod, WorkloadSimulator,
};
use telecom_core::stats::{ks_one_sample, ks_sorted, ks_two_sample, wilson, Z95};
use telecom_core::streams::{par_map, try_par_map};
use telecom_core::{
    mu_ell_atom, mu_ell_density, mu_ell_tail, NuMeasure, Quadrature, RewardLaw, StableSpec, TailMeasure, TelecomParams,
};

use crate::config::{Config, Experiment};
use crate::output::{Report, Row};
use crate::Failure;

/// Draws for the n-session constant when no quadrature exists.
const CONSTANT_REPLICATES: u64 = 1_000_000;
/// Stream domains for the limit check; estimators use their own.
const DOMAIN_LIMIT: u64 = 0x4c49_4d00;
const DOMAIN_WORKLOAD: u64 = 0x574b_4c00;
/// Range of the exact finite-horizon law used as a diagnostic.
const EXACT_LAW_RANGE: f64 = 60.0;

pub fn run(config: &Config) -> Result<Report, Failure> {
    match config.experiment {
        Experiment::LimitCheck => limit_check(config),
        Experiment::LdModerate => moderate(config),
        Experiment::LdIntermediate => intermediate(config),
        Experiment::LdMultisession => multisession(config),
        Experiment::LdUltra => ultra(config),
        Experiment::Constants => constants(config),
        Experiment::MeasureSelftest => selftest(config),
    }
}

fn measure(config: &Config, params: TelecomParams, t: f64) -> Result<TailMeasure, Failure> {
    Ok(TailMeasure::new(t, params, config.reward.clone())?)
}

fn simulator(config: &Config, m: &TailMeasure, v0: f64) -> Result<TelecomSimulator, Failure> {
    let s = &config.simulation;
    let split = SplitConfig::with_budget(m, v0, s.jump_budget)?.with_residual(s.residual);
    Ok(TelecomSimulator::new(m, split, s.marginal)?)
}

fn estimate(config: &Config, sim: &TelecomSimulator, rho: f64, n_max: usize) -> Result<TailEstimate, Failure> {
    let (n, seed) = (config.replicates, config.seed);
    Ok(match config.simulation.method {
        Method::Crude => tail_estimate_crude(sim, rho, n, seed)?,
        Method::Conditional => tail_estimate_conditional(sim, rho, config.simulation.n_max.unwrap_or(n_max), n, seed)?,
    })
}

fn row(config: &Config, t: f64, rho: f64, est: &TailEstimate, theory: f64) -> Row {
    Row {
        experiment: config.experiment.name().to_string(),
        t,
        rho,
        p_hat: est.p_hat,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        theory,
        ratio: est.p_hat / theory,
        method: est.method.as_str().to_string(),
        replicates: est.replicates,
        seed: est.seed,
    }
}

fn diagnostics(sim: &TelecomSimulator, t: f64, rho: f64, est: &TailEstimate) -> Value {
    let split = sim.split();
    let mut d = json!({
        "t": t,
        "rho": rho,
        "v0": split.v0,
        "epsilon": split.epsilon,
        "centering": sim.centering(),
        "big_jump_rate": sim.big_jump_rate(),
        "small_jump_rate": sim.small_jump_rate(),
        "residual_variance": sim.residual_variance(),
        "neglected_variance_bound": sim.neglected_variance_bound(),
        "small_variance_bound": sim.small_variance_bound(),
    });
    if let Some(c) = &est.conditional {
        d["n_max"] = json!(c.n_max);
        d["poisson_remainder"] = json!(c.remainder);
        d["terms"] = json!(c.terms);
    }
    d
}

/// Runs the estimator at every `(t, ρ)` with big-jump threshold `v0(t, ρ)`.
fn sweep(
    config: &Config,
    report: &mut Report,
    v0: impl Fn(f64, f64) -> f64,
    n_max: usize,
    theory: impl Fn(&TailMeasure, f64, f64) -> Result<f64, Failure>,
) -> Result<(), Failure> {
    let params = config.telecom_params()?;
    for (t, rho) in config.levels() {
        let m = measure(config, params, t)?;
        let sim = simulator(config, &m, v0(t, rho))?;
        let est = estimate(config, &sim, rho, n_max)?;
        report.rows.push(row(config, t, rho, &est, theory(&m, t, rho)?));
        report.diagnostics.push(diagnostics(&sim, t, rho, &est));
    }
    Ok(())
}

fn moderate(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let TelecomParams { q, gamma } = config.telecom_params()?;
    if let Some(beta) = config.rho.beta {
        if !(beta > 1.0 / gamma && beta < 1.0) {
            report.warnings.push(format!("beta = {beta} lies outside the moderate zone (1/gamma, 1)"));
        }
    }
    for (t, rho) in config.levels() {
        if !(rho > t.powf(1.0 / gamma) && rho < t) {
            report.warnings.push(format!("rho = {rho} at t = {t} is outside (t^(1/gamma), t)"));
        }
    }
    let h = config.simulation.h;
    sweep(
        config,
        &mut report,
        |_, rho| h * rho,
        2,
        |m, t, rho| Ok(moderate_asymptotic(q, gamma, m.reward_moment(), t, rho)),
    )?;
    Ok(report)
}

fn intermediate(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let TelecomParams { q, gamma } = config.telecom_params()?;
    let kappa = config.rho.kappa.unwrap_or(f64::NAN);
    let sessions = required_sessions(&config.reward, kappa)?;
    if sessions.n != 1 {
        return Err(Failure::Core(telecom_core::Error::Config(format!(
            "kappa = {kappa} needs {} sessions; use ld-multisession",
            sessions.n
        ))));
    }
    let d1 = intermediate_constant_1(gamma, &config.reward, kappa)?;
    report.diagnostics.push(json!({ "kappa": kappa, "d1": d1 }));
    let h = config.simulation.h;
    sweep(config, &mut report, |t, _| h * t, 2, |_, t, _| Ok(q * d1 * t.powf(1.0 - gamma)))?;
    Ok(report)
}

fn multisession(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let TelecomParams { q, gamma } = config.telecom_params()?;
    let kappa = config.rho.kappa.unwrap_or(f64::NAN);
    let sessions = required_sessions(&config.reward, kappa)?;
    let n = sessions.n;
    if n == 1 {
        report.warnings.push(format!("kappa = {kappa} is reached by one session; ld-intermediate applies"));
    }
    let (dn, source) = match (n, &config.reward) {
        (1, r) => (intermediate_constant_1(gamma, r, kappa)?, json!("closed_form")),
        (2, r @ RewardLaw::Uniform { .. }) => (intermediate_constant_2_uniform(gamma, r, kappa)?, json!("quadrature")),
        (_, r) => {
            let c = intermediate_constant_n(gamma, r, kappa, n, CONSTANT_REPLICATES, config.seed)?;
            (c.value, json!({ "monte_carlo": c }))
        }
    };
    let mut d = json!({ "kappa": kappa, "sessions": n, "eta": sessions.eta, "s_star": sessions.s_star, "d_n": dn, "source": source });
    if let Some(z) = sessions.zeta {
        d["zeta"] = json!(z);
    }
    report.diagnostics.push(d);
    let h = config.simulation.h;
    let exponent = n as f64 * (1.0 - gamma);
    sweep(config, &mut report, |t, _| h * t, n + 1, |_, t, _| Ok(q.powi(n as i32) * dn * t.powf(exponent)))?;
    Ok(report)
}

fn ultra(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let TelecomParams { q, gamma } = config.telecom_params()?;
    let m = config.reward.regular_variation_index().ok_or_else(|| {
        Failure::Core(telecom_core::Error::Config("ld-ultra needs a regularly varying reward".into()))
    })?;
    report.diagnostics.push(json!({ "tail_index": m, "constant": ultra_constant(m, gamma)? }));
    for (t, rho) in config.levels() {
        if rho <= t {
            report.warnings.push(format!("rho = {rho} at t = {t} is not above t"));
        }
    }
    let h = config.simulation.h;
    let reward = config.reward.clone();
    sweep(config, &mut report, |_, rho| h * rho, 2, |_, t, rho| Ok(ultra_asymptotic(q, gamma, &reward, t, rho)?))?;
    Ok(report)
}

fn constants(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let gamma = config.params.gamma;
    let name = config.experiment.name().to_string();
    let plain = |value: f64, ci: (f64, f64), theory: f64, method: &str, replicates: u64, kappa: f64| Row {
        experiment: name.clone(),
        t: 1.0,
        rho: kappa,
        p_hat: value,
        ci_low: ci.0,
        ci_high: ci.1,
        theory,
        ratio: value / theory,
        method: method.to_string(),
        replicates,
        seed: config.seed,
    };
    for &kappa in &config.kappa {
        let sessions = required_sessions(&config.reward, kappa)?;
        let n = sessions.n;
        let mc = intermediate_constant_n(gamma, &config.reward, kappa, n, config.replicates, config.seed)?;
        let theory = match (n, &config.reward) {
            (1, r) => {
                let closed = intermediate_constant_1(gamma, r, kappa)?;
                let quad = intermediate_constant_1_quadrature(gamma, r, kappa)?;
                report.rows.push(plain(quad, (quad, quad), closed, "quadrature", 0, kappa));
                Some(closed)
            }
            (2, r @ RewardLaw::Uniform { .. }) => Some(intermediate_constant_2_uniform(gamma, r, kappa)?),
            _ => None,
        };
        let theory = theory.unwrap_or_else(|| {
            report
                .warnings
                .push(format!("kappa = {kappa}: no independent value for {n} sessions; theory repeats the estimate"));
            mc.value
        });
        report.rows.push(plain(mc.value, (mc.ci_low, mc.ci_high), theory, "monte_carlo", mc.replicates, kappa));
        report.diagnostics.push(json!({ "kappa": kappa, "sessions": n }));
    }
    if let Some(m) = config.reward.regular_variation_index() {
        if m > gamma {
            report.diagnostics.push(json!({ "tail_index": m, "ultra_constant": ultra_constant(m, gamma)? }));
        }
    }
    Ok(report)
}

/// Empirical tails of `Y(t)/s_t`, `s_t = (E R^γ t)^(1/γ)`, against the
/// stable law; optionally the service-system workload `Z_a(t)` against `Y(t)`.
fn limit_check(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let params = config.telecom_params()?;
    let spec = StableSpec::new(params.q, params.gamma)?;
    let n = config.replicates;
    let name = config.experiment.name().to_string();
    let tail_row = |t: f64, x: f64, sample: &[f64], theory: f64, method: &str| {
        let k = sample.iter().filter(|&&y| y >= x).count() as u64;
        let (lo, hi) = wilson(k, n, Z95);
        let p = k as f64 / n as f64;
        Row {
            experiment: name.clone(),
            t,
            rho: x,
            p_hat: p,
            ci_low: lo,
            ci_high: hi,
            theory,
            ratio: p / theory,
            method: method.to_string(),
            replicates: n,
            seed: config.seed,
        }
    };
    for (i, &t) in config.t.iter().enumerate() {
        let m = measure(config, params, t)?;
        let scale = (m.reward_moment() * t).powf(1.0 / params.gamma);
        let sim = simulator(config, &m, config.simulation.h * t)?;
        let mut ys = try_par_map(n as usize, config.seed, DOMAIN_LIMIT + i as u64, |_, rng| {
            sim.sample(rng).map(|s| s.value / scale)
        })?;
        for &x in &config.x {
            report.rows.push(tail_row(t, x, &ys, spec.survival(x)?, "telecom"));
        }
        ys.sort_by(f64::total_cmp);
        let ks_stable = ks_sorted(&ys, &spec.cdf_grid(&ys)?);
        let mut d = json!({ "t": t, "scale": scale, "ks_stable": ks_stable });
        if m.max_jump().is_finite() {
            let exact = MarginalCdf::new(&m, scale, EXACT_LAW_RANGE)?;
            let clamp = |x: f64| x.clamp(-EXACT_LAW_RANGE, EXACT_LAW_RANGE);
            d["ks_exact_law"] = json!(ks_one_sample(&ys, |x| exact.cdf(clamp(x)).unwrap_or(f64::NAN)));
        }
        report.diagnostics.push(d);
    }
    if let Some(service) = &config.service {
        let system = ServiceSystemParams::critical(
            service.l,
            service.duration(params.gamma)?,
            config.reward.clone(),
            service.a,
        )?;
        report.warnings.extend(system.regime_warnings());
        let method = WorkloadMethod::Hybrid { tau: None, budget: service.session_budget };
        let work = WorkloadSimulator::new(&system, &service.t, method, service.session_cap)?;
        let paths = par_map(n as usize, config.seed, DOMAIN_WORKLOAD, |_, rng| work.simulate_z(rng));
        for (j, &t) in service.t.iter().enumerate() {
            let m = measure(config, params, t)?;
            let scale = (m.reward_moment() * t).powf(1.0 / params.gamma);
            let sim = simulator(config, &m, config.simulation.h * t)?;
            let ys = try_par_map(n as usize, config.seed, DOMAIN_WORKLOAD + 1 + j as u64, |_, rng| {
                sim.sample(rng).map(|s| s.value / scale)
            })?;
            let zs: Vec<f64> = paths.iter().map(|p| p[j] / scale).collect();
            for &x in &config.x {
                let telecom = ys.iter().filter(|&&y| y >= x).count() as f64 / n as f64;
                if telecom > 0.0 {
                    report.rows.push(tail_row(t, x, &zs, telecom, "workload"));
                }
            }
            report.diagnostics.push(json!({
                "service_t": t,
                "a": service.a,
                "tau": work.tau(),
                "expected_sessions": work.expected_sessions(),
                "ks_two_sample": ks_two_sample(&zs, &ys),
            }));
        }
    }
    Ok(report)
}

/// Closed forms against independent evaluations, one row per check at its
/// worst point; `p_hat` holds the closed form and `theory` the reference.
fn selftest(config: &Config) -> Result<Report, Failure> {
    let mut report = Report::default();
    let params = config.telecom_params()?;
    let gamma = params.gamma;
    let horizons = if config.t.is_empty() { vec![1.0, 10.0, 1e3] } else { config.t.clone() };
    let quad = Quadrature::with_rel_tol(1e-12);
    let name = config.experiment.name().to_string();
    let mut failures = Vec::new();
    let mut check = |report: &mut Report, t: f64, at: f64, value: f64, reference: f64, method: &str, ok: bool| {
        if !ok {
            failures.push(format!("{method} at t = {t}, argument {at}: {value} vs {reference}"));
        }
        report.rows.push(Row {
            experiment: name.clone(),
            t,
            rho: at,
            p_hat: value,
            ci_low: value,
            ci_high: value,
            theory: reference,
            ratio: value / reference,
            method: method.to_string(),
            replicates: 0,
            seed: config.seed,
        });
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let nu = NuMeasure::new(gamma)?;
    for &t in &horizons {
        let grid: Vec<f64> = (0..=24).map(|i| t * 1e-4f64.powf(1.0 - i as f64 / 24.0)).collect();
        // Tail differences against the integrated density.
        let mut worst = (0.0, 0.0, 1.0, 1.0);
        for w in grid.windows(2) {
            let lhs = mu_ell_tail(t, gamma, w[0])? - mu_ell_tail(t, gamma, w[1])?;
            let rhs = quad.integrate(|l| mu_ell_density(t, gamma, l).unwrap_or(f64::NAN), w[0], w[1])?.value;
            if rel(lhs, rhs) >= worst.0 {
                worst = (rel(lhs, rhs), w[0], lhs, rhs);
            }
        }
        check(&mut report, t, worst.1, worst.2, worst.3, "density_integral", worst.0 <= 1e-9);
        // The tail at ℓ0 = t is the atom.
        let (tail_at_t, atom) = (mu_ell_tail(t, gamma, t)?, mu_ell_atom(t, gamma)?);
        check(&mut report, t, t, tail_at_t, atom, "atom", rel(tail_at_t, atom) <= 1e-12);

        let m = measure(config, params, t)?;
        let mut worst_q = (0.0, 0.0, 1.0, 1.0);
        let mut worst_b = (0.0, 0.0, 1.0, 1.0);
        let mut worst_mean = (0.0, 0.0, 1.0, 1.0);
        for &v in &grid {
            let (closed, reference) = (m.tail(v)?, m.tail_quadrature(v)?);
            if closed > 0.0 && rel(closed, reference) >= worst_q.0 {
                worst_q = (rel(closed, reference), v, closed, reference);
            }
            let bound = m.tail_bound(v)?;
            if closed / bound >= worst_b.0 {
                worst_b = (closed / bound, v, closed, bound);
            }
            let (mean, mean_ref) = (m.mean_above(v)?, m.mean_above_quadrature(v)?);
            if mean > 0.0 && rel(mean, mean_ref) >= worst_mean.0 {
                worst_mean = (rel(mean, mean_ref), v, mean, mean_ref);
            }
        }
        check(&mut report, t, worst_q.1, worst_q.2, worst_q.3, "tail_quadrature", worst_q.0 <= 1e-8);
        check(&mut report, t, worst_b.1, worst_b.2, worst_b.3, "tail_bound", worst_b.0 <= 1.0);
        check(&mut report, t, worst_mean.1, worst_mean.2, worst_mean.3, "mean_above_quadrature", worst_mean.0 <= 1e-8);
    }
    let mut worst_nu = (0.0, 1.0, 1.0, 1.0);
    for i in 0..=40 {
        let s = 1e-6f64.powf(i as f64 / 40.0);
        let (a, b) = (nu.tail(s)?, mu_ell_tail(1.0, gamma, s)?);
        if rel(a, b) >= worst_nu.0 {
            worst_nu = (rel(a, b), s, a, b);
        }
    }
    check(&mut report, 1.0, worst_nu.1, worst_nu.2, worst_nu.3, "nu_unit_horizon", worst_nu.0 <= 1e-12);
    report.diagnostics.push(json!({ "checks": report.rows.len(), "failed": failures.len() }));
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(Failure::Selftest { report, failures })
    }
}
