use approx::assert_relative_eq;
use telecom_core::simulator::{
    centering, centering_bound, exp_moment_small, MarginalCdf, Residual, ServiceSystemParams, SplitConfig,
    TelecomSimulator, WorkloadMethod, WorkloadSimulator,
};
use telecom_core::stats::{ks_one_sample, ks_two_sample, Moments, Z99_ONE_SIDED};
use telecom_core::streams::{par_map, stream, try_par_map};
use telecom_core::{DurationLaw, Error, RewardLaw, RewardMarginal, TailMeasure, TelecomParams};

fn measure(q: f64, t: f64, reward: RewardLaw) -> TailMeasure {
    TailMeasure::new(t, TelecomParams::new(q, 1.5).unwrap(), reward).unwrap()
}

/// Small jump budget; the Gaussian residual keeps the variance exact.
fn simulator(m: &TailMeasure, v0: f64, marginal: RewardMarginal) -> TelecomSimulator {
    let split = SplitConfig::with_budget(m, v0, 64.0).unwrap();
    TelecomSimulator::new(m, split, marginal).unwrap()
}

#[test]
fn big_jump_count_has_poisson_mean() {
    let m = measure(1.0, 10.0, RewardLaw::uniform(1.0).unwrap());
    let sim = simulator(&m, 1.0, RewardMarginal::Exact);
    assert_relative_eq!(sim.big_jump_rate(), m.tail(1.0).unwrap(), max_relative = 1e-15);
    let counts = try_par_map(100_000, 1, 1, |_, rng| sim.sample_big_jumps(rng).map(|j| j.len() as f64)).unwrap();
    let mom = Moments::from_slice(&counts);
    assert!((mom.mean - sim.big_jump_rate()).abs() < 3.0 * mom.std_error(), "{mom:?}");
}

#[test]
fn big_jumps_follow_the_restricted_measure() {
    for (reward, marginal) in [
        (RewardLaw::uniform(1.0).unwrap(), RewardMarginal::Exact),
        (RewardLaw::uniform(1.0).unwrap(), RewardMarginal::Tabulated),
        (RewardLaw::pareto(3.0, 1.0).unwrap(), RewardMarginal::Exact),
        (RewardLaw::truncated_pareto(2.5, 0.5, 4.0).unwrap(), RewardMarginal::Tabulated),
    ] {
        let m = measure(1.0, 10.0, reward);
        let v0 = 1.0;
        let sim = simulator(&m, v0, marginal);
        let base = m.tail(v0).unwrap();
        let jumps = try_par_map(100_000, 2, 2, |_, rng| sim.big_jump(rng).map(Option::unwrap)).unwrap();
        assert!(jumps.iter().all(|&v| v >= v0 && v <= m.max_jump()));
        let ks = ks_one_sample(&jumps, |w| if w <= v0 { 0.0 } else { 1.0 - m.tail(w).unwrap() / base });
        assert!(ks < 0.02, "{marginal:?}: KS {ks}");
    }
}

#[test]
fn no_big_jumps_beyond_the_largest_jump() {
    let m = measure(1.0, 10.0, RewardLaw::uniform(1.0).unwrap());
    let split = SplitConfig::new(11.0, 0.1).unwrap();
    let sim = TelecomSimulator::new(&m, split, RewardMarginal::Exact).unwrap();
    assert_eq!(sim.big_jump_rate(), 0.0);
    assert_eq!(sim.centering(), 0.0);
    let mut rng = stream(3, 0, 0);
    for _ in 0..100 {
        assert!(sim.sample_big_jumps(&mut rng).unwrap().is_empty());
    }
    assert_eq!(centering(&m, 11.0).unwrap(), 0.0);
}

#[test]
fn small_part_is_centred_with_bounded_variance() {
    for (t, v0) in [(10.0, 1.0), (100.0, 10.0), (1000.0, 20.0)] {
        let m = measure(1.0, t, RewardLaw::uniform(1.0).unwrap());
        let sim = simulator(&m, v0, RewardMarginal::Exact);
        let xs = try_par_map(100_000, 4, 4, |_, rng| sim.sample_small_part(rng)).unwrap();
        let mom = Moments::from_slice(&xs);
        assert!(mom.mean.abs() < 3.0 * mom.std_error(), "t {t}: {mom:?}");
        let exact = sim.small_variance().unwrap();
        assert!(exact <= sim.small_variance_bound());
        // Fourth moment of a compound Poisson sum is finite; a 5% band is ~10 SE.
        assert!((mom.variance() / exact - 1.0).abs() < 0.05, "t {t}: {} vs {exact}", mom.variance());
    }
}

#[test]
fn decomposition_identity_holds_exactly() {
    let m = measure(1.0, 100.0, RewardLaw::pareto(3.0, 1.0).unwrap());
    let sim = simulator(&m, 10.0, RewardMarginal::Exact);
    let mut rng = stream(5, 0, 0);
    for _ in 0..1000 {
        let s = sim.sample(&mut rng).unwrap();
        assert_eq!(s.value, s.small_sum + s.big_sum - s.centering);
    }
}

#[test]
fn samples_reproduce_bit_for_bit() {
    let m = measure(1.0, 100.0, RewardLaw::uniform(1.0).unwrap());
    let sim = simulator(&m, 10.0, RewardMarginal::Exact);
    let a = sim.sample(&mut stream(42, 7, 123)).unwrap();
    let b = sim.sample(&mut stream(42, 7, 123)).unwrap();
    assert_eq!(a, b);
    let c = sim.sample(&mut stream(42, 7, 124)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn telecom_value_has_mean_zero() {
    let m = measure(1.0, 100.0, RewardLaw::uniform(1.0).unwrap());
    let sim = simulator(&m, 10.0, RewardMarginal::Exact);
    let xs = try_par_map(100_000, 6, 6, |_, rng| sim.sample(rng).map(|s| s.value)).unwrap();
    let mom = Moments::from_slice(&xs);
    assert!(mom.mean.abs() < 3.0 * mom.std_error(), "{mom:?}");
}

#[test]
fn vanishing_intensity_gives_vanishing_values() {
    let t = 100.0;
    let m = measure(1e-9, t, RewardLaw::uniform(1.0).unwrap());
    let sim = simulator(&m, 10.0, RewardMarginal::Exact);
    let xs = try_par_map(1000, 7, 7, |_, rng| sim.sample(rng).map(|s| s.value)).unwrap();
    assert!(xs.iter().all(|x| x.abs() < 1e-3 * t));
}

#[test]
fn centering_examples() {
    let m = measure(1.0, 10.0, RewardLaw::degenerate(1.0).unwrap());
    let e = centering(&m, 1.0).unwrap();
    assert_relative_eq!(e, 19.0 + 1.0 / 3.0, max_relative = 1e-12);
    assert!(e <= 40.0);
    assert_relative_eq!(centering_bound(&m, 1.0), 40.0, max_relative = 1e-14);
    let m2 = measure(2.0, 10.0, RewardLaw::degenerate(1.0).unwrap());
    assert_relative_eq!(centering(&m2, 1.0).unwrap(), 2.0 * e, max_relative = 1e-14);
    assert_eq!(centering(&m, 10.5).unwrap(), 0.0);
}

#[test]
fn exponential_moment_properties() {
    let m = measure(1.0, 10.0, RewardLaw::degenerate(1.0).unwrap());
    assert_eq!(exp_moment_small(&m, 1.0, 0.0, 700.0).unwrap(), 1.0);
    for lambda in [0.01, 0.5, 2.0, 5.0] {
        assert!(exp_moment_small(&m, 1.0, lambda, 700.0).unwrap() >= 1.0);
    }
    let err = exp_moment_small(&m, 1.0, 5.0, 1.0).unwrap_err();
    assert!(matches!(err, Error::Overflow(_)));
}

#[test]
fn split_budget_controls_simulated_jump_count() {
    let m = measure(1.0, 1e6, RewardLaw::uniform(1.0).unwrap());
    let split = SplitConfig::with_budget(&m, 1e4, 1000.0).unwrap();
    let sim = TelecomSimulator::new(&m, split, RewardMarginal::Exact).unwrap();
    assert_relative_eq!(sim.small_jump_rate(), 1000.0, max_relative = 1e-9);
    assert!(split.epsilon > SplitConfig::variance_rule_epsilon(1.5, 1e4));
    // A budget above the variance-rule count falls back to that rule; at
    // γ = 1.1 the count stays moderate.
    let small = TailMeasure::new(1.0, TelecomParams::new(1.0, 1.1).unwrap(), RewardLaw::uniform(1.0).unwrap()).unwrap();
    let split = SplitConfig::with_budget(&small, 10.0, 1e8).unwrap();
    assert_eq!(split.epsilon, SplitConfig::variance_rule_epsilon(1.1, 10.0));
    let sim = TelecomSimulator::new(&small, split, RewardMarginal::Exact).unwrap();
    assert!(sim.neglected_variance_bound() <= 1.0001e-6 * sim.small_variance_bound());
}

#[test]
fn residual_choice_changes_only_the_variance() {
    let m = measure(1.0, 1e4, RewardLaw::uniform(1.0).unwrap());
    let split = SplitConfig::with_budget(&m, 1e3, 100.0).unwrap();
    let gauss = TelecomSimulator::new(&m, split, RewardMarginal::Exact).unwrap();
    let drop = TelecomSimulator::new(&m, split.with_residual(Residual::Drop), RewardMarginal::Exact).unwrap();
    assert!(gauss.residual_variance() > 0.0);
    assert_eq!(drop.residual_variance(), 0.0);
    let total = gauss.small_variance().unwrap();
    let xs = try_par_map(50_000, 8, 8, |_, rng| gauss.sample_small_part(rng)).unwrap();
    let var = Moments::from_slice(&xs).variance();
    assert!((var / total - 1.0).abs() < 0.05, "{var} vs {total}");
}

fn service(a: f64, reward: RewardLaw) -> ServiceSystemParams {
    ServiceSystemParams::critical(1.0, DurationLaw::pareto(1.5, 1.0).unwrap(), reward, a).unwrap()
}

#[test]
fn zero_intensity_gives_zero_workload() {
    let p =
        ServiceSystemParams::new(0.0, DurationLaw::pareto(1.5, 1.0).unwrap(), RewardLaw::uniform(1.0).unwrap(), 10.0)
            .unwrap();
    let sim = WorkloadSimulator::new(&p, &[0.0, 0.5, 1.0], WorkloadMethod::Exact, 1e6).unwrap();
    let mut rng = stream(1, 0, 0);
    assert_eq!(sim.simulate_workload(&mut rng), vec![0.0; 3]);
    assert_eq!(sim.simulate_z(&mut rng), vec![0.0; 3]);
}

#[test]
fn workload_mean_and_monotone_paths() {
    let p = service(100.0, RewardLaw::degenerate(1.0).unwrap());
    let grid = [0.25, 0.5, 1.0];
    let sim = WorkloadSimulator::new(&p, &grid, WorkloadMethod::Exact, 1e6).unwrap();
    let paths = par_map(10_000, 2, 9, |_, rng| sim.simulate_workload(rng));
    assert!(paths.iter().all(|w| w.windows(2).all(|x| x[1] >= x[0])));
    for (k, &t) in grid.iter().enumerate() {
        let col: Vec<f64> = paths.iter().map(|w| w[k]).collect();
        let mom = Moments::from_slice(&col);
        let target = p.mean_rate() * p.a * t;
        assert!((mom.mean - target).abs() < 3.0 * mom.std_error(), "t {t}: {mom:?} vs {target}");
    }
    let zs = par_map(10_000, 3, 9, |_, rng| sim.simulate_z(rng)[2]);
    let mom = Moments::from_slice(&zs);
    assert!(mom.mean.abs() < 3.0 * mom.std_error(), "{mom:?}");
}

#[test]
fn hybrid_workload_matches_exact_in_law() {
    let p = service(1e3, RewardLaw::uniform(1.0).unwrap());
    let grid = [0.5, 1.0];
    let exact = WorkloadSimulator::new(&p, &grid, WorkloadMethod::Exact, 1e7).unwrap();
    let hybrid = WorkloadSimulator::new(&p, &grid, WorkloadMethod::Hybrid { tau: None, budget: 1000.0 }, 1e7).unwrap();
    assert!(hybrid.tau() > 1.0);
    assert!(hybrid.expected_sessions() < 0.2 * exact.expected_sessions());
    let a = par_map(4000, 4, 10, |_, rng| exact.simulate_z(rng));
    let b = par_map(4000, 5, 10, |_, rng| hybrid.simulate_z(rng));
    for k in 0..grid.len() {
        let xa: Vec<f64> = a.iter().map(|z| z[k]).collect();
        let xb: Vec<f64> = b.iter().map(|z| z[k]).collect();
        let ks = ks_two_sample(&xa, &xb);
        // 99.9% two-sample critical value at n = m = 4000 is 0.0437.
        assert!(ks < 0.0437, "t {}: KS {ks}", grid[k]);
        let (ma, mb) = (Moments::from_slice(&xa), Moments::from_slice(&xb));
        let se = (ma.std_error().powi(2) + mb.std_error().powi(2)).sqrt();
        assert!((ma.mean - mb.mean).abs() < Z99_ONE_SIDED * 1.5 * se);
    }
}

#[test]
fn workload_respects_the_session_cap() {
    let p = service(1e6, RewardLaw::uniform(1.0).unwrap());
    let err = WorkloadSimulator::new(&p, &[1.0], WorkloadMethod::Exact, 1e6).unwrap_err();
    assert!(matches!(err, Error::Resource(_)));
}

#[test]
fn critical_intensity_maps_to_telecom_parameters() {
    let p = ServiceSystemParams::critical(
        2.0,
        DurationLaw::pareto(1.5, 2.0).unwrap(),
        RewardLaw::uniform(1.0).unwrap(),
        1e4,
    )
    .unwrap();
    assert_relative_eq!(p.lambda, 2.0 * 100.0, max_relative = 1e-14);
    let tp = p.telecom_params().unwrap();
    assert_relative_eq!(tp.q, 2.0 * 2f64.powf(1.5) * 1.5, max_relative = 1e-14);
    assert!(p.regime_warnings().is_empty());
    let heavy = ServiceSystemParams::critical(
        1.0,
        DurationLaw::pareto(1.5, 1.0).unwrap(),
        RewardLaw::pareto(1.2, 1.0).unwrap(),
        10.0,
    );
    // E R is finite, but the reward tail is heavier than the duration tail.
    assert!(!heavy.unwrap().regime_warnings().is_empty());
}

#[test]
fn marginal_matches_exact_finite_horizon_law() {
    // At t = 100 the law is still far from stable, so this checks the
    // samplers against an independent Fourier inversion.
    let t = 100.0;
    let m = measure(1.0, t, RewardLaw::uniform(1.0).unwrap());
    let scale = (0.4 * t).powf(1.0 / 1.5);
    let law = MarginalCdf::new(&m, scale, 60.0).unwrap();
    let sim = simulator(&m, 0.1 * t, RewardMarginal::Exact);
    let xs = try_par_map(40_000, 12, 4, |_, rng| sim.sample(rng).map(|y| y.value / scale)).unwrap();
    // Mass beyond 60 is below 1e-9; saturate there.
    let ks = ks_one_sample(&xs, |x| law.cdf(x.min(60.0)).unwrap());
    assert!(ks < 0.01, "KS {ks}");
    let spec = telecom_core::StableSpec::new(1.0, 1.5).unwrap();
    assert!(ks_one_sample(&xs, |x| spec.cdf(x).unwrap()) > 0.05);
}
