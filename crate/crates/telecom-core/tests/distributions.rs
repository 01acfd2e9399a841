use approx::assert_relative_eq;
use proptest::prelude::*;
use telecom_core::stats::{ks_one_sample, Moments};
use telecom_core::streams::{par_map, stream};
use telecom_core::{DurationLaw, RewardLaw};

fn draws(law: &RewardLaw, n: usize, seed: u64) -> Vec<f64> {
    par_map(n, seed, 1, |_, rng| law.sample(rng))
}

#[test]
fn inverse_cdf_samplers_pass_ks() {
    for law in [
        RewardLaw::uniform(1.0).unwrap(),
        RewardLaw::uniform(3.5).unwrap(),
        RewardLaw::pareto(3.0, 1.0).unwrap(),
        RewardLaw::pareto(1.7, 0.2).unwrap(),
        RewardLaw::truncated_pareto(2.5, 0.5, 4.0).unwrap(),
    ] {
        let xs = draws(&law, 100_000, 11);
        let d = ks_one_sample(&xs, |x| 1.0 - law.tail(x));
        assert!(d < 0.01, "{law:?}: KS {d}");
    }
}

#[test]
fn discrete_and_degenerate_frequencies() {
    let law = RewardLaw::discrete(&[(0.3, 0.5), (0.7, 0.5)]).unwrap();
    let xs = draws(&law, 100_000, 3);
    assert!(xs.iter().all(|&x| x == 0.3 || x == 0.7));
    let frac = xs.iter().filter(|&&x| x == 0.7).count() as f64 / xs.len() as f64;
    assert!((frac - 0.5).abs() < 0.01, "frac {frac}");
    let d = RewardLaw::degenerate(2.0).unwrap();
    assert!(draws(&d, 1000, 1).iter().all(|&x| x == 2.0));
}

#[test]
fn uniform_mean_and_pareto_tail_frequency() {
    let u = draws(&RewardLaw::uniform(1.0).unwrap(), 1_000_000, 5);
    let mean = Moments::from_slice(&u).mean;
    assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    let p = draws(&RewardLaw::pareto(3.0, 1.0).unwrap(), 1_000_000, 6);
    let freq = p.iter().filter(|&&x| x >= 2.0).count() as f64 / p.len() as f64;
    assert!((freq - 0.125).abs() < 0.002, "freq {freq}");
}

#[test]
fn essential_suprema() {
    assert_eq!(RewardLaw::uniform(1.0).unwrap().ess_sup(), 1.0);
    assert_eq!(RewardLaw::pareto(3.0, 1.0).unwrap().ess_sup(), f64::INFINITY);
    assert_eq!(RewardLaw::discrete(&[(0.3, 0.5), (0.7, 0.5)]).unwrap().ess_sup(), 0.7);
    assert_eq!(RewardLaw::truncated_pareto(2.0, 1.0, 5.0).unwrap().ess_sup(), 5.0);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(RewardLaw::uniform(0.0).is_err());
    assert!(RewardLaw::pareto(-1.0, 1.0).is_err());
    assert!(RewardLaw::truncated_pareto(2.0, 3.0, 1.0).is_err());
    assert!(RewardLaw::discrete(&[]).is_err());
    assert!(DurationLaw::pareto(2.0, 1.0).is_err());
    assert!(DurationLaw::pareto(1.5, 0.0).is_err());
}

#[test]
fn duration_law_summary_values() {
    let d = DurationLaw::pareto(1.5, 2.0).unwrap();
    assert_relative_eq!(d.tail_constant(), 2f64.powf(1.5), max_relative = 1e-15);
    assert_relative_eq!(d.mean(), 6.0, max_relative = 1e-15);
    assert_relative_eq!(d.tail(8.0), 0.125, max_relative = 1e-14);
    let xs = par_map(100_000, 9, 2, |_, rng| d.sample(rng));
    let ks = ks_one_sample(&xs, |u| 1.0 - d.tail(u));
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn duration_age_law_matches_equilibrium_cdf() {
    let d = DurationLaw::pareto(1.5, 1.0).unwrap();
    // ∫_0^x P(U > y) dy / E U
    let cdf = |x: f64| {
        let area = if x <= 1.0 { x } else { 1.0 + (1.0 - x.powf(-0.5)) / 0.5 };
        area / d.mean()
    };
    let xs = par_map(100_000, 4, 3, |_, rng| d.sample_age(rng));
    let ks = ks_one_sample(&xs, cdf);
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn size_biased_uniform_matches_power_density() {
    let law = RewardLaw::uniform(1.0).unwrap();
    let mut rng = stream(8, 0, 0);
    let xs: Vec<f64> = (0..50_000).map(|_| law.sample_size_biased(1.5, 0.3, &mut rng).unwrap()).collect();
    let lo = 0.3f64.powf(2.5);
    let ks = ks_one_sample(&xs, |x| (x.clamp(0.3, 1.0).powf(2.5) - lo) / (1.0 - lo));
    assert!(ks < 0.01, "KS {ks}");
}

proptest! {
    #[test]
    fn pareto_tail_is_regularly_varying(m in 1.1..6.0f64, x in 1.0..1e3f64, lambda in 1.0..50.0f64) {
        let law = RewardLaw::pareto(m, 1.0).unwrap();
        let ratio = law.tail(lambda * x) / law.tail(x);
        prop_assert!((ratio / lambda.powf(-m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_moments_decrease_in_the_cutoff(k1 in 0.0..1.2f64, dk in 0.0..1.0f64, p in 0.2..1.9f64) {
        for law in [
            RewardLaw::uniform(1.0).unwrap(),
            RewardLaw::pareto(3.0, 1.0).unwrap(),
            RewardLaw::truncated_pareto(2.5, 0.5, 4.0).unwrap(),
            RewardLaw::discrete(&[(0.3, 0.5), (0.7, 0.5)]).unwrap(),
        ] {
            let full = law.truncated_moment(p, 0.0).unwrap();
            let a = law.truncated_moment(p, k1).unwrap();
            let b = law.truncated_moment(p, k1 + dk).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-13) + 1e-300);
            prop_assert!(full - a >= -1e-13 * full);
            let lower = law.lower_moment(p, k1);
            prop_assert!((lower + a - full).abs() <= 1e-12 * full.max(1.0));
        }
    }

    #[test]
    fn tails_are_nonincreasing_probabilities(x in -1.0..10.0f64, dx in 0.0..5.0f64) {
        for law in [
            RewardLaw::uniform(2.0).unwrap(),
            RewardLaw::pareto(2.5, 0.5).unwrap(),
            RewardLaw::truncated_pareto(1.2, 1.0, 10.0).unwrap(),
        ] {
            let (a, b) = (law.tail(x), law.tail(x + dx));
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a);
        }
    }
}
