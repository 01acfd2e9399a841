//! Summary statistics, binomial intervals and Kolmogorov–Smirnov distances.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// One-sided 99% normal quantile.
pub const Z99_ONE_SIDED: f64 = 2.326_347_874_040_840_8;

/// Streaming mean and variance (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        Self {
            count: self.count + other.count,
            mean: self.mean + d * other.count as f64 / n,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n,
        }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Variance of a frequency estimate with the Agresti–Coull adjustment, which
/// stays positive when `k` is 0 or `n`.
pub fn agresti_coull_variance(k: u64, n: u64, z: f64) -> f64 {
    let n_adj = n as f64 + z * z;
    let p_adj = (k as f64 + 0.5 * z * z) / n_adj;
    p_adj * (1.0 - p_adj) / n_adj
}

/// `sup |F_n - F|` for a sample and a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// As [`ks_one_sample`] when the CDF is already tabulated at the sorted
/// sample points.
pub fn ks_sorted(sorted: &[f64], cdf_values: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    cdf_values.iter().enumerate().fold(0.0f64, |d, (i, &f)| d.max(f - i as f64 / n).max((i + 1) as f64 / n - f))
}

/// `sup |F_n - G_m|` between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..101).map(|i| (i as f64).sin()).collect();
        let whole = Moments::from_slice(&xs);
        let merged = Moments::from_slice(&xs[..40]).merge(Moments::from_slice(&xs[40..]));
        assert_relative_eq!(whole.mean, merged.mean, max_relative = 1e-12);
        assert_relative_eq!(whole.variance(), merged.variance(), max_relative = 1e-12);
    }

    #[test]
    fn wilson_reference_values() {
        let (lo, hi) = wilson(0, 100, Z95);
        assert!(lo.abs() < 1e-15);
        assert_relative_eq!(hi, 0.036_993_498_2, max_relative = 1e-6);
        let (lo, hi) = wilson(50, 100, Z95);
        assert_relative_eq!(lo, 0.403_831_530_4, max_relative = 1e-6);
        assert_relative_eq!(hi, 0.596_168_469_6, max_relative = 1e-6);
    }

    #[test]
    fn ks_distances() {
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert_relative_eq!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)), 0.05, max_relative = 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 10.0).collect();
        assert_eq!(ks_two_sample(&xs, &shifted), 1.0);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, -1.0, -3.0];
        assert_relative_eq!(ols_slope(&x, &y), -2.0, max_relative = 1e-14);
    }
}
