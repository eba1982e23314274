//! Small statistics toolkit for Monte Carlo checks: streaming moments,
//! estimates with confidence intervals, KS and chi-square tests, Kendall's tau.

use serde::Serialize;

use crate::specfun;

/// Replication mean with its standard error and 95% interval.
///
/// `std_err` and `ci95` are `None` when fewer than two replications were kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub std_err: Option<f64>,
    pub reps: usize,
    pub ci95: Option<(f64, f64)>,
    pub excluded_fraction: f64,
}

impl EstimateWithCI {
    pub fn from_parts(mean: f64, std_err: Option<f64>, reps: usize, excluded_fraction: f64) -> Self {
        let ci95 = std_err.map(|se| (mean - 1.96 * se, mean + 1.96 * se));
        EstimateWithCI { mean, std_err, reps, ci95, excluded_fraction }
    }

    pub fn from_samples(values: &[f64], excluded: usize) -> Self {
        let mut acc = MeanVar::default();
        values.iter().for_each(|&v| acc.push(v));
        acc.estimate(excluded)
    }

    /// True when `value` lies inside the 95% interval.
    pub fn covers(&self, value: f64) -> bool {
        matches!(self.ci95, Some((lo, hi)) if lo <= value && value <= hi)
    }

    /// True when `|mean - value| <= k · std_err`.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        matches!(self.std_err, Some(se) if (self.mean - value).abs() <= k * se)
    }

    /// Standardized deviation `(mean - value) / std_err`.
    pub fn z_score(&self, value: f64) -> Option<f64> {
        self.std_err.filter(|se| *se > 0.0).map(|se| (self.mean - value) / se)
    }
}

/// Welford accumulator with a parallel-merge rule.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    count: usize,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.m2 / (self.count - 1) as f64)
    }

    pub fn std_err(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.count as f64).sqrt())
    }

    pub fn estimate(&self, excluded: usize) -> EstimateWithCI {
        let total = self.count + excluded;
        let excluded_fraction = if total == 0 { 0.0 } else { excluded as f64 / total as f64 };
        EstimateWithCI::from_parts(self.mean, self.std_err(), self.count, excluded_fraction)
    }
}

/// Ratio `Σx / Σy` of paired samples with a delta-method standard error.
pub fn ratio_estimate(num: &[f64], den: &[f64], excluded: usize) -> Option<EstimateWithCI> {
    let k = num.len();
    if k != den.len() || k == 0 {
        return None;
    }
    let kf = k as f64;
    let mx = num.iter().sum::<f64>() / kf;
    let my = den.iter().sum::<f64>() / kf;
    if my == 0.0 {
        return None;
    }
    let ratio = mx / my;
    let std_err = (k > 1).then(|| {
        let resid: f64 = num.iter().zip(den).map(|(x, y)| (x - ratio * y).powi(2)).sum();
        (resid / (kf - 1.0) / kf).sqrt() / my.abs()
    });
    let total = k + excluded;
    Some(EstimateWithCI::from_parts(ratio, std_err, k, excluded as f64 / total as f64))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    // erfc(|x|/√2) = Γ_u(1/2, x²/2)
    let tail = 0.5 * specfun::reg_gamma_upper(0.5, 0.5 * x * x).unwrap_or(0.0);
    if x < 0.0 { tail } else { 1.0 - tail }
}

/// Kolmogorov–Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(((i + 1) as f64 / n - f).max(f - i as f64 / n))
    })
}

/// Asymptotic p-value of the one-sample KS statistic (with the usual
/// small-sample correction of the argument).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> (f64, f64) {
    let d = ks_statistic(samples, cdf);
    (d, ks_pvalue(d, samples.len()))
}

/// Pearson chi-square statistic and p-value with `observed.len() - 1 - fitted` degrees of freedom.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> (f64, f64) {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (observed.len() - 1 - fitted) as f64;
    let p = specfun::reg_gamma_upper(0.5 * df, 0.5 * stat).unwrap_or(if stat > 0.0 { 0.0 } else { 1.0 });
    (stat, p)
}

/// Kendall's tau-a between two equally long sequences.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((x[j] - x[i]) * (y[j] - y[i])).signum();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

/// Empirical quantile by linear interpolation on sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
