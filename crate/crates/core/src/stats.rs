//! Small statistics toolkit: means with standard errors, quantiles,
//! batch means and Kolmogorov–Smirnov statistics.

use serde::Serialize;

/// Sample mean and standard error `sd / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, stderr: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanEstimate { mean, stderr: 0.0, n };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    MeanEstimate { mean, stderr: (var / n as f64).sqrt(), n }
}

/// Batch-means estimate for a correlated series: the series is cut into
/// `batches` contiguous blocks and the block means are treated as i.i.d.
pub fn batch_means(xs: &[f64], batches: usize) -> MeanEstimate {
    let batches = batches.max(2).min(xs.len().max(1));
    let len = xs.len() / batches;
    if len == 0 {
        return mean_stderr(xs);
    }
    let means: Vec<f64> = xs.chunks_exact(len).take(batches).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let mut est = mean_stderr(&means);
    est.mean = xs.iter().sum::<f64>() / xs.len() as f64;
    est.n = xs.len();
    est
}

/// Linear-interpolation quantile (type 7) of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample statistic `sup |F_n - F|`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted_copy(samples);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, x)| {
        let f = cdf(*x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample statistic `sup |F_n - G_m|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted_copy(a);
    let b = sorted_copy(b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic Kolmogorov coefficient `c(level) = sqrt(-ln(level/2) / 2)`.
pub fn ks_coefficient(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Critical value of the one-sample statistic at `level` for `n` samples.
pub fn ks_critical_one(n: usize, level: f64) -> f64 {
    ks_coefficient(level) / (n as f64).sqrt()
}

/// Critical value of the two-sample statistic at `level`.
pub fn ks_critical_two(n: usize, m: usize, level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(level) * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let e = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.25), 2.0);
        assert_eq!(quantile_sorted(&s, 0.1), 1.4);
    }

    #[test]
    fn ks_statistics() {
        // uniform grid against the uniform CDF: D = 1/n
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_one_sample(&xs, |x| x) - 0.005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert!((ks_coefficient(0.001) - 1.949_5).abs() < 1e-3);
        assert!((ks_critical_one(10_000, 0.05) - 0.01358).abs() < 1e-4);
    }

    #[test]
    fn batch_means_of_constant_blocks() {
        let xs: Vec<f64> = (0..100).map(|i| (i / 25) as f64).collect();
        let e = batch_means(&xs, 4);
        assert_eq!(e.mean, 1.5);
        assert!((e.stderr - mean_stderr(&[0.0, 1.0, 2.0, 3.0]).stderr).abs() < 1e-15);
    }
}
