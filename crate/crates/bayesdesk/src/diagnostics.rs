//! Goodness-of-fit and distance measures used to validate samplers.

use std::collections::BTreeMap;

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d.max(hi).max(lo)
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic critical value of the one-sample KS statistic.
///
/// `level` is 0.01 or 0.05; other levels use the Kolmogorov series inverse
/// c(α) = sqrt(−½ log(α/2)).
pub fn ks_critical(n: usize, level: f64) -> f64 {
    let c = if (level - 0.01).abs() < 1e-12 {
        1.6276
    } else if (level - 0.05).abs() < 1e-12 {
        1.3581
    } else {
        (-0.5 * (level / 2.0).ln()).sqrt()
    };
    c / (n as f64).sqrt()
}

/// Critical value of the two-sample KS statistic.
pub fn ks_critical_two_sample(n: usize, m: usize, level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_critical(1, level) * ((n + m) / (n * m)).sqrt()
}

/// Total-variation distance between two probability tables.
pub fn tv_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut s = 0.0;
    for (k, pv) in p {
        s += (pv - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, qv) in q {
        if !p.contains_key(k) {
            s += qv.abs();
        }
    }
    0.5 * s
}

/// Empirical law of a sequence of discrete outcomes.
pub fn empirical_law<K: Ord + Clone>(xs: &[K]) -> BTreeMap<K, f64> {
    let mut m = BTreeMap::new();
    for x in xs {
        *m.entry(x.clone()).or_insert(0.0) += 1.0;
    }
    let n = xs.len() as f64;
    for v in m.values_mut() {
        *v /= n;
    }
    m
}

/// Autocorrelations at lags 0..=max_lag by direct sums; a constant series
/// has all autocorrelations equal to one.
pub fn autocorrelation(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    let m = xs.iter().sum::<f64>() / n as f64;
    let c0: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|k| {
            if c0 == 0.0 {
                return 1.0;
            }
            let ck: f64 = (0..n - k).map(|t| (xs[t] - m) * (xs[t + k] - m)).sum();
            ck / c0
        })
        .collect()
}
