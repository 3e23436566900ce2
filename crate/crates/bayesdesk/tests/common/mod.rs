#![allow(dead_code)]

//! Independent reference computations shared by the integration tests.

pub fn trapz_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

pub fn simpson_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Gauss–Legendre-free tail-robust integral over (0, ∞) via x = e^t.
pub fn integrate_positive<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    simpson_fn(|t: f64| f(t.exp()) * t.exp(), lo.ln(), hi.ln(), n)
}

pub fn ks_stat<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let c = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - c).max(c - i as f64 / n);
    }
    d
}

pub fn ks_crit_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn ks_crit_5pct(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

pub fn ks_two(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<(f64, u8)> = a.iter().map(|x| (*x, 0)).chain(b.iter().map(|x| (*x, 1))).collect();
    all.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ca, mut cb, mut d) = (0.0, 0.0, 0.0f64);
    let mut i = 0;
    while i < all.len() {
        let v = all[i].0;
        while i < all.len() && all[i].0 == v {
            if all[i].1 == 0 {
                ca += 1.0;
            } else {
                cb += 1.0;
            }
            i += 1;
        }
        d = d.max((ca / na - cb / nb).abs());
    }
    d
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn se(xs: &[f64]) -> f64 {
    (var(xs) / xs.len() as f64).sqrt()
}

/// Lanczos log-gamma (g = 7, n = 9), independent of the library's special functions.
pub fn lgamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes erfcc, relative error < 1.2e-7).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Regularised incomplete beta by composite Simpson on the density (for a, b ≥ 1).
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    let lb = lgamma(a) + lgamma(b) - lgamma(a + b);
    let f = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            if (t <= 0.0 && a == 1.0) || (t >= 1.0 && b == 1.0) {
                return (-lb).exp();
            }
            return 0.0;
        }
        ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - lb).exp()
    };
    simpson_fn(f, 0.0, x.clamp(0.0, 1.0), 2000)
}

/// Tabulated Beta CDF (cumulative trapezoid on a fine grid, linear interpolation).
pub fn beta_cdf_fn(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let n = 200_000usize;
    let lb = lgamma(a) + lgamma(b) - lgamma(a + b);
    let dens = |t: f64| -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - lb).exp()
    };
    let mut cum = vec![0.0; n + 1];
    let h = 1.0 / n as f64;
    for i in 1..=n {
        // Simpson on each cell for accuracy near the boundaries
        let (l, r) = ((i - 1) as f64 * h, i as f64 * h);
        cum[i] = cum[i - 1] + h / 6.0 * (dens(l) + 4.0 * dens(0.5 * (l + r)) + dens(r));
    }
    let total = cum[n];
    move |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let pos = x * n as f64;
        let i = (pos.floor() as usize).min(n - 1);
        let w = pos - i as f64;
        (cum[i] * (1.0 - w) + cum[i + 1] * w) / total
    }
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
pub fn batch_se(xs: &[f64], batches: usize) -> f64 {
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * len..(b + 1) * len])).collect();
    (var(&means) / batches as f64).sqrt()
}

pub fn thin(xs: &[f64], every: usize) -> Vec<f64> {
    xs.iter().step_by(every).copied().collect()
}
