//! One-dimensional quadrature.

/// Composite trapezoid rule on tabulated values.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// ∫_{-∞}^{∞} f via the substitution x = t/(1−t²) on (−1, 1).
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    let g = |t: f64| {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - t * t;
        let x = t / d;
        let jac = (1.0 + t * t) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // split at zero so that symmetric peaks are not missed by the first probe
    adaptive_simpson(&g, -1.0, 0.0, tol / 2.0) + adaptive_simpson(&g, 0.0, 1.0, tol / 2.0)
}

/// ∫_0^∞ f via x = t/(1−t) on (0, 1).
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 || t <= 0.0 {
            return 0.0;
        }
        let d = 1.0 - t;
        let v = f(t / d) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive_simpson(&g, 0.0, 0.5, tol / 2.0) + adaptive_simpson(&g, 0.5, 1.0, tol / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        assert!((simpson(|x| x * x * x, 0.0, 2.0, 4) - 4.0).abs() < 1e-12);
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_integral() {
        let f = |x: f64| (-0.5 * x * x).exp();
        let v = integrate_real_line(&f, 1e-10);
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-8);
        let h = integrate_half_line(&|x: f64| (-x).exp(), 1e-10);
        assert!((h - 1.0).abs() < 1e-8);
    }
}
