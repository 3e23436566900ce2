//! Scalar distributions: log-densities, seeded samplers and the analytic
//! moment formulas used throughout the crate.

use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::{self as sd, ContinuousCDF};

use crate::error::param;
use crate::numeric::{ln_beta, ln_gamma, norm_cdf, norm_quantile, xlogy};
use crate::{Error, Result, RngState};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Distribution family tag. Parameter order per family is documented on the
/// matching constructor of [`ScalarDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Normal,
    Gamma,
    InverseGamma,
    Beta,
    StudentT,
    Cauchy,
    Binomial,
    Poisson,
    Dirichlet,
    Multinomial,
    TruncatedNormal,
}

/// Half-line used by the truncated normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDistribution {
    family: Family,
    params: Vec<f64>,
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        param(format!("{name} must be positive and finite, got {v}"))
    }
}

fn probability(v: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        param(format!("{name} must lie in [0, 1], got {v}"))
    }
}

fn count(v: f64, name: &str) -> Result<()> {
    if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(())
    } else {
        param(format!("{name} must be a nonnegative integer, got {v}"))
    }
}

impl ScalarDistribution {
    /// N(mean, variance).
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return param("normal mean must be finite");
        }
        positive(variance, "normal variance")?;
        Ok(Self { family: Family::Normal, params: vec![mean, variance] })
    }

    /// G(shape, rate), density ∝ x^{shape−1} e^{−rate·x}.
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive(shape, "gamma shape")?;
        positive(rate, "gamma rate")?;
        Ok(Self { family: Family::Gamma, params: vec![shape, rate] })
    }

    /// IG(shape, scale), density ∝ x^{−shape−1} e^{−scale/x}.
    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        positive(shape, "inverse-gamma shape")?;
        positive(scale, "inverse-gamma scale")?;
        Ok(Self { family: Family::InverseGamma, params: vec![shape, scale] })
    }

    /// Be(a, b).
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        positive(a, "beta a")?;
        positive(b, "beta b")?;
        Ok(Self { family: Family::Beta, params: vec![a, b] })
    }

    /// Student t with `df` degrees of freedom, location and squared scale.
    pub fn student_t(df: f64, location: f64, scale2: f64) -> Result<Self> {
        positive(df, "Student degrees of freedom")?;
        positive(scale2, "Student squared scale")?;
        if !location.is_finite() {
            return param("Student location must be finite");
        }
        Ok(Self { family: Family::StudentT, params: vec![df, location, scale2] })
    }

    /// Cauchy(location, scale).
    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        positive(scale, "Cauchy scale")?;
        Ok(Self { family: Family::Cauchy, params: vec![location, scale] })
    }

    /// B(n, p).
    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        probability(p, "binomial p")?;
        Ok(Self { family: Family::Binomial, params: vec![n as f64, p] })
    }

    /// P(rate).
    pub fn poisson(rate: f64) -> Result<Self> {
        positive(rate, "Poisson rate")?;
        Ok(Self { family: Family::Poisson, params: vec![rate] })
    }

    /// D(α₁, …, α_k).
    pub fn dirichlet(alphas: &[f64]) -> Result<Self> {
        if alphas.len() < 2 {
            return param("Dirichlet needs at least two components");
        }
        for a in alphas {
            positive(*a, "Dirichlet parameter")?;
        }
        Ok(Self { family: Family::Dirichlet, params: alphas.to_vec() })
    }

    /// M(n; p₁, …, p_k); params are `[n, p₁, …, p_k]`.
    pub fn multinomial(n: u64, probs: &[f64]) -> Result<Self> {
        if probs.len() < 2 {
            return param("multinomial needs at least two cells");
        }
        for p in probs {
            probability(*p, "multinomial probability")?;
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return param(format!("multinomial probabilities sum to {s}"));
        }
        let mut params = vec![n as f64];
        params.extend_from_slice(probs);
        Ok(Self { family: Family::Multinomial, params })
    }

    /// N(mu, 1) restricted to one half-line; params are `[mu, ±1]`.
    pub fn truncated_normal(mu: f64, side: Side) -> Result<Self> {
        if !mu.is_finite() {
            return param("truncated-normal mean must be finite");
        }
        let s = if side == Side::Positive { 1.0 } else { -1.0 };
        Ok(Self { family: Family::TruncatedNormal, params: vec![mu, s] })
    }

    /// Builds from a tag and raw parameter vector, validating both.
    pub fn from_parts(family: Family, params: &[f64]) -> Result<Self> {
        let need = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{family:?} takes {k} parameters")))
            }
        };
        match family {
            Family::Normal => need(2).and_then(|_| Self::normal(params[0], params[1])),
            Family::Gamma => need(2).and_then(|_| Self::gamma(params[0], params[1])),
            Family::InverseGamma => need(2).and_then(|_| Self::inverse_gamma(params[0], params[1])),
            Family::Beta => need(2).and_then(|_| Self::beta(params[0], params[1])),
            Family::StudentT => {
                need(3).and_then(|_| Self::student_t(params[0], params[1], params[2]))
            }
            Family::Cauchy => need(2).and_then(|_| Self::cauchy(params[0], params[1])),
            Family::Binomial => need(2).and_then(|_| {
                count(params[0], "binomial n")?;
                Self::binomial(params[0] as u64, params[1])
            }),
            Family::Poisson => need(1).and_then(|_| Self::poisson(params[0])),
            Family::Dirichlet => Self::dirichlet(params),
            Family::Multinomial => {
                if params.is_empty() {
                    return param("multinomial needs n");
                }
                count(params[0], "multinomial n")?;
                Self::multinomial(params[0] as u64, &params[1..])
            }
            Family::TruncatedNormal => need(2).and_then(|_| {
                let side = if params[1] > 0.0 { Side::Positive } else { Side::Negative };
                Self::truncated_normal(params[0], side)
            }),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Log-density (or log-pmf) at `x`; −∞ off the support.
    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        if x.is_nan() {
            return param("log_pdf at NaN");
        }
        let v = match self.family {
            Family::Normal => -0.5 * (LN_2PI + p[1].ln()) - (x - p[0]).powi(2) / (2.0 * p[1]),
            Family::Gamma => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    p[0] * p[1].ln() - ln_gamma(p[0]) + (p[0] - 1.0) * x.ln() - p[1] * x
                }
            }
            Family::InverseGamma => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    p[0] * p[1].ln() - ln_gamma(p[0]) - (p[0] + 1.0) * x.ln() - p[1] / x
                }
            }
            Family::Beta => {
                if !(0.0..=1.0).contains(&x) {
                    f64::NEG_INFINITY
                } else {
                    xlogy(p[0] - 1.0, x) + xlogy(p[1] - 1.0, 1.0 - x) - ln_beta(p[0], p[1])
                }
            }
            Family::StudentT => student_log_pdf(x, p[0], p[1], p[2]),
            Family::Cauchy => {
                let z = (x - p[0]) / p[1];
                -(std::f64::consts::PI * p[1] * (1.0 + z * z)).ln()
            }
            Family::Binomial => {
                if x < 0.0 || x.fract() != 0.0 || x > p[0] {
                    f64::NEG_INFINITY
                } else {
                    crate::numeric::ln_binom_pmf(x as u64, p[0] as u64, p[1])
                }
            }
            Family::Poisson => {
                if x < 0.0 || x.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else {
                    x * p[0].ln() - p[0] - ln_gamma(x + 1.0)
                }
            }
            Family::TruncatedNormal => {
                let (mu, s) = (p[0], p[1]);
                if x * s <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    // mass of the kept half-line is Φ(s·mu)
                    -0.5 * LN_2PI - 0.5 * (x - mu).powi(2) - norm_cdf(s * mu).ln()
                }
            }
            Family::Dirichlet | Family::Multinomial => {
                return param("vector family: use log_pdf_vec");
            }
        };
        Ok(v)
    }

    /// Log-density of the Dirichlet or log-pmf of the multinomial.
    pub fn log_pdf_vec(&self, x: &[f64]) -> Result<f64> {
        let p = &self.params;
        match self.family {
            Family::Dirichlet => {
                if x.len() != p.len() {
                    return Err(Error::Dimension("Dirichlet point length".into()));
                }
                if x.iter().any(|v| *v < 0.0) || (x.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Ok(f64::NEG_INFINITY);
                }
                let norm = ln_gamma(p.iter().sum()) - p.iter().map(|a| ln_gamma(*a)).sum::<f64>();
                Ok(norm + x.iter().zip(p).map(|(xi, a)| xlogy(a - 1.0, *xi)).sum::<f64>())
            }
            Family::Multinomial => {
                let probs = &p[1..];
                if x.len() != probs.len() {
                    return Err(Error::Dimension("multinomial count length".into()));
                }
                if x.iter().any(|v| *v < 0.0 || v.fract() != 0.0)
                    || (x.iter().sum::<f64>() - p[0]).abs() > 0.5
                {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(ln_gamma(p[0] + 1.0)
                    + x.iter()
                        .zip(probs)
                        .map(|(k, q)| xlogy(*k, *q) - ln_gamma(k + 1.0))
                        .sum::<f64>())
            }
            _ => param("scalar family: use log_pdf"),
        }
    }

    /// Cumulative distribution function for the continuous families.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        let v = match self.family {
            Family::Normal => norm_cdf((x - p[0]) / p[1].sqrt()),
            Family::Gamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(p[0], p[1] * x)
                }
            }
            Family::InverseGamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_ur(p[0], p[1] / x)
                }
            }
            Family::Beta => crate::numeric::beta_reg(p[0], p[1], x.clamp(0.0, 1.0)),
            Family::StudentT => sd::StudentsT::new(p[1], p[2].sqrt(), p[0])
                .map_err(|e| Error::Parameter(e.to_string()))?
                .cdf(x),
            Family::Cauchy => 0.5 + ((x - p[0]) / p[1]).atan() / std::f64::consts::PI,
            Family::TruncatedNormal => {
                let (mu, s) = (p[0], p[1]);
                let kept = norm_cdf(s * mu);
                if s > 0.0 {
                    if x <= 0.0 {
                        0.0
                    } else {
                        (norm_cdf(x - mu) - norm_cdf(-mu)) / kept
                    }
                } else if x >= 0.0 {
                    1.0
                } else {
                    norm_cdf(x - mu) / kept
                }
            }
            _ => return param("cdf is provided for continuous scalar families only"),
        };
        Ok(v)
    }

    /// Analytic mean, when it exists.
    pub fn mean(&self) -> Option<f64> {
        let p = &self.params;
        match self.family {
            Family::Normal => Some(p[0]),
            Family::Gamma => Some(p[0] / p[1]),
            Family::InverseGamma => (p[0] > 1.0).then(|| p[1] / (p[0] - 1.0)),
            Family::Beta => Some(p[0] / (p[0] + p[1])),
            Family::StudentT => (p[0] > 1.0).then_some(p[1]),
            Family::Cauchy => None,
            Family::Binomial => Some(p[0] * p[1]),
            Family::Poisson => Some(p[0]),
            Family::TruncatedNormal => {
                let (mu, s) = (p[0], p[1]);
                Some(mu + s * crate::numeric::norm_pdf(mu) / norm_cdf(s * mu))
            }
            Family::Dirichlet | Family::Multinomial => None,
        }
    }

    /// Analytic variance, when it exists.
    pub fn variance(&self) -> Option<f64> {
        let p = &self.params;
        match self.family {
            Family::Normal => Some(p[1]),
            Family::Gamma => Some(p[0] / (p[1] * p[1])),
            Family::InverseGamma => {
                (p[0] > 2.0).then(|| p[1] * p[1] / ((p[0] - 1.0).powi(2) * (p[0] - 2.0)))
            }
            Family::Beta => {
                let s = p[0] + p[1];
                Some(p[0] * p[1] / (s * s * (s + 1.0)))
            }
            Family::StudentT => (p[0] > 2.0).then(|| p[2] * p[0] / (p[0] - 2.0)),
            Family::Cauchy => None,
            Family::Binomial => Some(p[0] * p[1] * (1.0 - p[1])),
            Family::Poisson => Some(p[0]),
            Family::TruncatedNormal => {
                let (mu, s) = (p[0], p[1]);
                let a = -s * mu;
                let lam = crate::numeric::norm_pdf(a) / norm_cdf(-a);
                Some(1.0 + a * lam - lam * lam)
            }
            Family::Dirichlet | Family::Multinomial => None,
        }
    }

    /// One draw from a scalar family.
    pub fn sample(&self, rng: &mut RngState) -> Result<f64> {
        let p = &self.params;
        let v = match self.family {
            Family::Normal => draw::normal(rng, p[0], p[1].sqrt()),
            Family::Gamma => draw::gamma(rng, p[0], p[1]),
            Family::InverseGamma => draw::inverse_gamma(rng, p[0], p[1]),
            Family::Beta => draw::beta(rng, p[0], p[1]),
            Family::StudentT => {
                let t: f64 = rand_distr::StudentT::new(p[0]).expect("validated df").sample(rng);
                p[1] + p[2].sqrt() * t
            }
            Family::Cauchy => {
                rand_distr::Cauchy::new(p[0], p[1]).expect("validated scale").sample(rng)
            }
            Family::Binomial => draw::binomial(rng, p[0] as u64, p[1]) as f64,
            Family::Poisson => draw::poisson(rng, p[0]) as f64,
            Family::TruncatedNormal => {
                let side = if p[1] > 0.0 { Side::Positive } else { Side::Negative };
                sample_truncated_normal(p[0], side, rng)
            }
            Family::Dirichlet | Family::Multinomial => {
                return param("vector family: use sample_vec");
            }
        };
        Ok(v)
    }

    /// One draw from the Dirichlet or multinomial.
    pub fn sample_vec(&self, rng: &mut RngState) -> Result<Vec<f64>> {
        let p = &self.params;
        match self.family {
            Family::Dirichlet => Ok(draw::dirichlet(rng, p)),
            Family::Multinomial => {
                Ok(draw::multinomial(rng, p[0] as u64, &p[1..]).into_iter().map(|k| k as f64).collect())
            }
            _ => param("scalar family: use sample"),
        }
    }
}

/// Student t log-density with (df, location, squared scale).
pub fn student_log_pdf(x: f64, df: f64, loc: f64, scale2: f64) -> f64 {
    ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI * scale2).ln()
        - (df + 1.0) / 2.0 * (1.0 + (x - loc).powi(2) / (df * scale2)).ln()
}

/// Draw from N(mu, 1) restricted to the positive or negative half-line.
///
/// Inverse-CDF on the kept tail for |mu| ≤ 6; beyond that either plain
/// rejection (kept mass ≈ 1) or exponential-envelope rejection in the far tail.
pub fn sample_truncated_normal(mu: f64, side: Side, rng: &mut RngState) -> f64 {
    if side == Side::Negative {
        return -sample_truncated_normal(-mu, Side::Positive, rng);
    }
    if mu.abs() <= 6.0 {
        // x = mu + z with z > −mu; reflect so the inverse CDF works in the lower tail
        let kept = norm_cdf(mu);
        loop {
            let u: f64 = rng.random();
            let x = mu - norm_quantile(u * kept);
            if x > 0.0 && x.is_finite() {
                return x;
            }
        }
    }
    if mu > 6.0 {
        loop {
            let x = mu + draw::std_normal(rng);
            if x > 0.0 {
                return x;
            }
        }
    }
    // standard normal truncated to (a, ∞), a = −mu > 6
    let a = -mu;
    let lam = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let z = a + draw::exp1(rng) / lam;
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (z - lam).powi(2) {
            return mu + z;
        }
    }
}

/// Mean and mode of IG(a, b); the mean is `None` when a ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgMoments {
    pub mean: Option<f64>,
    pub mode: f64,
}

pub fn inverse_gamma_moments(a: f64, b: f64) -> Result<IgMoments> {
    positive(a, "shape")?;
    positive(b, "scale")?;
    Ok(IgMoments { mean: (a > 1.0).then(|| b / (a - 1.0)), mode: b / (a + 1.0) })
}

/// Fisher information of N(μ, σ²) in (μ, σ²): diag(1/σ², 1/(2σ⁴)).
pub fn fisher_info_normal(sigma2: f64) -> Result<Matrix2<f64>> {
    positive(sigma2, "sigma2")?;
    Ok(Matrix2::new(1.0 / sigma2, 0.0, 0.0, 1.0 / (2.0 * sigma2 * sigma2)))
}

/// Raw samplers shared by the rest of the crate. Parameters are assumed valid.
pub mod draw {
    use rand::Rng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    use crate::RngState;

    pub fn uniform(rng: &mut RngState) -> f64 {
        rng.random()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform_open(rng: &mut RngState) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn std_normal(rng: &mut RngState) -> f64 {
        StandardNormal.sample(rng)
    }

    pub fn normal(rng: &mut RngState, mean: f64, sd: f64) -> f64 {
        mean + sd * std_normal(rng)
    }

    pub fn exp1(rng: &mut RngState) -> f64 {
        Exp1.sample(rng)
    }

    pub fn gamma(rng: &mut RngState, shape: f64, rate: f64) -> f64 {
        rand_distr::Gamma::new(shape, 1.0 / rate).expect("gamma parameters").sample(rng)
    }

    pub fn inverse_gamma(rng: &mut RngState, shape: f64, scale: f64) -> f64 {
        1.0 / gamma(rng, shape, scale)
    }

    pub fn beta(rng: &mut RngState, a: f64, b: f64) -> f64 {
        rand_distr::Beta::new(a, b).expect("beta parameters").sample(rng)
    }

    pub fn binomial(rng: &mut RngState, n: u64, p: f64) -> u64 {
        rand_distr::Binomial::new(n, p.clamp(0.0, 1.0)).expect("binomial parameters").sample(rng)
    }

    pub fn poisson(rng: &mut RngState, rate: f64) -> u64 {
        if rate <= 0.0 {
            return 0;
        }
        let v: f64 = rand_distr::Poisson::new(rate).expect("Poisson rate").sample(rng);
        v as u64
    }

    pub fn dirichlet(rng: &mut RngState, alphas: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = alphas.iter().map(|a| gamma(rng, *a, 1.0)).collect();
        let s: f64 = g.iter().sum();
        g.into_iter().map(|v| v / s).collect()
    }

    /// Sequential conditional binomials.
    pub fn multinomial(rng: &mut RngState, n: u64, probs: &[f64]) -> Vec<u64> {
        let mut left = n;
        let mut rest = 1.0;
        let mut out = Vec::with_capacity(probs.len());
        for (i, p) in probs.iter().enumerate() {
            if i + 1 == probs.len() {
                out.push(left);
                break;
            }
            let k = if rest <= 0.0 { 0 } else { binomial(rng, left, (p / rest).min(1.0)) };
            out.push(k);
            left -= k;
            rest -= p;
        }
        out
    }

    /// Index drawn with probability proportional to exp(log_w), by Gumbel-max.
    pub fn categorical_log(rng: &mut RngState, log_w: &[f64]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, w) in log_w.iter().enumerate() {
            if *w == f64::NEG_INFINITY {
                continue;
            }
            let g = -(-uniform_open(rng).ln()).ln();
            if w + g > best.0 {
                best = (w + g, i);
            }
        }
        best.1
    }
}
