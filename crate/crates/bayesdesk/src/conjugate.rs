//! Closed-form Bayesian updating: the conjugate table, normal–inverse-gamma
//! algebra, linear-regression posteriors and closed-form Bayes factors.
//!
//! The normal–inverse-gamma prior is μ | σ² ~ N(ξ, σ²/λ_μ), σ² ~ IG(λ_σ, α).
//! Its posterior is reported in the bookkeeping form
//! π(μ, σ² | D) ∝ (σ²)^{−λ_σ(D)} exp{−[λ_μ(D)(μ − ξ(D))² + α(D)]/2σ²},
//! with λ_σ(D) = λ_σ + 3/2 + n/2, so that σ² | D ~ IG(λ_σ(D) − 3/2, α(D)/2).

use crate::dist::{draw, Family, ScalarDistribution};
use crate::error::param;
use crate::linalg::{self, Matrix, Vector};
use crate::numeric::{ln_beta, ln_gamma};
use crate::{Error, Result, RngState};

/// Sampling model paired with a conjugate prior.
#[derive(Debug, Clone, PartialEq)]
pub enum Likelihood {
    /// x ~ N(θ, variance), prior θ ~ N(μ, τ²).
    NormalMean { variance: f64 },
    /// x ~ P(θ), prior θ ~ G(α, β).
    Poisson,
    /// x ~ G(shape, θ) with known shape, prior θ ~ G(α, β).
    Gamma { shape: f64 },
    /// x ~ B(n, θ), prior θ ~ Be(α, β).
    Binomial { n: u64 },
    /// x failures before the `successes`-th success, prior θ ~ Be(α, β).
    NegBinomial { successes: u64 },
    /// counts ~ M(n; θ), prior θ ~ D(α).
    Multinomial,
    /// x ~ N(mean, 1/θ), prior θ ~ G(α, β).
    NormalPrecision { mean: f64 },
}

/// One observation.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Scalar(f64),
    Counts(Vec<u64>),
}

fn scalar(d: &Datum) -> Result<f64> {
    match d {
        Datum::Scalar(x) => Ok(*x),
        Datum::Counts(_) => param("expected a scalar observation"),
    }
}

fn nonneg_int(x: f64) -> Result<f64> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x)
    } else {
        param(format!("expected a nonnegative integer observation, got {x}"))
    }
}

/// Posterior after one observation; the family is preserved.
pub fn conjugate_update(
    lik: &Likelihood,
    prior: &ScalarDistribution,
    datum: &Datum,
) -> Result<ScalarDistribution> {
    let p = prior.params();
    match (lik, prior.family()) {
        (Likelihood::NormalMean { variance }, Family::Normal) => {
            let x = scalar(datum)?;
            let (mu, tau2, s2) = (p[0], p[1], *variance);
            if s2 <= 0.0 {
                return param("observation variance must be positive");
            }
            ScalarDistribution::normal((tau2 * x + s2 * mu) / (s2 + tau2), s2 * tau2 / (s2 + tau2))
        }
        (Likelihood::Poisson, Family::Gamma) => {
            let x = nonneg_int(scalar(datum)?)?;
            ScalarDistribution::gamma(p[0] + x, p[1] + 1.0)
        }
        (Likelihood::Gamma { shape }, Family::Gamma) => {
            let x = scalar(datum)?;
            if x <= 0.0 {
                return param("gamma observation must be positive");
            }
            ScalarDistribution::gamma(p[0] + shape, p[1] + x)
        }
        (Likelihood::Binomial { n }, Family::Beta) => {
            let x = nonneg_int(scalar(datum)?)?;
            if x > *n as f64 {
                return param("binomial count exceeds n");
            }
            ScalarDistribution::beta(p[0] + x, p[1] + *n as f64 - x)
        }
        (Likelihood::NegBinomial { successes }, Family::Beta) => {
            let x = nonneg_int(scalar(datum)?)?;
            ScalarDistribution::beta(p[0] + *successes as f64, p[1] + x)
        }
        (Likelihood::Multinomial, Family::Dirichlet) => match datum {
            Datum::Counts(c) if c.len() == p.len() => {
                let a: Vec<f64> = p.iter().zip(c).map(|(a, k)| a + *k as f64).collect();
                ScalarDistribution::dirichlet(&a)
            }
            Datum::Counts(_) => Err(Error::Dimension("count vector length".into())),
            Datum::Scalar(_) => param("multinomial observation must be a count vector"),
        },
        (Likelihood::NormalPrecision { mean }, Family::Gamma) => {
            let x = scalar(datum)?;
            ScalarDistribution::gamma(p[0] + 0.5, p[1] + 0.5 * (mean - x).powi(2))
        }
        (l, f) => Err(Error::Pairing(format!("{l:?} with a {f:?} prior"))),
    }
}

/// Posterior after a whole sample, from the batch form of each table row.
pub fn conjugate_update_batch(
    lik: &Likelihood,
    prior: &ScalarDistribution,
    data: &[Datum],
) -> Result<ScalarDistribution> {
    if data.is_empty() {
        return Ok(prior.clone());
    }
    let p = prior.params();
    let n = data.len() as f64;
    let xs = || data.iter().map(scalar).collect::<Result<Vec<f64>>>();
    match (lik, prior.family()) {
        (Likelihood::NormalMean { variance }, Family::Normal) => {
            let xs = xs()?;
            let s: f64 = xs.iter().sum();
            let prec = 1.0 / p[1] + n / variance;
            ScalarDistribution::normal((p[0] / p[1] + s / variance) / prec, 1.0 / prec)
        }
        (Likelihood::Poisson, Family::Gamma) => {
            let s: f64 = xs()?.into_iter().map(nonneg_int).sum::<Result<f64>>()?;
            ScalarDistribution::gamma(p[0] + s, p[1] + n)
        }
        (Likelihood::Gamma { shape }, Family::Gamma) => {
            let s: f64 = xs()?.iter().sum();
            ScalarDistribution::gamma(p[0] + n * shape, p[1] + s)
        }
        (Likelihood::Binomial { n: trials }, Family::Beta) => {
            let s: f64 = xs()?.into_iter().map(nonneg_int).sum::<Result<f64>>()?;
            ScalarDistribution::beta(p[0] + s, p[1] + n * *trials as f64 - s)
        }
        (Likelihood::NegBinomial { successes }, Family::Beta) => {
            let s: f64 = xs()?.into_iter().map(nonneg_int).sum::<Result<f64>>()?;
            ScalarDistribution::beta(p[0] + n * *successes as f64, p[1] + s)
        }
        (Likelihood::Multinomial, Family::Dirichlet) => {
            let mut a = p.to_vec();
            for d in data {
                match d {
                    Datum::Counts(c) if c.len() == a.len() => {
                        a.iter_mut().zip(c).for_each(|(ai, k)| *ai += *k as f64)
                    }
                    _ => return Err(Error::Dimension("count vector length".into())),
                }
            }
            ScalarDistribution::dirichlet(&a)
        }
        (Likelihood::NormalPrecision { mean }, Family::Gamma) => {
            let ss: f64 = xs()?.iter().map(|x| (x - mean).powi(2)).sum();
            ScalarDistribution::gamma(p[0] + 0.5 * n, p[1] + 0.5 * ss)
        }
        (l, f) => Err(Error::Pairing(format!("{l:?} with a {f:?} prior"))),
    }
}

/// Normal–inverse-gamma hyperparameters: μ | σ² ~ N(ξ, σ²/λ_μ), σ² ~ IG(λ_σ, α).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigParams {
    pub xi: f64,
    pub lambda_mu: f64,
    pub lambda_sigma: f64,
    pub alpha: f64,
}

impl NigParams {
    pub fn new(xi: f64, lambda_mu: f64, lambda_sigma: f64, alpha: f64) -> Result<Self> {
        for (v, n) in [(lambda_mu, "lambda_mu"), (lambda_sigma, "lambda_sigma"), (alpha, "alpha")] {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{n} must be positive"));
            }
        }
        if !xi.is_finite() {
            return param("xi must be finite");
        }
        Ok(Self { xi, lambda_mu, lambda_sigma, alpha })
    }

    /// Marginal of μ: T(2λ_σ, ξ, α/(λ_μ λ_σ)).
    pub fn mu_marginal(&self) -> ScalarDistribution {
        ScalarDistribution::student_t(
            2.0 * self.lambda_sigma,
            self.xi,
            self.alpha / (self.lambda_mu * self.lambda_sigma),
        )
        .expect("valid NIG parameters")
    }

    /// Marginal of σ²: IG(λ_σ, α).
    pub fn sigma2_marginal(&self) -> ScalarDistribution {
        ScalarDistribution::inverse_gamma(self.lambda_sigma, self.alpha).expect("valid NIG parameters")
    }

    /// Joint log-density of (μ, σ²).
    pub fn log_density(&self, mu: f64, sigma2: f64) -> f64 {
        let cond = ScalarDistribution::normal(self.xi, sigma2 / self.lambda_mu);
        match cond {
            Ok(c) => c.log_pdf(mu).unwrap() + self.sigma2_marginal().log_pdf(sigma2).unwrap(),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Sample size, mean and within-sample sum of squares Σ(xᵢ − x̄)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    pub n: usize,
    pub mean: f64,
    pub ss: f64,
}

impl SufficientStats {
    pub fn from_data(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("no observations".into()));
        }
        let n = data.len();
        let mean = data.iter().sum::<f64>() / n as f64;
        let ss = data.iter().map(|x| (x - mean).powi(2)).sum();
        Ok(Self { n, mean, ss })
    }
}

/// Posterior hyperparameters in the bookkeeping form described in the module docs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigPosterior {
    pub lambda_sigma: f64,
    pub lambda_mu: f64,
    pub xi: f64,
    pub alpha: f64,
}

impl NigPosterior {
    /// σ² | D ~ IG(λ_σ(D) − 3/2, α(D)/2).
    pub fn sigma2_marginal(&self) -> ScalarDistribution {
        ScalarDistribution::inverse_gamma(self.lambda_sigma - 1.5, self.alpha / 2.0)
            .expect("valid posterior")
    }

    /// μ | σ², D ~ N(ξ(D), σ²/λ_μ(D)).
    pub fn mu_conditional(&self, sigma2: f64) -> Result<ScalarDistribution> {
        ScalarDistribution::normal(self.xi, sigma2 / self.lambda_mu)
    }

    /// The same posterior written as a prior in [`NigParams`] form.
    pub fn as_prior(&self) -> NigParams {
        NigParams {
            xi: self.xi,
            lambda_mu: self.lambda_mu,
            lambda_sigma: self.lambda_sigma - 1.5,
            alpha: self.alpha / 2.0,
        }
    }
}

pub fn nig_posterior(prior: &NigParams, data: &[f64]) -> Result<NigPosterior> {
    nig_posterior_from_stats(prior, &SufficientStats::from_data(data)?)
}

pub fn nig_posterior_from_stats(prior: &NigParams, s: &SufficientStats) -> Result<NigPosterior> {
    if s.n == 0 {
        return Err(Error::Empty("no observations".into()));
    }
    let n = s.n as f64;
    let lm = prior.lambda_mu + n;
    Ok(NigPosterior {
        lambda_sigma: prior.lambda_sigma + 1.5 + n / 2.0,
        lambda_mu: lm,
        xi: (prior.lambda_mu * prior.xi + n * s.mean) / lm,
        alpha: 2.0 * prior.alpha + n * prior.lambda_mu / lm * (s.mean - prior.xi).powi(2) + s.ss,
    })
}

/// Log-density of the marginal prior on μ.
pub fn nig_marginal_mu_logpdf(prior: &NigParams, mu: f64) -> f64 {
    prior.mu_marginal().log_pdf(mu).expect("scalar family")
}

/// Multivariate Student distribution T_d(df, location, scale).
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateStudent {
    pub df: f64,
    pub location: Vector,
    pub scale: Matrix,
}

impl MultivariateStudent {
    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn log_pdf(&self, y: &Vector) -> Result<f64> {
        let d = self.dim();
        if y.len() != d {
            return Err(Error::Dimension(format!("point of length {} for dimension {d}", y.len())));
        }
        let chol = linalg::cholesky(&self.scale)?;
        let r = y - &self.location;
        let q = r.dot(&chol.solve(&r));
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let (nu, dd) = (self.df, d as f64);
        Ok(ln_gamma((nu + dd) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * dd * (nu * std::f64::consts::PI).ln()
            - 0.5 * log_det
            - (nu + dd) / 2.0 * (1.0 + q / nu).ln())
    }

    pub fn sample(&self, rng: &mut RngState) -> Result<Vector> {
        let chol = linalg::cholesky(&self.scale)?;
        let z = Vector::from_fn(self.dim(), |_, _| draw::std_normal(rng));
        let w = draw::gamma(rng, self.df / 2.0, self.df / 2.0);
        Ok(&self.location + chol.l() * z / w.sqrt())
    }
}

/// Conjugate regression prior β | σ² ~ N_p(β̃, σ²M⁻¹), σ² ~ IG(a, b).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConjugate {
    pub beta_tilde: Vector,
    pub m: Matrix,
    pub a: f64,
    pub b: f64,
}

impl RegressionConjugate {
    pub fn new(beta_tilde: Vector, m: Matrix, a: f64, b: f64) -> Result<Self> {
        if m.nrows() != beta_tilde.len() || !m.is_square() {
            return Err(Error::Dimension("prior precision does not match beta_tilde".into()));
        }
        linalg::check_spd(&m, "prior precision M")?;
        if !(a > 0.0 && b > 0.0) {
            return param("a and b must be positive");
        }
        Ok(Self { beta_tilde, m, a, b })
    }

    pub fn dim(&self) -> usize {
        self.beta_tilde.len()
    }
}

/// Posterior β | σ², y ~ N(mean, σ²·precision⁻¹), σ² | y ~ IG(shape, scale).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionPosterior {
    pub mean: Vector,
    pub precision: Matrix,
    pub shape: f64,
    pub scale: f64,
    pub n: usize,
}

impl RegressionPosterior {
    pub fn sigma2_marginal(&self) -> ScalarDistribution {
        ScalarDistribution::inverse_gamma(self.shape, self.scale).expect("valid posterior")
    }

    /// Marginal of β: T_p(2·shape, mean, (scale/shape)·precision⁻¹).
    pub fn beta_marginal(&self) -> Result<MultivariateStudent> {
        Ok(MultivariateStudent {
            df: 2.0 * self.shape,
            location: self.mean.clone(),
            scale: linalg::spd_inverse(&self.precision)? * (self.scale / self.shape),
        })
    }

    /// Joint draw of (β, σ²).
    pub fn sample(&self, rng: &mut RngState) -> Result<(Vector, f64)> {
        let s2 = draw::inverse_gamma(rng, self.shape, self.scale);
        let cov = linalg::spd_inverse(&self.precision)? * s2;
        let l = linalg::cholesky(&cov)?;
        let z = Vector::from_fn(self.mean.len(), |_, _| draw::std_normal(rng));
        Ok((&self.mean + l.l() * z, s2))
    }

    /// (β − mean)' Σ̂⁻¹ (β − mean) with Σ̂ the Student scale of β.
    pub fn hpd_statistic(&self, beta: &Vector) -> Result<f64> {
        let r = beta - &self.mean;
        Ok(r.dot(&(&self.precision * &r)) * self.shape / self.scale)
    }
}

fn check_design(x: &Matrix, y: &Vector, p: usize) -> Result<()> {
    if x.ncols() != p {
        return Err(Error::Dimension(format!("design has {} columns, prior {p}", x.ncols())));
    }
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("design has {} rows, y {}", x.nrows(), y.len())));
    }
    Ok(())
}

pub fn regression_posterior(
    prior: &RegressionConjugate,
    x: &Matrix,
    y: &Vector,
) -> Result<RegressionPosterior> {
    check_design(x, y, prior.dim())?;
    let xtx = linalg::gram_full_rank(x)?;
    let xty = x.transpose() * y;
    let beta_hat = linalg::solve(&xtx, &xty)?;
    let precision = &prior.m + &xtx;
    let mean = linalg::solve(&precision, &(&xtx * &beta_hat + &prior.m * &prior.beta_tilde))?;
    let resid = y - x * &beta_hat;
    let s2 = resid.dot(&resid);
    // (M⁻¹ + (X'X)⁻¹)⁻¹ = M (M + X'X)⁻¹ X'X
    let d = &prior.beta_tilde - &beta_hat;
    let w = linalg::solve(&precision, &(&xtx * &d))?;
    let quad = d.dot(&(&prior.m * w));
    Ok(RegressionPosterior {
        mean,
        precision,
        shape: x.nrows() as f64 / 2.0 + prior.a,
        scale: prior.b + 0.5 * (s2 + quad),
        n: x.nrows(),
    })
}

/// Predictive of y at new design rows: T_m(n+2a, X̃μ, (scale/shape)(I + X̃ P⁻¹ X̃')).
pub fn regression_predictive(post: &RegressionPosterior, x_new: &Matrix) -> Result<MultivariateStudent> {
    if x_new.ncols() != post.mean.len() {
        return Err(Error::Dimension("new design column count".into()));
    }
    let pinv = linalg::spd_inverse(&post.precision)?;
    let m = x_new.nrows();
    let scale = (Matrix::identity(m, m) + x_new * pinv * x_new.transpose()) * (post.scale / post.shape);
    Ok(MultivariateStudent { df: 2.0 * post.shape, location: x_new * &post.mean, scale })
}

/// Log of the marginal density of y: T_n(2a, Xβ̃, (b/a)(I + X M⁻¹ X')).
pub fn marginal_y_logpdf(prior: &RegressionConjugate, x: &Matrix, y: &Vector) -> Result<f64> {
    check_design(x, y, prior.dim())?;
    let minv = linalg::spd_inverse(&prior.m)?;
    let n = x.nrows();
    let t = MultivariateStudent {
        df: 2.0 * prior.a,
        location: x * &prior.beta_tilde,
        scale: (Matrix::identity(n, n) + x * minv * x.transpose()) * (prior.b / prior.a),
    };
    t.log_pdf(y)
}

/// det(I_n + g X(X'X)⁻¹X') computed numerically, and the closed form (g+1)^p.
pub fn gprior_det_identity(x: &Matrix, g: f64) -> Result<(f64, f64)> {
    let eig = gprior_eigenvalues(x, g)?;
    let det = eig.iter().map(|v| v.ln()).sum::<f64>().exp();
    Ok((det, (g + 1.0).powi(x.ncols() as i32)))
}

/// Eigenvalues of I_n + g X(X'X)⁻¹X', ascending.
pub fn gprior_eigenvalues(x: &Matrix, g: f64) -> Result<Vec<f64>> {
    if g < 0.0 {
        return param("g must be nonnegative");
    }
    let xtx = linalg::gram_full_rank(x)?;
    let h = x * linalg::spd_inverse(&xtx)? * x.transpose();
    let n = x.nrows();
    let mut a = Matrix::identity(n, n) + h * g;
    a = (&a + a.transpose()) * 0.5;
    Ok(linalg::sym_eigenvalues(&a))
}

/// Radius k such that {(β−μ)'Σ̂⁻¹(β−μ) ≤ k} carries posterior mass `alpha`:
/// k = p·F⁻¹_{p, n+2a}(alpha).
pub fn hpd_beta_radius(post: &RegressionPosterior, alpha: f64) -> Result<f64> {
    use statrs::distribution::{ContinuousCDF, FisherSnedecor};
    if !(alpha > 0.0 && alpha < 1.0) {
        return param("alpha must lie in (0, 1)");
    }
    let p = post.mean.len() as f64;
    let f = FisherSnedecor::new(p, 2.0 * post.shape).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(p * f.inverse_cdf(alpha))
}

/// Bayes factor of the shift test, √(1/(1+r))·exp(z²/(2(1+1/r))), r = τ²/σ².
pub fn bayes_factor_shift(z: f64, rat: f64) -> Result<f64> {
    if rat < 0.0 || rat.is_nan() {
        return param("variance ratio must be nonnegative");
    }
    if rat == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 / (1.0 + rat)).sqrt() * (z * z / (2.0 * (1.0 + 1.0 / rat))).exp())
}

/// Closed-form B₂₁ for the two-sample shift with ξ ~ N(0, σ²), flat μ and 1/σ² prior:
/// (2n+1)^{−1/2}·(K₂/K₁)^{−(n−1/2)}, K₂ = d²/(2(2n+1)) + s², K₁ = d²/2 + s².
///
/// `s2_xy` is (1/n)Σ(xᵢ−x̄)² + (1/n)Σ(yᵢ−ȳ)².
pub fn bayes_factor_two_sample_closed(xbar: f64, ybar: f64, s2_xy: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return param("n must be at least 1");
    }
    if s2_xy <= 0.0 {
        return Err(Error::Degenerate("s2_xy must be positive".into()));
    }
    let nf = n as f64;
    let d2 = (xbar - ybar).powi(2);
    let alt = d2 / (2.0 * (2.0 * nf + 1.0)) + s2_xy;
    let null = d2 / 2.0 + s2_xy;
    Ok(((alt / null).ln() * -(nf - 0.5) - 0.5 * (2.0 * nf + 1.0).ln()).exp())
}

/// 2×2 table of counts with fixed total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable2x2 {
    pub n11: u64,
    pub n12: u64,
    pub n21: u64,
    pub n22: u64,
}

impl ContingencyTable2x2 {
    pub fn new(n11: u64, n12: u64, n21: u64, n22: u64) -> Result<Self> {
        if n11 + n12 + n21 + n22 == 0 {
            return Err(Error::Empty("table total must be at least 1".into()));
        }
        Ok(Self { n11, n12, n21, n22 })
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n12 + self.n21 + self.n22
    }

    pub fn transpose(&self) -> Self {
        Self { n11: self.n11, n12: self.n21, n21: self.n12, n22: self.n22 }
    }

    fn cells(&self) -> [u64; 4] {
        [self.n11, self.n12, self.n21, self.n22]
    }
}

/// Log marginals (independence, saturated) of a 2×2 table.
///
/// Saturated model: multinomial cells with a Dirichlet(½,½,½,½) prior.
/// Independence: θᵢⱼ = αᵢβⱼ with uniform priors on the row and column margins.
pub fn contingency_log_marginals(t: &ContingencyTable2x2) -> (f64, f64) {
    let n = t.total() as f64;
    let cells = t.cells().map(|c| c as f64);
    let coef = ln_gamma(n + 1.0) - cells.iter().map(|c| ln_gamma(c + 1.0)).sum::<f64>();
    let half = ln_gamma(0.5);
    let log_m = coef + ln_gamma(2.0) - ln_gamma(n + 2.0)
        + cells.iter().map(|c| ln_gamma(c + 0.5) - half).sum::<f64>();
    let (r1, r2) = (cells[0] + cells[1], cells[2] + cells[3]);
    let (c1, c2) = (cells[0] + cells[2], cells[1] + cells[3]);
    let log_m0 = coef + ln_beta(r1 + 1.0, r2 + 1.0) + ln_beta(c1 + 1.0, c2 + 1.0);
    (log_m0, log_m)
}

/// B₀₁ = m₀/m of independence against the saturated model.
pub fn contingency_bayes_factor(t: &ContingencyTable2x2) -> f64 {
    let (l0, l) = contingency_log_marginals(t);
    (l0 - l).exp()
}
