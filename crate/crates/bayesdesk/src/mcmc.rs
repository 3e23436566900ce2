//! Metropolis–Hastings kernels, model-specific Gibbs samplers and chain summaries.

use crate::diagnostics::autocorrelation;
use crate::dist::{draw, sample_truncated_normal, Family, ScalarDistribution, Side};
use crate::error::param;
use crate::linalg::{self, Matrix, Vector};
use crate::numeric::{mean, variance};
use crate::{Error, Result, RngState};

/// Sampler output: one row per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    names: Vec<String>,
    draws: Vec<f64>,
    accepted: Option<Vec<bool>>,
    scale_index: Option<Vec<usize>>,
    pub warmup: usize,
}

impl Trace {
    pub fn new(names: &[&str]) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            draws: Vec::new(),
            accepted: None,
            scale_index: None,
            warmup: 0,
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.names.len());
        self.draws.extend_from_slice(row);
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dims(&self) -> usize {
        self.names.len()
    }

    pub fn iterations(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.draws.len() / self.names.len()
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dims();
        &self.draws[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().skip(j).step_by(self.dims()).copied().collect()
    }

    /// Column `j` after the warmup rows.
    pub fn kept(&self, j: usize) -> Vec<f64> {
        self.column(j).split_off(self.warmup.min(self.iterations()))
    }

    pub(crate) fn set_accepted(&mut self, flags: Vec<bool>) {
        self.accepted = Some(flags);
    }

    pub fn accepted(&self) -> Option<&[bool]> {
        self.accepted.as_deref()
    }

    /// Scale picked at each step by a mixture-of-scales random walk.
    pub fn scale_index(&self) -> Option<&[usize]> {
        self.scale_index.as_deref()
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        self.accepted
            .as_ref()
            .map(|a| a.iter().filter(|b| **b).count() as f64 / a.len().max(1) as f64)
    }
}

/// Warmup used when the caller does not choose one: 10% of the run.
pub fn default_warmup(iters: usize) -> usize {
    iters / 10
}

/// Proposal mechanism of a scalar MH chain.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Independence(ScalarDistribution),
    /// x' = x + ε with ε from a distribution symmetric about 0.
    RandomWalk(ScalarDistribution),
    /// Normal random walk whose variance is drawn uniformly from `variances` at each step.
    RandomWalkMixture { variances: Vec<f64> },
    /// Normal random walk on log x with standard deviation `scale`.
    LogRandomWalk { scale: f64 },
    /// Normal random walk on logit x with standard deviation `scale`.
    LogitRandomWalk { scale: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Independence(_) => Ok(()),
            KernelSpec::RandomWalk(d) => {
                let p = d.params();
                let centered = match d.family() {
                    Family::Normal | Family::Cauchy => p[0] == 0.0,
                    Family::StudentT => p[1] == 0.0,
                    _ => false,
                };
                if centered {
                    Ok(())
                } else {
                    param("random-walk noise must be a normal, Cauchy or Student law centred at 0")
                }
            }
            KernelSpec::RandomWalkMixture { variances } => {
                if variances.is_empty() || variances.iter().any(|v| !(*v > 0.0)) {
                    param("mixture variances must be a nonempty set of positive values")
                } else {
                    Ok(())
                }
            }
            KernelSpec::LogRandomWalk { scale } | KernelSpec::LogitRandomWalk { scale } => {
                if *scale > 0.0 {
                    Ok(())
                } else {
                    param("random-walk scale must be positive")
                }
            }
        }
    }

    /// log q(y → x) − log q(x → y), the proposal correction in the MH ratio.
    pub fn log_proposal_correction(&self, x: f64, y: f64) -> f64 {
        match self {
            KernelSpec::Independence(g) => g.log_pdf(x).unwrap_or(f64::NEG_INFINITY) - g.log_pdf(y).unwrap_or(f64::NEG_INFINITY),
            KernelSpec::RandomWalk(_) | KernelSpec::RandomWalkMixture { .. } => 0.0,
            // Jacobian of x = e^u
            KernelSpec::LogRandomWalk { .. } => y.ln() - x.ln(),
            // Jacobian of x = 1/(1 + e^{-u})
            KernelSpec::LogitRandomWalk { .. } => (y * (1.0 - y)).ln() - (x * (1.0 - x)).ln(),
        }
    }

    fn propose(&self, x: f64, rng: &mut RngState) -> Result<(f64, Option<usize>)> {
        Ok(match self {
            KernelSpec::Independence(g) => (g.sample(rng)?, None),
            KernelSpec::RandomWalk(e) => (x + e.sample(rng)?, None),
            KernelSpec::RandomWalkMixture { variances } => {
                let k = (draw::uniform(rng) * variances.len() as f64) as usize;
                let k = k.min(variances.len() - 1);
                (draw::normal(rng, x, variances[k].sqrt()), Some(k))
            }
            KernelSpec::LogRandomWalk { scale } => ((x.ln() + scale * draw::std_normal(rng)).exp(), None),
            KernelSpec::LogitRandomWalk { scale } => {
                let u = (x / (1.0 - x)).ln() + scale * draw::std_normal(rng);
                (1.0 / (1.0 + (-u).exp()), None)
            }
        })
    }
}

/// Log MH acceptance ratio for moving from x to y.
pub fn mh_log_ratio<F: Fn(f64) -> f64>(log_target: &F, kernel: &KernelSpec, x: f64, y: f64) -> f64 {
    let ly = log_target(y);
    if ly == f64::NEG_INFINITY || ly.is_nan() {
        return f64::NEG_INFINITY;
    }
    ly - log_target(x) + kernel.log_proposal_correction(x, y)
}

/// Scalar Metropolis–Hastings chain; the current log-target is cached.
pub fn mh_chain<F: Fn(f64) -> f64>(
    log_target: F,
    kernel: &KernelSpec,
    x0: f64,
    iters: usize,
    rng: &mut RngState,
) -> Result<Trace> {
    kernel.validate()?;
    let mut lx = log_target(x0);
    if !lx.is_finite() {
        return Err(Error::Support(format!("target is zero or non-finite at the initial point {x0}")));
    }
    let mut x = x0;
    let mut trace = Trace::new(&["x"]);
    trace.draws.reserve(iters);
    let mut accepted = Vec::with_capacity(iters);
    let mut scales = Vec::new();
    for _ in 0..iters {
        let (y, k) = kernel.propose(x, rng)?;
        if let Some(k) = k {
            scales.push(k);
        }
        let ly = log_target(y);
        let ok = if ly.is_finite() {
            let r = ly - lx + kernel.log_proposal_correction(x, y);
            r >= 0.0 || draw::uniform_open(rng).ln() < r
        } else {
            false
        };
        if ok {
            x = y;
            lx = ly;
        }
        accepted.push(ok);
        trace.push(&[x]);
    }
    trace.accepted = Some(accepted);
    if !scales.is_empty() {
        trace.scale_index = Some(scales);
    }
    trace.warmup = default_warmup(iters);
    Ok(trace)
}

/// Log-posterior of a location θ under Cauchy(θ, 1) observations and a N(0, prior_variance) prior.
pub fn cauchy_location_log_posterior(theta: f64, data: &[f64], prior_variance: f64) -> f64 {
    -theta * theta / (2.0 * prior_variance) - data.iter().map(|x| (1.0 + (x - theta).powi(2)).ln()).sum::<f64>()
}

/// Gibbs sampler for x ~ N(θ, σ²) with θ ~ N(θ₀, τ²) and σ² ~ IG(a, b). Columns: theta, sigma2.
pub fn gibbs_normal_model(
    data: &[f64],
    theta_prior: (f64, f64),
    sigma_prior: (f64, f64),
    iters: usize,
    rng: &mut RngState,
) -> Result<Trace> {
    if data.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let (theta0, tau2) = theta_prior;
    let (a, b) = sigma_prior;
    if !(tau2 > 0.0 && a > 0.0 && b > 0.0) {
        return param("tau2, a and b must be positive");
    }
    let n = data.len() as f64;
    let xbar = mean(data);
    let mut s2 = if data.len() > 1 { variance(data).max(1e-12) } else { 1.0 };
    let mut trace = Trace::new(&["theta", "sigma2"]);
    for _ in 0..iters {
        let v = s2 * tau2 / (s2 + n * tau2);
        let m = (s2 * theta0 + n * tau2 * xbar) / (s2 + n * tau2);
        let theta = draw::normal(rng, m, v.sqrt());
        let ss: f64 = data.iter().map(|x| (x - theta).powi(2)).sum();
        s2 = draw::inverse_gamma(rng, n / 2.0 + a, 0.5 * ss + b);
        trace.push(&[theta, s2]);
    }
    trace.warmup = default_warmup(iters);
    Ok(trace)
}

/// Gibbs sampler for η | θ ~ B(n, θ), θ | η ~ Be(a + η, b + n − η). Columns: theta, eta.
pub fn gibbs_beta_binomial(n: u64, a: f64, b: f64, iters: usize, rng: &mut RngState) -> Result<Trace> {
    if n == 0 || !(a > 0.0 && b > 0.0) {
        return param("n must be positive and a, b > 0");
    }
    let mut theta = a / (a + b);
    let mut trace = Trace::new(&["theta", "eta"]);
    for _ in 0..iters {
        let eta = draw::binomial(rng, n, theta);
        theta = draw::beta(rng, a + eta as f64, b + (n - eta) as f64);
        trace.push(&[theta, eta as f64]);
    }
    trace.warmup = default_warmup(iters);
    Ok(trace)
}

/// Fixed design pieces reused by every probit iteration.
#[derive(Debug, Clone)]
pub struct ProbitDesign {
    x: Matrix,
    y: Vec<bool>,
    chol_inv: Matrix,
    xtx: Matrix,
    /// All responses equal: the flat-prior posterior may be improper.
    pub degenerate: bool,
}

impl ProbitDesign {
    pub fn new(y: &[bool], x: &Matrix) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::Dimension(format!("{} responses for {} rows", y.len(), x.nrows())));
        }
        if y.is_empty() {
            return Err(Error::Empty("no observations".into()));
        }
        let xtx = linalg::gram_full_rank(x)?;
        let cov = linalg::spd_inverse(&xtx)?;
        let chol_inv = linalg::cholesky(&cov)?.l();
        let degenerate = y.iter().all(|v| *v) || y.iter().all(|v| !*v);
        Ok(Self { x: x.clone(), y: y.to_vec(), chol_inv, xtx, degenerate })
    }

    /// Latent z: N(xᵢ'β, 1) truncated to z > 0 when yᵢ = 1 and z < 0 otherwise.
    pub fn draw_latent(&self, beta: &Vector, rng: &mut RngState) -> Vector {
        let eta = &self.x * beta;
        Vector::from_iterator(
            self.y.len(),
            self.y.iter().zip(eta.iter()).map(|(yi, m)| {
                let side = if *yi { Side::Positive } else { Side::Negative };
                sample_truncated_normal(*m, side, rng)
            }),
        )
    }

    /// (X'X)⁻¹X'z.
    pub fn conditional_mean(&self, z: &Vector) -> Result<Vector> {
        linalg::solve(&self.xtx, &(self.x.transpose() * z))
    }

    /// β | z ~ N((X'X)⁻¹X'z, (X'X)⁻¹).
    pub fn draw_beta(&self, z: &Vector, rng: &mut RngState) -> Result<Vector> {
        let m = self.conditional_mean(z)?;
        let e = Vector::from_fn(m.len(), |_, _| draw::std_normal(rng));
        Ok(m + &self.chol_inv * e)
    }
}

#[derive(Debug, Clone)]
pub struct ProbitRun {
    pub trace: Trace,
    pub degenerate: bool,
}

/// Latent-variable Gibbs sampler for probit regression under a flat prior on β.
pub fn gibbs_probit(y: &[bool], x: &Matrix, iters: usize, rng: &mut RngState) -> Result<ProbitRun> {
    let design = ProbitDesign::new(y, x)?;
    let p = x.ncols();
    let names: Vec<String> = (0..p).map(|j| format!("beta{j}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut trace = Trace::new(&refs);
    let mut beta = Vector::zeros(p);
    for _ in 0..iters {
        let z = design.draw_latent(&beta, rng);
        beta = design.draw_beta(&z, rng)?;
        trace.push(beta.as_slice());
    }
    trace.warmup = default_warmup(iters);
    Ok(ProbitRun { trace, degenerate: design.degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Per-dimension autocorrelations, lag 0 first.
    pub acf: Vec<Vec<f64>>,
    pub acceptance_rate: Option<f64>,
}

/// Post-warmup moments and autocorrelations up to lag min(1000, N/10).
pub fn chain_summary(trace: &Trace, warmup: usize) -> Result<ChainSummary> {
    if warmup >= trace.iterations() {
        return param("warmup must be smaller than the number of iterations");
    }
    let kept = trace.iterations() - warmup;
    let max_lag = (kept / 10).min(1000);
    let mut s = ChainSummary { means: vec![], sds: vec![], acf: vec![], acceptance_rate: None };
    for j in 0..trace.dims() {
        let col = trace.column(j).split_off(warmup);
        s.means.push(mean(&col));
        s.sds.push(if col.len() > 1 { variance(&col).sqrt() } else { 0.0 });
        s.acf.push(autocorrelation(&col, max_lag));
    }
    s.acceptance_rate = trace.accepted().map(|a| {
        let a = &a[warmup..];
        a.iter().filter(|b| **b).count() as f64 / a.len() as f64
    });
    Ok(s)
}
