//! Non-Markovian Monte Carlo: importance sampling with weight diagnostics,
//! evidence estimators, accept-reject with constant recovery, slice sampling,
//! grid HPD regions and a simulated two-sample Bayes factor.

use crate::dist::{draw, ScalarDistribution};
use crate::error::param;
use crate::numeric::{ln_gamma, log_sum_exp};
use crate::{Error, Result, RngState};

/// Points with log importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    points: Vec<f64>,
    log_weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(points: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        if points.len() != log_weights.len() {
            return Err(Error::Dimension("points and weights differ in length".into()));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return param("log weights must be finite or -inf");
        }
        Ok(Self { points, log_weights })
    }

    /// Weights log f(x) − log g(x) for draws x from g.
    pub fn from_draws<F, G>(points: Vec<f64>, log_target: F, log_proposal: G) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let lw = points.iter().map(|&x| log_target(x) - log_proposal(x)).collect();
        Self::new(points, lw)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Concatenation; sums of weights and weighted sums combine additively.
    pub fn merge(mut self, other: WeightedSample) -> Self {
        self.points.extend(other.points);
        self.log_weights.extend(other.log_weights);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsEstimate {
    pub estimate: f64,
    pub ess: f64,
    pub max_weight_share: f64,
}

/// Self-normalized estimate Σwᵢh(xᵢ)/Σwᵢ with effective sample size and largest weight share.
pub fn importance_estimate_weighted<H: Fn(f64) -> f64>(h: H, sample: &WeightedSample) -> Result<IsEstimate> {
    let top = sample.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Degenerate("all importance weights are zero".into()));
    }
    let w: Vec<f64> = sample.log_weights.iter().map(|l| (l - top).exp()).collect();
    let estimate = w.iter().zip(&sample.points).map(|(wi, x)| wi * h(*x)).sum::<f64>();
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|v| v * v).sum();
    let max = w.iter().cloned().fold(0.0, f64::max);
    Ok(IsEstimate { estimate: estimate / s, ess: s * s / s2, max_weight_share: max / s })
}

pub fn importance_estimate<H, F, G>(h: H, log_target: F, log_proposal: G, points: &[f64]) -> Result<IsEstimate>
where
    H: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let s = WeightedSample::from_draws(points.to_vec(), log_target, log_proposal)?;
    importance_estimate_weighted(h, &s)
}

/// Log of the harmonic-mean evidence estimate N / Σ 1/ℓⱼ.
pub fn log_harmonic_mean_evidence(log_likelihoods: &[f64]) -> Result<f64> {
    if log_likelihoods.is_empty() {
        return Err(Error::Empty("no log-likelihood values".into()));
    }
    let neg: Vec<f64> = log_likelihoods.iter().map(|l| -l).collect();
    Ok((log_likelihoods.len() as f64).ln() - log_sum_exp(&neg))
}

pub fn harmonic_mean_evidence(log_likelihoods: &[f64]) -> Result<f64> {
    log_harmonic_mean_evidence(log_likelihoods).map(f64::exp)
}

fn precision_post(data: &[f64], shape: f64, rate: f64) -> Result<(f64, f64)> {
    if !(shape > 0.0 && rate > 0.0) {
        return param("prior shape and rate must be positive");
    }
    let ss: f64 = data.iter().map(|x| x * x).sum();
    Ok((shape + data.len() as f64 / 2.0, rate + ss / 2.0))
}

/// Log evidence of x ~ N(0, 1/τ) with τ ~ G(shape, rate).
pub fn log_exact_precision_evidence(data: &[f64], shape: f64, rate: f64) -> Result<f64> {
    let (sp, rp) = precision_post(data, shape, rate)?;
    let n = data.len() as f64;
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI).ln() + ln_gamma(sp) - sp * rp.ln() + shape * rate.ln()
        - ln_gamma(shape))
}

pub fn exact_precision_evidence(data: &[f64], shape: f64, rate: f64) -> Result<f64> {
    log_exact_precision_evidence(data, shape, rate).map(f64::exp)
}

/// Posterior draws of τ and their log-likelihoods in the normal-precision model.
pub fn precision_posterior_loglik(
    data: &[f64],
    shape: f64,
    rate: f64,
    draws: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let (sp, rp) = precision_post(data, shape, rate)?;
    let n = data.len() as f64;
    let ss: f64 = data.iter().map(|x| x * x).sum();
    Ok((0..draws)
        .map(|_| {
            let tau = draw::gamma(rng, sp, rp);
            -0.5 * n * (2.0 * std::f64::consts::PI).ln() + 0.5 * n * tau.ln() - 0.5 * tau * ss
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArReport {
    pub draws: Vec<f64>,
    pub trials: u64,
    pub m_tilde: f64,
}

impl ArReport {
    pub fn acceptance_rate(&self) -> f64 {
        self.draws.len() as f64 / self.trials as f64
    }
}

const AR_TOL: f64 = 1e-12;

/// Accept-reject from `proposal` with envelope m̃·g ≥ f̃.
pub fn accept_reject<F: Fn(f64) -> f64>(
    log_target: F,
    proposal: &ScalarDistribution,
    m_tilde: f64,
    count: usize,
    rng: &mut RngState,
) -> Result<ArReport> {
    if !(m_tilde > 0.0 && m_tilde.is_finite()) {
        return param("envelope constant must be positive");
    }
    let log_m = m_tilde.ln();
    let cap = 1_000_000u64 + 10_000 * count as u64;
    let mut draws = Vec::with_capacity(count);
    let mut trials = 0u64;
    while draws.len() < count {
        if trials >= cap {
            return Err(Error::Budget { rate: draws.len() as f64 / trials as f64 });
        }
        trials += 1;
        let x = proposal.sample(rng)?;
        let log_ratio = log_target(x) - proposal.log_pdf(x)? - log_m;
        if log_ratio > AR_TOL {
            return Err(Error::Bound { x });
        }
        if draw::uniform_open(rng).ln() <= log_ratio {
            draws.push(x);
        }
    }
    Ok(ArReport { draws, trials, m_tilde })
}

/// 1/(acceptance rate · m̃): the reciprocal of the target's total mass.
pub fn estimate_normalizing_constant(report: &ArReport) -> Result<f64> {
    if report.trials == 0 {
        return param("no trials recorded");
    }
    if report.draws.is_empty() {
        return Err(Error::Degenerate("no accepted draws".into()));
    }
    Ok(1.0 / (report.acceptance_rate() * report.m_tilde))
}

const SLICE_MAX_SHRINK: usize = 200;

/// One slice step: level u ~ U(0, f(x)), then a uniform point of {f ≥ u} ∩ bracket
/// found by shrinking the bracket towards x.
pub fn slice_sampler_step<F: Fn(f64) -> f64>(
    log_target: F,
    x: f64,
    rng: &mut RngState,
    bracket: (f64, f64),
) -> Result<f64> {
    let lf = log_target(x);
    if !lf.is_finite() {
        return Err(Error::Support(format!("target is zero or non-finite at {x}")));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo <= x && x <= hi && lo < hi) {
        return Err(Error::Support("bracket does not contain the current point".into()));
    }
    let level = lf + draw::uniform_open(rng).ln();
    for _ in 0..SLICE_MAX_SHRINK {
        let y = lo + (hi - lo) * draw::uniform(rng);
        if log_target(y) >= level {
            return Ok(y);
        }
        if y < x {
            lo = y;
        } else {
            hi = y;
        }
    }
    Err(Error::Support("bracket shrinkage did not reach the level set".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpdRegion {
    /// Normalized density threshold.
    pub level: f64,
    pub mass: f64,
    pub intervals: Vec<(f64, f64)>,
}

/// Smallest-level super-level set of a gridded density holding mass ≥ alpha.
/// Points tied at the threshold belong to the region.
pub fn hpd_from_grid<F: Fn(f64) -> f64>(log_target: F, grid: &[f64], alpha: f64) -> Result<HpdRegion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return param("alpha must lie in (0, 1)");
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return param("grid must be strictly ascending with at least two points");
    }
    let lf: Vec<f64> = grid.iter().map(|&x| log_target(x)).collect();
    let top = lf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Degenerate("target vanishes on the grid".into()));
    }
    let f: Vec<f64> = lf.iter().map(|l| (l - top).exp()).collect();
    let k = grid.len();
    let cell: Vec<f64> = (0..k)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < k { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right) * f[i]
        })
        .collect();
    let total: f64 = cell.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    let mut mass = 0.0;
    let mut level = 0.0;
    for (j, &i) in order.iter().enumerate() {
        mass += cell[i] / total;
        level = f[i];
        let tie_next = order.get(j + 1).is_some_and(|&n| f[n] == level);
        if mass >= alpha && !tie_next {
            break;
        }
    }
    let mut intervals = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..k {
        match (f[i] >= level, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                intervals.push((grid[s], grid[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push((grid[s], grid[k - 1]));
    }
    let norm = total.ln() + top;
    Ok(HpdRegion { level: (level.ln() + top - norm).exp(), mass, intervals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Simulated B₂₁ for the two-sample shift with ξ ~ N(0, τ²):
/// mean of [(2ξ + x̄ − ȳ)² + 2s²]^{−n+1/2} over the same expression at ξ = 0.
pub fn bayes_factor_mc_two_sample(
    xbar: f64,
    ybar: f64,
    s2_xy: f64,
    n: usize,
    tau: f64,
    n_sims: usize,
    rng: &mut RngState,
) -> Result<McEstimate> {
    if !(tau > 0.0) {
        return param("tau must be positive");
    }
    if n_sims == 0 || n == 0 {
        return param("n and n_sims must be at least 1");
    }
    if s2_xy <= 0.0 {
        return Err(Error::Degenerate("s2_xy must be positive".into()));
    }
    let d = xbar - ybar;
    let e = 0.5 - n as f64;
    let log_den = e * (d * d + 2.0 * s2_xy).ln();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n_sims {
        let xi = tau * draw::std_normal(rng);
        let r = (e * ((2.0 * xi + d).powi(2) + 2.0 * s2_xy).ln() - log_den).exp();
        s += r;
        s2 += r * r;
    }
    let m = n_sims as f64;
    let value = s / m;
    let var = (s2 / m - value * value).max(0.0);
    Ok(McEstimate { value, std_error: (var / m).sqrt() })
}
