//! Two-component normal mixtures: EM, conjugate Gibbs, exact allocation weights,
//! mean-mixture samplers in two parameterizations, an annealed sampler and
//! the likelihood surface of the half-known mixture.

use num_bigint::BigUint;

use crate::dist::draw;
use crate::error::param;
use crate::mcmc::Trace;
use crate::numeric::{ln_gamma, log_add_exp, log_sum_exp, mean, variance};
use crate::{Error, Result, RngState};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_norm(x: f64, m: f64, v: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * v.ln() - (x - m).powi(2) / (2.0 * v)
}

/// p·N(μ₁, σ₁²) + (1 − p)·N(μ₂, σ₂²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub p: f64,
    pub mu: [f64; 2],
    pub sigma2: [f64; 2],
}

impl MixtureParams {
    pub fn new(p: f64, mu: [f64; 2], sigma2: [f64; 2]) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return param("weight must lie in (0, 1)");
        }
        if !(sigma2[0] > 0.0 && sigma2[1] > 0.0) {
            return param("component variances must be positive");
        }
        if !(mu[0].is_finite() && mu[1].is_finite()) {
            return param("component means must be finite");
        }
        Ok(Self { p, mu, sigma2 })
    }

    fn log_parts(&self, x: f64) -> (f64, f64) {
        (
            self.p.ln() + ln_norm(x, self.mu[0], self.sigma2[0]),
            (1.0 - self.p).ln() + ln_norm(x, self.mu[1], self.sigma2[1]),
        )
    }

    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        data.iter()
            .map(|&x| {
                let (a, b) = self.log_parts(x);
                log_add_exp(a, b)
            })
            .sum()
    }

    /// P(z = 1 | x) = p f₁(x) / (p f₁(x) + (1 − p) f₂(x)).
    pub fn responsibility(&self, x: f64) -> f64 {
        let (a, b) = self.log_parts(x);
        1.0 / (1.0 + (b - a).exp())
    }

    pub fn sample(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let j = if draw::uniform(rng) < self.p { 0 } else { 1 };
                draw::normal(rng, self.mu[j], self.sigma2[j].sqrt())
            })
            .collect()
    }
}

/// Generating law of the EM demonstration data: 0.4 N(0, 1.1) + 0.6 N(3.5, 0.8).
pub const EM_DEMO_TRUTH: MixtureParams = MixtureParams { p: 0.4, mu: [0.0, 3.5], sigma2: [1.1, 0.8] };
pub const EM_DEMO_N: usize = 324;

/// Random EM start: p ~ U(0,1), μⱼ = x̄ + 2·ε·sd(x), σⱼ² = E·var(x) with ε normal, E exponential.
pub fn em_random_start(data: &[f64], rng: &mut RngState) -> Result<MixtureParams> {
    if data.len() < 2 {
        return Err(Error::Empty("at least two observations are needed".into()));
    }
    let (m, v) = (mean(data), variance(data));
    let p = draw::uniform_open(rng);
    let mu = [m + 2.0 * draw::std_normal(rng) * v.sqrt(), m + 2.0 * draw::std_normal(rng) * v.sqrt()];
    let sigma2 = [draw::exp1(rng) * v, draw::exp1(rng) * v];
    MixtureParams::new(p, mu, sigma2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmPath {
    pub params: Vec<MixtureParams>,
    pub log_lik: Vec<f64>,
    /// A component variance fell below the collapse threshold; iteration stopped.
    pub collapsed: bool,
}

pub const EM_COLLAPSE: f64 = 1e-12;

/// EM iterations from `start`; the path includes the start.
pub fn em_fit(data: &[f64], start: MixtureParams, steps: usize) -> Result<EmPath> {
    if steps == 0 {
        return param("steps must be at least 1");
    }
    if data.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let n = data.len() as f64;
    let mut path = EmPath { params: vec![start], log_lik: vec![start.log_likelihood(data)], collapsed: false };
    let mut cur = start;
    for _ in 0..steps {
        let r: Vec<f64> = data.iter().map(|&x| cur.responsibility(x)).collect();
        let w1: f64 = r.iter().sum();
        let w2 = n - w1;
        let m1 = r.iter().zip(data).map(|(ri, x)| ri * x).sum::<f64>() / w1;
        let m2 = r.iter().zip(data).map(|(ri, x)| (1.0 - ri) * x).sum::<f64>() / w2;
        let v1 = r.iter().zip(data).map(|(ri, x)| ri * (x - m1).powi(2)).sum::<f64>() / w1;
        let v2 = r.iter().zip(data).map(|(ri, x)| (1.0 - ri) * (x - m2).powi(2)).sum::<f64>() / w2;
        let p = w1 / n;
        if !(v1 >= EM_COLLAPSE && v2 >= EM_COLLAPSE) || !(p > 0.0 && p < 1.0) {
            path.collapsed = true;
            break;
        }
        cur = MixtureParams { p, mu: [m1, m2], sigma2: [v1, v2] };
        path.params.push(cur);
        path.log_lik.push(cur.log_likelihood(data));
    }
    Ok(path)
}

/// Conjugate hyperparameters: μⱼ | σⱼ² ~ N(ξⱼ, σⱼ²/nⱼ), σⱼ² ~ IG(νⱼ/2, sⱼ²/2), p ~ Be(α, β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureHyper {
    pub xi: [f64; 2],
    pub n_prior: [f64; 2],
    pub nu: [f64; 2],
    pub s2: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
}

impl MixtureHyper {
    pub fn new(xi: [f64; 2], n_prior: [f64; 2], nu: [f64; 2], s2: [f64; 2], alpha: f64, beta: f64) -> Result<Self> {
        let pos = n_prior.iter().chain(&nu).chain(&s2).chain([&alpha, &beta]).all(|v| *v > 0.0);
        if !pos {
            return param("mixture hyperparameters must be positive");
        }
        Ok(Self { xi, n_prior, nu, s2, alpha, beta })
    }

    /// Same hyperparameters for both components and α = β.
    pub fn symmetric(xi: f64, n_prior: f64, nu: f64, s2: f64, alpha: f64) -> Result<Self> {
        Self::new([xi, xi], [n_prior; 2], [nu; 2], [s2; 2], alpha, alpha)
    }

    pub fn swapped(&self) -> Self {
        Self {
            xi: [self.xi[1], self.xi[0]],
            n_prior: [self.n_prior[1], self.n_prior[0]],
            nu: [self.nu[1], self.nu[0]],
            s2: [self.s2[1], self.s2[0]],
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// Component labels, each 1 or 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation(Vec<u8>);

impl Allocation {
    pub fn new(z: Vec<u8>) -> Result<Self> {
        if z.iter().any(|v| *v != 1 && *v != 2) {
            return param("allocation labels must be 1 or 2");
        }
        Ok(Self(z))
    }

    pub fn labels(&self) -> &[u8] {
        &self.0
    }

    pub fn count(&self, j: u8) -> usize {
        self.0.iter().filter(|v| **v == j).count()
    }

    pub fn swapped(&self) -> Self {
        Self(self.0.iter().map(|v| 3 - v).collect())
    }
}

/// Conditional posterior quantities of one component given the allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentUpdate {
    pub ell: usize,
    pub xi: f64,
    /// ν-style shape numerator νⱼ + ℓⱼ.
    pub nu: f64,
    /// sⱼ(z) = sⱼ² + ℓⱼŝⱼ² + nⱼℓⱼ/(nⱼ+ℓⱼ)(ξⱼ − x̄ⱼ)².
    pub s: f64,
    pub n: f64,
}

pub fn component_update(data: &[f64], z: &Allocation, hyper: &MixtureHyper, j: usize) -> Result<ComponentUpdate> {
    if z.0.len() != data.len() {
        return Err(Error::Dimension("allocation length differs from data".into()));
    }
    let label = j as u8 + 1;
    let xs: Vec<f64> = data.iter().zip(&z.0).filter(|(_, l)| **l == label).map(|(x, _)| *x).collect();
    let ell = xs.len();
    let (nj, xij) = (hyper.n_prior[j], hyper.xi[j]);
    if ell == 0 {
        return Ok(ComponentUpdate { ell, xi: xij, nu: hyper.nu[j], s: hyper.s2[j], n: nj });
    }
    let l = ell as f64;
    let xbar = mean(&xs);
    let ss: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    Ok(ComponentUpdate {
        ell,
        xi: (nj * xij + l * xbar) / (nj + l),
        nu: hyper.nu[j] + l,
        s: hyper.s2[j] + ss + nj * l / (nj + l) * (xij - xbar).powi(2),
        n: nj + l,
    })
}

/// Unnormalized log ω(z):
/// log Γ(α+ℓ₁)Γ(β+ℓ₂)/Γ(α+β+n) + Σⱼ [log Γ((νⱼ+ℓⱼ)/2) − ((νⱼ+ℓⱼ)/2) log(sⱼ(z)/2) − ½ log(nⱼ+ℓⱼ)].
pub fn allocation_log_weight(data: &[f64], z: &Allocation, hyper: &MixtureHyper) -> Result<f64> {
    let n = data.len() as f64;
    let c1 = component_update(data, z, hyper, 0)?;
    let c2 = component_update(data, z, hyper, 1)?;
    let mut lw = ln_gamma(hyper.alpha + c1.ell as f64) + ln_gamma(hyper.beta + c2.ell as f64)
        - ln_gamma(hyper.alpha + hyper.beta + n);
    for c in [c1, c2] {
        lw += ln_gamma(c.nu / 2.0) - (c.nu / 2.0) * (c.s / 2.0).ln() - 0.5 * c.n.ln();
    }
    Ok(lw)
}

/// All 2ⁿ allocations with normalized posterior probabilities.
pub fn enumerate_allocations(data: &[f64], hyper: &MixtureHyper) -> Result<Vec<(Allocation, f64)>> {
    let n = data.len();
    if n > 20 {
        return Err(Error::Guard(format!("2^{n} allocations is too many to enumerate")));
    }
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let z = Allocation((0..n).map(|i| if mask >> i & 1 == 1 { 2 } else { 1 }).collect());
        let w = allocation_log_weight(data, &z, hyper)?;
        out.push((z, w));
    }
    let lws: Vec<f64> = out.iter().map(|(_, w)| *w).collect();
    let lse = log_sum_exp(&lws);
    Ok(out.into_iter().map(|(z, w)| (z, (w - lse).exp())).collect())
}

/// E[p | x] by exact summation over allocations.
pub fn posterior_mean_weight(data: &[f64], hyper: &MixtureHyper) -> Result<f64> {
    let n = data.len() as f64;
    Ok(enumerate_allocations(data, hyper)?
        .iter()
        .map(|(z, w)| w * (hyper.alpha + z.count(1) as f64) / (hyper.alpha + hyper.beta + n))
        .sum())
}

/// Conjugate Gibbs sampler. Columns: p, mu1, mu2, sigma2_1, sigma2_2.
pub fn gibbs_mixture(data: &[f64], hyper: &MixtureHyper, iters: usize, rng: &mut RngState) -> Result<Trace> {
    gibbs_mixture_with_allocations(data, hyper, iters, rng, |_| {})
}

/// As [`gibbs_mixture`], handing each sampled allocation to `visit`.
pub fn gibbs_mixture_with_allocations<V: FnMut(&Allocation)>(
    data: &[f64],
    hyper: &MixtureHyper,
    iters: usize,
    rng: &mut RngState,
    mut visit: V,
) -> Result<Trace> {
    if data.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let mut theta = MixtureParams {
        p: hyper.alpha / (hyper.alpha + hyper.beta),
        mu: hyper.xi,
        sigma2: [variance_or_one(data); 2],
    };
    if theta.mu[0] == theta.mu[1] {
        let sd = variance_or_one(data).sqrt();
        theta.mu = [mean(data) - sd, mean(data) + sd];
    }
    let mut trace = Trace::new(&["p", "mu1", "mu2", "sigma2_1", "sigma2_2"]);
    let mut z = Allocation(vec![1; data.len()]);
    for _ in 0..iters {
        for (zi, &x) in z.0.iter_mut().zip(data) {
            let (a, b) = theta.log_parts(x);
            *zi = draw::categorical_log(rng, &[a, b]) as u8 + 1;
        }
        visit(&z);
        let c = [component_update(data, &z, hyper, 0)?, component_update(data, &z, hyper, 1)?];
        let p = draw::beta(rng, hyper.alpha + c[0].ell as f64, hyper.beta + c[1].ell as f64);
        let mut mu = [0.0; 2];
        let mut s2 = [0.0; 2];
        for j in 0..2 {
            s2[j] = draw::inverse_gamma(rng, c[j].nu / 2.0, c[j].s / 2.0);
            mu[j] = draw::normal(rng, c[j].xi, (s2[j] / c[j].n).sqrt());
        }
        let p = p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        theta = MixtureParams { p, mu, sigma2: s2 };
        trace.push(&[p, mu[0], mu[1], s2[0], s2[1]]);
    }
    trace.warmup = crate::mcmc::default_warmup(iters);
    Ok(trace)
}

fn variance_or_one(data: &[f64]) -> f64 {
    if data.len() > 1 {
        variance(data).max(1e-6)
    } else {
        1.0
    }
}

/// Mean mixture p N(μ₁, 1) + (1 − p) N(μ₂, 1) with μⱼ ~ N(δ, 1/λ) independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMixture {
    pub p: f64,
    pub lambda: f64,
    pub delta: f64,
    pub start: [f64; 2],
}

impl MeanMixture {
    pub fn new(p: f64, lambda: f64, delta: f64, start: [f64; 2]) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return param("weight must lie in (0, 1)");
        }
        if !(lambda >= 0.0) {
            return param("prior precision must be nonnegative");
        }
        Ok(Self { p, lambda, delta, start })
    }

    /// Log posterior density of (μ₁, μ₂) up to a constant.
    pub fn log_posterior(&self, data: &[f64], mu: [f64; 2]) -> f64 {
        let prior = -0.5 * self.lambda * ((mu[0] - self.delta).powi(2) + (mu[1] - self.delta).powi(2));
        prior
            + data
                .iter()
                .map(|&x| {
                    log_add_exp(
                        self.p.ln() - 0.5 * (x - mu[0]).powi(2),
                        (1.0 - self.p).ln() - 0.5 * (x - mu[1]).powi(2),
                    )
                })
                .sum::<f64>()
    }

    fn allocation_log_odds(&self, x: f64, mu: [f64; 2]) -> f64 {
        (self.p.ln() - 0.5 * (x - mu[0]).powi(2)) - ((1.0 - self.p).ln() - 0.5 * (x - mu[1]).powi(2))
    }
}

/// Draws z = 1 with probability 1/(1 + e^{−odds}) using one uniform.
fn draw_label(rng: &mut RngState, log_odds: f64) -> bool {
    draw::uniform(rng) * (1.0 + (-log_odds).exp()) < 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    /// Component means (μ₁, μ₂).
    Means,
    /// Centre and half-gap: μ₁ = μ₀ − ξ, μ₂ = μ₀ + ξ.
    CentreGap,
}

/// μ₀ | ξ, x, z ~ N((Σx + (ℓ₁ − ℓ₂)ξ + 2λδ)/(n + 2λ), 1/(n + 2λ)).
pub fn centre_conditional(sum_x: f64, n: usize, ell1: usize, xi: f64, lambda: f64, delta: f64) -> (f64, f64) {
    let prec = n as f64 + 2.0 * lambda;
    let ell2 = n - ell1;
    ((sum_x + (ell1 as f64 - ell2 as f64) * xi + 2.0 * lambda * delta) / prec, 1.0 / prec)
}

/// ξ | μ₀, x, z ~ N((Σ_{z=2}(x − μ₀) − Σ_{z=1}(x − μ₀))/(n + 2λ), 1/(n + 2λ)).
pub fn gap_conditional(data: &[f64], z1: &[bool], mu0: f64, lambda: f64) -> (f64, f64) {
    let prec = data.len() as f64 + 2.0 * lambda;
    let s: f64 = data.iter().zip(z1).map(|(x, one)| if *one { -(x - mu0) } else { x - mu0 }).sum();
    (s / prec, 1.0 / prec)
}

/// Gibbs sampler on the mean mixture. Columns: mu1, mu2 in either parameterization.
pub fn gibbs_mixture_location(
    data: &[f64],
    model: &MeanMixture,
    iters: usize,
    rng: &mut RngState,
    parameterization: Parameterization,
) -> Result<Trace> {
    if data.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let n = data.len();
    let sum_x: f64 = data.iter().sum();
    let mut mu = model.start;
    let mut z1 = vec![false; n];
    let mut trace = Trace::new(&["mu1", "mu2"]);
    for _ in 0..iters {
        for (zi, &x) in z1.iter_mut().zip(data) {
            *zi = draw_label(rng, model.allocation_log_odds(x, mu));
        }
        match parameterization {
            Parameterization::Means => {
                let (mut l1, mut s1, mut s2) = (0usize, 0.0, 0.0);
                for (one, x) in z1.iter().zip(data) {
                    if *one {
                        l1 += 1;
                        s1 += x;
                    } else {
                        s2 += x;
                    }
                }
                let p1 = model.lambda + l1 as f64;
                let p2 = model.lambda + (n - l1) as f64;
                mu[0] = draw::normal(rng, (model.lambda * model.delta + s1) / p1, p1.recip().sqrt());
                mu[1] = draw::normal(rng, (model.lambda * model.delta + s2) / p2, p2.recip().sqrt());
            }
            Parameterization::CentreGap => {
                let l1 = z1.iter().filter(|v| **v).count();
                let xi = (mu[1] - mu[0]) / 2.0;
                let (m0, v0) = centre_conditional(sum_x, n, l1, xi, model.lambda, model.delta);
                let mu0 = draw::normal(rng, m0, v0.sqrt());
                let (mx, vx) = gap_conditional(data, &z1, mu0, model.lambda);
                let xi = draw::normal(rng, mx, vx.sqrt());
                mu = [mu0 - xi, mu0 + xi];
            }
        }
        trace.push(&mu);
    }
    trace.warmup = crate::mcmc::default_warmup(iters);
    Ok(trace)
}

/// Conditional of μ₁ in the annealed sampler: N((γλδ + S)/(γλ + ℓ), 1/(γλ + ℓ)).
pub fn annealed_mean_conditional(gamma: u32, lambda: f64, delta: f64, ell: usize, sum: f64) -> (f64, f64) {
    let prec = gamma as f64 * lambda + ell as f64;
    ((gamma as f64 * lambda * delta + sum) / prec, 1.0 / prec)
}

/// Gibbs sampler on π(μ₁, μ₂ | x)^γ by completing the likelihood γ times.
pub fn gibbs_mixture_annealed(
    data: &[f64],
    model: &MeanMixture,
    gamma: u32,
    iters: usize,
    rng: &mut RngState,
) -> Result<Trace> {
    if gamma == 0 {
        return param("gamma must be a positive integer");
    }
    if data.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let n = data.len();
    let mut mu = model.start;
    let mut trace = Trace::new(&["mu1", "mu2"]);
    for _ in 0..iters {
        let (mut ell, mut s1, mut s2) = (0usize, 0.0, 0.0);
        for &x in data {
            let odds = model.allocation_log_odds(x, mu);
            for _ in 0..gamma {
                if draw_label(rng, odds) {
                    ell += 1;
                    s1 += x;
                } else {
                    s2 += x;
                }
            }
        }
        let (m1, v1) = annealed_mean_conditional(gamma, model.lambda, model.delta, ell, s1);
        let (m2, v2) = annealed_mean_conditional(gamma, model.lambda, model.delta, gamma as usize * n - ell, s2);
        mu[0] = draw::normal(rng, m1, v1.sqrt());
        mu[1] = draw::normal(rng, m2, v2.sqrt());
        trace.push(&mu);
    }
    trace.warmup = crate::mcmc::default_warmup(iters);
    Ok(trace)
}

/// log ℓ(μ, σ²) of 0.5 N(0, 1) + 0.5 N(μ, σ²); rows follow `mu_grid`, columns `sigma2_grid`.
pub fn likelihood_surface(data: &[f64], mu_grid: &[f64], sigma2_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if mu_grid.is_empty() || sigma2_grid.is_empty() {
        return Err(Error::Empty("empty grid".into()));
    }
    if sigma2_grid.iter().any(|s| !(*s > 0.0)) {
        return param("variance grid must be positive");
    }
    let half = 0.5f64.ln();
    Ok(mu_grid
        .iter()
        .map(|&m| {
            sigma2_grid
                .iter()
                .map(|&s| {
                    data.iter()
                        .map(|&x| log_add_exp(half + ln_norm(x, 0.0, 1.0), half + ln_norm(x, m, s)))
                        .sum()
                })
                .collect()
        })
        .collect())
}

/// Number of nonnegative integer solutions of n₁ + … + n_k = n, i.e. C(n + k − 1, n).
pub fn partitions_count(n: u64, k: u64) -> Result<BigUint> {
    if k == 0 {
        return param("k must be at least 1");
    }
    let r = n.min(k - 1);
    let top = n + k - 1;
    let mut small: Option<u128> = Some(1);
    for i in 0..r {
        small = small.and_then(|acc| acc.checked_mul((top - i) as u128)).map(|acc| acc / (i as u128 + 1));
    }
    if let Some(v) = small {
        return Ok(BigUint::from(v));
    }
    let mut acc = BigUint::from(1u32);
    for i in 0..r {
        acc = acc * BigUint::from(top - i) / BigUint::from(i + 1);
    }
    Ok(acc)
}
