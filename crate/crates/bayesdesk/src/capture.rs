//! Capture-recapture: exact discrete posteriors on population size, Darroch
//! estimators, two-stage and T-stage samplers, mark loss, open populations and
//! beta priors matched to an interval.

use crate::dist::draw;
use crate::error::param;
use crate::mcmc::Trace;
use crate::numeric::{beta_reg, ln_binom_pmf, ln_choose, ln_factorial, ln_gamma, log_sum_exp, xlogy};
use crate::{Error, Result, RngState};

/// Truncated tail mass allowed on an exact posterior.
pub const TAIL_TOLERANCE: f64 = 1e-8;

const SUPPORT_GUARD: u64 = 1 << 24;

/// Normalised mass function on `support_min..=support_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePosterior {
    support_min: u64,
    log_mass: Vec<f64>,
    log_normalizer: f64,
    tail_bound: f64,
}

impl DiscretePosterior {
    /// Tabulates `exp(log_kernel(N))` from `support_min`.
    ///
    /// With `support_max = None` the upper end doubles from `4·support_min`
    /// until the estimated tail mass drops below [`TAIL_TOLERANCE`]. An explicit
    /// maximum that leaves more tail than that is an error.
    pub fn from_log_kernel<F: Fn(u64) -> f64>(
        support_min: u64,
        support_max: Option<u64>,
        log_kernel: F,
    ) -> Result<Self> {
        let mut hi = match support_max {
            Some(m) if m < support_min => {
                return param(format!("support max {m} below support min {support_min}"))
            }
            Some(m) => m,
            None => (4 * support_min).max(64),
        };
        let mut log_k: Vec<f64> = Vec::new();
        loop {
            if hi - support_min + 1 > SUPPORT_GUARD {
                return Err(Error::Support(format!(
                    "tail mass still above {TAIL_TOLERANCE} at N = {hi}"
                )));
            }
            let from = support_min + log_k.len() as u64;
            log_k.extend((from..=hi).map(&log_kernel));
            let z = log_sum_exp(&log_k);
            if !z.is_finite() {
                return Err(Error::Degenerate("posterior kernel has no finite mass".into()));
            }
            let tail = tail_estimate(&log_kernel, hi, z);
            if tail < TAIL_TOLERANCE {
                let log_mass = log_k.iter().map(|l| l - z).collect();
                return Ok(Self { support_min, log_mass, log_normalizer: z, tail_bound: tail });
            }
            if support_max.is_some() {
                return Err(Error::Support(format!(
                    "tail mass beyond N = {hi} is about {tail:.2e}; raise the support maximum"
                )));
            }
            hi = hi.saturating_mul(2);
        }
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.log_mass.len() as u64 - 1
    }

    /// Estimated mass above `support_max` (relative to the retained mass).
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Log of the summed unnormalised kernel.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn mass(&self, n: u64) -> f64 {
        self.log_mass(n).exp()
    }

    pub fn log_mass(&self, n: u64) -> f64 {
        if n < self.support_min || n > self.support_max() {
            return f64::NEG_INFINITY;
        }
        self.log_mass[(n - self.support_min) as usize]
    }

    /// `(N, probability)` pairs over the support.
    pub fn masses(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.log_mass.iter().enumerate().map(move |(i, l)| (self.support_min + i as u64, l.exp()))
    }

    pub fn mean(&self) -> f64 {
        self.masses().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.masses().map(|(n, p)| (n as f64 - m).powi(2) * p).sum()
    }

    pub fn cdf(&self, m: u64) -> f64 {
        self.masses().take_while(|(n, _)| *n <= m).map(|(_, p)| p).sum()
    }

    /// Smallest `m` with `P(N ≤ m) ≥ 1/2`.
    pub fn median(&self) -> u64 {
        self.support_min + self.median_offset()
    }

    /// Number of support points whose cumulative mass is still below 1/2.
    pub fn median_offset(&self) -> u64 {
        let mut acc = 0.0;
        let mut count = 0;
        for (_, p) in self.masses() {
            acc += p;
            if acc >= 0.5 {
                break;
            }
            count += 1;
        }
        count
    }

    pub fn mode(&self) -> u64 {
        let (i, _) = self
            .log_mass
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, l)| if *l > b.1 { (i, *l) } else { b });
        self.support_min + i as u64
    }
}

/// Tail above `hi`, treating the kernel as a local power law `N^{-s}`.
fn tail_estimate<F: Fn(u64) -> f64>(log_kernel: &F, hi: u64, log_z: f64) -> f64 {
    let l_hi = log_kernel(hi);
    if l_hi == f64::NEG_INFINITY {
        return 0.0;
    }
    let lo = (hi / 2).max(1);
    if lo == hi {
        return f64::INFINITY;
    }
    let slope = (log_kernel(lo) - l_hi) / ((hi as f64).ln() - (lo as f64).ln());
    if !(slope > 1.0) {
        return f64::INFINITY;
    }
    2.0 * (l_hi - log_z).exp() * hi as f64 / (slope - 1.0)
}

/// Posterior of N for a single binomial capture with uniform p and prior 1/N.
///
/// The mass `n0/(N(N+1))` on `N ≥ n0 = n⁺ ∨ 1` has closed-form CDF
/// `1 − n0/(m+1)`, so no truncation is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformPriorPosterior {
    floor: u64,
}

impl UniformPriorPosterior {
    pub fn support_min(&self) -> u64 {
        self.floor
    }

    /// Sum of `1/(N(N+1))` over the support, inverted.
    pub fn normalizer(&self) -> f64 {
        self.floor as f64
    }

    pub fn mass(&self, n: u64) -> f64 {
        if n < self.floor {
            0.0
        } else {
            self.floor as f64 / (n as f64 * (n as f64 + 1.0))
        }
    }

    pub fn cdf(&self, m: u64) -> f64 {
        if m < self.floor {
            0.0
        } else {
            1.0 - self.floor as f64 / (m as f64 + 1.0)
        }
    }

    /// Smallest `m` with `P(N ≤ m) ≥ 1/2`, which is `2(n⁺ ∨ 1) − 1`.
    pub fn median(&self) -> u64 {
        2 * self.floor - 1
    }

    /// The mass decays like `N^{-2}`, so the mean diverges.
    pub fn mean(&self) -> f64 {
        f64::INFINITY
    }
}

pub fn uniform_prior_posterior(n_plus: u64) -> UniformPriorPosterior {
    UniformPriorPosterior { floor: n_plus.max(1) }
}

/// Which exponent on `(1 − p)` the tag-recovery kernel carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagRecoveryForm {
    /// `N + k·n₁⁺ − n·⁺` with `k` counting every occasion. This is the printed
    /// form and the one behind the published mean 282.4.
    Printed,
    /// `N + (k − 1)·n₁⁺ − n·⁺`, the exact integral for `k − 1` binomial
    /// recapture occasions out of `n₁⁺`.
    Binomial,
}

/// Log of the unnormalised tag-recovery mass at population `n`.
pub fn tag_recovery_log_kernel(n1_plus: u64, recoveries: &[u64], form: TagRecoveryForm, n: u64) -> f64 {
    if n < n1_plus.max(1) {
        return f64::NEG_INFINITY;
    }
    let k = recoveries.len() as u64 + 1;
    let n_dot = n1_plus + recoveries.iter().sum::<u64>();
    let shift = match form {
        TagRecoveryForm::Printed => k * n1_plus,
        TagRecoveryForm::Binomial => (k - 1) * n1_plus,
    };
    ln_gamma(n as f64) - ln_factorial(n - n1_plus) + ln_factorial(n + shift - n_dot) - ln_factorial(n + shift + 1)
}

/// Posterior of N from a first capture `n1_plus` followed by recoveries
/// `n_j⁺ ~ B(n1_plus, p)`, under prior 1/N and uniform p.
pub fn tag_recovery_posterior(
    n1_plus: u64,
    recoveries: &[u64],
    form: TagRecoveryForm,
    support_max: Option<u64>,
) -> Result<DiscretePosterior> {
    if let Some(r) = recoveries.iter().find(|r| **r > n1_plus) {
        return param(format!("recovery count {r} exceeds first capture {n1_plus}"));
    }
    DiscretePosterior::from_log_kernel(n1_plus.max(1), support_max, |n| {
        tag_recovery_log_kernel(n1_plus, recoveries, form, n)
    })
}

/// Moment estimate `n₁⁺ / p̂` with `p̂` the mean recovery fraction.
pub fn tag_recovery_crude_estimate(n1_plus: u64, recoveries: &[u64]) -> Result<f64> {
    let total: u64 = recoveries.iter().sum();
    if recoveries.is_empty() || total == 0 {
        return Err(Error::Degenerate("no recoveries to estimate p from".into()));
    }
    let p_hat = total as f64 / (recoveries.len() as f64 * n1_plus as f64);
    Ok(n1_plus as f64 / p_hat)
}

/// Hypergeometric law of the recapture count given both sample sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct RecaptureLaw {
    pub min: u64,
    pub pmf: Vec<f64>,
    pub expectation: f64,
}

pub fn hypergeometric_recapture(population: u64, n1: u64, n2: u64) -> Result<RecaptureLaw> {
    if n1 > population || n2 > population {
        return param(format!("sample sizes ({n1}, {n2}) exceed population {population}"));
    }
    let min = (n1 + n2).saturating_sub(population);
    let max = n1.min(n2);
    let denom = ln_choose(population, n2);
    let pmf = (min..=max)
        .map(|m| (ln_choose(n1, m) + ln_choose(population - n1, n2 - m) - denom).exp())
        .collect();
    let expectation = if population == 0 { 0.0 } else { n1 as f64 * n2 as f64 / population as f64 };
    Ok(RecaptureLaw { min, pmf, expectation })
}

/// Two capture occasions with recognisable marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoStageData {
    pub n1: u64,
    pub n2: u64,
    pub m2: u64,
}

impl TwoStageData {
    pub fn new(n1: u64, n2: u64, m2: u64) -> Result<Self> {
        if m2 > n1.min(n2) {
            return param(format!("recaptures {m2} exceed min({n1}, {n2})"));
        }
        Ok(Self { n1, n2, m2 })
    }

    /// Distinct individuals seen.
    pub fn n_plus(&self) -> u64 {
        self.n1 + self.n2 - self.m2
    }

    /// Total captures.
    pub fn n_c(&self) -> u64 {
        self.n1 + self.n2
    }
}

/// Posterior of N under the Darroch model, prior 1/N and uniform p.
pub fn darroch_posterior(data: &TwoStageData, support_max: Option<u64>) -> Result<DiscretePosterior> {
    tstage_posterior(2, data.n_plus(), data.n_c(), support_max)
}

/// Marginal posterior `(N−1)!/(N−n⁺)! · (TN−n^c)!/(TN+1)!` on `N ≥ n⁺ ∨ 1`.
pub fn tstage_posterior(
    occasions: u64,
    n_plus: u64,
    n_c: u64,
    support_max: Option<u64>,
) -> Result<DiscretePosterior> {
    check_counts(occasions, n_plus, n_c)?;
    let t = occasions;
    DiscretePosterior::from_log_kernel(n_plus.max(1), support_max, |n| tstage_log_kernel(t, n_plus, n_c, n))
}

fn check_counts(occasions: u64, n_plus: u64, n_c: u64) -> Result<()> {
    if occasions == 0 {
        return param("need at least one capture occasion");
    }
    if n_c < n_plus || n_c > occasions * n_plus {
        return param(format!("total captures {n_c} inconsistent with {n_plus} distinct over {occasions} occasions"));
    }
    Ok(())
}

fn tstage_log_kernel(t: u64, n_plus: u64, n_c: u64, n: u64) -> f64 {
    if n < n_plus.max(1) {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64) - ln_factorial(n - n_plus) + ln_factorial(t * n - n_c) - ln_factorial(t * n + 1)
}

/// Darroch likelihood in N, up to a constant.
pub fn darroch_log_likelihood(data: &TwoStageData, n: u64) -> f64 {
    if n < data.n_plus() {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n - data.n1) + ln_factorial(n - data.n2) - ln_factorial(n - data.n_plus()) - ln_factorial(n)
}

/// Maximum-likelihood N; `None` when no recapture makes the likelihood
/// increase without bound.
pub fn darroch_mle(data: &TwoStageData) -> Option<u64> {
    if data.m2 == 0 {
        return None;
    }
    let lo = data.n1 * data.n2 / data.m2;
    let hi = lo + 1;
    let best = if darroch_log_likelihood(data, hi) > darroch_log_likelihood(data, lo) { hi } else { lo };
    Some(best.max(data.n_plus()))
}

/// Prior on the population size for the two-stage sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PopulationPrior {
    /// π(N) ∝ 1/N.
    InverseN,
    /// π(N) = Poisson(λ).
    Poisson(f64),
}

/// Two-stage Gibbs sampler on `(N, p)`; columns `N` and `p`.
pub fn twostage_gibbs(
    data: &TwoStageData,
    prior: PopulationPrior,
    iters: usize,
    rng: &mut RngState,
) -> Result<Trace> {
    match prior {
        PopulationPrior::InverseN => tstage_mh_posterior(2, data.n_plus(), data.n_c(), iters, rng),
        PopulationPrior::Poisson(lambda) => {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return param(format!("Poisson prior rate must be positive, got {lambda}"));
            }
            if iters == 0 {
                return param("need at least one iteration");
            }
            let (n_plus, n_c) = (data.n_plus(), data.n_c());
            let mut trace = Trace::new(&["N", "p"]);
            let mut n = 2 * n_plus;
            for _ in 0..iters {
                let p = draw::beta(rng, n_c as f64 + 1.0, (2 * n - n_c) as f64 + 1.0);
                n = n_plus + draw::poisson(rng, lambda * (1.0 - p).powi(2));
                trace.push(&[n as f64, p]);
            }
            Ok(trace)
        }
    }
}

/// Log acceptance ratio of the shifted-Poisson move `current → proposal` on N
/// given p, targeting π(N | p, data) ∝ (N−1)!/(N−n⁺)! (1−p)^{TN}.
pub fn tstage_log_acceptance(occasions: u64, n_plus: u64, p: f64, current: u64, proposal: u64) -> f64 {
    if proposal == current {
        return 0.0;
    }
    if proposal < n_plus.max(1) || current < n_plus {
        return f64::NEG_INFINITY;
    }
    let t = occasions as f64;
    let target = |n: u64| {
        if n < n_plus.max(1) {
            f64::NEG_INFINITY
        } else {
            ln_gamma(n as f64) - ln_factorial(n - n_plus) + xlogy(t * n as f64, 1.0 - p)
        }
    };
    let shrink = (1.0 - p).powf(t);
    let log_q = |to: u64, from: u64| log_poisson_pmf(to - n_plus, from as f64 * shrink);
    target(proposal) - target(current) + log_q(current, proposal) - log_q(proposal, current)
}

fn log_poisson_pmf(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * rate.ln() - rate - ln_factorial(k)
}

/// T-stage sampler under prior 1/N: an MH move on N with proposal
/// `n⁺ + Poisson(N(1−p)^T)`, then `p ~ Be(n^c + 1, TN − n^c + 1)`.
/// Columns `N` and `p`; acceptance flags are recorded.
pub fn tstage_mh_posterior(
    occasions: u64,
    n_plus: u64,
    n_c: u64,
    iters: usize,
    rng: &mut RngState,
) -> Result<Trace> {
    check_counts(occasions, n_plus, n_c)?;
    if iters == 0 {
        return param("need at least one iteration");
    }
    let t = occasions;
    let mut trace = Trace::new(&["N", "p"]);
    let mut accepted = Vec::with_capacity(iters);
    let mut n = (2 * n_plus).max(1);
    let mut p = draw::beta(rng, n_c as f64 + 1.0, (t * n - n_c) as f64 + 1.0);
    trace.push(&[n as f64, p]);
    accepted.push(true);
    for _ in 1..iters {
        let proposal = n_plus + draw::poisson(rng, n as f64 * (1.0 - p).powi(t as i32));
        let ok = draw::uniform_open(rng).ln() < tstage_log_acceptance(t, n_plus, p, n, proposal);
        if ok {
            n = proposal;
        }
        accepted.push(ok);
        p = draw::beta(rng, n_c as f64 + 1.0, (t * n - n_c) as f64 + 1.0);
        trace.push(&[n as f64, p]);
    }
    trace.set_accepted(accepted);
    Ok(trace)
}

/// Sufficient statistics of the T-stage model where marked animals are
/// recaptured with probability q rather than p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TStageStats {
    pub occasions: u64,
    pub n1: u64,
    pub n_plus: u64,
    pub n_star: u64,
    pub m_plus: u64,
}

/// Exponents of `p, 1−p, q, 1−q` in the likelihood at population `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TStageExponents {
    pub p: u64,
    pub not_p: u64,
    pub q: u64,
    pub not_q: u64,
}

impl TStageStats {
    /// Requires `n ≥ n⁺`.
    pub fn exponents(&self, n: u64) -> Result<TStageExponents> {
        if n < self.n_plus {
            return param(format!("population {n} below distinct captures {}", self.n_plus));
        }
        Ok(TStageExponents {
            p: self.n_plus,
            not_p: self.occasions * n - self.n_star,
            q: self.m_plus,
            not_q: self.n_star - self.n_plus - self.m_plus,
        })
    }
}

pub fn tstage_sufficient_stats(captures: &[u64], recaptures: &[u64]) -> Result<TStageStats> {
    let t = captures.len();
    if t == 0 {
        return Err(Error::Empty("no capture occasions".into()));
    }
    if recaptures.len() + 1 != t {
        return Err(Error::Dimension(format!(
            "{} recapture counts for {t} occasions",
            recaptures.len()
        )));
    }
    let n1 = captures[0];
    let mut marked = n1;
    let mut n_star = t as u64 * n1;
    for (j, (&n, &m)) in captures[1..].iter().zip(recaptures).enumerate() {
        if m > n || m > marked {
            return param(format!("recaptures {m} exceed captures {n} or marked pool {marked}"));
        }
        marked += n - m;
        n_star += (t - j - 1) as u64 * (n - m);
    }
    Ok(TStageStats {
        occasions: t as u64,
        n1,
        n_plus: marked,
        n_star,
        m_plus: recaptures.iter().sum(),
    })
}

/// Counts for the two-stage model with mark loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkLossData {
    pub n1: u64,
    pub n2: u64,
    pub m2: u64,
    /// Lost marks recovered.
    pub k: u64,
}

/// Observed log-likelihood with mark loss, summing the completed likelihood
/// over the unobserved number `z` of lost marks. `q` is the loss probability
/// and `r` the recovery probability of a lost mark.
pub fn markloss_log_likelihood(population: u64, p: f64, q: f64, r: f64, data: &MarkLossData) -> Result<f64> {
    for (name, v) in [("p", p), ("q", q), ("r", r)] {
        if !(0.0..=1.0).contains(&v) {
            return param(format!("{name} must lie in [0, 1], got {v}"));
        }
    }
    let MarkLossData { n1, n2, m2, k } = *data;
    if n1 > population || m2 > n1.min(n2) {
        return Ok(f64::NEG_INFINITY);
    }
    let z_lo = k.max((n1 + n2).saturating_sub(m2 + population));
    let z_hi = n1 - m2;
    if z_lo > z_hi {
        return Ok(f64::NEG_INFINITY);
    }
    let terms: Vec<f64> = (z_lo..=z_hi)
        .map(|z| {
            ln_binom_pmf(n1, population, p)
                + ln_binom_pmf(z, n1, q)
                + ln_binom_pmf(k, z, r)
                + ln_binom_pmf(m2, n1 - z, p)
                + ln_binom_pmf(n2 - m2, population - n1 + z, p)
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

/// Open population over three occasions: `n1` marked, `c2` and `c3` of them
/// recaptured later, `r2` deaths in the second interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenPopData {
    pub n1: u64,
    pub c2: u64,
    pub c3: u64,
    pub r2: u64,
}

impl OpenPopData {
    pub fn new(n1: u64, c2: u64, c3: u64, r2: u64) -> Result<Self> {
        if c2 > n1 || r2 + c3 > n1 {
            return param(format!("infeasible counts n1={n1}, c2={c2}, c3={c3}, r2={r2}"));
        }
        Ok(Self { n1, c2, c3, r2 })
    }

    /// Largest first-interval death count compatible with the data.
    pub fn r1_max(&self) -> u64 {
        (self.n1 - self.c2).min(self.n1 - self.r2 - self.c3)
    }
}

/// How the first-interval death count is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R1Method {
    /// Exact categorical from the full conditional given r2.
    FullConditional,
    /// Exact categorical with r2 summed out.
    Marginalized,
    /// Binomial-envelope rejection targeting the full conditional.
    AcceptReject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R1Draw {
    pub value: u64,
    /// Accepted proposals over total proposals, for [`R1Method::AcceptReject`].
    pub acceptance_rate: Option<f64>,
}

fn check_probs(p: f64, q: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) || !(0.0..1.0).contains(&q) {
        return param(format!("capture and death probabilities must lie in [0, 1), got p={p}, q={q}"));
    }
    Ok(())
}

/// Log-kernel of r1 given r2: `C(n1−c2, r1) C(n1−r1, r2+c3) ρ^{r1}` with
/// `ρ = q/((1−q)²(1−p)²)`, on `0..=r1_max`.
pub fn openpop_r1_full_log_kernel(data: &OpenPopData, p: f64, q: f64) -> Result<Vec<f64>> {
    check_probs(p, q)?;
    let odds = q / ((1.0 - q).powi(2) * (1.0 - p).powi(2));
    Ok((0..=data.r1_max())
        .map(|r| ln_choose(data.n1 - data.c2, r) + ln_choose(data.n1 - r, data.r2 + data.c3) + xlogy(r as f64, odds))
        .collect())
}

/// Log-kernel of r1 with r2 summed out:
/// `(n1−r1)! / (r1! (n1−r1−c2)! (n1−r1−c3)!) · ρ^{r1}` with
/// `ρ = q/((1−p)(1−q)[q + (1−p)(1−q)])`, on `0..=min(n1−c2, n1−c3)`.
pub fn openpop_r1_marginal_log_kernel(data: &OpenPopData, p: f64, q: f64) -> Result<Vec<f64>> {
    check_probs(p, q)?;
    let (n1, c2, c3) = (data.n1, data.c2, data.c3);
    if c3 > n1 {
        return param(format!("c3={c3} exceeds n1={n1}"));
    }
    let stay = (1.0 - p) * (1.0 - q);
    let odds = q / (stay * (q + stay));
    Ok((0..=(n1 - c2).min(n1 - c3))
        .map(|r| {
            ln_factorial(n1 - r) - ln_factorial(r) - ln_factorial(n1 - r - c2) - ln_factorial(n1 - r - c3)
                + xlogy(r as f64, odds)
        })
        .collect())
}

fn normalise(log_k: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_k);
    log_k.iter().map(|l| (l - z).exp()).collect()
}

/// Normalised pmf of r1 on `0..` for the exact methods.
pub fn openpop_r1_pmf(data: &OpenPopData, p: f64, q: f64, method: R1Method) -> Result<Vec<f64>> {
    match method {
        R1Method::Marginalized => Ok(normalise(&openpop_r1_marginal_log_kernel(data, p, q)?)),
        _ => Ok(normalise(&openpop_r1_full_log_kernel(data, p, q)?)),
    }
}

pub fn openpop_r1_sampler(
    data: &OpenPopData,
    p: f64,
    q: f64,
    method: R1Method,
    rng: &mut RngState,
) -> Result<R1Draw> {
    match method {
        R1Method::AcceptReject => {
            let (draws, rate) = openpop_r1_accept_reject(data, p, q, 1, rng)?;
            Ok(R1Draw { value: draws[0], acceptance_rate: Some(rate) })
        }
        _ => {
            let log_k = match method {
                R1Method::Marginalized => openpop_r1_marginal_log_kernel(data, p, q)?,
                _ => openpop_r1_full_log_kernel(data, p, q)?,
            };
            Ok(R1Draw { value: draw::categorical_log(rng, &log_k) as u64, acceptance_rate: None })
        }
    }
}

/// `count` rejection draws from the full conditional of r1, proposing from
/// `B(r1_max, ρ/(1+ρ))`. The envelope constant is the exact maximum of the
/// target/proposal ratio over the support. Returns the draws and the
/// acceptance rate.
pub fn openpop_r1_accept_reject(
    data: &OpenPopData,
    p: f64,
    q: f64,
    count: usize,
    rng: &mut RngState,
) -> Result<(Vec<u64>, f64)> {
    let log_target = openpop_r1_full_log_kernel(data, p, q)?;
    let size = data.r1_max();
    let odds = q / ((1.0 - q).powi(2) * (1.0 - p).powi(2));
    let prob = odds / (1.0 + odds);
    let log_ratio: Vec<f64> = log_target
        .iter()
        .enumerate()
        .map(|(y, l)| l - ln_binom_pmf(y as u64, size, prob))
        .collect();
    let log_m = log_ratio.iter().cloned().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(count);
    let mut proposals = 0u64;
    while out.len() < count {
        let y = draw::binomial(rng, size, prob);
        proposals += 1;
        if draw::uniform(rng).ln() <= log_ratio[y as usize] - log_m {
            out.push(y);
        }
    }
    Ok((out, count as f64 / proposals as f64))
}

/// Beta prior matched to a mean and an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    /// Total concentration `a + b`.
    pub scale: f64,
    pub a: f64,
    pub b: f64,
    /// Mass the fitted distribution puts on the interval.
    pub achieved: f64,
}

const SCALE_BRACKET: (f64, f64) = (1e-6, 1e8);

/// Finds the `Be(α m, α(1−m))` putting mass `coverage` on `(lo, hi)`, by
/// bisection on `log α`.
pub fn beta_from_mean_ci(mean: f64, lo: f64, hi: f64, coverage: f64) -> Result<BetaFit> {
    if !(0.0 < lo && lo < mean && mean < hi && hi < 1.0) {
        return param(format!("need 0 < lo < mean < hi < 1, got ({lo}, {mean}, {hi})"));
    }
    if !(0.0 < coverage && coverage < 1.0) {
        return param(format!("coverage must lie in (0, 1), got {coverage}"));
    }
    let cover = |s: f64| {
        let (a, b) = (s * mean, s * (1.0 - mean));
        beta_reg(a, b, hi) - beta_reg(a, b, lo)
    };
    let (mut l, mut u) = (SCALE_BRACKET.0.ln(), SCALE_BRACKET.1.ln());
    let (c_lo, c_hi) = (cover(l.exp()), cover(u.exp()));
    if coverage < c_lo || coverage > c_hi {
        return Err(Error::Divergence(format!(
            "coverage {coverage} outside [{c_lo:.3e}, {c_hi:.6}] on the search bracket"
        )));
    }
    let fit = |s: f64| BetaFit { scale: s, a: s * mean, b: s * (1.0 - mean), achieved: cover(s) };
    for _ in 0..200 {
        let mid = 0.5 * (l + u);
        let c = cover(mid.exp());
        if (c - coverage).abs() < 1e-9 {
            return Ok(fit(mid.exp()));
        }
        if c < coverage {
            l = mid;
        } else {
            u = mid;
        }
    }
    let best = fit((0.5 * (l + u)).exp());
    if (best.achieved - coverage).abs() < 1e-6 {
        Ok(best)
    } else {
        Err(Error::Divergence(format!("bisection stalled at coverage {}", best.achieved)))
    }
}
