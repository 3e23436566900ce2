use std::collections::BTreeMap;

use bayesdesk::capture::{
    beta_from_mean_ci, darroch_mle, tag_recovery_crude_estimate, tag_recovery_posterior, tstage_posterior,
    TagRecoveryForm, TwoStageData,
};
use bayesdesk::diagnostics::{ks_critical, ks_statistic};
use bayesdesk::dist::{draw, ScalarDistribution};
use bayesdesk::fields::{
    abc_posterior, beta_threshold_experiment, energy_histogram, exact_state_law_with, l4_clustering, GibbsSampler,
    Lattice, Neighborhood, Schedule, ThresholdTarget,
};
use bayesdesk::linalg::Matrix;
use bayesdesk::mcmc::{cauchy_location_log_posterior, chain_summary, gibbs_beta_binomial};
use bayesdesk::mixtures::{em_fit, em_random_start, EM_DEMO_N, EM_DEMO_TRUTH};
use bayesdesk::montecarlo::{
    accept_reject, bayes_factor_mc_two_sample, estimate_normalizing_constant, hpd_from_grid,
    log_exact_precision_evidence, log_harmonic_mean_evidence, precision_posterior_loglik,
};
use bayesdesk::timeseries::{
    ar1_posterior, ar_coeffs_from_roots, hmm_forward_loglik, schur_root_test, HmmSpec, LagPolynomial,
};
use bayesdesk::{Error, Result, RngState};
use num_complex::Complex64;

use crate::report::{ExperimentReport, TraceData};

/// Experiment-specific options. Each experiment declares which ones it reads.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Iterations, draws or proposals (meaning depends on the experiment)
    #[arg(long)]
    pub iters: Option<usize>,
    /// Distinct animals captured over two stages
    #[arg(long)]
    pub nplus: Option<u64>,
    /// Total captures over two stages
    #[arg(long)]
    pub nc: Option<u64>,
    #[arg(long)]
    pub n1: Option<u64>,
    #[arg(long)]
    pub n2: Option<u64>,
    #[arg(long)]
    pub m2: Option<u64>,
    /// Comma-separated numbers
    #[arg(long)]
    pub data: Option<String>,
    /// Tag-recovery likelihood: printed or binomial
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub colors: Option<u8>,
    #[arg(long)]
    pub precision: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xbar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ybar: Option<f64>,
    #[arg(long)]
    pub s2: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
}

impl Flags {
    fn given(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { v.push(stringify!($f)); } )* };
        }
        check!(
            iters, nplus, nc, n1, n2, m2, data, form, rows, cols, beta, colors, precision, sweeps, reps, epsilon,
            starts, alpha, xbar, ybar, s2, n, tau
        );
        v
    }
}

type Runner = fn(&Flags, &mut RngState, &mut ExperimentReport) -> Result<()>;

pub struct Experiment {
    pub id: &'static str,
    pub summary: &'static str,
    pub flags: &'static [&'static str],
    run: Runner,
}

pub const REGISTRY: &[Experiment] = &[
    Experiment {
        id: "darroch",
        summary: "Two-stage capture posterior of N by exact summation",
        flags: &["nplus", "nc", "n1", "n2", "m2"],
        run: darroch,
    },
    Experiment {
        id: "tag-recovery",
        summary: "Posterior of N from a first capture and yearly recoveries",
        flags: &["data", "form"],
        run: tag_recovery,
    },
    Experiment {
        id: "beta-binomial-gibbs",
        summary: "Beta-binomial Gibbs sampler against its Be(a, b) marginal",
        flags: &["iters", "n", "alpha"],
        run: beta_binomial_gibbs,
    },
    Experiment {
        id: "em-mixture",
        summary: "EM for a two-component normal mixture from random starts",
        flags: &["iters", "starts", "n"],
        run: em_mixture,
    },
    Experiment {
        id: "ising-threshold",
        summary: "Smallest β giving a unicolor (or checkerboard, β < 0) Ising lattice",
        flags: &["rows", "cols", "precision", "sweeps", "reps", "beta"],
        run: ising_threshold,
    },
    Experiment {
        id: "abc-binomial",
        summary: "Rejection ABC for a binomial proportion against Be(3, 4)",
        flags: &["iters", "epsilon"],
        run: abc_binomial,
    },
    Experiment {
        id: "ar1-posterior",
        summary: "Flat-prior AR(1) posterior and one-step predictive",
        flags: &["data", "n", "beta"],
        run: ar1,
    },
    Experiment {
        id: "bayes-factor-mc",
        summary: "Simulated two-sample Bayes factor with a normal prior on the shift",
        flags: &["iters", "xbar", "ybar", "s2", "n", "tau"],
        run: bayes_factor_mc,
    },
    Experiment {
        id: "harmonic-mean",
        summary: "Harmonic-mean evidence against the exact normal-precision evidence",
        flags: &["iters", "reps", "n"],
        run: harmonic_mean,
    },
    Experiment {
        id: "accept-reject",
        summary: "Accept-reject for a scaled Be(2, 2) with constant recovery",
        flags: &["iters"],
        run: accept_reject_exp,
    },
    Experiment {
        id: "hpd-cauchy",
        summary: "Grid HPD region of a Cauchy location posterior",
        flags: &["data", "alpha", "tau"],
        run: hpd_cauchy,
    },
    Experiment {
        id: "schur-test",
        summary: "Schur recursion against companion roots on random lag polynomials",
        flags: &["iters"],
        run: schur_test,
    },
    Experiment {
        id: "forward-filter",
        summary: "Forward filter against path enumeration for a switching AR model",
        flags: &["n", "colors"],
        run: forward_filter,
    },
    Experiment {
        id: "partition-exact",
        summary: "Exact log partition function of a Potts lattice",
        flags: &["rows", "cols", "beta", "colors"],
        run: partition_exact,
    },
    Experiment {
        id: "l4-cluster",
        summary: "L4-loss clustering from simulated pairwise co-labelling",
        flags: &["rows", "cols", "beta", "colors", "sweeps", "starts"],
        run: l4_cluster,
    },
    Experiment {
        id: "ising-2beta",
        summary: "Agreement-count and 2β·1{both = 1} laws on a 1×2 grid, side by side",
        flags: &["beta"],
        run: ising_2beta,
    },
    Experiment {
        id: "beta-from-ci",
        summary: "Beta prior matching a mean and a central interval",
        flags: &["data"],
        run: beta_from_ci,
    },
];

pub fn lookup(id: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.id == id)
}

/// Runs `exp`, rejecting flags it does not read.
pub fn run(exp: &Experiment, flags: &Flags, seed: u64) -> Result<ExperimentReport> {
    if let Some(f) = flags.given().into_iter().find(|f| !exp.flags.contains(f)) {
        return Err(Error::Parameter(format!("--{f} does not apply to {}", exp.id)));
    }
    let mut rng = RngState::new(seed);
    let mut report = ExperimentReport::new(exp.id, seed);
    (exp.run)(flags, &mut rng, &mut report)?;
    Ok(report)
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|e| Error::Parameter(format!("bad list entry {x:?}: {e}"))))
        .collect()
}

fn list_string<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn darroch(f: &Flags, _: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let staged = [f.n1, f.n2, f.m2];
    let (n_plus, n_c) = if staged.iter().any(Option::is_some) {
        if f.nplus.is_some() || f.nc.is_some() {
            return Err(Error::Parameter("give either --nplus/--nc or --n1/--n2/--m2".into()));
        }
        let [Some(n1), Some(n2), Some(m2)] = staged else {
            return Err(Error::Parameter("--n1, --n2 and --m2 go together".into()));
        };
        let data = TwoStageData::new(n1, n2, m2)?;
        r.param("n1", n1).param("n2", n2).param("m2", m2);
        r.diagnostic("mle_defined", darroch_mle(&data).is_some() as u8 as f64);
        if let Some(mle) = darroch_mle(&data) {
            r.estimate("mle", mle as f64);
        }
        (data.n_plus(), data.n_c())
    } else {
        (f.nplus.unwrap_or(45), f.nc.unwrap_or(50))
    };
    r.param("nplus", n_plus).param("nc", n_c);
    let post = match tstage_posterior(2, n_plus, n_c, None) {
        Ok(p) => p,
        // no recaptures: the tail decays like 1/N and cannot be truncated
        Err(Error::Support(_)) if n_plus == n_c && n_plus > 0 => {
            r.diagnostic("posterior_truncatable", 0.0);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    r.estimate("mean", post.mean())
        .estimate("sd", post.variance().sqrt())
        .estimate("median", post.median() as f64)
        .estimate("mode", post.mode() as f64);
    r.diagnostic("tail_bound", post.tail_bound()).diagnostic("support_max", post.support_max() as f64);
    Ok(())
}

const TAG_DATA: [u64; 11] = [32, 20, 8, 5, 1, 2, 0, 2, 1, 1, 0];

fn tag_recovery(f: &Flags, _: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let data: Vec<u64> = match &f.data {
        Some(s) => parse_list(s)?,
        None => TAG_DATA.to_vec(),
    };
    let (first, recoveries) = data.split_first().ok_or_else(|| Error::Empty("no counts given".into()))?;
    let form = match f.form.as_deref().unwrap_or("printed") {
        "printed" => TagRecoveryForm::Printed,
        "binomial" => TagRecoveryForm::Binomial,
        other => return Err(Error::Parameter(format!("unknown form {other:?}"))),
    };
    r.param("data", list_string(&data)).param("form", format!("{form:?}").to_lowercase());
    let post = tag_recovery_posterior(*first, recoveries, form, None)?;
    r.estimate("mean", post.mean())
        .estimate("median", post.median_offset() as f64)
        .estimate("median_population", post.median() as f64)
        .estimate("mode", post.mode() as f64)
        .estimate("sd", post.variance().sqrt());
    if let Ok(crude) = tag_recovery_crude_estimate(*first, recoveries) {
        r.estimate("crude", crude);
    }
    r.diagnostic("tail_bound", post.tail_bound());
    Ok(())
}

fn beta_binomial_gibbs(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let iters = f.iters.unwrap_or(100_000);
    let n = f.n.unwrap_or(18) as u64;
    let a = f.alpha.unwrap_or(2.5);
    r.param("iters", iters).param("n", n).param("alpha", a);
    let trace = gibbs_beta_binomial(n, a, a, iters, rng)?;
    let theta = trace.column(0);
    let target = ScalarDistribution::beta(a, a)?;
    let ks = ks_statistic(&theta, |x| target.cdf(x).unwrap_or(f64::NAN));
    let s = chain_summary(&trace, 0)?;
    r.estimate("theta_mean", s.means[0]).estimate("theta_sd", s.sds[0]).estimate("eta_mean", s.means[1]);
    r.diagnostic("ks", ks).diagnostic("ks_critical_1pct", ks_critical(theta.len(), 0.01));
    r.diagnostic("theta_acf1", s.acf[0].get(1).copied().unwrap_or(f64::NAN));
    r.trace = Some(TraceData {
        names: trace.names().to_vec(),
        rows: (0..trace.iterations()).map(|i| trace.row(i).to_vec()).collect(),
    });
    Ok(())
}

fn em_mixture(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let steps = f.iters.unwrap_or(100);
    let starts = f.starts.unwrap_or(20);
    let n = f.n.unwrap_or(EM_DEMO_N);
    r.param("iters", steps).param("starts", starts).param("n", n);
    let data = EM_DEMO_TRUTH.sample(n, rng);
    let mut best: Option<(f64, bayesdesk::mixtures::MixtureParams)> = None;
    let mut worst_step = f64::INFINITY;
    let mut collapsed = 0;
    let mut rows = Vec::new();
    for s in 0..starts {
        let path = em_fit(&data, em_random_start(&data, rng)?, steps)?;
        collapsed += path.collapsed as usize;
        for (i, w) in path.log_lik.windows(2).enumerate() {
            worst_step = worst_step.min(w[1] - w[0]);
            rows.push(vec![s as f64, (i + 1) as f64, w[1]]);
        }
        let (ll, p) = (*path.log_lik.last().unwrap(), *path.params.last().unwrap());
        if best.is_none_or(|(b, _)| ll > b) {
            best = Some((ll, p));
        }
    }
    let (ll, p) = best.ok_or_else(|| Error::Parameter("need at least one start".into()))?;
    r.estimate("log_lik", ll)
        .estimate("p", p.p)
        .estimate("mu1", p.mu[0])
        .estimate("mu2", p.mu[1])
        .estimate("sigma2_1", p.sigma2[0])
        .estimate("sigma2_2", p.sigma2[1]);
    r.diagnostic("min_step_change", worst_step).diagnostic("collapsed_starts", collapsed as f64);
    r.trace = Some(TraceData { names: vec!["start".into(), "step".into(), "log_lik".into()], rows });
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn ising_threshold(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let (rows, cols) = (f.rows.unwrap_or(5), f.cols.unwrap_or(5));
    let precision = f.precision.unwrap_or(0.1);
    let (sweeps, reps) = (f.sweeps.unwrap_or(100), f.reps.unwrap_or(250));
    let target = match f.beta {
        Some(b) if b < 0.0 => ThresholdTarget::Checkerboard,
        _ => ThresholdTarget::Unicolor,
    };
    r.param("rows", rows).param("cols", cols).param("precision", precision);
    r.param("sweeps", sweeps).param("reps", reps).param("target", format!("{target:?}").to_lowercase());
    let mut out = beta_threshold_experiment(rows, cols, precision, sweeps, reps, target, rng)?;
    r.trace = Some(TraceData { names: vec!["beta".into()], rows: out.iter().map(|b| vec![*b]).collect() });
    out.sort_by(f64::total_cmp);
    r.estimate("mean", out.iter().sum::<f64>() / out.len() as f64)
        .estimate("median", quantile(&out, 0.5))
        .estimate("q1", quantile(&out, 0.25))
        .estimate("q3", quantile(&out, 0.75));
    r.diagnostic("min", out[0]).diagnostic("max", out[out.len() - 1]);
    Ok(())
}

fn abc_binomial(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let props = f.iters.unwrap_or(60_000);
    let eps = f.epsilon.unwrap_or(0.0);
    r.param("iters", props).param("epsilon", eps).param("observed", 2).param("trials", 5);
    let out = abc_posterior(
        draw::uniform,
        |p: &f64, rng: &mut RngState| draw::binomial(rng, 5, *p),
        |x: &u64| *x,
        &2u64,
        eps,
        |a: &u64, b: &u64| a.abs_diff(*b) as f64,
        props,
        rng,
    )?;
    let exact = ScalarDistribution::beta(3.0, 4.0)?;
    let m = out.accepted.iter().sum::<f64>() / out.accepted.len() as f64;
    r.estimate("acceptance_rate", out.acceptance_rate()).estimate("mean", m).estimate("exact_mean", 3.0 / 7.0);
    r.diagnostic("accepted", out.accepted.len() as f64);
    r.diagnostic("ks_vs_exact", ks_statistic(&out.accepted, |x| exact.cdf(x).unwrap_or(f64::NAN)));
    r.diagnostic("ks_critical_1pct", ks_critical(out.accepted.len(), 0.01));
    Ok(())
}

fn ar1(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let x: Vec<f64> = match &f.data {
        Some(s) => {
            if f.n.is_some() || f.beta.is_some() {
                return Err(Error::Parameter("--n and --beta only apply to simulated data".into()));
            }
            parse_list(s)?
        }
        None => {
            let (n, rho) = (f.n.unwrap_or(100), f.beta.unwrap_or(0.5));
            r.param("n", n).param("rho", rho);
            let mut v = Vec::with_capacity(n);
            let mut prev = 0.0;
            for _ in 0..n {
                prev = rho * prev + draw::normal(rng, 0.0, 1.0);
                v.push(prev);
            }
            v
        }
    };
    if f.data.is_some() {
        r.param("data", list_string(&x));
    }
    let post = ar1_posterior(&x)?;
    let (df, loc, scale2) = post.predictive();
    r.estimate("rho_mean", post.mu)
        .estimate("rho_scale", post.nu2.sqrt())
        .estimate("df", post.marginal_df())
        .estimate("predictive_location", loc)
        .estimate("predictive_scale", scale2.sqrt());
    r.diagnostic("predictive_df", df);
    Ok(())
}

fn bayes_factor_mc(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let (xbar, ybar) = (f.xbar.unwrap_or(0.5), f.ybar.unwrap_or(0.0));
    let (s2, n, tau) = (f.s2.unwrap_or(1.0), f.n.unwrap_or(10), f.tau.unwrap_or(1.0));
    let sims = f.iters.unwrap_or(100_000);
    r.param("xbar", xbar).param("ybar", ybar).param("s2", s2).param("n", n).param("tau", tau).param("iters", sims);
    let est = bayes_factor_mc_two_sample(xbar, ybar, s2, n, tau, sims, rng)?;
    r.estimate("bayes_factor", est.value).diagnostic("std_error", est.std_error);
    Ok(())
}

fn harmonic_mean(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let draws = f.iters.unwrap_or(10_000);
    let reps = f.reps.unwrap_or(10);
    let n = f.n.unwrap_or(8);
    r.param("iters", draws).param("reps", reps).param("n", n);
    for (label, shape) in [("diffuse", 1e-3), ("unit", 1.0)] {
        let mut off = 0;
        let mut worst: f64 = 0.0;
        for k in 0..reps {
            let mut sub = rng.split(k as u64);
            let data: Vec<f64> = (0..n).map(|_| draw::normal(&mut sub, 0.0, 1.0)).collect();
            let ll = precision_posterior_loglik(&data, shape, shape, draws, &mut sub)?;
            let gap = (log_harmonic_mean_evidence(&ll)? - log_exact_precision_evidence(&data, shape, shape)?)
                / 10f64.ln();
            off += (gap.abs() >= 1.0) as usize;
            worst = worst.max(gap.abs());
            r.diagnostic(&format!("{label}.log10_gap.{k:02}"), gap);
        }
        r.estimate(&format!("{label}.seeds_off_10x"), off as f64);
        r.estimate(&format!("{label}.max_log10_gap"), worst);
    }
    Ok(())
}

fn accept_reject_exp(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let budget = f.iters.unwrap_or(100_000) as u64;
    let (planted, m_tilde) = (3.0, 4.5);
    r.param("iters", budget).param("planted", planted).param("envelope", m_tilde);
    let target = move |x: f64| {
        if (0.0..=1.0).contains(&x) {
            (planted * 6.0 * x * (1.0 - x)).ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let unif = ScalarDistribution::beta(1.0, 1.0)?;
    let (mut trials, mut draws, mut per_draw) = (0u64, 0usize, Vec::new());
    while trials < budget {
        let rep = accept_reject(target, &unif, m_tilde, 1, rng)?;
        trials += rep.trials;
        draws += 1;
        per_draw.push(rep.trials as f64);
    }
    let rep = bayesdesk::montecarlo::ArReport { draws: vec![0.0; draws], trials, m_tilde };
    let c = estimate_normalizing_constant(&rep)?;
    let mean_trials = trials as f64 / draws as f64;
    let sd = (per_draw.iter().map(|t| (t - mean_trials).powi(2)).sum::<f64>() / (draws as f64 - 1.0)).sqrt();
    r.estimate("reciprocal_mass", c)
        .estimate("planted_constant", 1.0 / c)
        .estimate("mean_trials", mean_trials)
        .estimate("expected_trials", m_tilde / planted);
    r.diagnostic("accepted", draws as f64).diagnostic("trials", trials as f64);
    r.diagnostic("mean_trials_se", sd / (draws as f64).sqrt());
    Ok(())
}

fn hpd_cauchy(f: &Flags, _: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let data: Vec<f64> = match &f.data {
        Some(s) => parse_list(s)?,
        None => vec![0.0, 5.0, 9.0],
    };
    let alpha = f.alpha.unwrap_or(0.95);
    let prior_var = f.tau.unwrap_or(10.0).powi(2);
    r.param("data", list_string(&data)).param("alpha", alpha).param("tau", prior_var.sqrt());
    let grid: Vec<f64> = (0..=40_000).map(|i| -20.0 + 40.0 * i as f64 / 40_000.0).collect();
    let hpd = hpd_from_grid(|t| cauchy_location_log_posterior(t, &data, prior_var), &grid, alpha)?;
    r.estimate("level", hpd.level).estimate("mass", hpd.mass).estimate("intervals", hpd.intervals.len() as f64);
    for (i, (lo, hi)) in hpd.intervals.iter().enumerate() {
        r.estimate(&format!("interval.{i}.lower"), *lo).estimate(&format!("interval.{i}.upper"), *hi);
    }
    Ok(())
}

fn random_lag_polynomial(rng: &mut RngState) -> Result<LagPolynomial> {
    let p = 1 + (draw::uniform(rng) * 10.0) as usize;
    if draw::uniform(rng) < 0.5 {
        let mut roots = Vec::new();
        while roots.len() < p {
            let m = 1.3 * draw::uniform(rng);
            if roots.len() + 2 <= p && draw::uniform(rng) < 0.5 {
                let z = Complex64::from_polar(m, std::f64::consts::PI * draw::uniform(rng));
                roots.extend([z, z.conj()]);
            } else {
                roots.push(Complex64::new(if draw::uniform(rng) < 0.5 { m } else { -m }, 0.0));
            }
        }
        ar_coeffs_from_roots(&roots)
    } else {
        let scale = 1.5 / p as f64;
        LagPolynomial::from_rhos(&(0..p).map(|_| scale * (2.0 * draw::uniform(rng) - 1.0)).collect::<Vec<_>>())
    }
}

fn schur_test(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let count = f.iters.unwrap_or(10_000);
    r.param("iters", count);
    let (mut agree, mut disagree, mut boundary, mut causal) = (0, 0, 0, 0);
    for _ in 0..count {
        let poly = random_lag_polynomial(rng)?;
        match schur_root_test(&poly) {
            Ok(rep) => {
                causal += rep.all_outside as usize;
                if rep.all_outside == poly.roots_outside() {
                    agree += 1;
                } else {
                    disagree += 1;
                }
            }
            Err(Error::BoundaryRoot) => boundary += 1,
            Err(e) => return Err(e),
        }
    }
    r.estimate("agreements", agree as f64).estimate("disagreements", disagree as f64);
    r.diagnostic("boundary", boundary as f64).diagnostic("causal", causal as f64);
    Ok(())
}

fn forward_filter(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let k = f.colors.unwrap_or(2) as usize;
    let len = f.n.unwrap_or(6);
    if k == 0 || len < 2 || (k as f64).powi(len as i32 - 1) > 1e7 {
        return Err(Error::Parameter("need at least one state, at least two points and at most 1e7 paths".into()));
    }
    r.param("states", k).param("n", len);
    let row = |rng: &mut RngState| {
        let w: Vec<f64> = (0..k).map(|_| draw::uniform_open(rng)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let trans: Vec<Vec<f64>> = (0..k).map(|_| row(rng)).collect();
    let init = row(rng);
    let params: Vec<(f64, f64)> = (0..k).map(|_| (2.0 * draw::uniform(rng) - 1.0, 0.2 + draw::uniform(rng))).collect();
    let x: Vec<f64> = (0..len).map(|_| draw::normal(rng, 0.0, 1.0)).collect();
    let emit = |i: usize, prev: f64, xt: f64| {
        let (rho, s2) = params[i];
        -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (xt - rho * prev).powi(2) / (2.0 * s2)
    };
    let out = hmm_forward_loglik(&HmmSpec::new(trans.clone(), emit)?, &x, &init)?;
    let steps = len - 1;
    let mut total = 0.0;
    for code in 0..k.pow(steps as u32) {
        let (mut c, mut prev_state, mut lp) = (code, 0, 0.0);
        for t in 0..steps {
            let s = c % k;
            c /= k;
            lp += if t == 0 { init[s].ln() } else { trans[prev_state][s].ln() };
            lp += emit(s, x[t], x[t + 1]);
            prev_state = s;
        }
        total += lp.exp();
    }
    r.estimate("loglik", out.loglik).estimate("enumerated", total.ln());
    r.diagnostic("abs_difference", (out.loglik - total.ln()).abs());
    Ok(())
}

fn partition_exact(f: &Flags, _: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let (rows, cols) = (f.rows.unwrap_or(3), f.cols.unwrap_or(5));
    let (beta, colors) = (f.beta.unwrap_or(0.0), f.colors.unwrap_or(2));
    r.param("rows", rows).param("cols", cols).param("beta", beta).param("colors", colors);
    let hist = energy_histogram(rows, cols, colors, Neighborhood::Four)?;
    let z = hist.log_partition(beta);
    r.estimate("log_partition", z)
        .estimate("reciprocal_partition", (-z).exp())
        .estimate("mean_agreements", hist.mean_agreements(beta));
    r.diagnostic("max_agreements", (hist.counts.len() - 1) as f64);
    Ok(())
}

fn l4_cluster(f: &Flags, rng: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let (rows, cols) = (f.rows.unwrap_or(4), f.cols.unwrap_or(4));
    let (beta, colors) = (f.beta.unwrap_or(0.5), f.colors.unwrap_or(2));
    let (sweeps, starts) = (f.sweeps.unwrap_or(5_000), f.starts.unwrap_or(10));
    r.param("rows", rows).param("cols", cols).param("beta", beta).param("colors", colors);
    r.param("sweeps", sweeps).param("starts", starts);
    // noisy view of a left/right split
    let n = rows * cols;
    let truth: Vec<u8> = (0..n).map(|s| if s % cols < cols.div_ceil(2) { 0 } else { 1 }).collect();
    let obs: Vec<u8> = truth
        .iter()
        .map(|t| if draw::uniform(rng) < 0.2 { (draw::uniform(rng) * colors as f64) as u8 } else { *t })
        .collect();
    let field = |s: usize, g: u8| if g == obs[s] { 1.0 } else { 0.0 };
    let mut lattice = Lattice::random(rows, cols, colors, Neighborhood::Four, rng)?;
    let mut sampler = GibbsSampler::new(&lattice, beta, Schedule::RandomScan)?;
    let mut same = Matrix::zeros(n, n);
    for _ in 0..sweeps {
        sampler.sweep_with_field(&mut lattice, field, rng);
        let l = lattice.labels();
        for i in 0..n {
            for j in 0..n {
                if l[i] == l[j] {
                    same[(i, j)] += 1.0;
                }
            }
        }
    }
    let pair = same / sweeps as f64;
    let out = l4_clustering(&pair, colors, starts, rng)?;
    r.estimate("risk", out.risk);
    r.estimate("clusters", out.labels.iter().collect::<std::collections::BTreeSet<_>>().len() as f64);
    for (s, l) in out.labels.iter().enumerate() {
        r.estimate(&format!("label.{s:03}"), *l as f64);
    }
    r.diagnostic("worst_start_risk", out.starts.iter().map(|s| s.1).fold(0.0, f64::max));
    Ok(())
}

fn ising_2beta(f: &Flags, _: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let beta = f.beta.unwrap_or(1.0);
    r.param("beta", beta).param("rows", 1).param("cols", 2);
    let agree = exact_state_law_with(1, 2, 2, Neighborhood::Four, |x| beta * x.agreements() as f64)?;
    let pair_one = exact_state_law_with(1, 2, 2, Neighborhood::Four, |x| {
        2.0 * beta * x.labels().iter().all(|l| *l == 1) as u8 as f64
    })?;
    let names: BTreeMap<usize, &str> = [(0, "00"), (1, "10"), (2, "01"), (3, "11")].into();
    for (code, name) in &names {
        r.estimate(&format!("agreement.{name}"), agree[*code]);
        r.estimate(&format!("pair_one.{name}"), pair_one[*code]);
    }
    let tv = 0.5 * agree.iter().zip(&pair_one).map(|(a, b)| (a - b).abs()).sum::<f64>();
    r.diagnostic("total_variation", tv);
    Ok(())
}

fn beta_from_ci(f: &Flags, _: &mut RngState, r: &mut ExperimentReport) -> Result<()> {
    let v: Vec<f64> = match &f.data {
        Some(s) => parse_list(s)?,
        None => vec![0.4, 0.1, 0.6, 0.9],
    };
    let [m, lo, hi, cov] = v[..] else {
        return Err(Error::Parameter("--data takes mean,lower,upper,coverage".into()));
    };
    r.param("data", list_string(&v));
    let fit = beta_from_mean_ci(m, lo, hi, cov)?;
    r.estimate("a", fit.a).estimate("b", fit.b).estimate("scale", fit.scale).estimate("coverage", fit.achieved);
    r.diagnostic("coverage_error", (fit.achieved - cov).abs());
    Ok(())
}
