mod common;

use std::collections::BTreeMap;

use bayesdesk::capture::*;
use bayesdesk::diagnostics::{empirical_law, tv_distance};
use bayesdesk::dist::draw;
use bayesdesk::{Error, RngState};
use common::*;
use proptest::prelude::*;

const RECOVERIES: [u64; 10] = [20, 8, 5, 1, 2, 0, 2, 1, 1, 0];

fn ln_fact(n: u64) -> f64 {
    lgamma(n as f64 + 1.0)
}

fn ln_binom(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let mut v = ln_fact(n) - ln_fact(k) - ln_fact(n - k);
    if k > 0 {
        v += k as f64 * p.ln();
    }
    if n > k {
        v += (n - k) as f64 * (1.0 - p).ln();
    }
    v
}

fn normalised(log_k: &[f64]) -> Vec<f64> {
    let m = log_k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_k.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn law_from_pmf(lo: u64, pmf: &[f64]) -> BTreeMap<u64, f64> {
    pmf.iter().enumerate().map(|(i, p)| (lo + i as u64, *p)).collect()
}

/// Exact law of N from the printed mass, summed directly to `hi`.
fn tstage_oracle(t: u64, n_plus: u64, n_c: u64, hi: u64) -> (u64, Vec<f64>) {
    let lo = n_plus.max(1);
    let log_k: Vec<f64> = (lo..=hi)
        .map(|n| {
            ln_fact(n - 1) - ln_fact(n - n_plus) + ln_fact(t * n - n_c) - ln_fact(t * n + 1)
        })
        .collect();
    (lo, normalised(&log_k))
}

#[test]
fn uniform_prior_normalizer_and_median() {
    let post = uniform_prior_posterior(3);
    assert_eq!(post.normalizer(), 3.0);
    assert_eq!(post.median(), 5);
    assert!(post.mean().is_infinite());
    let zero = uniform_prior_posterior(0);
    assert_eq!(zero.support_min(), 1);
    assert_eq!(zero.median(), 1);
    assert_eq!(zero.mass(0), 0.0);
}

#[test]
fn uniform_prior_cdf_hits_half_exactly() {
    // Σ_{N=5}^{9} 1/(N(N+1)) as an exact fraction, times the normalizer 5.
    let (mut num, mut den) = (0u128, 1u128);
    for n in 5u128..=9 {
        let d = n * (n + 1);
        num = num * d + den;
        den *= d;
    }
    assert_eq!(5 * num * 2, den);
    assert_eq!(uniform_prior_posterior(5).cdf(9), 0.5);
    assert!(uniform_prior_posterior(5).cdf(8) < 0.5);
    for n_plus in [0, 1, 3, 10, 57] {
        let post = uniform_prior_posterior(n_plus);
        let m = post.median();
        assert_eq!(m, 2 * n_plus.max(1) - 1);
        assert!(post.cdf(m) >= 0.5);
        assert!(m == post.support_min() || post.cdf(m - 1) < 0.5);
    }
}

#[test]
fn tag_recovery_reproduces_published_summaries() {
    let post = tag_recovery_posterior(32, &RECOVERIES, TagRecoveryForm::Printed, Some(10_000)).unwrap();
    assert!((post.mean() - 282.4).abs() < 0.1, "mean {}", post.mean());
    assert_eq!(post.median_offset(), 243);
    assert_eq!(post.median(), 32 + 243);
    assert!(post.tail_bound() < 1e-8);
    let crude = tag_recovery_crude_estimate(32, &RECOVERIES).unwrap();
    assert!((crude - 256.0).abs() < 1e-9);
}

#[test]
fn tag_recovery_matches_direct_summation() {
    let n1 = 32u64;
    let n_dot = n1 + RECOVERIES.iter().sum::<u64>();
    for (form, shift) in [(TagRecoveryForm::Printed, 11 * n1), (TagRecoveryForm::Binomial, 10 * n1)] {
        let post = tag_recovery_posterior(n1, &RECOVERIES, form, None).unwrap();
        let log_k: Vec<f64> = (n1..=20_000)
            .map(|n| ln_fact(n - 1) - ln_fact(n - n1) + ln_fact(n + shift - n_dot) - ln_fact(n + shift + 1))
            .collect();
        let w = normalised(&log_k);
        let mean: f64 = w.iter().enumerate().map(|(i, p)| (n1 + i as u64) as f64 * p).sum();
        assert!((post.mean() - mean).abs() < 1e-6, "{form:?}: {} vs {mean}", post.mean());
    }
    let binomial = tag_recovery_posterior(n1, &RECOVERIES, TagRecoveryForm::Binomial, None).unwrap();
    assert!((binomial.mean() - 256.8).abs() < 0.1);
}

#[test]
fn tag_recovery_single_occasion_is_uniform_prior_shape() {
    let uniform = uniform_prior_posterior(3);
    let base = tag_recovery_log_kernel(3, &[], TagRecoveryForm::Binomial, 3);
    for n in [3u64, 4, 10, 100, 10_000] {
        let ratio = (tag_recovery_log_kernel(3, &[], TagRecoveryForm::Binomial, n) - base).exp();
        assert!((ratio - uniform.mass(n) / uniform.mass(3)).abs() < 1e-12);
    }
    assert_eq!(tag_recovery_log_kernel(3, &[], TagRecoveryForm::Binomial, 2), f64::NEG_INFINITY);
    // The 1/N² tail cannot be truncated at 1e-8 within the size guard.
    let err = tag_recovery_posterior(3, &[], TagRecoveryForm::Binomial, Some(100_000)).unwrap_err();
    assert!(matches!(err, Error::Support(_)));
}

#[test]
fn tag_recovery_flags_tight_support() {
    let err = tag_recovery_posterior(32, &RECOVERIES, TagRecoveryForm::Printed, Some(300)).unwrap_err();
    assert!(matches!(err, Error::Support(_)));
    assert!(tag_recovery_posterior(3, &[4], TagRecoveryForm::Printed, None).is_err());
}

#[test]
fn hypergeometric_recapture_moments() {
    let law = hypergeometric_recapture(100, 20, 30).unwrap();
    assert_eq!(law.expectation, 6.0);
    let total: f64 = law.pmf.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mean: f64 = law.pmf.iter().enumerate().map(|(i, p)| (law.min + i as u64) as f64 * p).sum();
    assert!((mean - 6.0).abs() < 1e-10);
    let full = hypergeometric_recapture(20, 20, 7).unwrap();
    assert_eq!(full.min, 7);
    assert_eq!(full.pmf.len(), 1);
    assert!((full.pmf[0] - 1.0).abs() < 1e-12);
    assert!(hypergeometric_recapture(10, 11, 3).is_err());
}

#[test]
fn darroch_mean_and_oracle() {
    let data = TwoStageData::new(20, 30, 5).unwrap();
    assert_eq!((data.n_plus(), data.n_c()), (45, 50));
    let post = darroch_posterior(&data, None).unwrap();
    assert!((post.mean() - 130.91).abs() < 0.01, "mean {}", post.mean());
    let (lo, w) = tstage_oracle(2, 45, 50, 2_000_000);
    let mean: f64 = w.iter().enumerate().map(|(i, p)| (lo + i as u64) as f64 * p).sum();
    assert!((post.mean() - mean).abs() < 1e-3);
    assert_eq!(post.mass(44), 0.0);
    let total: f64 = post.masses().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn darroch_full_recapture_concentrates_at_first_sample() {
    let data = TwoStageData::new(20, 20, 20).unwrap();
    let post = darroch_posterior(&data, None).unwrap();
    let (lo, w) = tstage_oracle(2, 20, 40, 5_000);
    let oracle_mode = lo + w.iter().enumerate().fold((0, 0.0), |b, (i, p)| if *p > b.1 { (i, *p) } else { b }).0 as u64;
    assert_eq!(post.mode(), oracle_mode);
    assert!(post.mode().abs_diff(20) <= 2);
}

#[test]
fn darroch_mean_decreases_with_recaptures() {
    for (n1, n2) in [(10u64, 12u64), (20, 30), (15, 15)] {
        let means: Vec<f64> = (1..=n1.min(n2))
            .map(|m2| darroch_posterior(&TwoStageData::new(n1, n2, m2).unwrap(), None).unwrap().mean())
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{n1},{n2}: {means:?}");
    }
}

#[test]
fn darroch_mle_cases() {
    let data = TwoStageData::new(20, 30, 5).unwrap();
    assert_eq!(darroch_mle(&data), Some(120));
    assert_eq!(darroch_mle(&TwoStageData::new(20, 30, 0).unwrap()), None);
    // ℓ(N+1)/ℓ(N) = (N+1−n1)(N+1−n2) / ((N+1−n⁺)(N+1)).
    let ratio = |n: f64| (n + 1.0 - 20.0) * (n + 1.0 - 30.0) / ((n + 1.0 - 45.0) * (n + 1.0));
    assert!(ratio(119.0) >= 1.0);
    assert!(ratio(120.0) <= 1.0);
    let l = |n| darroch_log_likelihood(&data, n);
    assert!(l(120) >= l(119) - 1e-12 && l(120) >= l(121));
    for (n1, n2, m2) in [(7u64, 9u64, 2u64), (13, 5, 4), (30, 40, 7)] {
        let d = TwoStageData::new(n1, n2, m2).unwrap();
        let mle = darroch_mle(&d).unwrap();
        let brute = (d.n_plus()..5_000).max_by(|a, b| {
            darroch_log_likelihood(&d, *a).partial_cmp(&darroch_log_likelihood(&d, *b)).unwrap().then(b.cmp(a))
        });
        assert!((darroch_log_likelihood(&d, mle) - darroch_log_likelihood(&d, brute.unwrap())).abs() < 1e-9);
    }
    assert!(TwoStageData::new(3, 4, 5).is_err());
}

#[test]
fn poisson_prior_gibbs_matches_exact_marginal() {
    let data = TwoStageData::new(15, 10, 5).unwrap();
    let (lambda, n_plus, n_c) = (50.0f64, 20u64, 25u64);
    assert_eq!((data.n_plus(), data.n_c()), (n_plus, n_c));
    let mut rng = RngState::new(31);
    let trace = twostage_gibbs(&data, PopulationPrior::Poisson(lambda), 100_000, &mut rng).unwrap();
    let ns: Vec<u64> = trace.column(0).iter().map(|v| *v as u64).collect();
    assert!(ns.iter().all(|n| *n >= n_plus));
    // π(N | data) ∝ λ^N/(N−n⁺)! · (2N−n^c)!/(2N+1)!
    let log_k: Vec<f64> = (n_plus..400)
        .map(|n| n as f64 * lambda.ln() - ln_fact(n - n_plus) + ln_fact(2 * n - n_c) - ln_fact(2 * n + 1))
        .collect();
    let exact = law_from_pmf(n_plus, &normalised(&log_k));
    let tv = tv_distance(&empirical_law(&ns[1_000..]), &exact);
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn poisson_prior_gibbs_with_no_captures_matches_forward_simulation() {
    let data = TwoStageData::new(0, 0, 0).unwrap();
    let lambda = 5.0;
    let mut rng = RngState::new(32);
    let trace = twostage_gibbs(&data, PopulationPrior::Poisson(lambda), 200_000, &mut rng).unwrap();
    let chain = trace.kept(0);
    let chain_mean = mean(&chain);
    let chain_se = batch_se(&chain, 50);
    // Forward: N ~ P(λ), p ~ U(0,1), keep draws with no capture on either occasion.
    let mut kept = Vec::new();
    let mut fwd = RngState::new(33);
    for _ in 0..1_000_000 {
        let n = draw::poisson(&mut fwd, lambda);
        let p = draw::uniform(&mut fwd);
        if draw::binomial(&mut fwd, n, p) == 0 && draw::binomial(&mut fwd, n, p) == 0 {
            kept.push(n as f64);
        }
    }
    let fwd_mean = mean(&kept);
    let fwd_se = se(&kept);
    let z = (chain_mean - fwd_mean).abs() / (chain_se.powi(2) + fwd_se.powi(2)).sqrt();
    assert!(z < 3.0, "chain {chain_mean} forward {fwd_mean} z {z}");
}

#[test]
fn p_conditional_with_no_captures_is_beta_one_two_n_plus_one() {
    let data = TwoStageData::new(0, 0, 0).unwrap();
    let mut rng = RngState::new(34);
    let trace = twostage_gibbs(&data, PopulationPrior::Poisson(4.0), 200_000, &mut rng).unwrap();
    // Row i draws p given the N of row i−1.
    let target_n = 3.0;
    let ps: Vec<f64> = (1..trace.iterations())
        .filter(|i| trace.row(i - 1)[0] == target_n)
        .map(|i| trace.row(i)[1])
        .collect();
    let ps = thin(&ps, 5);
    assert!(ps.len() > 1_000);
    let d = ks_stat(&ps, beta_cdf_fn(1.0, 2.0 * target_n + 1.0));
    assert!(d < ks_crit_1pct(ps.len()), "ks {d}");
}

#[test]
fn tstage_mh_matches_exact_summation() {
    let mut rng = RngState::new(35);
    let trace = tstage_mh_posterior(2, 10, 12, 100_000, &mut rng).unwrap();
    let ns: Vec<u64> = trace.column(0).iter().map(|v| *v as u64).collect();
    assert!(ns.iter().all(|n| *n >= 10));
    let (lo, w) = tstage_oracle(2, 10, 12, 20_000);
    let tv = tv_distance(&empirical_law(&ns[1_000..]), &law_from_pmf(lo, &w));
    assert!(tv < 0.02, "tv {tv}");
    let exact = tstage_posterior(2, 10, 12, None).unwrap();
    assert!(tv_distance(&law_from_pmf(lo, &w), &exact.masses().collect()) < 1e-6);
    let rate = trace.acceptance_rate().unwrap();
    assert!(rate > 0.05 && rate < 1.0);
}

#[test]
fn tstage_mh_p_conditional_is_listing_beta() {
    let mut rng = RngState::new(36);
    let trace = tstage_mh_posterior(3, 10, 14, 200_000, &mut rng).unwrap();
    let target_n = 12.0;
    let ps: Vec<f64> = (0..trace.iterations())
        .filter(|i| trace.row(*i)[0] == target_n)
        .map(|i| trace.row(i)[1])
        .collect();
    let ps = thin(&ps, 5);
    assert!(ps.len() > 1_000);
    let d = ks_stat(&ps, beta_cdf_fn(15.0, 3.0 * target_n - 14.0 + 1.0));
    assert!(d < ks_crit_1pct(ps.len()), "ks {d}");
}

#[test]
fn tstage_acceptance_is_one_for_identical_proposal() {
    for (n, p) in [(10u64, 0.3), (55, 0.01), (12, 0.9)] {
        assert_eq!(tstage_log_acceptance(2, 10, p, n, n), 0.0);
    }
    assert_eq!(tstage_log_acceptance(2, 10, 0.3, 12, 9), f64::NEG_INFINITY);
}

#[test]
fn tstage_stats_examples() {
    let s = tstage_sufficient_stats(&[5, 3], &[2]).unwrap();
    assert_eq!((s.n1, s.n_plus, s.n_star, s.m_plus), (5, 6, 11, 2));
    let all = tstage_sufficient_stats(&[6, 4, 5], &[4, 5]).unwrap();
    assert_eq!(all.n_plus, 6);
    assert!(matches!(tstage_sufficient_stats(&[5, 3], &[]), Err(Error::Dimension(_))));
    assert!(tstage_sufficient_stats(&[5, 3], &[4]).is_err());
}

proptest! {
    #[test]
    fn tstage_exponents_match_stagewise_product(
        caps in prop::collection::vec(0u64..8, 2..6),
        rec_seed in prop::collection::vec(0.0f64..1.0, 5),
        extra in 0u64..20,
    ) {
        let t = caps.len();
        let mut recs = Vec::new();
        let mut marked = caps[0];
        for j in 1..t {
            let m = ((caps[j].min(marked) as f64) * rec_seed[j - 1]).floor() as u64;
            recs.push(m);
            marked += caps[j] - m;
        }
        let n = marked + extra;
        let stats = tstage_sufficient_stats(&caps, &recs).unwrap();
        let e = stats.exponents(n).unwrap();
        // Tally exponents binomial by binomial.
        let (mut ep, mut enp, mut eq, mut enq) = (caps[0], n - caps[0], 0, 0);
        let mut pool = caps[0];
        for j in 1..t {
            let fresh = caps[j] - recs[j - 1];
            ep += fresh;
            enp += n - pool - fresh;
            eq += recs[j - 1];
            enq += pool - recs[j - 1];
            pool += fresh;
        }
        prop_assert_eq!((e.p, e.not_p, e.q, e.not_q), (ep, enp, eq, enq));
    }

    #[test]
    fn darroch_posteriors_are_normalised(n1 in 1u64..40, n2 in 1u64..40, frac in 0.05f64..1.0) {
        let m2 = ((n1.min(n2) as f64 * frac).ceil() as u64).max(1);
        let post = darroch_posterior(&TwoStageData::new(n1, n2, m2).unwrap(), None).unwrap();
        let total: f64 = post.masses().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(post.masses().all(|(_, p)| p >= 0.0));
        prop_assert!(post.tail_bound() < 1e-8);
    }
}

#[test]
fn log_kernels_stable_at_large_population() {
    let post = tstage_posterior(2, 200_000, 300_000, None).unwrap();
    assert!(post.mean().is_finite());
    assert!(post.support_max() >= 200_000);
    assert!(post.tail_bound() < 1e-8);
}

#[allow(clippy::too_many_arguments)]
fn markloss_brute(n: u64, p: f64, q: f64, r: f64, n1: u64, n2: u64, m2: u64, k: u64) -> f64 {
    let mut total = 0.0;
    for z in 0..=n1 {
        if m2 > n1 - z || n2 < m2 || n2 - m2 > n - n1 + z || k > z {
            continue;
        }
        total += (ln_binom(n1, n, p)
            + ln_binom(z, n1, q)
            + ln_binom(k, z, r)
            + ln_binom(m2, n1 - z, p)
            + ln_binom(n2 - m2, n - n1 + z, p))
            .exp();
    }
    total.ln()
}

#[test]
fn markloss_matches_enumeration() {
    let data = MarkLossData { n1: 10, n2: 8, m2: 3, k: 1 };
    for (p, q, r) in [(0.3, 0.2, 0.5), (0.1, 0.6, 0.9), (0.7, 0.05, 0.2)] {
        let got = markloss_log_likelihood(30, p, q, r, &data).unwrap();
        let want = markloss_brute(30, p, q, r, 10, 8, 3, 1);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn markloss_degenerate_cases() {
    let data = MarkLossData { n1: 10, n2: 8, m2: 3, k: 0 };
    let got = markloss_log_likelihood(30, 0.4, 0.0, 1.0, &data).unwrap();
    let plain = ln_binom(10, 30, 0.4) + ln_binom(3, 10, 0.4) + ln_binom(5, 20, 0.4);
    assert!((got - plain).abs() < 1e-10);
    let too_many = MarkLossData { n1: 10, n2: 8, m2: 3, k: 8 };
    assert_eq!(markloss_log_likelihood(30, 0.4, 0.3, 0.5, &too_many).unwrap(), f64::NEG_INFINITY);
}

/// Joint pmf of (r1, r2) given n1, c2, c3, up to a constant.
fn openpop_joint(n1: u64, c2: u64, c3: u64, r1: u64, r2: u64, p: f64, q: f64) -> f64 {
    if r1 > n1 || c2 > n1 - r1 || r2 > n1 - r1 || c3 > n1 - r1 - r2 {
        return 0.0;
    }
    (ln_binom(r1, n1, q) + ln_binom(c2, n1 - r1, p) + ln_binom(r2, n1 - r1, q) + ln_binom(c3, n1 - r1 - r2, p))
        .exp()
}

#[test]
fn openpop_marginal_matches_enumeration_over_deaths() {
    let (n1, c2, c3, p, q) = (10u64, 3u64, 2u64, 0.3, 0.3);
    let data = OpenPopData::new(n1, c2, c3, 0).unwrap();
    let pmf = openpop_r1_pmf(&data, p, q, R1Method::Marginalized).unwrap();
    let raw: Vec<f64> = (0..=n1).map(|r1| (0..=n1).map(|r2| openpop_joint(n1, c2, c3, r1, r2, p, q)).sum()).collect();
    let s: f64 = raw.iter().sum();
    let tv: f64 = 0.5
        * raw
            .iter()
            .enumerate()
            .map(|(i, v)| (v / s - pmf.get(i).copied().unwrap_or(0.0)).abs())
            .sum::<f64>();
    assert!(tv < 1e-10, "tv {tv}");
}

#[test]
fn openpop_full_conditional_matches_joint() {
    let (n1, c2, c3, r2, p, q) = (12u64, 4u64, 2u64, 3u64, 0.4, 0.25);
    let data = OpenPopData::new(n1, c2, c3, r2).unwrap();
    let pmf = openpop_r1_pmf(&data, p, q, R1Method::FullConditional).unwrap();
    assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(pmf.len() as u64, data.r1_max() + 1);
    let raw: Vec<f64> = (0..=data.r1_max()).map(|r1| openpop_joint(n1, c2, c3, r1, r2, p, q)).collect();
    let s: f64 = raw.iter().sum();
    for (a, b) in raw.iter().zip(&pmf) {
        assert!((a / s - b).abs() < 1e-12);
    }
}

#[test]
fn openpop_no_deaths_without_mortality() {
    let data = OpenPopData::new(10, 3, 2, 1).unwrap();
    let mut rng = RngState::new(37);
    for method in [R1Method::FullConditional, R1Method::Marginalized, R1Method::AcceptReject] {
        for _ in 0..200 {
            assert_eq!(openpop_r1_sampler(&data, 0.3, 0.0, method, &mut rng).unwrap().value, 0);
        }
    }
    assert!(OpenPopData::new(5, 6, 0, 0).is_err());
}

#[test]
fn openpop_accept_reject_matches_full_conditional() {
    let data = OpenPopData::new(20, 5, 4, 3).unwrap();
    let (p, q) = (0.35, 0.2);
    let mut rng = RngState::new(38);
    let (draws, rate) = openpop_r1_accept_reject(&data, p, q, 100_000, &mut rng).unwrap();
    let pmf = openpop_r1_pmf(&data, p, q, R1Method::FullConditional).unwrap();
    let tv = tv_distance(&empirical_law(&draws), &law_from_pmf(0, &pmf));
    assert!(tv < 0.02, "tv {tv}");
    assert!(rate > 0.0 && rate <= 1.0);
    let single = openpop_r1_sampler(&data, p, q, R1Method::AcceptReject, &mut rng).unwrap();
    assert!(single.acceptance_rate.is_some());
}

#[test]
fn beta_from_interval_hits_coverage() {
    let fit = beta_from_mean_ci(0.4, 0.1, 0.6, 0.9).unwrap();
    assert!((fit.achieved - 0.9).abs() < 1e-6);
    let direct = beta_cdf(0.6, fit.a, fit.b) - beta_cdf(0.1, fit.a, fit.b);
    assert!((direct - 0.9).abs() < 1e-6, "oracle coverage {direct}");
    assert!((fit.a / (fit.a + fit.b) - 0.4).abs() < 1e-15);
}

#[test]
fn beta_from_interval_small_coverage_gives_diffuse_prior() {
    let fit = beta_from_mean_ci(0.4, 0.1, 0.6, 0.005).unwrap();
    assert!(fit.scale < 0.1, "scale {}", fit.scale);
    assert!(fit.achieved < 0.01);
    assert!(beta_from_mean_ci(0.4, 0.5, 0.6, 0.9).is_err());
    assert!(beta_from_mean_ci(0.4, 0.1, 0.6, 1.0).is_err());
}
