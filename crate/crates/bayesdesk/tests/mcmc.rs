mod common;

use bayesdesk::dist::{draw, ScalarDistribution};
use bayesdesk::linalg::{Matrix, Vector};
use bayesdesk::mcmc::*;
use bayesdesk::RngState;
use common::*;

fn ln_std_normal(x: f64) -> f64 {
    -x * x / 2.0
}

#[test]
fn independence_with_exact_proposal_always_accepts() {
    let g = ScalarDistribution::normal(0.0, 1.0).unwrap();
    let mut rng = RngState::new(1);
    let t = mh_chain(ln_std_normal, &KernelSpec::Independence(g), 0.3, 5_000, &mut rng).unwrap();
    assert_eq!(t.acceptance_rate(), Some(1.0));
    assert_eq!(t.warmup, 500);
}

#[test]
fn inverse_normal_target_mean() {
    let lf = |x: f64| if x > 0.0 { -1.5 * x.ln() - 1.5 * x - 2.0 / x } else { f64::NEG_INFINITY };
    let z = integrate_positive(|x| lf(x).exp(), 1e-6, 200.0, 1_000_000);
    let m = integrate_positive(|x| x * lf(x).exp(), 1e-6, 200.0, 1_000_000) / z;
    let g = ScalarDistribution::gamma(4.0 / 3.0, 1.0).unwrap();
    let mut rng = RngState::new(2);
    let t = mh_chain(lf, &KernelSpec::Independence(g), 1.0, 100_000, &mut rng).unwrap();
    let xs = t.kept(0);
    assert!((mean(&xs) - m).abs() < 3.0 * batch_se(&xs, 50), "{} {m}", mean(&xs));
}

#[test]
fn cauchy_walk_visits_three_modes() {
    let data = [0.0, 5.0, 9.0];
    let lf = |t: f64| cauchy_location_log_posterior(t, &data, 100.0);
    let k = KernelSpec::RandomWalk(ScalarDistribution::cauchy(0.0, 9.0).unwrap());
    let mut rng = RngState::new(3);
    let t = mh_chain(lf, &k, 0.0, 100_000, &mut rng).unwrap();
    let xs = t.column(0);
    for mode in [0.0, 5.0, 9.0] {
        let share = xs.iter().filter(|x| (**x - mode).abs() <= 1.0).count() as f64 / xs.len() as f64;
        assert!(share >= 0.01, "mode {mode}: {share}");
    }
}

fn one_step_law(kernel: &KernelSpec, lf: impl Fn(f64) -> f64 + Copy, start: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = RngState::new(seed);
    start
        .iter()
        .map(|&x| mh_chain(lf, kernel, x, 1, &mut rng).unwrap().column(0)[0])
        .collect()
}

#[test]
fn kernels_preserve_their_target() {
    let n = 10_000;
    let mut rng = RngState::new(4);
    let normals: Vec<f64> = (0..n).map(|_| draw::std_normal(&mut rng)).collect();
    let normal_kernels = [KernelSpec::Independence(ScalarDistribution::normal(0.5, 3.0).unwrap()),
        KernelSpec::RandomWalk(ScalarDistribution::normal(0.0, 2.0).unwrap()),
        KernelSpec::RandomWalk(ScalarDistribution::cauchy(0.0, 1.0).unwrap()),
        KernelSpec::RandomWalkMixture { variances: vec![0.01, 0.1, 1.0, 10.0, 100.0] }];
    for (i, k) in normal_kernels.iter().enumerate() {
        let out = one_step_law(k, ln_std_normal, &normals, 40 + i as u64);
        assert!(ks_stat(&out, norm_cdf) < ks_crit_1pct(n), "{k:?}");
    }
    let lg = |x: f64| if x > 0.0 { 2.0 * x.ln() - x } else { f64::NEG_INFINITY };
    let gammas: Vec<f64> = (0..n).map(|_| draw::gamma(&mut rng, 3.0, 1.0)).collect();
    let out = one_step_law(&KernelSpec::LogRandomWalk { scale: 0.8 }, lg, &gammas, 50);
    assert!(ks_stat(&out, |x| 1.0 - (-x).exp() * (1.0 + x + x * x / 2.0)) < ks_crit_1pct(n));
    let lb = |x: f64| if x > 0.0 && x < 1.0 { x.ln() + 2.0 * (1.0 - x).ln() } else { f64::NEG_INFINITY };
    let betas: Vec<f64> = (0..n).map(|_| draw::beta(&mut rng, 2.0, 3.0)).collect();
    let out = one_step_law(&KernelSpec::LogitRandomWalk { scale: 1.0 }, lb, &betas, 51);
    assert!(ks_stat(&out, beta_cdf_fn(2.0, 3.0)) < ks_crit_1pct(n));
}

#[test]
fn acceptance_ratio_reverses() {
    let lg = |x: f64| if x > 0.0 { 2.0 * x.ln() - x } else { f64::NEG_INFINITY };
    let lb = |x: f64| if x > 0.0 && x < 1.0 { x.ln() + 2.0 * (1.0 - x).ln() } else { f64::NEG_INFINITY };
    let mut rng = RngState::new(5);
    let ind = KernelSpec::Independence(ScalarDistribution::gamma(2.0, 0.5).unwrap());
    let mix = KernelSpec::RandomWalkMixture { variances: vec![0.1, 1.0] };
    let log = KernelSpec::LogRandomWalk { scale: 1.0 };
    let logit = KernelSpec::LogitRandomWalk { scale: 1.0 };
    for _ in 0..1000 {
        let (x, y) = (draw::gamma(&mut rng, 2.0, 1.0), draw::gamma(&mut rng, 2.0, 1.0));
        for k in [&ind, &mix, &log] {
            let r = mh_log_ratio(&lg, k, x, y).exp();
            let s = mh_log_ratio(&lg, k, y, x).exp();
            assert!((r * s - 1.0).abs() < 1e-10);
        }
        let (u, v) = (draw::beta(&mut rng, 2.0, 2.0), draw::beta(&mut rng, 2.0, 2.0));
        let r = mh_log_ratio(&lb, &logit, u, v).exp() * mh_log_ratio(&lb, &logit, v, u).exp();
        assert!((r - 1.0).abs() < 1e-10);
    }
}

#[test]
fn log_walk_reduces_to_likelihood_ratio() {
    // π(σ²) = 1/σ²: target = likelihood/σ², and the Jacobian cancels the prior
    let lik = |s: f64| -2.0 * s.ln() - 1.5 / s;
    let lf = |s: f64| if s > 0.0 { lik(s) - s.ln() } else { f64::NEG_INFINITY };
    let k = KernelSpec::LogRandomWalk { scale: 1.0 };
    for (x, y) in [(0.5, 2.0), (1.3, 0.2), (4.0, 4.5)] {
        assert!((mh_log_ratio(&lf, &k, x, y) - (lik(y) - lik(x))).abs() < 1e-12);
    }
}

#[test]
fn log_walk_reproduces_inverse_gamma_moments() {
    let ig = ScalarDistribution::inverse_gamma(5.0, 4.0).unwrap();
    let lf = |s: f64| ig.log_pdf(s).unwrap();
    let mut rng = RngState::new(6);
    let t = mh_chain(lf, &KernelSpec::LogRandomWalk { scale: 0.7 }, 1.0, 400_000, &mut rng).unwrap();
    let xs = t.kept(0);
    assert!((mean(&xs) - 1.0).abs() < 3.0 * batch_se(&xs, 50));
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    // E[σ⁴] = b²/((a−1)(a−2))
    assert!((mean(&sq) - 16.0 / 12.0).abs() < 3.0 * batch_se(&sq, 50));
}

#[test]
fn mixture_walk_records_scales() {
    let mut rng = RngState::new(7);
    let k = KernelSpec::RandomWalkMixture { variances: vec![0.01, 0.1, 1.0, 10.0, 100.0] };
    let t = mh_chain(ln_std_normal, &k, 0.0, 50_000, &mut rng).unwrap();
    let idx = t.scale_index().unwrap();
    assert_eq!(idx.len(), 50_000);
    for s in 0..5 {
        let share = idx.iter().filter(|i| **i == s).count() as f64 / 50_000.0;
        assert!((share - 0.2).abs() < 0.01);
    }
}

#[test]
fn normal_gibbs_degenerate_prior_pins_theta() {
    let mut rng = RngState::new(8);
    let data: Vec<f64> = (0..50).map(|_| draw::normal(&mut rng, 3.0, 1.0)).collect();
    let t = gibbs_normal_model(&data, (1.5, 1e-12), (2.0, 2.0), 2_000, &mut rng).unwrap();
    assert!(t.column(0).iter().all(|v| (v - 1.5).abs() < 1e-5));
    assert!(gibbs_normal_model(&[], (0.0, 1.0), (1.0, 1.0), 10, &mut rng).is_err());
    assert!(gibbs_normal_model(&data, (0.0, -1.0), (1.0, 1.0), 10, &mut rng).is_err());
}

#[test]
fn normal_gibbs_large_sample() {
    let mut rng = RngState::new(9);
    let data: Vec<f64> = (0..1492).map(|_| draw::std_normal(&mut rng)).collect();
    let t = gibbs_normal_model(&data, (0.0, 5.0), (2.5, 2.5), 20_000, &mut rng).unwrap();
    let th = t.kept(0);
    let sd = var(&th).sqrt();
    assert!(mean(&th).abs() < 4.0 * sd);
    // σ² chain against the Rao–Blackwellized mixture of its IG full conditionals
    let n = data.len() as f64;
    let rb: Vec<(f64, f64)> = thin(&th, 20)
        .iter()
        .map(|m| (n / 2.0 + 2.5, 0.5 * data.iter().map(|x| (x - m).powi(2)).sum::<f64>() + 2.5))
        .collect();
    let cdf = |s: f64| {
        rb.iter()
            .map(|(a, b)| ScalarDistribution::inverse_gamma(*a, *b).unwrap().cdf(s).unwrap())
            .sum::<f64>()
            / rb.len() as f64
    };
    let s2 = thin(&t.kept(1), 5);
    assert!(ks_stat(&s2, cdf) < ks_crit_1pct(s2.len()));
}

#[test]
fn beta_binomial_theta_marginal() {
    let mut rng = RngState::new(10);
    let t = gibbs_beta_binomial(18, 2.5, 2.5, 100_000, &mut rng).unwrap();
    let th = thin(&t.kept(0), 10);
    assert!(ks_stat(&th, beta_cdf_fn(2.5, 2.5)) < ks_crit_1pct(th.len()));
    let iid: Vec<f64> = (0..th.len()).map(|_| draw::beta(&mut rng, 2.5, 2.5)).collect();
    let n = th.len() as f64;
    assert!(ks_two(&th, &iid) < 1.628 * (2.0 / n).sqrt());
    let eta = t.kept(1);
    assert!((mean(&eta) - 9.0).abs() < 3.0 * batch_se(&eta, 50));
}

#[test]
fn beta_binomial_strong_prior() {
    let mut rng = RngState::new(11);
    let t = gibbs_beta_binomial(18, 1e6, 1e6, 2_000, &mut rng).unwrap();
    assert!(t.column(0).iter().all(|v| (v - 0.5).abs() < 0.01));
    assert!(gibbs_beta_binomial(0, 1.0, 1.0, 10, &mut rng).is_err());
}

fn probit_data(seed: u64) -> (Vec<bool>, Matrix) {
    let mut rng = RngState::new(seed);
    let x = Matrix::from_fn(200, 2, |_, _| draw::std_normal(&mut rng));
    let y = (0..200)
        .map(|i| x[(i, 0)] - x[(i, 1)] + draw::std_normal(&mut rng) > 0.0)
        .collect();
    (y, x)
}

#[test]
fn probit_recovers_coefficients() {
    let (y, x) = probit_data(12);
    let mut rng = RngState::new(13);
    let run = gibbs_probit(&y, &x, 5_000, &mut rng).unwrap();
    assert!(!run.degenerate);
    assert!((mean(&run.trace.kept(0)) - 1.0).abs() < 0.5);
    assert!((mean(&run.trace.kept(1)) + 1.0).abs() < 0.5);
}

#[test]
fn probit_latents_follow_signs() {
    let (y, x) = probit_data(14);
    let design = ProbitDesign::new(&y, &x).unwrap();
    let mut rng = RngState::new(15);
    let mut beta = Vector::zeros(2);
    for _ in 0..2_000 {
        let z = design.draw_latent(&beta, &mut rng);
        assert!(z.iter().zip(&y).all(|(zi, yi)| (*zi > 0.0) == *yi));
        beta = design.draw_beta(&z, &mut rng).unwrap();
    }
}

#[test]
fn probit_orthonormal_design_mean() {
    let x = Matrix::from_row_slice(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5]);
    let y = vec![true, false, true, false];
    let design = ProbitDesign::new(&y, &x).unwrap();
    let z = Vector::from_vec(vec![0.3, -1.2, 2.0, -0.1]);
    let m = design.conditional_mean(&z).unwrap();
    let direct = x.transpose() * &z;
    assert!((m - direct).amax() < 1e-14);
    let all = vec![true; 4];
    let mut rng = RngState::new(16);
    assert!(gibbs_probit(&all, &x, 10, &mut rng).unwrap().degenerate);
    let rank = Matrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
    assert!(gibbs_probit(&y, &rank, 10, &mut rng).is_err());
}

#[test]
fn summary_of_constant_chain() {
    let mut t = Trace::new(&["c"]);
    for _ in 0..1_000 {
        t.push(&[2.5]);
    }
    let s = chain_summary(&t, 100).unwrap();
    assert_eq!(s.sds[0], 0.0);
    assert!(s.acf[0].iter().all(|v| *v == 1.0));
    assert_eq!(s.acf[0].len(), 91);
}

#[test]
fn summary_acf_iid_and_ar1() {
    let mut rng = RngState::new(17);
    let mut iid = Trace::new(&["z"]);
    let mut ar = Trace::new(&["a"]);
    let mut x = 0.0;
    for _ in 0..100_000 {
        iid.push(&[draw::std_normal(&mut rng)]);
        x = 0.9 * x + draw::std_normal(&mut rng);
        ar.push(&[x]);
    }
    let s = chain_summary(&iid, 0).unwrap();
    assert!(s.acf[0][1].abs() < 0.01);
    assert_eq!(s.acf[0].len(), 1001);
    let s = chain_summary(&ar, 1_000).unwrap();
    assert!((s.acf[0][1] - 0.9).abs() < 0.02);
}
