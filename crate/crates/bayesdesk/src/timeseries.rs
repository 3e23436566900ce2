//! AR(1) conjugate analysis, lag polynomials and stationarity checks, MA
//! autocovariances and the forward filter for Markov-switching series.

use num_complex::Complex64;

use crate::dist::student_log_pdf;
use crate::error::param;
use crate::linalg::{poly_roots, Matrix};
use crate::numeric::log_sum_exp;
use crate::{Error, Result};

/// Posterior of the AR(1) coefficient under π(ϱ, σ) = 1/σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArPosterior {
    /// Least-squares coefficient Σ x_{t−1}x_t / Σ x_{t−1}².
    pub mu: f64,
    /// Σ_{t<T} x_t².
    pub lag_energy: f64,
    /// Student scale² of the marginal.
    pub nu2: f64,
    /// Number of transitions.
    pub t: usize,
    /// Last observation.
    pub last: f64,
}

impl ArPosterior {
    /// Conditional variance of ϱ given σ².
    pub fn omega2(&self, sigma2: f64) -> f64 {
        sigma2 / self.lag_energy
    }

    /// Marginal of ϱ: Student with `T − 1` degrees of freedom.
    pub fn marginal_df(&self) -> f64 {
        self.t as f64 - 1.0
    }

    pub fn marginal_log_pdf(&self, rho: f64) -> f64 {
        student_log_pdf(rho, self.marginal_df(), self.mu, self.nu2)
    }

    /// One-step predictive of x_{T+1}: Student `(T − 1, μ x_T, ν²(Σ_{t<T} x_t² + x_T²))`.
    pub fn predictive(&self) -> (f64, f64, f64) {
        (self.marginal_df(), self.mu * self.last, self.nu2 * (self.lag_energy + self.last * self.last))
    }

    pub fn predictive_log_pdf(&self, x: f64) -> f64 {
        let (df, loc, scale2) = self.predictive();
        student_log_pdf(x, df, loc, scale2)
    }
}

/// Closed-form posterior from a series `x_0, …, x_T`.
pub fn ar1_posterior(x: &[f64]) -> Result<ArPosterior> {
    if x.len() < 3 {
        return param(format!("need at least three points (T ≥ 2), got {}", x.len()));
    }
    let t = x.len() - 1;
    let s00: f64 = x[..t].iter().map(|v| v * v).sum();
    let s11: f64 = x[1..].iter().map(|v| v * v).sum();
    let s01: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
    if s00 <= 0.0 {
        return Err(Error::Degenerate("lagged series is identically zero".into()));
    }
    let mu = s01 / s00;
    let nu2 = (s11 / s00 - mu * mu) / (t as f64 - 1.0);
    Ok(ArPosterior { mu, lag_energy: s00, nu2, t, last: x[t] })
}

/// `1 − ϱ₁u − … − ϱ_p u^p`, stored with the leading 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPolynomial {
    coeffs: Vec<f64>,
}

impl LagPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.first() != Some(&1.0) {
            return param("lag polynomial must have constant term 1");
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return param("lag polynomial coefficients must be finite");
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn from_rhos(rhos: &[f64]) -> Result<Self> {
        Self::new(std::iter::once(1.0).chain(rhos.iter().map(|r| -r)).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.coeffs[1..].iter().map(|c| -c).collect()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    /// The λᵢ with `P(u) = Π(1 − λᵢu)`: eigenvalues of the AR companion matrix,
    /// polished by Newton steps on the reflected polynomial.
    pub fn inverse_roots(&self) -> Vec<Complex64> {
        let rev: Vec<f64> = self.coeffs.iter().rev().copied().collect();
        poly_roots(&rev).into_iter().map(|z| newton_polish(&rev, z)).collect()
    }

    /// Companion-root verdict: every root of P lies outside the closed unit disk
    /// (modulus above 1 + 1e-10).
    pub fn roots_outside(&self) -> bool {
        self.inverse_roots().iter().all(|l| l.norm() * (1.0 + 1e-10) < 1.0)
    }

    /// Number of roots of P strictly inside the unit disk.
    pub fn roots_inside(&self) -> usize {
        self.inverse_roots().iter().filter(|l| l.norm() > 1.0).count()
    }
}

fn newton_polish(c: &[f64], mut z: Complex64) -> Complex64 {
    let eval = |z: Complex64| {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for a in c.iter().rev() {
            d = d * z + v;
            v = v * z + a;
        }
        (v, d)
    };
    for _ in 0..3 {
        let (v, d) = eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - v / d;
        if !next.is_finite() || eval(next).0.norm() >= v.norm() {
            break;
        }
        z = next;
    }
    z
}

/// Lag polynomial `Π(1 − λᵢu)` built by one multiplication per root.
/// Complex roots must come in conjugate pairs.
pub fn ar_coeffs_from_roots(lambdas: &[Complex64]) -> Result<LagPolynomial> {
    let mut unmatched: Vec<Complex64> = lambdas.iter().filter(|l| l.im != 0.0).copied().collect();
    while let Some(z) = unmatched.pop() {
        let tol = 1e-12 * (1.0 + z.norm());
        match unmatched.iter().position(|w| (*w - z.conj()).norm() <= tol) {
            Some(i) => {
                unmatched.swap_remove(i);
            }
            None => return param(format!("complex root {z} has no conjugate partner")),
        }
    }
    // psi[j] holds the coefficient of u^j after each multiplication.
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for l in lambdas {
        psi.push(Complex64::new(0.0, 0.0));
        for j in (1..psi.len()).rev() {
            psi[j] = psi[j] - l * psi[j - 1];
        }
    }
    LagPolynomial::new(psi.iter().map(|c| c.re).collect())
}

/// Outcome of the Schur stability recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurReport {
    pub all_outside: bool,
    /// `P*(0)` at each stage.
    pub reflections: Vec<f64>,
    /// Successive transforms, starting with the input polynomial.
    pub path: Vec<LagPolynomial>,
}

const BOUNDARY_TOL: f64 = 1e-12;

/// One Schur step `(P − a P*)/(1 − a²)` with `a = P*(0)`, the leading
/// coefficient. Returns `None` when `|a| = 1`.
pub fn schur_transform(poly: &LagPolynomial) -> Option<LagPolynomial> {
    let c = poly.coeffs();
    let p = c.len() - 1;
    if p == 0 {
        return Some(poly.clone());
    }
    let a = c[p];
    let denom = 1.0 - a * a;
    if denom.abs() <= BOUNDARY_TOL {
        return None;
    }
    let mut next: Vec<f64> = (0..p).map(|k| (c[k] - a * c[p - k]) / denom).collect();
    next[0] = 1.0;
    Some(LagPolynomial::new(next).expect("constant term is 1"))
}

/// All roots of `poly` lie outside the unit circle iff every Schur stage has
/// `|P*(0)| < 1`. A stage with `|P*(0)| = 1` yields [`Error::BoundaryRoot`].
pub fn schur_root_test(poly: &LagPolynomial) -> Result<SchurReport> {
    let mut path = vec![poly.clone()];
    let mut reflections = Vec::new();
    let mut current = poly.clone();
    while current.degree() > 0 {
        let a = *current.coeffs().last().unwrap();
        reflections.push(a);
        if (a.abs() - 1.0).abs() <= BOUNDARY_TOL {
            return Err(Error::BoundaryRoot);
        }
        if a.abs() > 1.0 {
            return Ok(SchurReport { all_outside: false, reflections, path });
        }
        current = schur_transform(&current).ok_or(Error::BoundaryRoot)?;
        path.push(current.clone());
    }
    Ok(SchurReport { all_outside: true, reflections, path })
}

/// Both roots of `1 − ϱ₁u − ϱ₂u²` outside the unit circle.
pub fn ar2_causality(rho1: f64, rho2: f64) -> bool {
    rho1 + rho2 < 1.0 && rho2 - rho1 < 1.0 && rho2.abs() < 1.0
}

/// Autocovariance at lag `s` of `x_t = ε_t + Σ ϑᵢ ε_{t−i}`.
pub fn ma_autocovariance(thetas: &[f64], sigma2: f64, s: i64) -> f64 {
    let lag = s.unsigned_abs() as usize;
    let q = thetas.len();
    if lag > q {
        return 0.0;
    }
    let theta = |i: usize| if i == 0 { 1.0 } else { thetas[i - 1] };
    sigma2 * (0..=q - lag).map(|i| theta(i) * theta(i + lag)).sum::<f64>()
}

/// Residuals of an MA(q) series written as affine functions of one initial
/// noise term: `ε̂_t = δ_t + β_t ε_{−which}` for `t = 1..T`.
///
/// The model is `x_t = μ + ε_t + Σ ϑ_j ε_{t−j}`, so
/// `ε̂_t = x_t − μ − Σ ϑ_j ε̂_{t−j}`. `initial` holds `ε_0, ε_{−1}, …, ε_{−q+1}`;
/// the entry at `which` is treated as free.
pub fn ma_residual_decomposition(
    x: &[f64],
    mu: f64,
    thetas: &[f64],
    initial: &[f64],
    which: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = thetas.len();
    if initial.len() != q {
        return Err(Error::Dimension(format!("{} initial noises for MA({q})", initial.len())));
    }
    if which >= q {
        return param(format!("initial index {which} out of range for MA({q})"));
    }
    // Index q + t − 1 holds time t; indices below q hold the initial noises.
    let mut delta: Vec<f64> = initial.iter().rev().copied().collect();
    let mut beta = vec![0.0; q];
    delta[q - 1 - which] = 0.0;
    beta[q - 1 - which] = 1.0;
    for (t, xt) in x.iter().enumerate() {
        let idx = q + t;
        let mut d = xt - mu;
        let mut b = 0.0;
        for (j, th) in thetas.iter().enumerate() {
            d -= th * delta[idx - j - 1];
            b -= th * beta[idx - j - 1];
        }
        delta.push(d);
        beta.push(b);
    }
    Ok((delta.split_off(q), beta.split_off(q)))
}

/// Stationary covariance `A = BAB′ + V` of `y_t = B y_{t−1} + (ε_t, 0, …)`
/// for a companion matrix `B`, by fixed-point iteration from `A = V`.
pub fn ar_stationary_covariance(b: &Matrix, sigma2: f64) -> Result<Matrix> {
    let p = b.nrows();
    if p == 0 || b.ncols() != p {
        return Err(Error::Dimension(format!("companion matrix must be square, got {}x{}", p, b.ncols())));
    }
    if !(sigma2 > 0.0) {
        return param(format!("innovation variance must be positive, got {sigma2}"));
    }
    for i in 1..p {
        for j in 0..p {
            if b[(i, j)] != if j + 1 == i { 1.0 } else { 0.0 } {
                return param("matrix is not in companion form");
            }
        }
    }
    let rhos: Vec<f64> = (0..p).map(|j| b[(0, j)]).collect();
    let stable = schur_root_test(&LagPolynomial::from_rhos(&rhos)?).map(|r| r.all_outside).unwrap_or(false);
    if !stable {
        return Err(Error::Divergence("companion matrix is not stationary".into()));
    }
    let mut v = Matrix::zeros(p, p);
    v[(0, 0)] = sigma2;
    let mut a = v.clone();
    for _ in 0..10_000_000 {
        let next = b * &a * b.transpose() + &v;
        let delta = (&next - &a).amax();
        a = next;
        if delta < 1e-12 * a.amax().max(1.0) {
            return Ok(a);
        }
    }
    Err(Error::Divergence("covariance iteration did not settle".into()))
}

/// Markov-switching model: hidden chain with `transition[i][j] = P(j | i)`
/// and emission log-density `emission(state, x_prev, x)`.
pub struct HmmSpec<F: Fn(usize, f64, f64) -> f64> {
    transition: Vec<Vec<f64>>,
    emission: F,
}

impl<F: Fn(usize, f64, f64) -> f64> HmmSpec<F> {
    pub fn new(transition: Vec<Vec<f64>>, emission: F) -> Result<Self> {
        let k = transition.len();
        if k == 0 {
            return Err(Error::Empty("no hidden states".into()));
        }
        for row in &transition {
            if row.len() != k {
                return Err(Error::Dimension("transition matrix must be square".into()));
            }
            if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return param("transition rows must be probability vectors");
            }
        }
        Ok(Self { transition, emission })
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn log_emission(&self, state: usize, prev: f64, x: f64) -> f64 {
        (self.emission)(state, prev, x)
    }
}

/// Output of the forward recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub loglik: f64,
    /// `φ_r`: law of the hidden state at step r given observations before r.
    pub predictive: Vec<Vec<f64>>,
    /// Step at which every state gave zero likelihood, if any.
    pub zero_at: Option<usize>,
}

/// Log-likelihood of `x_1..x_T` given `x_0 = x[0]`, with `initial` the law
/// of the first hidden state.
pub fn hmm_forward_loglik<F: Fn(usize, f64, f64) -> f64>(
    spec: &HmmSpec<F>,
    x: &[f64],
    initial: &[f64],
) -> Result<ForwardPass> {
    let k = spec.states();
    if initial.len() != k {
        return Err(Error::Dimension(format!("initial law has {} entries for {k} states", initial.len())));
    }
    if initial.iter().any(|p| !(*p >= 0.0)) || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return param("initial law must be a probability vector");
    }
    if x.len() < 2 {
        return Err(Error::Empty("need a conditioning value and at least one observation".into()));
    }
    let mut phi = initial.to_vec();
    let mut loglik = 0.0;
    let mut predictive = Vec::with_capacity(x.len() - 1);
    for r in 1..x.len() {
        predictive.push(phi.clone());
        let log_joint: Vec<f64> = (0..k)
            .map(|i| phi[i].ln() + spec.log_emission(i, x[r - 1], x[r]))
            .collect();
        let step = log_sum_exp(&log_joint);
        if step == f64::NEG_INFINITY || step.is_nan() {
            return Ok(ForwardPass { loglik: f64::NEG_INFINITY, predictive, zero_at: Some(r) });
        }
        loglik += step;
        let filtered: Vec<f64> = log_joint.iter().map(|l| (l - step).exp()).collect();
        phi = (0..k)
            .map(|j| (0..k).map(|i| filtered[i] * spec.transition[i][j]).sum::<f64>())
            .collect();
        let s: f64 = phi.iter().sum();
        phi.iter_mut().for_each(|v| *v /= s);
    }
    Ok(ForwardPass { loglik, predictive, zero_at: None })
}
