//! Potts and Ising fields on rectangular lattices: Gibbs sweeps, exact
//! enumeration, Hammersley–Clifford reconstruction, loss-based estimators,
//! the unicolor threshold experiment and ABC.

use std::fmt;
use std::str::FromStr;

use crate::dist::draw;
use crate::error::param;
use crate::linalg::Matrix;
use crate::numeric::log_sum_exp;
use crate::{Error, Result, RngState};

/// Largest configuration count any enumeration will visit.
pub const ENUMERATION_GUARD: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Neighborhood {
    Four,
    Eight,
}

/// Site labels on a `rows × cols` grid, row-major. Adjacency never wraps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    rows: usize,
    cols: usize,
    colors: u8,
    labels: Vec<u8>,
    neighborhood: Neighborhood,
}

impl Lattice {
    pub fn new(rows: usize, cols: usize, colors: u8, labels: Vec<u8>, neighborhood: Neighborhood) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return param("lattice dimensions must be at least 1");
        }
        if colors < 2 {
            return param("need at least two colors");
        }
        if labels.len() != rows * cols {
            return Err(Error::Dimension(format!("{} labels for a {rows}x{cols} lattice", labels.len())));
        }
        if let Some(l) = labels.iter().find(|l| **l >= colors) {
            return param(format!("label {l} out of range for {colors} colors"));
        }
        Ok(Self { rows, cols, colors, labels, neighborhood })
    }

    pub fn constant(rows: usize, cols: usize, colors: u8, label: u8, neighborhood: Neighborhood) -> Result<Self> {
        Self::new(rows, cols, colors, vec![label; rows * cols], neighborhood)
    }

    pub fn random(rows: usize, cols: usize, colors: u8, neighborhood: Neighborhood, rng: &mut RngState) -> Result<Self> {
        let labels = (0..rows * cols).map(|_| (draw::uniform(rng) * colors as f64) as u8).collect();
        Self::new(rows, cols, colors, labels, neighborhood)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn colors(&self) -> u8 {
        self.colors
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sites(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.cols + col]
    }

    pub fn set(&mut self, site: usize, label: u8) {
        assert!(label < self.colors, "label out of range");
        self.labels[site] = label;
    }

    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        neighbor_lists(self.rows, self.cols, self.neighborhood).swap_remove(site)
    }

    /// Number of unordered neighbor pairs with equal labels.
    pub fn agreements(&self) -> usize {
        let lists = neighbor_lists(self.rows, self.cols, self.neighborhood);
        agreements_with(&self.labels, &lists)
    }

    pub fn is_unicolor(&self) -> bool {
        self.labels.iter().all(|l| *l == self.labels[0])
    }

    /// No two four-neighbors share a label.
    pub fn is_checkerboard(&self) -> bool {
        let lists = neighbor_lists(self.rows, self.cols, Neighborhood::Four);
        agreements_with(&self.labels, &lists) == 0
    }

    /// Relabels every site through `perm`.
    pub fn permuted(&self, perm: &[u8]) -> Result<Self> {
        if perm.len() != self.colors as usize {
            return Err(Error::Dimension("color permutation has the wrong length".into()));
        }
        Self::new(
            self.rows,
            self.cols,
            self.colors,
            self.labels.iter().map(|l| perm[*l as usize]).collect(),
            self.neighborhood,
        )
    }

    /// Base-`colors` code with site 0 as the least significant digit.
    pub fn state_code(&self) -> u64 {
        self.labels.iter().rev().fold(0u64, |acc, l| acc * self.colors as u64 + *l as u64)
    }

    pub fn from_state_code(
        rows: usize,
        cols: usize,
        colors: u8,
        mut code: u64,
        neighborhood: Neighborhood,
    ) -> Result<Self> {
        let mut labels = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            labels.push((code % colors as u64) as u8);
            code /= colors as u64;
        }
        Self::new(rows, cols, colors, labels, neighborhood)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Lattice {
    type Err = Error;

    /// Rows of space-separated labels; four-neighbor adjacency and the
    /// smallest color count covering the labels (at least two).
    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in s.lines().filter(|l| !l.trim().is_empty()) {
            let row: std::result::Result<Vec<u8>, _> = line.split_whitespace().map(str::parse).collect();
            rows.push(row.map_err(|e| Error::Parameter(format!("bad label: {e}")))?);
        }
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged lattice rows".into()));
        }
        let labels: Vec<u8> = rows.concat();
        let colors = labels.iter().max().map(|m| m + 1).unwrap_or(2).max(2);
        Lattice::new(rows.len(), cols, colors, labels, Neighborhood::Four)
    }
}

/// Neighbor indices of every site, without wrap-around.
pub fn neighbor_lists(rows: usize, cols: usize, neighborhood: Neighborhood) -> Vec<Vec<usize>> {
    let offsets: &[(isize, isize)] = match neighborhood {
        Neighborhood::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        Neighborhood::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
    };
    (0..rows * cols)
        .map(|s| {
            let (r, c) = ((s / cols) as isize, (s % cols) as isize);
            offsets
                .iter()
                .map(|(dr, dc)| (r + dr, c + dc))
                .filter(|(rr, cc)| *rr >= 0 && *cc >= 0 && *rr < rows as isize && *cc < cols as isize)
                .map(|(rr, cc)| rr as usize * cols + cc as usize)
                .collect()
        })
        .collect()
}

fn agreements_with(labels: &[u8], lists: &[Vec<usize>]) -> usize {
    lists
        .iter()
        .enumerate()
        .map(|(i, nb)| nb.iter().filter(|j| **j > i && labels[**j] == labels[i]).count())
        .sum()
}

/// Site visiting order within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Every site once, in a fresh uniformly random order.
    RandomScan,
    /// Even-parity sites, then odd-parity sites (four-neighbor only).
    TwoColor,
}

/// The two parity classes `(row + col) mod 2` of a grid.
pub fn two_color_halves(rows: usize, cols: usize) -> [Vec<usize>; 2] {
    let mut halves = [Vec::new(), Vec::new()];
    for s in 0..rows * cols {
        halves[(s / cols + s % cols) % 2].push(s);
    }
    halves
}

/// Reusable sweep state: neighbor lists and the visiting order.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    lists: Vec<Vec<usize>>,
    schedule: Schedule,
    order: Vec<usize>,
    beta: f64,
}

impl GibbsSampler {
    pub fn new(lattice: &Lattice, beta: f64, schedule: Schedule) -> Result<Self> {
        if !beta.is_finite() {
            return param(format!("interaction must be finite, got {beta}"));
        }
        if schedule == Schedule::TwoColor && lattice.neighborhood != Neighborhood::Four {
            return param("two-color updates need the four-neighbor structure");
        }
        let order = match schedule {
            Schedule::RandomScan => (0..lattice.sites()).collect(),
            Schedule::TwoColor => two_color_halves(lattice.rows, lattice.cols).concat(),
        };
        Ok(Self { lists: neighbor_lists(lattice.rows, lattice.cols, lattice.neighborhood), schedule, order, beta })
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    /// One sweep; `field(site, label)` adds a site-wise log-weight.
    pub fn sweep_with_field<F: Fn(usize, u8) -> f64>(&mut self, lattice: &mut Lattice, field: F, rng: &mut RngState) {
        if self.schedule == Schedule::RandomScan {
            shuffle(&mut self.order, rng);
        }
        let g = lattice.colors as usize;
        let mut log_w = vec![0.0; g];
        let mut counts = vec![0usize; g];
        for &s in &self.order {
            counts.iter_mut().for_each(|c| *c = 0);
            for &j in &self.lists[s] {
                counts[lattice.labels[j] as usize] += 1;
            }
            for k in 0..g {
                log_w[k] = self.beta * counts[k] as f64 + field(s, k as u8);
            }
            lattice.labels[s] = draw::categorical_log(rng, &log_w) as u8;
        }
    }

    pub fn sweep(&mut self, lattice: &mut Lattice, rng: &mut RngState) {
        self.sweep_with_field(lattice, |_, _| 0.0, rng)
    }
}

fn shuffle(xs: &mut [usize], rng: &mut RngState) {
    for i in (1..xs.len()).rev() {
        let j = (draw::uniform(rng) * (i + 1) as f64) as usize;
        xs.swap(i, j.min(i));
    }
}

/// One Gibbs sweep of the Potts prior `exp(β · agreements)`, each site drawn
/// from its conditional `∝ exp(β n_{i,g})`.
pub fn gibbs_sweep(lattice: &mut Lattice, beta: f64, schedule: Schedule, rng: &mut RngState) -> Result<()> {
    GibbsSampler::new(lattice, beta, schedule)?.sweep(lattice, rng);
    Ok(())
}

fn check_enumerable(sites: usize, colors: u8) -> Result<u64> {
    let total = (colors as u64).checked_pow(sites as u32).filter(|t| *t <= ENUMERATION_GUARD);
    total.ok_or_else(|| Error::Guard(format!("{colors}^{sites} configurations exceed the enumeration limit 2^26")))
}

/// Number of configurations at each agreement count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyHistogram {
    pub counts: Vec<u64>,
}

impl EnergyHistogram {
    /// `log Σ_x exp(β · agreements(x))`.
    pub fn log_partition(&self, beta: f64) -> f64 {
        let terms: Vec<f64> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(e, c)| (*c as f64).ln() + beta * e as f64)
            .collect();
        log_sum_exp(&terms)
    }

    /// Expected agreement count, the derivative of the log-partition in β.
    pub fn mean_agreements(&self, beta: f64) -> f64 {
        let z = self.log_partition(beta);
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(e, c)| e as f64 * ((*c as f64).ln() + beta * e as f64 - z).exp())
            .sum()
    }
}

/// Enumerates all configurations in odometer order, updating the agreement
/// count incrementally.
pub fn energy_histogram(rows: usize, cols: usize, colors: u8, neighborhood: Neighborhood) -> Result<EnergyHistogram> {
    let mut counts = Vec::new();
    visit_states(rows, cols, colors, neighborhood, |_, e| {
        if counts.len() <= e {
            counts.resize(e + 1, 0);
        }
        counts[e] += 1;
    })?;
    Ok(EnergyHistogram { counts })
}

/// Calls `visit(labels, agreements)` for every configuration, in state-code order.
fn visit_states<V: FnMut(&[u8], usize)>(
    rows: usize,
    cols: usize,
    colors: u8,
    neighborhood: Neighborhood,
    mut visit: V,
) -> Result<()> {
    if rows == 0 || cols == 0 || colors < 2 {
        return param("need a nonempty lattice and at least two colors");
    }
    let n = rows * cols;
    let total = check_enumerable(n, colors)?;
    let lists = neighbor_lists(rows, cols, neighborhood);
    let mut labels = vec![0u8; n];
    let mut energy = agreements_with(&labels, &lists) as i64;
    for code in 0..total {
        visit(&labels, energy as usize);
        if code + 1 == total {
            break;
        }
        let mut s = 0;
        loop {
            let old = labels[s];
            let new = if old + 1 == colors { 0 } else { old + 1 };
            for &j in &lists[s] {
                energy -= (labels[j] == old) as i64;
                energy += (labels[j] == new) as i64;
            }
            labels[s] = new;
            if new != 0 {
                break;
            }
            s += 1;
        }
    }
    Ok(())
}

/// `log Σ_x exp(β · agreements(x))` by exact enumeration.
pub fn exact_partition(rows: usize, cols: usize, colors: u8, beta: f64, neighborhood: Neighborhood) -> Result<f64> {
    Ok(energy_histogram(rows, cols, colors, neighborhood)?.log_partition(beta))
}

/// `1 / Σ_x exp(β · agreements(x))`. A sum over ordered neighbor pairs
/// counts each pair twice; its reciprocal normaliser at β is this at `2β`.
pub fn reciprocal_partition(rows: usize, cols: usize, colors: u8, beta: f64, neighborhood: Neighborhood) -> Result<f64> {
    Ok((-exact_partition(rows, cols, colors, beta, neighborhood)?).exp())
}

/// Normalised `exp(log_weight(x))` over every configuration, indexed by state code.
pub fn exact_state_law_with<W: Fn(&Lattice) -> f64>(
    rows: usize,
    cols: usize,
    colors: u8,
    neighborhood: Neighborhood,
    log_weight: W,
) -> Result<Vec<f64>> {
    let total = check_enumerable(rows * cols, colors)?;
    let mut log_w = Vec::with_capacity(total as usize);
    for code in 0..total {
        log_w.push(log_weight(&Lattice::from_state_code(rows, cols, colors, code, neighborhood)?));
    }
    let z = log_sum_exp(&log_w);
    Ok(log_w.into_iter().map(|l| (l - z).exp()).collect())
}

/// Potts prior law over every configuration, indexed by state code.
pub fn exact_state_law(rows: usize, cols: usize, colors: u8, beta: f64, neighborhood: Neighborhood) -> Result<Vec<f64>> {
    exact_state_law_with(rows, cols, colors, neighborhood, |x| beta * x.agreements() as f64)
}

/// Four-point cliques of the eight-neighbor structure.
pub fn clique_count_eight(rows: usize, cols: usize) -> usize {
    rows.saturating_sub(1) * cols.saturating_sub(1)
}

/// Exact integral over `[a0, a1]` of the linear interpolant through `(betas, values)`.
pub fn piecewise_linear_integral(betas: &[f64], values: &[f64], a0: f64, a1: f64) -> Result<f64> {
    if betas.len() != values.len() {
        return Err(Error::Dimension("knots and values differ in length".into()));
    }
    if betas.len() < 2 {
        return Err(Error::Empty("need at least two knots".into()));
    }
    if betas.windows(2).any(|w| !(w[1] > w[0])) {
        return param("knots must be strictly increasing");
    }
    if !(a0 < a1) || a0 < betas[0] || a1 > betas[betas.len() - 1] {
        return param(format!("range [{a0}, {a1}] not inside the knots"));
    }
    let interp = |k: usize, x: f64| {
        let t = (x - betas[k]) / (betas[k + 1] - betas[k]);
        values[k] + t * (values[k + 1] - values[k])
    };
    let mut total = 0.0;
    for k in 0..betas.len() - 1 {
        let lo = betas[k].max(a0);
        let hi = betas[k + 1].min(a1);
        if hi > lo {
            total += 0.5 * (hi - lo) * (interp(k, lo) + interp(k, hi));
        }
    }
    Ok(total)
}

/// Lattice states drawn from a field posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPosteriorSample {
    pub states: Vec<Lattice>,
    pub beta: f64,
    pub colors: u8,
}

impl FieldPosteriorSample {
    /// Per-site modal label; ties go to the smallest label.
    pub fn mpm(&self) -> Result<Lattice> {
        mpm_estimate(&self.states)
    }

    /// The visited state with the largest `log_density`.
    pub fn map_visited<D: Fn(&Lattice) -> f64>(&self, log_density: D) -> Result<&Lattice> {
        let mut best: Option<(&Lattice, f64)> = None;
        for s in &self.states {
            let v = log_density(s);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((s, v));
            }
        }
        best.map(|(s, _)| s).ok_or_else(|| Error::Empty("no samples".into()))
    }
}

pub fn mpm_estimate(states: &[Lattice]) -> Result<Lattice> {
    let first = states.first().ok_or_else(|| Error::Empty("no samples".into()))?;
    let g = first.colors as usize;
    let mut counts = vec![0usize; first.sites() * g];
    for s in states {
        if s.rows != first.rows || s.cols != first.cols || s.colors != first.colors {
            return Err(Error::Dimension("samples have different shapes".into()));
        }
        for (i, l) in s.labels.iter().enumerate() {
            counts[i * g + *l as usize] += 1;
        }
    }
    let labels = (0..first.sites())
        .map(|i| {
            let row = &counts[i * g..(i + 1) * g];
            let best = *row.iter().max().unwrap();
            row.iter().position(|c| *c == best).unwrap() as u8
        })
        .collect();
    Lattice::new(first.rows, first.cols, first.colors, labels, first.neighborhood)
}

fn check_pair_matrix(pair_prob: &Matrix) -> Result<()> {
    let n = pair_prob.nrows();
    if pair_prob.ncols() != n {
        return Err(Error::Dimension("pair probability matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let p = pair_prob[(i, j)];
            if !(0.0..=1.0).contains(&p) || (p - pair_prob[(j, i)]).abs() > 1e-12 {
                return param("pair probabilities must be symmetric and in [0, 1]");
            }
        }
    }
    Ok(())
}

/// Posterior L4 risk `Σ_{i≠j} P(x_i ≠ x_j) · 1{x̂_i = x̂_j}`.
pub fn l4_risk(pair_prob: &Matrix, labels: &[u8]) -> f64 {
    let n = labels.len();
    let mut r = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && labels[i] == labels[j] {
                r += 1.0 - pair_prob[(i, j)];
            }
        }
    }
    r
}

/// Reallocates one site at a time to the class with the smallest summed
/// `P(x_i ≠ x_j)` until no site moves. Each move strictly lowers the risk.
pub fn l4_local_search(pair_prob: &Matrix, colors: u8, start: &[u8]) -> Result<Vec<u8>> {
    check_pair_matrix(pair_prob)?;
    let n = pair_prob.nrows();
    if start.len() != n || start.iter().any(|l| *l >= colors) {
        return param("starting labels do not match the matrix or the color count");
    }
    let mut labels = start.to_vec();
    let mut cost = vec![0.0; colors as usize];
    loop {
        let mut moved = false;
        for i in 0..n {
            cost.iter_mut().for_each(|c| *c = 0.0);
            for j in 0..n {
                if j != i {
                    cost[labels[j] as usize] += 1.0 - pair_prob[(i, j)];
                }
            }
            let current = labels[i] as usize;
            let (best, best_cost) = cost
                .iter()
                .enumerate()
                .fold((current, cost[current]), |b, (k, c)| if *c < b.1 - 1e-12 { (k, *c) } else { b });
            if best != current && best_cost < cost[current] - 1e-12 {
                labels[i] = best as u8;
                moved = true;
            }
        }
        if !moved {
            return Ok(labels);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L4Clustering {
    pub labels: Vec<u8>,
    pub risk: f64,
    /// `(initial risk, final risk)` for each start.
    pub starts: Vec<(f64, f64)>,
}

/// Best of `starts` random-start local searches.
pub fn l4_clustering(pair_prob: &Matrix, colors: u8, starts: usize, rng: &mut RngState) -> Result<L4Clustering> {
    check_pair_matrix(pair_prob)?;
    if colors == 0 || starts == 0 {
        return param("need at least one color and one start");
    }
    let n = pair_prob.nrows();
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut record = Vec::with_capacity(starts);
    for _ in 0..starts {
        let init: Vec<u8> = (0..n).map(|_| (draw::uniform(rng) * colors as f64) as u8).collect();
        let out = l4_local_search(pair_prob, colors, &init)?;
        let risk = l4_risk(pair_prob, &out);
        record.push((l4_risk(pair_prob, &init), risk));
        if best.as_ref().is_none_or(|(_, r)| risk < *r) {
            best = Some((out, risk));
        }
    }
    let (labels, risk) = best.unwrap();
    Ok(L4Clustering { labels, risk, starts: record })
}

/// Which extreme the threshold experiment is looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdTarget {
    /// Raise β until every site has the same color.
    Unicolor,
    /// Lower β until no two neighbors agree.
    Checkerboard,
}

const THRESHOLD_CAP: f64 = 100.0;

/// Per replication: start from a random ±1 grid, run `sweeps` Gibbs sweeps at
/// β = ±precision, and step β by ±precision (continuing from the current
/// state) until the target pattern appears. Returns the β reached.
pub fn beta_threshold_experiment(
    rows: usize,
    cols: usize,
    precision: f64,
    sweeps: usize,
    reps: usize,
    target: ThresholdTarget,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    if !(precision > 0.0) {
        return param(format!("precision must be positive, got {precision}"));
    }
    let step = match target {
        ThresholdTarget::Unicolor => precision,
        ThresholdTarget::Checkerboard => -precision,
    };
    let done = |l: &Lattice| match target {
        ThresholdTarget::Unicolor => l.is_unicolor(),
        ThresholdTarget::Checkerboard => l.is_checkerboard(),
    };
    let mut out = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut lattice = Lattice::random(rows, cols, 2, Neighborhood::Four, rng)?;
        let mut sampler = GibbsSampler::new(&lattice, step, Schedule::RandomScan)?;
        let mut k = 1u32;
        loop {
            let beta = step * k as f64;
            sampler.set_beta(beta);
            for _ in 0..sweeps {
                sampler.sweep(&mut lattice, rng);
            }
            if done(&lattice) {
                out.push(beta);
                break;
            }
            if beta.abs() > THRESHOLD_CAP {
                return Err(Error::Divergence(format!("no {target:?} lattice reached by |β| = {THRESHOLD_CAP}")));
            }
            k += 1;
        }
    }
    Ok(out)
}

/// Accepted parameters from an ABC run.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcOutput<T> {
    pub accepted: Vec<T>,
    pub proposals: usize,
}

impl<T> AbcOutput<T> {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.len() as f64 / self.proposals as f64
    }
}

/// Rejection ABC: draw θ from the prior, simulate data, keep θ when the
/// summary lies within `epsilon` of the observed one. With `epsilon = 0`
/// the summaries should be discrete.
#[allow(clippy::too_many_arguments)]
pub fn abc_posterior<T, D, S, P, M, St, Dist>(
    mut prior: P,
    mut model: M,
    stat: St,
    observed: &S,
    epsilon: f64,
    distance: Dist,
    n_props: usize,
    rng: &mut RngState,
) -> Result<AbcOutput<T>>
where
    P: FnMut(&mut RngState) -> T,
    M: FnMut(&T, &mut RngState) -> D,
    St: Fn(&D) -> S,
    Dist: Fn(&S, &S) -> f64,
{
    if !(epsilon >= 0.0) {
        return param(format!("tolerance must be nonnegative, got {epsilon}"));
    }
    if n_props == 0 {
        return param("need at least one proposal");
    }
    let mut accepted = Vec::new();
    for _ in 0..n_props {
        let theta = prior(rng);
        let data = model(&theta, rng);
        if distance(&stat(&data), observed) <= epsilon {
            accepted.push(theta);
        }
    }
    if accepted.is_empty() {
        return Err(Error::Budget { rate: 0.0 });
    }
    Ok(AbcOutput { accepted, proposals: n_props })
}

/// Joint law rebuilt from full conditionals by the Hammersley–Clifford
/// telescoping product around `reference`, indexed by state code.
/// `conditional(x, site, label)` is `π(x_site = label | x_rest)`.
pub fn hc_joint_reconstruction<C: Fn(&[u8], usize, u8) -> f64>(
    conditional: C,
    reference: &[u8],
    rows: usize,
    cols: usize,
    colors: u8,
) -> Result<Vec<f64>> {
    let n = rows * cols;
    if reference.len() != n || reference.iter().any(|l| *l >= colors) {
        return param("reference configuration does not fit the lattice");
    }
    let total = check_enumerable(n, colors)?;
    let mut log_w = Vec::with_capacity(total as usize);
    let mut mixed = vec![0u8; n];
    for code in 0..total {
        let x = Lattice::from_state_code(rows, cols, colors, code, Neighborhood::Four)?;
        mixed.copy_from_slice(reference);
        let mut lw = 0.0;
        for i in 0..n {
            // mixed = (x_1..x_{i-1}, ·, x*_{i+1}..x*_n)
            let num = conditional(&mixed, i, x.labels[i]);
            let den = conditional(&mixed, i, reference[i]);
            if !(num > 0.0) || !(den > 0.0) {
                return Err(Error::Incompatible(format!("conditional vanishes at site {i} of state {code}")));
            }
            lw += num.ln() - den.ln();
            mixed[i] = x.labels[i];
        }
        log_w.push(lw);
    }
    let z = log_sum_exp(&log_w);
    Ok(log_w.into_iter().map(|l| (l - z).exp()).collect())
}

/// Full conditional of the Potts prior at one site.
pub fn potts_conditional(
    rows: usize,
    cols: usize,
    colors: u8,
    beta: f64,
    neighborhood: Neighborhood,
) -> impl Fn(&[u8], usize, u8) -> f64 {
    let lists = neighbor_lists(rows, cols, neighborhood);
    move |x: &[u8], site: usize, label: u8| {
        let mut counts = vec![0usize; colors as usize];
        for &j in &lists[site] {
            counts[x[j] as usize] += 1;
        }
        let log_w: Vec<f64> = counts.iter().map(|c| beta * *c as f64).collect();
        let z = log_sum_exp(&log_w);
        (log_w[label as usize] - z).exp()
    }
}
