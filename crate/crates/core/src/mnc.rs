//! Finite-ensemble estimate of the measure of noncompactness
//!
//! ```text
//! μ(X) = ω₀(X) + lim sup_{t→∞} diam X(t)
//! ```
//!
//! and the sampled set iteration Aₙ₊₁ = conv(T Aₙ).
//!
//! ε → 0 is replaced by the smallest ε ≥ 2h of a halving schedule, and
//! the lim sup by the largest diameter on the last `tail_fraction` of the
//! grid. Convex hulls are sampled with Dirichlet(1) weights.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::grid::{Grid, GridFunction, QuadRule};
use crate::problem::IntegralProblem;
use crate::report::PropertyReport;
use crate::solver::apply_t;
use crate::{Error, Result};

pub const DEFAULT_ENSEMBLE_SIZE: usize = 16;
pub const DEFAULT_STEPS: usize = 10;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;
/// Allowed growth of μ̂ between consecutive steps.
pub const MONOTONE_TOL: f64 = 1e-9;
pub const INEQUALITY_TOL: f64 = 1e-9;
pub const AXIOM_LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// A nonempty set of functions on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<GridFunction>,
}

impl Ensemble {
    pub fn new(members: Vec<GridFunction>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Invalid("an ensemble needs at least one member".into()));
        };
        let grid = *first.grid();
        if let Some(k) = members.iter().position(|m| *m.grid() != grid) {
            return Err(Error::Invalid(format!("ensemble member {k} is on a different grid")));
        }
        Ok(Ensemble { members })
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn into_members(self) -> Vec<GridFunction> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> Grid {
        *self.members[0].grid()
    }
}

/// ω(x, ε): the largest |x_i − x_j| over node pairs with |t_i − t_j| ≤ ε.
///
/// Equivalent to the largest max − min over windows of ⌊ε/h⌋ + 1
/// consecutive nodes, computed in O(n) with monotone deques.
pub fn modulus(x: &GridFunction, eps: f64) -> Result<f64> {
    let grid = x.grid();
    let h = grid.spacing();
    if !(eps >= h * (1.0 - 1e-12)) {
        return Err(Error::Invalid(format!("modulus needs eps >= grid spacing {h}, got {eps}")));
    }
    let w = ((eps / h) + 1e-9).floor() as usize;
    Ok(window_range_max(x.values(), w))
}

/// Largest max − min over all windows v[i..=i+w].
fn window_range_max(v: &[f64], w: usize) -> f64 {
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for j in 0..v.len() {
        while hi.back().is_some_and(|&k| v[k] <= v[j]) {
            hi.pop_back();
        }
        hi.push_back(j);
        while lo.back().is_some_and(|&k| v[k] >= v[j]) {
            lo.pop_back();
        }
        lo.push_back(j);
        let start = j.saturating_sub(w);
        while hi.front().is_some_and(|&k| k < start) {
            hi.pop_front();
        }
        while lo.front().is_some_and(|&k| k < start) {
            lo.pop_front();
        }
        best = best.max(v[hi[0]] - v[lo[0]]);
    }
    best
}

pub fn ensemble_modulus(x: &Ensemble, eps: f64) -> Result<f64> {
    x.members.iter().try_fold(0.0f64, |m, f| Ok(m.max(modulus(f, eps)?)))
}

/// diam X(t_i) = max − min of the members' values at node i.
pub fn diam_at(x: &Ensemble, i: usize) -> f64 {
    let (lo, hi) = x
        .members
        .iter()
        .map(|m| m.values()[i])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// L/2, L/4, … down to the last value ≥ 2h.
pub fn default_schedule(grid: Grid) -> Vec<f64> {
    let floor = 2.0 * grid.spacing();
    let mut eps = grid.length() / 2.0;
    let mut out = Vec::new();
    while eps >= floor {
        out.push(eps);
        eps /= 2.0;
    }
    if out.is_empty() {
        out.push(floor);
    }
    out
}

/// First node index of the last `tail_fraction` of the grid.
fn tail_start(grid: Grid, tail_fraction: f64) -> usize {
    let from = grid.length() * (1.0 - tail_fraction);
    (0..grid.len()).find(|&i| grid.node(i) >= from - 1e-12 * grid.length()).unwrap_or(grid.len() - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MncEstimate {
    pub omega0: f64,
    pub tail_diam: f64,
    /// Always `omega0 + tail_diam`.
    pub mu_hat: f64,
    pub epsilon_schedule: Vec<f64>,
}

pub fn estimate_mu(x: &Ensemble, eps_schedule: &[f64], tail_fraction: f64) -> Result<MncEstimate> {
    let grid = x.grid();
    let Some(&eps) = eps_schedule.last() else {
        return Err(Error::Invalid("empty epsilon schedule".into()));
    };
    if eps_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid("epsilon schedule must be strictly decreasing".into()));
    }
    if eps < 2.0 * grid.spacing() * (1.0 - 1e-12) {
        return Err(Error::Invalid(format!(
            "smallest epsilon {eps} is below twice the grid spacing {}",
            grid.spacing()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Invalid(format!("tail fraction must be in (0, 1], got {tail_fraction}")));
    }
    let omega0 = ensemble_modulus(x, eps)?;
    let tail_diam = (tail_start(grid, tail_fraction)..grid.len()).map(|i| diam_at(x, i)).fold(0.0f64, f64::max);
    Ok(MncEstimate { omega0, tail_diam, mu_hat: omega0 + tail_diam, epsilon_schedule: eps_schedule.to_vec() })
}

/// [`estimate_mu`] with the default schedule for the ensemble's grid.
pub fn estimate_mu_default(x: &Ensemble, tail_fraction: f64) -> Result<MncEstimate> {
    estimate_mu(x, &default_schedule(x.grid()), tail_fraction)
}

/// The members of `x` followed by `count − |x|` random convex combinations
/// with weights uniform on the simplex.
pub fn hull_sample(x: &Ensemble, count: usize, seed: u64) -> Result<Ensemble> {
    let m = x.len();
    if count < m {
        return Err(Error::Invalid(format!("hull count {count} is below the member count {m}")));
    }
    let grid = x.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.members.clone();
    for _ in m..count {
        let raw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        // anchored at the first member so equal members combine exactly
        let anchor = x.members[0].values();
        let mut values = anchor.to_vec();
        for (w, member) in raw.iter().zip(&x.members).skip(1) {
            let w = w / total;
            for ((acc, v), a) in values.iter_mut().zip(member.values()).zip(anchor) {
                *acc += w * (v - a);
            }
        }
        out.push(GridFunction::new(grid, values)?);
    }
    Ensemble::new(out)
}

pub fn apply_t_all(p: &IntegralProblem, x: &Ensemble, rule: QuadRule) -> Result<Ensemble> {
    Ensemble::new(x.members.iter().map(|m| apply_t(p, m, rule)).collect::<Result<_>>()?)
}

#[derive(Debug, Clone)]
pub struct DarboConfig {
    pub steps: usize,
    pub hull_count: usize,
    pub seed: u64,
    pub tail_fraction: f64,
    pub rule: QuadRule,
}

impl DarboConfig {
    pub fn for_ensemble(size: usize) -> Self {
        DarboConfig {
            steps: DEFAULT_STEPS,
            hull_count: 4 * size,
            seed: DEFAULT_SEED,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            rule: QuadRule::Trapezoid,
        }
    }
}

/// μ̂(A₀), μ̂(A₁), … with Aₖ₊₁ = hull_sample(T Aₖ). A₀ is `x0` itself.
pub fn darbo_iterate(p: &IntegralProblem, x0: &Ensemble, cfg: &DarboConfig) -> Result<Vec<MncEstimate>> {
    match darbo_trace(p, x0, cfg)? {
        (estimates, None) => Ok(estimates),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`darbo_iterate`], but an evaluation failure of T ends the run
/// early and is returned next to the estimates computed so far.
pub fn darbo_trace(p: &IntegralProblem, x0: &Ensemble, cfg: &DarboConfig) -> Result<(Vec<MncEstimate>, Option<Error>)> {
    let schedule = default_schedule(x0.grid());
    let mut a = x0.clone();
    let mut out = vec![estimate_mu(&a, &schedule, cfg.tail_fraction)?];
    for step in 1..=cfg.steps {
        let image = match apply_t_all(p, &a, cfg.rule) {
            Ok(image) => image,
            Err(e @ Error::Eval { .. }) => return Ok((out, Some(e))),
            Err(e) => return Err(e),
        };
        a = hull_sample(&image, cfg.hull_count.max(image.len()), cfg.seed.wrapping_add(step as u64))?;
        out.push(estimate_mu(&a, &schedule, cfg.tail_fraction)?);
    }
    Ok((out, None))
}

/// First step whose μ̂ exceeds its predecessor's by more than `tol`.
pub fn first_increase(estimates: &[MncEstimate], tol: f64) -> Option<usize> {
    estimates.windows(2).position(|w| w[1].mu_hat > w[0].mu_hat + tol).map(|k| k + 1)
}

pub const CSV_HEADER: &str = "step,omega0,tail_diam,mu_hat";

pub fn to_csv(estimates: &[MncEstimate]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (k, e) in estimates.iter().enumerate() {
        writeln!(s, "{k},{:.16e},{:.16e},{:.16e}", e.omega0, e.tail_diam, e.mu_hat).expect("string write");
    }
    s
}

pub fn write_csv<W: Write>(estimates: &[MncEstimate], mut w: W) -> io::Result<()> {
    w.write_all(to_csv(estimates).as_bytes())
}

/// Φ(Λ(μ̂(TX))) ≤ Ψ(Λ(μ̂(X))) + tol, with TX hull-sampled.
/// Witness: (μ̂(X), μ̂(TX)), (lhs, rhs).
pub fn check_inequality_2_1(
    p: &IntegralProblem,
    x: &Ensemble,
    hull_count: usize,
    seed: u64,
    tail_fraction: f64,
    rule: QuadRule,
) -> Result<PropertyReport> {
    const NAME: &str = "mnc_inequality";
    let schedule = default_schedule(x.grid());
    let tx = apply_t_all(p, x, rule)?;
    let tx = hull_sample(&tx, hull_count.max(tx.len()), seed)?;
    let mu_x = estimate_mu(x, &schedule, tail_fraction)?.mu_hat;
    let mu_tx = estimate_mu(&tx, &schedule, tail_fraction)?.mu_hat;
    let tr = &p.triple;
    let lhs = tr.phi_big_at(tr.lambda(mu_tx)?)?;
    let rhs = tr.psi_at(tr.lambda(mu_x)?)?;
    if lhs <= rhs + INEQUALITY_TOL {
        Ok(PropertyReport::pass(NAME))
    } else {
        Ok(PropertyReport::fail(NAME, vec![(mu_x, mu_tx), (lhs, rhs)]))
    }
}

/// λA + (1 − λ)B = {λa + (1 − λ)b : a ∈ A, b ∈ B}.
pub fn mix(a: &Ensemble, b: &Ensemble, lambda: f64) -> Result<Ensemble> {
    let grid = a.grid();
    if b.grid() != grid {
        return Err(Error::Invalid("ensembles are on different grids".into()));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a.members {
        for y in &b.members {
            let values = x.values().iter().zip(y.values()).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
            out.push(GridFunction::new(grid, values)?);
        }
    }
    Ensemble::new(out)
}

/// μ̂(λA + (1 − λ)B) ≤ λ μ̂(A) + (1 − λ) μ̂(B) + tol for every λ given.
/// Witness: (λ, μ̂ of the mix), (λ μ̂(A) + (1 − λ) μ̂(B), 0).
pub fn check_axiom5(a: &Ensemble, b: &Ensemble, lambdas: &[f64], tail_fraction: f64) -> Result<PropertyReport> {
    const NAME: &str = "mnc_convex_combination";
    let schedule = default_schedule(a.grid());
    let mu_a = estimate_mu(a, &schedule, tail_fraction)?.mu_hat;
    let mu_b = estimate_mu(b, &schedule, tail_fraction)?.mu_hat;
    for &l in lambdas {
        let mixed = estimate_mu(&mix(a, b, l)?, &schedule, tail_fraction)?.mu_hat;
        let bound = l * mu_a + (1.0 - l) * mu_b;
        if mixed > bound + INEQUALITY_TOL {
            return Ok(PropertyReport::fail(NAME, vec![(l, mixed), (bound, 0.0)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}
