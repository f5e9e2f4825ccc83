//! Fixed points of T x(t) = f(t, ∫₀ᵗ g(t,s,x(s)) ds, x(t)) on a grid.
//!
//! Both modes track the iterate with the smallest residual ‖x − Tx‖∞ and
//! return it, so the reported residual always belongs to the returned
//! function. An evaluation failure mid-iteration ends the run with
//! `converged = false` rather than an error.

use std::fmt;
use std::str::FromStr;

use crate::expr::{CompiledExpr, Expr};
use crate::grid::{cumulative_integral, inner_integral_all, sup_norm_distance, Grid, GridFunction, QuadRule};
use crate::problem::{IntegralProblem, DEFAULT_SAMPLE_RADIUS};
use crate::report::PropertyReport;
use crate::sampling::TrigSums;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const PROBE_TOL: f64 = 1e-9;
const BRACKET_POINTS: usize = 64;
const BRACKET_EXPANSIONS: usize = 3;
const ROOT_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Picard,
    PointwiseImplicit,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Mode::Picard),
            "pointwise-implicit" => Ok(Mode::PointwiseImplicit),
            other => {
                Err(Error::Invalid(format!("unknown solver mode {other:?} (expected picard or pointwise-implicit)")))
            }
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Picard => "picard",
            Mode::PointwiseImplicit => "pointwise-implicit",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub enum Initial {
    #[default]
    Zero,
    Expr(CompiledExpr),
}

impl Initial {
    pub fn parse(source: &str) -> Result<Self> {
        if source.trim() == "zero" {
            return Ok(Initial::Zero);
        }
        Ok(Initial::Expr(CompiledExpr::new(source.parse::<Expr>()?, &["t"])?))
    }

    pub fn build(&self, grid: Grid) -> Result<GridFunction> {
        match self {
            Initial::Zero => Ok(GridFunction::zeros(grid)),
            Initial::Expr(e) => GridFunction::from_expr(grid, e),
        }
    }
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initial::Zero => f.write_str("zero"),
            Initial::Expr(e) => e.fmt(f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: Mode,
    pub tol: f64,
    pub max_iter: usize,
    pub initial: Initial,
    pub rule: QuadRule,
    /// Scalar root brackets start at [−r − 1, r + 1].
    pub bracket_radius: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::Picard,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            initial: Initial::Zero,
            rule: QuadRule::Trapezoid,
            bracket_radius: DEFAULT_SAMPLE_RADIUS,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid("max_iter must be at least 1".into()));
        }
        if !(self.bracket_radius >= 0.0 && self.bracket_radius.is_finite()) {
            return Err(Error::Invalid(format!("bracket radius must be nonnegative, got {}", self.bracket_radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// T could not be evaluated on the current iterate.
    Breakdown(String),
    /// No sign change of u − f(t, I, u) around this node.
    BracketFailure {
        node: usize,
        t: f64,
    },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged => f.write_str("converged"),
            StopReason::MaxIterations => f.write_str("max_iter reached"),
            StopReason::Breakdown(msg) => write!(f, "evaluation breakdown: {msg}"),
            StopReason::BracketFailure { node, t } => write!(f, "no root bracket at node {node} (t={t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: GridFunction,
    pub iterations: usize,
    /// ‖x − Tx‖∞ of `solution`; infinite if T could not be applied to it.
    pub residual: f64,
    pub converged: bool,
    /// Sup-norm change of each iteration.
    pub history: Vec<f64>,
    pub mode: Mode,
    pub stop: StopReason,
}

impl SolveResult {
    pub fn report(&self) -> String {
        format!(
            "converged={}\niterations={}\nresidual={:e}\nmode={}\nstop={}\nsolution_min={}\nsolution_max={}\n",
            self.converged,
            self.iterations,
            self.residual,
            self.mode,
            self.stop,
            self.solution.min(),
            self.solution.max(),
        )
    }
}

/// Node-wise (Tx)_i = f(t_i, ∫₀^{t_i} g(t_i, s, x(s)) ds, x_i).
pub fn apply_t(p: &IntegralProblem, x: &GridFunction, rule: QuadRule) -> Result<GridFunction> {
    let inner = inner_integral_all(&p.g, x, rule)?;
    apply_with_inner(p, x, &inner)
}

fn apply_with_inner(p: &IntegralProblem, x: &GridFunction, inner: &GridFunction) -> Result<GridFunction> {
    let grid = *x.grid();
    let values = (0..grid.len())
        .map(|i| {
            let t = grid.node(i);
            let (iv, xv) = (inner.values()[i], x.values()[i]);
            p.f.eval(&[t, iv, xv]).map_err(|e| Error::eval(format!("f at node {i} (t={t}, x={iv}, y={xv})"), e))
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid, values)
}

/// ‖x − Tx‖∞, computed from scratch.
pub fn residual(p: &IntegralProblem, x: &GridFunction, rule: QuadRule) -> Result<f64> {
    sup_norm_distance(x, &apply_t(p, x, rule)?)
}

pub fn solve(p: &IntegralProblem, grid: Grid, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let x0 = cfg.initial.build(grid)?;
    let mut run = match cfg.mode {
        Mode::Picard => picard(p, x0, cfg),
        Mode::PointwiseImplicit => pointwise_implicit(p, x0, cfg),
    };
    run.residual = residual(p, &run.solution, cfg.rule).unwrap_or(f64::INFINITY);
    run.converged = run.residual <= cfg.tol;
    if run.converged {
        run.stop = StopReason::Converged;
    }
    Ok(run)
}

struct Best {
    x: GridFunction,
    residual: f64,
}

impl Best {
    fn offer(&mut self, x: &GridFunction, residual: f64) {
        if residual < self.residual {
            self.x = x.clone();
            self.residual = residual;
        }
    }

    fn finish(self, iterations: usize, history: Vec<f64>, mode: Mode, stop: StopReason) -> SolveResult {
        SolveResult { solution: self.x, iterations, residual: self.residual, converged: false, history, mode, stop }
    }
}

fn picard(p: &IntegralProblem, mut x: GridFunction, cfg: &SolverConfig) -> SolveResult {
    let mut best = Best { x: x.clone(), residual: f64::INFINITY };
    let mut history = Vec::new();
    for _ in 0..cfg.max_iter {
        let y = match apply_t(p, &x, cfg.rule) {
            Ok(y) => y,
            Err(e) => {
                let n = history.len();
                return best.finish(n, history, Mode::Picard, StopReason::Breakdown(e.to_string()));
            }
        };
        let d = sup_norm_distance(&x, &y).expect("same grid");
        history.push(d);
        // d is the residual of x, not of y
        best.offer(&x, d);
        if d <= cfg.tol {
            let n = history.len();
            return best.finish(n, history, Mode::Picard, StopReason::Converged);
        }
        x = y;
    }
    let n = history.len();
    best.finish(n, history, Mode::Picard, StopReason::MaxIterations)
}

/// Each sweep freezes I = ∫ g(·, s, x(s)) ds at the previous iterate and
/// solves u = f(t_i, I_i, u) node by node.
fn pointwise_implicit(p: &IntegralProblem, mut x: GridFunction, cfg: &SolverConfig) -> SolveResult {
    let mode = Mode::PointwiseImplicit;
    let grid = *x.grid();
    let mut best = Best { x: x.clone(), residual: f64::INFINITY };
    let mut history = Vec::new();
    for _ in 0..cfg.max_iter {
        let step = inner_integral_all(&p.g, &x, cfg.rule).and_then(|inner| {
            let tx = apply_with_inner(p, &x, &inner)?;
            Ok((inner, sup_norm_distance(&x, &tx)?))
        });
        let (inner, res) = match step {
            Ok(v) => v,
            Err(e) => {
                let n = history.len();
                return best.finish(n, history, mode, StopReason::Breakdown(e.to_string()));
            }
        };
        best.offer(&x, res);
        if res <= cfg.tol {
            let n = history.len();
            return best.finish(n, history, mode, StopReason::Converged);
        }
        let mut next = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let t = grid.node(i);
            let h = |u: f64| p.f.eval(&[t, inner.values()[i], u]).ok().map(|v| u - v);
            match solve_scalar(h, x.values()[i], cfg.bracket_radius + 1.0) {
                Some(u) => next.push(u),
                None => {
                    let n = history.len();
                    return best.finish(n, history, mode, StopReason::BracketFailure { node: i, t });
                }
            }
        }
        let next = GridFunction::new(grid, next).expect("roots are finite");
        history.push(sup_norm_distance(&x, &next).expect("same grid"));
        x = next;
    }
    // the last sweep's output has not been scored yet
    if let Ok(r) = residual(p, &x, cfg.rule) {
        best.offer(&x, r);
    }
    let n = history.len();
    best.finish(n, history, mode, StopReason::MaxIterations)
}

/// A root of `h` near `guess`: scan [−R, R] (R doubling up to three times)
/// for the sign change closest to `guess`, then refine with Newton steps
/// safeguarded by bisection. `h` returns `None` where it is undefined.
fn solve_scalar(h: impl Fn(f64) -> Option<f64>, guess: f64, radius: f64) -> Option<f64> {
    if h(guess) == Some(0.0) {
        return Some(guess);
    }
    let mut r = radius;
    for _ in 0..=BRACKET_EXPANSIONS {
        if let Some((a, b)) = bracket(&h, guess, r) {
            return Some(refine(&h, a, b));
        }
        r *= 2.0;
    }
    None
}

fn bracket(h: &impl Fn(f64) -> Option<f64>, guess: f64, r: f64) -> Option<(f64, f64)> {
    let mut pts: Vec<f64> = (0..=BRACKET_POINTS).map(|k| -r + 2.0 * r * k as f64 / BRACKET_POINTS as f64).collect();
    if guess.is_finite() && guess.abs() < r {
        pts.push(guess);
        pts.sort_by(f64::total_cmp);
    }
    let vals: Vec<(f64, f64)> = pts.iter().filter_map(|&u| h(u).map(|v| (u, v))).collect();
    vals.windows(2).filter(|w| w[0].1.signum() != w[1].1.signum() || w[0].1 == 0.0).map(|w| (w[0].0, w[1].0)).min_by(
        |a, b| {
            let da = dist_to_interval(guess, *a);
            let db = dist_to_interval(guess, *b);
            da.total_cmp(&db)
        },
    )
}

fn dist_to_interval(x: f64, (a, b): (f64, f64)) -> f64 {
    if x < a {
        a - x
    } else if x > b {
        x - b
    } else {
        0.0
    }
}

fn refine(h: &impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64) -> f64 {
    let mut ha = h(a).expect("bracket end is defined");
    if ha == 0.0 {
        return a;
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..ROOT_ITERS {
        let Some(hx) = h(x) else {
            // undefined interior point: fall back to pure bisection
            x = 0.5 * (a + b);
            continue;
        };
        if hx == 0.0 {
            return x;
        }
        if hx.signum() == ha.signum() {
            a = x;
            ha = hx;
        } else {
            b = x;
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
        let dx = 1e-7 * x.abs().max(1.0);
        let newton = h(x + dx).map(|hd| x - hx * dx / (hd - hx));
        x = match newton {
            Some(n) if n > a.min(b) && n < a.max(b) && n.is_finite() => n,
            _ => 0.5 * (a + b),
        };
    }
    x
}

/// Samples `pairs` random (x, y) pairs bounded by `r` and checks at every
/// node
///
/// ```text
/// Φ(Λ(|Tx − Ty|)) ≤ Ψ(Λ(|x − y|)) + Ψ(Λ(2 a(t) ∫₀ᵗ |b|)) + tol.
/// ```
///
/// Witness: (pair index, node index), (t, |x − y|), (lhs, rhs).
pub fn contraction_probe(
    p: &IntegralProblem,
    grid: Grid,
    pairs: usize,
    r: f64,
    seed: u64,
    rule: QuadRule,
) -> Result<PropertyReport> {
    const NAME: &str = "contraction_probe";
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("probe radius must be positive, got {r}")));
    }
    let tr = &p.triple;
    let abs_b = grid.nodes().map(|s| p.b_at(s).map(f64::abs)).collect::<Result<Vec<_>>>()?;
    let b_cum = cumulative_integral(&abs_b, grid.spacing(), rule);
    let kernel_term = grid
        .nodes()
        .zip(&b_cum)
        .map(|(t, &c)| tr.psi_at(tr.lambda(2.0 * p.a_at(t)?.abs() * c)?))
        .collect::<Result<Vec<_>>>()?;
    let members = TrigSums::default().ensemble(grid, 2 * pairs, r, p.domain, seed);
    for (k, pair) in members.chunks_exact(2).enumerate() {
        let (x, y) = (&pair[0], &pair[1]);
        let (tx, ty) = (apply_t(p, x, rule)?, apply_t(p, y, rule)?);
        for i in 0..grid.len() {
            let dt = (tx.values()[i] - ty.values()[i]).abs();
            let dx = (x.values()[i] - y.values()[i]).abs();
            let lhs = tr.phi_big_at(tr.lambda(dt)?)?;
            let rhs = tr.psi_at(tr.lambda(dx)?)? + kernel_term[i];
            if lhs > rhs + PROBE_TOL {
                return Ok(PropertyReport::fail(NAME, vec![(k as f64, i as f64), (grid.node(i), dx), (lhs, rhs)]));
            }
        }
    }
    Ok(PropertyReport::pass(NAME))
}
