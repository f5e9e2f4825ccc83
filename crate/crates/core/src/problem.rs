//! A problem instance x(t) = f(t, ∫₀ᵗ g(t,s,x(s)) ds, x(t)) and sampled
//! verification of the four hypotheses that give it a solution:
//!
//! 1. f is continuous and f(t, x, 0) is bounded;
//! 2. f is controlled in both value slots by the comparison triple;
//! 3. |g(t, s, x)| ≤ a(t) b(s) with a(t) → 0 and b integrable;
//! 4. a ball of radius r₀ is mapped into itself.
//!
//! Hypothesis 4 is checked in the self-mapping form
//! `Ψ(Λ(r)) + M₀ + M₁ ≤ Λ(r)`, the inequality the estimate chain for
//! |Tx(t)| actually needs.

use std::fmt;

use crate::comparison::{self, ComparisonTriple, DEFAULT_DECAY_TOL, DEFAULT_N_MAX, DEFAULT_TOL};
use crate::expr::{CompiledExpr, Expr};
use crate::grid::{integrate_samples, Grid, Kernel, QuadRule, DEFAULT_HORIZON};
use crate::report::PropertyReport;
use crate::sampling::{Halton, SampleDomain};
use crate::{Error, Result};

/// Panels for ∫₀ᵗ |b(s)| ds. Fixed, so the value at a given t does not
/// depend on how many t-samples are taken.
const B_PANELS: usize = 256;
const GOLDEN_ITERS: usize = 80;
const MAX_REFINED_PEAKS: usize = 16;

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_T_SAMPLES: usize = 2001;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;
/// a must fall below this fraction of its maximum on the tail.
pub const DEFAULT_DECAY_RATIO: f64 = 0.05;
pub const DEFAULT_R_MAX: f64 = 100.0;
pub const DEFAULT_R_RESOLUTION: usize = 100_000;
pub const DEFAULT_SAMPLE_RADIUS: f64 = 2.0;

pub const EXAMPLE_F: &str = "sin(t)+ln(1+x)+ln(1+y)";
pub const EXAMPLE_G: &str = "(1/(t^2+1))*exp(0-s^2)*cos(x)";
pub const EXAMPLE_A: &str = "1/(t^2+1)";
pub const EXAMPLE_B: &str = "exp(0-s^2)";

#[derive(Debug, Clone)]
pub struct IntegralProblem {
    /// f(t, x, y): x receives the inner integral, y the current value x(t).
    pub f: CompiledExpr,
    pub g: Kernel,
    pub a: CompiledExpr,
    pub b: CompiledExpr,
    pub horizon: f64,
    pub triple: ComparisonTriple,
    pub domain: SampleDomain,
    pub seed: u64,
}

impl IntegralProblem {
    pub fn new(f: Expr, g: Expr, a: Expr, b: Expr, horizon: f64, triple: ComparisonTriple) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Invalid(format!("horizon L must be positive, got {horizon}")));
        }
        let p = IntegralProblem {
            f: CompiledExpr::new(f, &["t", "x", "y"])?,
            g: Kernel::new(g)?,
            a: CompiledExpr::new(a, &["t"])?,
            b: CompiledExpr::new(b, &["s"])?,
            horizon,
            triple,
            domain: SampleDomain::Symmetric,
            seed: 0,
        };
        for k in 0..=1000 {
            let t = horizon * k as f64 / 1000.0;
            let (av, bv) = (p.a_at(t)?, p.b_at(t)?);
            if av < 0.0 || bv < 0.0 {
                return Err(Error::Invalid(format!("a and b must be nonnegative; a({t})={av}, b({t})={bv}")));
            }
        }
        Ok(p)
    }

    pub fn parse(f: &str, g: &str, a: &str, b: &str, horizon: f64, triple: ComparisonTriple) -> Result<Self> {
        Self::new(f.parse()?, g.parse()?, a.parse()?, b.parse()?, horizon, triple)
    }

    /// The worked example with Φ = u, Ψ = ln(1 + u), φ = 1 on [0, 10].
    /// f is only defined for nonnegative value arguments there.
    pub fn example32() -> Self {
        let triple = ComparisonTriple::from_preset(comparison::Preset::Example32, comparison::DEFAULT_K)
            .expect("preset triple is valid");
        Self::parse(EXAMPLE_F, EXAMPLE_G, EXAMPLE_A, EXAMPLE_B, DEFAULT_HORIZON, triple)
            .expect("example problem is valid")
            .with_domain(SampleDomain::Nonnegative)
    }

    pub fn with_domain(mut self, domain: SampleDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_triple(mut self, triple: ComparisonTriple) -> Self {
        self.triple = triple;
        self
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new(self.horizon, n)
    }

    #[inline]
    pub fn f_at(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.f.eval(&[t, x, y]).map_err(|e| Error::eval(format!("f at t={t}, x={x}, y={y}"), e))
    }

    pub fn a_at(&self, t: f64) -> Result<f64> {
        self.a.eval(&[t]).map_err(|e| Error::eval(format!("a at t={t}"), e))
    }

    pub fn b_at(&self, s: f64) -> Result<f64> {
        self.b.eval(&[s]).map_err(|e| Error::eval(format!("b at s={s}"), e))
    }

    /// ∫₀ᵗ |b(s)| ds by composite Simpson.
    pub fn b_integral(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let h = t / B_PANELS as f64;
        let v = (0..=B_PANELS).map(|k| self.b_at(k as f64 * h).map(f64::abs)).collect::<Result<Vec<_>>>()?;
        Ok(integrate_samples(&v, h, QuadRule::Simpson))
    }

    /// a(t) · ∫₀ᵗ |b|, the bound on |∫₀ᵗ g ds|.
    pub fn kernel_envelope(&self, t: f64) -> Result<f64> {
        Ok(self.a_at(t)?.abs() * self.b_integral(t)?)
    }

    fn sample_t(&self, k: usize, n: usize) -> f64 {
        self.horizon * k as f64 / (n.max(2) - 1) as f64
    }
}

/// Largest value of `f` over `n` evenly spaced points of [0, L], with each
/// sampled local maximum polished by golden-section search between its
/// neighbours.
fn sup_on_interval(horizon: f64, n: usize, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let n = n.max(2);
    let ts: Vec<f64> = (0..n).map(|k| horizon * k as f64 / (n - 1) as f64).collect();
    let vs = ts.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let mut best = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut peaks: Vec<usize> =
        (0..n).filter(|&k| (k == 0 || vs[k] >= vs[k - 1]) && (k + 1 == n || vs[k] >= vs[k + 1])).collect();
    peaks.sort_by(|&i, &j| vs[j].total_cmp(&vs[i]));
    for &k in peaks.iter().take(MAX_REFINED_PEAKS) {
        let lo = ts[k.saturating_sub(1)];
        let hi = ts[(k + 1).min(n - 1)];
        best = best.max(golden_max(&f, lo, hi)?);
    }
    Ok(best)
}

fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut best = f1.max(f2);
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
            best = best.max(f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
            best = best.max(f2);
        }
    }
    Ok(best)
}

/// M₀ = sup_t Λ(|a(t)| ∫₀ᵗ |b|). Λ is nondecreasing, so the supremum of its
/// argument is taken first.
pub fn estimate_m0(p: &IntegralProblem, t_samples: usize) -> Result<f64> {
    let sup = sup_on_interval(p.horizon, t_samples, |t| p.kernel_envelope(t))?;
    p.triple.lambda(sup.max(0.0))
}

/// M₁ = Φ(Λ(sup_t |f(t, 0, 0)|)).
pub fn estimate_m1(p: &IntegralProblem, t_samples: usize) -> Result<f64> {
    let sup = sup_on_interval(p.horizon, t_samples, |t| Ok(p.f_at(t, 0.0, 0.0)?.abs()))?;
    p.triple.phi_big_at(p.triple.lambda(sup)?)
}

/// Smallest r = r_max·k/resolution (k ≥ 1) with Ψ(Λ(r)) + M₀ + M₁ ≤ Λ(r).
pub fn find_r0_with(p: &IntegralProblem, m0: f64, m1: f64, r_max: f64, resolution: usize) -> Result<Option<f64>> {
    for k in 1..=resolution {
        let r = r_max * k as f64 / resolution as f64;
        if self_mapping_slack(p, r, m0, m1)? >= 0.0 {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Λ(r) − Ψ(Λ(r)) − M₀ − M₁; nonnegative exactly when r satisfies the
/// self-mapping inequality.
pub fn self_mapping_slack(p: &IntegralProblem, r: f64, m0: f64, m1: f64) -> Result<f64> {
    let l = p.triple.lambda(r)?;
    Ok(l - (p.triple.psi_at(l)? + m0 + m1))
}

/// [`find_r0_with`] using M₀ and M₁ estimated at the default sample count.
/// Intended for triples whose Ψ passes the lemma-1 check.
pub fn find_r0(p: &IntegralProblem, r_max: f64, resolution: usize) -> Result<Option<f64>> {
    let m0 = estimate_m0(p, DEFAULT_T_SAMPLES)?;
    let m1 = estimate_m1(p, DEFAULT_T_SAMPLES)?;
    find_r0_with(p, m0, m1, r_max, resolution)
}

/// |g(t,s,x)| ≤ a(t)·b(s) + tol on Halton samples with s ≤ t ≤ L, |x| ≤ r.
/// Witness: (t, s), (x, |g|), (a(t)·b(s), 0).
pub fn check_kernel_bound(p: &IntegralProblem, samples: usize, r: f64) -> Result<PropertyReport> {
    const NAME: &str = "kernel_bound";
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("sample radius must be positive, got {r}")));
    }
    for [u1, u2, u3] in Halton::<3>::new(p.seed).take(samples) {
        let t = p.horizon * u1;
        let s = t * u2;
        let x = SampleDomain::Symmetric.scale(u3, r);
        let g = p.g.eval(t, s, x)?.abs();
        let bound = p.a_at(t)? * p.b_at(s)?;
        if g > bound + DEFAULT_TOL {
            return Ok(PropertyReport::fail(NAME, vec![(t, s), (x, g), (bound, 0.0)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}

/// Largest sampled a(t) on the last `tail_fraction` of [0, L], and on the
/// whole interval.
pub fn a_tail_max(p: &IntegralProblem, tail_fraction: f64) -> Result<(f64, f64)> {
    let n = DEFAULT_T_SAMPLES;
    let start = p.horizon * (1.0 - tail_fraction);
    let mut tail = f64::NEG_INFINITY;
    let mut all = f64::NEG_INFINITY;
    for k in 0..n {
        let t = p.sample_t(k, n);
        let v = p.a_at(t)?.abs();
        all = all.max(v);
        if t >= start - 1e-12 * p.horizon {
            tail = tail.max(v);
        }
    }
    Ok((tail, all))
}

/// a is "decayed" when its tail maximum is below `threshold`, which
/// defaults to [`DEFAULT_DECAY_RATIO`] times the overall maximum.
/// Witness: (tail max, threshold).
pub fn check_a_decay(p: &IntegralProblem, tail_fraction: f64, threshold: Option<f64>) -> Result<PropertyReport> {
    const NAME: &str = "a_decay";
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Invalid(format!("tail fraction must be in (0, 1], got {tail_fraction}")));
    }
    let (tail, all) = a_tail_max(p, tail_fraction)?;
    let threshold = threshold.unwrap_or(DEFAULT_DECAY_RATIO * all);
    if tail < threshold || tail == 0.0 {
        Ok(PropertyReport::pass(NAME))
    } else {
        Ok(PropertyReport::fail(NAME, vec![(tail, threshold)]))
    }
}

/// ∫₀ᴸ |b| converges under refinement and the last 10% of the interval
/// contributes under 1% of it. Witness: (integral, tail share).
pub fn check_b_integrable(p: &IntegralProblem) -> Result<PropertyReport> {
    const NAME: &str = "b_integrable";
    let simpson = |n: usize, from: f64| -> Result<f64> {
        let h = (p.horizon - from) / n as f64;
        let v = (0..=n).map(|k| p.b_at(from + k as f64 * h).map(f64::abs)).collect::<Result<Vec<_>>>()?;
        Ok(integrate_samples(&v, h, QuadRule::Simpson))
    };
    let coarse = simpson(1000, 0.0)?;
    let fine = simpson(2000, 0.0)?;
    let tail = simpson(200, 0.9 * p.horizon)?;
    let converged = (fine - coarse).abs() <= 1e-6 * fine.abs().max(1e-300);
    let share = if fine > 0.0 { tail / fine } else { 0.0 };
    if converged && share < 0.01 {
        Ok(PropertyReport::pass(NAME))
    } else {
        Ok(PropertyReport::fail(NAME, vec![(fine, share)]))
    }
}

/// f(t, x, 0) evaluates on samples of [0, L] × D(r). Witness: (t, x) of the
/// first failure, (0, 0).
pub fn check_f_defined(p: &IntegralProblem, samples: usize, r: f64) -> Result<(PropertyReport, f64)> {
    const NAME: &str = "f_defined_and_bounded";
    let mut sup = 0.0f64;
    for [u1, u2] in Halton::<2>::new(p.seed).take(samples) {
        let t = p.horizon * u1;
        let x = p.domain.scale(u2, r);
        match p.f.eval(&[t, x, 0.0]) {
            Ok(v) => sup = sup.max(v.abs()),
            Err(_) => return Ok((PropertyReport::fail(NAME, vec![(t, x), (0.0, 0.0)]), sup)),
        }
    }
    Ok((PropertyReport::pass(NAME), sup))
}

/// First sample where f(t, x, y) < 0: ((t, x), (y, f)).
pub fn f_negative_witness(p: &IntegralProblem, samples: usize, r: f64) -> Option<[(f64, f64); 2]> {
    Halton::<3>::new(p.seed).take(samples).find_map(|[u1, u2, u3]| {
        let t = p.horizon * u1;
        let x = p.domain.scale(u2, r);
        let y = p.domain.scale(u3, r);
        match p.f.eval(&[t, x, y]) {
            Ok(v) if v < 0.0 => Some([(t, x), (y, v)]),
            _ => None,
        }
    })
}

/// Both slot conditions of hypothesis 2:
///
/// ```text
/// Φ(Λ(|f(t,x,y₁) − f(t,x,y₂)|)) ≤ Ψ(Λ(|y₁ − y₂|))
/// Φ(Λ(|f(t,x₁,y) − f(t,x₂,y)|)) ≤ Ψ(Λ(|x₁ − x₂|))
/// ```
///
/// on Halton samples of [0, L] × D(r)³. Witness: (t, fixed slot value),
/// (first, second), (lhs, rhs).
pub fn check_f_contraction(p: &IntegralProblem, samples: usize, r: f64) -> Result<PropertyReport> {
    const NAME: &str = "f_contraction";
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("sample radius must be positive, got {r}")));
    }
    let tr = &p.triple;
    let side = |d: f64| -> Result<f64> { tr.phi_big_at(tr.lambda(d)?) };
    let bound = |d: f64| -> Result<f64> { tr.psi_at(tr.lambda(d)?) };
    for [u1, u2, u3, u4] in Halton::<4>::new(p.seed).take(samples) {
        let t = p.horizon * u1;
        let fixed = p.domain.scale(u2, r);
        let q1 = p.domain.scale(u3, r);
        let q2 = p.domain.scale(u4, r);
        let dq = (q1 - q2).abs();
        let rhs = bound(dq)?;
        let in_y = side((p.f_at(t, fixed, q1)? - p.f_at(t, fixed, q2)?).abs())?;
        let in_x = side((p.f_at(t, q1, fixed)? - p.f_at(t, q2, fixed)?).abs())?;
        let lhs = in_y.max(in_x);
        if lhs > rhs + DEFAULT_TOL {
            return Ok(PropertyReport::fail(NAME, vec![(t, fixed), (q1, q2), (lhs, rhs)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}

#[derive(Debug, Clone)]
pub struct HypothesisOptions {
    pub samples: usize,
    pub t_samples: usize,
    pub tail_fraction: f64,
    pub a_decay_threshold: Option<f64>,
    pub r_max: f64,
    pub r_resolution: usize,
    /// Radius for x, y samples; defaults to r₀ when one is found.
    pub radius: Option<f64>,
    pub n_max: usize,
    pub decay_tol: f64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        HypothesisOptions {
            samples: DEFAULT_SAMPLES,
            t_samples: DEFAULT_T_SAMPLES,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            a_decay_threshold: None,
            r_max: DEFAULT_R_MAX,
            r_resolution: DEFAULT_R_RESOLUTION,
            radius: None,
            n_max: DEFAULT_N_MAX,
            decay_tol: DEFAULT_DECAY_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub h1: Vec<PropertyReport>,
    pub h2: Vec<PropertyReport>,
    pub h3: Vec<PropertyReport>,
    pub h4: Vec<PropertyReport>,
    pub m0: f64,
    pub m1: f64,
    pub r0: Option<f64>,
    pub sample_radius: f64,
    pub f_origin_sup: f64,
    pub a_tail_max: f64,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn groups(&self) -> [(&'static str, &[PropertyReport]); 4] {
        [("h1", &self.h1), ("h2", &self.h2), ("h3", &self.h3), ("h4", &self.h4)]
    }

    pub fn all_passed(&self) -> bool {
        self.groups().iter().all(|(_, g)| g.iter().all(|r| r.passed))
    }

    pub fn failures(&self) -> impl Iterator<Item = (&'static str, &PropertyReport)> {
        self.groups().into_iter().flat_map(|(h, g)| g.iter().filter(|r| !r.passed).map(move |r| (h, r)))
    }
}

fn status(reports: &[PropertyReport]) -> &'static str {
    if reports.iter().all(|r| r.passed) {
        "pass"
    } else {
        "fail"
    }
}

fn witness_text(r: &PropertyReport) -> String {
    r.witness.iter().map(|(u, v)| format!("({u}, {v})")).collect::<Vec<_>>().join(" ")
}

/// Plain-text `key = value` lines, property lines, then a WARNINGS section.
impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, group) in self.groups() {
            writeln!(f, "{key} = {}", status(group))?;
        }
        writeln!(f, "M0 = {}", self.m0)?;
        writeln!(f, "M1 = {}", self.m1)?;
        match self.r0 {
            Some(r) => writeln!(f, "r0 = {r}")?,
            None => writeln!(f, "r0 = none")?,
        }
        writeln!(f, "sample_radius = {}", self.sample_radius)?;
        writeln!(f, "f_origin_sup = {}", self.f_origin_sup)?;
        writeln!(f, "a_tail_max = {}", self.a_tail_max)?;
        writeln!(f, "h4_form = Psi(Lambda(r0)) + M0 + M1 <= Lambda(r0)")?;
        writeln!(f, "upper_semicontinuity = assumed")?;
        for (key, group) in self.groups() {
            for r in group {
                writeln!(f, "{key}.{r}")?;
            }
        }
        writeln!(f, "WARNINGS")?;
        if self.warnings.is_empty() {
            writeln!(f, "none")?;
        }
        for w in &self.warnings {
            writeln!(f, "WARNING: {w}")?;
        }
        Ok(())
    }
}

/// Runs every hypothesis check on `p`.
pub fn check_hypotheses(p: &IntegralProblem, opts: &HypothesisOptions) -> Result<HypothesisReport> {
    let tr = &p.triple;
    let (dom, n) = (tr.check_domain, tr.check_points);

    let m0 = estimate_m0(p, opts.t_samples)?;
    let m1 = estimate_m1(p, opts.t_samples)?;
    let r0 = find_r0_with(p, m0, m1, opts.r_max, opts.r_resolution)?;
    let radius = opts.radius.or(r0).unwrap_or(DEFAULT_SAMPLE_RADIUS);

    let (h1_report, f_origin_sup) = check_f_defined(p, opts.samples, radius)?;
    let h1 = vec![h1_report];

    let ts = tr.lemma_grid();
    let mut h2 = vec![
        comparison::check_nondecreasing_named(&tr.psi, dom, n, "psi_nondecreasing")?,
        comparison::check_concave_named(&tr.psi, dom, n, "psi_concave")?,
        comparison::check_below_identity(tr, &ts)?,
        comparison::check_lemma1_equivalence(tr, &ts, opts.n_max, opts.decay_tol)?,
        comparison::check_nondecreasing_named(&tr.phi_big, dom, n, "phi_big_nondecreasing")?,
        comparison::check_subadditive_named(&tr.phi_big, dom, n, "phi_big_subadditive")?,
        comparison::check_dominates_identity_named(&tr.phi_big, dom, n, "phi_big_dominates_identity")?,
        comparison::check_vanishes_at_zero(tr)?,
        comparison::check_phi_positivity(tr, &comparison::default_epsilons(dom))?,
    ];
    // f may be undefined off its domain; report rather than abort
    h2.push(match check_f_contraction(p, opts.samples, radius) {
        Ok(r) => r,
        Err(Error::Eval { .. }) => PropertyReport::fail("f_contraction", vec![(f64::NAN, f64::NAN)]),
        Err(e) => return Err(e),
    });

    let h3 = vec![
        check_kernel_bound(p, opts.samples, radius)?,
        check_a_decay(p, opts.tail_fraction, opts.a_decay_threshold)?,
        check_b_integrable(p)?,
    ];
    let (a_tail, _) = a_tail_max(p, opts.tail_fraction)?;

    let h4 = vec![match r0 {
        Some(_) => PropertyReport::pass("self_mapping_radius"),
        None => {
            let slack = self_mapping_slack(p, opts.r_max, m0, m1)?;
            PropertyReport::fail("self_mapping_radius", vec![(opts.r_max, slack)])
        }
    }];

    let mut report = HypothesisReport {
        h1,
        h2,
        h3,
        h4,
        m0,
        m1,
        r0,
        sample_radius: radius,
        f_origin_sup,
        a_tail_max: a_tail,
        warnings: Vec::new(),
    };

    let mut warnings = Vec::new();
    for (h, r) in report.failures() {
        let detail = match r.name.as_str() {
            "phi_big_dominates_identity" => " (Phi(t) >= t is required; e.g. Phi = k*u with k < 1 violates it)",
            _ => "",
        };
        warnings.push(format!("hypothesis {h}: {} failed{detail}; witness {}", r.name, witness_text(r)));
    }
    if let Some([(t, x), (y, v)]) = f_negative_witness(p, opts.samples, radius) {
        warnings.push(format!("hypothesis h1: f is not R+-valued on samples; f(t={t}, x={x}, y={y}) = {v}"));
    }
    report.warnings = warnings;
    Ok(report)
}
