//! The comparison triple (Ψ, Φ, φ) and sampled checks of the properties a
//! generalized condensing inequality
//!
//! ```text
//! Φ(Λ(μ(TX))) ≤ Ψ(Λ(μ(X))),   Λ(u) = ∫₀ᵘ φ(γ) dγ
//! ```
//!
//! needs from it: Ψ nondecreasing, concave, with Ψⁿ(t) → 0 (equivalently
//! Ψ(t) < t for nondecreasing Ψ); Φ nondecreasing, subadditive, Φ(t) ≥ t;
//! φ with Λ(ε) > 0 for every ε > 0.
//!
//! Everything is checked on finite samples with explicit tolerances. Upper
//! semicontinuity is assumed, not checked.

use std::fmt;
use std::str::FromStr;

use crate::expr::{BinOp, CompiledExpr, Expr, ExprKind};
use crate::report::PropertyReport;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_TOL_MONO: f64 = 1e-12;
pub const DEFAULT_CHECK_DOMAIN: f64 = 100.0;
pub const DEFAULT_CHECK_POINTS: usize = 10_000;
/// Iterations used for the Ψⁿ(t) → 0 test. ln(1 + u) decays like 2/n, so
/// reaching 10⁻³ from t ≤ 100 takes about 2000 steps.
pub const DEFAULT_N_MAX: usize = 5_000;
pub const DEFAULT_DECAY_TOL: f64 = 1e-3;
pub const DEFAULT_LAMBDA_RESOLUTION: usize = 256;
pub const DEFAULT_LEMMA_POINTS: usize = 1_000;
pub const DEFAULT_K: f64 = 0.5;

/// Named parameter sets mirroring the classical special cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Φ = u, Ψ = k·u, φ = 1: the inequality is μ(TX) ≤ k μ(X).
    Darbo,
    /// Φ = u, Ψ = k·u, non-constant density φ = 2γ.
    Branciari,
    /// Φ = u, Ψ = ln(1 + u), φ = 1.
    Aghajani,
    /// The worked example; same triple as `Aghajani` plus a problem.
    Example32,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Darbo => "darbo",
            Preset::Branciari => "branciari",
            Preset::Aghajani => "aghajani",
            Preset::Example32 => "example32",
        }
    }

    /// (psi, phi_big, phi_density) sources for this preset.
    pub fn sources(self, k: f64) -> (String, String, String) {
        match self {
            Preset::Darbo => (format!("{k}*u"), "u".into(), "1".into()),
            Preset::Branciari => (format!("{k}*u"), "u".into(), "2*gamma".into()),
            Preset::Aghajani | Preset::Example32 => ("ln(1+u)".into(), "u".into(), "1".into()),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "darbo" => Ok(Preset::Darbo),
            "branciari" => Ok(Preset::Branciari),
            "aghajani" => Ok(Preset::Aghajani),
            "example32" => Ok(Preset::Example32),
            other => Err(Error::Invalid(format!(
                "unknown preset {other:?} (expected darbo, branciari, aghajani or example32)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonTriple {
    pub psi: CompiledExpr,
    pub phi_big: CompiledExpr,
    pub phi_density: CompiledExpr,
    pub check_domain: f64,
    pub check_points: usize,
    pub lambda_resolution: usize,
    pub preset: Option<Preset>,
    density_const: Option<f64>,
}

impl ComparisonTriple {
    /// Builds a triple from Ψ(u), Φ(u) and φ(gamma) and validates it on the
    /// default sample grid.
    pub fn new(psi: Expr, phi_big: Expr, phi_density: Expr) -> Result<Self> {
        Self::with_domain(psi, phi_big, phi_density, DEFAULT_CHECK_DOMAIN, DEFAULT_CHECK_POINTS)
    }

    pub fn with_domain(
        psi: Expr,
        phi_big: Expr,
        phi_density: Expr,
        check_domain: f64,
        check_points: usize,
    ) -> Result<Self> {
        if !(check_domain > 0.0 && check_domain.is_finite()) {
            return Err(Error::Invalid(format!("check domain must be positive, got {check_domain}")));
        }
        if check_points < 2 {
            return Err(Error::Invalid("need at least 2 check points".into()));
        }
        let density_const = if phi_density.depends_on("gamma") { None } else { phi_density.constant_value() };
        let triple = ComparisonTriple {
            psi: CompiledExpr::new(psi, &["u"])?,
            phi_big: CompiledExpr::new(phi_big, &["u"])?,
            phi_density: CompiledExpr::new(phi_density, &["gamma"])?,
            check_domain,
            check_points,
            lambda_resolution: DEFAULT_LAMBDA_RESOLUTION,
            preset: None,
            density_const,
        };
        triple.validate()?;
        Ok(triple)
    }

    pub fn parse(psi: &str, phi_big: &str, phi_density: &str) -> Result<Self> {
        Self::new(psi.parse()?, phi_big.parse()?, phi_density.parse()?)
    }

    pub fn from_preset(preset: Preset, k: f64) -> Result<Self> {
        let (psi, phi_big, phi_density) = preset.sources(k);
        let mut triple = Self::parse(&psi, &phi_big, &phi_density)?;
        triple.preset = Some(preset);
        Ok(triple)
    }

    fn validate(&self) -> Result<()> {
        for u in sample_grid(self.check_domain, self.check_points.min(1001)) {
            self.psi_at(u)?;
            self.phi_big_at(u)?;
            let d = self.density_at(u)?;
            if d < 0.0 {
                return Err(Error::Invalid(format!("phi_density is negative at gamma={u}: {d}")));
            }
        }
        let (p0, f0) = (self.psi_at(0.0)?, self.phi_big_at(0.0)?);
        if p0 < 0.0 || f0 < 0.0 {
            return Err(Error::Invalid(format!("psi(0)={p0} and phi_big(0)={f0} must be nonnegative")));
        }
        Ok(())
    }

    pub fn psi_at(&self, u: f64) -> Result<f64> {
        self.psi.eval(&[u]).map_err(|e| Error::eval(format!("psi at u={u}"), e))
    }

    pub fn phi_big_at(&self, u: f64) -> Result<f64> {
        self.phi_big.eval(&[u]).map_err(|e| Error::eval(format!("phi_big at u={u}"), e))
    }

    pub fn density_at(&self, gamma: f64) -> Result<f64> {
        self.phi_density.eval(&[gamma]).map_err(|e| Error::eval(format!("phi_density at gamma={gamma}"), e))
    }

    /// Λ(u) at the triple's default resolution.
    pub fn lambda(&self, u: f64) -> Result<f64> {
        lambda(self, u, self.lambda_resolution)
    }

    /// `Some(k)` when the triple is literally Φ = u, φ ≡ 1, Ψ = k·u with
    /// 0 ≤ k < 1, i.e. the inequality reduces to μ(TX) ≤ k μ(X).
    pub fn darbo_form(&self) -> Option<f64> {
        if !self.phi_big.expr().is_var("u") || self.density_const != Some(1.0) {
            return None;
        }
        let k = linear_coefficient(self.psi.expr())?;
        (0.0..1.0).contains(&k).then_some(k)
    }

    /// Sample points used by the lemma-1 check: `DEFAULT_LEMMA_POINTS`
    /// evenly spaced points in (0, U_max].
    pub fn lemma_grid(&self) -> Vec<f64> {
        let n = DEFAULT_LEMMA_POINTS;
        (1..=n).map(|k| self.check_domain * k as f64 / n as f64).collect()
    }
}

fn linear_coefficient(e: &Expr) -> Option<f64> {
    match &e.kind {
        ExprKind::Var(v) if v == "u" => Some(1.0),
        ExprKind::Binary(BinOp::Mul, l, r) => match (l.constant_value(), r.constant_value()) {
            (Some(k), None) if r.is_var("u") => Some(k),
            (None, Some(k)) if l.is_var("u") => Some(k),
            _ => None,
        },
        _ => None,
    }
}

/// `n` evenly spaced points covering [0, domain], endpoints included.
pub fn sample_grid(domain: f64, n: usize) -> impl Iterator<Item = f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n.max(2)).map(move |k| domain * k as f64 / last)
}

fn eval_at(e: &CompiledExpr, u: f64) -> Result<f64> {
    e.eval(&[u]).map_err(|err| Error::eval(format!("{e} at {}={u}", e.vars()[0]), err))
}

fn sampled(e: &CompiledExpr, domain: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let us: Vec<f64> = sample_grid(domain, n).collect();
    let vs = us.iter().map(|&u| eval_at(e, u)).collect::<Result<Vec<_>>>()?;
    Ok((us, vs))
}

/// Λ(u) = ∫₀ᵘ φ(γ) dγ by composite Simpson with `resolution` panels
/// (rounded up to even). Constant densities integrate in closed form.
pub fn lambda(triple: &ComparisonTriple, u: f64, resolution: usize) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Invalid(format!("lambda needs u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if let Some(c) = triple.density_const {
        return Ok(c * u);
    }
    let m = resolution.max(2).next_multiple_of(2);
    let h = u / m as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..m {
        let v = triple.density_at(k as f64 * h)?;
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    let ends = triple.density_at(0.0)? + triple.density_at(u)?;
    Ok(h / 3.0 * (ends + 4.0 * odd + 2.0 * even))
}

pub fn check_nondecreasing(e: &CompiledExpr, domain: f64, n: usize) -> Result<PropertyReport> {
    check_nondecreasing_named(e, domain, n, "nondecreasing")
}

pub(crate) fn check_nondecreasing_named(e: &CompiledExpr, domain: f64, n: usize, name: &str) -> Result<PropertyReport> {
    let (us, vs) = sampled(e, domain, n)?;
    for k in 0..us.len() - 1 {
        if vs[k + 1] < vs[k] - DEFAULT_TOL_MONO {
            return Ok(PropertyReport::fail(name, vec![(us[k], vs[k]), (us[k + 1], vs[k + 1])]));
        }
    }
    Ok(PropertyReport::pass(name))
}

/// Midpoint concavity on symmetric sample triples (u_i, u_{i+m}, u_{i+2m})
/// for spacings m = 1, 2, 4, …
pub fn check_concave(e: &CompiledExpr, domain: f64, n: usize) -> Result<PropertyReport> {
    check_concave_named(e, domain, n, "concave")
}

pub(crate) fn check_concave_named(e: &CompiledExpr, domain: f64, n: usize, name: &str) -> Result<PropertyReport> {
    let (us, vs) = sampled(e, domain, n)?;
    let mut m = 1;
    while 2 * m < us.len() {
        for i in 0..us.len() - 2 * m {
            let (a, mid, b) = (vs[i], vs[i + m], vs[i + 2 * m]);
            if mid < 0.5 * (a + b) - DEFAULT_TOL {
                return Ok(PropertyReport::fail(name, vec![(us[i], a), (us[i + m], mid), (us[i + 2 * m], b)]));
            }
        }
        m *= 2;
    }
    Ok(PropertyReport::pass(name))
}

/// e(a + b) ≤ e(a) + e(b) over all sample pairs whose sum is a sample point.
pub fn check_subadditive(e: &CompiledExpr, domain: f64, n: usize) -> Result<PropertyReport> {
    check_subadditive_named(e, domain, n, "subadditive")
}

pub(crate) fn check_subadditive_named(e: &CompiledExpr, domain: f64, n: usize, name: &str) -> Result<PropertyReport> {
    let (us, vs) = sampled(e, domain, n)?;
    let last = us.len() - 1;
    for i in 0..=last / 2 {
        for j in i..=last - i {
            if vs[i + j] > vs[i] + vs[j] + DEFAULT_TOL {
                return Ok(PropertyReport::fail(name, vec![(us[i], vs[i]), (us[j], vs[j]), (us[i + j], vs[i + j])]));
            }
        }
    }
    Ok(PropertyReport::pass(name))
}

pub fn check_dominates_identity(e: &CompiledExpr, domain: f64, n: usize) -> Result<PropertyReport> {
    check_dominates_identity_named(e, domain, n, "dominates_identity")
}

pub(crate) fn check_dominates_identity_named(
    e: &CompiledExpr,
    domain: f64,
    n: usize,
    name: &str,
) -> Result<PropertyReport> {
    let (us, vs) = sampled(e, domain, n)?;
    match us.iter().zip(&vs).find(|(u, v)| **v < **u - DEFAULT_TOL) {
        Some((&u, &v)) => Ok(PropertyReport::fail(name, vec![(u, v)])),
        None => Ok(PropertyReport::pass(name)),
    }
}

/// (Ψᵏ(t0)) for k = 0..=n_max, verbatim.
pub fn iterate_psi(triple: &ComparisonTriple, t0: f64, n_max: usize) -> Result<Vec<f64>> {
    let mut seq = Vec::with_capacity(n_max + 1);
    let mut v = t0;
    seq.push(v);
    for k in 1..=n_max {
        v = triple.psi.eval(&[v]).map_err(|e| Error::eval(format!("psi iterate {k} from t0={t0}"), e))?;
        seq.push(v);
    }
    Ok(seq)
}

fn psi_power(triple: &ComparisonTriple, t: f64, n: usize) -> Result<f64> {
    let mut v = t;
    for k in 1..=n {
        v = triple.psi.eval(&[v]).map_err(|e| Error::eval(format!("psi iterate {k} from t0={t}"), e))?;
    }
    Ok(v)
}

/// Ψ(t) < t − tol at every sample t > 0.
pub fn check_below_identity(triple: &ComparisonTriple, ts: &[f64]) -> Result<PropertyReport> {
    const NAME: &str = "psi_below_identity";
    for &t in ts.iter().filter(|t| **t > 0.0) {
        let v = triple.psi_at(t)?;
        if !(v < t - DEFAULT_TOL) {
            return Ok(PropertyReport::fail(NAME, vec![(t, v)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}

/// Ψ^{n_max}(t) < decay_tol at every sample t > 0.
pub fn check_psi_decay(triple: &ComparisonTriple, ts: &[f64], n_max: usize, decay_tol: f64) -> Result<PropertyReport> {
    const NAME: &str = "psi_iterates_decay";
    for &t in ts.iter().filter(|t| **t > 0.0) {
        let v = psi_power(triple, t, n_max)?;
        if !(v.abs() < decay_tol) {
            return Ok(PropertyReport::fail(NAME, vec![(t, v)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}

/// Sampled form of "Ψⁿ(t) → 0 ⇔ Ψ(t) < t" for nondecreasing Ψ: passes iff
/// the two predicates agree at every sample. The witness is
/// `(t, Ψ^{n_max}(t)); (t, Ψ(t))` at the first disagreement.
pub fn check_lemma1_equivalence(
    triple: &ComparisonTriple,
    ts: &[f64],
    n_max: usize,
    decay_tol: f64,
) -> Result<PropertyReport> {
    const NAME: &str = "psi_lemma1_equivalence";
    for &t in ts.iter().filter(|t| **t > 0.0) {
        let decayed = psi_power(triple, t, n_max)?;
        let once = triple.psi_at(t)?;
        let a = decayed.abs() < decay_tol;
        let b = once < t - DEFAULT_TOL;
        if a != b {
            return Ok(PropertyReport::fail(NAME, vec![(t, decayed), (t, once)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}

pub fn check_phi_positivity(triple: &ComparisonTriple, epsilons: &[f64]) -> Result<PropertyReport> {
    const NAME: &str = "phi_density_positivity";
    for &eps in epsilons {
        let l = triple.lambda(eps)?;
        if !(l > 0.0) {
            return Ok(PropertyReport::fail(NAME, vec![(eps, l)]));
        }
    }
    Ok(PropertyReport::pass(NAME))
}

/// Φ(0) = 0 within tolerance; with Φ(t) ≥ t and continuity at 0 this gives
/// Φ(xₙ) → 0 ⇔ xₙ → 0.
pub fn check_vanishes_at_zero(triple: &ComparisonTriple) -> Result<PropertyReport> {
    const NAME: &str = "phi_big_vanishes_at_zero";
    let v = triple.phi_big_at(0.0)?;
    if v.abs() <= DEFAULT_TOL {
        Ok(PropertyReport::pass(NAME))
    } else {
        Ok(PropertyReport::fail(NAME, vec![(0.0, v)]))
    }
}

/// Default ε values for the density positivity check.
pub fn default_epsilons(domain: f64) -> Vec<f64> {
    vec![1e-6, 1e-3, 1.0, domain]
}

/// Every property of the triple, in a fixed order.
pub fn comparison_suite(triple: &ComparisonTriple, n_max: usize, decay_tol: f64) -> Result<Vec<PropertyReport>> {
    let (dom, n) = (triple.check_domain, triple.check_points);
    let ts = triple.lemma_grid();
    Ok(vec![
        check_nondecreasing_named(&triple.psi, dom, n, "psi_nondecreasing")?,
        check_concave_named(&triple.psi, dom, n, "psi_concave")?,
        check_below_identity(triple, &ts)?,
        check_psi_decay(triple, &ts, n_max, decay_tol)?,
        check_lemma1_equivalence(triple, &ts, n_max, decay_tol)?,
        check_nondecreasing_named(&triple.phi_big, dom, n, "phi_big_nondecreasing")?,
        check_subadditive_named(&triple.phi_big, dom, n, "phi_big_subadditive")?,
        check_dominates_identity_named(&triple.phi_big, dom, n, "phi_big_dominates_identity")?,
        check_vanishes_at_zero(triple)?,
        check_phi_positivity(triple, &default_epsilons(dom))?,
    ])
}
