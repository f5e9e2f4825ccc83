//! Uniform grids on `[0, L]`, functions sampled on them, and the quadrature
//! for the variable-limit inner integral `t ↦ ∫₀ᵗ g(t, s, x(s)) ds`.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use crate::expr::{BinOp, CompiledExpr, Expr, ExprKind};
use crate::{Error, Result};

pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_NODES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Invalid(format!("grid length must be positive, got {length}")));
        }
        if n < 2 {
            return Err(Error::Invalid(format!("grid needs at least 2 nodes, got {n}")));
        }
        Ok(Grid { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// The grid with every interval halved (`2n − 1` nodes). Node `i` of
    /// `self` is node `2i` of the result, bit-for-bit.
    pub fn refined(&self) -> Grid {
        Grid { length: self.length, n: 2 * self.n - 1 }
    }
}

/// A real function known at the nodes of a [`Grid`]. Values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value {} at node {i}", values[i])));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    /// Samples an expression in `t` at every node.
    pub fn from_expr(grid: Grid, e: &CompiledExpr) -> Result<Self> {
        let values = grid
            .nodes()
            .map(|t| e.eval(&[t]).map_err(|err| Error::eval(format!("{e} at t={t}"), err)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `t,x`, one row per node, 17 significant digits, LF.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"t,x\n")?;
        for (t, x) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{t:.16e},{x:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Reads the format written by [`write_csv`](Self::write_csv). The node
    /// column must describe a uniform grid starting at 0.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose().map_err(|e| Error::Invalid(e.to_string()))?.unwrap_or_default();
        if header.trim() != "t,x" {
            return Err(Error::Invalid(format!("expected header \"t,x\", got {header:?}")));
        }
        let mut ts = Vec::new();
        let mut xs = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Invalid(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (t, x) =
                line.split_once(',').ok_or_else(|| Error::Invalid(format!("row {}: expected two columns", k + 2)))?;
            let parse = |s: &str| f64::from_str(s.trim()).map_err(|e| Error::Invalid(format!("row {}: {e}", k + 2)));
            ts.push(parse(t)?);
            xs.push(parse(x)?);
        }
        let last = *ts.last().ok_or_else(|| Error::Invalid("no data rows".into()))?;
        let grid = Grid::new(last, ts.len())?;
        for (i, &t) in ts.iter().enumerate() {
            if (t - grid.node(i)).abs() > 1e-12 * last.max(1.0) {
                return Err(Error::Invalid(format!("row {}: node {t} is not on a uniform grid", i + 2)));
            }
        }
        Self::new(grid, xs)
    }
}

impl fmt::Display for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GridFunction(n={}, L={}, min={}, max={})",
            self.grid.len(),
            self.grid.length(),
            self.min(),
            self.max()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadRule {
    #[default]
    Trapezoid,
    /// Composite Simpson; when the panel count is odd the last panel uses
    /// the trapezoid rule.
    Simpson,
}

impl FromStr for QuadRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(QuadRule::Trapezoid),
            "simpson" => Ok(QuadRule::Simpson),
            other => Err(Error::Invalid(format!("unknown quadrature rule {other:?}"))),
        }
    }
}

impl fmt::Display for QuadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadRule::Trapezoid => "trapezoid",
            QuadRule::Simpson => "simpson",
        })
    }
}

/// Composite rule over equally spaced samples `v[0..]` with spacing `h`.
pub fn integrate_samples(v: &[f64], h: f64, rule: QuadRule) -> f64 {
    let i = match v.len() {
        0 | 1 => return 0.0,
        len => len - 1,
    };
    match rule {
        QuadRule::Trapezoid => {
            let interior: f64 = v[1..i].iter().sum();
            h * (0.5 * (v[0] + v[i]) + interior)
        }
        QuadRule::Simpson => {
            if i == 1 {
                return 0.5 * h * (v[0] + v[1]);
            }
            let even_end = if i % 2 == 0 { i } else { i - 1 };
            let mut odd = 0.0;
            let mut even = 0.0;
            for (j, &x) in v.iter().enumerate().take(even_end).skip(1) {
                if j % 2 == 1 {
                    odd += x;
                } else {
                    even += x;
                }
            }
            let simpson = h / 3.0 * (v[0] + v[even_end] + 4.0 * odd + 2.0 * even);
            if even_end == i {
                simpson
            } else {
                simpson + 0.5 * h * (v[i - 1] + v[i])
            }
        }
    }
}

/// `out[i] = integrate_samples(&v[..=i], h, rule)` for every `i`, in O(n)
/// via running sums.
pub fn cumulative_integral(v: &[f64], h: f64, rule: QuadRule) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    match rule {
        QuadRule::Trapezoid => {
            let mut acc = 0.0;
            for i in 1..n {
                acc += 0.5 * h * (v[i - 1] + v[i]);
                out[i] = acc;
            }
        }
        QuadRule::Simpson => {
            // running Simpson value at even nodes, trapezoid tail for odd ones
            let mut even_acc = 0.0;
            for i in 1..n {
                if i % 2 == 0 {
                    even_acc += h / 3.0 * (v[i - 2] + 4.0 * v[i - 1] + v[i]);
                    out[i] = even_acc;
                } else {
                    out[i] = even_acc + 0.5 * h * (v[i - 1] + v[i]);
                }
            }
        }
    }
    out
}

/// The kernel g(t, s, x) of the inner integral, with a precomputed split
/// g = A(t) · K(s, x) when the top-level product structure allows it.
#[derive(Debug, Clone)]
pub struct Kernel {
    g: CompiledExpr,
    split: Option<(CompiledExpr, CompiledExpr)>,
}

impl Kernel {
    pub const VARS: [&'static str; 3] = ["t", "s", "x"];

    pub fn new(g: Expr) -> Result<Self> {
        let split = separate(&g)
            .map(|(a, k)| -> Result<_> { Ok((CompiledExpr::new(a, &["t"])?, CompiledExpr::new(k, &["s", "x"])?)) })
            .transpose()?;
        Ok(Kernel { g: CompiledExpr::new(g, &Self::VARS)?, split })
    }

    pub fn parse(source: &str) -> Result<Self> {
        Self::new(source.parse()?)
    }

    pub fn expr(&self) -> &Expr {
        self.g.expr()
    }

    pub fn is_separable(&self) -> bool {
        self.split.is_some()
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64, x: f64) -> Result<f64> {
        self.g.eval(&[t, s, x]).map_err(|e| Error::eval(format!("g at t={t}, s={s}, x={x}"), e))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.g.fmt(f)
    }
}

fn collect_factors<'a>(e: &'a Expr, reciprocal: bool, out: &mut Vec<(&'a Expr, bool)>, sign: &mut bool) {
    match &e.kind {
        ExprKind::Binary(BinOp::Mul, l, r) => {
            collect_factors(l, reciprocal, out, sign);
            collect_factors(r, reciprocal, out, sign);
        }
        ExprKind::Binary(BinOp::Div, l, r) => {
            collect_factors(l, reciprocal, out, sign);
            collect_factors(r, !reciprocal, out, sign);
        }
        ExprKind::Neg(inner) => {
            *sign = !*sign;
            collect_factors(inner, reciprocal, out, sign);
        }
        _ => out.push((e, reciprocal)),
    }
}

fn rebuild(factors: &[(&Expr, bool)]) -> Expr {
    let mut acc: Option<Expr> = None;
    for (f, _) in factors.iter().filter(|(_, r)| !r) {
        acc = Some(match acc {
            None => (*f).clone(),
            Some(a) => Expr::binary(BinOp::Mul, a, (*f).clone()),
        });
    }
    let mut acc = acc.unwrap_or_else(|| Expr::constant(1.0));
    for (f, _) in factors.iter().filter(|(_, r)| *r) {
        acc = Expr::binary(BinOp::Div, acc, (*f).clone());
    }
    acc
}

/// Splits g into (A(t), K(s, x)) with g = A·K when every top-level factor
/// depends either on t alone or on s and x alone.
fn separate(g: &Expr) -> Option<(Expr, Expr)> {
    let mut factors = Vec::new();
    let mut negative = false;
    collect_factors(g, false, &mut factors, &mut negative);
    let mut t_part = Vec::new();
    let mut sx_part = Vec::new();
    for (f, recip) in factors {
        let on_t = f.depends_on("t");
        let on_sx = f.depends_on("s") || f.depends_on("x");
        match (on_t, on_sx) {
            (true, true) => return None,
            (false, true) => sx_part.push((f, recip)),
            _ => t_part.push((f, recip)),
        }
    }
    let mut a = rebuild(&t_part);
    if negative {
        a = Expr::neg(a);
    }
    Some((a, rebuild(&sx_part)))
}

fn check_same_grid(x: &GridFunction, y: &GridFunction) -> Result<()> {
    if x.grid != y.grid {
        return Err(Error::Invalid(format!("grid mismatch: {:?} vs {:?}", x.grid, y.grid)));
    }
    Ok(())
}

/// ∫₀^{t_i} g(t_i, s, x(s)) ds by the composite rule over nodes s_0..s_i.
pub fn inner_integral(g: &Kernel, x: &GridFunction, i: usize, rule: QuadRule) -> Result<f64> {
    let grid = x.grid();
    if i >= grid.len() {
        return Err(Error::Invalid(format!("node {i} out of range for {} nodes", grid.len())));
    }
    if i == 0 {
        return Ok(0.0);
    }
    let t = grid.node(i);
    let samples = (0..=i).map(|j| g.eval(t, grid.node(j), x.values()[j])).collect::<Result<Vec<_>>>()?;
    Ok(integrate_samples(&samples, grid.spacing(), rule))
}

/// The function t_i ↦ ∫₀^{t_i} g(t_i, s, x(s)) ds at every node.
///
/// Separable kernels cost O(n) evaluations through running sums; general
/// kernels take the direct O(n²) route.
pub fn inner_integral_all(g: &Kernel, x: &GridFunction, rule: QuadRule) -> Result<GridFunction> {
    let grid = *x.grid();
    let h = grid.spacing();
    let values = match &g.split {
        Some((a, k)) => {
            let ks = grid
                .nodes()
                .zip(x.values())
                .map(|(s, &xv)| k.eval(&[s, xv]).map_err(|e| Error::eval(format!("g at s={s}, x={xv}"), e)))
                .collect::<Result<Vec<_>>>()?;
            let cumulative = cumulative_integral(&ks, h, rule);
            grid.nodes()
                .zip(cumulative)
                .map(|(t, c)| {
                    let at = a.eval(&[t]).map_err(|e| Error::eval(format!("g at t={t}"), e))?;
                    Ok(at * c)
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => (0..grid.len()).map(|i| inner_integral(g, x, i, rule)).collect::<Result<Vec<_>>>()?,
    };
    GridFunction::new(grid, values)
}

/// max_i |x_i − y_i| over a shared grid.
pub fn sup_norm_distance(x: &GridFunction, y: &GridFunction) -> Result<f64> {
    check_same_grid(x, y)?;
    Ok(x.values().iter().zip(y.values()).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(src: &str) -> Kernel {
        Kernel::parse(src).unwrap()
    }

    #[test]
    fn last_node_is_horizon() {
        let g = Grid::new(10.0, 2001).unwrap();
        assert!((g.node(2000) - 10.0).abs() <= 1e-12 * 10.0);
        assert_eq!(g.node(0), 0.0);
        let r = g.refined();
        for i in 0..g.len() {
            assert_eq!(g.node(i).to_bits(), r.node(2 * i).to_bits());
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::new(0.0, 10).is_err());
        assert!(Grid::new(1.0, 1).is_err());
        assert!(GridFunction::new(Grid::new(1.0, 3).unwrap(), vec![0.0; 2]).is_err());
        assert!(GridFunction::new(Grid::new(1.0, 2).unwrap(), vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn first_node_integral_is_zero() {
        let grid = Grid::new(1.0, 11).unwrap();
        let x = GridFunction::zeros(grid);
        for rule in [QuadRule::Trapezoid, QuadRule::Simpson] {
            assert_eq!(inner_integral(&kernel("exp(t*s*x)+1"), &x, 0, rule).unwrap(), 0.0);
        }
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        for n in [2, 3, 8, 101] {
            let grid = Grid::new(1.0, n).unwrap();
            let x = GridFunction::zeros(grid);
            let v = inner_integral(&kernel("s"), &x, n - 1, QuadRule::Trapezoid).unwrap();
            assert!((v - 0.5).abs() < 1e-15, "n={n}: {v}");
        }
    }

    #[test]
    fn simpson_gaussian_matches_error_function() {
        let grid = Grid::new(1.0, 201).unwrap();
        let x = GridFunction::zeros(grid);
        let v = inner_integral(&kernel("exp(0-s^2)"), &x, 200, QuadRule::Simpson).unwrap();
        // √π/2 · erf(1)
        let oracle = 0.746_824_132_812_427;
        assert!((v - oracle).abs() < 1e-6, "{v}");
    }

    #[test]
    fn simpson_odd_panel_count_falls_back_on_last_panel() {
        let v = [1.0, 2.0, 5.0, 3.0];
        let h = 0.5;
        let expected = h / 3.0 * (1.0 + 8.0 + 5.0) + 0.5 * h * (5.0 + 3.0);
        assert_eq!(integrate_samples(&v, h, QuadRule::Simpson), expected);
        assert_eq!(integrate_samples(&v[..2], h, QuadRule::Simpson), 0.5 * h * 3.0);
    }

    #[test]
    fn cumulative_matches_direct_rule() {
        let v: Vec<f64> = (0..40).map(|k| ((k as f64) * 0.3).sin() + 0.1 * k as f64).collect();
        for rule in [QuadRule::Trapezoid, QuadRule::Simpson] {
            let cum = cumulative_integral(&v, 0.1, rule);
            for i in 0..v.len() {
                let direct = integrate_samples(&v[..=i], 0.1, rule);
                assert!((cum[i] - direct).abs() < 1e-13 * (1.0 + direct.abs()), "{rule} i={i}");
            }
        }
    }

    #[test]
    fn constant_kernel_integrates_to_t() {
        let grid = Grid::new(2.0, 51).unwrap();
        let x = GridFunction::from_fn(grid, |t| t.sin()).unwrap();
        for rule in [QuadRule::Trapezoid, QuadRule::Simpson] {
            let out = inner_integral_all(&kernel("1"), &x, rule).unwrap();
            for (t, v) in grid.nodes().zip(out.values()) {
                assert!((t - v).abs() < 1e-13, "{t} vs {v}");
            }
        }
    }

    #[test]
    fn nonnegative_integrand_gives_monotone_values() {
        let grid = Grid::new(5.0, 201).unwrap();
        let x = GridFunction::zeros(grid);
        let out = inner_integral_all(&kernel("exp(0-s^2)"), &x, QuadRule::Simpson).unwrap();
        assert!(out.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn separable_kernel_detection() {
        assert!(kernel("(1/(t^2+1))*exp(0-s^2)*cos(x)").is_separable());
        assert!(kernel("-2*t*s/(1+x^2)").is_separable());
        assert!(kernel("1").is_separable());
        assert!(!kernel("exp(t*s)").is_separable());
        assert!(!kernel("t + s").is_separable());
    }

    #[test]
    fn fast_path_agrees_with_direct_route() {
        let grid = Grid::new(3.0, 61).unwrap();
        let x = GridFunction::from_fn(grid, |t| (2.0 * t).cos()).unwrap();
        for src in ["(1/(t^2+1))*exp(0-s^2)*cos(x)", "-t/(1+s)*x", "2/(t+1)/(x^2+1)"] {
            let g = kernel(src);
            assert!(g.is_separable());
            for rule in [QuadRule::Trapezoid, QuadRule::Simpson] {
                let fast = inner_integral_all(&g, &x, rule).unwrap();
                for i in 0..grid.len() {
                    let direct = inner_integral(&g, &x, i, rule).unwrap();
                    let diff = (fast.values()[i] - direct).abs();
                    assert!(diff < 1e-13 * (1.0 + direct.abs()), "{src} {rule} i={i} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn sup_norm_examples() {
        let grid = Grid::new(10.0, 101).unwrap();
        let x = GridFunction::from_fn(grid, f64::sin).unwrap();
        assert_eq!(sup_norm_distance(&x, &x).unwrap(), 0.0);
        let zero = GridFunction::zeros(grid);
        let one = GridFunction::constant(grid, 1.0);
        assert_eq!(sup_norm_distance(&zero, &one).unwrap(), 1.0);
        let mut bumped = x.clone().into_values();
        bumped[37] += 0.25;
        let y = GridFunction::new(grid, bumped).unwrap();
        assert!((sup_norm_distance(&x, &y).unwrap() - 0.25).abs() < 1e-15);
        let other = GridFunction::zeros(Grid::new(10.0, 11).unwrap());
        assert!(sup_norm_distance(&x, &other).is_err());
    }

    #[test]
    fn csv_format_and_round_trip() {
        let grid = Grid::new(1.0, 3).unwrap();
        let x = GridFunction::new(grid, vec![0.0, -1.0 / 3.0, 2.5]).unwrap();
        let csv = x.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,0.0000000000000000e0"));
        assert_eq!(lines.next(), Some("5.0000000000000000e-1,-3.3333333333333331e-1"));
        assert!(!csv.contains('\r'));
        let back = GridFunction::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(back, x);
    }
}
