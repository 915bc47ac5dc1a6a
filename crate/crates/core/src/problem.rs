//! Problem data: the Kirchhoff factor `m`, the singular and superlinear
//! reactions `f` and `g`, their growth indices, and the hypothesis audit.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::nfunction::{default_x_samples, estimate_indices, ratio_extrema, IndexReport, LogGrid, NFunctionSpec};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid for suprema over `s > 0` of the Kirchhoff and reaction ratios.
pub fn ratio_grid_default() -> LogGrid {
    LogGrid {
        lo: 1e-6,
        hi: 1e6,
        n: 601,
    }
}

#[derive(Clone)]
pub enum KirchhoffKind {
    Constant(f64),
    /// `m(s) = a + b s^exponent`
    AffinePower { a: f64, b: f64, exponent: f64 },
    Custom { name: String, m: ScalarFn, dm: ScalarFn },
}

impl fmt::Debug for KirchhoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KirchhoffKind::Constant(a) => write!(f, "Constant({a})"),
            KirchhoffKind::AffinePower { a, b, exponent } => {
                write!(f, "AffinePower(a={a}, b={b}, exponent={exponent})")
            }
            KirchhoffKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Kirchhoff function `m` and its primitive `M(s) = integral_0^s m`.
#[derive(Clone, Debug)]
pub struct KirchhoffSpec {
    kind: KirchhoffKind,
}

impl KirchhoffSpec {
    pub fn constant(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Argument(format!("constant Kirchhoff factor must be positive, got {a}")));
        }
        Ok(Self {
            kind: KirchhoffKind::Constant(a),
        })
    }

    /// `m(s) = a + b s^exponent`; degenerate `a = 0` is allowed.
    pub fn affine_power(a: f64, b: f64, exponent: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Argument(format!(
                "Kirchhoff coefficients must be nonnegative and not both zero, got a={a}, b={b}"
            )));
        }
        if !(exponent > 0.0 && exponent.is_finite()) && b > 0.0 {
            return Err(Error::Argument(format!("Kirchhoff exponent must be positive, got {exponent}")));
        }
        if b == 0.0 {
            return Self::constant(a);
        }
        Ok(Self {
            kind: KirchhoffKind::AffinePower { a, b, exponent },
        })
    }

    /// Custom `m` with derivative `dm`, checked on a sample grid for
    /// positivity, monotonicity and derivative consistency.
    pub fn custom(name: impl Into<String>, m: ScalarFn, dm: ScalarFn) -> Result<Self> {
        let name = name.into();
        for s in LogGrid::new(1e-3, 1e3, 61)?.points() {
            let (v, d) = (m(s), dm(s));
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("Kirchhoff {name}: m({s}) = {v} is not positive")));
            }
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Validation(format!("Kirchhoff {name}: m'({s}) = {d} < 0 (m must be non-decreasing)")));
            }
            let h = 1e-5 * s;
            let fd = (m(s + h) - m(s - h)) / (2.0 * h);
            if (fd - d).abs() > 1e-5 * (d.abs() + v / s) {
                return Err(Error::Validation(format!(
                    "Kirchhoff {name}: m'({s}) = {d} disagrees with finite difference {fd}"
                )));
            }
        }
        Ok(Self {
            kind: KirchhoffKind::Custom { name, m, dm },
        })
    }

    pub fn kind(&self) -> &KirchhoffKind {
        &self.kind
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            KirchhoffKind::Constant(a) => format!("m(s) = {a}"),
            KirchhoffKind::AffinePower { a, b, exponent } => format!("m(s) = {a} + {b} s^{exponent}"),
            KirchhoffKind::Custom { name, .. } => format!("m = {name}"),
        }
    }

    #[inline]
    pub fn m(&self, s: f64) -> f64 {
        match &self.kind {
            KirchhoffKind::Constant(a) => *a,
            KirchhoffKind::AffinePower { a, b, exponent } => a + b * s.powf(*exponent),
            KirchhoffKind::Custom { m, .. } => m(s),
        }
    }

    #[inline]
    pub fn dm(&self, s: f64) -> f64 {
        match &self.kind {
            KirchhoffKind::Constant(_) => 0.0,
            KirchhoffKind::AffinePower { b, exponent, .. } => {
                if s > 0.0 {
                    b * exponent * s.powf(exponent - 1.0)
                } else if *exponent > 1.0 {
                    0.0
                } else if *exponent == 1.0 {
                    *b
                } else {
                    f64::INFINITY
                }
            }
            KirchhoffKind::Custom { dm, .. } => dm(s),
        }
    }

    /// `M(s)`: closed form for built-ins, adaptive quadrature otherwise.
    pub fn primitive(&self, s: f64) -> f64 {
        match &self.kind {
            KirchhoffKind::Constant(a) => a * s,
            KirchhoffKind::AffinePower { a, b, exponent } => {
                a * s + b * s.powf(exponent + 1.0) / (exponent + 1.0)
            }
            KirchhoffKind::Custom { m, .. } => {
                if s == 0.0 {
                    0.0
                } else {
                    let scale = (s * m(s)).abs().max(1.0);
                    quadrature::integrate(|t| m(t), 0.0, s, 1e-13 * scale).integral
                }
            }
        }
    }

    fn check_arg(s: f64) -> Result<()> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Domain(format!("Kirchhoff function evaluated at s={s} < 0")));
        }
        Ok(())
    }

    pub fn eval_m(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        Ok(self.m(s))
    }

    pub fn eval_dm(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        Ok(self.dm(s))
    }

    #[allow(non_snake_case)]
    pub fn eval_M(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        Ok(self.primitive(s))
    }

    /// Closed forms of `eta = sup s m'/m` and `theta = sup s m/M`.
    pub fn closed_eta_theta(&self) -> Option<(f64, f64)> {
        match &self.kind {
            KirchhoffKind::Constant(_) => Some((0.0, 1.0)),
            // s m'/m = b e s^e / (a + b s^e) increases to e; s m/M increases to e + 1
            KirchhoffKind::AffinePower { exponent, .. } => Some((*exponent, exponent + 1.0)),
            KirchhoffKind::Custom { .. } => None,
        }
    }
}

/// `(eta, theta)`: closed forms where known, otherwise refined suprema over a
/// log grid, which must span `[1e-6, 1e6]`.
pub fn estimate_eta_theta(spec: &KirchhoffSpec, grid: &LogGrid) -> Result<(f64, f64)> {
    if grid.lo > 1e-6 || grid.hi < 1e6 {
        return Err(Error::Argument(format!(
            "Kirchhoff ratio grid must span [1e-6, 1e6], got {}",
            grid.describe()
        )));
    }
    if let Some(closed) = spec.closed_eta_theta() {
        return Ok(closed);
    }
    grid_eta_theta(spec, grid)
}

/// Grid suprema of `s m'/m` and `s m/M`, without closed forms.
pub fn grid_eta_theta(spec: &KirchhoffSpec, grid: &LogGrid) -> Result<(f64, f64)> {
    let pts = grid.points();
    let bad = |s, what: &str| Error::Evaluation {
        x: [f64::NAN; 2],
        s,
        what: what.into(),
    };
    let (_, eta) = ratio_extrema(&pts, |s| s * spec.dm(s) / spec.m(s)).map_err(|s| bad(s, "s m'(s)/m(s)"))?;
    let (_, theta) =
        ratio_extrema(&pts, |s| s * spec.m(s) / spec.primitive(s)).map_err(|s| bad(s, "s m(s)/M(s)"))?;
    Ok((eta.max(0.0), theta.max(1.0)))
}

/// A reaction `f` (or `g`) given on `(0, inf)` and extended oddly to the
/// real line, with even primitive `F(s) = integral_0^s f`.
#[derive(Clone)]
pub enum Reaction {
    /// `f(s) = s^exponent` for `s > 0`; requires `exponent > -1`.
    Power { exponent: f64 },
    Custom { name: String, f: ScalarFn, df: ScalarFn },
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Power { exponent } => write!(f, "Power(s^{exponent})"),
            Reaction::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Values below this are clamped before calling custom reaction callbacks.
pub const CUSTOM_CLAMP: f64 = 1e-12;

/// `F(t u)`, `f(t u) u` and `f'(t u) u^2` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FiberTerms {
    pub primitive: f64,
    pub first: f64,
    pub second: f64,
    pub clamped: bool,
}

impl Reaction {
    /// `f(s) = s^(-gamma)`
    pub fn singular(gamma: f64) -> Result<Self> {
        if !(gamma < 1.0 && gamma.is_finite()) {
            return Err(Error::Argument(format!("singular exponent gamma={gamma} must be < 1")));
        }
        Ok(Reaction::Power { exponent: -gamma })
    }

    /// `g(s) = s^(r-1)`
    pub fn superlinear(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Argument(format!("growth exponent r={r} must be positive")));
        }
        Ok(Reaction::Power { exponent: r - 1.0 })
    }

    pub fn describe(&self) -> String {
        match self {
            Reaction::Power { exponent } => format!("s^{exponent}"),
            Reaction::Custom { name, .. } => name.clone(),
        }
    }

    /// Odd extension of `f`, with `f(0) = 0`.
    pub fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let a = s.abs();
        let v = match self {
            Reaction::Power { exponent } => a.powf(*exponent),
            Reaction::Custom { f, .. } => f(a.max(CUSTOM_CLAMP)),
        };
        v.copysign(s)
    }

    /// Even extension of `f'`, with `f'(0) := 0`.
    pub fn deriv(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let a = s.abs();
        match self {
            Reaction::Power { exponent } => exponent * a.powf(exponent - 1.0),
            Reaction::Custom { df, .. } => df(a.max(CUSTOM_CLAMP)),
        }
    }

    /// Even primitive `F(s)`.
    pub fn primitive(&self, s: f64) -> f64 {
        let a = s.abs();
        if a == 0.0 {
            return 0.0;
        }
        match self {
            Reaction::Power { exponent } => a.powf(exponent + 1.0) / (exponent + 1.0),
            Reaction::Custom { f, .. } => {
                let scale = (a * f(a)).abs().max(1e-300);
                quadrature::integrate(|t| f(t.max(CUSTOM_CLAMP)), 0.0, a, 1e-12 * scale).integral
            }
        }
    }

    /// Fibering integrands at a point where the direction has value `u`.
    ///
    /// For power reactions these are evaluated in the combined forms
    /// `(t|u|)^(e+1)/(e+1)`, `t^e |u|^(e+1)` and `e t^(e-1) |u|^(e+1)`, so no
    /// negative power of a small `|u|` is ever formed.
    #[inline]
    pub fn fiber_terms(&self, u: f64, t: f64) -> FiberTerms {
        let a = u.abs();
        if a == 0.0 {
            return FiberTerms::default();
        }
        match self {
            Reaction::Power { exponent } => {
                let ta = t * a;
                let pw = ta.powf(*exponent);
                FiberTerms {
                    primitive: ta * pw / (exponent + 1.0),
                    first: pw * a,
                    second: exponent * pw * a / t,
                    clamped: false,
                }
            }
            Reaction::Custom { f, df, .. } => {
                let ta = t * a;
                let clamped = ta < CUSTOM_CLAMP;
                let s = ta.max(CUSTOM_CLAMP);
                FiberTerms {
                    primitive: self.primitive(ta),
                    first: f(s) * a,
                    second: df(s) * a * a,
                    clamped,
                }
            }
        }
    }

    /// `(inf, sup)` of `s f'(s)/f(s)` over `s > 0`.
    pub fn index_range(&self, grid: &LogGrid) -> Result<(f64, f64)> {
        match self {
            Reaction::Power { exponent } => Ok((*exponent, *exponent)),
            Reaction::Custom { f, df, .. } => ratio_extrema(&grid.points(), |s| s * df(s) / f(s)).map_err(|s| {
                Error::Evaluation {
                    x: [f64::NAN; 2],
                    s,
                    what: "s f'(s)/f(s)".into(),
                }
            }),
        }
    }

    /// `liminf_{s->0+} f(s)`, and whether it was only sampled.
    pub fn liminf_at_zero(&self) -> (f64, bool) {
        match self {
            Reaction::Power { exponent } => {
                let v = if *exponent < 0.0 {
                    f64::INFINITY
                } else if *exponent == 0.0 {
                    1.0
                } else {
                    0.0
                };
                (v, false)
            }
            Reaction::Custom { f, .. } => {
                let v = [1e-6, 1e-8, 1e-10, 1e-12]
                    .iter()
                    .map(|&s| f(s))
                    .fold(f64::INFINITY, f64::min);
                (v, true)
            }
        }
    }
}

/// Growth constants derived from the problem data.
#[derive(Clone, Debug, Serialize)]
pub struct ProblemConstants {
    pub p: f64,
    pub q: f64,
    pub l_minus: f64,
    pub l_plus: f64,
    pub kappa: Option<f64>,
    pub eta: f64,
    pub theta: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub dimension: usize,
    /// Sobolev conjugate `Np/(N-p)`; `None` when `p >= N` (unconstrained).
    pub p_star: Option<f64>,
}

/// The full Kirchhoff problem on a mesh, with its derived constants.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub nfunction: NFunctionSpec,
    pub kirchhoff: KirchhoffSpec,
    pub f: Reaction,
    pub g: Reaction,
    pub lambda: f64,
    pub mesh: Arc<Mesh>,
    pub indices: IndexReport,
    pub constants: ProblemConstants,
}

pub fn sobolev_conjugate(p: f64, dimension: usize) -> Option<f64> {
    let n = dimension as f64;
    (p < n).then(|| n * p / (n - p))
}

impl ProblemSpec {
    pub fn new(
        nfunction: NFunctionSpec,
        kirchhoff: KirchhoffSpec,
        f: Reaction,
        g: Reaction,
        lambda: f64,
        mesh: Arc<Mesh>,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!("lambda must be positive, got {lambda}")));
        }
        for (name, r) in [("f", &f), ("g", &g)] {
            if let Reaction::Power { exponent } = r {
                if *exponent <= -1.0 {
                    return Err(Error::Argument(format!("{name} = s^{exponent} has no finite primitive at 0")));
                }
            }
        }
        let indices = estimate_indices(&nfunction, &LogGrid::index_default(), &default_x_samples())?;
        let grid = ratio_grid_default();
        let (eta, theta) = estimate_eta_theta(&kirchhoff, &grid)?;
        let (f_lo, f_hi) = f.index_range(&grid)?;
        let (g_lo, g_hi) = g.index_range(&grid)?;
        let constants = ProblemConstants {
            p: indices.p_idx,
            q: indices.q_idx,
            l_minus: indices.l_minus,
            l_plus: indices.l_plus,
            kappa: indices.kappa,
            eta,
            theta,
            gamma_minus: -f_hi,
            gamma_plus: -f_lo,
            r_minus: 1.0 + g_lo,
            r_plus: 1.0 + g_hi,
            dimension: mesh.dim(),
            p_star: sobolev_conjugate(indices.p_idx, mesh.dim()),
        };
        Ok(Self {
            nfunction,
            kirchhoff,
            f,
            g,
            lambda,
            mesh,
            indices,
            constants,
        })
    }

    /// Same problem at a different `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!("lambda must be positive, got {lambda}")));
        }
        let mut p = self.clone();
        p.lambda = lambda;
        Ok(p)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub eta: f64,
    pub theta: f64,
    pub p_star: Option<f64>,
    pub constants: ProblemConstants,
    pub h_m: bool,
    pub h_l: bool,
    pub h_f: bool,
    pub h_g: bool,
    pub h_c: bool,
    /// `r- > q eta + l+ + 1 >= q (eta + 1)` and `r- > q theta >= q >= p`.
    pub superlinear_chain: bool,
    pub checks: Vec<HypothesisCheck>,
    /// Conditions that could only be sampled, not certified.
    pub sampled_only: Vec<String>,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }
}

/// Evaluates every structural inequality on the data.
pub fn check_hypotheses(problem: &ProblemSpec) -> HypothesisReport {
    let c = &problem.constants;
    let mut checks = Vec::new();
    let mut sampled_only = Vec::new();
    let mut push = |group: &str, name: &str, ok: bool, detail: String| {
        checks.push(HypothesisCheck {
            name: format!("{group}: {name}"),
            ok,
            detail,
        });
        ok
    };
    let p_star = c.p_star.unwrap_or(f64::INFINITY);
    let star = |v: f64| if v.is_finite() { format!("{v}") } else { "unconstrained".into() };

    // (H_m)
    let m_samples = ratio_grid_default().points();
    let m_pos = m_samples.iter().all(|&s| problem.kirchhoff.m(s) > 0.0);
    let m_mono = m_samples.iter().all(|&s| problem.kirchhoff.dm(s) >= 0.0);
    let mut h_m = push("H_m", "m(s) > 0 for s > 0", m_pos, problem.kirchhoff.describe());
    h_m &= push("H_m", "m non-decreasing", m_mono, problem.kirchhoff.describe());
    h_m &= push("H_m", "eta finite and >= 0", c.eta >= 0.0 && c.eta.is_finite(), format!("eta = {}", c.eta));
    if matches!(problem.kirchhoff.kind(), KirchhoffKind::Custom { .. }) {
        sampled_only.push("H_m: positivity and monotonicity of custom m".into());
    }

    // (H_L)
    let mut h_l = push("H_L", "p > 1", c.p > 1.0, format!("p = {}", c.p));
    h_l &= push("H_L", "q < p*", c.q < p_star, format!("q = {}, p* = {}", c.q, star(p_star)));
    h_l &= push("H_L", "l- > 0", c.l_minus > 0.0, format!("l- = {}", c.l_minus));
    h_l &= push("H_L", "l+ < inf", c.l_plus.is_finite(), format!("l+ = {}", c.l_plus));

    // (H_f)
    let (liminf, sampled) = problem.f.liminf_at_zero();
    if sampled {
        sampled_only.push("H_f: liminf of f at 0 (sampled only)".into());
    }
    let mut h_f = push("H_f", "liminf f(s) at 0+ in (0, inf]", liminf > 0.0, format!("liminf = {liminf}"));
    h_f &= push(
        "H_f",
        "gamma- > 1 - p",
        c.gamma_minus > 1.0 - c.p,
        format!("gamma- = {}, 1 - p = {}", c.gamma_minus, 1.0 - c.p),
    );
    h_f &= push("H_f", "gamma+ < 1", c.gamma_plus < 1.0, format!("gamma+ = {}", c.gamma_plus));

    // (H_g)
    let mut h_g = push("H_g", "r- > 1", c.r_minus > 1.0, format!("r- = {}", c.r_minus));
    h_g &= push("H_g", "r+ < p*", c.r_plus < p_star, format!("r+ = {}, p* = {}", c.r_plus, star(p_star)));

    // (H_C)
    let lhs = c.q * c.eta + c.l_plus;
    let h_c = push(
        "H_C",
        "q eta + l+ < r- - 1",
        lhs < c.r_minus - 1.0,
        format!("q eta + l+ = {lhs}, r- - 1 = {}", c.r_minus - 1.0),
    );

    let chain = c.r_minus > lhs + 1.0
        && lhs + 1.0 >= c.q * (c.eta + 1.0)
        && c.r_minus > c.q * c.theta
        && c.q * c.theta >= c.q
        && c.q >= c.p;
    push(
        "chain",
        "r- > q eta + l+ + 1 >= q(eta+1), r- > q theta >= q >= p",
        chain,
        format!(
            "r- = {}, q eta + l+ + 1 = {}, q(eta+1) = {}, q theta = {}, q = {}, p = {}",
            c.r_minus,
            lhs + 1.0,
            c.q * (c.eta + 1.0),
            c.q * c.theta,
            c.q,
            c.p
        ),
    );

    HypothesisReport {
        eta: c.eta,
        theta: c.theta,
        p_star: c.p_star,
        constants: c.clone(),
        h_m,
        h_l,
        h_f,
        h_g,
        h_c,
        superlinear_chain: chain,
        checks,
        sampled_only,
    }
}
