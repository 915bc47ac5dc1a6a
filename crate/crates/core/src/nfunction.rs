//! Generalized N-functions `H(x, s)`: the built-in catalog, analytic
//! derivatives in `s`, index estimation and the power envelopes used to
//! compare them with pure powers.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// A point of the (at most two dimensional) domain. One dimensional meshes
/// use the first coordinate only.
pub type Point = [f64; 2];

/// Callback `(x, s) -> value` used by custom N-functions.
pub type PointCallback = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// Nonnegative bounded weight `mu(x)` multiplying the second phase.
#[derive(Clone)]
pub enum Weight {
    Constant(f64),
    /// `offset + slope . x`
    Affine { offset: f64, slope: [f64; 2] },
    Field {
        name: String,
        f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    },
}

impl Weight {
    #[inline]
    pub fn at(&self, x: &Point) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Affine { offset, slope } => offset + slope[0] * x[0] + slope[1] * x[1],
            Weight::Field { f, .. } => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Weight::Constant(_))
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::Constant(c) => format!("{c}"),
            Weight::Affine { offset, slope } => {
                format!("{offset} + {}*x + {}*y", slope[0], slope[1])
            }
            Weight::Field { name, .. } => name.clone(),
        }
    }

    /// Checks `mu >= 0` and finiteness on an 11x11 sample of the unit square.
    fn validate(&self) -> Result<()> {
        for i in 0..=10 {
            for j in 0..=10 {
                let x = [i as f64 / 10.0, j as f64 / 10.0];
                let w = self.at(&x);
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Argument(format!(
                        "weight {} is {w} at {x:?}; it must be finite and nonnegative",
                        self.describe()
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.describe())
    }
}

/// User supplied N-function together with its first two `s`-derivatives.
#[derive(Clone)]
pub struct CustomNFunction {
    pub name: String,
    pub h: PointCallback,
    pub dh: PointCallback,
    pub d2h: PointCallback,
    /// Whether the callbacks ignore `x`.
    pub x_independent: bool,
}

impl fmt::Debug for CustomNFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomNFunction({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum NFunctionKind {
    /// `s^p`
    Power { p: f64 },
    /// `s^p + weight * s^q` with a constant weight.
    SumPower { p: f64, q: f64, weight: f64 },
    /// `s^p + mu(x) s^q`
    DoublePhase { p: f64, q: f64, mu: Weight },
    /// `s^p + mu(x) s^q log(e + s)`
    LogDoublePhase { p: f64, q: f64, mu: Weight },
    /// `(s^p + mu(x) s^q) log(e + s)`
    LogPerturbedDoublePhase { p: f64, q: f64, mu: Weight },
    Custom(CustomNFunction),
}

/// `H(x, s)` and its first and second derivatives in `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HValues {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

#[derive(Clone, Debug)]
pub struct NFunctionSpec {
    kind: NFunctionKind,
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Argument(format!("exponent p={p} must satisfy p > 1")));
    }
    if !(q >= p && q.is_finite()) {
        return Err(Error::Argument(format!("exponent q={q} must satisfy q >= p={p}")));
    }
    Ok(())
}

/// `(s^e, e s^(e-1), e(e-1) s^(e-2))`, with the `s -> 0+` limits at `s = 0`.
#[inline]
fn power_triplet(s: f64, e: f64) -> [f64; 3] {
    if s > 0.0 {
        let se = s.powf(e);
        [se, e * se / s, e * (e - 1.0) * se / (s * s)]
    } else {
        let d1 = if e > 1.0 {
            0.0
        } else if e == 1.0 {
            1.0
        } else {
            f64::INFINITY
        };
        let d2 = if e > 2.0 || e == 1.0 {
            0.0
        } else if e == 2.0 {
            2.0
        } else if e > 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        [0.0, d1, d2]
    }
}

#[inline]
fn add_weighted(a: [f64; 3], w: f64, b: [f64; 3]) -> [f64; 3] {
    if w == 0.0 {
        a
    } else {
        [a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2]]
    }
}

/// Multiplies a triplet by `log(e + s)` with the product rule.
#[inline]
fn times_log(t: [f64; 3], s: f64) -> [f64; 3] {
    let l = (E + s).ln();
    let l1 = 1.0 / (E + s);
    let l2 = -l1 * l1;
    let mut out = [t[0] * l, t[1] * l + t[0] * l1, t[2] * l + 2.0 * t[1] * l1];
    if t[0] != 0.0 {
        out[2] += t[0] * l2;
    }
    out
}

impl NFunctionSpec {
    pub fn power(p: f64) -> Result<Self> {
        check_exponents(p, p)?;
        Ok(Self {
            kind: NFunctionKind::Power { p },
        })
    }

    pub fn sum_power(p: f64, q: f64, weight: f64) -> Result<Self> {
        check_exponents(p, q)?;
        Weight::Constant(weight).validate()?;
        Ok(Self {
            kind: NFunctionKind::SumPower { p, q, weight },
        })
    }

    pub fn double_phase(p: f64, q: f64, mu: Weight) -> Result<Self> {
        check_exponents(p, q)?;
        mu.validate()?;
        Ok(Self {
            kind: NFunctionKind::DoublePhase { p, q, mu },
        })
    }

    pub fn log_double_phase(p: f64, q: f64, mu: Weight) -> Result<Self> {
        check_exponents(p, q)?;
        mu.validate()?;
        Ok(Self {
            kind: NFunctionKind::LogDoublePhase { p, q, mu },
        })
    }

    pub fn log_perturbed_double_phase(p: f64, q: f64, mu: Weight) -> Result<Self> {
        check_exponents(p, q)?;
        mu.validate()?;
        Ok(Self {
            kind: NFunctionKind::LogPerturbedDoublePhase { p, q, mu },
        })
    }

    /// Wraps user callbacks after checking them on a sample grid: `H(x,0)=0`,
    /// `H>0` and `dH>0` for `s>0`, and both derivatives against central
    /// differences. Any failure is a hard error.
    pub fn custom(c: CustomNFunction) -> Result<Self> {
        validate_custom(&c)?;
        Ok(Self {
            kind: NFunctionKind::Custom(c),
        })
    }

    pub fn kind(&self) -> &NFunctionKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            NFunctionKind::Power { .. } => "power",
            NFunctionKind::SumPower { .. } => "sum_power",
            NFunctionKind::DoublePhase { .. } => "double_phase",
            NFunctionKind::LogDoublePhase { .. } => "log_double_phase",
            NFunctionKind::LogPerturbedDoublePhase { .. } => "log_perturbed_double_phase",
            NFunctionKind::Custom(c) => &c.name,
        }
    }

    /// Human readable parameter summary.
    pub fn describe(&self) -> String {
        match &self.kind {
            NFunctionKind::Power { p } => format!("power(p={p})"),
            NFunctionKind::SumPower { p, q, weight } => {
                format!("sum_power(p={p}, q={q}, weight={weight})")
            }
            NFunctionKind::DoublePhase { p, q, mu }
            | NFunctionKind::LogDoublePhase { p, q, mu }
            | NFunctionKind::LogPerturbedDoublePhase { p, q, mu } => {
                format!("{}(p={p}, q={q}, mu={})", self.name(), mu.describe())
            }
            NFunctionKind::Custom(c) => format!("custom({})", c.name),
        }
    }

    /// True when `H` does not depend on the point `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            NFunctionKind::Power { .. } | NFunctionKind::SumPower { .. } => true,
            NFunctionKind::DoublePhase { mu, .. }
            | NFunctionKind::LogDoublePhase { mu, .. }
            | NFunctionKind::LogPerturbedDoublePhase { mu, .. } => mu.is_constant(),
            NFunctionKind::Custom(c) => c.x_independent,
        }
    }

    fn is_logarithmic(&self) -> bool {
        matches!(
            self.kind,
            NFunctionKind::LogDoublePhase { .. } | NFunctionKind::LogPerturbedDoublePhase { .. }
        )
    }

    /// `H`, `dH/ds`, `d2H/ds2` at `(x, s)` for `s >= 0`, without argument
    /// checks. At `s = 0` the derivatives take their `s -> 0+` limits.
    #[inline]
    pub fn values(&self, x: &Point, s: f64) -> HValues {
        let t = match &self.kind {
            NFunctionKind::Power { p } => power_triplet(s, *p),
            NFunctionKind::SumPower { p, q, weight } => {
                add_weighted(power_triplet(s, *p), *weight, power_triplet(s, *q))
            }
            NFunctionKind::DoublePhase { p, q, mu } => {
                add_weighted(power_triplet(s, *p), mu.at(x), power_triplet(s, *q))
            }
            NFunctionKind::LogDoublePhase { p, q, mu } => {
                let w = mu.at(x);
                let base = power_triplet(s, *p);
                if w == 0.0 {
                    base
                } else {
                    add_weighted(base, w, times_log(power_triplet(s, *q), s))
                }
            }
            NFunctionKind::LogPerturbedDoublePhase { p, q, mu } => {
                let inner = add_weighted(power_triplet(s, *p), mu.at(x), power_triplet(s, *q));
                times_log(inner, s)
            }
            NFunctionKind::Custom(c) => [(c.h)(x, s), (c.dh)(x, s), (c.d2h)(x, s)],
        };
        HValues {
            h: t[0],
            dh: t[1],
            d2h: t[2],
        }
    }

    #[inline]
    pub fn h(&self, x: &Point, s: f64) -> f64 {
        self.values(x, s).h
    }

    #[inline]
    pub fn dh(&self, x: &Point, s: f64) -> f64 {
        self.values(x, s).dh
    }

    #[inline]
    pub fn d2h(&self, x: &Point, s: f64) -> f64 {
        self.values(x, s).d2h
    }

    fn checked(&self, x: &Point, s: f64) -> Result<HValues> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Domain(format!("N-function evaluated at s={s} < 0")));
        }
        Ok(self.values(x, s))
    }

    pub fn eval_h(&self, x: &Point, s: f64) -> Result<f64> {
        Ok(self.checked(x, s)?.h)
    }

    pub fn eval_dh(&self, x: &Point, s: f64) -> Result<f64> {
        Ok(self.checked(x, s)?.dh)
    }

    pub fn eval_d2h(&self, x: &Point, s: f64) -> Result<f64> {
        Ok(self.checked(x, s)?.d2h)
    }
}

fn validate_custom(c: &CustomNFunction) -> Result<()> {
    let fail = |msg: String| Err(Error::Validation(format!("custom N-function {}: {msg}", c.name)));
    let s_grid = LogGrid {
        lo: 1e-3,
        hi: 1e3,
        n: 61,
    }
    .points();
    for i in 0..3 {
        for j in 0..3 {
            let x = [0.1 + 0.4 * i as f64, 0.1 + 0.4 * j as f64];
            let h0 = (c.h)(&x, 0.0);
            if !(h0.abs() <= 1e-14) {
                return fail(format!("H(x,0) = {h0} at x={x:?}, expected 0"));
            }
            for &s in &s_grid {
                let (h, dh, d2h) = ((c.h)(&x, s), (c.dh)(&x, s), (c.d2h)(&x, s));
                if !(h.is_finite() && dh.is_finite() && d2h.is_finite()) {
                    return fail(format!("non-finite value at x={x:?}, s={s}"));
                }
                if h <= 0.0 {
                    return fail(format!("H = {h} <= 0 at x={x:?}, s={s}"));
                }
                if dh <= 0.0 {
                    return fail(format!("dH/ds = {dh} <= 0 at x={x:?}, s={s} (not strictly increasing)"));
                }
                let delta = 1e-5 * s;
                let fd1 = ((c.h)(&x, s + delta) - (c.h)(&x, s - delta)) / (2.0 * delta);
                if (fd1 - dh).abs() > 1e-5 * (dh.abs() + 1e-12) {
                    return fail(format!(
                        "dH/ds = {dh} disagrees with finite difference {fd1} at x={x:?}, s={s}"
                    ));
                }
                let fd2 = ((c.dh)(&x, s + delta) - (c.dh)(&x, s - delta)) / (2.0 * delta);
                if (fd2 - d2h).abs() > 1e-5 * (d2h.abs() + dh.abs() / s) {
                    return fail(format!(
                        "d2H/ds2 = {d2h} disagrees with finite difference {fd2} at x={x:?}, s={s}"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Lower power envelope `min{t^alpha, t^beta}`.
pub fn envelope_under(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    check_envelope(alpha, beta, t)?;
    Ok(t.powf(alpha).min(t.powf(beta)))
}

/// Upper power envelope `max{t^alpha, t^beta}`.
pub fn envelope_over(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    check_envelope(alpha, beta, t)?;
    Ok(t.powf(alpha).max(t.powf(beta)))
}

fn check_envelope(alpha: f64, beta: f64, t: f64) -> Result<()> {
    if !(alpha <= beta) {
        return Err(Error::Argument(format!(
            "envelope exponents must satisfy alpha <= beta, got {alpha} > {beta}"
        )));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("envelope evaluated at t={t}")));
    }
    Ok(())
}

/// Logarithmically spaced sample grid on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
            return Err(Error::Argument(format!(
                "log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}] with {n} points"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid used for index estimation: `[1e-8, 1e8]`, 801 points.
    pub fn index_default() -> Self {
        Self {
            lo: 1e-8,
            hi: 1e8,
            n: 801,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let step = (b - a) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i == 0 {
                    self.lo
                } else if i == self.n - 1 {
                    self.hi
                } else {
                    (a + step * i as f64).exp()
                }
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        format!("log grid [{:e}, {:e}] with {} points", self.lo, self.hi, self.n)
    }
}

/// Infimum and supremum of `ratio` over the grid, with golden-section
/// refinement (in `log s`) around interior extrema.
pub(crate) fn ratio_extrema<F>(grid: &[f64], ratio: F) -> std::result::Result<(f64, f64), f64>
where
    F: Fn(f64) -> f64,
{
    let vals: Vec<f64> = grid.iter().map(|&s| ratio(s)).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(grid[i]);
    }
    let (mut imin, mut imax) = (0, 0);
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[imin] {
            imin = i;
        }
        if *v > vals[imax] {
            imax = i;
        }
    }
    let mut lo = vals[imin];
    let mut hi = vals[imax];
    let n = grid.len();
    if imin > 0 && imin + 1 < n {
        lo = lo.min(golden(grid[imin - 1], grid[imin + 1], &ratio));
    }
    if imax > 0 && imax + 1 < n {
        hi = hi.max(-golden(grid[imax - 1], grid[imax + 1], |s| -ratio(s)));
    }
    Ok((lo, hi))
}

/// Minimum of a unimodal function on `[a, b]`, searched in `log s`.
fn golden<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.ln(), b.ln());
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1.exp());
    let mut f2 = f(x2.exp());
    let mut best = f1.min(f2);
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2.exp());
        }
        best = best.min(f1).min(f2);
    }
    best
}

/// Index data of an N-function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    /// inf of `s H'/H`
    pub p_idx: f64,
    /// sup of `s H'/H`
    pub q_idx: f64,
    /// inf of `s H''/H'`
    pub l_minus: f64,
    /// sup of `s H''/H'`
    pub l_plus: f64,
    /// `e/(e+t0)`, logarithmic kinds only.
    pub kappa: Option<f64>,
    /// Root of `t = e log(e + t)`, logarithmic kinds only.
    pub t0: Option<f64>,
    pub sample_grid: String,
}

/// Unique positive root `t0` of `t = e log(e + t)` and `kappa = e/(e+t0)`.
pub fn log_threshold() -> (f64, f64) {
    let g = |t: f64| t - E * (E + t).ln();
    let (mut a, mut b) = (1.0, 10.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let t0 = 0.5 * (a + b);
    (t0, E / (E + t0))
}

/// Default `x` samples: a 5x5 grid of the unit square.
pub fn default_x_samples() -> Vec<Point> {
    let mut xs = Vec::with_capacity(25);
    for i in 0..5 {
        for j in 0..5 {
            xs.push([i as f64 / 4.0, j as f64 / 4.0]);
        }
    }
    xs
}

/// Estimates `p, q, l-, l+` over `x_samples` and the grid. Power and double
/// phase kinds report their exact closed forms; logarithmic kinds combine the
/// refined grid extrema with the known limits at `0` and `infinity`.
pub fn estimate_indices(spec: &NFunctionSpec, grid: &LogGrid, x_samples: &[Point]) -> Result<IndexReport> {
    if grid.lo > 1e-4 || grid.hi < 1e4 || grid.n < 200 {
        return Err(Error::Argument(format!(
            "index grid must span [1e-4, 1e4] with at least 200 points, got {}",
            grid.describe()
        )));
    }
    if x_samples.is_empty() {
        return Err(Error::Argument("index estimation needs at least one x sample".into()));
    }
    let points = grid.points();
    let xs: &[Point] = if spec.is_x_independent() {
        &x_samples[..1]
    } else {
        x_samples
    };

    let (mut p_idx, mut q_idx) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut l_minus, mut l_plus) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in xs {
        let r1 = |s: f64| {
            let v = spec.values(x, s);
            s * v.dh / v.h
        };
        let r2 = |s: f64| {
            let v = spec.values(x, s);
            s * v.d2h / v.dh
        };
        let (lo, hi) = ratio_extrema(&points, r1).map_err(|s| Error::Evaluation {
            x: *x,
            s,
            what: "s H'(x,s) / H(x,s)".into(),
        })?;
        p_idx = p_idx.min(lo);
        q_idx = q_idx.max(hi);
        let (lo, hi) = ratio_extrema(&points, r2).map_err(|s| Error::Evaluation {
            x: *x,
            s,
            what: "s H''(x,s) / H'(x,s)".into(),
        })?;
        l_minus = l_minus.min(lo);
        l_plus = l_plus.max(hi);
    }

    let mu_max = |mu: &Weight| xs.iter().map(|x| mu.at(x)).fold(0.0, f64::max);
    let (mut kappa, mut t0) = (None, None);
    match spec.kind() {
        NFunctionKind::Power { p } => {
            (p_idx, q_idx, l_minus, l_plus) = (*p, *p, p - 1.0, p - 1.0);
        }
        NFunctionKind::SumPower { p, q, weight } => {
            let qe = if *weight > 0.0 { *q } else { *p };
            (p_idx, q_idx, l_minus, l_plus) = (*p, qe, p - 1.0, qe - 1.0);
        }
        NFunctionKind::DoublePhase { p, q, mu } => {
            let qe = if mu_max(mu) > 0.0 { *q } else { *p };
            (p_idx, q_idx, l_minus, l_plus) = (*p, qe, p - 1.0, qe - 1.0);
        }
        NFunctionKind::LogDoublePhase { p, q, mu } | NFunctionKind::LogPerturbedDoublePhase { p, q, mu } => {
            let qe = if mu_max(mu) > 0.0 { *q } else { *p };
            p_idx = p_idx.min(*p);
            q_idx = q_idx.max(qe);
            l_minus = l_minus.min(p - 1.0);
            l_plus = l_plus.max(qe - 1.0);
            let (t, k) = log_threshold();
            t0 = Some(t);
            kappa = Some(k);
        }
        NFunctionKind::Custom(_) => {}
    }
    debug_assert!(!spec.is_logarithmic() || kappa.is_some());
    Ok(IndexReport {
        p_idx,
        q_idx,
        l_minus,
        l_plus,
        kappa,
        t0,
        sample_grid: format!("{}; {} x samples", grid.describe(), xs.len()),
    })
}

/// A scalar growth function `K` with density `k = K'` and `k'`, the object
/// of the index/growth comparison.
pub trait GrowthFunction {
    fn primitive(&self, s: f64) -> f64;
    fn density(&self, s: f64) -> f64;
    fn density_deriv(&self, s: f64) -> f64;
}

/// `K = H(x, .)` at a fixed point `x`.
pub struct NFunctionSection<'a> {
    pub spec: &'a NFunctionSpec,
    pub x: Point,
}

impl GrowthFunction for NFunctionSection<'_> {
    fn primitive(&self, s: f64) -> f64 {
        self.spec.h(&self.x, s)
    }
    fn density(&self, s: f64) -> f64 {
        self.spec.dh(&self.x, s)
    }
    fn density_deriv(&self, s: f64) -> f64 {
        self.spec.d2h(&self.x, s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    /// inf of `s k'/k`
    pub i_k: f64,
    /// sup of `s k'/k`
    pub s_k: f64,
    pub samples: usize,
    /// Largest relative violation of `k(1) W_(i,s) <= k <= k(1) W^(i,s)`.
    pub max_violation_density: f64,
    /// Largest relative violation of the same bounds for `K` with exponents
    /// shifted by one.
    pub max_violation_primitive: f64,
    /// Sample points where a violation exceeded the tolerance.
    pub violations: Vec<f64>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the two-sided power growth of `k` and `K` around `s = 1` on the
/// given points. When `indices` is `None` they are estimated from the ratio
/// `s k'(s)/k(s)` on the same points.
pub fn check_growth_sandwich<K: GrowthFunction + ?Sized>(
    k: &K,
    s_grid: &[f64],
    indices: Option<(f64, f64)>,
    tol: f64,
) -> Result<GrowthReport> {
    if s_grid.is_empty() {
        return Err(Error::Argument("empty growth grid".into()));
    }
    let k0 = k.primitive(0.0);
    if k0 != 0.0 {
        return Err(Error::Argument(format!("growth function has K(0) = {k0} != 0")));
    }
    let (i_k, s_k) = match indices {
        Some(ix) => ix,
        None => ratio_extrema(s_grid, |s| s * k.density_deriv(s) / k.density(s)).map_err(|s| {
            Error::Evaluation {
                x: [f64::NAN; 2],
                s,
                what: "s k'(s) / k(s)".into(),
            }
        })?,
    };
    if !(i_k.is_finite() && s_k.is_finite()) {
        return Err(Error::Argument(format!("indices ({i_k}, {s_k}) must be finite")));
    }
    let (k1, big_k1) = (k.density(1.0), k.primitive(1.0));
    let mut report = GrowthReport {
        i_k,
        s_k,
        samples: s_grid.len(),
        max_violation_density: 0.0,
        max_violation_primitive: 0.0,
        violations: Vec::new(),
    };
    for &s in s_grid {
        let rel = |val: f64, lower: f64, upper: f64| {
            let v = (lower - val).max(val - upper).max(0.0);
            v / val.abs().max(f64::MIN_POSITIVE)
        };
        let kd = k.density(s);
        let vd = rel(
            kd,
            k1 * envelope_under(i_k, s_k, s)?,
            k1 * envelope_over(i_k, s_k, s)?,
        );
        let kp = k.primitive(s);
        let vp = rel(
            kp,
            big_k1 * envelope_under(i_k + 1.0, s_k + 1.0, s)?,
            big_k1 * envelope_over(i_k + 1.0, s_k + 1.0, s)?,
        );
        report.max_violation_density = report.max_violation_density.max(vd);
        report.max_violation_primitive = report.max_violation_primitive.max(vp);
        if vd > tol || vp > tol || !(vd.is_finite() && vp.is_finite()) {
            report.violations.push(s);
        }
    }
    Ok(report)
}
