//! Energy functional `J(u) = M(phi(grad u)) - lambda int F(u) - int G(u)`,
//! its gradient, and the fibering maps `t -> J(t u)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fibering::{FiberingMap, FiberingValues};
use crate::mesh::{FeFunction, GradientField, Mesh};
use crate::modular::luxemburg_norm;
use crate::nfunction::{envelope_over, envelope_under, NFunctionSpec, Point};
use crate::problem::{ProblemSpec, Reaction};

fn check_mesh(problem: &ProblemSpec, u: &FeFunction) -> Result<()> {
    if Arc::ptr_eq(&problem.mesh, u.mesh()) {
        Ok(())
    } else {
        Err(Error::Structure("function does not live on the problem mesh".into()))
    }
}

/// `phi(xi) = int H(x, |xi|)` for a gradient field at the quadrature points.
pub fn phi(spec: &NFunctionSpec, mesh: &Mesh, grad: &GradientField) -> Result<f64> {
    mesh.check_field(grad.0.len())?;
    let v: f64 = grad
        .0
        .iter()
        .zip(mesh.qp_coords())
        .zip(mesh.qp_weights())
        .map(|((g, x), w)| {
            let s = g[0].hypot(g[1]);
            if s == 0.0 {
                0.0
            } else {
                w * spec.h(x, s)
            }
        })
        .sum();
    if !v.is_finite() {
        return Err(Error::Numeric(format!("phi is {v}")));
    }
    Ok(v)
}

/// `(phi, int dH |xi| |xi|, int d2H |xi|^2)`
fn operator_moments(spec: &NFunctionSpec, mesh: &Mesh, grad: &GradientField) -> Result<(f64, f64, f64)> {
    mesh.check_field(grad.0.len())?;
    let (mut h0, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for ((g, x), w) in grad.0.iter().zip(mesh.qp_coords()).zip(mesh.qp_weights()) {
        let s = g[0].hypot(g[1]);
        if s > 0.0 {
            let v = spec.values(x, s);
            h0 += w * v.h;
            h1 += w * v.dh * s;
            h2 += w * v.d2h * s * s;
        }
    }
    Ok((h0, h1, h2))
}

/// `A(xi) = m(phi) <phi'(xi), xi>` and
/// `B(xi) = m'(phi) <phi'(xi), xi>^2 + m(phi) phi''(xi)(xi, xi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrincipalParts {
    pub phi: f64,
    pub kirchhoff: f64,
    pub a: f64,
    pub b: f64,
}

pub fn principal_parts(problem: &ProblemSpec, grad: &GradientField) -> Result<PrincipalParts> {
    let (h0, h1, h2) = operator_moments(&problem.nfunction, &problem.mesh, grad)?;
    let k = &problem.kirchhoff;
    let (m, dm) = (k.m(h0), if h1 == 0.0 { 0.0 } else { k.dm(h0) });
    let out = PrincipalParts {
        phi: h0,
        kirchhoff: k.primitive(h0),
        a: m * h1,
        b: dm * h1 * h1 + m * h2,
    };
    if !(out.a.is_finite() && out.b.is_finite() && out.kirchhoff.is_finite()) {
        return Err(Error::Numeric(format!("principal parts not finite: {out:?}")));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `M(phi(grad u))`
    pub kirchhoff: f64,
    /// `lambda int F(u)`
    pub singular: f64,
    /// `int G(u)`
    pub superlinear: f64,
    pub phi: f64,
    /// quadrature points where a custom reaction was clamped
    pub clamped_points: usize,
}

pub fn energy(problem: &ProblemSpec, u: &FeFunction) -> Result<EnergyBreakdown> {
    check_mesh(problem, u)?;
    if u.is_zero() {
        return Ok(EnergyBreakdown {
            total: 0.0,
            kirchhoff: 0.0,
            singular: 0.0,
            superlinear: 0.0,
            phi: 0.0,
            clamped_points: 0,
        });
    }
    let fiber = Fiber::new(problem, u)?;
    let e = fiber.eval_parts(1.0);
    let out = EnergyBreakdown {
        total: e.values.psi,
        kirchhoff: e.kirchhoff,
        singular: problem.lambda * e.f_int,
        superlinear: e.g_int,
        phi: e.phi,
        clamped_points: e.clamped,
    };
    for (name, v) in [
        ("kirchhoff", out.kirchhoff),
        ("singular", out.singular),
        ("superlinear", out.superlinear),
    ] {
        if !v.is_finite() {
            return Err(Error::Numeric(format!("{name} term of the energy is {v}")));
        }
    }
    Ok(out)
}

/// Operator flux `int dH(x,|grad u|) grad u/|grad u| . grad h_i` for each
/// vertex `i`, without the Kirchhoff factor. Zero-gradient cells contribute 0.
pub fn operator_vector(spec: &NFunctionSpec, u: &FeFunction) -> Vec<f64> {
    let mesh = &**u.mesh();
    let nq = mesh.qp_per_cell();
    let mut out = vec![0.0; mesh.n_vertices()];
    for (c, g) in u.cell_gradients().iter().enumerate() {
        let s = g[0].hypot(g[1]);
        if s == 0.0 {
            continue;
        }
        let mut flux = 0.0;
        for q in c * nq..(c + 1) * nq {
            flux += mesh.qp_weights()[q] * spec.dh(&mesh.qp_coords()[q], s);
        }
        let coef = flux / s;
        for (v, gh) in mesh.cell(c).iter().zip(mesh.shape_gradients(c)) {
            out[*v] += coef * (g[0] * gh[0] + g[1] * gh[1]);
        }
    }
    for (v, o) in out.iter_mut().enumerate() {
        if mesh.is_boundary(v) {
            *o = 0.0;
        }
    }
    out
}

/// Nodal residual `<J'(u), h_i>`; boundary entries are zero.
pub fn grad_energy(problem: &ProblemSpec, u: &FeFunction) -> Result<Vec<f64>> {
    check_mesh(problem, u)?;
    if u.is_zero() {
        return Err(Error::Argument("the energy gradient is undefined at u = 0".into()));
    }
    let mesh = &*problem.mesh;
    let (h0, ..) = operator_moments(&problem.nfunction, mesh, &u.gradient_at_quadrature())?;
    let m = problem.kirchhoff.m(h0);
    let mut out = operator_vector(&problem.nfunction, u);
    for o in out.iter_mut() {
        *o *= m;
    }
    let uq = u.at_quadrature();
    let nq = mesh.qp_per_cell();
    let rule = mesh.rule().points();
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        for (k, (bary, _)) in rule.iter().enumerate() {
            let q = c * nq + k;
            let v = uq.0[q];
            let r = problem.lambda * problem.f.value(v) + problem.g.value(v);
            let w = mesh.qp_weights()[q];
            for (j, vert) in cell.iter().enumerate() {
                out[*vert] -= w * r * bary[j];
            }
        }
        if let Some(v) = cell.iter().find(|v| !out[**v].is_finite()) {
            return Err(Error::Numeric(format!("gradient entry at vertex {v} of cell {c} is not finite")));
        }
    }
    for (v, o) in out.iter_mut().enumerate() {
        if mesh.is_boundary(v) {
            *o = 0.0;
        }
    }
    Ok(out)
}

enum ReactionPart {
    /// `sum w |u|^(e+1)` for `f(s) = s^e`
    Moment { exponent: f64, moment: f64 },
    Samples(Vec<(f64, f64)>),
}

impl ReactionPart {
    fn new(r: &Reaction, uq: &[f64], weights: &[f64]) -> Self {
        match r {
            Reaction::Power { exponent } => ReactionPart::Moment {
                exponent: *exponent,
                moment: uq
                    .iter()
                    .zip(weights)
                    .filter(|(u, _)| **u != 0.0)
                    .map(|(u, w)| w * u.abs().powf(exponent + 1.0))
                    .sum(),
            },
            Reaction::Custom { .. } => ReactionPart::Samples(
                uq.iter()
                    .zip(weights)
                    .filter(|(u, _)| **u != 0.0)
                    .map(|(u, w)| (u.abs(), *w))
                    .collect(),
            ),
        }
    }

    /// `(int F(tu), int f(tu) u, int f'(tu) u^2, clamped points)`
    fn eval(&self, r: &Reaction, t: f64) -> (f64, f64, f64, usize) {
        match self {
            ReactionPart::Moment { exponent, moment } => {
                let te = t.powf(*exponent);
                (t * te * moment / (exponent + 1.0), te * moment, exponent * te * moment / t, 0)
            }
            ReactionPart::Samples(s) => {
                let mut acc = (0.0, 0.0, 0.0, 0);
                for (u, w) in s {
                    let ft = r.fiber_terms(*u, t);
                    acc.0 += w * ft.primitive;
                    acc.1 += w * ft.first;
                    acc.2 += w * ft.second;
                    acc.3 += ft.clamped as usize;
                }
                acc
            }
        }
    }
}

/// Fibering map `t -> J(t u)` with the direction-dependent data precomputed.
pub struct Fiber<'a> {
    problem: &'a ProblemSpec,
    /// `(x, |grad u|, weight)`; one sample per cell when `H` does not depend on `x`
    ops: Vec<(Point, f64, f64)>,
    f_part: ReactionPart,
    g_part: ReactionPart,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberParts {
    pub values: FiberingValues,
    pub phi: f64,
    pub kirchhoff: f64,
    pub f_int: f64,
    pub g_int: f64,
    pub clamped: usize,
}

impl<'a> Fiber<'a> {
    pub fn new(problem: &'a ProblemSpec, u: &FeFunction) -> Result<Self> {
        check_mesh(problem, u)?;
        if u.is_zero() {
            return Err(Error::Argument("fibering map of u = 0 is degenerate".into()));
        }
        let mesh = &*problem.mesh;
        let nq = mesh.qp_per_cell();
        let grads = u.cell_gradients();
        let mut ops = Vec::new();
        let x_free = problem.nfunction.is_x_independent();
        for (c, g) in grads.iter().enumerate() {
            let s = g[0].hypot(g[1]);
            if s == 0.0 {
                continue;
            }
            if x_free {
                ops.push((mesh.qp_coords()[c * nq], s, mesh.cell_measure(c)));
            } else {
                for q in c * nq..(c + 1) * nq {
                    ops.push((mesh.qp_coords()[q], s, mesh.qp_weights()[q]));
                }
            }
        }
        let uq = u.at_quadrature();
        Ok(Self {
            problem,
            f_part: ReactionPart::new(&problem.f, &uq.0, mesh.qp_weights()),
            g_part: ReactionPart::new(&problem.g, &uq.0, mesh.qp_weights()),
            ops,
        })
    }

    pub fn eval_parts(&self, t: f64) -> FiberParts {
        let nf = &self.problem.nfunction;
        let (mut h0, mut h1, mut h2) = (0.0, 0.0, 0.0);
        for (x, g, w) in &self.ops {
            let s = t * g;
            let v = nf.values(x, s);
            h0 += w * v.h;
            h1 += w * v.dh * s;
            h2 += w * v.d2h * s * s;
        }
        let k = &self.problem.kirchhoff;
        let m = k.m(h0);
        let dm = k.dm(h0);
        let a = m * h1;
        let b = dm * h1 * h1 + m * h2;
        let lambda = self.problem.lambda;
        let (f0, f1, f2, cf) = self.f_part.eval(&self.problem.f, t);
        let (g0, g1, g2, cg) = self.g_part.eval(&self.problem.g, t);
        let kirchhoff = k.primitive(h0);
        let (a_t, b_t) = (a / t, b / (t * t));
        FiberParts {
            values: FiberingValues {
                psi: kirchhoff - lambda * f0 - g0,
                dpsi: a_t - lambda * f1 - g1,
                d2psi: b_t - lambda * f2 - g2,
                psi_scale: kirchhoff.abs() + (lambda * f0).abs() + g0.abs(),
                dpsi_scale: a_t.abs() + (lambda * f1).abs() + g1.abs(),
                d2psi_scale: b_t.abs() + (lambda * f2).abs() + g2.abs(),
            },
            phi: h0,
            kirchhoff,
            f_int: f0,
            g_int: g0,
            clamped: cf + cg,
        }
    }
}

impl FiberingMap for Fiber<'_> {
    fn eval(&self, t: f64) -> FiberingValues {
        self.eval_parts(t).values
    }
}

/// `(psi_u(t), psi_u'(t), psi_u''(t))` with term scales.
pub fn fibering(problem: &ProblemSpec, u: &FeFunction, t: f64) -> Result<FiberingValues> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("fibering parameter t={t} must be positive")));
    }
    let v = Fiber::new(problem, u)?.eval(t);
    if !(v.psi.is_finite() && v.dpsi.is_finite() && v.d2psi.is_finite()) {
        return Err(Error::Numeric(format!("fibering values not finite at t={t}: {v:?}")));
    }
    Ok(v)
}

/// Pointwise inequalities between `M(phi)`, `A`, `B` and the norm, plus the
/// envelope ratios of the reaction integrals (whose constants are unknown
/// and are only expected to stay bounded over samples).
#[derive(Clone, Debug, Serialize)]
pub struct BasicEstimates {
    pub parts: PrincipalParts,
    pub grad_norm: f64,
    pub norm: f64,
    /// `p M(phi) <= A <= q theta M(phi)`
    pub a1_violation: f64,
    /// `l- A <= B <= (q eta + l+) A`
    pub a2_violation: f64,
    /// `M(1) W_lo(||grad u||) <= M(phi) <= M(1) W_hi(||grad u||)`, exponents `p, q theta`
    pub a3_violation: f64,
    /// `int F(u) / W_hi^{1-gamma+, 1-gamma-}(||grad u||)`
    pub f_upper_ratio: f64,
    /// `int G(u) / W_hi^{r-, r+}(||grad u||)`
    pub g_upper_ratio: f64,
    /// `int G(u) / W_lo^{r-, r+}(||u||)`
    pub g_lower_ratio: f64,
}

impl BasicEstimates {
    pub fn max_violation(&self) -> f64 {
        self.a1_violation.max(self.a2_violation).max(self.a3_violation)
    }
}

/// Relative amount by which `mid` leaves `[lo, hi]`.
pub fn band_violation(lo: f64, mid: f64, hi: f64) -> f64 {
    let d = (lo - mid).max(mid - hi).max(0.0);
    if d == 0.0 {
        0.0
    } else {
        d / mid.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn check_basic_estimates(problem: &ProblemSpec, u: &FeFunction) -> Result<BasicEstimates> {
    check_mesh(problem, u)?;
    let c = &problem.constants;
    let mesh = &*problem.mesh;
    let grad = u.gradient_at_quadrature();
    let parts = principal_parts(problem, &grad)?;
    let grad_norm = luxemburg_norm(&problem.nfunction, mesh, &grad.norms())?;
    let norm = luxemburg_norm(&problem.nfunction, mesh, &u.at_quadrature())?;
    let mk = parts.kirchhoff;
    let qt = c.q * c.theta;
    let a1 = band_violation(c.p * mk, parts.a, qt * mk);
    let a2 = band_violation(c.l_minus * parts.a, parts.b, (c.q * c.eta + c.l_plus) * parts.a);
    let m1 = problem.kirchhoff.primitive(1.0);
    let a3 = band_violation(
        m1 * envelope_under(c.p, qt, grad_norm)?,
        mk,
        m1 * envelope_over(c.p, qt, grad_norm)?,
    );
    let e = energy(problem, u)?;
    let f_int = e.singular / problem.lambda;
    let f_env = envelope_over(1.0 - c.gamma_plus, 1.0 - c.gamma_minus, grad_norm)?;
    let g_hi = envelope_over(c.r_minus, c.r_plus, grad_norm)?;
    let g_lo = envelope_under(c.r_minus, c.r_plus, norm)?;
    Ok(BasicEstimates {
        parts,
        grad_norm,
        norm,
        a1_violation: a1,
        a2_violation: a2,
        a3_violation: a3,
        f_upper_ratio: f_int / f_env,
        g_upper_ratio: e.superlinear / g_hi,
        g_lower_ratio: e.superlinear / g_lo,
    })
}

/// CSV of a fibering profile of `u` (columns `t,psi,dpsi,d2psi`).
pub fn fibering_csv(problem: &ProblemSpec, u: &FeFunction, ts: &[f64]) -> Result<String> {
    let fiber = Fiber::new(problem, u)?;
    let mut s = String::from("t,psi,dpsi,d2psi\n");
    for &t in ts {
        let v = fiber.eval(t);
        s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", t, v.psi, v.dpsi, v.d2psi));
    }
    Ok(s)
}
