//! Sampled structural properties of a problem: growth and index bounds,
//! modular and norm sandwiches, the pointwise estimates for the principal
//! part, fibering scaling, gradient consistency, operator monotonicity and
//! the fibering root structure.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{check_basic_estimates, energy, fibering, grad_energy, operator_vector, Fiber};
use crate::error::Result;
use crate::fibering::{find_fibering_roots, Branch, RootOptions};
use crate::mesh::{FeFunction, Mesh};
use crate::modular::{check_modular_norm_sandwich, luxemburg_norm, modular_rho};
use crate::nehari::{random_positive_direction, rng_stream};
use crate::nfunction::{check_growth_sandwich, default_x_samples, LogGrid, NFunctionSection, NFunctionSpec};
use crate::par::Execution;
use crate::problem::ProblemSpec;

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl PropertyResult {
    fn new(name: &str, samples: usize, max_violation: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            samples,
            max_violation,
            tolerance,
            passed: max_violation.is_finite() && max_violation <= tolerance,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub seed: u64,
    pub n_functions: usize,
    pub n_scaling: usize,
    pub n_gradient: usize,
    pub n_directions: usize,
    pub roots: RootOptions,
    pub execution: Execution,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_functions: 100,
            n_scaling: 100,
            n_gradient: 20,
            n_directions: 50,
            roots: RootOptions::default(),
            execution: Execution::default(),
        }
    }
}

/// Smooth random function: a few sine modes with random coefficients and an
/// amplitude spread over four decades. With `positive`, a positive
/// modulation of the lowest mode instead.
pub fn random_smooth_function(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng, positive: bool) -> FeFunction {
    let pi = std::f64::consts::PI;
    let dim = mesh.dim();
    let amp = 10f64.powf(rng.gen_range(-2.0..2.0));
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(1..=4) as f64,
                rng.gen_range(1..=4) as f64,
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let shift: [f64; 2] = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    FeFunction::interpolate(mesh, |x| {
        let yfac = |k: f64| if dim == 2 { (k * pi * x[1]).sin() } else { 1.0 };
        if positive {
            let base = (pi * x[0]).sin() * yfac(1.0);
            let wobble: f64 = modes
                .iter()
                .map(|(a, b, c)| c * (a * pi * (x[0] + shift[0])).cos() * (b * pi * (x[1] + shift[1])).cos())
                .sum();
            amp * base * (1.0 + 0.2 * wobble)
        } else {
            amp * modes.iter().map(|(a, b, c)| c * (a * pi * x[0]).sin() * yfac(*b)).sum::<f64>()
        }
    })
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / scale.abs().max(f64::MIN_POSITIVE)
    }
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Power-envelope growth of `H'` and `H` and the index ratio bounds at every
/// point of a 200-point log grid on `[1e-4, 1e4]`, for 25 points `x`.
pub fn growth_property(spec: &NFunctionSpec, indices: (f64, f64, f64, f64), tol: f64) -> Result<PropertyResult> {
    let (p, q, lm, lp) = indices;
    let grid = LogGrid::new(1e-4, 1e4, 200)?.points();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for x in default_x_samples() {
        let sec = NFunctionSection { spec, x };
        let rep = check_growth_sandwich(&sec, &grid, Some((lm, lp)), tol)?;
        worst = worst.max(rep.max_violation_density).max(rep.max_violation_primitive);
        for &s in &grid {
            let v = spec.values(&x, s);
            let r1 = s * v.dh / v.h;
            let r2 = s * v.d2h / v.dh;
            let band = |lo: f64, val: f64, hi: f64| ((lo - val).max(val - hi).max(0.0)) / val.abs().max(1.0);
            worst = worst.max(band(p, r1, q)).max(band(lm, r2, lp));
            n += 1;
        }
    }
    Ok(PropertyResult::new(
        "growth_and_index_bounds",
        n,
        worst,
        tol,
        format!("p={p}, q={q}, l-={lm}, l+={lp}"),
    ))
}

/// Runs every property on the problem. Sampling is seeded per property and
/// per sample, so results do not depend on the execution policy.
pub fn run_property_suite(problem: &ProblemSpec, opts: &SuiteOptions) -> Result<Vec<PropertyResult>> {
    let c = &problem.constants;
    let mesh = &problem.mesh;
    let nf = &problem.nfunction;
    let exec = opts.execution;
    let mut out = vec![growth_property(nf, (c.p, c.q, c.l_minus, c.l_plus), 1e-9)?];

    let sample = |stream: u64, i: usize, positive: bool| {
        let mut rng = rng_stream(opts.seed, (stream << 32) | i as u64);
        random_smooth_function(mesh, &mut rng, positive)
    };

    // unit ball and sandwich
    let rows = exec.map(opts.n_functions, |i| -> Result<(f64, f64)> {
        let u = sample(1, i, false);
        let f = u.at_quadrature();
        let n = luxemburg_norm(nf, mesh, &f)?;
        let scaled = crate::mesh::QuadField(f.0.iter().map(|v| v / n).collect());
        let unit = (modular_rho(nf, mesh, &scaled)?.value - 1.0).abs();
        let sw = check_modular_norm_sandwich(nf, mesh, &f, (c.p, c.q))?;
        Ok((unit, sw.violation))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    out.push(PropertyResult::new(
        "luxemburg_unit_ball",
        rows.len(),
        max_of(rows.iter().map(|r| r.0)),
        1e-10,
        "|rho(u/||u||) - 1|".into(),
    ));
    out.push(PropertyResult::new(
        "modular_norm_sandwich",
        rows.len(),
        max_of(rows.iter().map(|r| r.1)),
        1e-8,
        format!("exponents ({}, {})", c.p, c.q),
    ));

    // principal part estimates
    let est = exec.map(opts.n_functions, |i| check_basic_estimates(problem, &sample(2, i, false)));
    let est = est.into_iter().collect::<Result<Vec<_>>>()?;
    let ratio_max = |f: fn(&crate::energy::BasicEstimates) -> f64| est.iter().map(f).fold(0.0, f64::max);
    out.push(PropertyResult::new(
        "principal_part_estimates",
        est.len(),
        max_of(est.iter().map(|e| e.max_violation())),
        1e-8,
        format!(
            "max ratios: int F / W = {:.3e}, int G / W = {:.3e}, W / int G = {:.3e}",
            ratio_max(|e| e.f_upper_ratio),
            ratio_max(|e| e.g_upper_ratio),
            est.iter().map(|e| 1.0 / e.g_lower_ratio).fold(0.0, f64::max)
        ),
    ));

    // scaling identities
    let sc = exec.map(opts.n_scaling, |i| -> Result<f64> {
        let u = sample(3, i, true);
        let mut rng = rng_stream(opts.seed, (4 << 32) | i as u64);
        let t = 10f64.powf(rng.gen_range(-2.0..2.0));
        let a = fibering(problem, &u, t)?;
        let b = fibering(problem, &u.scaled(t), 1.0)?;
        Ok(max_of([
            rel(a.psi, b.psi, b.psi),
            rel(t * a.dpsi, b.dpsi, b.dpsi),
            rel(t * t * a.d2psi, b.d2psi, b.d2psi),
        ]))
    });
    let sc = sc.into_iter().collect::<Result<Vec<_>>>()?;
    out.push(PropertyResult::new(
        "fibering_scaling",
        sc.len(),
        max_of(sc),
        1e-11,
        "relative error of psi_u(t)=psi_tu(1), t psi_u'(t)=psi_tu'(1), t^2 psi_u''(t)=psi_tu''(1)".into(),
    ));

    // gradient consistency
    let gr = exec.map(opts.n_gradient, |i| -> Result<f64> {
        let u = sample(5, i, true);
        let mut h = sample(6, i, false);
        h = h.scaled(u.nodal_norm() / h.nodal_norm());
        gradient_fd_error(problem, &u, &h)
    });
    let gr = gr.into_iter().collect::<Result<Vec<_>>>()?;
    out.push(PropertyResult::new(
        "gradient_finite_difference",
        gr.len(),
        max_of(gr),
        1e-5,
        "best over eps in {1e-4, 1e-5}".into(),
    ));

    // monotonicity
    let mono = exec.map(opts.n_functions, |i| monotonicity_gap(nf, &sample(7, i, false), &sample(8, i, false)));
    out.push(PropertyResult::new(
        "operator_monotonicity",
        mono.len(),
        max_of(mono),
        0.0,
        "<L(u)-L(v), u-v> above 1e-14 of its term scale".into(),
    ));

    // evenness
    let ev = exec.map(opts.n_functions.min(20), |i| -> Result<f64> {
        let u = sample(9, i, true);
        let v = u.scaled(-1.0);
        let (a, b) = (energy(problem, &u)?.total, energy(problem, &v)?.total);
        let (da, db) = (fibering(problem, &u, 1.0)?.dpsi, fibering(problem, &v.abs(), 1.0)?.dpsi);
        Ok(if a == b && da == db { 0.0 } else { 1.0 })
    });
    let ev = ev.into_iter().collect::<Result<Vec<_>>>()?;
    out.push(PropertyResult::new("energy_evenness", ev.len(), max_of(ev), 0.0, "exact equality".into()));

    // fibering structure
    let fs = exec.map(opts.n_directions, |i| -> Result<f64> {
        let mut rng = rng_stream(opts.seed, (10 << 32) | i as u64);
        let u = random_positive_direction(mesh, &mut rng);
        let prof = find_fibering_roots(&Fiber::new(problem, &u)?, &opts.roots, Execution::Sequential)?;
        let ok = prof.two_root_structure().is_some() && prof.count(Branch::Zero) == 0;
        Ok(if ok { 0.0 } else { 1.0 })
    });
    let fs = fs.into_iter().collect::<Result<Vec<_>>>()?;
    let failures: f64 = fs.iter().sum();
    out.push(PropertyResult::new(
        "fibering_two_roots",
        fs.len(),
        failures,
        0.0,
        format!("directions without exactly one plus root below one minus root: {failures}"),
    ));
    Ok(out)
}

/// Relative mismatch between `<grad J(u), h>` and central differences of `J`,
/// best over `eps in {1e-4, 1e-5}`.
pub fn gradient_fd_error(problem: &ProblemSpec, u: &FeFunction, h: &FeFunction) -> Result<f64> {
    let g = grad_energy(problem, u)?;
    let dir: f64 = g.iter().zip(h.values()).map(|(a, b)| a * b).sum();
    let mut best = f64::INFINITY;
    for eps in [1e-4, 1e-5] {
        let jp = energy(problem, &u.axpy(eps, h)?)?.total;
        let jm = energy(problem, &u.axpy(-eps, h)?)?.total;
        let fd = (jp - jm) / (2.0 * eps);
        best = best.min(rel(dir, fd, dir.abs().max(fd.abs())));
    }
    Ok(best)
}

/// `max(0, floor - <L(u) - L(v), u - v>)` relative to the term scale, with
/// `floor = 1e-14 * scale`; zero means strict positivity above the floor.
pub fn monotonicity_gap(spec: &NFunctionSpec, u: &FeFunction, v: &FeFunction) -> f64 {
    let (lu, lv) = (operator_vector(spec, u), operator_vector(spec, v));
    let d: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
    let pu: f64 = lu.iter().zip(&d).map(|(a, b)| a * b).sum();
    let pv: f64 = lv.iter().zip(&d).map(|(a, b)| a * b).sum();
    let scale = pu.abs() + pv.abs();
    let pairing = pu - pv;
    if scale == 0.0 {
        return 1.0;
    }
    ((1e-14 * scale - pairing) / scale).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::Weight;
    use crate::problem::{KirchhoffSpec, Reaction};

    #[test]
    fn suite_passes_on_small_model() {
        let p = ProblemSpec::new(
            NFunctionSpec::double_phase(1.5, 2.0, Weight::Constant(1.0)).unwrap(),
            KirchhoffSpec::constant(1.0).unwrap(),
            Reaction::singular(0.5).unwrap(),
            Reaction::superlinear(4.0).unwrap(),
            1e-3,
            Arc::new(Mesh::unit_square(6, 6).unwrap()),
        )
        .unwrap();
        let opts = SuiteOptions {
            n_functions: 10,
            n_scaling: 10,
            n_gradient: 5,
            n_directions: 5,
            ..Default::default()
        };
        let res = run_property_suite(&p, &opts).unwrap();
        for r in &res {
            assert!(r.passed, "{r:?}");
        }
        assert_eq!(res.len(), 9);
    }
}
