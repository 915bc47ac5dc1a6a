//! Projection onto the Nehari branches, constrained minimization, the
//! two-solution driver, and lambda-threshold scans.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, grad_energy, Fiber};
use crate::error::{Error, Result};
use crate::fibering::{classify, find_fibering_roots, local_roots, Branch, FiberingMap, FiberingRoot, RootOptions};
use crate::mesh::{FeFunction, Mesh};
use crate::modular::luxemburg_norm;
use crate::par::Execution;
use crate::problem::{check_hypotheses, HypothesisReport, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Descent {
    /// nodal vector of the energy gradient
    #[default]
    Nodal,
    /// nodal gradient divided by the lumped mass
    LumpedMass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub roots: RootOptions,
    /// stop when the gradient norm drops below this fraction of its initial value
    pub residual_tol: f64,
    /// stop when `J` decreased by less than this (relative) over 5 iterations
    pub energy_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub armijo: f64,
    pub descent: Descent,
    pub seed: u64,
    pub n_probes: usize,
    pub probe_slack: f64,
    pub override_hypotheses: bool,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            roots: RootOptions::default(),
            residual_tol: 1e-6,
            energy_tol: 1e-16,
            max_iter: 20_000,
            max_halvings: 30,
            armijo: 1e-4,
            descent: Descent::Nodal,
            seed: 0,
            n_probes: 100,
            probe_slack: 1e-10,
            override_hypotheses: false,
            execution: Execution::default(),
        }
    }
}

/// A point of the Nehari manifold, rescaled so that its root sits at `t = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct NehariPoint {
    #[serde(skip_serializing)]
    pub u: FeFunction,
    /// scaling that placed the input direction on the manifold
    pub t_root: f64,
    pub branch: Branch,
    /// `psi_u'(1)`
    pub dpsi: f64,
    /// `psi_u''(1)`
    pub psi2: f64,
    pub energy: f64,
    /// `||grad u||` in the Luxemburg norm
    pub grad_norm: f64,
}

/// Random direction with interior nodal values uniform in `(0, 1]`.
pub fn random_positive_direction(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng) -> FeFunction {
    let values = (0..mesh.n_vertices()).map(|_| 1.0 - rng.gen::<f64>()).collect();
    FeFunction::from_values(mesh, values).expect("length matches")
}

/// Interpolant of the product of sines on the unit cube.
pub fn default_start(mesh: &Arc<Mesh>) -> FeFunction {
    let pi = std::f64::consts::PI;
    let dim = mesh.dim();
    FeFunction::interpolate(mesh, |x| {
        let mut v = 1.0;
        for xi in x.iter().take(dim) {
            v *= (pi * xi).sin().abs();
        }
        v
    })
}

/// Seeded stream `index` of the generator.
pub fn rng_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn select(roots: &[FiberingRoot], branch: Branch) -> Vec<FiberingRoot> {
    roots.iter().copied().filter(|r| r.branch == branch).collect()
}

fn finish_point(problem: &ProblemSpec, u: &FeFunction, root: &FiberingRoot, with_norm: bool) -> Result<NehariPoint> {
    let w = u.scaled(root.t);
    let v = Fiber::new(problem, &w)?.eval(1.0);
    let grad_norm = if with_norm {
        luxemburg_norm(&problem.nfunction, &problem.mesh, &w.gradient_at_quadrature().norms())?
    } else {
        f64::NAN
    };
    Ok(NehariPoint {
        u: w,
        t_root: root.t,
        branch: root.branch,
        dpsi: v.dpsi,
        psi2: v.d2psi,
        energy: v.psi,
        grad_norm,
    })
}

/// Projects `u` onto the requested branch with a full scan of its fibering
/// map; the branch must contain exactly one root.
pub fn project_to_nehari(problem: &ProblemSpec, u: &FeFunction, branch: Branch, opts: &SolverOptions) -> Result<NehariPoint> {
    let fiber = Fiber::new(problem, u)?;
    let prof = find_fibering_roots(&fiber, &opts.roots, opts.execution)?;
    let hits = select(&prof.roots, branch);
    if hits.len() != 1 {
        return Err(Error::Projection {
            branch: branch.name().into(),
            lambda: problem.lambda,
            count: hits.len(),
        });
    }
    finish_point(problem, u, &hits[0], true)
}

/// Projection warm-started near `t = 1`: a short local scan, falling back to
/// the full scan when the window does not contain exactly one root on the
/// branch.
fn reproject(problem: &ProblemSpec, u: &FeFunction, branch: Branch, opts: &SolverOptions) -> Result<(FeFunction, f64)> {
    let fiber = Fiber::new(problem, u)?;
    let near = local_roots(&fiber, 0.5, 2.0, 17, &opts.roots)?;
    let mut hits = select(&near, branch);
    if hits.len() != 1 {
        let prof = find_fibering_roots(&fiber, &opts.roots, Execution::Sequential)?;
        hits = select(&prof.roots, branch);
        if hits.len() != 1 {
            return Err(Error::Projection {
                branch: branch.name().into(),
                lambda: problem.lambda,
                count: hits.len(),
            });
        }
    }
    let t = hits[0].t;
    Ok((u.scaled(t), t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    EnergyStagnation,
    StepFailure,
    MaxIter,
}

#[derive(Clone, Debug, Serialize)]
pub struct Minimized {
    pub point: NehariPoint,
    pub iterations: usize,
    /// Euclidean norm of the nodal gradient at the final point
    pub residual: f64,
    /// same, at the first projected iterate
    pub initial_residual: f64,
    pub stop: StopReason,
}

impl Minimized {
    pub fn relative_residual(&self) -> f64 {
        if self.initial_residual > 0.0 {
            self.residual / self.initial_residual
        } else {
            self.residual
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `J` over one branch of the Nehari manifold.
///
/// Each step moves against the (optionally mass-scaled) gradient, takes the
/// absolute value, and projects back onto the branch. Barzilai-Borwein trial
/// steps are safeguarded by an Armijo test with step halving.
pub fn minimize_on_nehari(
    problem: &ProblemSpec,
    branch: Branch,
    u0: Option<&FeFunction>,
    opts: &SolverOptions,
) -> Result<Minimized> {
    if branch == Branch::Zero {
        return Err(Error::Argument("minimization is only defined on the plus and minus branches".into()));
    }
    let start = match u0 {
        Some(u) => u.abs(),
        None => default_start(&problem.mesh),
    };
    let first = project_to_nehari(problem, &start, branch, opts)?;
    let mut u = first.u;
    let mut j = first.energy;
    let mut g = grad_energy(problem, &u)?;
    let scale: Vec<f64> = match opts.descent {
        Descent::Nodal => vec![1.0; g.len()],
        Descent::LumpedMass => problem.mesh.lumped_mass().iter().map(|m| 1.0 / m).collect(),
    };
    let direction = |g: &[f64]| -> Vec<f64> { g.iter().zip(&scale).map(|(a, s)| a * s).collect() };
    let r0 = norm(&g);
    let mut d = direction(&g);
    let mut step = 0.1 * u.nodal_norm() / norm(&d).max(f64::MIN_POSITIVE);
    let mut history = vec![j];
    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;
    let eps = f64::EPSILON;

    for k in 0..opts.max_iter {
        iterations = k;
        if norm(&g) <= opts.residual_tol * r0 {
            stop = StopReason::Converged;
            break;
        }
        let slope = dot(&g, &d);
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.values().iter().zip(&d).map(|(x, y)| (x - alpha * y).abs()).collect();
            let w = FeFunction::from_values(&problem.mesh, trial)?;
            if !w.is_zero() {
                if let Ok((v, _)) = reproject(problem, &w, branch, opts) {
                    let jv = energy(problem, &v)?.total;
                    if jv <= j - opts.armijo * alpha * slope + 4.0 * eps * j.abs() {
                        accepted = Some((v, jv));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((v, jv)) = accepted else {
            stop = StopReason::StepFailure;
            break;
        };
        let g_new = grad_energy(problem, &v)?;
        let s: Vec<f64> = v.values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y.iter().zip(&scale).map(|(a, c)| a * c).collect::<Vec<_>>());
        let ss = dot(&s, &s);
        step = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
        u = v;
        j = jv;
        g = g_new;
        d = direction(&g);
        history.push(j);
        let n = history.len();
        if n > 5 {
            let drop = history[n - 6] - history[n - 1];
            if drop.abs() <= opts.energy_tol * history[n - 1].abs() {
                stop = StopReason::EnergyStagnation;
                iterations = k + 1;
                break;
            }
        }
        iterations = k + 1;
    }
    let v = Fiber::new(problem, &u)?.eval(1.0);
    let root = FiberingRoot {
        t: 1.0,
        dpsi: v.dpsi,
        d2psi: v.d2psi,
        branch: classify(&v, &opts.roots),
    };
    let point = finish_point(problem, &u, &root, true)?;
    Ok(Minimized {
        point,
        iterations,
        residual: norm(&g),
        initial_residual: r0,
        stop,
    })
}

/// Estimates from a set of sampled Nehari points.
#[derive(Clone, Debug, Serialize)]
pub struct NehariDiagnostics {
    pub lambda: f64,
    /// max `||grad u||` over sampled plus-branch points
    pub d1_estimate: f64,
    /// min `||grad u||` over sampled minus-branch points
    pub d2_estimate: f64,
    /// min `J` over sampled minus-branch points
    pub sigma_estimate: f64,
    pub n_directions: usize,
    pub n_success: usize,
}

impl NehariDiagnostics {
    pub fn all_succeeded(&self) -> bool {
        self.n_directions > 0 && self.n_success == self.n_directions
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchOutcome {
    pub point: Option<NehariPoint>,
    pub iterations: usize,
    pub residual: f64,
    pub initial_residual: f64,
    pub relative_residual: f64,
    /// min interior nodal value
    pub positivity: f64,
    pub stop: Option<StopReason>,
    pub error: Option<String>,
}

impl BranchOutcome {
    fn failed(e: &Error) -> Self {
        Self {
            point: None,
            iterations: 0,
            residual: f64::NAN,
            initial_residual: f64::NAN,
            relative_residual: f64::NAN,
            positivity: f64::NAN,
            stop: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub success: bool,
    pub failures: Vec<String>,
    pub lambda: f64,
    pub seed: u64,
    pub residual_tol: f64,
    pub plus: BranchOutcome,
    pub minus: BranchOutcome,
    pub hypotheses: HypothesisReport,
    pub hypotheses_overridden: bool,
    pub diagnostics: Option<NehariDiagnostics>,
}

/// Minimizes on both branches and verifies residuals, positivity and
/// energy signs.
pub fn solve_two_solutions(problem: &ProblemSpec, opts: &SolverOptions) -> Result<SolveReport> {
    let hypotheses = check_hypotheses(problem);
    if !hypotheses.all_ok() && !opts.override_hypotheses {
        let names: Vec<String> = hypotheses.failures().iter().map(|c| c.name.clone()).collect();
        return Err(Error::Hypothesis(names.join("; ")));
    }
    let run = |branch| minimize_on_nehari(problem, branch, None, opts);
    let results = opts.execution.map(2, |i| run(if i == 0 { Branch::Plus } else { Branch::Minus }));
    let mut failures = Vec::new();
    let mut outcomes = Vec::new();
    for (res, (name, want_negative)) in results.into_iter().zip([("plus", true), ("minus", false)]) {
        let outcome = match res {
            Ok(m) => {
                let positivity = m.point.u.min_interior();
                let rel = m.relative_residual();
                if rel > opts.residual_tol {
                    failures.push(format!(
                        "{name}: relative residual {rel:e} exceeds {:e} (stopped: {:?})",
                        opts.residual_tol, m.stop
                    ));
                }
                if !(positivity > 0.0) {
                    failures.push(format!("{name}: interior minimum {positivity:e} is not positive"));
                }
                let e = m.point.energy;
                if want_negative && !(e < 0.0) {
                    failures.push(format!("{name}: energy {e:e} is not negative"));
                }
                if !want_negative && !(e > 0.0) {
                    failures.push(format!("{name}: energy {e:e} is not positive"));
                }
                BranchOutcome {
                    iterations: m.iterations,
                    residual: m.residual,
                    initial_residual: m.initial_residual,
                    relative_residual: rel,
                    positivity,
                    stop: Some(m.stop),
                    error: None,
                    point: Some(m.point),
                }
            }
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                BranchOutcome::failed(&e)
            }
        };
        outcomes.push(outcome);
    }
    let minus = outcomes.pop().expect("two branches");
    let plus = outcomes.pop().expect("two branches");
    let diagnostics = match (&plus.point, &minus.point) {
        (Some(a), Some(b)) => Some(NehariDiagnostics {
            lambda: problem.lambda,
            d1_estimate: a.grad_norm,
            d2_estimate: b.grad_norm,
            sigma_estimate: b.energy,
            n_directions: 1,
            n_success: 1,
        }),
        _ => None,
    };
    Ok(SolveReport {
        success: failures.is_empty(),
        failures,
        lambda: problem.lambda,
        seed: opts.seed,
        residual_tol: opts.residual_tol,
        plus,
        minus,
        hypotheses,
        hypotheses_overridden: opts.override_hypotheses,
        diagnostics,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub direction_id: usize,
    pub n_roots: usize,
    pub t_plus: Option<f64>,
    pub t_minus: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub sigma: Option<f64>,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn success(&self) -> bool {
        self.t_plus.is_some() && self.t_minus.is_some()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaScan {
    pub seed: u64,
    pub n_directions: usize,
    pub rows: Vec<ScanRow>,
    pub diagnostics: Vec<NehariDiagnostics>,
    /// largest lambda at which every direction had the two-root structure
    pub lambda_empirical: Option<f64>,
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl LambdaScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,direction_id,n_roots,t_plus,t_minus,D1,D2,sigma\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{},{},{},{},{},{},{}\n",
                r.lambda,
                r.direction_id,
                r.n_roots,
                opt_csv(r.t_plus),
                opt_csv(r.t_minus),
                opt_csv(r.d1),
                opt_csv(r.d2),
                opt_csv(r.sigma)
            ));
        }
        s
    }
}

/// For each lambda, root-finds the fibering maps of `n_directions` seeded
/// random positive directions (the same directions for every lambda).
pub fn lambda_scan(problem: &ProblemSpec, lambdas: &[f64], n_directions: usize, opts: &SolverOptions) -> Result<LambdaScan> {
    if lambdas.is_empty() {
        return Err(Error::Argument("lambda grid is empty".into()));
    }
    if n_directions == 0 {
        return Err(Error::Argument("need at least one direction".into()));
    }
    let problems = lambdas
        .iter()
        .map(|&l| problem.with_lambda(l))
        .collect::<Result<Vec<_>>>()?;
    let dirs: Vec<(FeFunction, f64)> = opts.execution.map(n_directions, |i| {
        let mut rng = rng_stream(opts.seed, i as u64);
        let u = random_positive_direction(&problem.mesh, &mut rng);
        let n = luxemburg_norm(&problem.nfunction, &problem.mesh, &u.gradient_at_quadrature().norms())
            .unwrap_or(f64::NAN);
        (u, n)
    });
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|l| (0..n_directions).map(move |d| (l, d)))
        .collect();
    let rows = opts.execution.map_slice(&jobs, |&(l, d)| {
        let p = &problems[l];
        let (u, norm) = &dirs[d];
        let mut row = ScanRow {
            lambda: p.lambda,
            direction_id: d,
            n_roots: 0,
            t_plus: None,
            t_minus: None,
            d1: None,
            d2: None,
            sigma: None,
            error: None,
        };
        let fiber = match Fiber::new(p, u) {
            Ok(f) => f,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        match find_fibering_roots(&fiber, &opts.roots, Execution::Sequential) {
            Ok(prof) => {
                row.n_roots = prof.roots.len();
                if let Some((tp, tm)) = prof.two_root_structure() {
                    row.t_plus = Some(tp);
                    row.t_minus = Some(tm);
                    row.d1 = Some(tp * norm);
                    row.d2 = Some(tm * norm);
                    row.sigma = Some(fiber.eval(tm).psi);
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    });
    let mut diagnostics = Vec::new();
    for (l, p) in problems.iter().enumerate() {
        let mine: Vec<&ScanRow> = rows[l * n_directions..(l + 1) * n_directions].iter().collect();
        let ok: Vec<&&ScanRow> = mine.iter().filter(|r| r.success()).collect();
        let fold = |f: fn(&ScanRow) -> Option<f64>, max: bool| {
            ok.iter().filter_map(|r| f(r)).fold(if max { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
                if max {
                    a.max(b)
                } else {
                    a.min(b)
                }
            })
        };
        let empty = ok.is_empty();
        let nan_if = |v: f64| if empty { f64::NAN } else { v };
        diagnostics.push(NehariDiagnostics {
            lambda: p.lambda,
            d1_estimate: nan_if(fold(|r| r.d1, true)),
            d2_estimate: nan_if(fold(|r| r.d2, false)),
            sigma_estimate: nan_if(fold(|r| r.sigma, false)),
            n_directions,
            n_success: ok.len(),
        });
    }
    let lambda_empirical = diagnostics
        .iter()
        .filter(|d| d.all_succeeded())
        .map(|d| d.lambda)
        .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.max(b))));
    Ok(LambdaScan {
        seed: opts.seed,
        n_directions,
        rows,
        diagnostics,
        lambda_empirical,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub branch: Branch,
    pub n_probes: usize,
    pub violations: usize,
    /// smallest `J(probe) - J(u)` observed
    pub min_delta: f64,
    pub slack: f64,
    /// for minus-branch points: `psi'' < 0` and `J(u) > J((1 +- delta) u)`
    pub scaling_max: Option<bool>,
    pub seed: u64,
}

/// Random perturbation with nodal norm `radius`, zero on the boundary.
fn random_perturbation(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng, radius: f64) -> FeFunction {
    let values = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = FeFunction::from_values(mesh, values).expect("length matches");
    let n = h.nodal_norm();
    h.scaled(radius / n.max(f64::MIN_POSITIVE))
}

/// Checks that plus-branch points are local minimizers of `J` and that
/// minus-branch points are saddles: maxima along the ray, minima across the
/// manifold.
pub fn local_minimality_probe(
    problem: &ProblemSpec,
    point: &NehariPoint,
    n_probes: usize,
    opts: &SolverOptions,
) -> Result<ProbeReport> {
    let u = &point.u;
    let j0 = energy(problem, u)?.total;
    let radius = 1e-3 * u.nodal_norm();
    let slack = opts.probe_slack * j0.abs().max(1.0);
    let deltas: Vec<Result<f64>> = opts.execution.map(n_probes, |i| {
        let mut rng = rng_stream(opts.seed ^ 0x5eed_0001, i as u64);
        let scale = 1.0 - rng.gen::<f64>();
        let h = random_perturbation(&problem.mesh, &mut rng, radius * scale);
        match point.branch {
            Branch::Minus => {
                let mut worst = f64::INFINITY;
                for sign in [1.0, -1.0] {
                    let v = u.axpy(sign, &h)?.abs();
                    let (w, _) = reproject(problem, &v, Branch::Minus, opts)?;
                    worst = worst.min(energy(problem, &w)?.total - j0);
                }
                Ok(worst)
            }
            _ => Ok(energy(problem, &u.add(&h)?)?.total - j0),
        }
    });
    let deltas = deltas.into_iter().collect::<Result<Vec<f64>>>()?;
    let violations = deltas.iter().filter(|d| **d < -slack).count();
    let min_delta = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let scaling_max = if point.branch == Branch::Minus {
        let fiber = Fiber::new(problem, u)?;
        let v = fiber.eval(1.0);
        let d = 1e-3;
        Some(v.d2psi < 0.0 && fiber.eval(1.0 + d).psi < v.psi && fiber.eval(1.0 - d).psi < v.psi)
    } else {
        None
    };
    Ok(ProbeReport {
        branch: point.branch,
        n_probes,
        violations,
        min_delta,
        slack,
        scaling_max,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{NFunctionSpec, Weight};
    use crate::problem::{KirchhoffSpec, Reaction};

    fn model(n: usize, lambda: f64) -> ProblemSpec {
        ProblemSpec::new(
            NFunctionSpec::double_phase(1.5, 2.0, Weight::Constant(1.0)).unwrap(),
            KirchhoffSpec::constant(1.0).unwrap(),
            Reaction::singular(0.5).unwrap(),
            Reaction::superlinear(4.0).unwrap(),
            lambda,
            Arc::new(Mesh::unit_square(n, n).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn projection_is_idempotent_and_scale_invariant() {
        let p = model(6, 1e-3);
        let opts = SolverOptions::default();
        let u = default_start(&p.mesh);
        for branch in [Branch::Plus, Branch::Minus] {
            let a = project_to_nehari(&p, &u, branch, &opts).unwrap();
            assert!(a.dpsi.abs() <= 1e-9 * 1f64.max(a.psi2.abs()));
            let b = project_to_nehari(&p, &a.u, branch, &opts).unwrap();
            assert!((b.t_root - 1.0).abs() < 1e-8);
            let c = project_to_nehari(&p, &u.scaled(2.0), branch, &opts).unwrap();
            for (x, y) in a.u.values().iter().zip(c.u.values()) {
                assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300));
            }
            assert_eq!(a.branch, branch);
        }
    }

    #[test]
    fn large_lambda_projection_fails() {
        let p = model(4, 1e3);
        let u = default_start(&p.mesh);
        let err = project_to_nehari(&p, &u, Branch::Plus, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Projection { count: 0, .. }));
    }

    #[test]
    fn scan_csv_has_schema() {
        let p = model(4, 1e-3);
        let scan = lambda_scan(&p, &[1e-3], 3, &SolverOptions::default()).unwrap();
        let csv = scan.to_csv();
        assert!(csv.starts_with("lambda,direction_id,n_roots,t_plus,t_minus,D1,D2,sigma\n"));
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(scan.lambda_empirical, Some(1e-3));
        assert!(lambda_scan(&p, &[], 3, &SolverOptions::default()).is_err());
    }
}
