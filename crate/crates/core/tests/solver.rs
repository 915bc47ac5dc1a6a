use std::sync::Arc;

use nehari_core::energy::{energy, fibering};
use nehari_core::fibering::Branch;
use nehari_core::mesh::Mesh;
use nehari_core::nehari::{
    local_minimality_probe, minimize_on_nehari, project_to_nehari, random_positive_direction, rng_stream,
    solve_two_solutions, Descent, SolverOptions,
};
use nehari_core::nfunction::{NFunctionSpec, Weight};
use nehari_core::problem::{KirchhoffSpec, ProblemSpec, Reaction};
use nehari_core::properties::random_smooth_function;
use nehari_core::Error;

fn problem(nf: NFunctionSpec, m: KirchhoffSpec, r: f64, lambda: f64, mesh: Mesh) -> ProblemSpec {
    ProblemSpec::new(
        nf,
        m,
        Reaction::singular(0.5).unwrap(),
        Reaction::superlinear(r).unwrap(),
        lambda,
        Arc::new(mesh),
    )
    .unwrap()
}

fn model(n: usize) -> ProblemSpec {
    problem(
        NFunctionSpec::double_phase(1.5, 2.0, Weight::Constant(1.0)).unwrap(),
        KirchhoffSpec::constant(1.0).unwrap(),
        4.0,
        1e-3,
        Mesh::unit_square(n, n).unwrap(),
    )
}

#[test]
fn different_starts_reach_the_same_plus_energy() {
    let p = model(12);
    let opts = SolverOptions::default();
    let mut energies = Vec::new();
    for i in 0..2 {
        let mut rng = rng_stream(7, i);
        let u0 = random_smooth_function(&p.mesh, &mut rng, true);
        let m = minimize_on_nehari(&p, Branch::Plus, Some(&u0), &opts).unwrap();
        assert!(m.relative_residual() <= 1e-6, "{:?}", m.stop);
        assert!(m.point.energy < 0.0);
        energies.push(m.point.energy);
    }
    assert!((energies[0] - energies[1]).abs() <= 1e-4 * energies[0].abs(), "{energies:?}");
}

#[test]
fn lumped_mass_descent_converges() {
    let p = model(10);
    let opts = SolverOptions {
        descent: Descent::LumpedMass,
        ..Default::default()
    };
    let r = solve_two_solutions(&p, &opts).unwrap();
    assert!(r.success, "{:?}", r.failures);
}

#[test]
fn returned_points_lie_on_their_branch() {
    let p = model(10);
    let opts = SolverOptions::default();
    let r = solve_two_solutions(&p, &opts).unwrap();
    assert!(r.success, "{:?}", r.failures);
    for (out, branch) in [(&r.plus, Branch::Plus), (&r.minus, Branch::Minus)] {
        let pt = out.point.as_ref().unwrap();
        assert_eq!(pt.branch, branch);
        let v = fibering(&p, &pt.u, 1.0).unwrap();
        assert!(v.dpsi.abs() <= 1e-10 * v.dpsi_scale.max(1.0));
        assert_eq!(v.d2psi > 0.0, branch == Branch::Plus);
        assert!(pt.u.min_interior() > 0.0);
    }
    let d = r.diagnostics.unwrap();
    assert!(d.d1_estimate < d.d2_estimate);
    assert!(d.sigma_estimate > 0.0);
    assert_eq!(r.seed, opts.seed);
}

#[test]
fn plus_point_is_a_local_minimizer_and_minus_point_a_saddle() {
    let p = model(12);
    let opts = SolverOptions::default();
    let r = solve_two_solutions(&p, &opts).unwrap();
    let plus = r.plus.point.unwrap();
    let probe = local_minimality_probe(&p, &plus, 100, &opts).unwrap();
    assert_eq!(probe.violations, 0, "{probe:?}");
    let minus = r.minus.point.unwrap();
    let probe = local_minimality_probe(&p, &minus, 20, &opts).unwrap();
    assert_eq!(probe.scaling_max, Some(true));
    assert_eq!(probe.violations, 0, "{probe:?}");
}

#[test]
fn minus_projection_ignores_input_scaling() {
    let p = model(8);
    let opts = SolverOptions::default();
    let mut last = (0.0, f64::NEG_INFINITY);
    let u = random_smooth_function(&p.mesh, &mut rng_stream(3, 0), true);
    for k in 1..=4 {
        let pt = project_to_nehari(&p, &u.scaled(k as f64), Branch::Minus, &opts).unwrap();
        if k > 1 {
            assert!((pt.grad_norm - last.0).abs() <= 1e-9 * last.0);
        }
        last = (pt.grad_norm, pt.energy);
    }
    assert!(last.1 > 0.0);
}

#[test]
fn alternate_kirchhoff_power_reading() {
    // m(s) = 1 + s^0.1: eta = 0.1, q eta + l+ = 1.2 < 3
    let p = problem(
        NFunctionSpec::double_phase(1.5, 2.0, Weight::Constant(1.0)).unwrap(),
        KirchhoffSpec::affine_power(1.0, 1.0, 0.1).unwrap(),
        4.0,
        1e-3,
        Mesh::unit_square(16, 16).unwrap(),
    );
    let audit = nehari_core::problem::check_hypotheses(&p);
    assert!(audit.all_ok(), "{:?}", audit.failures());
    assert!((audit.eta - 0.1).abs() < 1e-15);
    let r = solve_two_solutions(&p, &SolverOptions::default()).unwrap();
    assert!(r.success, "{:?}", r.failures);
}

#[test]
fn classical_singular_p_laplacian() {
    let p = problem(
        NFunctionSpec::power(1.8).unwrap(),
        KirchhoffSpec::constant(1.0).unwrap(),
        3.5,
        1e-3,
        Mesh::unit_square(12, 12).unwrap(),
    );
    let r = solve_two_solutions(&p, &SolverOptions::default()).unwrap();
    assert!(r.success, "{:?}", r.failures);
    let (a, b) = (r.plus.point.unwrap(), r.minus.point.unwrap());
    assert!(a.energy < 0.0 && b.energy > 0.0);
}

#[test]
fn one_dimensional_problem() {
    let p = problem(
        NFunctionSpec::log_double_phase(1.5, 2.0, Weight::Constant(1.0)).unwrap(),
        KirchhoffSpec::affine_power(1.0, 0.5, 0.2).unwrap(),
        5.0,
        1e-3,
        Mesh::interval(64).unwrap(),
    );
    let r = solve_two_solutions(&p, &SolverOptions::default()).unwrap();
    assert!(r.success, "{:?}", r.failures);
}

#[test]
fn large_lambda_reports_projection_failure() {
    let p = model(6).with_lambda(1e4).unwrap();
    let r = solve_two_solutions(&p, &SolverOptions::default()).unwrap();
    assert!(!r.success);
    assert!(r.plus.point.is_none() && r.minus.point.is_none());
    assert!(r.failures.iter().all(|f| f.contains("projection")), "{:?}", r.failures);
}

#[test]
fn hypothesis_failure_without_override() {
    let p = problem(
        NFunctionSpec::double_phase(1.5, 2.0, Weight::Constant(1.0)).unwrap(),
        KirchhoffSpec::constant(1.0).unwrap(),
        2.0,
        1e-3,
        Mesh::unit_square(4, 4).unwrap(),
    );
    match solve_two_solutions(&p, &SolverOptions::default()) {
        Err(Error::Hypothesis(msg)) => assert!(msg.contains("H_C"), "{msg}"),
        other => panic!("expected hypothesis error, got {other:?}"),
    }
}

#[test]
fn random_direction_energy_is_finite() {
    let p = model(8);
    let mut rng = rng_stream(1, 1);
    let u = random_positive_direction(&p.mesh, &mut rng);
    assert!(energy(&p, &u).unwrap().total.is_finite());
}
