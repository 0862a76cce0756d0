use super::*;
use crate::builtin::Builtin;
use crate::extremal::{adjoint_residual_p, lift_extremal, maximality_check_p, zero_level_max, Extremal};
use crate::problem::check_admissible;
use crate::sampling::unit_f64;
use crate::transform::VProfile;

#[test]
fn decision_vector_layout() {
    let base = Builtin::Baseline.problem();
    let tr = Transcription::new(&base, 10).unwrap();
    assert_eq!(tr.decision_len(), 9 + 10);

    let torres = Builtin::Torres.problem();
    let tr = Transcription::new(&torres, 50).unwrap();
    assert_eq!(tr.decision_len(), 49 * 2 + 50 * 2);

    assert!(matches!(
        Transcription::new(&base, 1),
        Err(SolverError::TooFewIntervals(1))
    ));
}

#[test]
fn merit_gradient_matches_finite_differences() {
    for b in [Builtin::Lq, Builtin::Torres] {
        let p = b.problem();
        let tr = Transcription::new(&p, 8).unwrap();
        let mut state = 0xD1FF ^ b.name().len() as u64;
        let mut z = tr.default_init();
        for zi in z.iter_mut() {
            *zi += 0.3 * (unit_f64(&mut state) - 0.5);
        }
        let lambda: Vec<f64> = (0..tr.constraint_len())
            .map(|_| unit_f64(&mut state) - 0.5)
            .collect();
        let rho = 10.0;
        let (_, grad) = tr.merit_with_grad(&z, &lambda, rho).unwrap();
        let h = 1e-6;
        for k in (0..z.len()).step_by(3) {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let fp = tr.merit_value(&zp, &lambda, rho).unwrap();
            let fm = tr.merit_value(&zm, &lambda, rho).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let tol = 1e-5 * grad[k].abs().max(1.0);
            assert!(
                (grad[k] - fd).abs() <= tol,
                "{} component {k}: {} vs fd {fd}",
                b.name(),
                grad[k]
            );
        }
    }
}

#[test]
fn baseline_solve_recovers_the_analytic_minimizer() {
    let p = Builtin::Baseline.problem();
    let tr = Transcription::new(&p, 50).unwrap();
    let opts = SolveOptions::default();
    let res = solve(&tr, None, &opts).unwrap();
    assert!(res.converged, "iterations {}", res.iterations);
    assert!((res.cost - 1.0).abs() <= 1e-4, "cost {}", res.cost);
    for row in res.pair.u.values() {
        assert!((row[0] - 1.0).abs() <= 1e-3, "u {}", row[0]);
    }
    // Converged solves pass the admissibility check at the solver tolerance.
    let rep = check_admissible(&p, &res.pair, opts.feas_tol).unwrap();
    assert!(rep.pass, "{}", rep.max_residual);
    assert_eq!(rep.boundary_error, 0.0);
    // The merit is non-increasing within every outer iteration.
    for (start, end) in &res.merit_history {
        assert!(end <= &(start + 1e-12), "{start} -> {end}");
    }
}

#[test]
fn baseline_solution_is_an_extremal_candidate() {
    let p = Builtin::Baseline.problem();
    let tr = Transcription::new(&p, 50).unwrap();
    let res = solve(&tr, None, &SolveOptions::default()).unwrap();
    let psi = crate::problem::GridFn::constant(res.pair.x.nodes().to_vec(), vec![2.0]).unwrap();
    let e = Extremal::new(&p, res.pair.clone(), -1.0, psi).unwrap();
    assert!(adjoint_residual_p(&p, &e).unwrap() <= 1e-3);
    let rep = maximality_check_p(&p, &e, &[(-4.0, 4.0)], 81).unwrap();
    assert!(rep.worst_gap <= 1e-2, "{}", rep.worst_gap);
    // Closing the loop: the lifted extremal sits on the zero level.
    let v = VProfile::identity(e.pair.x.nodes()).unwrap();
    let te = lift_extremal(&p, &e, &v).unwrap();
    assert!(zero_level_max(&p, &te).unwrap() <= 1e-8);
}

#[test]
fn lq_solve_matches_the_boundary_value_oracle() {
    // Closed-form optimum of min ∫ u² + x², x' = u, x(0)=0, x(1)=1:
    // x'' = x, x = sinh(t)/sinh(1), cost = x'(1)x(1) - x'(0)x(0) = coth(1).
    let p = Builtin::Lq.problem();
    let tr = Transcription::new(&p, 100).unwrap();
    let res = solve(&tr, None, &SolveOptions::default()).unwrap();
    assert!(res.converged);
    let oracle = 1.0 / 1.0_f64.tanh();
    assert!((res.cost - oracle).abs() <= 1e-3, "cost {} vs {oracle}", res.cost);
}

#[test]
fn torres_solve_converges_with_bounded_controls() {
    let p = Builtin::Torres.problem();
    let tr = Transcription::new(&p, 25).unwrap();
    let res = solve(&tr, None, &SolveOptions::default()).unwrap();
    assert!(res.converged, "residual {}", res.max_residual);
    assert!(res.control_sup_norm.is_finite());
    assert!(res.control_sup_norm > 0.0);
    let rep = check_admissible(&p, &res.pair, SolveOptions::default().feas_tol).unwrap();
    assert!(rep.pass, "{}", rep.max_residual);
}

#[test]
fn init_length_is_validated() {
    let p = Builtin::Baseline.problem();
    let tr = Transcription::new(&p, 10).unwrap();
    let err = solve(&tr, Some(&[0.0; 5]), &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::InitLength { expected: 19, got: 5 }));
}

#[test]
fn boundedness_diagnostic_on_baseline() {
    let p = Builtin::Baseline.problem();
    let (rep, _) =
        boundedness_diagnostic(&p, &[25, 50, 100], &SolveOptions::default()).unwrap();
    assert_eq!(rep.verdict, "bounded-stable");
    for e in &rep.entries {
        assert!((e.control_sup_norm - 1.0).abs() <= 0.05, "{}", e.control_sup_norm);
    }
    assert!(rep.rel_changes.iter().all(|&c| c <= BOUNDEDNESS_STABLE_TOL));
}

#[test]
fn boundedness_diagnostic_needs_two_increasing_grids() {
    let p = Builtin::Baseline.problem();
    assert!(matches!(
        boundedness_diagnostic(&p, &[50], &SolveOptions::default()),
        Err(SolverError::NeedTwoGrids)
    ));
    assert!(matches!(
        boundedness_diagnostic(&p, &[50, 25], &SolveOptions::default()),
        Err(SolverError::GridsNotIncreasing)
    ));
}
