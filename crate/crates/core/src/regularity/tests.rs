use super::*;
use crate::builtin::Builtin;
use crate::expr::parse;
use crate::problem::uniform_nodes;

fn torres_box(count: usize, seed: u64) -> SampleBox {
    SampleBox::new(
        (0.0, 1.0),
        vec![(-2.0, 2.0), (-2.0, 2.0)],
        vec![(-10.0, 10.0), (-10.0, 10.0)],
        count,
        seed,
    )
    .unwrap()
}

fn scalar_box(u: (f64, f64), count: usize, seed: u64) -> SampleBox {
    SampleBox::new((0.0, 1.0), vec![(-2.0, 2.0)], vec![u], count, seed).unwrap()
}

fn problem_from(l: &str, phis: &[&str], n: usize, r: usize) -> OCProblem {
    let lagrangian = parse(l, n, r).unwrap();
    let dynamics = phis.iter().map(|s| parse(s, n, r).unwrap()).collect();
    OCProblem::new(0.0, 1.0, vec![0.0; n], vec![0.0; n], lagrangian, dynamics).unwrap()
}

#[test]
fn torres_growth_certificates() {
    let p = Builtin::Torres.problem();
    let check = check_growth_theorem53(&p, &torres_box(4096, 1)).unwrap();
    assert_eq!(check.report().verdict, "satisfied-on-box");
    // dL/dx_j = 2 e^{2(x1+x2)} (u1^2+u2^2) <= 2 L: (c, k) = (2, 0) certifies.
    for name in ["dL_dx1", "dL_dx2"] {
        assert_eq!(check.certifies(name, 2.0, 0.0), Some(true), "{name}");
        let cond = check.condition(name).unwrap();
        assert!(cond.max_ratio <= 2.0, "{name}: {}", cond.max_ratio);
        assert!(cond.max_ratio > 1.5, "{name}: {}", cond.max_ratio);
    }
    // dphi2/dx_j = phi2 exactly: the k = 0 ratio is exactly 1.
    for name in ["dphi2_dx1", "dphi2_dx2"] {
        assert_eq!(check.certifies(name, 1.0, 0.0), Some(true), "{name}");
        let cond = check.condition(name).unwrap();
        assert_eq!(cond.max_ratio, 1.0, "{name}");
    }
    // The problem is autonomous: both time conditions are free.
    assert_eq!(check.certifies("dL_dt", 0.0, 0.0), Some(true));
    assert_eq!(check.certifies("dphi_dt", 0.0, 0.0), Some(true));
}

#[test]
fn pathological_growth_is_flagged_suspect() {
    // L = x1 u1^2, phi = u1: at x1 near 0, |dL/dx1| / |L| = 1/|x1| blows up,
    // and no finite k on the grid survives the control-box escalation.
    let p = problem_from("x1 * u1^2", &["u1"], 1, 1);
    let check = check_growth_theorem53(&p, &scalar_box((-10.0, 10.0), 4096, 2)).unwrap();
    assert_eq!(check.report().verdict, "suspect");
    let cond = check.condition("dL_dx1").unwrap();
    assert!(!cond.satisfied);
    assert!(cond.escalation_c[2] > SUSPECT_GROWTH_FACTOR * cond.escalation_c[0]);
}

#[test]
fn escalation_fits_are_monotone() {
    let p = Builtin::Torres.problem();
    let check = check_growth_theorem53(&p, &torres_box(2048, 3)).unwrap();
    for cond in &check.report().conditions {
        assert!(cond.escalation_c[0] <= cond.escalation_c[1] + 1e-15, "{}", cond.name);
        assert!(cond.escalation_c[1] <= cond.escalation_c[2] + 1e-15, "{}", cond.name);
    }
}

#[test]
fn certificates_survive_an_independent_seed() {
    let p = Builtin::Torres.problem();
    let fitted = check_growth_theorem53(&p, &torres_box(4096, 10)).unwrap();
    let recheck = check_growth_theorem53(&p, &torres_box(4096, 20)).unwrap();
    for cond in &fitted.report().conditions {
        assert_eq!(
            recheck.certifies(&cond.name, cond.c, cond.k),
            Some(true),
            "{} with (c, k) = ({}, {})",
            cond.name,
            cond.c,
            cond.k
        );
    }
}

#[test]
fn cov_growth_variant() {
    let p = Builtin::Baseline.problem();
    // 2|u| <= u^2 + 1 by AM-GM, so (1, 1) certifies everywhere.
    let check = check_growth_tonelli_morrey_cv(&p, &scalar_box((-10.0, 10.0), 2048, 4)).unwrap();
    assert_eq!(check.report().verdict, "satisfied-on-box");
    assert_eq!(check.certifies("tonelli_morrey_cv", 1.0, 1.0), Some(true));

    // On the box |u| <= 1 the max lhs is 2, so (0, 2) certifies on-box.
    let small = check_growth_tonelli_morrey_cv(&p, &scalar_box((-1.0, 1.0), 2048, 5)).unwrap();
    assert_eq!(small.certifies("tonelli_morrey_cv", 0.0, 2.0), Some(true));
    assert_eq!(small.certifies("tonelli_morrey_cv", 0.0, 1.5), Some(false));

    // Dynamics not of calculus-of-variations form.
    let torres = Builtin::Torres.problem();
    assert!(matches!(
        check_growth_tonelli_morrey_cv(&torres, &torres_box(128, 6)),
        Err(RegularityError::NotCalculusOfVariations)
    ));
}

#[test]
fn k_values_come_from_the_fixed_grid() {
    let p = Builtin::Torres.problem();
    let check = check_growth_theorem53(&p, &torres_box(1024, 7)).unwrap();
    for cond in &check.report().conditions {
        assert!(K_GRID.contains(&cond.k), "{}: k = {}", cond.name, cond.k);
    }
}

#[test]
fn coercivity_quadratic_envelope_on_lsq() {
    // L = ||phi||^2 exactly: theta_hat(r)/r^2 = 1 in every nonempty shell.
    let p = Builtin::Baseline.problem();
    let rep = check_coercivity(&p, &scalar_box((-10.0, 10.0), 4096, 8), 12).unwrap();
    assert!(rep.verdict);
    for shell in rep.shells.iter().filter(|s| s.count > 0) {
        let ratio = shell.ratio_quadratic.unwrap();
        assert!((ratio - 1.0).abs() <= 1e-6, "shell [{}, {}): {ratio}", shell.lo, shell.hi);
    }
}

#[test]
fn coercivity_quadratic_envelope_on_torres() {
    let p = Builtin::Torres.problem();
    let rep = check_coercivity(&p, &torres_box(16384, 9), 12).unwrap();
    assert!(rep.verdict);
    let top: Vec<&ShellStat> = rep.shells[6..].iter().filter(|s| s.count > 0).collect();
    assert!(!top.is_empty());
    for shell in top {
        let ratio = shell.ratio_quadratic.unwrap();
        assert!(
            (0.5..=1.5).contains(&ratio),
            "shell [{}, {}): ratio {ratio}",
            shell.lo,
            shell.hi
        );
    }
}

#[test]
fn linear_growth_fails_coercivity() {
    // L = |u| (written as sqrt(u^2)): theta_hat(r)/r stays near 1 under
    // escalation instead of growing.
    let p = problem_from("sqrt(u1^2)", &["u1"], 1, 1);
    let rep = check_coercivity(&p, &scalar_box((-10.0, 10.0), 4096, 11), 12).unwrap();
    assert!(!rep.envelope_superlinear);
    assert!(!rep.verdict);
    for q in rep.superlinear_trend {
        assert!((q - 1.0).abs() < 0.2, "{q}");
    }
}

#[test]
fn affinity_verdicts() {
    let base = Builtin::Baseline.problem();
    let rep = check_affine(&base, &scalar_box((-10.0, 10.0), 1024, 12)).unwrap();
    assert!(rep.affine);
    assert!(rep.rank_ok.unwrap());
    assert!((rep.min_singular_value.unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(rep.verdict, "applicable");
    assert!(rep.gamma.is_some() && rep.beta.is_some());

    let torres = Builtin::Torres.problem();
    let rep = check_affine(&torres, &torres_box(1024, 13)).unwrap();
    assert!(!rep.affine);
    let w = rep.witness.unwrap();
    assert_eq!(w.component, 1); // phi1 = sqrt(u1^2 + u2^2) is the culprit
    assert!(w.second_derivative.abs() > AFFINE_TOL);
    assert!(rep.verdict.contains("not control-affine"));

    // State-dependent control matrix g = x1: affine, but the rank proxy
    // dips with |x1| and the witness sits at the smallest sampled |x1|.
    let fading = problem_from("u1^2", &["x1 * u1"], 1, 1);
    let rep = check_affine(&fading, &scalar_box((-10.0, 10.0), 1024, 14)).unwrap();
    assert!(rep.affine);
    let sigma = rep.min_singular_value.unwrap();
    assert!(sigma < 0.5, "{sigma}");
    let wx = rep.sigma_witness.unwrap().x[0];
    assert!((sigma - wx.abs()).abs() < 1e-6, "sigma {sigma} vs |x1| {}", wx.abs());
}

#[test]
fn syntactically_affine_dynamics_are_detected_affine() {
    // phi = f(t, x) + g(t, x) u built syntactically.
    let p = problem_from(
        "u1^2 + u2^2",
        &["sin(t) + x1 * u1 + exp(x1) * u2"],
        1,
        2,
    );
    let sb = SampleBox::new(
        (0.0, 1.0),
        vec![(-1.0, 1.0)],
        vec![(-5.0, 5.0), (-5.0, 5.0)],
        512,
        15,
    )
    .unwrap();
    let rep = check_affine(&p, &sb).unwrap();
    assert!(rep.affine);
}

#[test]
fn alpha_bound_examples() {
    // Baseline has no state dependence at all: alpha vanishes identically.
    let p = Builtin::Baseline.problem();
    let nodes = uniform_nodes(0.0, 1.0, 51);
    let w = GridFn::constant(nodes.clone(), vec![1.0]).unwrap();
    let rep = check_alpha_bound(&p, &w, &[(-1.0, 1.0)], 64, 16).unwrap();
    assert!(rep.alpha.iter().all(|&a| a == 0.0));
    assert_eq!(rep.integral, 0.0);
    assert!(rep.finite);

    // The nonlinear example with w = (1, 0): alpha is constant in tau
    // (the integrand has no explicit time dependence) and bounded by the
    // closed-form sup of 2 e^{2(x1+x2)} over the state box.
    let torres = Builtin::Torres.problem();
    let w = GridFn::constant(nodes.clone(), vec![1.0, 0.0]).unwrap();
    let rep = check_alpha_bound(&torres, &w, &[(-1.0, 2.0), (-1.0, 2.0)], 128, 17).unwrap();
    assert!(rep.finite);
    let sup = 2.0 * (2.0_f64 * 4.0).exp(); // 2 e^8 at the corner x = (2, 2)
    assert!(rep.alpha[0] <= sup + 1e-9);
    assert!(rep.alpha[0] >= 2.0 * (2.0_f64 * 2.0).exp());
    for &a in &rep.alpha {
        assert_eq!(a, rep.alpha[0]);
    }
    assert!((rep.integral - rep.alpha[0]).abs() <= 1e-9);
    assert!(rep.lipschitz_quotient_l > 0.0);

    // Non-finite fixed control is rejected.
    let mut bad_values = vec![vec![1.0, 0.0]; nodes.len()];
    bad_values[3][0] = f64::INFINITY;
    let bad = GridFn::new(nodes, bad_values).unwrap();
    assert!(matches!(
        check_alpha_bound(&torres, &bad, &[(-1.0, 1.0), (-1.0, 1.0)], 16, 18),
        Err(RegularityError::NonFiniteControl)
    ));
}

#[test]
fn affine_certificate_survives_an_independent_seed() {
    let p = problem_from("u1^2 + x1^2", &["u1"], 1, 1);
    let fitted = check_affine(&p, &scalar_box((-10.0, 10.0), 2048, 19)).unwrap();
    let (gamma, beta, eta, mu) = (
        fitted.gamma.unwrap(),
        fitted.beta.unwrap(),
        fitted.eta.unwrap(),
        fitted.mu.unwrap(),
    );
    // Re-check the reported certificate on fresh samples.
    let sb = scalar_box((-10.0, 10.0), 2048, 23);
    for pt in sb.iter() {
        let gl = p.lagrangian.grad(&pt).unwrap();
        let gphi = p.dynamics[0].grad(&pt).unwrap();
        let l = gl.value;
        let cross_t = (l * gphi.d_dt - gl.d_dt * gphi.value).abs();
        let cross_x = (l * gphi.d_dx[0] - gl.d_dx[0] * gphi.value).abs();
        let lhs = gl.d_dt.abs() + gl.d_dx[0].abs() + cross_t + cross_x;
        let u_norm = pt.u[0].abs().max(RHS_FLOOR);
        let weighted = lhs * u_norm.powf(mu);
        let rhs = if l > 0.0 { l.powf(beta) } else { 0.0 };
        assert!(
            weighted <= gamma * rhs + eta + CERT_EQUALITY_TOL,
            "{weighted} vs {gamma}*{rhs}+{eta}"
        );
    }
}
