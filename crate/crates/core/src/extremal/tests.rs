use super::*;
use crate::builtin::Builtin;
use crate::problem::uniform_nodes;
use crate::sampling::unit_f64;

fn baseline_extremal(node_count: usize) -> (OCProblem, Extremal) {
    // H = -u² + ψu with ψ ≡ 2 is maximized at u = 1, and ∂H/∂x = 0 so the
    // constant adjoint solves the adjoint system.
    let b = Builtin::Baseline;
    let p = b.problem();
    let pair = b.reference_pair(node_count);
    let psi = GridFn::constant(pair.x.nodes().to_vec(), vec![2.0]).unwrap();
    let e = Extremal::new(&p, pair, -1.0, psi).unwrap();
    (p, e)
}

fn lq_extremal(node_count: usize) -> (OCProblem, Extremal) {
    // Along x = sinh(t)/sinh(1): u* = ψ/2 with ψ = 2 cosh(t)/sinh(1).
    let b = Builtin::Lq;
    let p = b.problem();
    let pair = b.reference_pair(node_count);
    let s1 = 1.0_f64.sinh();
    let psi = GridFn::sampled(p.a, p.b, node_count, |t| vec![2.0 * t.cosh() / s1]).unwrap();
    let e = Extremal::new(&p, pair, -1.0, psi).unwrap();
    (p, e)
}

#[test]
fn hamiltonian_values() {
    let p = Builtin::Baseline.problem();
    // ψ0·L + ψ·φ = -1 + 2 = 1 at u = 1.
    let h = hamiltonian_p(&p, 0.0, &[0.0], &[1.0], -1.0, &[2.0]).unwrap();
    assert_eq!(h, 1.0);

    let torres = Builtin::Torres.problem();
    let h = hamiltonian_p(&torres, 0.0, &[0.0, 1.0], &[1.0, 0.0], -1.0, &[1.0, 0.0]).unwrap();
    let e2 = 2.0_f64.exp();
    assert!((h + e2).abs() < 1e-12, "{h}");
}

#[test]
fn hamiltonian_tau_zero_level_is_speed_independent() {
    let p = Builtin::Baseline.problem();
    // (H + p_t)·v with H = 1, p_t = -1 vanishes for any v in the box.
    for v in [1.0, 1.5, 0.5] {
        let h = hamiltonian_tau(&p, 0.0, &[0.0], v, &[1.0], -1.0, -1.0, &[2.0]).unwrap();
        assert_eq!(h, 0.0);
    }
    let h = hamiltonian_tau(&p, 0.0, &[0.0], 1.0, &[1.0], -1.0, 0.0, &[2.0]).unwrap();
    assert_eq!(h, 1.0);
    assert!(matches!(
        hamiltonian_tau(&p, 0.0, &[0.0], 1.6, &[1.0], -1.0, 0.0, &[2.0]),
        Err(ExtremalError::SpeedOutOfBox(_))
    ));
}

#[test]
fn positive_cost_multiplier_is_rejected_when_stored() {
    let b = Builtin::Baseline;
    let p = b.problem();
    let pair = b.reference_pair(11);
    let psi = GridFn::constant(pair.x.nodes().to_vec(), vec![2.0]).unwrap();
    // The Hamiltonian itself accepts any scalar...
    assert!(hamiltonian_p(&p, 0.0, &[0.0], &[1.0], 1.0, &[2.0]).is_ok());
    // ...but the stored extremal does not.
    assert!(matches!(
        Extremal::new(&p, pair, 1.0, psi).unwrap_err(),
        ExtremalError::PositiveCostMultiplier(_)
    ));
}

#[test]
fn all_zero_multipliers_are_rejected() {
    let b = Builtin::Baseline;
    let p = b.problem();
    let pair = b.reference_pair(11);
    let psi = GridFn::constant(pair.x.nodes().to_vec(), vec![0.0]).unwrap();
    assert!(matches!(
        Extremal::new(&p, pair, 0.0, psi).unwrap_err(),
        ExtremalError::AllZeroMultipliers
    ));
}

#[test]
fn adjoint_residual_examples() {
    let (p, e) = baseline_extremal(101);
    assert_eq!(adjoint_residual_p(&p, &e).unwrap(), 0.0);

    // ψ(t) = 2 + t: ψ' = 1 against -∂H/∂x = 0, so the residual is 1.
    let b = Builtin::Baseline;
    let pair = b.reference_pair(101);
    let psi = GridFn::sampled(p.a, p.b, 101, |t| vec![2.0 + t]).unwrap();
    let e = Extremal::new(&p, pair, -1.0, psi).unwrap();
    let res = adjoint_residual_p(&p, &e).unwrap();
    assert!((res - 1.0).abs() < 1e-9, "{res}");

    // A candidate on the nonlinear example: finite residual, self-reported.
    let torres = Builtin::Torres.problem();
    let tp = Builtin::Torres.reference_pair(101);
    let psi = GridFn::constant(tp.x.nodes().to_vec(), vec![1.0, 0.5]).unwrap();
    let e = Extremal::new(&torres, tp, -1.0, psi).unwrap();
    let res = adjoint_residual_p(&torres, &e).unwrap();
    assert!(res.is_finite());
}

#[test]
fn maximality_check_finds_the_analytic_argmax() {
    let (p, e) = baseline_extremal(51);
    let rep = maximality_check_p(&p, &e, &[(-4.0, 4.0)], 81).unwrap();
    assert!(rep.worst_gap <= 1e-3, "{}", rep.worst_gap);
    assert!((rep.argmax_found[0] - 1.0).abs() <= 0.1, "{:?}", rep.argmax_found);

    // A non-maximizing candidate u ≡ 0: sup H = 1 but H(0) = 0.
    let b = Builtin::Baseline;
    let nodes = uniform_nodes(0.0, 1.0, 51);
    let xv: Vec<Vec<f64>> = nodes.iter().map(|&t| vec![t]).collect();
    let mut xv = xv;
    xv[0] = vec![0.0];
    xv[50] = vec![1.0];
    let x = GridFn::new(nodes.clone(), xv).unwrap();
    let u = GridFn::constant(nodes.clone(), vec![0.0]).unwrap();
    let pair = crate::problem::AdmissiblePair::new(&b.problem(), x, u).unwrap();
    let psi = GridFn::constant(nodes, vec![2.0]).unwrap();
    let e0 = Extremal::new(&p, pair, -1.0, psi).unwrap();
    let rep = maximality_check_p(&p, &e0, &[(-4.0, 4.0)], 81).unwrap();
    assert!((rep.worst_gap - 1.0).abs() <= 1e-3, "{}", rep.worst_gap);

    // Candidate outside the box is a precondition error.
    assert!(matches!(
        maximality_check_p(&p, &e, &[(2.0, 4.0)], 81),
        Err(ExtremalError::CandidateOutsideBox { .. })
    ));
}

#[test]
fn lift_extremal_lands_on_the_zero_level() {
    let (p, e) = baseline_extremal(101);
    let v = crate::transform::VProfile::identity(e.pair.x.nodes()).unwrap();
    let te = lift_extremal(&p, &e, &v).unwrap();
    for i in 0..te.quad.node_count() {
        assert_eq!(te.p_t().value(i)[0], -1.0);
        assert_eq!(te.p_z().value(i)[0], 2.0);
    }
    assert_eq!(zero_level_max(&p, &te).unwrap(), 0.0);
    // The companion adjoint system holds exactly for the constant extremal.
    assert_eq!(adjoint_residual_tau(&p, &te).unwrap(), 0.0);

    // The zero level is preserved under any admissible speed profile.
    let v2 = crate::transform::VProfile::two_step(e.pair.x.nodes(), 0.5, 1.5).unwrap();
    let te2 = lift_extremal(&p, &e, &v2).unwrap();
    assert_eq!(zero_level_max(&p, &te2).unwrap(), 0.0);
}

#[test]
fn abnormal_flag_survives_lift_and_projection() {
    let b = Builtin::Baseline;
    let p = b.problem();
    let pair = b.reference_pair(51);
    let psi = GridFn::constant(pair.x.nodes().to_vec(), vec![3.0]).unwrap();
    let e = Extremal::new(&p, pair, 0.0, psi).unwrap();
    assert!(e.is_abnormal());
    // The abnormal convention stores ‖ψ‖_∞ = 1.
    assert_eq!(e.psi().value(0)[0], 1.0);

    let v = crate::transform::VProfile::identity(e.pair.x.nodes()).unwrap();
    let te = lift_extremal(&p, &e, &v).unwrap();
    assert_eq!(te.p0(), 0.0);
    assert!(te.is_abnormal());
    let back = project_extremal(&p, &te).unwrap();
    assert!(back.is_abnormal());

    let (p, e) = baseline_extremal(51);
    assert!(!e.is_abnormal());
    let v = crate::transform::VProfile::identity(e.pair.x.nodes()).unwrap();
    assert!(!lift_extremal(&p, &e, &v).unwrap().is_abnormal());
}

#[test]
fn projection_inverts_the_identity_lift_exactly() {
    let (p, e) = baseline_extremal(101);
    let v = crate::transform::VProfile::identity(e.pair.x.nodes()).unwrap();
    let te = lift_extremal(&p, &e, &v).unwrap();
    let back = project_extremal(&p, &te).unwrap();
    assert_eq!(back.psi0(), e.psi0());
    assert_eq!(back.psi().values(), e.psi().values());
    assert_eq!(back.pair.x.values(), e.pair.x.values());
    assert_eq!(back.pair.u.values(), e.pair.u.values());
}

#[test]
fn roundtrip_preserves_residual_and_gap_within_tolerance() {
    let (p, e) = lq_extremal(201);
    let res0 = adjoint_residual_p(&p, &e).unwrap();
    let gap0 = maximality_check_p(&p, &e, &[(-4.0, 4.0)], 41)
        .unwrap()
        .worst_gap;
    let v = crate::transform::VProfile::two_step(e.pair.x.nodes(), 0.7, 1.3).unwrap();
    let te = lift_extremal(&p, &e, &v).unwrap();
    let back = project_extremal(&p, &te).unwrap();
    let h = 1.0 / 200.0;
    let mut psi_sup: f64 = 0.0;
    for i in 0..back.psi().node_count() {
        psi_sup = psi_sup.max((back.psi().value(i)[0] - e.psi().value(i)[0]).abs());
    }
    assert!(psi_sup <= 2.0 * h * 2.0, "{psi_sup}");
    let res1 = adjoint_residual_p(&p, &back).unwrap();
    let gap1 = maximality_check_p(&p, &back, &[(-4.0, 4.0)], 41)
        .unwrap()
        .worst_gap;
    assert!((res1 - res0).abs() <= 0.1 * (1.0 + res0), "{res0} vs {res1}");
    assert!((gap1 - gap0).abs() <= 1e-2 + 0.1 * gap0.abs(), "{gap0} vs {gap1}");

    // Positive cost multiplier rejected on the companion side too.
    let err = TauExtremal::new(
        &p,
        te.quad.clone(),
        0.5,
        te.p_t().clone(),
        te.p_z().clone(),
    )
    .unwrap_err();
    assert!(matches!(err, ExtremalError::PositiveCostMultiplier(_)));
}

/// The relation 𝓗 = (H + p_t)·v holds bitwise (single code path), and the
/// derivative identities ∂𝓗/∂t = v·∂H/∂t, ∂𝓗/∂z = v·∂H/∂x hold to
/// rounding across seeded points on every bundled problem.
#[test]
fn hamiltonian_relation_and_derivative_identities() {
    let mut state = 0xAB1E;
    for b in Builtin::ALL {
        let p = b.problem();
        let mut accepted = 0;
        while accepted < 100 {
            let t = unit_f64(&mut state);
            let x: Vec<f64> = (0..p.n).map(|_| 2.0 * unit_f64(&mut state) - 1.0).collect();
            let u: Vec<f64> = (0..p.r).map(|_| 2.0 * unit_f64(&mut state) - 1.0).collect();
            if u.iter().map(|v| v * v).sum::<f64>() < 1e-2 {
                continue; // keep clear of the sqrt kink guard band
            }
            let v = 0.5 + unit_f64(&mut state);
            let p0 = -1.0;
            let p_t = 2.0 * unit_f64(&mut state) - 1.0;
            let p_z: Vec<f64> = (0..p.n).map(|_| 2.0 * unit_f64(&mut state) - 1.0).collect();
            accepted += 1;

            let lhs = hamiltonian_tau(&p, t, &x, v, &u, p0, p_t, &p_z).unwrap();
            let rhs = (hamiltonian_p(&p, t, &x, &u, p0, &p_z).unwrap() + p_t) * v;
            assert_eq!(lhs.to_bits(), rhs.to_bits());

            let (ht, hz) = hamiltonian_tau_partials(&p, t, &x, v, &u, p0, &p_z).unwrap();
            let (gt, gx) = hamiltonian_p_partials(&p, t, &x, &u, p0, &p_z).unwrap();
            assert!((ht - v * gt).abs() <= 1e-10, "{} {ht} vs {}", b.name(), v * gt);
            for j in 0..p.n {
                assert!((hz[j] - v * gx[j]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn lifted_extremals_zero_level_scales_with_hamiltonian() {
    let (p, e) = lq_extremal(145);
    let v = crate::transform::VProfile::two_step(e.pair.x.nodes(), 0.6, 1.4).unwrap();
    let te = lift_extremal(&p, &e, &v).unwrap();
    let mut max_h: f64 = 0.0;
    for i in 0..te.quad.node_count() {
        max_h = max_h.max(te.p_t().value(i)[0].abs());
    }
    let zl = zero_level_max(&p, &te).unwrap();
    assert!(zl <= 1e-10 * (1.0 + max_h), "{zl}");
}
