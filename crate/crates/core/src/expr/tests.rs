use proptest::prelude::*;

use super::*;
use crate::sampling::unit_f64;

fn torres_lagrangian() -> Expr {
    parse("(u1^2 + u2^2) * (exp(2*(x1 + x2)) + 1)", 2, 2).unwrap()
}

#[test]
fn parse_builds_expected_tree() {
    let e = parse("u1^2 + u2^2", 2, 2).unwrap();
    let expected = Node::Bin(
        BinOp::Add,
        Box::new(Node::Bin(
            BinOp::Pow,
            Box::new(Node::Control(0)),
            Box::new(Node::Num(2.0)),
        )),
        Box::new(Node::Bin(
            BinOp::Pow,
            Box::new(Node::Control(1)),
            Box::new(Node::Num(2.0)),
        )),
    );
    assert_eq!(e.node(), &expected);

    let e = parse("u2 * exp(x1 + x2)", 2, 2).unwrap();
    let expected = Node::Bin(
        BinOp::Mul,
        Box::new(Node::Control(1)),
        Box::new(Node::Call(
            Func::Exp,
            Box::new(Node::Bin(
                BinOp::Add,
                Box::new(Node::State(0)),
                Box::new(Node::State(1)),
            )),
        )),
    );
    assert_eq!(e.node(), &expected);
}

#[test]
fn out_of_range_index_is_rejected() {
    let err = parse("x3", 2, 2).unwrap_err();
    assert!(matches!(err, ExprError::IndexOutOfRange { n: 2, r: 2, .. }));
    let err = parse("u0", 1, 1).unwrap_err();
    assert!(matches!(err, ExprError::IndexOutOfRange { .. }));
}

#[test]
fn unknown_identifier_and_syntax_offsets() {
    let err = parse("foo + 1", 1, 1).unwrap_err();
    assert!(matches!(err, ExprError::UnknownIdentifier { offset: 0, .. }));
    let err = parse("1 + ", 1, 1).unwrap_err();
    assert!(matches!(err, ExprError::Syntax { offset: 4, .. }));
    let err = parse("2 * (x1", 1, 1).unwrap_err();
    assert!(matches!(err, ExprError::Syntax { offset: 7, .. }));
    let err = parse("", 1, 1).unwrap_err();
    assert!(matches!(err, ExprError::Syntax { offset: 0, .. }));
}

#[test]
fn precedence_and_associativity() {
    // ^ right-associative: 2^3^2 = 2^9 = 512.
    let e = parse("2^3^2", 0, 0).unwrap();
    assert_eq!(e.eval(&Point::new(0.0, vec![], vec![])).unwrap(), 512.0);
    // ^ binds tighter than unary minus: -2^2 = -(2^2) = -4.
    let e = parse("-2^2", 0, 0).unwrap();
    assert_eq!(e.eval(&Point::new(0.0, vec![], vec![])).unwrap(), -4.0);
    // * over +: 1 + 2*3 = 7.
    let e = parse("1 + 2*3", 0, 0).unwrap();
    assert_eq!(e.eval(&Point::new(0.0, vec![], vec![])).unwrap(), 7.0);
    // whitespace-insensitive
    let a = parse("1+2 * x1", 1, 0).unwrap();
    let b = parse("  1 + 2*x1 ", 1, 0).unwrap();
    assert_eq!(a.node(), b.node());
}

#[test]
fn eval_examples() {
    let l = torres_lagrangian();
    let p = Point::new(0.0, vec![0.0, 0.0], vec![1.0, 0.0]);
    assert_eq!(l.eval(&p).unwrap(), 2.0);

    let e = parse("u1^2", 0, 1).unwrap();
    assert_eq!(e.eval(&Point::new(0.0, vec![], vec![3.0])).unwrap(), 9.0);

    let e = parse("sqrt(u1)", 0, 1).unwrap();
    let err = e.eval(&Point::new(0.0, vec![], vec![-1.0])).unwrap_err();
    assert!(matches!(err, ExprError::Domain { .. }));

    let e = parse("1 / x1", 1, 0).unwrap();
    let err = e.eval(&Point::new(0.0, vec![0.0], vec![])).unwrap_err();
    assert!(matches!(err, ExprError::Domain { .. }));

    let e = parse("log(x1)", 1, 0).unwrap();
    assert!(e.eval(&Point::new(0.0, vec![-1.0], vec![])).is_err());
}

#[test]
fn eval_dimension_mismatch() {
    let e = parse("x1 + u1", 1, 1).unwrap();
    let err = e.eval(&Point::new(0.0, vec![1.0, 2.0], vec![0.5])).unwrap_err();
    assert!(matches!(err, ExprError::DimensionMismatch { .. }));
}

#[test]
fn grad_examples() {
    // dL/dx1 of the nonlinear example Lagrangian at (t=0, x=(0,0), u=(1,0)):
    // 2 e^{2(x1+x2)} (u1^2+u2^2) = 2. Cross-checked against central FD below.
    let l = torres_lagrangian();
    let p = Point::new(0.0, vec![0.0, 0.0], vec![1.0, 0.0]);
    let g = l.grad(&p).unwrap();
    let fd = central_fd(&l, &p);
    assert!((g.d_dx[0] - 2.0).abs() < 1e-12);
    assert!((g.d_dx[0] - fd.d_dx[0]).abs() < 1e-6);

    let e = parse("u1^2 + u2^2", 0, 2).unwrap();
    let g = e.grad(&Point::new(0.0, vec![], vec![1.0, 0.0])).unwrap();
    assert_eq!(g.d_du, vec![2.0, 0.0]);

    let e = parse("sqrt(u1^2 + u2^2)", 0, 2).unwrap();
    let err = e.grad(&Point::new(0.0, vec![], vec![0.0, 0.0])).unwrap_err();
    assert!(matches!(err, ExprError::NonDifferentiable { .. }));
}

#[test]
fn eval_is_pure_bitwise() {
    let l = torres_lagrangian();
    let p = Point::new(0.3, vec![0.7, -0.2], vec![1.1, 0.4]);
    let a = l.eval(&p).unwrap();
    let b = l.eval(&p).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

/// Central finite-difference oracle with h = 1e-6, independent of the dual
/// sweep implementation.
fn central_fd(e: &Expr, p: &Point) -> Gradient {
    let h = 1e-6;
    let value = e.eval(p).unwrap();
    let dt = {
        let a = e.eval_at(p.t + h, &p.x, &p.u).unwrap();
        let b = e.eval_at(p.t - h, &p.x, &p.u).unwrap();
        (a - b) / (2.0 * h)
    };
    let mut d_dx = Vec::new();
    for j in 0..p.x.len() {
        let mut xp = p.x.clone();
        let mut xm = p.x.clone();
        xp[j] += h;
        xm[j] -= h;
        let a = e.eval_at(p.t, &xp, &p.u).unwrap();
        let b = e.eval_at(p.t, &xm, &p.u).unwrap();
        d_dx.push((a - b) / (2.0 * h));
    }
    let mut d_du = Vec::new();
    for j in 0..p.u.len() {
        let mut up = p.u.clone();
        let mut um = p.u.clone();
        up[j] += h;
        um[j] -= h;
        let a = e.eval_at(p.t, &p.x, &up).unwrap();
        let b = e.eval_at(p.t, &p.x, &um).unwrap();
        d_du.push((a - b) / (2.0 * h));
    }
    Gradient {
        value,
        d_dt: dt,
        d_dx,
        d_du,
    }
}

fn assert_close_to_fd(exact: f64, fd: f64) {
    if exact.abs() < 1.0 {
        assert!(
            (exact - fd).abs() <= 1e-8 + 1e-5 * exact.abs(),
            "grad {exact} vs fd {fd}"
        );
    } else {
        assert!(
            ((exact - fd) / exact).abs() <= 1e-5,
            "grad {exact} vs fd {fd}"
        );
    }
}

#[test]
fn grad_matches_central_differences_at_seeded_points() {
    let exprs = [
        torres_lagrangian(),
        parse("sqrt(u1^2 + u2^2)", 2, 2).unwrap(),
        parse("u2 * exp(x1 + x2)", 2, 2).unwrap(),
        parse("sin(t) * cos(x1) + log(2 + u1) / (1 + x2^2)", 2, 2).unwrap(),
    ];
    let mut state = 0x5EED;
    let mut accepted = 0;
    while accepted < 100 {
        let t = unit_f64(&mut state) * 2.0 - 1.0;
        let x = vec![
            unit_f64(&mut state) * 2.0 - 1.0,
            unit_f64(&mut state) * 2.0 - 1.0,
        ];
        let u = vec![
            unit_f64(&mut state) * 4.0 - 2.0,
            unit_f64(&mut state) * 4.0 - 2.0,
        ];
        // Guard band: keep the sqrt argument away from its kink so the FD
        // stencil stays in the differentiable region.
        if u[0] * u[0] + u[1] * u[1] < 1e-2 {
            continue;
        }
        let p = Point::new(t, x, u);
        accepted += 1;
        for e in &exprs {
            let g = e.grad(&p).unwrap();
            let fd = central_fd(e, &p);
            assert_close_to_fd(g.d_dt, fd.d_dt);
            for j in 0..2 {
                assert_close_to_fd(g.d_dx[j], fd.d_dx[j]);
                assert_close_to_fd(g.d_du[j], fd.d_du[j]);
            }
        }
    }
}

fn arb_node(depth: u32) -> BoxedStrategy<Node> {
    let leaf = prop_oneof![
        (0.0f64..10.0).prop_map(Node::Num),
        Just(Node::Time),
        (0usize..2).prop_map(Node::State),
        (0usize..2).prop_map(Node::Control),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = arb_node(depth - 1);
    prop_oneof![
        leaf,
        inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Bin(
            BinOp::Add,
            Box::new(a),
            Box::new(b)
        )),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Bin(
            BinOp::Mul,
            Box::new(a),
            Box::new(b)
        )),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Bin(
            BinOp::Div,
            Box::new(a),
            Box::new(b)
        )),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Bin(
            BinOp::Pow,
            Box::new(a),
            Box::new(b)
        )),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Bin(
            BinOp::Sub,
            Box::new(a),
            Box::new(b)
        )),
        inner
            .clone()
            .prop_map(|a| Node::Call(Func::Sqrt, Box::new(a))),
        inner.prop_map(|a| Node::Call(Func::Sin, Box::new(a))),
    ]
    .boxed()
}

proptest! {
    /// Serializing a parsed tree and re-parsing yields the identical tree.
    #[test]
    fn serialize_roundtrip(node in arb_node(4)) {
        let e = Expr::from_node(node, 2, 2);
        let text = e.to_string();
        let reparsed = parse(&text, 2, 2).unwrap();
        prop_assert_eq!(e.node(), reparsed.node());
    }
}
