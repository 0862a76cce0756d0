//! Scalar expressions over `(t, x1..xn, u1..ur)`: parsing, evaluation, and
//! forward-mode differentiation with dual numbers.
//!
//! An [`Expr`] is parsed against declared state/control dimensions `(n, r)`
//! and can be evaluated at a [`Point`] or differentiated with [`Expr::grad`],
//! which runs one dual-number sweep per input variable (exact chain rule, no
//! finite differencing).
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = factor { ("*" | "/") factor } ;
//! factor   = "-" factor | power ;
//! power    = atom [ "^" factor ] ;          right-associative, binds tighter
//!                                           than unary minus
//! atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
//! variable = "t" | "x" digits | "u" digits ;   1-based indices
//! function = "exp" | "log" | "sqrt" | "cos" | "sin" | "abs" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `sqrt` and `abs` have derivative kinks; a sweep that walks through one of
//! them with argument magnitude below [`KINK_GUARD`] reports a
//! non-differentiable-point error instead of propagating NaN or infinity.

mod parse;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use parse::parse;

/// Guard band for the `sqrt`/`abs` derivative kinks. A derivative sweep that
/// needs `sqrt'(s)` or `abs'(s)` with `|s| < KINK_GUARD` fails rather than
/// producing a huge or undefined value.
pub const KINK_GUARD: f64 = 1e-12;

/// Built-in scalar functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Abstract syntax tree node. Variable indices are 0-based internally; the
/// surface syntax is 1-based (`x1`, `u2`, ...).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Time,
    State(usize),
    Control(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(c) => write!(f, "{c}"),
            Node::Time => write!(f, "t"),
            Node::State(i) => write!(f, "x{}", i + 1),
            Node::Control(i) => write!(f, "u{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed scalar expression together with the dimensions it was declared
/// against. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    node: Node,
    n: usize,
    r: usize,
}

/// Argument bundle for evaluating an [`Expr`]: time, state vector, control
/// vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl Point {
    pub fn new(t: f64, x: Vec<f64>, u: Vec<f64>) -> Self {
        Point { t, x, u }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={}, x={:?}, u={:?})", self.t, self.x, self.u)
    }
}

/// Value and first derivatives of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub d_dt: f64,
    pub d_dx: Vec<f64>,
    pub d_du: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` at byte {offset} out of range for n={n}, r={r}")]
    IndexOutOfRange {
        name: String,
        offset: usize,
        n: usize,
        r: usize,
    },
    #[error("domain error evaluating `{subexpr}` at {point}: {reason}")]
    Domain {
        subexpr: String,
        point: String,
        reason: String,
    },
    #[error("non-differentiable point: `{subexpr}` at {point} has kink argument within {KINK_GUARD:e}")]
    NonDifferentiable { subexpr: String, point: String },
    #[error("dimension mismatch: expression declared (n={expected_n}, r={expected_r}), point has (n={got_n}, r={got_r})")]
    DimensionMismatch {
        expected_n: usize,
        expected_r: usize,
        got_n: usize,
        got_r: usize,
    },
}

/// Derivative channel seeded during a dual sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    None,
    Time,
    State(usize),
    Control(usize),
}

impl Expr {
    pub(crate) fn from_node(node: Node, n: usize, r: usize) -> Self {
        Expr { node, n, r }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    fn check_dims(&self, x: &[f64], u: &[f64]) -> Result<(), ExprError> {
        if x.len() != self.n || u.len() != self.r {
            return Err(ExprError::DimensionMismatch {
                expected_n: self.n,
                expected_r: self.r,
                got_n: x.len(),
                got_r: u.len(),
            });
        }
        Ok(())
    }

    /// IEEE double evaluation. `log`/`sqrt` of out-of-domain arguments and
    /// division by zero yield a domain error instead of NaN propagation.
    pub fn eval(&self, p: &Point) -> Result<f64, ExprError> {
        self.eval_at(p.t, &p.x, &p.u)
    }

    /// Like [`Expr::eval`] with unbundled arguments (avoids building a
    /// `Point` in hot loops).
    pub fn eval_at(&self, t: f64, x: &[f64], u: &[f64]) -> Result<f64, ExprError> {
        self.check_dims(x, u)?;
        let (v, _) = eval_dual(&self.node, t, x, u, Channel::None, false)?;
        Ok(v)
    }

    /// Value plus all first derivatives, one dual sweep per input variable.
    pub fn grad(&self, p: &Point) -> Result<Gradient, ExprError> {
        self.grad_at(p.t, &p.x, &p.u)
    }

    pub fn grad_at(&self, t: f64, x: &[f64], u: &[f64]) -> Result<Gradient, ExprError> {
        self.check_dims(x, u)?;
        let channels = 1 + self.n + self.r;
        if channels <= MAX_DUAL_CHANNELS {
            // Single AST walk carrying all tangents at once.
            let md = eval_multi(&self.node, t, x, u, channels)?;
            return Ok(Gradient {
                value: md.v,
                d_dt: md.d[0],
                d_dx: md.d[1..1 + self.n].to_vec(),
                d_du: md.d[1 + self.n..channels].to_vec(),
            });
        }
        let (value, d_dt) = eval_dual(&self.node, t, x, u, Channel::Time, true)?;
        let mut d_dx = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let (_, d) = eval_dual(&self.node, t, x, u, Channel::State(j), true)?;
            d_dx.push(d);
        }
        let mut d_du = Vec::with_capacity(self.r);
        for j in 0..self.r {
            let (_, d) = eval_dual(&self.node, t, x, u, Channel::Control(j), true)?;
            d_du.push(d);
        }
        Ok(Gradient {
            value,
            d_dt,
            d_dx,
            d_du,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node)
    }
}

fn domain_err(node: &Node, t: f64, x: &[f64], u: &[f64], reason: &str) -> ExprError {
    ExprError::Domain {
        subexpr: node.to_string(),
        point: Point::new(t, x.to_vec(), u.to_vec()).to_string(),
        reason: reason.to_string(),
    }
}

fn kink_err(node: &Node, t: f64, x: &[f64], u: &[f64]) -> ExprError {
    ExprError::NonDifferentiable {
        subexpr: node.to_string(),
        point: Point::new(t, x.to_vec(), u.to_vec()).to_string(),
    }
}

/// Max tangent channels carried in one multi-dual walk.
const MAX_DUAL_CHANNELS: usize = 12;

/// Value plus one tangent per input variable, propagated in a single walk.
#[derive(Clone, Copy)]
struct MultiDual {
    v: f64,
    d: [f64; MAX_DUAL_CHANNELS],
}

impl MultiDual {
    fn constant(v: f64) -> Self {
        MultiDual {
            v,
            d: [0.0; MAX_DUAL_CHANNELS],
        }
    }

    fn seeded(v: f64, channel: usize) -> Self {
        let mut d = [0.0; MAX_DUAL_CHANNELS];
        d[channel] = 1.0;
        MultiDual { v, d }
    }
}

/// Multi-channel dual pass: channel 0 is time, `1..=n` the states,
/// `n+1..n+1+r` the controls. Semantically identical to running
/// [`eval_dual`] once per channel with `differentiating = true`.
fn eval_multi(
    node: &Node,
    t: f64,
    x: &[f64],
    u: &[f64],
    channels: usize,
) -> Result<MultiDual, ExprError> {
    let n = x.len();
    match node {
        Node::Num(c) => Ok(MultiDual::constant(*c)),
        Node::Time => Ok(MultiDual::seeded(t, 0)),
        Node::State(i) => Ok(MultiDual::seeded(x[*i], 1 + i)),
        Node::Control(i) => Ok(MultiDual::seeded(u[*i], 1 + n + i)),
        Node::Neg(a) => {
            let mut a = eval_multi(a, t, x, u, channels)?;
            a.v = -a.v;
            for d in a.d[..channels].iter_mut() {
                *d = -*d;
            }
            Ok(a)
        }
        Node::Bin(op, a, b) => {
            let a = eval_multi(a, t, x, u, channels)?;
            let b = eval_multi(b, t, x, u, channels)?;
            let mut out = MultiDual::constant(0.0);
            match op {
                BinOp::Add => {
                    out.v = a.v + b.v;
                    for k in 0..channels {
                        out.d[k] = a.d[k] + b.d[k];
                    }
                }
                BinOp::Sub => {
                    out.v = a.v - b.v;
                    for k in 0..channels {
                        out.d[k] = a.d[k] - b.d[k];
                    }
                }
                BinOp::Mul => {
                    out.v = a.v * b.v;
                    for k in 0..channels {
                        out.d[k] = a.v * b.d[k] + a.d[k] * b.v;
                    }
                }
                BinOp::Div => {
                    if b.v == 0.0 {
                        return Err(domain_err(node, t, x, u, "division by zero"));
                    }
                    out.v = a.v / b.v;
                    let b2 = b.v * b.v;
                    for k in 0..channels {
                        out.d[k] = (a.d[k] * b.v - a.v * b.d[k]) / b2;
                    }
                }
                BinOp::Pow => {
                    let v = a.v.powf(b.v);
                    if v.is_nan() && !a.v.is_nan() && !b.v.is_nan() {
                        return Err(domain_err(
                            node,
                            t,
                            x,
                            u,
                            "power of negative base with non-integer exponent",
                        ));
                    }
                    out.v = v;
                    let exponent_constant = b.d[..channels].iter().all(|&d| d == 0.0);
                    if exponent_constant {
                        let factor = b.v * a.v.powf(b.v - 1.0);
                        for k in 0..channels {
                            if a.d[k] == 0.0 {
                                out.d[k] = 0.0;
                            } else if factor.is_finite() {
                                out.d[k] = factor * a.d[k];
                            } else {
                                return Err(domain_err(
                                    node,
                                    t,
                                    x,
                                    u,
                                    "non-finite power derivative",
                                ));
                            }
                        }
                    } else {
                        if a.v <= 0.0 {
                            return Err(domain_err(
                                node,
                                t,
                                x,
                                u,
                                "variable exponent requires positive base",
                            ));
                        }
                        let ln_a = a.v.ln();
                        for k in 0..channels {
                            out.d[k] = v * (b.d[k] * ln_a + b.v * a.d[k] / a.v);
                        }
                    }
                }
            }
            Ok(out)
        }
        Node::Call(func, arg) => {
            let mut a = eval_multi(arg, t, x, u, channels)?;
            match func {
                Func::Exp => {
                    let e = a.v.exp();
                    a.v = e;
                    for d in a.d[..channels].iter_mut() {
                        *d *= e;
                    }
                }
                Func::Log => {
                    if a.v <= 0.0 {
                        return Err(domain_err(node, t, x, u, "log of non-positive argument"));
                    }
                    let inv = 1.0 / a.v;
                    a.v = a.v.ln();
                    for d in a.d[..channels].iter_mut() {
                        *d *= inv;
                    }
                }
                Func::Sqrt => {
                    if a.v < 0.0 {
                        return Err(domain_err(node, t, x, u, "sqrt of negative argument"));
                    }
                    if a.v.abs() < KINK_GUARD {
                        return Err(kink_err(node, t, x, u));
                    }
                    let s = a.v.sqrt();
                    let inv = 1.0 / (2.0 * s);
                    a.v = s;
                    for d in a.d[..channels].iter_mut() {
                        *d *= inv;
                    }
                }
                Func::Sin => {
                    let c = a.v.cos();
                    a.v = a.v.sin();
                    for d in a.d[..channels].iter_mut() {
                        *d *= c;
                    }
                }
                Func::Cos => {
                    let s = -a.v.sin();
                    a.v = a.v.cos();
                    for d in a.d[..channels].iter_mut() {
                        *d *= s;
                    }
                }
                Func::Abs => {
                    if a.v.abs() < KINK_GUARD {
                        return Err(kink_err(node, t, x, u));
                    }
                    let sign = a.v.signum();
                    a.v = a.v.abs();
                    for d in a.d[..channels].iter_mut() {
                        *d *= sign;
                    }
                }
            }
            Ok(a)
        }
    }
}

/// One dual-number pass. `differentiating` distinguishes plain evaluation
/// (kinks allowed at the kink point itself) from a derivative sweep (kink
/// guard enforced).
fn eval_dual(
    node: &Node,
    t: f64,
    x: &[f64],
    u: &[f64],
    channel: Channel,
    differentiating: bool,
) -> Result<(f64, f64), ExprError> {
    let seed = |hit: bool| if hit { 1.0 } else { 0.0 };
    match node {
        Node::Num(c) => Ok((*c, 0.0)),
        Node::Time => Ok((t, seed(channel == Channel::Time))),
        Node::State(i) => Ok((x[*i], seed(channel == Channel::State(*i)))),
        Node::Control(i) => Ok((u[*i], seed(channel == Channel::Control(*i)))),
        Node::Neg(a) => {
            let (av, ad) = eval_dual(a, t, x, u, channel, differentiating)?;
            Ok((-av, -ad))
        }
        Node::Bin(op, a, b) => {
            let (av, ad) = eval_dual(a, t, x, u, channel, differentiating)?;
            let (bv, bd) = eval_dual(b, t, x, u, channel, differentiating)?;
            match op {
                BinOp::Add => Ok((av + bv, ad + bd)),
                BinOp::Sub => Ok((av - bv, ad - bd)),
                BinOp::Mul => Ok((av * bv, av * bd + ad * bv)),
                BinOp::Div => {
                    if bv == 0.0 {
                        return Err(domain_err(node, t, x, u, "division by zero"));
                    }
                    Ok((av / bv, (ad * bv - av * bd) / (bv * bv)))
                }
                BinOp::Pow => {
                    let v = av.powf(bv);
                    if v.is_nan() && !av.is_nan() && !bv.is_nan() {
                        return Err(domain_err(
                            node,
                            t,
                            x,
                            u,
                            "power of negative base with non-integer exponent",
                        ));
                    }
                    if !differentiating {
                        return Ok((v, 0.0));
                    }
                    if bd == 0.0 {
                        // Constant exponent: d(a^c) = c a^(c-1) a'.
                        let d = if ad == 0.0 {
                            0.0
                        } else {
                            bv * av.powf(bv - 1.0) * ad
                        };
                        if !d.is_finite() {
                            return Err(domain_err(node, t, x, u, "non-finite power derivative"));
                        }
                        Ok((v, d))
                    } else {
                        if av <= 0.0 {
                            return Err(domain_err(
                                node,
                                t,
                                x,
                                u,
                                "variable exponent requires positive base",
                            ));
                        }
                        Ok((v, v * (bd * av.ln() + bv * ad / av)))
                    }
                }
            }
        }
        Node::Call(func, a) => {
            let (av, ad) = eval_dual(a, t, x, u, channel, differentiating)?;
            match func {
                Func::Exp => {
                    let e = av.exp();
                    Ok((e, ad * e))
                }
                Func::Log => {
                    if av <= 0.0 {
                        return Err(domain_err(node, t, x, u, "log of non-positive argument"));
                    }
                    Ok((av.ln(), ad / av))
                }
                Func::Sqrt => {
                    if av < 0.0 {
                        return Err(domain_err(node, t, x, u, "sqrt of negative argument"));
                    }
                    if differentiating && av.abs() < KINK_GUARD {
                        return Err(kink_err(node, t, x, u));
                    }
                    let s = av.sqrt();
                    Ok((s, if differentiating { ad / (2.0 * s) } else { 0.0 }))
                }
                Func::Sin => Ok((av.sin(), ad * av.cos())),
                Func::Cos => Ok((av.cos(), -ad * av.sin())),
                Func::Abs => {
                    if differentiating && av.abs() < KINK_GUARD {
                        return Err(kink_err(node, t, x, u));
                    }
                    Ok((av.abs(), ad * av.signum()))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests;
