//! Problem data model and grid-sampled trajectories.
//!
//! An [`OCProblem`] holds the interval `[a, b]`, the endpoint states, the
//! Lagrangian `L`, and the dynamics components `φ_i`. Trajectories live on
//! grids as [`GridFn`]s: state rows are interpreted piecewise-linear,
//! control rows piecewise-constant with the value attached to the left node.
//! Costs use trapezoidal quadrature throughout, so every discrete claim in
//! this crate carries one consistent O(h²) tolerance model; the verified
//! statements are about the discretized objects, not their continuum
//! counterparts.

mod grid;
mod load;

use serde::Serialize;
use thiserror::Error;

pub use grid::{uniform_nodes, GridFn};
pub use load::{load_problem, parse_problem};

use crate::expr::{Expr, ExprError, Gradient};

/// Lower edge of the reparameterization speed box.
pub const V_MIN: f64 = 0.5;
/// Upper edge of the reparameterization speed box.
pub const V_MAX: f64 = 1.5;

/// Default tolerance for dynamics residuals when a caller does not supply
/// one (matches the solver's default feasibility tolerance).
pub const DEFAULT_ADMISSIBILITY_TOL: f64 = 1e-6;

/// Consistency slack for the `t' = v` relation stored in a quadruple.
const T_V_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("grid needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid nodes must be strictly increasing (node {index})")]
    NonIncreasingNodes { index: usize },
    #[error("grid row {row} has width {got}, expected {expected}")]
    RaggedValues {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("grid has {nodes} nodes but {rows} value rows")]
    RowCountMismatch { nodes: usize, rows: usize },
    #[error("key `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("problem file `{path}`: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("dimension mismatch: expected {expected} ({what}), got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("trajectory grids must share the same nodes")]
    GridMismatch,
    #[error("boundary condition violated: {0}")]
    Boundary(String),
    #[error("speed value {value} at node {index} outside [{V_MIN}, {V_MAX}]")]
    SpeedOutOfBox { index: usize, value: f64 },
    #[error("time state must be strictly increasing (node {index})")]
    TimeNotIncreasing { index: usize },
    #[error("time state endpoints must be pinned to [a, b]: {0}")]
    TimePin(String),
    #[error("time/speed inconsistency at interval {index}: slope {slope} vs v {v}")]
    TimeSpeedMismatch { index: usize, slope: f64, v: f64 },
    #[error("non-finite value in grid at node {index}")]
    NonFinite { index: usize },
}

/// The data of a Lagrange problem: interval, endpoints, Lagrangian, dynamics.
#[derive(Debug, Clone)]
pub struct OCProblem {
    pub a: f64,
    pub b: f64,
    /// State at `t = a`.
    pub x_start: Vec<f64>,
    /// State at `t = b`.
    pub x_end: Vec<f64>,
    pub lagrangian: Expr,
    pub dynamics: Vec<Expr>,
    pub n: usize,
    pub r: usize,
}

impl OCProblem {
    pub fn new(
        a: f64,
        b: f64,
        x_start: Vec<f64>,
        x_end: Vec<f64>,
        lagrangian: Expr,
        dynamics: Vec<Expr>,
    ) -> Result<Self, ProblemError> {
        if !(a < b) {
            return Err(ProblemError::Validation {
                key: "a".into(),
                message: format!("a (={a}) must be strictly less than b (={b})"),
            });
        }
        let n = lagrangian.n();
        let r = lagrangian.r();
        if x_start.len() != n {
            return Err(ProblemError::Dimension {
                what: "initial state length",
                expected: n,
                got: x_start.len(),
            });
        }
        if x_end.len() != n {
            return Err(ProblemError::Dimension {
                what: "final state length",
                expected: n,
                got: x_end.len(),
            });
        }
        if dynamics.len() != n {
            return Err(ProblemError::Dimension {
                what: "dynamics component count",
                expected: n,
                got: dynamics.len(),
            });
        }
        for d in &dynamics {
            if d.n() != n || d.r() != r {
                return Err(ProblemError::Dimension {
                    what: "dynamics expression dimensions",
                    expected: n,
                    got: d.n(),
                });
            }
        }
        Ok(OCProblem {
            a,
            b,
            x_start,
            x_end,
            lagrangian,
            dynamics,
            n,
            r,
        })
    }

    pub fn lagrangian_at(&self, t: f64, x: &[f64], u: &[f64]) -> Result<f64, ExprError> {
        self.lagrangian.eval_at(t, x, u)
    }

    pub fn dynamics_at(&self, t: f64, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.dynamics.iter().map(|e| e.eval_at(t, x, u)).collect()
    }

    pub fn lagrangian_grad(&self, t: f64, x: &[f64], u: &[f64]) -> Result<Gradient, ExprError> {
        self.lagrangian.grad_at(t, x, u)
    }

    pub fn dynamics_grad(&self, t: f64, x: &[f64], u: &[f64]) -> Result<Vec<Gradient>, ExprError> {
        self.dynamics.iter().map(|e| e.grad_at(t, x, u)).collect()
    }
}

/// Grid-sampled trajectory/control pair for the base problem.
///
/// `x` is piecewise-linear, `u` piecewise-constant (left node value; the
/// value stored at the last node is never integrated over). Boundary states
/// match the problem's endpoints exactly: they are pinned, never penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissiblePair {
    pub x: GridFn,
    pub u: GridFn,
}

impl AdmissiblePair {
    pub fn new(p: &OCProblem, x: GridFn, u: GridFn) -> Result<Self, ProblemError> {
        if x.dim() != p.n {
            return Err(ProblemError::Dimension {
                what: "state grid width",
                expected: p.n,
                got: x.dim(),
            });
        }
        if u.dim() != p.r {
            return Err(ProblemError::Dimension {
                what: "control grid width",
                expected: p.r,
                got: u.dim(),
            });
        }
        if x.nodes() != u.nodes() {
            return Err(ProblemError::GridMismatch);
        }
        if x.value(0) != p.x_start.as_slice() {
            return Err(ProblemError::Boundary(format!(
                "x(a) = {:?} != A = {:?}",
                x.value(0),
                p.x_start
            )));
        }
        if x.value(x.node_count() - 1) != p.x_end.as_slice() {
            return Err(ProblemError::Boundary(format!(
                "x(b) = {:?} != B = {:?}",
                x.value(x.node_count() - 1),
                p.x_end
            )));
        }
        Ok(AdmissiblePair { x, u })
    }

    pub fn node_count(&self) -> usize {
        self.x.node_count()
    }
}

/// Grid-sampled `(t, z, v, w)` for the reparameterized problem. `t` and `z`
/// are states (piecewise-linear), `v` and `w` controls (piecewise-constant,
/// left value). The stored object satisfies `t' = v` interval by interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TauQuadruple {
    pub t: GridFn,
    pub z: GridFn,
    pub v: GridFn,
    pub w: GridFn,
}

impl TauQuadruple {
    pub fn new(
        p: &OCProblem,
        t: GridFn,
        z: GridFn,
        v: GridFn,
        w: GridFn,
    ) -> Result<Self, ProblemError> {
        for g in [&t, &z, &v, &w] {
            if g.nodes() != t.nodes() {
                return Err(ProblemError::GridMismatch);
            }
        }
        for (g, d, what) in [
            (&t, 1usize, "time grid width"),
            (&z, p.n, "state grid width"),
            (&v, 1, "speed grid width"),
            (&w, p.r, "control grid width"),
        ] {
            if g.dim() != d {
                return Err(ProblemError::Dimension {
                    what,
                    expected: d,
                    got: g.dim(),
                });
            }
        }
        let m = t.node_count();
        for i in 0..m {
            let vi = v.value(i)[0];
            if !(V_MIN..=V_MAX).contains(&vi) {
                return Err(ProblemError::SpeedOutOfBox { index: i, value: vi });
            }
        }
        for i in 0..m - 1 {
            if t.value(i + 1)[0] <= t.value(i)[0] {
                return Err(ProblemError::TimeNotIncreasing { index: i + 1 });
            }
        }
        let t0 = t.value(0)[0];
        let tn = t.value(m - 1)[0];
        if t0 != p.a || tn != p.b {
            return Err(ProblemError::TimePin(format!(
                "t(a) = {t0}, t(b) = {tn}, expected [{}, {}] (the integral of v must equal b - a)",
                p.a, p.b
            )));
        }
        // t' = v is a hard constraint of the reparameterized problem.
        let scale = (p.b - p.a).abs();
        for i in 0..m - 1 {
            let h = t.nodes()[i + 1] - t.nodes()[i];
            let slope = (t.value(i + 1)[0] - t.value(i)[0]) / h;
            let vi = v.value(i)[0];
            if (slope - vi).abs() > T_V_CONSISTENCY_TOL * scale.max(1.0) {
                return Err(ProblemError::TimeSpeedMismatch {
                    index: i,
                    slope,
                    v: vi,
                });
            }
        }
        if z.value(0) != p.x_start.as_slice() || z.value(m - 1) != p.x_end.as_slice() {
            return Err(ProblemError::Boundary(
                "z endpoints must equal A and B".into(),
            ));
        }
        Ok(TauQuadruple { t, z, v, w })
    }

    pub fn node_count(&self) -> usize {
        self.t.node_count()
    }
}

/// The reparameterized problem with the control `w(·)` frozen: only `t`, `z`
/// and the speed `v` remain free. The integrand and dynamics satisfy
/// `F(τ,t,z,v) = L(t, z, w(τ))·v` and `f(τ,t,z,v) = φ(t, z, w(τ))·v`.
#[derive(Debug, Clone)]
pub struct FixedControlProblem {
    pub base: OCProblem,
    pub w: GridFn,
}

impl FixedControlProblem {
    /// `F(τ, t, z, v)`.
    pub fn integrand(&self, tau: f64, t: f64, z: &[f64], v: f64) -> Result<f64, ExprError> {
        let w = self.w.eval_step(tau);
        Ok(self.base.lagrangian_at(t, z, w)? * v)
    }

    /// `f(τ, t, z, v)`.
    pub fn dynamics(&self, tau: f64, t: f64, z: &[f64], v: f64) -> Result<Vec<f64>, ExprError> {
        let w = self.w.eval_step(tau);
        let phi = self.base.dynamics_at(t, z, w)?;
        Ok(phi.into_iter().map(|p| p * v).collect())
    }
}

/// Freeze a control and derive the fixed-control problem.
pub fn fix_control(p: &OCProblem, w: GridFn) -> Result<FixedControlProblem, ProblemError> {
    if w.dim() != p.r {
        return Err(ProblemError::Dimension {
            what: "fixed control width",
            expected: p.r,
            got: w.dim(),
        });
    }
    Ok(FixedControlProblem {
        base: p.clone(),
        w,
    })
}

/// Trapezoidal cost of the base problem on the pair's grid, with the control
/// on each interval taken as its left-node value and `L` evaluated at both
/// interval endpoints.
pub fn cost_p(p: &OCProblem, pair: &AdmissiblePair) -> Result<f64, ProblemError> {
    let nodes = pair.x.nodes();
    let mut total = 0.0;
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let u = pair.u.value(i);
        let l0 = p.lagrangian_at(nodes[i], pair.x.value(i), u)?;
        let l1 = p.lagrangian_at(nodes[i + 1], pair.x.value(i + 1), u)?;
        total += 0.5 * h * (l0 + l1);
    }
    Ok(total)
}

/// Trapezoidal cost of the reparameterized problem: integrand
/// `L(t(τ), z(τ), w(τ))·v(τ)` with `w` and `v` read piecewise-constant. For
/// the identity lift this is the identical Riemann sum as [`cost_p`].
pub fn cost_ptau(p: &OCProblem, q: &TauQuadruple) -> Result<f64, ProblemError> {
    let nodes = q.t.nodes();
    let mut total = 0.0;
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let w = q.w.value(i);
        let vi = q.v.value(i)[0];
        let l0 = p.lagrangian_at(q.t.value(i)[0], q.z.value(i), w)?;
        let l1 = p.lagrangian_at(q.t.value(i + 1)[0], q.z.value(i + 1), w)?;
        total += 0.5 * h * (l0 * vi + l1 * vi);
    }
    Ok(total)
}

/// Admissibility report: midpoint dynamics residual, boundary mismatch, and
/// a verdict against the supplied tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub max_residual: f64,
    pub boundary_error: f64,
    pub pass: bool,
    #[serde(skip)]
    pub worst_interval: usize,
}

/// Max over intervals of `‖(x_{i+1}-x_i)/h - φ(midpoint t, midpoint x, u_i)‖`
/// (max norm), plus the boundary mismatch. Boundary states are pinned by
/// construction, so `boundary_error` is zero for any pair built through
/// [`AdmissiblePair::new`].
pub fn check_admissible(
    p: &OCProblem,
    pair: &AdmissiblePair,
    tol: f64,
) -> Result<AdmissibilityReport, ProblemError> {
    let nodes = pair.x.nodes();
    let mut max_residual: f64 = 0.0;
    let mut worst_interval = 0;
    let mut xm = vec![0.0; p.n];
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let tm = 0.5 * (nodes[i] + nodes[i + 1]);
        let x0 = pair.x.value(i);
        let x1 = pair.x.value(i + 1);
        for j in 0..p.n {
            xm[j] = 0.5 * (x0[j] + x1[j]);
        }
        let phi = p.dynamics_at(tm, &xm, pair.u.value(i))?;
        for j in 0..p.n {
            let res = ((x1[j] - x0[j]) / h - phi[j]).abs();
            if res > max_residual {
                max_residual = res;
                worst_interval = i;
            }
        }
    }
    let m = nodes.len() - 1;
    let mut boundary_error: f64 = 0.0;
    for j in 0..p.n {
        boundary_error = boundary_error
            .max((pair.x.value(0)[j] - p.x_start[j]).abs())
            .max((pair.x.value(m)[j] - p.x_end[j]).abs());
    }
    Ok(AdmissibilityReport {
        max_residual,
        boundary_error,
        pass: max_residual <= tol && boundary_error == 0.0,
        worst_interval,
    })
}

/// Reparameterized-problem analogue of [`check_admissible`]: residuals of
/// `z' = φ(t, z, w)·v` (the `t' = v` relation is already enforced by the
/// [`TauQuadruple`] invariants).
pub fn check_admissible_tau(
    p: &OCProblem,
    q: &TauQuadruple,
    tol: f64,
) -> Result<AdmissibilityReport, ProblemError> {
    let nodes = q.t.nodes();
    let mut max_residual: f64 = 0.0;
    let mut worst_interval = 0;
    let mut zm = vec![0.0; p.n];
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let tm = 0.5 * (q.t.value(i)[0] + q.t.value(i + 1)[0]);
        let z0 = q.z.value(i);
        let z1 = q.z.value(i + 1);
        for j in 0..p.n {
            zm[j] = 0.5 * (z0[j] + z1[j]);
        }
        let vi = q.v.value(i)[0];
        let phi = p.dynamics_at(tm, &zm, q.w.value(i))?;
        for j in 0..p.n {
            let res = ((z1[j] - z0[j]) / h - phi[j] * vi).abs();
            if res > max_residual {
                max_residual = res;
                worst_interval = i;
            }
        }
    }
    let m = nodes.len() - 1;
    let mut boundary_error: f64 = 0.0;
    for j in 0..p.n {
        boundary_error = boundary_error
            .max((q.z.value(0)[j] - p.x_start[j]).abs())
            .max((q.z.value(m)[j] - p.x_end[j]).abs());
    }
    Ok(AdmissibilityReport {
        max_residual,
        boundary_error,
        pass: max_residual <= tol && boundary_error == 0.0,
        worst_interval,
    })
}
