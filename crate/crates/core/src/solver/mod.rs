//! Direct transcription and a deterministic augmented-Lagrangian solver.
//!
//! [`Transcription`] discretizes the problem on a uniform grid with `N`
//! intervals: decision variables are the interior states and the per-interval
//! controls (boundary states are constants, never variables), the cost is the
//! trapezoid rule, and the dynamics enter as midpoint collocation defects
//! `x_{i+1} - x_i - h·φ(t_{i+1/2}, (x_i + x_{i+1})/2, u_i)`.
//!
//! [`solve`] runs an augmented-Lagrangian outer loop with a first-order
//! multiplier update and 10x penalty escalation, and an inner
//! gradient-descent loop with Barzilai-Borwein step initialization and
//! monotone Armijo backtracking. Everything is single-threaded and
//! deterministic given the initial guess and options; a trial step whose
//! evaluation fails (for instance inside the sqrt kink guard band) is
//! rejected and halved, which keeps the integrand exact rather than
//! smoothing the problem.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::ExprError;
use crate::problem::{uniform_nodes, AdmissiblePair, GridFn, OCProblem, ProblemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("transcription needs at least 2 intervals, got {0}")]
    TooFewIntervals(usize),
    #[error("initial decision vector has length {got}, expected {expected}")]
    InitLength { expected: usize, got: usize },
    #[error("evaluation failed at the accepted iterate (iteration {iteration}): {source}")]
    EvalAtIterate {
        iteration: usize,
        source: ExprError,
    },
    #[error("boundedness diagnostic needs at least two grid sizes")]
    NeedTwoGrids,
    #[error("grid sizes must be strictly increasing")]
    GridsNotIncreasing,
    #[error("solve on {n_intervals} intervals did not converge")]
    SweepSolveFailed { n_intervals: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Solver knobs. The defaults are frozen: feasibility and optimality at
/// 1e-6, penalty starting at 10 with 10x escalation capped at 1e10.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Bound on the max dynamics residual `|c̃|/h`.
    pub feas_tol: f64,
    /// Bound on the sup norm of the augmented-Lagrangian gradient.
    pub opt_tol: f64,
    pub max_outer: usize,
    pub max_total_iterations: usize,
    /// Inner-loop budget per outer iteration; keeps early outers (where the
    /// penalty is still badly scaled) from wandering.
    pub max_inner_per_outer: usize,
    pub penalty_init: f64,
    pub penalty_scale: f64,
    pub penalty_max: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-6,
            opt_tol: 1e-6,
            max_outer: 250,
            max_total_iterations: 120_000,
            max_inner_per_outer: 600,
            penalty_init: 10.0,
            penalty_scale: 10.0,
            penalty_max: 1e8,
        }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;

/// Direct transcription of a problem on `N` uniform intervals.
///
/// Decision vector layout: interior states `x_1..x_{N-1}` (n entries each)
/// followed by controls `u_0..u_{N-1}` (r entries each), total
/// `(N-1)·n + N·r`.
#[derive(Debug, Clone)]
pub struct Transcription {
    problem: OCProblem,
    n_intervals: usize,
    nodes: Vec<f64>,
    h: f64,
}

impl Transcription {
    pub fn new(p: &OCProblem, n_intervals: usize) -> Result<Self, SolverError> {
        if n_intervals < 2 {
            return Err(SolverError::TooFewIntervals(n_intervals));
        }
        let nodes = uniform_nodes(p.a, p.b, n_intervals + 1);
        let h = (p.b - p.a) / n_intervals as f64;
        Ok(Transcription {
            problem: p.clone(),
            n_intervals,
            nodes,
            h,
        })
    }

    pub fn problem(&self) -> &OCProblem {
        &self.problem
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn decision_len(&self) -> usize {
        (self.n_intervals - 1) * self.problem.n + self.n_intervals * self.problem.r
    }

    pub fn constraint_len(&self) -> usize {
        self.n_intervals * self.problem.n
    }

    fn x_offset(&self, i: usize) -> Option<usize> {
        (i >= 1 && i < self.n_intervals).then(|| (i - 1) * self.problem.n)
    }

    fn u_offset(&self, i: usize) -> usize {
        (self.n_intervals - 1) * self.problem.n + i * self.problem.r
    }

    fn x_at<'a>(&'a self, z: &'a [f64], i: usize) -> &'a [f64] {
        if i == 0 {
            &self.problem.x_start
        } else if i == self.n_intervals {
            &self.problem.x_end
        } else {
            let o = (i - 1) * self.problem.n;
            &z[o..o + self.problem.n]
        }
    }

    fn u_at<'a>(&self, z: &'a [f64], i: usize) -> &'a [f64] {
        let o = self.u_offset(i);
        &z[o..o + self.problem.r]
    }

    /// States linear between the endpoints, controls constant at the mean
    /// slope (zero for control components beyond the state dimension).
    pub fn default_init(&self) -> Vec<f64> {
        let p = &self.problem;
        let mut z = vec![0.0; self.decision_len()];
        for i in 1..self.n_intervals {
            let s = (self.nodes[i] - p.a) / (p.b - p.a);
            for j in 0..p.n {
                z[(i - 1) * p.n + j] = p.x_start[j] + (p.x_end[j] - p.x_start[j]) * s;
            }
        }
        for i in 0..self.n_intervals {
            let o = self.u_offset(i);
            for j in 0..p.r.min(p.n) {
                z[o + j] = (p.x_end[j] - p.x_start[j]) / (p.b - p.a);
            }
        }
        z
    }

    /// Trapezoidal cost of the transcribed pair.
    pub fn cost(&self, z: &[f64]) -> Result<f64, ExprError> {
        let p = &self.problem;
        let mut total = 0.0;
        for i in 0..self.n_intervals {
            let u = self.u_at(z, i);
            let l0 = p.lagrangian_at(self.nodes[i], self.x_at(z, i), u)?;
            let l1 = p.lagrangian_at(self.nodes[i + 1], self.x_at(z, i + 1), u)?;
            total += 0.5 * self.h * (l0 + l1);
        }
        Ok(total)
    }

    /// Collocation defects `x_{i+1} - x_i - h·φ(midpoint)`, length `N·n`.
    pub fn constraints(&self, z: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        let p = &self.problem;
        let mut xm = vec![0.0; p.n];
        for i in 0..self.n_intervals {
            let x0 = self.x_at(z, i);
            let x1 = self.x_at(z, i + 1);
            for j in 0..p.n {
                xm[j] = 0.5 * (x0[j] + x1[j]);
            }
            let tm = 0.5 * (self.nodes[i] + self.nodes[i + 1]);
            let phi = p.dynamics_at(tm, &xm, self.u_at(z, i))?;
            for j in 0..p.n {
                out[i * p.n + j] = x1[j] - x0[j] - self.h * phi[j];
            }
        }
        Ok(())
    }

    /// Max dynamics residual `|c̃|/h` (the spec form of the defect).
    pub fn residual_max(&self, z: &[f64]) -> Result<f64, ExprError> {
        let mut c = vec![0.0; self.constraint_len()];
        self.constraints(z, &mut c)?;
        Ok(c.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / self.h)
    }

    fn merit_value(&self, z: &[f64], lambda: &[f64], rho: f64) -> Result<f64, ExprError> {
        let mut c = vec![0.0; self.constraint_len()];
        self.constraints(z, &mut c)?;
        let mut val = self.cost(z)?;
        for (ck, lk) in c.iter().zip(lambda) {
            val += lk * ck + 0.5 * rho * ck * ck;
        }
        Ok(val)
    }

    /// Value and gradient of the augmented Lagrangian, assembled from
    /// expression gradients (exact chain rule).
    fn merit_with_grad(
        &self,
        z: &[f64],
        lambda: &[f64],
        rho: f64,
    ) -> Result<(f64, Vec<f64>), ExprError> {
        let p = &self.problem;
        let mut grad = vec![0.0; self.decision_len()];
        let mut val = 0.0;
        let mut xm = vec![0.0; p.n];
        for i in 0..self.n_intervals {
            let u = self.u_at(z, i);
            let x0 = self.x_at(z, i);
            let x1 = self.x_at(z, i + 1);
            let gl0 = p.lagrangian_grad(self.nodes[i], x0, u)?;
            let gl1 = p.lagrangian_grad(self.nodes[i + 1], x1, u)?;
            val += 0.5 * self.h * (gl0.value + gl1.value);
            if let Some(o) = self.x_offset(i) {
                for j in 0..p.n {
                    grad[o + j] += 0.5 * self.h * gl0.d_dx[j];
                }
            }
            if let Some(o) = self.x_offset(i + 1) {
                for j in 0..p.n {
                    grad[o + j] += 0.5 * self.h * gl1.d_dx[j];
                }
            }
            let uo = self.u_offset(i);
            for j in 0..p.r {
                grad[uo + j] += 0.5 * self.h * (gl0.d_du[j] + gl1.d_du[j]);
            }

            for j in 0..p.n {
                xm[j] = 0.5 * (x0[j] + x1[j]);
            }
            let tm = 0.5 * (self.nodes[i] + self.nodes[i + 1]);
            let gphi = p.dynamics_grad(tm, &xm, u)?;
            for k in 0..p.n {
                let ck = x1[k] - x0[k] - self.h * gphi[k].value;
                let lk = lambda[i * p.n + k];
                val += lk * ck + 0.5 * rho * ck * ck;
                let w = lk + rho * ck;
                if let Some(o) = self.x_offset(i) {
                    for j in 0..p.n {
                        let d = if j == k { -1.0 } else { 0.0 };
                        grad[o + j] += w * (d - 0.5 * self.h * gphi[k].d_dx[j]);
                    }
                }
                if let Some(o) = self.x_offset(i + 1) {
                    for j in 0..p.n {
                        let d = if j == k { 1.0 } else { 0.0 };
                        grad[o + j] += w * (d - 0.5 * self.h * gphi[k].d_dx[j]);
                    }
                }
                for j in 0..p.r {
                    grad[uo + j] -= w * self.h * gphi[k].d_du[j];
                }
            }
        }
        Ok((val, grad))
    }

    /// Diagonal metric `d_i = 1/(1 + ρ·(JᵀJ)_{ii})` from the exact
    /// collocation Jacobian at the current iterate. The augmented term gives
    /// the interior states curvature ~2ρ while the controls sit at ~ρh²,
    /// which flattens any unscaled first-order method; this metric restores
    /// balance while staying matrix-free and deterministic.
    fn preconditioner(&self, z: &[f64], rho: f64) -> Result<Vec<f64>, ExprError> {
        let p = &self.problem;
        let mut jtj = vec![0.0; self.decision_len()];
        let mut xm = vec![0.0; p.n];
        for i in 0..self.n_intervals {
            let x0 = self.x_at(z, i);
            let x1 = self.x_at(z, i + 1);
            for j in 0..p.n {
                xm[j] = 0.5 * (x0[j] + x1[j]);
            }
            let tm = 0.5 * (self.nodes[i] + self.nodes[i + 1]);
            let gphi = p.dynamics_grad(tm, &xm, self.u_at(z, i))?;
            let uo = self.u_offset(i);
            for k in 0..p.n {
                for j in 0..p.n {
                    let d = if j == k { 1.0 } else { 0.0 };
                    let entry = d + 0.5 * self.h * gphi[k].d_dx[j];
                    if let Some(o) = self.x_offset(i) {
                        jtj[o + j] += entry * entry;
                    }
                    let entry = d - 0.5 * self.h * gphi[k].d_dx[j];
                    if let Some(o) = self.x_offset(i + 1) {
                        jtj[o + j] += entry * entry;
                    }
                }
                for j in 0..p.r {
                    let entry = self.h * gphi[k].d_du[j];
                    jtj[uo + j] += entry * entry;
                }
            }
        }
        Ok(jtj.into_iter().map(|v| 1.0 / (1.0 + rho * v)).collect())
    }

    /// Assemble the solved decision vector into an admissible pair (the
    /// stored control row at the last node copies the final interval).
    pub fn to_pair(&self, z: &[f64]) -> Result<AdmissiblePair, ProblemError> {
        let p = &self.problem;
        let x_values: Vec<Vec<f64>> = (0..=self.n_intervals)
            .map(|i| self.x_at(z, i).to_vec())
            .collect();
        let mut u_values: Vec<Vec<f64>> = (0..self.n_intervals)
            .map(|i| self.u_at(z, i).to_vec())
            .collect();
        u_values.push(u_values[self.n_intervals - 1].clone());
        let x = GridFn::new(self.nodes.clone(), x_values)?;
        let u = GridFn::new(self.nodes.clone(), u_values)?;
        AdmissiblePair::new(p, x, u)
    }
}

/// Per-outer-iteration solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub feasibility: f64,
    pub grad_norm: f64,
    pub penalty: f64,
    pub inner_iterations: usize,
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub pair: AdmissiblePair,
    pub cost: f64,
    pub max_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max_i ‖u_i‖_∞` over the solved control grid.
    pub control_sup_norm: f64,
    /// Final augmented-Lagrangian multipliers, one per collocation defect
    /// (`N·n`, interval-major). These are the discrete adjoint estimates.
    pub multipliers: Vec<f64>,
    /// `(start, end)` merit per outer iteration; end ≤ start by the
    /// monotone line search.
    pub merit_history: Vec<(f64, f64)>,
    pub outer_trace: Vec<OuterRecord>,
    pub penalty_final: f64,
}

/// JSON-facing view of a [`SolveResult`].
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub nodes: usize,
    pub cost: f64,
    pub max_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub control_sup_norm: f64,
}

impl SolveResult {
    pub fn summary(&self, n_intervals: usize) -> SolveSummary {
        SolveSummary {
            nodes: n_intervals,
            cost: self.cost,
            max_residual: self.max_residual,
            iterations: self.iterations,
            converged: self.converged,
            control_sup_norm: self.control_sup_norm,
        }
    }
}

struct InnerOutcome {
    grad_norm: f64,
    iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// History window for the nonmonotone Armijo reference.
const NONMONOTONE_WINDOW: usize = 8;

/// Minimize the augmented Lagrangian at fixed multipliers/penalty down to
/// gradient sup norm `tol`, spending at most `budget` iterations.
///
/// Gradient descent with alternating Barzilai-Borwein step initialization
/// and backtracking. The Armijo reference is the max merit over a short
/// window, capped at the inner-loop entry value, so Barzilai-Borwein steps
/// are not strangled while the merit at exit still never exceeds the merit
/// at entry.
fn minimize_inner(
    tr: &Transcription,
    z: &mut Vec<f64>,
    lambda: &[f64],
    rho: f64,
    tol: f64,
    budget: usize,
    iteration_base: usize,
) -> Result<InnerOutcome, SolverError> {
    let (mut fval, mut grad) =
        tr.merit_with_grad(z, lambda, rho)
            .map_err(|source| SolverError::EvalAtIterate {
                iteration: iteration_base,
                source,
            })?;
    let metric = tr
        .preconditioner(z, rho)
        .map_err(|source| SolverError::EvalAtIterate {
            iteration: iteration_base,
            source,
        })?;
    let start_val = fval;
    let mut window: Vec<f64> = vec![fval];
    let mut iterations = 0usize;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (s, y)
    let mut alpha = 1.0;
    loop {
        let gnorm = inf_norm(&grad);
        if gnorm <= tol || iterations >= budget {
            return Ok(InnerOutcome {
                grad_norm: gnorm,
                iterations,
            });
        }
        // Scaled steepest-descent direction.
        let dir: Vec<f64> = grad.iter().zip(&metric).map(|(g, d)| g * d).collect();
        let slope = dot(&grad, &dir); // g'Dg > 0
        if let Some((s, y)) = &prev {
            let sty = dot(s, y);
            if sty > 0.0 {
                // Alternate the two Barzilai-Borwein formulas.
                let bb = if iterations % 2 == 0 {
                    dot(s, s) / sty
                } else {
                    sty / dot(y, y).max(f64::MIN_POSITIVE)
                };
                alpha = bb.clamp(1e-12, 1e8);
            }
        }
        let reference = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max).min(start_val);
        let mut step = alpha;
        let mut accepted = None;
        while step >= MIN_STEP {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(zi, di)| zi - step * di).collect();
            let ok = match tr.merit_value(&trial, lambda, rho) {
                Ok(v) => v.is_finite() && v <= reference - ARMIJO_C1 * step * slope,
                Err(_) => false,
            };
            if ok {
                // Reject the step if the gradient is not available at the
                // trial point (kink guard band): halve and retry.
                match tr.merit_with_grad(&trial, lambda, rho) {
                    Ok((v, g)) => {
                        accepted = Some((trial, v, g));
                        break;
                    }
                    Err(_) => {}
                }
            }
            step *= 0.5;
        }
        let Some((trial, v_new, g_new)) = accepted else {
            // Stagnation: no acceptable step above the floor.
            return Ok(InnerOutcome {
                grad_norm: gnorm,
                iterations,
            });
        };
        if std::env::var_os("OCREG_TRACE").is_some() && iterations % 500 == 0 {
            eprintln!(
                "    inner {iterations}: f={fval:.8} gnorm={gnorm:.3e} alpha={alpha:.3e} step={step:.3e}"
            );
        }
        // Barzilai-Borwein pairs in the scaled geometry: s is the actual
        // move, y the gradient change mapped through the metric.
        let s: Vec<f64> = trial.iter().zip(z.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new
            .iter()
            .zip(&grad)
            .zip(&metric)
            .map(|((a, b), d)| (a - b) * d)
            .collect();
        prev = Some((s, y));
        *z = trial;
        fval = v_new;
        grad = g_new;
        window.push(fval);
        if window.len() > NONMONOTONE_WINDOW {
            window.remove(0);
        }
        iterations += 1;
    }
}

/// Augmented-Lagrangian solve. Terminates when the dynamics residual and
/// the merit gradient fall below the tolerances, or at the iteration cap;
/// non-convergence is reported in the `converged` flag, never silently.
pub fn solve(
    tr: &Transcription,
    init: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<SolveResult, SolverError> {
    let mut z = match init {
        Some(v) => {
            if v.len() != tr.decision_len() {
                return Err(SolverError::InitLength {
                    expected: tr.decision_len(),
                    got: v.len(),
                });
            }
            v.to_vec()
        }
        None => tr.default_init(),
    };
    let m = tr.constraint_len();
    let mut lambda = vec![0.0; m];
    let mut rho = opts.penalty_init;
    let mut omega = (1e-2_f64).max(opts.opt_tol);
    let mut total_iterations = 0usize;
    let mut merit_history = Vec::new();
    let mut outer_trace = Vec::new();
    let mut converged = false;
    let mut c = vec![0.0; m];
    let mut prev_feas = f64::INFINITY;

    // A weak penalty lets the iterate leave the neighborhood of the
    // (dynamics-feasible) initialization entirely; restart from the
    // initialization at a stiffer penalty instead of dragging it back.
    let dynamics_scale = (0..tr.problem.n)
        .map(|j| ((tr.problem.x_end[j] - tr.problem.x_start[j]) / (tr.problem.b - tr.problem.a)).abs())
        .fold(1.0_f64, f64::max);
    let excursion_limit = 0.25 * dynamics_scale;
    let z_init = z.clone();
    let mut containing = true;
    let mut stall_count = 0usize;

    for outer in 0..opts.max_outer {
        let start = tr
            .merit_value(&z, &lambda, rho)
            .map_err(|source| SolverError::EvalAtIterate {
                iteration: total_iterations,
                source,
            })?;
        // Ramp the per-outer budget: while the penalty and multipliers are
        // still badly scaled, short inner solves suffice.
        let ramp = 200usize.saturating_mul(1 << outer.min(31));
        let budget = opts
            .max_total_iterations
            .saturating_sub(total_iterations)
            .min(opts.max_inner_per_outer)
            .min(ramp);
        let outcome = minimize_inner(tr, &mut z, &lambda, rho, omega, budget, total_iterations)?;
        total_iterations += outcome.iterations;
        let end = tr
            .merit_value(&z, &lambda, rho)
            .map_err(|source| SolverError::EvalAtIterate {
                iteration: total_iterations,
                source,
            })?;
        merit_history.push((start, end));

        tr.constraints(&z, &mut c)
            .map_err(|source| SolverError::EvalAtIterate {
                iteration: total_iterations,
                source,
            })?;
        let feas = c.iter().fold(0.0_f64, |mx, v| mx.max(v.abs())) / tr.h;
        outer_trace.push(OuterRecord {
            feasibility: feas,
            grad_norm: outcome.grad_norm,
            penalty: rho,
            inner_iterations: outcome.iterations,
        });
        if feas <= opts.feas_tol && outcome.grad_norm <= opts.opt_tol {
            // Final first-order multiplier refresh for the dual estimates.
            for (lk, ck) in lambda.iter_mut().zip(&c) {
                *lk += rho * ck;
            }
            converged = true;
            break;
        }
        if total_iterations >= opts.max_total_iterations {
            break;
        }
        if containing {
            if feas > excursion_limit && rho < opts.penalty_max {
                z = z_init.clone();
                rho = (rho * opts.penalty_scale).min(opts.penalty_max);
                continue;
            }
            containing = false;
        }
        // Multiplier iteration at (mostly) fixed penalty: feasibility is
        // driven by multiplier accuracy, not penalty size, and a large
        // penalty only wrecks the inner conditioning. Escalate solely on
        // persistent stalls.
        if feas <= 0.5 * prev_feas || feas <= 100.0 * opts.feas_tol {
            for (lk, ck) in lambda.iter_mut().zip(&c) {
                *lk += rho * ck;
            }
            omega = (omega * 0.1).max(opts.opt_tol);
            stall_count = 0;
        } else {
            stall_count += 1;
            if stall_count >= 2 {
                rho = (rho * opts.penalty_scale).min(opts.penalty_max);
                stall_count = 0;
            }
        }
        prev_feas = feas;
    }

    let pair = tr.to_pair(&z)?;
    let cost = tr.cost(&z).map_err(SolverError::Expr)?;
    let max_residual = tr.residual_max(&z).map_err(SolverError::Expr)?;
    let control_sup_norm = (0..tr.n_intervals)
        .map(|i| inf_norm(tr.u_at(&z, i)))
        .fold(0.0_f64, f64::max);
    Ok(SolveResult {
        pair,
        cost,
        max_residual,
        iterations: total_iterations,
        converged,
        control_sup_norm,
        multipliers: lambda,
        merit_history,
        outer_trace,
        penalty_final: rho,
    })
}

/// One grid size's entry in the boundedness diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct BoundednessEntry {
    pub n_intervals: usize,
    pub control_sup_norm: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Control sup-norms across grid refinements: if optimal controls are
/// essentially bounded, the discrete sup norm stabilizes as the grid is
/// refined.
#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    pub entries: Vec<BoundednessEntry>,
    /// Relative change of the sup norm between successive grids.
    pub rel_changes: Vec<f64>,
    /// `bounded-stable` if the final relative change is at most 5%.
    pub verdict: String,
}

/// Stability threshold on the last relative sup-norm change.
pub const BOUNDEDNESS_STABLE_TOL: f64 = 0.05;

/// Solve on each grid size (in parallel; each solve is itself
/// single-threaded and deterministic) and report sup-norm stability. Any
/// non-converged solve fails the diagnostic.
pub fn boundedness_diagnostic(
    p: &OCProblem,
    grid_sizes: &[usize],
    opts: &SolveOptions,
) -> Result<(BoundednessReport, Vec<SolveResult>), SolverError> {
    if grid_sizes.len() < 2 {
        return Err(SolverError::NeedTwoGrids);
    }
    if grid_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolverError::GridsNotIncreasing);
    }
    let results: Vec<Result<SolveResult, SolverError>> = grid_sizes
        .par_iter()
        .map(|&n| {
            let tr = Transcription::new(p, n)?;
            solve(&tr, None, opts)
        })
        .collect();
    let mut solves = Vec::with_capacity(results.len());
    for (res, &n) in results.into_iter().zip(grid_sizes) {
        let r = res?;
        if !r.converged {
            return Err(SolverError::SweepSolveFailed { n_intervals: n });
        }
        solves.push(r);
    }
    let entries: Vec<BoundednessEntry> = solves
        .iter()
        .zip(grid_sizes)
        .map(|(r, &n)| BoundednessEntry {
            n_intervals: n,
            control_sup_norm: r.control_sup_norm,
            cost: r.cost,
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect();
    let rel_changes: Vec<f64> = entries
        .windows(2)
        .map(|w| {
            (w[1].control_sup_norm - w[0].control_sup_norm).abs()
                / w[0].control_sup_norm.abs().max(1e-12)
        })
        .collect();
    let verdict = if rel_changes.last().is_some_and(|&c| c <= BOUNDEDNESS_STABLE_TOL) {
        "bounded-stable"
    } else {
        "unstable"
    };
    Ok((
        BoundednessReport {
            entries,
            rel_changes,
            verdict: verdict.to_string(),
        },
        solves,
    ))
}

#[cfg(test)]
mod tests;
