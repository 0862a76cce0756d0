//! Correspondence between trajectories of the base problem and of its
//! time-reparameterized companion.
//!
//! A speed profile `v(·)` with values in `[0.5, 1.5]` and `∫ v = b - a`
//! induces the time change `t(τ) = a + ∫ₐ^τ v`. [`lift_to_tau`] carries an
//! admissible pair `(x, u)` to an admissible quadruple
//! `(t, z, v, w) = (t, x∘t, v, u∘t)`; [`project_from_tau`] inverts the time
//! change and recovers a pair. Both directions preserve admissibility and
//! cost.
//!
//! The lifted quadruple is sampled on the preimages `τ_i = t⁻¹(s_i)` of the
//! pair's own grid nodes, with the stored speed equal to the realized slope
//! `(s_{i+1} - s_i)/(τ_{i+1} - τ_i)` on each cell. With that choice the
//! change of variables is exact interval by interval, so the two trapezoid
//! costs agree to rounding (well inside the O(h²) tolerance model), and a
//! lift followed by a projection reproduces the original samples.

use serde::Serialize;
use thiserror::Error;

use crate::expr::ExprError;
use crate::problem::{
    check_admissible, cost_p, cost_ptau, fix_control, AdmissiblePair, FixedControlProblem,
    GridFn, OCProblem, ProblemError, TauQuadruple, DEFAULT_ADMISSIBILITY_TOL, V_MAX, V_MIN,
};

/// Allowed drift when pinning `∫ v = b - a` by adjusting the final interval
/// value; anything larger is a profile error, not quadrature dust.
pub const V_INTEGRAL_PROJECTION_CAP: f64 = 1e-9;

/// Tolerance used to pin the integral condition after projection.
pub const V_INTEGRAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("speed profile value {value} at node {index} outside [{V_MIN}, {V_MAX}]")]
    ProfileOutOfBox { index: usize, value: f64 },
    #[error("speed profile integral {integral} differs from the span {span} by more than {V_INTEGRAL_PROJECTION_CAP:e}")]
    IntegralViolation { integral: f64, span: f64 },
    #[error("two-step profile ({p}, {q}) cannot close the integral inside the interval")]
    TwoStepUnbalanced { p: f64, q: f64 },
    #[error("speed profile spans [{got_a}, {got_b}], expected [{want_a}, {want_b}]")]
    SpanMismatch {
        got_a: f64,
        got_b: f64,
        want_a: f64,
        want_b: f64,
    },
    #[error("time samples are not strictly increasing at index {0}")]
    NonMonotoneTime(usize),
    #[error("pair is not admissible: max residual {max_residual} exceeds {tol}")]
    NotAdmissible { max_residual: f64, tol: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A reparameterization speed profile on `[a, b]`: values in
/// `[0.5, 1.5]` at every node, read piecewise-constant (left value), with
/// the exact integral condition `∫ₐᵇ v = b - a` pinned at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct VProfile {
    v: GridFn,
}

impl VProfile {
    /// Validate the box condition and pin the integral condition. Tiny
    /// quadrature drift (≤ [`V_INTEGRAL_PROJECTION_CAP`]) is folded into the
    /// final interval value so that `t(b) = b` holds exactly downstream;
    /// larger drift is rejected.
    pub fn new(v: GridFn) -> Result<Self, TransformError> {
        if v.dim() != 1 {
            return Err(TransformError::Problem(ProblemError::Dimension {
                what: "speed profile width",
                expected: 1,
                got: v.dim(),
            }));
        }
        for (i, row) in v.values().iter().enumerate() {
            if !(V_MIN..=V_MAX).contains(&row[0]) {
                return Err(TransformError::ProfileOutOfBox {
                    index: i,
                    value: row[0],
                });
            }
        }
        let nodes = v.nodes().to_vec();
        let span = nodes[nodes.len() - 1] - nodes[0];
        let integral: f64 = (0..nodes.len() - 1)
            .map(|i| (nodes[i + 1] - nodes[i]) * v.value(i)[0])
            .sum();
        let drift = span - integral;
        let scale = span.abs().max(1.0);
        let mut values: Vec<Vec<f64>> = v.values().to_vec();
        if drift.abs() > V_INTEGRAL_TOL * scale {
            if drift.abs() > V_INTEGRAL_PROJECTION_CAP * scale {
                return Err(TransformError::IntegralViolation { integral, span });
            }
            let m = nodes.len() - 1;
            let h_last = nodes[m] - nodes[m - 1];
            let adjusted = values[m - 1][0] + drift / h_last;
            if !(V_MIN..=V_MAX).contains(&adjusted) {
                return Err(TransformError::IntegralViolation { integral, span });
            }
            values[m - 1][0] = adjusted;
        }
        let v = GridFn::new(nodes, values).map_err(TransformError::Problem)?;
        Ok(VProfile { v })
    }

    /// `v ≡ 1` on the given nodes.
    pub fn identity(nodes: &[f64]) -> Result<Self, TransformError> {
        let v = GridFn::constant(nodes.to_vec(), vec![1.0]).map_err(TransformError::Problem)?;
        VProfile::new(v)
    }

    /// Two-plateau profile taking value `p` then `q`, with the breakpoint
    /// placed (and the breakpoint cell blended) so the integral condition
    /// closes exactly. Requires `p` and `q` on opposite sides of 1.
    pub fn two_step(nodes: &[f64], p: f64, q: f64) -> Result<Self, TransformError> {
        for (i, &val) in [p, q].iter().enumerate() {
            if !(V_MIN..=V_MAX).contains(&val) {
                return Err(TransformError::ProfileOutOfBox {
                    index: i,
                    value: val,
                });
            }
        }
        let a = nodes[0];
        let b = nodes[nodes.len() - 1];
        if (p - q).abs() < 1e-15 {
            if (p - 1.0).abs() < 1e-12 {
                return VProfile::identity(nodes);
            }
            return Err(TransformError::TwoStepUnbalanced { p, q });
        }
        let breakpoint = a + (b - a) * (1.0 - q) / (p - q);
        if !(breakpoint > a && breakpoint < b) {
            return Err(TransformError::TwoStepUnbalanced { p, q });
        }
        let mut values = Vec::with_capacity(nodes.len());
        for i in 0..nodes.len() {
            let val = if i + 1 < nodes.len() {
                let (lo, hi) = (nodes[i], nodes[i + 1]);
                if hi <= breakpoint {
                    p
                } else if lo >= breakpoint {
                    q
                } else {
                    // Breakpoint lands inside this cell: use the exact cell
                    // average so the integral closes without projection.
                    (p * (breakpoint - lo) + q * (hi - breakpoint)) / (hi - lo)
                }
            } else {
                q
            };
            values.push(vec![val]);
        }
        let v = GridFn::new(nodes.to_vec(), values).map_err(TransformError::Problem)?;
        VProfile::new(v)
    }

    pub fn grid(&self) -> &GridFn {
        &self.v
    }

    pub fn is_identity(&self) -> bool {
        self.v.values().iter().all(|row| row[0] == 1.0)
    }

    /// Cumulative time map `T_j = a + ∫ₐ^{τ_j} v` with `T` pinned to the
    /// exact endpoints.
    pub fn time_map(&self) -> Vec<f64> {
        let nodes = self.v.nodes();
        let m = nodes.len();
        let mut map = Vec::with_capacity(m);
        let mut acc = nodes[0];
        map.push(acc);
        for i in 0..m - 1 {
            acc += (nodes[i + 1] - nodes[i]) * self.v.value(i)[0];
            map.push(acc);
        }
        map[0] = nodes[0];
        map[m - 1] = nodes[m - 1];
        map
    }
}

/// Snap tolerance for recognizing that a preimage falls exactly on a map
/// node (kills cumulative-sum rounding, keeps identity lifts bitwise).
fn snap_tol(span: f64) -> f64 {
    1e-12 * span.abs().max(1.0)
}

/// Lift an admissible pair to an admissible quadruple of the
/// reparameterized problem using the speed profile `v`. The output satisfies
/// the quadruple invariants, and its cost equals the pair's cost to rounding.
pub fn lift_to_tau(
    p: &OCProblem,
    pair: &AdmissiblePair,
    v: &VProfile,
) -> Result<TauQuadruple, TransformError> {
    let s = pair.x.nodes();
    let vg = v.grid();
    let va = vg.nodes()[0];
    let vb = vg.nodes()[vg.node_count() - 1];
    if va != p.a || vb != p.b {
        return Err(TransformError::SpanMismatch {
            got_a: va,
            got_b: vb,
            want_a: p.a,
            want_b: p.b,
        });
    }
    let tmap = v.time_map();
    let vtau = vg.nodes();
    let snap = snap_tol(p.b - p.a);

    // Invert the piecewise-linear map T: for each pair node s_i find
    // τ_i = T⁻¹(s_i). Both sequences increase, so a single sweep suffices.
    let m = s.len();
    let mut taus = Vec::with_capacity(m);
    let mut j = 0usize;
    for (i, &si) in s.iter().enumerate() {
        while j + 2 < tmap.len() && tmap[j + 1] <= si {
            j += 1;
        }
        let tau = if (si - tmap[j]).abs() <= snap {
            vtau[j]
        } else if (si - tmap[j + 1]).abs() <= snap {
            vtau[j + 1]
        } else {
            vtau[j] + (si - tmap[j]) * (vtau[j + 1] - vtau[j]) / (tmap[j + 1] - tmap[j])
        };
        let tau = if i == 0 {
            p.a
        } else if i == m - 1 {
            p.b
        } else {
            tau
        };
        taus.push(tau);
    }
    for i in 0..m - 1 {
        if !(taus[i + 1] > taus[i]) {
            return Err(TransformError::NonMonotoneTime(i + 1));
        }
    }

    let t_values: Vec<Vec<f64>> = s.iter().map(|&si| vec![si]).collect();
    let z_values: Vec<Vec<f64>> = pair.x.values().to_vec();
    let w_values: Vec<Vec<f64>> = pair.u.values().to_vec();
    let mut v_values: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m - 1 {
        let slope = (s[i + 1] - s[i]) / (taus[i + 1] - taus[i]);
        v_values.push(vec![slope.clamp(V_MIN, V_MAX)]);
    }
    v_values.push(v_values[m - 2].clone());

    let t = GridFn::new(taus.clone(), t_values)?;
    let z = GridFn::new(taus.clone(), z_values)?;
    let vq = GridFn::new(taus.clone(), v_values)?;
    let w = GridFn::new(taus, w_values)?;
    Ok(TauQuadruple::new(p, t, z, vq, w)?)
}

/// Project an admissible quadruple back to an admissible pair by inverting
/// the time state: `x = z∘τ`, `u = w∘τ`, resampled on a uniform `t` grid
/// with the same node count.
pub fn project_from_tau(
    p: &OCProblem,
    q: &TauQuadruple,
) -> Result<AdmissiblePair, TransformError> {
    let m = q.node_count();
    let t_coords: Vec<f64> = (0..m).map(|i| q.t.value(i)[0]).collect();
    for i in 0..m - 1 {
        if !(t_coords[i + 1] > t_coords[i]) {
            return Err(TransformError::NonMonotoneTime(i + 1));
        }
    }
    // z and w as functions of t: the time change t(τ) is piecewise-linear,
    // so composing with its inverse keeps nodes at the image points.
    let z_over_t = GridFn::new(t_coords.clone(), q.z.values().to_vec())?;
    let w_over_t = GridFn::new(t_coords, q.w.values().to_vec())?;

    let nodes = crate::problem::uniform_nodes(p.a, p.b, m);
    let mut x_values: Vec<Vec<f64>> = nodes.iter().map(|&s| z_over_t.eval_linear(s)).collect();
    let u_values: Vec<Vec<f64>> = nodes.iter().map(|&s| w_over_t.eval_step(s).to_vec()).collect();
    x_values[0] = p.x_start.clone();
    x_values[m - 1] = p.x_end.clone();
    let x = GridFn::new(nodes.clone(), x_values)?;
    let u = GridFn::new(nodes, u_values)?;
    Ok(AdmissiblePair::new(p, x, u)?)
}

/// The identity lift `(t̃(τ), z̃(τ), ṽ(τ)) = (τ, x(τ), 1)` with `w = u`,
/// plus the fixed-control problem in which only `(t, z, v)` remain free.
#[derive(Debug, Clone)]
pub struct CanonicalLift {
    pub quad: TauQuadruple,
    pub fixed: FixedControlProblem,
}

/// Build the canonical (identity-speed) lift of an admissible pair. Fails
/// if the pair does not pass [`check_admissible`] at the default tolerance.
pub fn canonical_lift(p: &OCProblem, pair: &AdmissiblePair) -> Result<CanonicalLift, TransformError> {
    let report = check_admissible(p, pair, DEFAULT_ADMISSIBILITY_TOL)?;
    if !report.pass {
        return Err(TransformError::NotAdmissible {
            max_residual: report.max_residual,
            tol: DEFAULT_ADMISSIBILITY_TOL,
        });
    }
    let nodes = pair.x.nodes().to_vec();
    let t_values: Vec<Vec<f64>> = nodes.iter().map(|&s| vec![s]).collect();
    let t = GridFn::new(nodes.clone(), t_values)?;
    let z = GridFn::new(nodes.clone(), pair.x.values().to_vec())?;
    let v = GridFn::constant(nodes.clone(), vec![1.0])?;
    let w = GridFn::new(nodes, pair.u.values().to_vec())?;
    let quad = TauQuadruple::new(p, t, z, v, w)?;
    let fixed = fix_control(p, pair.u.clone())?;
    Ok(CanonicalLift { quad, fixed })
}

/// Cost-equality and round-trip summary for one (pair, profile) case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    #[serde(rename = "cost_P")]
    pub cost_p: f64,
    #[serde(rename = "cost_Ptau")]
    pub cost_ptau: f64,
    pub abs_diff: f64,
    pub roundtrip_sup_error: f64,
}

/// Lift, cost both sides, project back, and report.
pub fn transform_report(
    p: &OCProblem,
    pair: &AdmissiblePair,
    v: &VProfile,
) -> Result<TransformReport, TransformError> {
    let quad = lift_to_tau(p, pair, v)?;
    let c_p = cost_p(p, pair)?;
    let c_tau = cost_ptau(p, &quad)?;
    let back = project_from_tau(p, &quad)?;
    let mut sup: f64 = 0.0;
    for i in 0..pair.node_count() {
        for j in 0..p.n {
            sup = sup.max((pair.x.value(i)[j] - back.x.value(i)[j]).abs());
        }
    }
    Ok(TransformReport {
        cost_p: c_p,
        cost_ptau: c_tau,
        abs_diff: (c_p - c_tau).abs(),
        roundtrip_sup_error: sup,
    })
}
