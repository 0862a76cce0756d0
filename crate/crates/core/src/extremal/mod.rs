//! Hamiltonians and extremal correspondences.
//!
//! For the base problem the Hamiltonian is
//! `H(t, x, u, ψ0, ψ) = ψ0·L(t, x, u) + ψ·φ(t, x, u)`; an extremal is an
//! admissible pair plus multipliers `(ψ0 ≤ 0, ψ(·))`, not both zero,
//! satisfying the adjoint system `ψ' = -∂H/∂x` and the maximality condition
//! `H(..., u(t), ...) = sup_u H`. For the reparameterized problem the
//! Hamiltonian is `𝓗 = (H(t, z, w, p0, p_z) + p_t)·v`; [`hamiltonian_tau`]
//! computes it through that very relation, so the identity
//! `𝓗 = (H + p_t)·v` holds bitwise by construction.
//!
//! [`lift_extremal`] carries an extremal of the base problem to an extremal
//! of the companion problem whose maximized Hamiltonian vanishes: the time
//! adjoint is built from the defining formula `p_t = -H` along the
//! trajectory (the adjoint ODE is then verified separately as a residual
//! rather than being integrated). [`project_extremal`] inverts the
//! construction. Both preserve the abnormality flag, since the cost
//! multiplier is copied.

use serde::Serialize;
use thiserror::Error;

use crate::expr::ExprError;
use crate::problem::{
    AdmissiblePair, GridFn, OCProblem, ProblemError, TauQuadruple, V_MAX, V_MIN,
};
use crate::transform::{lift_to_tau, project_from_tau, TransformError, VProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtremalError {
    #[error("cost multiplier must be non-positive, got {0}")]
    PositiveCostMultiplier(f64),
    #[error("multipliers are all zero")]
    AllZeroMultipliers,
    #[error("speed value {0} outside [{V_MIN}, {V_MAX}]")]
    SpeedOutOfBox(f64),
    #[error("search box must contain the candidate control (component {component}: {value} outside [{lo}, {hi}])")]
    CandidateOutsideBox {
        component: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("search box has {got} intervals, expected {expected}; grid must have at least 2 points per axis")]
    BadSearchBox { expected: usize, got: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// `H(t, x, u, ψ0, ψ) = ψ0·L + ψ·φ`. Accepts any multiplier values; sign
/// constraints live on the [`Extremal`] type.
pub fn hamiltonian_p(
    p: &OCProblem,
    t: f64,
    x: &[f64],
    u: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<f64, ExprError> {
    let l = p.lagrangian_at(t, x, u)?;
    let mut h = psi0 * l;
    for (i, phi) in p.dynamics.iter().enumerate() {
        h += psi[i] * phi.eval_at(t, x, u)?;
    }
    Ok(h)
}

/// `𝓗(t, z, v, w, p0, p_t, p_z) = (H(t, z, w, p0, p_z) + p_t)·v`, computed
/// through [`hamiltonian_p`] so the relation between the two Hamiltonians
/// holds bitwise.
pub fn hamiltonian_tau(
    p: &OCProblem,
    t: f64,
    z: &[f64],
    v: f64,
    w: &[f64],
    p0: f64,
    p_t: f64,
    p_z: &[f64],
) -> Result<f64, ExtremalError> {
    if !(V_MIN..=V_MAX).contains(&v) {
        return Err(ExtremalError::SpeedOutOfBox(v));
    }
    Ok((hamiltonian_p(p, t, z, w, p0, p_z)? + p_t) * v)
}

/// `(∂H/∂t, ∂H/∂x)` assembled from expression gradients.
pub fn hamiltonian_p_partials(
    p: &OCProblem,
    t: f64,
    x: &[f64],
    u: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<(f64, Vec<f64>), ExprError> {
    let gl = p.lagrangian_grad(t, x, u)?;
    let mut d_dt = psi0 * gl.d_dt;
    let mut d_dx: Vec<f64> = gl.d_dx.iter().map(|g| psi0 * g).collect();
    for (i, phi) in p.dynamics.iter().enumerate() {
        let gp = phi.grad_at(t, x, u)?;
        d_dt += psi[i] * gp.d_dt;
        for j in 0..p.n {
            d_dx[j] += psi[i] * gp.d_dx[j];
        }
    }
    Ok((d_dt, d_dx))
}

/// `(∂𝓗/∂t, ∂𝓗/∂z)` assembled term by term (each term carries its own
/// factor of `v`), deliberately a different association order than
/// `v · hamiltonian_p_partials(...)` so the derivative identities
/// `∂𝓗/∂t = v ∂H/∂t` and `∂𝓗/∂z = v ∂H/∂x` are a real two-route check.
pub fn hamiltonian_tau_partials(
    p: &OCProblem,
    t: f64,
    z: &[f64],
    v: f64,
    w: &[f64],
    p0: f64,
    p_z: &[f64],
) -> Result<(f64, Vec<f64>), ExtremalError> {
    if !(V_MIN..=V_MAX).contains(&v) {
        return Err(ExtremalError::SpeedOutOfBox(v));
    }
    let gl = p.lagrangian_grad(t, z, w)?;
    let mut d_dt = p0 * gl.d_dt * v;
    let mut d_dz: Vec<f64> = gl.d_dx.iter().map(|g| p0 * g * v).collect();
    for (i, phi) in p.dynamics.iter().enumerate() {
        let gp = phi.grad_at(t, z, w)?;
        d_dt += p_z[i] * gp.d_dt * v;
        for j in 0..p.n {
            d_dz[j] += p_z[i] * gp.d_dx[j] * v;
        }
    }
    Ok((d_dt, d_dz))
}

/// Extremal candidate for the base problem: an admissible pair plus the cost
/// multiplier and adjoint trajectory. Normal extremals are stored with
/// `ψ0 = -1` (the Hamiltonian is homogeneous in the multipliers); abnormal
/// ones (`ψ0 = 0`) are stored with `‖ψ‖_∞ = 1` as a convention.
#[derive(Debug, Clone)]
pub struct Extremal {
    pub pair: AdmissiblePair,
    psi0: f64,
    psi: GridFn,
}

impl Extremal {
    pub fn new(
        p: &OCProblem,
        pair: AdmissiblePair,
        psi0: f64,
        psi: GridFn,
    ) -> Result<Self, ExtremalError> {
        if psi0 > 0.0 {
            return Err(ExtremalError::PositiveCostMultiplier(psi0));
        }
        if psi.dim() != p.n {
            return Err(ExtremalError::Problem(ProblemError::Dimension {
                what: "adjoint grid width",
                expected: p.n,
                got: psi.dim(),
            }));
        }
        if psi.nodes() != pair.x.nodes() {
            return Err(ExtremalError::Problem(ProblemError::GridMismatch));
        }
        let sup = psi
            .values()
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let (psi0, psi) = if psi0 < 0.0 {
            let scale = -1.0 / psi0;
            (-1.0, scale_grid(&psi, scale))
        } else {
            if sup == 0.0 {
                return Err(ExtremalError::AllZeroMultipliers);
            }
            (0.0, scale_grid(&psi, 1.0 / sup))
        };
        Ok(Extremal { pair, psi0, psi })
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    pub fn psi(&self) -> &GridFn {
        &self.psi
    }

    /// Abnormal iff the cost multiplier vanishes.
    pub fn is_abnormal(&self) -> bool {
        self.psi0 == 0.0
    }
}

/// Extremal candidate for the reparameterized problem.
#[derive(Debug, Clone)]
pub struct TauExtremal {
    pub quad: TauQuadruple,
    p0: f64,
    p_t: GridFn,
    p_z: GridFn,
}

impl TauExtremal {
    pub fn new(
        p: &OCProblem,
        quad: TauQuadruple,
        p0: f64,
        p_t: GridFn,
        p_z: GridFn,
    ) -> Result<Self, ExtremalError> {
        if p0 > 0.0 {
            return Err(ExtremalError::PositiveCostMultiplier(p0));
        }
        if p_t.dim() != 1 || p_z.dim() != p.n {
            return Err(ExtremalError::Problem(ProblemError::Dimension {
                what: "adjoint grid width",
                expected: p.n,
                got: p_z.dim(),
            }));
        }
        if p_t.nodes() != quad.t.nodes() || p_z.nodes() != quad.t.nodes() {
            return Err(ExtremalError::Problem(ProblemError::GridMismatch));
        }
        let sup = p_t
            .values()
            .iter()
            .chain(p_z.values().iter())
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if p0 == 0.0 && sup == 0.0 {
            return Err(ExtremalError::AllZeroMultipliers);
        }
        Ok(TauExtremal { quad, p0, p_t, p_z })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p_t(&self) -> &GridFn {
        &self.p_t
    }

    pub fn p_z(&self) -> &GridFn {
        &self.p_z
    }

    pub fn is_abnormal(&self) -> bool {
        self.p0 == 0.0
    }
}

fn scale_grid(g: &GridFn, scale: f64) -> GridFn {
    let values = g
        .values()
        .iter()
        .map(|row| row.iter().map(|v| v * scale).collect())
        .collect();
    GridFn::new(g.nodes().to_vec(), values).expect("scaling preserves grid validity")
}

/// Max over intervals of `‖(ψ_{i+1}-ψ_i)/h + ∂H/∂x(midpoint)‖` (max norm),
/// the discrete residual of the adjoint system `ψ' = -∂H/∂x`. Uses the same
/// midpoint discretization as the dynamics residual so tolerances are
/// comparable.
pub fn adjoint_residual_p(p: &OCProblem, e: &Extremal) -> Result<f64, ExtremalError> {
    let nodes = e.pair.x.nodes();
    let mut worst: f64 = 0.0;
    let mut xm = vec![0.0; p.n];
    let mut pm = vec![0.0; p.n];
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let tm = 0.5 * (nodes[i] + nodes[i + 1]);
        for j in 0..p.n {
            xm[j] = 0.5 * (e.pair.x.value(i)[j] + e.pair.x.value(i + 1)[j]);
            pm[j] = 0.5 * (e.psi.value(i)[j] + e.psi.value(i + 1)[j]);
        }
        let (_, d_dx) = hamiltonian_p_partials(p, tm, &xm, e.pair.u.value(i), e.psi0, &pm)?;
        for j in 0..p.n {
            let res = ((e.psi.value(i + 1)[j] - e.psi.value(i)[j]) / h + d_dx[j]).abs();
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// Residuals of the reparameterized adjoint system
/// `p_t' = -∂𝓗/∂t`, `p_z' = -∂𝓗/∂z`, max norm over both equations.
pub fn adjoint_residual_tau(p: &OCProblem, te: &TauExtremal) -> Result<f64, ExtremalError> {
    let q = &te.quad;
    let nodes = q.t.nodes();
    let mut worst: f64 = 0.0;
    let mut zm = vec![0.0; p.n];
    let mut pzm = vec![0.0; p.n];
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1] - nodes[i];
        let tm = 0.5 * (q.t.value(i)[0] + q.t.value(i + 1)[0]);
        for j in 0..p.n {
            zm[j] = 0.5 * (q.z.value(i)[j] + q.z.value(i + 1)[j]);
            pzm[j] = 0.5 * (te.p_z.value(i)[j] + te.p_z.value(i + 1)[j]);
        }
        let v = q.v.value(i)[0];
        let (d_dt, d_dz) =
            hamiltonian_tau_partials(p, tm, &zm, v, q.w.value(i), te.p0, &pzm)?;
        let res_t = ((te.p_t.value(i + 1)[0] - te.p_t.value(i)[0]) / h + d_dt).abs();
        worst = worst.max(res_t);
        for j in 0..p.n {
            let res = ((te.p_z.value(i + 1)[j] - te.p_z.value(i)[j]) / h + d_dz[j]).abs();
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// Outcome of a sampled maximality check. `worst_gap` is the largest value
/// of (sampled sup of `H` over the box) minus (H at the candidate control)
/// across nodes; it is box-relative, never a claim about the global
/// supremum over all of control space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalityReport {
    pub worst_gap: f64,
    pub worst_node: usize,
    pub argmax_found: Vec<f64>,
}

/// Check the maximality condition on a compact box: at every node, compare
/// `H` at the candidate control against a grid search over the box with two
/// halving refinement passes around the best cell. Ties in the worst-gap
/// reduction resolve to the lowest node index.
pub fn maximality_check_p(
    p: &OCProblem,
    e: &Extremal,
    u_box: &[(f64, f64)],
    grid: usize,
) -> Result<MaximalityReport, ExtremalError> {
    if u_box.len() != p.r || grid < 2 {
        return Err(ExtremalError::BadSearchBox {
            expected: p.r,
            got: u_box.len(),
        });
    }
    let nodes = e.pair.x.nodes();
    let m = nodes.len();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_node = 0;
    let mut argmax_found = vec![0.0; p.r];
    for i in 0..m {
        let t = nodes[i];
        let x = e.pair.x.value(i);
        let psi = e.psi.value(i);
        let u_cand = e.pair.u.value(i.min(m - 2));
        for (j, &(lo, hi)) in u_box.iter().enumerate() {
            if u_cand[j] < lo || u_cand[j] > hi {
                return Err(ExtremalError::CandidateOutsideBox {
                    component: j,
                    value: u_cand[j],
                    lo,
                    hi,
                });
            }
        }
        let h_cand = hamiltonian_p(p, t, x, u_cand, e.psi0, psi)?;
        let (mut best_u, mut best_h) =
            grid_search(p, t, x, e.psi0, psi, u_box, grid)?;
        // Two refinement passes: re-grid a box of one-cell half-width around
        // the current best, clamped to the original box.
        for _ in 0..2 {
            let refined: Vec<(f64, f64)> = u_box
                .iter()
                .zip(&best_u)
                .map(|(&(lo, hi), &c)| {
                    let cell = (hi - lo) / (grid - 1) as f64;
                    ((c - cell).max(lo), (c + cell).min(hi))
                })
                .collect();
            let (u, h) = grid_search(p, t, x, e.psi0, psi, &refined, grid)?;
            if h > best_h {
                best_h = h;
                best_u = u;
            }
        }
        let gap = best_h - h_cand;
        if gap > worst_gap {
            worst_gap = gap;
            worst_node = i;
            argmax_found = best_u;
        }
    }
    Ok(MaximalityReport {
        worst_gap,
        worst_node,
        argmax_found,
    })
}

fn grid_search(
    p: &OCProblem,
    t: f64,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u_box: &[(f64, f64)],
    grid: usize,
) -> Result<(Vec<f64>, f64), ExtremalError> {
    let r = u_box.len();
    let total = grid.pow(r as u32);
    let mut best_h = f64::NEG_INFINITY;
    let mut best_u = vec![0.0; r];
    let mut u = vec![0.0; r];
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..r {
            let k = rem % grid;
            rem /= grid;
            let (lo, hi) = u_box[j];
            u[j] = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
        }
        let h = hamiltonian_p(p, t, x, &u, psi0, psi)?;
        if h > best_h {
            best_h = h;
            best_u.copy_from_slice(&u);
        }
    }
    Ok((best_u, best_h))
}

/// Lift an extremal of the base problem to an extremal of the companion
/// problem on the zero level of `𝓗`: the trajectory part is lifted with the
/// given speed profile, `p_z` carries `ψ` along the time change, and
/// `p_t(τ) = -H(t(τ), x(t(τ)), u(t(τ)), ψ0, ψ(t(τ)))`.
pub fn lift_extremal(
    p: &OCProblem,
    e: &Extremal,
    v: &VProfile,
) -> Result<TauExtremal, ExtremalError> {
    let quad = lift_to_tau(p, &e.pair, v)?;
    let m = quad.node_count();
    let mut pt_values = Vec::with_capacity(m);
    let mut pz_values = Vec::with_capacity(m);
    for i in 0..m {
        let t = quad.t.value(i)[0];
        let z = quad.z.value(i);
        let w = quad.w.value(i.min(m - 2));
        let psi = e.psi.value(i);
        let h = hamiltonian_p(p, t, z, w, e.psi0, psi)?;
        pt_values.push(vec![-h]);
        pz_values.push(psi.to_vec());
    }
    let taus = quad.t.nodes().to_vec();
    let p_t = GridFn::new(taus.clone(), pt_values).map_err(ExtremalError::Problem)?;
    let p_z = GridFn::new(taus, pz_values).map_err(ExtremalError::Problem)?;
    TauExtremal::new(p, quad, e.psi0, p_t, p_z)
}

/// Project an extremal of the companion problem back to the base problem:
/// the trajectory part through [`project_from_tau`], the adjoint by
/// resampling `p_z` along the inverse time change, and the cost multiplier
/// copied (so abnormality is preserved).
pub fn project_extremal(p: &OCProblem, te: &TauExtremal) -> Result<Extremal, ExtremalError> {
    let pair = project_from_tau(p, &te.quad)?;
    let m = te.quad.node_count();
    let t_coords: Vec<f64> = (0..m).map(|i| te.quad.t.value(i)[0]).collect();
    let pz_over_t =
        GridFn::new(t_coords, te.p_z.values().to_vec()).map_err(ExtremalError::Problem)?;
    let psi_values: Vec<Vec<f64>> = pair
        .x
        .nodes()
        .iter()
        .map(|&s| pz_over_t.eval_linear(s))
        .collect();
    let psi =
        GridFn::new(pair.x.nodes().to_vec(), psi_values).map_err(ExtremalError::Problem)?;
    Extremal::new(p, pair, te.p0, psi)
}

/// Max over nodes of `|𝓗|` for a companion-problem extremal. Lifted
/// extremals sit on the zero level, so this is a direct check of the
/// construction.
pub fn zero_level_max(p: &OCProblem, te: &TauExtremal) -> Result<f64, ExtremalError> {
    let q = &te.quad;
    let m = q.node_count();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let h = hamiltonian_tau(
            p,
            q.t.value(i)[0],
            q.z.value(i),
            q.v.value(i.min(m - 2))[0],
            q.w.value(i.min(m - 2)),
            te.p0,
            te.p_t.value(i)[0],
            te.p_z.value(i),
        )?;
        worst = worst.max(h.abs());
    }
    Ok(worst)
}

/// JSON-facing summary of an extremal verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub adjoint_residual: f64,
    pub worst_gap: f64,
    pub hamiltonian_zero_level_max: f64,
    pub abnormal: bool,
}

/// Run the three checks behind [`ExtremalReport`]: adjoint residual,
/// box-relative maximality, and the zero level of the identity lift.
pub fn verify_extremal(
    p: &OCProblem,
    e: &Extremal,
    u_box: &[(f64, f64)],
    grid: usize,
) -> Result<ExtremalReport, ExtremalError> {
    let adjoint_residual = adjoint_residual_p(p, e)?;
    let max_report = maximality_check_p(p, e, u_box, grid)?;
    let v = VProfile::identity(e.pair.x.nodes())?;
    let lifted = lift_extremal(p, e, &v)?;
    let zero = zero_level_max(p, &lifted)?;
    Ok(ExtremalReport {
        adjoint_residual,
        worst_gap: max_report.worst_gap,
        hamiltonian_zero_level_max: zero,
        abnormal: e.is_abnormal(),
    })
}

#[cfg(test)]
mod tests;
