//! Sampling-based checkers for the hypotheses under which minimizing
//! controls are essentially bounded.
//!
//! Every hypothesis here is universally quantified over `(t, x, u)`;
//! sampling can refute or support it but never prove it, so verdicts are
//! explicitly box-relative (`satisfied-on-box` / `suspect`) and each checker
//! re-runs with the control box widened by 2x and 4x to expose bounds that
//! only hold because the box is small. Sampling is low-discrepancy and
//! seeded ([`SampleBox`]), so reports are bit-reproducible.
//!
//! Checkers:
//!
//! - [`check_growth_theorem53`]: `|∂L/∂t| ≤ c|L| + k`, `|∂L/∂x_j| ≤ c|L| + k`,
//!   `‖∂φ/∂t‖ ≤ c‖φ‖ + k`, `|∂φ_i/∂x_j| ≤ c|φ_i| + k`, fitted over a fixed
//!   `k` grid with `c` the max ratio (component norms are max norms);
//! - [`check_growth_tonelli_morrey_cv`]: the calculus-of-variations variant
//!   `‖∂L/∂x‖ + ‖∂L/∂u‖ ≤ c|L| + k`, only for problems with `φ = u`;
//! - [`check_coercivity`]: binned lower envelope of `L` over shells of
//!   `‖φ‖`, its superlinearity trend, and growth of `‖φ‖` on the control-box
//!   boundary;
//! - [`check_affine`]: control-affinity by second differences, the rank of
//!   the control matrix, and the `(γ, β, η, μ)` growth certificate that
//!   applies only to affine dynamics;
//! - [`check_alpha_bound`]: an integrable bound `α̂(τ)` dominating the state
//!   derivatives along a fixed control, plus sampled Lipschitz quotients.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Node, Point};
use crate::problem::{GridFn, OCProblem, ProblemError};
use crate::sampling::{SampleBox, SampleError};

/// Threshold on second-difference estimates of `∂²φ/∂u²` below which the
/// dynamics count as control-affine.
pub const AFFINE_TOL: f64 = 1e-6;
/// Floor for right-hand sides when fitting max ratios.
pub const RHS_FLOOR: f64 = 1e-12;
/// Equality tolerance when re-checking that a certificate covers a sample.
pub const CERT_EQUALITY_TOL: f64 = 1e-9;
/// Headroom applied to fitted constants before they are reported as
/// certificates, so an independent sampling pass stays covered.
pub const CERT_MARGIN: f64 = 1.05;
/// A fitted `c` growing by more than this factor from the base box to the
/// 4x control box marks the condition `suspect`.
pub const SUSPECT_GROWTH_FACTOR: f64 = 1.25;
/// Fraction of non-differentiable samples tolerated before a run fails.
pub const MAX_SKIP_FRACTION: f64 = 0.01;
/// Fixed grid of additive constants for the growth fits.
pub const K_GRID: [f64; 4] = [0.0, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularityError {
    #[error("too many non-differentiable samples: {skipped} of {total}")]
    TooManySkips { skipped: usize, total: usize },
    #[error("dynamics are not in calculus-of-variations form (phi must equal u and n = r)")]
    NotCalculusOfVariations,
    #[error("fixed control contains a non-finite value")]
    NonFiniteControl,
    #[error("need at least 4 shells, got {0}")]
    TooFewShells(usize),
    #[error("no usable samples")]
    NoSamples,
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

// ---------------------------------------------------------------------------
// Growth conditions
// ---------------------------------------------------------------------------

/// One scalar growth inequality `lhs ≤ c·rhs + k` with its fit and verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthConditionReport {
    pub name: String,
    /// Certified multiplier (fitted value with headroom).
    pub c: f64,
    pub k: f64,
    /// Exact max of `max(lhs - k, 0)/max(rhs, floor)` over the base box.
    pub fitted_c: f64,
    /// Max of `lhs/max(rhs, floor)` (the `k = 0` ratio) over the base box.
    pub max_ratio: f64,
    pub witness: Point,
    /// Chosen `c` on the base box and under the 2x/4x control-box widening.
    pub escalation_c: [f64; 3],
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub mode: String,
    pub conditions: Vec<GrowthConditionReport>,
    /// `satisfied-on-box` or `suspect`.
    pub verdict: String,
    pub skipped_samples: usize,
    pub total_samples: usize,
}

/// Growth checker with its raw samples retained, so arbitrary `(c, k)` pairs
/// can be re-checked against exactly the points the report saw.
#[derive(Debug, Clone)]
pub struct GrowthCheck {
    report: GrowthReport,
    names: Vec<String>,
    /// Per condition, `(lhs, rhs)` over the base box.
    base_samples: Vec<Vec<(f64, f64)>>,
}

impl GrowthCheck {
    pub fn report(&self) -> &GrowthReport {
        &self.report
    }

    pub fn into_report(self) -> GrowthReport {
        self.report
    }

    /// Does `lhs ≤ c·rhs + k` hold (within [`CERT_EQUALITY_TOL`]) at every
    /// base-box sample of the named condition?
    pub fn certifies(&self, name: &str, c: f64, k: f64) -> Option<bool> {
        let idx = self.names.iter().position(|n| n == name)?;
        Some(
            self.base_samples[idx]
                .iter()
                .all(|&(lhs, rhs)| lhs <= c * rhs + k + CERT_EQUALITY_TOL),
        )
    }

    pub fn condition(&self, name: &str) -> Option<&GrowthConditionReport> {
        self.report.conditions.iter().find(|c| c.name == name)
    }
}

/// Evaluate one sample into per-condition `(lhs, rhs)` rows; `None` marks a
/// non-differentiable sample to skip.
type CondEval = dyn Fn(&OCProblem, &Point) -> Result<Option<Vec<(f64, f64)>>, RegularityError>;

fn eval_theorem53(p: &OCProblem, pt: &Point) -> Result<Option<Vec<(f64, f64)>>, RegularityError> {
    let gl = match p.lagrangian.grad(pt) {
        Ok(g) => g,
        Err(ExprError::NonDifferentiable { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut gphi = Vec::with_capacity(p.n);
    for phi in &p.dynamics {
        match phi.grad(pt) {
            Ok(g) => gphi.push(g),
            Err(ExprError::NonDifferentiable { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    let l_abs = gl.value.abs();
    let phi_sup = gphi.iter().fold(0.0_f64, |m, g| m.max(g.value.abs()));
    let mut rows = Vec::with_capacity(2 + p.n + p.n * p.n);
    rows.push((gl.d_dt.abs(), l_abs));
    for j in 0..p.n {
        rows.push((gl.d_dx[j].abs(), l_abs));
    }
    let dphi_dt_sup = gphi.iter().fold(0.0_f64, |m, g| m.max(g.d_dt.abs()));
    rows.push((dphi_dt_sup, phi_sup));
    for (i, g) in gphi.iter().enumerate() {
        let phi_i_abs = gphi[i].value.abs();
        for j in 0..p.n {
            rows.push((g.d_dx[j].abs(), phi_i_abs));
        }
    }
    Ok(Some(rows))
}

fn theorem53_names(p: &OCProblem) -> Vec<String> {
    let mut names = vec!["dL_dt".to_string()];
    for j in 1..=p.n {
        names.push(format!("dL_dx{j}"));
    }
    names.push("dphi_dt".to_string());
    for i in 1..=p.n {
        for j in 1..=p.n {
            names.push(format!("dphi{i}_dx{j}"));
        }
    }
    names
}

fn eval_cv(p: &OCProblem, pt: &Point) -> Result<Option<Vec<(f64, f64)>>, RegularityError> {
    let gl = match p.lagrangian.grad(pt) {
        Ok(g) => g,
        Err(ExprError::NonDifferentiable { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let dx_sup = gl.d_dx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let du_sup = gl.d_du.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(Some(vec![(dx_sup + du_sup, gl.value.abs())]))
}

/// Is the problem of basic calculus-of-variations form, `φ(t, x, u) = u`?
pub fn is_basic_cov(p: &OCProblem) -> bool {
    p.n == p.r
        && p
            .dynamics
            .iter()
            .enumerate()
            .all(|(i, e)| e.node() == &Node::Control(i))
}

fn fit_c(samples: &[(f64, f64)], k: f64) -> f64 {
    samples.iter().fold(0.0_f64, |m, &(lhs, rhs)| {
        m.max((lhs - k).max(0.0) / rhs.max(RHS_FLOOR))
    })
}

fn choose_ck(samples: &[(f64, f64)]) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for &k in K_GRID.iter() {
        let c = fit_c(samples, k);
        if c < best.0 {
            best = (c, k);
        }
    }
    best
}

fn run_growth(
    p: &OCProblem,
    sample_box: &SampleBox,
    mode: &str,
    names: Vec<String>,
    eval: &CondEval,
) -> Result<GrowthCheck, RegularityError> {
    let n_cond = names.len();
    // Cumulative sample sets: base box, then the 2x and 4x control boxes
    // appended, so fitted constants are non-decreasing under escalation.
    let mut cond_samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_cond];
    let mut points: Vec<Point> = Vec::new();
    let mut prefix_len = [0usize; 3];
    let mut skipped = 0usize;
    let mut total = 0usize;
    for (level, factor) in [1.0, 2.0, 4.0].iter().enumerate() {
        let b = if *factor == 1.0 {
            sample_box.clone()
        } else {
            sample_box.scale_u(*factor)
        };
        for pt in b.iter() {
            total += 1;
            match eval(p, &pt)? {
                Some(rows) => {
                    debug_assert_eq!(rows.len(), n_cond);
                    for (cond, row) in cond_samples.iter_mut().zip(rows) {
                        cond.push(row);
                    }
                    if level == 0 {
                        points.push(pt);
                    }
                }
                None => skipped += 1,
            }
        }
        prefix_len[level] = cond_samples[0].len();
    }
    if total == 0 || cond_samples[0].is_empty() {
        return Err(RegularityError::NoSamples);
    }
    if (skipped as f64) > MAX_SKIP_FRACTION * total as f64 {
        return Err(RegularityError::TooManySkips { skipped, total });
    }

    let mut conditions = Vec::with_capacity(n_cond);
    let mut base_samples = Vec::with_capacity(n_cond);
    for (idx, name) in names.iter().enumerate() {
        let all = &cond_samples[idx];
        let base = &all[..prefix_len[0]];
        let escalation_c: Vec<f64> = prefix_len
            .iter()
            .map(|&len| choose_ck(&all[..len]).0)
            .collect();
        let (fitted_c, k) = choose_ck(base);
        let (mut max_ratio, mut witness_idx) = (0.0_f64, 0usize);
        for (i, &(lhs, rhs)) in base.iter().enumerate() {
            let ratio = lhs / rhs.max(RHS_FLOOR);
            if ratio > max_ratio {
                max_ratio = ratio;
                witness_idx = i;
            }
        }
        let satisfied =
            escalation_c[2] <= SUSPECT_GROWTH_FACTOR * escalation_c[0] + CERT_EQUALITY_TOL;
        conditions.push(GrowthConditionReport {
            name: name.clone(),
            c: fitted_c * CERT_MARGIN + 1e-12,
            k,
            fitted_c,
            max_ratio,
            witness: points[witness_idx].clone(),
            escalation_c: [escalation_c[0], escalation_c[1], escalation_c[2]],
            satisfied,
        });
        base_samples.push(base.to_vec());
    }
    let verdict = if conditions.iter().all(|c| c.satisfied) {
        "satisfied-on-box"
    } else {
        "suspect"
    };
    Ok(GrowthCheck {
        report: GrowthReport {
            mode: mode.to_string(),
            conditions,
            verdict: verdict.to_string(),
            skipped_samples: skipped,
            total_samples: total,
        },
        names,
        base_samples,
    })
}

/// Growth conditions bounding the state and time derivatives of `L` and `φ`
/// by the function values themselves.
pub fn check_growth_theorem53(
    p: &OCProblem,
    sample_box: &SampleBox,
) -> Result<GrowthCheck, RegularityError> {
    run_growth(p, sample_box, "theorem53", theorem53_names(p), &eval_theorem53)
}

/// Classical growth condition for the basic problem of the calculus of
/// variations (`φ = u`): `‖∂L/∂x‖ + ‖∂L/∂u‖ ≤ c|L| + k`.
pub fn check_growth_tonelli_morrey_cv(
    p: &OCProblem,
    sample_box: &SampleBox,
) -> Result<GrowthCheck, RegularityError> {
    if !is_basic_cov(p) {
        return Err(RegularityError::NotCalculusOfVariations);
    }
    run_growth(
        p,
        sample_box,
        "tonelli_morrey_cv",
        vec!["tonelli_morrey_cv".to_string()],
        &eval_cv,
    )
}

// ---------------------------------------------------------------------------
// Coercivity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Pointwise minimum of `L` over the samples in the shell.
    pub theta_hat: Option<f64>,
    /// `‖φ‖` at the sample attaining the minimum.
    pub r_hat: Option<f64>,
    pub ratio_linear: Option<f64>,
    pub ratio_quadratic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub shells: Vec<ShellStat>,
    /// Lower bound estimate for the envelope (min sampled `L`).
    pub theta_min: f64,
    /// Median of `θ̂/r̂` over nonempty top-half shells, per escalation level.
    pub superlinear_trend: [f64; 3],
    /// Min `‖φ‖` over boundary-control samples, per escalation level.
    pub phi_edge_min: [f64; 3],
    pub envelope_superlinear: bool,
    pub phi_grows_with_u: bool,
    pub verdict: bool,
}

fn phi_norm(p: &OCProblem, pt: &Point) -> Result<f64, RegularityError> {
    let phi = p.dynamics_at(pt.t, &pt.x, &pt.u)?;
    Ok(phi.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn median(sorted: &mut Vec<f64>) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted[sorted.len() / 2]
}

/// Estimate the coercivity hypothesis: `L ≥ θ(‖φ‖)` with `θ(r)/r → ∞` and
/// `‖φ‖ → ∞` as `‖u‖ → ∞`. The envelope `θ̂` is the exact pointwise minimum
/// of `L` over the samples in each `‖φ‖` shell.
pub fn check_coercivity(
    p: &OCProblem,
    sample_box: &SampleBox,
    shells: usize,
) -> Result<CoercivityReport, RegularityError> {
    if shells < 4 {
        return Err(RegularityError::TooFewShells(shells));
    }
    let mut trend = [0.0_f64; 3];
    let mut edge_min = [0.0_f64; 3];
    let mut base_shells: Vec<ShellStat> = Vec::new();
    let mut theta_min = f64::INFINITY;
    for (level, factor) in [1.0, 2.0, 4.0].iter().enumerate() {
        let b = sample_box.scale_u(*factor);
        let mut recs: Vec<(f64, f64)> = Vec::with_capacity(b.count);
        for pt in b.iter() {
            let l = p.lagrangian.eval(&pt)?;
            let rho = phi_norm(p, &pt)?;
            recs.push((rho, l));
        }
        if recs.is_empty() {
            return Err(RegularityError::NoSamples);
        }
        let rho_max = recs.iter().fold(0.0_f64, |m, r| m.max(r.0));
        let width = (rho_max / shells as f64).max(RHS_FLOOR);
        let mut stats: Vec<ShellStat> = (0..shells)
            .map(|j| ShellStat {
                lo: j as f64 * width,
                hi: (j + 1) as f64 * width,
                count: 0,
                theta_hat: None,
                r_hat: None,
                ratio_linear: None,
                ratio_quadratic: None,
            })
            .collect();
        for &(rho, l) in &recs {
            let j = ((rho / width) as usize).min(shells - 1);
            let s = &mut stats[j];
            s.count += 1;
            if s.theta_hat.map_or(true, |cur| l < cur) {
                s.theta_hat = Some(l);
                s.r_hat = Some(rho);
            }
            if level == 0 {
                theta_min = theta_min.min(l);
            }
        }
        for s in &mut stats {
            if let (Some(th), Some(rh)) = (s.theta_hat, s.r_hat) {
                if rh > RHS_FLOOR {
                    s.ratio_linear = Some(th / rh);
                    s.ratio_quadratic = Some(th / (rh * rh));
                }
            }
        }
        let mut top: Vec<f64> = stats[shells / 2..]
            .iter()
            .filter_map(|s| s.ratio_linear)
            .collect();
        trend[level] = median(&mut top);
        // Boundary probe for ‖φ‖ → ∞ as ‖u‖ → ∞: push one control
        // component to the box edge per sample.
        let edge_count = (b.count / 4).max(16);
        let mut min_phi = f64::INFINITY;
        for i in 0..edge_count {
            let mut pt = b.point(i);
            let j = i % p.r.max(1);
            let (lo, hi) = b.u_box[j];
            pt.u[j] = if i % 2 == 0 { hi } else { lo };
            min_phi = min_phi.min(phi_norm(p, &pt)?);
        }
        edge_min[level] = min_phi;
        if level == 0 {
            base_shells = stats;
        }
    }
    let envelope_superlinear =
        trend[0] > 0.0 && trend[1] >= 1.2 * trend[0] && trend[2] >= 1.2 * trend[1];
    let phi_grows_with_u = edge_min[1] >= 1.1 * edge_min[0] && edge_min[2] >= 1.1 * edge_min[1];
    Ok(CoercivityReport {
        shells: base_shells,
        theta_min,
        superlinear_trend: trend,
        phi_edge_min: edge_min,
        envelope_superlinear,
        phi_grows_with_u,
        verdict: envelope_superlinear && phi_grows_with_u,
    })
}

// ---------------------------------------------------------------------------
// Control-affinity and the (γ, β, η, μ) growth certificate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineWitness {
    pub point: Point,
    /// Which dynamics component and which control pair (1-based).
    pub component: usize,
    pub j: usize,
    pub l: usize,
    pub second_derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineGrowthReport {
    pub affine: bool,
    pub witness: Option<AffineWitness>,
    pub min_singular_value: Option<f64>,
    pub sigma_witness: Option<Point>,
    pub rank_ok: Option<bool>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    /// Coercivity lower-bound estimate (min sampled `L`).
    pub zeta_estimate: Option<f64>,
    pub verdict: String,
}

const BETA_GRID: [f64; 6] = [-1.0, 0.0, 0.5, 1.0, 1.5, 1.9];
const MU_GRID: [f64; 4] = [-2.0, -1.0, 0.0, 1.0];

/// Decide control-affinity numerically by full second-difference stencils
/// over the controls at 20 seeded points; if affine, estimate the control
/// matrix `g(t, x)` by first differences, report its smallest singular value
/// (the "complete rank" proxy), and fit the `(γ, β, η, μ)` certificate
/// `lhs·‖u‖^μ ≤ γ·L^β + η`.
pub fn check_affine(
    p: &OCProblem,
    sample_box: &SampleBox,
) -> Result<AffineGrowthReport, RegularityError> {
    let steps: Vec<f64> = sample_box
        .u_box
        .iter()
        .map(|&(lo, hi)| (1e-3 * (hi - lo)).max(1e-3))
        .collect();
    let mut worst: Option<AffineWitness> = None;
    for idx in 0..20 {
        let pt = sample_box.point(idx);
        for (comp, phi) in p.dynamics.iter().enumerate() {
            for j in 0..p.r {
                for l in j..p.r {
                    let mut up = pt.u.clone();
                    let base = phi.eval_at(pt.t, &pt.x, &up)?;
                    up[j] += steps[j];
                    let fj = phi.eval_at(pt.t, &pt.x, &up)?;
                    up[l] += steps[l];
                    let fjl = phi.eval_at(pt.t, &pt.x, &up)?;
                    up[j] -= steps[j];
                    let fl = phi.eval_at(pt.t, &pt.x, &up)?;
                    let second = (fjl - fj - fl + base) / (steps[j] * steps[l]);
                    let scale = 1.0
                        + base.abs().max(fj.abs()).max(fl.abs()).max(fjl.abs());
                    if second.abs() > AFFINE_TOL * scale {
                        let better = worst
                            .as_ref()
                            .map_or(true, |w| second.abs() > w.second_derivative.abs());
                        if better {
                            worst = Some(AffineWitness {
                                point: pt.clone(),
                                component: comp + 1,
                                j: j + 1,
                                l: l + 1,
                                second_derivative: second,
                            });
                        }
                    }
                }
            }
        }
    }
    if let Some(w) = worst {
        return Ok(AffineGrowthReport {
            affine: false,
            witness: Some(w),
            min_singular_value: None,
            sigma_witness: None,
            rank_ok: None,
            gamma: None,
            beta: None,
            eta: None,
            mu: None,
            zeta_estimate: None,
            verdict: "inapplicable: dynamics not control-affine".to_string(),
        });
    }

    // First differences give the columns of g(t, x) exactly (up to rounding)
    // for affine dynamics.
    let mut min_sigma = f64::INFINITY;
    let mut sigma_witness = sample_box.point(0);
    let mut g_scale = 0.0_f64;
    for idx in 0..20 {
        let pt = sample_box.point(idx);
        let mut g = nalgebra::DMatrix::zeros(p.n, p.r);
        for j in 0..p.r {
            let mut up = pt.u.clone();
            up[j] += steps[j];
            for (i, phi) in p.dynamics.iter().enumerate() {
                let hi = phi.eval_at(pt.t, &pt.x, &up)?;
                let lo = phi.eval_at(pt.t, &pt.x, &pt.u)?;
                let gij = (hi - lo) / steps[j];
                g[(i, j)] = gij;
                g_scale = g_scale.max(gij.abs());
            }
        }
        let sigma = g.svd(false, false).singular_values.min();
        if sigma < min_sigma {
            min_sigma = sigma;
            sigma_witness = pt;
        }
    }
    let rank_ok = min_sigma > AFFINE_TOL * (1.0 + g_scale);

    // Fit the growth certificate over the sample box.
    let mut recs: Vec<(f64, f64)> = Vec::new(); // (lhs, ||u||)
    let mut l_values: Vec<f64> = Vec::new();
    let mut skipped = 0usize;
    let mut total = 0usize;
    for pt in sample_box.iter() {
        total += 1;
        let gl = match p.lagrangian.grad(&pt) {
            Ok(g) => g,
            Err(ExprError::NonDifferentiable { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut gphi = Vec::with_capacity(p.n);
        let mut bail = false;
        for phi in &p.dynamics {
            match phi.grad(&pt) {
                Ok(g) => gphi.push(g),
                Err(ExprError::NonDifferentiable { .. }) => {
                    bail = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if bail {
            skipped += 1;
            continue;
        }
        let l = gl.value;
        let lt = gl.d_dt;
        let cross_t = (0..p.n)
            .map(|i| (l * gphi[i].d_dt - lt * gphi[i].value).abs())
            .fold(0.0_f64, f64::max);
        let mut lhs: f64 = 0.0;
        for i in 0..p.n {
            let lxi = gl.d_dx[i];
            let cross_x = (0..p.n)
                .map(|k| (l * gphi[k].d_dx[i] - lxi * gphi[k].value).abs())
                .fold(0.0_f64, f64::max);
            lhs = lhs.max(lt.abs() + lxi.abs() + cross_t + cross_x);
        }
        let u_norm = pt.u.iter().map(|v| v * v).sum::<f64>().sqrt();
        recs.push((lhs, u_norm));
        l_values.push(l);
    }
    if recs.is_empty() {
        return Err(RegularityError::NoSamples);
    }
    if (skipped as f64) > MAX_SKIP_FRACTION * total as f64 {
        return Err(RegularityError::TooManySkips { skipped, total });
    }
    let zeta = l_values.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut best: Option<(f64, f64, f64, f64)> = None; // (gamma, beta, eta, mu)
    for &beta in BETA_GRID.iter() {
        for &mu in MU_GRID.iter() {
            if mu < (beta - 2.0).max(-2.0) {
                continue;
            }
            for &eta in K_GRID.iter() {
                let mut gamma: f64 = 0.0;
                for (&(lhs, u_norm), &l) in recs.iter().zip(&l_values) {
                    let weighted = lhs * u_norm.max(RHS_FLOOR).powf(mu);
                    let rhs = if l > 0.0 { l.powf(beta) } else { 0.0 };
                    gamma = gamma.max((weighted - eta).max(0.0) / rhs.max(RHS_FLOOR));
                }
                if best.map_or(true, |(g, ..)| gamma < g) {
                    best = Some((gamma, beta, eta, mu));
                }
            }
        }
    }
    let (gamma, beta, eta, mu) = best.expect("grids are nonempty");
    let verdict = if rank_ok {
        "applicable".to_string()
    } else {
        "inapplicable: control matrix rank-deficient on the box".to_string()
    };
    Ok(AffineGrowthReport {
        affine: true,
        witness: None,
        min_singular_value: Some(min_sigma),
        sigma_witness: Some(sigma_witness),
        rank_ok: Some(rank_ok),
        gamma: Some(gamma * CERT_MARGIN + 1e-12),
        beta: Some(beta),
        eta: Some(eta),
        mu: Some(mu),
        zeta_estimate: Some(zeta),
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Integrable bound along a fixed control
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaReport {
    /// `α̂` at the control grid's nodes: max over x-samples of all state
    /// derivative magnitudes of `L` and of each `φ_i` at `(τ, x, w(τ))`.
    pub alpha: Vec<f64>,
    /// Trapezoid of `α̂` over the grid.
    pub integral: f64,
    /// Max sampled Lipschitz quotient of `L` in `x` along the control.
    pub lipschitz_quotient_l: f64,
    /// Per dynamics component.
    pub lipschitz_quotient_phi: Vec<f64>,
    pub finite: bool,
}

/// Sample the integrable bound `α̂(τ)` that dominates `‖∂L/∂x‖` and every
/// `‖∂φ_i/∂x‖` at `(t = τ, x, w(τ))` over the state box, together with the
/// Lipschitz-modulus variant computed from sampled difference quotients.
pub fn check_alpha_bound(
    p: &OCProblem,
    w: &GridFn,
    x_box: &[(f64, f64)],
    samples_per_node: usize,
    seed: u64,
) -> Result<AlphaReport, RegularityError> {
    if w.dim() != p.r {
        return Err(RegularityError::Problem(ProblemError::Dimension {
            what: "fixed control width",
            expected: p.r,
            got: w.dim(),
        }));
    }
    if !w.all_finite() {
        return Err(RegularityError::NonFiniteControl);
    }
    let count = samples_per_node.max(2);
    let xs = SampleBox::new((0.0, 1.0), x_box.to_vec(), vec![], count, seed)?;
    let x_samples: Vec<Vec<f64>> = (0..count).map(|i| xs.point(i).x).collect();

    let nodes = w.nodes();
    let mut alpha = Vec::with_capacity(nodes.len());
    let mut quot_l: f64 = 0.0;
    let mut quot_phi = vec![0.0_f64; p.n];
    let mut skipped = 0usize;
    let mut total = 0usize;
    for &tau in nodes {
        let wv = w.eval_step(tau);
        let mut a: f64 = 0.0;
        for x in &x_samples {
            total += 1;
            let gl = match p.lagrangian.grad_at(tau, x, wv) {
                Ok(g) => g,
                Err(ExprError::NonDifferentiable { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            for d in &gl.d_dx {
                a = a.max(d.abs());
            }
            for phi in &p.dynamics {
                let gp = match phi.grad_at(tau, x, wv) {
                    Ok(g) => g,
                    Err(ExprError::NonDifferentiable { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                for d in &gp.d_dx {
                    a = a.max(d.abs());
                }
            }
        }
        // Lipschitz quotients over sampled pairs at this node.
        for pair in x_samples.chunks_exact(2) {
            let (x1, x2) = (&pair[0], &pair[1]);
            let dist = x1
                .iter()
                .zip(x2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist < RHS_FLOOR {
                continue;
            }
            let l1 = p.lagrangian_at(tau, x1, wv)?;
            let l2 = p.lagrangian_at(tau, x2, wv)?;
            quot_l = quot_l.max((l1 - l2).abs() / dist);
            for (i, phi) in p.dynamics.iter().enumerate() {
                let f1 = phi.eval_at(tau, x1, wv)?;
                let f2 = phi.eval_at(tau, x2, wv)?;
                quot_phi[i] = quot_phi[i].max((f1 - f2).abs() / dist);
            }
        }
        alpha.push(a);
    }
    if (skipped as f64) > MAX_SKIP_FRACTION * total as f64 {
        return Err(RegularityError::TooManySkips { skipped, total });
    }
    let mut integral = 0.0;
    for i in 0..nodes.len() - 1 {
        integral += 0.5 * (nodes[i + 1] - nodes[i]) * (alpha[i] + alpha[i + 1]);
    }
    let finite = alpha.iter().all(|a| a.is_finite()) && integral.is_finite();
    Ok(AlphaReport {
        alpha,
        integral,
        lipschitz_quotient_l: quot_l,
        lipschitz_quotient_phi: quot_phi,
        finite,
    })
}

#[cfg(test)]
mod tests;
