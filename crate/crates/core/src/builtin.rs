//! Bundled example problems and sample trajectories.
//!
//! Three problems ship with the crate:
//!
//! - `baseline`: minimize `∫ u²` with `x' = u`, `x(0) = 0`, `x(1) = 1`.
//!   Analytic optimum `u ≡ 1`, cost 1.
//! - `lq`: minimize `∫ (u² + x²)`, same dynamics and endpoints. Analytic
//!   optimum `x = sinh(t)/sinh(1)`, cost `coth(1)`.
//! - `torres-6.1`: a two-state, two-control problem whose dynamics are
//!   nonlinear in the controls (`φ₁ = sqrt(u1²+u2²)` has a kink and is not
//!   control-affine), with quadratic coercivity. `(x1, x2, u1, u2) =
//!   (t, 1, 1, 0)` is admissible.
//!
//! Sample trajectories constructed here satisfy the discrete midpoint
//! dynamics exactly: controls are solved interval by interval from the
//! state slopes, so `check_admissible` reports zero residual.

use crate::problem::{parse_problem, AdmissiblePair, GridFn, OCProblem};
use crate::sampling::unit_f64;

pub const BASELINE_SRC: &str = include_str!("../problems/baseline.ocp");
pub const LQ_SRC: &str = include_str!("../problems/lq.ocp");
pub const TORRES_SRC: &str = include_str!("../problems/torres_example.ocp");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Baseline,
    Lq,
    Torres,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Baseline, Builtin::Lq, Builtin::Torres];

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "baseline" => Some(Builtin::Baseline),
            "lq" => Some(Builtin::Lq),
            "torres-6.1" => Some(Builtin::Torres),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Baseline => "baseline",
            Builtin::Lq => "lq",
            Builtin::Torres => "torres-6.1",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Builtin::Baseline => BASELINE_SRC,
            Builtin::Lq => LQ_SRC,
            Builtin::Torres => TORRES_SRC,
        }
    }

    pub fn problem(self) -> OCProblem {
        parse_problem(self.source()).expect("bundled problem parses")
    }

    /// A simple admissible trajectory: the analytic optimum for `baseline`
    /// and `lq`, and `(t, 1, 1, 0)` for the nonlinear example.
    pub fn reference_pair(self, node_count: usize) -> AdmissiblePair {
        let p = self.problem();
        match self {
            Builtin::Baseline => path_pair(&p, node_count, |_| 0.0),
            Builtin::Lq => {
                let s1 = 1.0_f64.sinh();
                path_pair(&p, node_count, move |t| t.sinh() / s1 - t)
            }
            Builtin::Torres => torres_pair(&p, node_count, |_| 0.0, |_| 0.0),
        }
    }

    /// Seeded admissible trajectory used by property suites: a smooth
    /// perturbation of the reference path with controls solved from the
    /// discrete dynamics.
    pub fn seeded_pair(self, seed: u64, node_count: usize) -> AdmissiblePair {
        let p = self.problem();
        let mut state = seed ^ 0x0C_5EED;
        match self {
            Builtin::Baseline | Builtin::Lq => {
                let bump = random_bump(&mut state, 0.15);
                path_pair(&p, node_count, move |t| bump(t))
            }
            Builtin::Torres => {
                // Amplitudes keep the x1 slope well away from the sqrt kink
                // and |u2| < slope everywhere.
                let b1 = random_bump(&mut state, 0.04);
                let b2 = random_bump(&mut state, 0.04);
                torres_pair(&p, node_count, move |t| b1(t), move |t| b2(t))
            }
        }
    }
}

/// Smooth perturbation vanishing at both interval ends.
fn random_bump(state: &mut u64, amplitude: f64) -> impl Fn(f64) -> f64 {
    let coefs: Vec<f64> = (0..3)
        .map(|_| (2.0 * unit_f64(state) - 1.0) * amplitude)
        .collect();
    move |s: f64| {
        coefs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * s).sin())
            .sum()
    }
}

/// Scalar-state pair `x(t) = A + (B-A)s + bump(s)` (s the normalized time)
/// with each interval control equal to the exact state slope, so the
/// midpoint collocation residual vanishes identically. Valid for any
/// problem with `φ = u` dynamics.
fn path_pair(p: &OCProblem, node_count: usize, bump: impl Fn(f64) -> f64) -> AdmissiblePair {
    let nodes = crate::problem::uniform_nodes(p.a, p.b, node_count);
    let span = p.b - p.a;
    let mut xv: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&t| {
            let s = (t - p.a) / span;
            vec![p.x_start[0] + (p.x_end[0] - p.x_start[0]) * s + bump(s)]
        })
        .collect();
    let m = nodes.len() - 1;
    xv[0] = p.x_start.clone();
    xv[m] = p.x_end.clone();
    let mut uv: Vec<Vec<f64>> = (0..m)
        .map(|i| vec![(xv[i + 1][0] - xv[i][0]) / (nodes[i + 1] - nodes[i])])
        .collect();
    uv.push(uv[m - 1].clone());
    let x = GridFn::new(nodes.clone(), xv).expect("valid state grid");
    let u = GridFn::new(nodes, uv).expect("valid control grid");
    AdmissiblePair::new(p, x, u).expect("constructed pair is admissible")
}

/// Pair for the nonlinear example: `x1 = t + bump1`, `x2 = 1 + bump2`, with
/// `(u1, u2)` solved per interval from the midpoint dynamics:
/// `u2 = slope2·exp(-(x1m + x2m))`, `u1 = sqrt(slope1² - u2²)`.
fn torres_pair(
    p: &OCProblem,
    node_count: usize,
    bump1: impl Fn(f64) -> f64,
    bump2: impl Fn(f64) -> f64,
) -> AdmissiblePair {
    let nodes = crate::problem::uniform_nodes(p.a, p.b, node_count);
    let span = p.b - p.a;
    let mut xv: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&t| {
            let s = (t - p.a) / span;
            vec![t + bump1(s), 1.0 + bump2(s)]
        })
        .collect();
    let m = nodes.len() - 1;
    xv[0] = p.x_start.clone();
    xv[m] = p.x_end.clone();
    let mut uv: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let h = nodes[i + 1] - nodes[i];
        let slope1 = (xv[i + 1][0] - xv[i][0]) / h;
        let slope2 = (xv[i + 1][1] - xv[i][1]) / h;
        let sm = 0.5 * (xv[i][0] + xv[i + 1][0]) + 0.5 * (xv[i][1] + xv[i + 1][1]);
        let u2 = slope2 * (-sm).exp();
        let u1 = (slope1 * slope1 - u2 * u2).sqrt();
        assert!(
            u1.is_finite() && slope1 > 0.0,
            "perturbation amplitudes must keep the dynamics solvable"
        );
        uv.push(vec![u1, u2]);
    }
    uv.push(uv[m - 1].clone());
    let x = GridFn::new(nodes.clone(), xv).expect("valid state grid");
    let u = GridFn::new(nodes, uv).expect("valid control grid");
    AdmissiblePair::new(p, x, u).expect("constructed pair is admissible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_admissible, DEFAULT_ADMISSIBILITY_TOL};

    #[test]
    fn builtins_load_with_expected_dimensions() {
        let torres = Builtin::Torres.problem();
        assert_eq!((torres.n, torres.r), (2, 2));
        assert_eq!((torres.a, torres.b), (0.0, 1.0));
        assert_eq!(torres.x_start, vec![0.0, 1.0]);
        assert_eq!(torres.x_end, vec![1.0, 1.0]);
        let baseline = Builtin::Baseline.problem();
        assert_eq!((baseline.n, baseline.r), (1, 1));
        let lq = Builtin::Lq.problem();
        assert_eq!((lq.n, lq.r), (1, 1));
    }

    #[test]
    fn reference_pairs_have_zero_residual() {
        for b in Builtin::ALL {
            let p = b.problem();
            let pair = b.reference_pair(101);
            let rep = check_admissible(&p, &pair, DEFAULT_ADMISSIBILITY_TOL).unwrap();
            assert!(rep.pass, "{}: residual {}", b.name(), rep.max_residual);
            assert!(rep.max_residual < 1e-10);
        }
    }

    #[test]
    fn seeded_pairs_are_admissible_and_distinct() {
        for b in Builtin::ALL {
            let p = b.problem();
            for seed in [1, 2, 3] {
                let pair = b.seeded_pair(seed, 101);
                let rep = check_admissible(&p, &pair, 1e-9).unwrap();
                assert!(rep.pass, "{} seed {seed}: {}", b.name(), rep.max_residual);
            }
            let a = b.seeded_pair(1, 101);
            let c = b.seeded_pair(2, 101);
            assert_ne!(a.x.values(), c.x.values());
        }
    }
}
