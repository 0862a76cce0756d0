use ocreg::builtin::Builtin;
use ocreg::solver::{solve, SolveOptions, Transcription};

fn main() {
    for (b, n) in [
        (Builtin::Baseline, 50),
        (Builtin::Lq, 100),
        (Builtin::Torres, 25),
        (Builtin::Torres, 50),
        (Builtin::Torres, 100),
    ] {
        let p = b.problem();
        let tr = Transcription::new(&p, n).unwrap();
        let t0 = std::time::Instant::now();
        let res = solve(&tr, None, &SolveOptions::default()).unwrap();
        println!(
            "{:>12} N={:<4} converged={} cost={:.6} residual={:.3e} iters={} sup={:.4} rho={:.1e} outers={} time={:?}",
            b.name(),
            n,
            res.converged,
            res.cost,
            res.max_residual,
            res.iterations,
            res.control_sup_norm,
            res.penalty_final,
            res.merit_history.len(),
            t0.elapsed()
        );
        for (i, (rec, (s, e))) in res.outer_trace.iter().zip(&res.merit_history).enumerate() {
            println!(
                "   outer {i:>2}: feas={:.2e} gnorm={:.2e} rho={:.0e} inner={} merit {s:.6} -> {e:.6}",
                rec.feasibility, rec.grad_norm, rec.penalty, rec.inner_iterations
            );
        }
    }
}
