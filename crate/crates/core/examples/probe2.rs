use ocreg::builtin::Builtin;
use ocreg::solver::{solve, SolveOptions, Transcription};

fn main() {
    let b = Builtin::Torres;
    let p = b.problem();
    let tr = Transcription::new(&p, 50).unwrap();
    let mut opts = SolveOptions::default();
    opts.max_total_iterations = 40_000;
    let res = solve(&tr, None, &opts).unwrap();
    eprintln!("converged={} cost={} gfinal residual={:.3e}", res.converged, res.cost, res.max_residual);
    // report min interval control norm
    let min_u = res.pair.u.values().iter().map(|r| (r[0]*r[0]+r[1]*r[1]).sqrt()).fold(f64::INFINITY, f64::min);
    eprintln!("min ||u_i|| = {min_u:.4}");
}
