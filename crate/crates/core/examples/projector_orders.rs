//! Exact flow on the 6-site Heisenberg ring for every projector order.

use vdbf::flow::integrate_dbf;
use vdbf::models::{build_heisenberg, fold_reference, Boundary, LatticeSpec};
use vdbf::oracle::ground_energy;

fn main() -> vdbf::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let ds: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20000);
    let lattice = LatticeSpec::new(1, 6, Boundary::Periodic)?;
    let h = fold_reference(
        &build_heisenberg(&lattice, 1.0)?,
        &lattice.neel_occupation(),
    )?
    .h0;
    let exact = ground_energy(&h)?;
    for k in 1..=6 {
        let t = std::time::Instant::now();
        let trace = integrate_dbf(&h, k, ds, steps)?;
        let last = trace.points.last().unwrap();
        println!(
            "k={k} steps_to_1e-3={:?} final_err={:.3e} var={:.3e} ({:.1}s)",
            trace.steps_to_threshold(exact, 1e-3),
            last.energy - exact,
            last.variance,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
