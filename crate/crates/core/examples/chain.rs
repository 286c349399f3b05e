//! Runs the flow on a periodic Heisenberg chain and prints per-iteration energies.

use vdbf::models::{build_heisenberg, fold_reference, Boundary, LatticeSpec};
use vdbf::vdbf::{run_with, VdbfConfig};

fn main() -> vdbf::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let rows: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cols: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let boundary = match args.get(3).map(String::as_str) {
        Some("open") => Boundary::Open,
        _ => Boundary::Periodic,
    };
    let sites = rows * cols;
    let lattice = LatticeSpec::new(rows, cols, boundary)?;
    let h = build_heisenberg(&lattice, 1.0)?;
    let folded = fold_reference(&h, &lattice.neel_occupation())?;
    let cfg = VdbfConfig::default();
    let n = sites as f64;
    run_with(&folded.h0, &cfg, |it| {
        println!(
            "{:4} E={:.6} Ec={:.6} v={:.5} cv={:.5} dw={:.4} g={:.4} terms={} t={:.0}ms",
            it.iteration,
            it.raw_energy / n,
            it.corrected_energy / n,
            it.variance.unwrap_or(f64::NAN),
            it.corrected_variance.unwrap_or(f64::NAN),
            it.discarded_weight,
            it.gradient_norm.unwrap_or(0.0),
            it.n_terms,
            it.wall_ms
        );
    })?;
    Ok(())
}
