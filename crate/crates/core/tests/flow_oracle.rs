mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use vdbf::flow::{integrate_dbf, integrate_dense, projector_k};
use vdbf::models::{build_heisenberg, fold_reference, Boundary, LatticeSpec};
use vdbf::oracle::{spectrum, to_dense};

#[test]
fn full_projector_commutator_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let n = 4;
    let dim = 1 << n;
    let mut proj = Mat::zeros(dim, dim);
    proj[(0, 0)] = c(dim as f64, 0.0);
    let proj = proj - Mat::identity(dim, dim);
    for _ in 0..20 {
        let h = random_hermitian(&mut rng, n, 15);
        let rho = projector_k(n, n).unwrap();
        assert!(max_abs_diff(&kron_sum(&rho), &proj) < 1e-12);
        let mut g = h.multiply(&rho).unwrap();
        let mut back = rho.multiply(&h).unwrap();
        back.scale((-1.0).into());
        g.add_sum(&back).unwrap();
        let hm = kron_sum(&h);
        assert!(max_abs_diff(&kron_sum(&g), &(&hm * &proj - &proj * &hm)) < 1e-12);
    }
}

#[test]
fn full_order_flow_lowers_energy_and_keeps_spectrum() {
    let lattice = LatticeSpec::new(1, 4, Boundary::Open).unwrap();
    let h = fold_reference(
        &build_heisenberg(&lattice, 1.0).unwrap(),
        &lattice.neel_occupation(),
    )
    .unwrap()
    .h0;
    let dense = to_dense(&h).unwrap();
    let (trace, last) = integrate_dense(&dense, 4, 1e-3, 2000).unwrap();
    assert!(trace
        .points
        .windows(2)
        .all(|w| w[1].energy <= w[0].energy + 1e-12));
    let (a, b) = (spectrum(&dense.matrix), spectrum(&last.matrix));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
    assert!((trace.points.last().unwrap().energy - a[0]).abs() < 1e-8);
}

#[test]
fn trace_csv_has_error_column() {
    let lattice = LatticeSpec::new(1, 3, Boundary::Open).unwrap();
    let h = build_heisenberg(&lattice, 1.0).unwrap();
    let trace = integrate_dbf(&h, 1, 0.01, 5).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf, Some(-1.0)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,energy,variance,energy_error"));
    assert_eq!(lines.count(), 6);
}
