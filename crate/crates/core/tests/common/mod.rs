//! Independent dense reference built from Kronecker products of 2×2 Pauli matrices.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vdbf::{Pauli, PauliString, PauliSum};

pub type Mat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_matrix(p: Pauli) -> Mat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match p {
        Pauli::I => Mat::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => Mat::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => Mat::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => Mat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Qubit `i` is bit `i` of the basis index, so the highest qubit is the leftmost factor.
pub fn kron_string(p: &PauliString) -> Mat {
    let mut m = Mat::from_element(1, 1, c(1.0, 0.0));
    for q in (0..p.n()).rev() {
        m = m.kronecker(&pauli_matrix(p.get(q)));
    }
    m
}

pub fn kron_sum(h: &PauliSum) -> Mat {
    let dim = 1usize << h.n();
    let mut m = Mat::zeros(dim, dim);
    for (p, coef) in h.iter() {
        m += kron_string(p) * *coef;
    }
    m
}

pub fn zero_state(n: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(1 << n);
    v[0] = c(1.0, 0.0);
    v
}

pub fn expectation0(m: &Mat) -> f64 {
    m[(0, 0)].re
}

pub fn variance0(m: &Mat) -> f64 {
    let col: f64 = m.column(0).iter().map(|v| v.norm_sqr()).sum();
    col - m[(0, 0)].re.powi(2)
}

/// `exp(−iθ/2 P)` from its closed form.
pub fn rotation(p: &PauliString, theta: f64) -> Mat {
    let dim = 1usize << p.n();
    Mat::identity(dim, dim) * c((theta / 2.0).cos(), 0.0)
        - kron_string(p) * c(0.0, (theta / 2.0).sin())
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn random_string(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    let ops: Vec<Pauli> = (0..n)
        .map(|_| Pauli::from_bits(rng.gen(), rng.gen()))
        .collect();
    PauliString::from_ops(&ops).unwrap()
}

pub fn random_non_identity(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    loop {
        let p = random_string(rng, n);
        if !p.is_identity() {
            return p;
        }
    }
}

/// Random Hermitian sum with `terms` strings and real coefficients in [−1, 1].
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> PauliSum {
    let mut h = PauliSum::new(n).unwrap();
    for _ in 0..terms {
        let p = random_string(rng, n);
        h.add_term(p, c(rng.gen_range(-1.0..1.0), 0.0)).unwrap();
    }
    h
}
