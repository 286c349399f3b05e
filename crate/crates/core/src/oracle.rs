//! Dense reference linear algebra for small systems.
//!
//! Basis index bit `k` holds the computational-basis value of qubit `k` (qubit 1 is the
//! least significant bit).

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, WORDS};

/// Hard cap for any dense or state-vector computation.
pub const MAX_DENSE_QUBITS: usize = 16;
/// Above this size `ground_energy` switches from a full eigensolve to Lanczos.
pub const FULL_EIGEN_QUBITS: usize = 10;
/// Cap for `dense_conjugate`.
pub const MAX_CONJUGATE_QUBITS: usize = 10;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub n: usize,
    pub matrix: DMatrix<Complex64>,
}

fn guard(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::OracleTooLarge { n, max })
    } else {
        Ok(())
    }
}

fn low_bits(p: &PauliString) -> (usize, usize) {
    // n ≤ 16 here, so everything lives in the first word.
    (p.x_words()[0] as usize, p.z_words()[0] as usize)
}

/// Materializes `H` as a `2ⁿ × 2ⁿ` matrix.
pub fn to_dense(h: &PauliSum) -> Result<DenseOperator> {
    guard(h.n(), MAX_DENSE_QUBITS)?;
    let dim = 1usize << h.n();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (p, c) in h.iter() {
        let (x, z) = low_bits(p);
        let base = p.zero_state_phase().apply(*c);
        for b in 0..dim {
            let v = if (z & b).count_ones() % 2 == 1 {
                -base
            } else {
                base
            };
            m[(b ^ x, b)] += v;
        }
    }
    Ok(DenseOperator {
        n: h.n(),
        matrix: m,
    })
}

/// `H v` without materializing `H`.
pub fn apply(h: &PauliSum, v: &[Complex64]) -> Result<Vec<Complex64>> {
    guard(h.n(), MAX_DENSE_QUBITS)?;
    let dim = 1usize << h.n();
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: v.len(),
        });
    }
    let mut out = vec![Complex64::default(); dim];
    for (p, c) in h.iter() {
        let (x, z) = low_bits(p);
        let base = p.zero_state_phase().apply(*c);
        for (b, vb) in v.iter().enumerate() {
            let t = base * vb;
            if (z & b).count_ones() % 2 == 1 {
                out[b ^ x] -= t;
            } else {
                out[b ^ x] += t;
            }
        }
    }
    Ok(out)
}

/// Computational basis vector for an occupation (one bool per qubit).
pub fn basis_state(occupation: &[bool]) -> Result<DVector<Complex64>> {
    let n = occupation.len();
    guard(n, MAX_DENSE_QUBITS)?;
    let idx = occupation
        .iter()
        .enumerate()
        .filter(|(_, &o)| o)
        .fold(0usize, |acc, (k, _)| acc | (1 << k));
    let mut v = DVector::zeros(1 << n);
    v[idx] = Complex64::new(1.0, 0.0);
    Ok(v)
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn expectation(&self, state: &DVector<Complex64>) -> f64 {
        (state.adjoint() * &self.matrix * state)[(0, 0)].re
    }

    pub fn variance(&self, state: &DVector<Complex64>) -> f64 {
        let hv = &self.matrix * state;
        let e = state.dotc(&hv).re;
        hv.norm_squared() - e * e
    }

    /// `(1/2ⁿ) Tr(M†M)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.norm_squared() / self.dim() as f64
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let d = &self.matrix - self.matrix.adjoint();
        d.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Decomposes the matrix into canonical Pauli strings, `c_P = Tr(P M) / 2ⁿ`.
    pub fn to_pauli_sum(&self, tol: f64) -> Result<PauliSum> {
        let n = self.n;
        let dim = self.dim();
        let mut out = PauliSum::new(n)?;
        for x in 0..dim {
            for z in 0..dim {
                let mut xw = [0u64; WORDS];
                let mut zw = [0u64; WORDS];
                xw[0] = x as u64;
                zw[0] = z as u64;
                let p = PauliString::from_words(n, xw, zw)?;
                let ph = p.zero_state_phase().conj();
                // Tr(P M) = Σ_b ⟨b|P M|b⟩ and ⟨b|P = conj(P|b⟩)ᵀ.
                let mut tr = Complex64::default();
                for b in 0..dim {
                    let sign = if (z & b).count_ones() % 2 == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    tr += self.matrix[(b ^ x, b)] * sign;
                }
                let coeff = ph.apply(tr) / dim as f64;
                if coeff.norm() > tol {
                    out.add_term(p, coeff)?;
                }
            }
        }
        Ok(out)
    }

    /// Writes `n` as u32 then row-major `(re, im)` f64 pairs, all little endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&(self.n as u32).to_le_bytes())?;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let v = self.matrix[(r, c)];
                f.write_all(&v.re.to_le_bytes())?;
                f.write_all(&v.im.to_le_bytes())?;
            }
        }
        f.flush()?;
        Ok(())
    }
}

/// Lowest eigenvalue of a Hermitian `H`.
pub fn ground_energy(h: &PauliSum) -> Result<f64> {
    guard(h.n(), MAX_DENSE_QUBITS)?;
    if !h.is_hermitian(crate::pauli::HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            max_imag: h.max_imag(),
        });
    }
    if h.n() <= FULL_EIGEN_QUBITS {
        let m = to_dense(h)?.matrix;
        let ev = m.symmetric_eigenvalues();
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    } else {
        lanczos_ground(h, 1e-10)
    }
}

/// Sorted spectrum of a Hermitian matrix.
pub fn spectrum(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted Lanczos with full reorthogonalization inside each cycle.
///
/// Stops when the Ritz residual `‖Hv − θv‖` drops below `tol`, which bounds the eigenvalue
/// error by the same amount.
pub fn lanczos_ground(h: &PauliSum, tol: f64) -> Result<f64> {
    const CYCLE: usize = 60;
    const MAX_RESTARTS: usize = 200;
    let dim = 1usize << h.n();
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut v0: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);

    let m_max = CYCLE.min(dim);
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<Complex64>> = vec![v0.clone()];
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        for j in 0..m_max {
            let mut w = apply(h, &basis[j])?;
            let a = dotc(&basis[j], &w).re;
            alpha.push(a);
            for q in &basis {
                let proj = dotc(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= proj * qi);
            }
            let b = norm(&w);
            if j + 1 == m_max || b < 1e-14 {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let y = eig.eigenvectors.column(imin);
        let mut ritz = vec![Complex64::default(); dim];
        for (k, q) in basis.iter().take(m).enumerate() {
            let yk = y[k];
            ritz.iter_mut().zip(q).for_each(|(r, qi)| *r += qi * yk);
        }
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nr);
        let hr = apply(h, &ritz)?;
        let e = dotc(&ritz, &hr).re;
        let res: f64 = hr
            .iter()
            .zip(&ritz)
            .map(|(a, b)| (a - b * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res < tol || m < m_max {
            return Ok(e);
        }
        v0 = ritz;
    }
    Err(Error::NoConvergence {
        iterations: MAX_RESTARTS * CYCLE,
    })
}

/// `exp(+iθ/2 P) H exp(−iθ/2 P)` from the closed-form exponential `cos(θ/2) I − i sin(θ/2) P`.
pub fn dense_conjugate(h: &PauliSum, p: &PauliString, theta: f64) -> Result<DenseOperator> {
    guard(h.n(), MAX_CONJUGATE_QUBITS)?;
    if p.n() != h.n() {
        return Err(Error::DimensionMismatch {
            left: h.n(),
            right: p.n(),
        });
    }
    let hm = to_dense(h)?.matrix;
    let pm = to_dense(&PauliSum::single(*p, Complex64::new(1.0, 0.0)))?.matrix;
    let dim = hm.nrows();
    let (s, c) = (theta / 2.0).sin_cos();
    let u = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(c, 0.0)
        - pm * Complex64::new(0.0, s);
    Ok(DenseOperator {
        n: h.n(),
        matrix: u.adjoint() * hm * u,
    })
}
