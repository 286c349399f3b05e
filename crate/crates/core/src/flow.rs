//! Continuous double bracket flow `dH/ds = [G, H]`, `G = [H, ρ_k]`, integrated densely.
//!
//! `ρ_k` keeps the Z strings of weight 1..k from the expansion of the reference projector.
//! With `k = n` it equals `2ⁿ|0⟩⟨0| − I`, so `dE/ds = −2·2ⁿ·Var`.

use std::io::Write;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{to_dense, DenseOperator};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::vdbf::fmt_f64;

/// Largest register the flow integrates densely.
pub const MAX_FLOW_QUBITS: usize = 10;
/// Largest register for which [`projector_k`] enumerates strings.
pub const MAX_PROJECTOR_QUBITS: usize = 20;
/// Norm growth (relative to the start) treated as divergence.
pub const MAX_GROWTH: f64 = 1e6;

fn check_order(n: usize, k: usize) -> Result<()> {
    if k < 1 || k > n {
        Err(Error::ProjectorOrder { k, n })
    } else {
        Ok(())
    }
}

/// All Z strings of weight 1..=k with unit coefficient.
pub fn projector_k(n: usize, k: usize) -> Result<PauliSum> {
    check_order(n, k)?;
    if n > MAX_PROJECTOR_QUBITS {
        return Err(Error::OracleTooLarge {
            n,
            max: MAX_PROJECTOR_QUBITS,
        });
    }
    let mut rho = PauliSum::new(n)?;
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let sites: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let mut p = PauliString::identity(n)?;
        for s in sites {
            p.set(s, Pauli::Z)?;
        }
        rho.add_term(p, Complex64::new(1.0, 0.0))?;
    }
    Ok(rho)
}

/// Diagonal of `ρ_k` in the computational basis.
fn projector_diagonal(n: usize, k: usize) -> Vec<f64> {
    let dim = 1usize << n;
    let masks: Vec<usize> = (1..dim).filter(|m| m.count_ones() as usize <= k).collect();
    (0..dim)
        .map(|b| {
            masks
                .iter()
                .map(|m| {
                    if (m & b).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub s: f64,
    pub energy: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub n: usize,
    pub k: usize,
    pub ds: f64,
    /// `steps + 1` points, starting at s = 0.
    pub points: Vec<FlowPoint>,
}

impl FlowTrace {
    /// Number of steps until `energy − exact` first drops below `threshold`.
    pub fn steps_to_threshold(&self, exact: f64, threshold: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.energy - exact < threshold)
    }

    /// Columns `s, energy, variance, energy_error`; the last is empty without `exact`.
    pub fn write_csv<W: Write>(&self, out: W, exact: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "energy", "variance", "energy_error"])?;
        for p in &self.points {
            w.write_record([
                fmt_f64(p.s),
                fmt_f64(p.energy),
                fmt_f64(p.variance),
                exact.map(|e| fmt_f64(p.energy - e)).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn observe<T: ComplexField<RealField = f64> + Copy>(h: &DMatrix<T>, s: f64) -> FlowPoint {
    let e = h[(0, 0)].real();
    let col_sq: f64 = h.column(0).iter().map(|v| v.modulus_squared()).sum();
    FlowPoint {
        s,
        energy: e,
        variance: (col_sq - e * e).max(0.0),
    }
}

fn rhs<T: ComplexField<RealField = f64> + Copy>(h: &DMatrix<T>, d: &[f64]) -> DMatrix<T> {
    let dim = h.nrows();
    let g = DMatrix::from_fn(dim, dim, |a, b| h[(a, b)].scale(d[b] - d[a]));
    &g * h - h * &g
}

fn integrate<T: ComplexField<RealField = f64> + Copy>(
    mut h: DMatrix<T>,
    d: &[f64],
    ds: f64,
    steps: usize,
) -> Result<(Vec<FlowPoint>, DMatrix<T>)> {
    let norm0 = h.norm().max(f64::MIN_POSITIVE);
    let mut points = Vec::with_capacity(steps + 1);
    points.push(observe(&h, 0.0));
    let half = T::from_real(ds / 2.0);
    let full = T::from_real(ds);
    let sixth = T::from_real(ds / 6.0);
    let two = T::from_real(2.0);
    for step in 1..=steps {
        let k1 = rhs(&h, d);
        let k2 = rhs(&(&h + &k1 * half), d);
        let k3 = rhs(&(&h + &k2 * half), d);
        let k4 = rhs(&(&h + &k3 * full), d);
        h += (k1 + k2 * two + k3 * two + k4) * sixth;
        // Remove the anti-Hermitian drift RK4 accumulates.
        h = (&h + h.adjoint()) * T::from_real(0.5);
        let s = ds * step as f64;
        let growth = h.norm() / norm0;
        if !growth.is_finite() || growth > MAX_GROWTH {
            return Err(Error::IntegratorInstability { s, growth });
        }
        points.push(observe(&h, s));
    }
    Ok((points, h))
}

/// Integrates from a dense operator; also returns the final `H(s)`.
pub fn integrate_dense(
    h: &DenseOperator,
    k: usize,
    ds: f64,
    steps: usize,
) -> Result<(FlowTrace, DenseOperator)> {
    let n = h.n;
    check_order(n, k)?;
    if n > MAX_FLOW_QUBITS {
        return Err(Error::OracleTooLarge {
            n,
            max: MAX_FLOW_QUBITS,
        });
    }
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::InvalidConfig("flow step must be positive".into()));
    }
    let d = projector_diagonal(n, k);
    let real = h.matrix.iter().all(|v| v.im == 0.0);
    let (points, matrix) = if real {
        let hr = h.matrix.map(|v| v.re);
        let (points, m) = integrate(hr, &d, ds, steps)?;
        (points, m.map(|v| Complex64::new(v, 0.0)))
    } else {
        integrate(h.matrix.clone(), &d, ds, steps)?
    };
    Ok((FlowTrace { n, k, ds, points }, DenseOperator { n, matrix }))
}

/// Fixed-step RK4 integration of the flow from `H`, reference `|0…0⟩`.
pub fn integrate_dbf(h: &PauliSum, k: usize, ds: f64, steps: usize) -> Result<FlowTrace> {
    if h.n() > MAX_FLOW_QUBITS {
        return Err(Error::OracleTooLarge {
            n: h.n(),
            max: MAX_FLOW_QUBITS,
        });
    }
    let dense = to_dense(h)?;
    Ok(integrate_dense(&dense, k, ds, steps)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_counts() {
        let p = projector_k(2, 1).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|(s, _)| s.weight() == 1 && s.is_diagonal()));
        assert_eq!(projector_k(3, 3).unwrap().len(), 7);
        assert_eq!(projector_k(6, 2).unwrap().len(), 6 + 15);
        assert!(projector_k(3, 0).is_err());
        assert!(projector_k(3, 4).is_err());
    }

    #[test]
    fn full_projector_diagonal() {
        let d = projector_diagonal(4, 4);
        assert_eq!(d[0], 15.0);
        assert!(d[1..].iter().all(|&v| v == -1.0));
    }

    #[test]
    fn diagonal_operator_is_fixed() {
        let h = PauliSum::from_real(&[("ZZI", 1.0), ("IZZ", 0.5)]).unwrap();
        let t = integrate_dbf(&h, 2, 0.01, 10).unwrap();
        assert_eq!(t.points.len(), 11);
        assert!(t
            .points
            .iter()
            .all(|p| p.energy == 1.5 && p.variance == 0.0));
    }

    #[test]
    fn oversized_step_is_reported() {
        let h = PauliSum::from_real(&[("XX", 3.0), ("ZI", 1.0), ("IZ", 2.0)]).unwrap();
        assert!(matches!(
            integrate_dbf(&h, 2, 10.0, 50),
            Err(Error::IntegratorInstability { .. })
        ));
    }
}
