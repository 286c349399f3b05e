use crate::error::{Error, Result};
use crate::models::spin_dot;
use crate::pauli::{Pauli, PauliString, PauliSum};

use super::ZERO_ANGLE;

/// Re-applies a rotation sequence to `op`, clipping at `eps` after each step exactly as
/// the flow loop does.
pub fn replay(op: &PauliSum, steps: &[(PauliString, f64)], eps: f64) -> Result<PauliSum> {
    let mut o = op.clone();
    for (p, theta) in steps {
        if theta.abs() >= ZERO_ANGLE {
            o.evolve_in_place(p, *theta)?;
        }
        o.clip_in_place(eps);
    }
    Ok(o)
}

/// ⟨0|U† O U|0⟩ for the unitary built from `steps`.
pub fn measure_observable(
    op: &PauliSum,
    steps: &[(PauliString, f64)],
    obs_clip: f64,
) -> Result<f64> {
    replay(op, steps, obs_clip)?.expectation_zero()
}

/// `⟨Sᵢ·Sⱼ⟩ − ⟨Sᵢ⟩·⟨Sⱼ⟩` in the rotated reference state.
///
/// `flipped` lists the qubits X-conjugated when the reference was folded into `|0…0⟩`;
/// the observables are folded the same way before the rotations are applied.
pub fn connected_correlation(
    n: usize,
    flipped: &[usize],
    steps: &[(PauliString, f64)],
    i: usize,
    j: usize,
    obs_clip: f64,
) -> Result<f64> {
    for s in [i, j] {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n });
        }
    }
    let measure = |op: PauliSum| -> Result<f64> {
        measure_observable(&op.conjugate_by_x(flipped)?, steps, obs_clip)
    };
    let dot = measure(spin_dot(n, i, j, 1.0)?)?;
    let mut mean = 0.0;
    let spin = |site: usize, op: Pauli| -> Result<f64> {
        let s = PauliSum::from_terms(n, [(PauliString::single(n, site, op)?, 0.5.into())])?;
        measure(s)
    };
    for op in [Pauli::X, Pauli::Y, Pauli::Z] {
        let si = spin(i, op)?;
        let sj = if i == j { si } else { spin(j, op)? };
        mean += si * sj;
    }
    Ok(dot - mean)
}
