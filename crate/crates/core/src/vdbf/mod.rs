//! Variational double bracket flow.
//!
//! Each iteration builds the 1-body flow generator `G = Σᵢ[H, Zᵢ]`, ranks its Pauli
//! strings by energy gradient once, then rotates `H` by the top `n_rots` of them in order,
//! each by the angle minimizing ⟨0|H|0⟩ along that direction. After every rotation the
//! operator is clipped at ε and the energy (and optionally variance) carried by the
//! deleted terms is accumulated as a correction.

mod observables;
mod trajectory;

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, HERMITIAN_TOL};

pub use observables::{connected_correlation, measure_observable, replay};
pub use trajectory::{
    fmt_f64, read_iterations_csv, read_rotations_csv, write_iterations_csv, write_trajectory_csv,
    IterationRecord, RotationRecord, Termination, Trajectory, ITERATIONS_HEADER, TRAJECTORY_HEADER,
};

/// Rotations with a smaller optimal angle are recorded but not applied.
pub const ZERO_ANGLE: f64 = 1e-12;
/// A vanished generator with more reference variance than this is reported as stalled.
pub const STALL_VARIANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VdbfConfig {
    /// Clip threshold applied after every rotation.
    pub epsilon: f64,
    pub n_rots: usize,
    pub max_iter: usize,
    /// Stop once the 2-norm of the gradient vector falls below this.
    pub conv_thresh: f64,
    /// Clip threshold for the flow generator.
    pub gen_clip: f64,
    pub track_variance: bool,
    /// Evaluate the reference variance every this many iterations.
    pub variance_stride: usize,
    /// Optional wall-clock cap in seconds.
    pub max_wall_time: Option<f64>,
}

impl Default for VdbfConfig {
    fn default() -> Self {
        VdbfConfig {
            epsilon: 1e-2,
            n_rots: 100,
            max_iter: 100,
            conv_thresh: 1e-3,
            gen_clip: 1e-6,
            track_variance: true,
            variance_stride: 1,
            max_wall_time: None,
        }
    }
}

impl VdbfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0");
        }
        if self.n_rots < 1 {
            return bad("n_rots must be >= 1");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be >= 1");
        }
        if !(self.gen_clip >= 0.0) {
            return bad("gen_clip must be >= 0");
        }
        if !(self.conv_thresh >= 0.0) {
            return bad("conv_thresh must be >= 0");
        }
        if self.variance_stride < 1 {
            return bad("variance_stride must be >= 1");
        }
        if let Some(t) = self.max_wall_time {
            if !(t > 0.0) {
                return bad("max_wall_time must be positive");
            }
        }
        Ok(())
    }
}

fn require_hermitian(h: &PauliSum) -> Result<()> {
    if h.is_hermitian(HERMITIAN_TOL) {
        Ok(())
    } else {
        Err(Error::NotHermitian {
            max_imag: h.max_imag(),
        })
    }
}

/// `clip(Σᵢ [H, Zᵢ], gen_clip)`; purely imaginary for Hermitian `H`.
pub fn build_generator(h: &PauliSum, gen_clip: f64) -> Result<PauliSum> {
    require_hermitian(h)?;
    let n = h.n();
    let zs = (0..n)
        .map(|i| PauliString::single(n, i, Pauli::Z))
        .collect::<Result<Vec<_>>>()?;
    let mut g = PauliSum::new(n)?;
    for (p, c) in h.iter() {
        for (w, &word) in p.x_words().iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let i = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                // [P, Zᵢ] = 2 P Zᵢ whenever P has X or Y on site i.
                let (ph, prod) = p.mul_unchecked(&zs[i]);
                g.add_unchecked(prod, ph.apply(2.0 * c));
            }
        }
    }
    let (g, _) = g.clip(gen_clip);
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub pauli: PauliString,
    /// Generator coefficient `gᵢ`.
    pub coefficient: Complex64,
    /// `gᵢ ⟨0|[Pᵢ, H]|0⟩`.
    pub gradient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    /// Sorted by |gradient| descending, ties by `(x, z)` bits.
    pub candidates: Vec<Candidate>,
    pub gradient_norm: f64,
}

/// Ranks the generator's strings by `gᵢ ⟨0|[Pᵢ, H]|0⟩`.
///
/// ⟨0|[P, H]|0⟩ = 2i Im(⟨P0|H0⟩), and `P|0⟩` is a single basis state, so each gradient is
/// one lookup into the components of `H|0⟩`.
pub fn rank_candidates(g: &PauliSum, h: &PauliSum) -> Result<Ranking> {
    require_hermitian(h)?;
    if g.n() != h.n() {
        return Err(Error::DimensionMismatch {
            left: g.n(),
            right: h.n(),
        });
    }
    let amps = h.zero_amplitudes();
    let mut candidates: Vec<Candidate> = g
        .iter()
        .map(|(p, gc)| {
            let amp = amps.get(p.x_words()).copied().unwrap_or_default();
            let overlap = p.zero_state_phase().conj().apply(amp);
            let comm = Complex64::new(0.0, 2.0 * overlap.im);
            Candidate {
                pauli: *p,
                coefficient: *gc,
                gradient: (gc * comm).re,
            }
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.gradient
            .abs()
            .total_cmp(&a.gradient.abs())
            .then_with(|| a.pauli.cmp(&b.pauli))
    });
    let gradient_norm = candidates
        .iter()
        .map(|c| c.gradient * c.gradient)
        .sum::<f64>()
        .sqrt();
    Ok(Ranking {
        candidates,
        gradient_norm,
    })
}

/// Energy along one rotation direction: `F(θ) = a₀ + A cos θ + B sin θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSolution {
    pub theta: f64,
    pub a0: f64,
    pub a: f64,
    pub b: f64,
}

impl AngleSolution {
    fn from_parts(energy: f64, a: f64, b: f64) -> Self {
        let theta = if a == 0.0 && b == 0.0 {
            0.0
        } else {
            let t = (-b).atan2(-a);
            if t <= -PI {
                PI
            } else {
                t
            }
        };
        AngleSolution {
            theta,
            a0: energy - a,
            a,
            b,
        }
    }

    pub fn energy_at(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.a0 + self.a * c + self.b * s
    }

    /// `F(θ*) = a₀ − √(A² + B²)`.
    pub fn min_energy(&self) -> f64 {
        self.a0 - self.a.hypot(self.b)
    }

    pub fn initial_energy(&self) -> f64 {
        self.a0 + self.a
    }
}

fn solve_from_anticommuting(
    energy: f64,
    p: &PauliString,
    anti: &[(PauliString, Complex64)],
) -> AngleSolution {
    let mut a = 0.0;
    let mut b = 0.0;
    for (k, c) in anti {
        if k.is_diagonal() {
            a += c.re;
        } else if k.x_words() == p.x_words() {
            // i P P_k is diagonal with ⟨0|·|0⟩ = i·φ.
            let (ph, _) = p.mul_unchecked(k);
            b += (crate::pauli::Phase::I * ph).apply(*c).re;
        }
    }
    AngleSolution::from_parts(energy, a, b)
}

/// Angle minimizing ⟨0|U†HU|0⟩ for `U = exp(−iθ/2 P)`.
pub fn optimal_angle(h: &PauliSum, p: &PauliString) -> Result<AngleSolution> {
    let energy = h.expectation_zero()?;
    if p.n() != h.n() {
        return Err(Error::DimensionMismatch {
            left: h.n(),
            right: p.n(),
        });
    }
    let mut anti = Vec::new();
    h.collect_anticommuting(p, &mut anti);
    Ok(solve_from_anticommuting(energy, p, &anti))
}

/// Runs the flow from `H0` with reference `|0…0⟩`; returns the final operator.
pub fn run(h0: &PauliSum, config: &VdbfConfig) -> Result<(PauliSum, Trajectory)> {
    run_with(h0, config, |_| {})
}

/// [`run`] with a callback after each completed iteration.
pub fn run_with<F>(
    h0: &PauliSum,
    config: &VdbfConfig,
    mut on_iteration: F,
) -> Result<(PauliSum, Trajectory)>
where
    F: FnMut(&IterationRecord),
{
    config.validate()?;
    require_hermitian(h0)?;
    let start = Instant::now();
    let elapsed_ms = || start.elapsed().as_secs_f64() * 1e3;
    let out_of_time = || {
        config
            .max_wall_time
            .is_some_and(|cap| start.elapsed().as_secs_f64() >= cap)
    };

    let mut h = h0.clone();
    let initial_norm_sq = h0.frobenius_sq();
    let mut energy = h.diagonal_sum();
    let mut lost_energy = 0.0;
    let mut lost_variance = 0.0;
    let mut discarded = 0.0;
    let mut fully_clipped = false;

    let mut rotations: Vec<RotationRecord> = Vec::new();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let variance_now = |h: &PauliSum| -> Option<f64> {
        config
            .track_variance
            .then(|| crate::pauli::variance_from_amplitudes(&h.zero_amplitudes()))
    };

    let v0 = variance_now(&h);
    iterations.push(IterationRecord {
        iteration: 0,
        raw_energy: energy,
        corrected_energy: energy,
        variance: v0,
        corrected_variance: v0,
        discarded_weight: 0.0,
        gradient_norm: None,
        n_terms: h.len(),
        wall_ms: elapsed_ms(),
        rotations_end: 0,
    });
    on_iteration(iterations.last().unwrap());

    let mut termination = Termination::MaxIterReached;
    let mut final_gradient_norm = None;
    let mut anti = Vec::new();
    let mut touched = Vec::new();

    'outer: for it in 1..=config.max_iter {
        if out_of_time() {
            termination = Termination::WallTimeExceeded;
            break;
        }
        let g = build_generator(&h, config.gen_clip)?;
        let ranking = rank_candidates(&g, &h)?;
        final_gradient_norm = Some(ranking.gradient_norm);
        if g.is_empty() {
            let var = crate::pauli::variance_from_amplitudes(&h.zero_amplitudes());
            termination = if var > STALL_VARIANCE {
                Termination::Stalled
            } else {
                Termination::Converged
            };
            break;
        }
        if ranking.gradient_norm < config.conv_thresh {
            termination = Termination::Converged;
            break;
        }

        for cand in ranking.candidates.iter().take(config.n_rots) {
            let p = &cand.pauli;
            h.collect_anticommuting(p, &mut anti);
            let sol = solve_from_anticommuting(energy, p, &anti);
            touched.clear();
            if sol.theta.abs() >= ZERO_ANGLE {
                h.apply_rotation(p, sol.theta, &anti, &mut touched);
                energy = sol.energy_at(sol.theta);
            }
            let (report, removed) = if fully_clipped {
                h.clip_keys(&touched, config.epsilon)
            } else {
                fully_clipped = true;
                h.clip_in_place(config.epsilon)
            };
            energy -= report.removed_energy;
            lost_energy += report.removed_energy;
            discarded += report.removed_norm_sq;
            let dv = if config.track_variance && !removed.is_empty() {
                h.variance_delta(&removed)?
            } else {
                0.0
            };
            lost_variance += dv;
            rotations.push(RotationRecord {
                iteration: it,
                generator: *p,
                angle: sol.theta,
                energy_after: energy,
                lost_energy_increment: report.removed_energy,
                lost_variance_increment: dv,
                terms_after: h.len(),
                discarded_weight: discarded,
                wall_ms: elapsed_ms(),
            });
            if out_of_time() {
                termination = Termination::WallTimeExceeded;
                push_iteration(
                    &mut iterations,
                    &h,
                    it,
                    lost_energy,
                    lost_variance,
                    discarded,
                    &ranking,
                    None,
                    &rotations,
                    elapsed_ms(),
                );
                on_iteration(iterations.last().unwrap());
                break 'outer;
            }
        }

        energy = h.diagonal_sum();
        let variance = if it % config.variance_stride == 0 {
            variance_now(&h)
        } else {
            None
        };
        push_iteration(
            &mut iterations,
            &h,
            it,
            lost_energy,
            lost_variance,
            discarded,
            &ranking,
            variance,
            &rotations,
            elapsed_ms(),
        );
        on_iteration(iterations.last().unwrap());
    }

    let traj = Trajectory {
        rotations,
        iterations,
        termination,
        final_gradient_norm,
        initial_norm_sq,
    };
    Ok((h, traj))
}

#[allow(clippy::too_many_arguments)]
fn push_iteration(
    iterations: &mut Vec<IterationRecord>,
    h: &PauliSum,
    it: usize,
    lost_energy: f64,
    lost_variance: f64,
    discarded: f64,
    ranking: &Ranking,
    variance: Option<f64>,
    rotations: &[RotationRecord],
    wall_ms: f64,
) {
    let raw = h.diagonal_sum();
    iterations.push(IterationRecord {
        iteration: it,
        raw_energy: raw,
        corrected_energy: raw + lost_energy,
        variance,
        corrected_variance: variance.map(|v| v + lost_variance),
        discarded_weight: discarded,
        gradient_norm: Some(ranking.gradient_norm),
        n_terms: h.len(),
        wall_ms,
        rotations_end: rotations.len(),
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::from_real(terms).unwrap()
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn generator_of_diagonal_is_empty() {
        let h = sum(&[("ZZI", 1.0), ("IZZ", -0.5), ("ZII", 0.2)]);
        assert!(build_generator(&h, 0.0).unwrap().is_empty());
    }

    #[test]
    fn generator_single_qubit() {
        let g = build_generator(&sum(&[("X", 1.0)]), 0.0).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.coeff(&ps("Y")), Complex64::new(0.0, -2.0));
        assert!(g.is_anti_hermitian(1e-15));
    }

    #[test]
    fn eigenstate_gradients_vanish() {
        let h = sum(&[("Z", 1.0)]);
        let g = PauliSum::from_terms(
            1,
            [
                (ps("Y"), Complex64::new(0.0, 1.0)),
                (ps("X"), Complex64::new(0.0, 1.0)),
            ],
        )
        .unwrap();
        let r = rank_candidates(&g, &h).unwrap();
        assert!(r.candidates.iter().all(|c| c.gradient == 0.0));
        assert_eq!(r.gradient_norm, 0.0);
    }

    #[test]
    fn optimal_angle_single_qubit() {
        let sol = optimal_angle(&sum(&[("Z", 1.0)]), &ps("Y")).unwrap();
        assert_eq!(sol.theta, PI);
        assert_eq!(sol.min_energy(), -1.0);
        assert_eq!(sol.initial_energy(), 1.0);
    }

    #[test]
    fn already_minimal_direction() {
        let sol = optimal_angle(&sum(&[("Z", -1.0)]), &ps("Y")).unwrap();
        assert_eq!(sol.theta, 0.0);
        assert_eq!(sol.min_energy(), -1.0);
    }

    #[test]
    fn degenerate_direction() {
        // P commutes with everything in H
        let sol = optimal_angle(&sum(&[("ZZ", 1.0)]), &ps("ZI")).unwrap();
        assert_eq!(sol.theta, 0.0);
        assert_eq!(sol.min_energy(), 1.0);
    }

    #[test]
    fn diagonal_start_converges_immediately() {
        let h = sum(&[("ZZ", 1.0), ("ZI", -0.3)]);
        let (hf, t) = run(&h, &VdbfConfig::default()).unwrap();
        assert_eq!(t.termination, Termination::Converged);
        assert!(t.rotations.is_empty());
        assert_eq!(t.iterations.len(), 1);
        assert_eq!(t.last().corrected_energy, h.expectation_zero().unwrap());
        assert_eq!(hf, h);
    }

    #[test]
    fn single_qubit_flow() {
        let h = sum(&[("Z", 0.4), ("X", 0.3)]);
        let cfg = VdbfConfig {
            epsilon: 0.0,
            gen_clip: 0.0,
            ..Default::default()
        };
        let (_, t) = run(&h, &cfg).unwrap();
        assert_eq!(t.termination, Termination::Converged);
        assert!((t.last().raw_energy + 0.5).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(VdbfConfig {
            n_rots: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VdbfConfig {
            epsilon: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VdbfConfig {
            variance_stride: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VdbfConfig::default().validate().is_ok());
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let h = PauliSum::single(ps("X"), Complex64::new(0.0, 1.0));
        assert!(run(&h, &VdbfConfig::default()).is_err());
    }
}
