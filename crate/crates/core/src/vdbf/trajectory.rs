use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliString;

#[derive(Clone, Debug, PartialEq)]
pub struct RotationRecord {
    pub iteration: usize,
    pub generator: PauliString,
    /// Full-angle convention, in (−π, π].
    pub angle: f64,
    /// Raw ⟨0|H|0⟩ after the rotation and its clip.
    pub energy_after: f64,
    pub lost_energy_increment: f64,
    pub lost_variance_increment: f64,
    pub terms_after: usize,
    /// Cumulative discarded weight after this rotation's clip.
    pub discarded_weight: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub raw_energy: f64,
    pub corrected_energy: f64,
    pub variance: Option<f64>,
    pub corrected_variance: Option<f64>,
    pub discarded_weight: f64,
    /// Gradient norm measured at the start of this iteration; `None` for the initial point.
    pub gradient_norm: Option<f64>,
    pub n_terms: usize,
    pub wall_ms: f64,
    /// Number of rotation records up to and including this iteration.
    pub rotations_end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterReached,
    /// The generator vanished while the reference still had nonzero variance.
    Stalled,
    WallTimeExceeded,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::Converged => "converged",
            Termination::MaxIterReached => "max_iter_reached",
            Termination::Stalled => "stalled",
            Termination::WallTimeExceeded => "wall_time_exceeded",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub rotations: Vec<RotationRecord>,
    /// Iteration 0 is the unrotated starting point.
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    /// Gradient norm of the last generator built (the one that stopped the run, if any).
    pub final_gradient_norm: Option<f64>,
    pub initial_norm_sq: f64,
}

impl Trajectory {
    pub fn last(&self) -> &IterationRecord {
        self.iterations
            .last()
            .expect("trajectory always has an initial record")
    }

    /// `(generator, angle)` for every recorded rotation, in order.
    pub fn steps(&self) -> Vec<(PauliString, f64)> {
        self.rotations
            .iter()
            .map(|r| (r.generator, r.angle))
            .collect()
    }

    /// `(variance, energy)` pairs at every iteration where the variance was evaluated.
    pub fn variance_points(&self, corrected: bool) -> Vec<(f64, f64)> {
        self.iterations
            .iter()
            .filter_map(|it| {
                if corrected {
                    Some((it.corrected_variance?, it.corrected_energy))
                } else {
                    Some((it.variance?, it.raw_energy))
                }
            })
            .collect()
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "iter",
    "rot",
    "generator_text",
    "angle",
    "energy",
    "corrected_energy",
    "variance",
    "corrected_variance",
    "n_terms",
    "discarded_weight",
    "wall_ms",
];

/// One row per rotation plus a leading row for the unrotated operator. Variance columns
/// are filled only on the last row of an iteration whose variance was evaluated.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    let mut lost = 0.0;
    let mut start = 0;
    for it in &traj.iterations {
        let rows = &traj.rotations[start..it.rotations_end];
        if rows.is_empty() {
            w.write_record([
                it.iteration.to_string(),
                start.to_string(),
                String::new(),
                String::new(),
                fmt_f64(it.raw_energy),
                fmt_f64(it.corrected_energy),
                opt(it.variance),
                opt(it.corrected_variance),
                it.n_terms.to_string(),
                fmt_f64(it.discarded_weight),
                fmt_f64(it.wall_ms),
            ])?;
        }
        for (k, r) in rows.iter().enumerate() {
            lost += r.lost_energy_increment;
            let last = k + 1 == rows.len();
            w.write_record([
                r.iteration.to_string(),
                (start + k + 1).to_string(),
                r.generator.to_string(),
                fmt_f64(r.angle),
                fmt_f64(r.energy_after),
                fmt_f64(r.energy_after + lost),
                if last {
                    opt(it.variance)
                } else {
                    String::new()
                },
                if last {
                    opt(it.corrected_variance)
                } else {
                    String::new()
                },
                r.terms_after.to_string(),
                fmt_f64(r.discarded_weight),
                fmt_f64(r.wall_ms),
            ])?;
        }
        start = it.rotations_end;
    }
    w.flush()?;
    Ok(())
}

/// `(iteration, generator, angle)` for every rotation row of a trajectory CSV.
pub fn read_rotations_csv<R: Read>(input: R) -> Result<Vec<(usize, PauliString, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Io(format!("trajectory CSV lacks column {name}")))
    };
    let (ci, cg, ca) = (col("iter")?, col("generator_text")?, col("angle")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let g = &rec[cg];
        if g.is_empty() {
            continue;
        }
        let it: usize = rec[ci]
            .parse()
            .map_err(|e| Error::Io(format!("bad iter: {e}")))?;
        let angle: f64 = rec[ca]
            .parse()
            .map_err(|e| Error::Io(format!("bad angle: {e}")))?;
        out.push((it, g.parse()?, angle));
    }
    Ok(out)
}

pub const ITERATIONS_HEADER: [&str; 9] = [
    "iter",
    "raw_energy",
    "corrected_energy",
    "variance",
    "corrected_variance",
    "discarded_weight",
    "gradient_norm",
    "n_terms",
    "wall_ms",
];

pub fn write_iterations_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ITERATIONS_HEADER)?;
    for it in &traj.iterations {
        w.write_record([
            it.iteration.to_string(),
            fmt_f64(it.raw_energy),
            fmt_f64(it.corrected_energy),
            opt(it.variance),
            opt(it.corrected_variance),
            fmt_f64(it.discarded_weight),
            opt(it.gradient_norm),
            it.n_terms.to_string(),
            fmt_f64(it.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_iterations_csv<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let parse_f = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|e| Error::Io(format!("bad number {s:?}: {e}")))
    };
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            parse_f(s).map(Some)
        }
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != ITERATIONS_HEADER.len() {
            return Err(Error::Io(format!(
                "expected {} columns, got {}",
                ITERATIONS_HEADER.len(),
                rec.len()
            )));
        }
        out.push(IterationRecord {
            iteration: rec[0]
                .parse()
                .map_err(|e| Error::Io(format!("bad iter: {e}")))?,
            raw_energy: parse_f(&rec[1])?,
            corrected_energy: parse_f(&rec[2])?,
            variance: parse_opt(&rec[3])?,
            corrected_variance: parse_opt(&rec[4])?,
            discarded_weight: parse_f(&rec[5])?,
            gradient_norm: parse_opt(&rec[6])?,
            n_terms: rec[7]
                .parse()
                .map_err(|e| Error::Io(format!("bad n_terms: {e}")))?,
            wall_ms: parse_f(&rec[8])?,
            rotations_end: 0,
        });
    }
    Ok(out)
}
