use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use vdbf::analysis::{
    dw_extrapolate, log_log_slope, variance_extrapolate_points, ExtrapolationResult, WindowOptions,
};
use vdbf::flow::{integrate_dbf, FlowTrace, MAX_FLOW_QUBITS};
use vdbf::models::{fold_reference, format_occupation, Boundary, LatticeSpec, ModelKind};
use vdbf::oracle::{ground_energy, MAX_DENSE_QUBITS};
use vdbf::vdbf::{
    connected_correlation, fmt_f64, read_iterations_csv, read_rotations_csv, run as vdbf_run,
    write_iterations_csv, write_trajectory_csv, IterationRecord, Termination,
};

use crate::config::{RunConfig, VdbfBlock};
use crate::output::{io_error, write_atomic, write_json, write_text};
use crate::{CliError, Overrides};

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(d) = &o.output_dir {
        cfg.output_dir = Some(d.clone());
    }
    if let Some(l) = &o.label {
        cfg.label = Some(l.clone());
    }
    if o.max_wall_time.is_some() {
        cfg.max_wall_time = o.max_wall_time;
    }
    let v = &mut cfg.vdbf;
    v.epsilon = o.epsilon.or(v.epsilon);
    v.n_rots = o.n_rots.or(v.n_rots);
    v.max_iter = o.max_iter.or(v.max_iter);
    v.conv_thresh = o.conv_thresh.or(v.conv_thresh);
    v.gen_clip = o.gen_clip.or(v.gen_clip);
    v.variance_stride = o.variance_stride.or(v.variance_stride);
    if o.no_track_variance {
        v.track_variance = Some(false);
    }
    cfg.model_spec()?;
    cfg.vdbf_config()?;
    Ok(())
}

/// Copy of `cfg` with every flow parameter spelled out.
fn resolved(cfg: &RunConfig) -> Result<RunConfig, CliError> {
    let v = cfg.vdbf_config()?;
    let mut out = cfg.clone();
    out.label = Some(cfg.label());
    out.output_dir = Some(cfg.output_dir());
    if let ModelKind::Heisenberg { coupling } = cfg.model_spec()?.kind {
        out.model.coupling = Some(coupling);
    }
    out.vdbf = VdbfBlock {
        epsilon: Some(v.epsilon),
        n_rots: Some(v.n_rots),
        max_iter: Some(v.max_iter),
        conv_thresh: Some(v.conv_thresh),
        gen_clip: Some(v.gen_clip),
        track_variance: Some(v.track_variance),
        variance_stride: Some(v.variance_stride),
    };
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
struct FitSummary {
    estimate: f64,
    uncertainty: f64,
    estimate_per_site: f64,
    window_start: usize,
    n_points: usize,
    r_squared: f64,
}

impl FitSummary {
    fn new(r: &ExtrapolationResult, n_sites: usize) -> FitSummary {
        FitSummary {
            estimate: r.estimate,
            uncertainty: r.uncertainty,
            estimate_per_site: r.estimate / n_sites as f64,
            window_start: r.window_start,
            n_points: r.n_points,
            r_squared: r.r_squared,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct Summary {
    label: String,
    epsilon: f64,
    n_sites: usize,
    n_qubits: usize,
    reference_occupation: String,
    termination: Termination,
    iterations: usize,
    rotations: usize,
    raw_energy: f64,
    corrected_energy: f64,
    corrected_energy_per_site: f64,
    variance: Option<f64>,
    corrected_variance: Option<f64>,
    discarded_weight: f64,
    n_terms: usize,
    final_gradient_norm: Option<f64>,
    exact_energy: Option<f64>,
    wall_seconds: f64,
    extrapolation_corrected: Option<FitSummary>,
    extrapolation_raw: Option<FitSummary>,
}

fn variance_points(records: &[IterationRecord], corrected: bool) -> Vec<(f64, f64)> {
    records
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

/// Text report for both fits plus the results that succeeded.
fn extrapolation_report(
    records: &[IterationRecord],
    opts: &WindowOptions,
    n_sites: usize,
    kinds: &[bool],
) -> (String, Vec<Option<ExtrapolationResult>>) {
    let mut text = String::new();
    let mut results = Vec::new();
    for &corrected in kinds {
        let name = if corrected { "corrected" } else { "raw" };
        let _ = writeln!(text, "[{name}]");
        match variance_extrapolate_points(&variance_points(records, corrected), opts) {
            Ok(r) => {
                text.push_str(&r.to_string());
                let _ = writeln!(
                    text,
                    "estimate_per_site: {:.12}",
                    r.estimate / n_sites as f64
                );
                results.push(Some(r));
            }
            Err(e) => {
                let _ = writeln!(text, "unavailable: {e}");
                results.push(None);
            }
        }
        text.push('\n');
    }
    (text, results)
}

/// Runs one configuration and writes its artifacts into `dir`.
fn run_one(cfg: &RunConfig, dir: &Path) -> Result<Summary, CliError> {
    let spec = cfg.model_spec()?;
    let vcfg = cfg.vdbf_config()?;
    let start = Instant::now();
    let h = spec.hamiltonian()?;
    let occupation = spec.reference()?;
    let folded = fold_reference(&h, &occupation)?;
    let (_, traj) = vdbf_run(&folded.h0, &vcfg)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let exact_energy = if spec.n_qubits() <= MAX_DENSE_QUBITS {
        Some(ground_energy(&h)?)
    } else {
        None
    };

    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    write_text(&dir.join("config.toml"), &resolved(cfg)?.to_toml())?;
    write_atomic(&dir.join("trajectory.csv"), |w| {
        Ok(write_trajectory_csv(&traj, w)?)
    })?;
    write_atomic(&dir.join("iterations.csv"), |w| {
        Ok(write_iterations_csv(&traj, w)?)
    })?;

    let n_sites = spec.n_sites();
    let opts = cfg.window_options(n_sites);
    let (report, fits) = extrapolation_report(&traj.iterations, &opts, n_sites, &[true, false]);
    write_text(&dir.join("extrapolation.txt"), &report)?;

    let last = traj.last();
    let summary = Summary {
        label: cfg.label(),
        epsilon: vcfg.epsilon,
        n_sites,
        n_qubits: spec.n_qubits(),
        reference_occupation: format_occupation(&occupation),
        termination: traj.termination,
        iterations: last.iteration,
        rotations: traj.rotations.len(),
        raw_energy: last.raw_energy,
        corrected_energy: last.corrected_energy,
        corrected_energy_per_site: last.corrected_energy / n_sites as f64,
        variance: last.variance,
        corrected_variance: last.corrected_variance,
        discarded_weight: last.discarded_weight,
        n_terms: last.n_terms,
        final_gradient_norm: traj.final_gradient_norm,
        exact_energy,
        wall_seconds,
        extrapolation_corrected: fits[0].as_ref().map(|r| FitSummary::new(r, n_sites)),
        extrapolation_raw: fits[1].as_ref().map(|r| FitSummary::new(r, n_sites)),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn run(config: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config)?;
    apply_overrides(&mut cfg, overrides)?;
    let dir = cfg.output_dir();
    let s = run_one(&cfg, &dir)?;
    println!(
        "{}: {} after {} iterations, energy {:.12} (raw {:.12}), {} terms",
        s.label, s.termination, s.iterations, s.corrected_energy, s.raw_energy, s.n_terms
    );
    if let Some(f) = &s.extrapolation_corrected {
        println!(
            "zero-variance estimate {:.12} ± {:.2e}",
            f.estimate, f.uncertainty
        );
    }
    if let Some(e) = s.exact_energy {
        println!("exact ground energy {e:.12}");
    }
    println!("artifacts in {}", dir.display());
    if s.termination == Termination::WallTimeExceeded {
        return Err(CliError::WallTime(format!(
            "partial trajectory written to {}",
            dir.display()
        )));
    }
    Ok(())
}

fn epsilon_dir(eps: f64) -> String {
    format!("eps_{eps:e}")
}

pub fn sweep(config: &Path, epsilons: &[f64], overrides: &Overrides) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config)?;
    apply_overrides(&mut cfg, overrides)?;
    let epsilons: Vec<f64> = if !epsilons.is_empty() {
        epsilons.to_vec()
    } else {
        cfg.sweep
            .as_ref()
            .map(|s| s.epsilons.clone())
            .unwrap_or_default()
    };
    if epsilons.is_empty() {
        return Err(CliError::Config(
            "sweep.epsilons: no thresholds given".into(),
        ));
    }
    let mut subs = Vec::with_capacity(epsilons.len());
    for &eps in &epsilons {
        let mut sub = cfg.clone();
        sub.vdbf.epsilon = Some(eps);
        sub.label = Some(format!("{}-{}", cfg.label(), epsilon_dir(eps)));
        sub.vdbf_config()
            .map_err(|e| CliError::Config(format!("sweep.epsilons: {e}")))?;
        subs.push(sub);
    }
    let base = cfg.output_dir();
    let outcomes: Vec<Result<Summary, CliError>> = subs
        .par_iter()
        .zip(&epsilons)
        .map(|(sub, &eps)| run_one(sub, &base.join(epsilon_dir(eps))))
        .collect();

    let mut table = String::from(
        "epsilon,status,termination,raw_energy,corrected_energy,discarded_weight,n_terms\n",
    );
    let mut report = String::new();
    let mut finals = Vec::new();
    let mut growth = Vec::new();
    let mut failed = 0;
    let mut capped = 0;
    for (&eps, outcome) in epsilons.iter().zip(&outcomes) {
        match outcome {
            Ok(s) => {
                let status = if s.termination == Termination::WallTimeExceeded {
                    capped += 1;
                    "partial"
                } else {
                    finals.push((s.discarded_weight, s.corrected_energy));
                    if eps > 0.0 {
                        growth.push((1.0 / eps, s.n_terms as f64));
                    }
                    "ok"
                };
                let _ = writeln!(
                    table,
                    "{},{status},{},{},{},{},{}",
                    fmt_f64(eps),
                    s.termination,
                    fmt_f64(s.raw_energy),
                    fmt_f64(s.corrected_energy),
                    fmt_f64(s.discarded_weight),
                    s.n_terms
                );
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(report, "run epsilon={eps:e} failed: {e}");
                let _ = writeln!(table, "{},failed,,,,,", fmt_f64(eps));
            }
        }
    }
    write_text(&base.join("sweep.csv"), &table)?;

    let mut growth_csv = String::from("epsilon,inverse_epsilon,n_terms\n");
    for &(inv, terms) in &growth {
        let _ = writeln!(
            growth_csv,
            "{},{},{}",
            fmt_f64(1.0 / inv),
            fmt_f64(inv),
            terms
        );
    }
    write_text(&base.join("growth.csv"), &growth_csv)?;

    let n_sites = cfg.model_spec()?.n_sites();
    let _ = writeln!(
        report,
        "runs: {} ok, {capped} partial, {failed} failed",
        finals.len()
    );
    match log_log_slope(&growth) {
        Ok(slope) => {
            let _ = writeln!(report, "log(n_terms) vs log(1/epsilon) slope: {slope:.4}");
        }
        Err(e) => {
            let _ = writeln!(
                report,
                "log(n_terms) vs log(1/epsilon) slope unavailable: {e}"
            );
        }
    }
    report.push_str("\n[discarded_weight]\n");
    match dw_extrapolate(&finals) {
        Ok(r) => {
            report.push_str(&r.to_string());
            let _ = writeln!(
                report,
                "estimate_per_site: {:.12}",
                r.estimate / n_sites as f64
            );
        }
        Err(e) => {
            let _ = writeln!(report, "unavailable: {e}");
        }
    }
    write_text(&base.join("sweep_report.txt"), &report)?;
    print!("{report}");
    println!("artifacts in {}", base.display());
    if failed > 0 {
        Err(CliError::Runtime(format!(
            "{failed} of {} sweep runs failed",
            epsilons.len()
        )))
    } else if capped > 0 {
        Err(CliError::WallTime(format!(
            "{capped} sweep runs stopped early"
        )))
    } else {
        Ok(())
    }
}

pub fn flow(
    config: &Path,
    k_list: &[usize],
    ds: Option<f64>,
    steps: Option<usize>,
    threshold: f64,
    output_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.model_spec()?;
    let n = spec.n_qubits();
    if n > MAX_FLOW_QUBITS {
        return Err(CliError::Config(format!(
            "model: flow needs at most {MAX_FLOW_QUBITS} qubits, model has {n}"
        )));
    }
    let block = cfg.flow.as_ref();
    let k_list: Vec<usize> = if !k_list.is_empty() {
        k_list.to_vec()
    } else {
        block
            .map(|f| f.k.clone())
            .unwrap_or_else(|| (1..=n).collect())
    };
    let ds = ds
        .or(block.map(|f| f.ds))
        .ok_or_else(|| CliError::Config("flow.ds: required".into()))?;
    let steps = steps
        .or(block.map(|f| f.steps))
        .ok_or_else(|| CliError::Config("flow.steps: required".into()))?;
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(CliError::Config("flow.ds: must be positive".into()));
    }
    if let Some(&k) = k_list.iter().find(|&&k| k < 1 || k > n) {
        return Err(CliError::Config(format!(
            "flow.k: order {k} outside 1..={n}"
        )));
    }
    let dir = output_dir.unwrap_or_else(|| cfg.output_dir());
    let h = spec.hamiltonian()?;
    let folded = fold_reference(&h, &spec.reference()?)?;
    let exact = ground_energy(&h)?;

    let traces: Vec<Result<FlowTrace, vdbf::Error>> = k_list
        .par_iter()
        .map(|&k| integrate_dbf(&folded.h0, k, ds, steps))
        .collect();
    let mut report = String::new();
    let _ = writeln!(
        report,
        "n_qubits: {n}\nds: {ds:e}\nsteps: {steps}\nexact_energy: {exact:.12}"
    );
    let _ = writeln!(report, "threshold: {threshold:e}");
    let mut failed = 0;
    for (&k, trace) in k_list.iter().zip(&traces) {
        match trace {
            Ok(t) => {
                let path = dir.join(format!("flow_k{k}.csv"));
                write_atomic(&path, |w| Ok(t.write_csv(w, Some(exact))?))?;
                let last = t.points.last().expect("trace has an initial point");
                let reached = match t.steps_to_threshold(exact, threshold) {
                    Some(s) => s.to_string(),
                    None => "not reached".into(),
                };
                let _ = writeln!(
                    report,
                    "k={k}: final energy {:.12}, error {:.3e}, steps to threshold {reached}",
                    last.energy,
                    last.energy - exact
                );
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(report, "k={k}: failed: {e}");
            }
        }
    }
    write_text(&dir.join("flow_report.txt"), &report)?;
    print!("{report}");
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} flow integrations failed"
        )));
    }
    Ok(())
}

fn load_run_config(run_dir: &Path) -> Result<RunConfig, CliError> {
    let path = run_dir.join("config.toml");
    if !path.exists() {
        return Err(CliError::Runtime(format!(
            "{}: not a run directory (no config.toml)",
            run_dir.display()
        )));
    }
    RunConfig::load(&path)
}

fn parse_pair(s: &str, n_sites: usize) -> Result<(usize, usize), CliError> {
    let bad = || {
        CliError::Config(format!(
            "pairs: cannot parse {s:?}; expected 1-based sites like 1-2"
        ))
    };
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    for site in [a, b] {
        if site < 1 || site > n_sites {
            return Err(CliError::Config(format!(
                "pairs: site {site} outside 1..={n_sites}"
            )));
        }
    }
    Ok((a - 1, b - 1))
}

/// Lattice distance between two sites, using the minimum image along periodic directions.
fn site_distance(lattice: &LatticeSpec, i: usize, j: usize) -> usize {
    let coords = |s: usize| {
        (0..lattice.rows())
            .flat_map(|r| (0..lattice.cols()).map(move |c| (r, c)))
            .find(|&(r, c)| lattice.site_index(r, c) == s)
            .expect("site on lattice")
    };
    let ((ri, ci), (rj, cj)) = (coords(i), coords(j));
    let axis = |a: usize, b: usize, len: usize| {
        let d = a.abs_diff(b);
        match lattice.boundary() {
            Boundary::Periodic => d.min(len - d),
            Boundary::Open => d,
        }
    };
    axis(ri, rj, lattice.rows()) + axis(ci, cj, lattice.cols())
}

pub fn correlate(
    run_dir: &Path,
    pairs: &[String],
    from: Option<usize>,
    obs_clip: f64,
) -> Result<(), CliError> {
    let cfg = load_run_config(run_dir)?;
    let spec = cfg.model_spec()?;
    if !matches!(spec.kind, ModelKind::Heisenberg { .. }) {
        return Err(CliError::Config(
            "model.kind: correlations are defined for spin models only".into(),
        ));
    }
    let n = spec.n_sites();
    let mut site_pairs = pairs
        .iter()
        .map(|p| parse_pair(p, n))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(f) = from {
        if f < 1 || f > n {
            return Err(CliError::Config(format!("from: site {f} outside 1..={n}")));
        }
        site_pairs.extend((1..=n).filter(|&j| j != f).map(|j| (f - 1, j - 1)));
    }
    if site_pairs.is_empty() {
        return Err(CliError::Config("pairs: no site pairs given".into()));
    }
    if !(obs_clip >= 0.0 && obs_clip.is_finite()) {
        return Err(CliError::Config("obs_clip: must be non-negative".into()));
    }
    let path = run_dir.join("trajectory.csv");
    let file = File::open(&path).map_err(|e| io_error(&path, e))?;
    let steps: Vec<_> = read_rotations_csv(file)?
        .into_iter()
        .map(|(_, p, theta)| (p, theta))
        .collect();
    let flipped = fold_reference(&spec.hamiltonian()?, &spec.reference()?)?.flipped_sites;

    let values: Vec<Result<f64, vdbf::Error>> = site_pairs
        .par_iter()
        .map(|&(i, j)| connected_correlation(n, &flipped, &steps, i, j, obs_clip))
        .collect();
    let mut table = String::from("site_i,site_j,distance,correlation\n");
    for (&(i, j), v) in site_pairs.iter().zip(values) {
        let v = v?;
        let d = site_distance(&spec.lattice, i, j);
        let _ = writeln!(table, "{},{},{d},{}", i + 1, j + 1, fmt_f64(v));
    }
    write_text(&run_dir.join("correlations.csv"), &table)?;
    print!("{table}");
    Ok(())
}

pub fn extrapolate(
    run_dir: &Path,
    min_window: Option<usize>,
    literal_r_squared: bool,
    per_site_score: bool,
    raw: bool,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = load_run_config(run_dir)?;
    let n_sites = cfg.model_spec()?.n_sites();
    let mut opts = cfg.window_options(n_sites);
    if let Some(m) = min_window {
        opts.min_window = m;
    }
    opts.literal_r_squared |= literal_r_squared;
    if per_site_score {
        opts.normalize_by = Some(n_sites as f64);
    }
    let path = run_dir.join("iterations.csv");
    let file = File::open(&path).map_err(|e| io_error(&path, e))?;
    let records = read_iterations_csv(file)?;
    let (report, fits) = extrapolation_report(&records, &opts, n_sites, &[!raw]);
    if let Some(out) = output {
        write_text(&out, &report)?;
    }
    std::io::stdout()
        .write_all(report.as_bytes())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if fits[0].is_none() {
        return Err(CliError::Runtime("extrapolation failed".into()));
    }
    Ok(())
}
