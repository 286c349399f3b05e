//! Extrapolation of energies to zero variance or zero discarded weight.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vdbf::Trajectory;

/// Relative singular-value cutoff below which a design matrix counts as rank deficient.
const RANK_TOL: f64 = 1e-13;
/// Abscissae spanning more decades than this get a conditioning warning.
const MAX_DECADES: f64 = 6.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub degree: usize,
    /// Polynomial coefficients, constant term first.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Standard error of the intercept; `None` without residual degrees of freedom.
    pub intercept_stderr: Option<f64>,
    pub n_points: usize,
    pub ill_conditioned: bool,
}

impl FitResult {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

fn spans_many_decades(points: &[(f64, f64)]) -> bool {
    let mags: Vec<f64> = points
        .iter()
        .map(|p| p.0.abs())
        .filter(|&x| x > 0.0)
        .collect();
    let (lo, hi) = mags.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    !mags.is_empty() && (hi / lo).log10() > MAX_DECADES
}

/// Ordinary least-squares polynomial fit of degree 1 or 2.
pub fn polyfit(points: &[(f64, f64)], degree: usize) -> Result<FitResult> {
    if !(1..=2).contains(&degree) {
        return Err(Error::DegenerateFit(format!("unsupported degree {degree}")));
    }
    let n = points.len();
    if n < degree + 2 {
        return Err(Error::InsufficientData {
            needed: degree + 2,
            got: n,
        });
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegenerateFit("non-finite data".into()));
    }
    let x = DMatrix::from_fn(n, degree + 1, |i, j| points[i].0.powi(j as i32));
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::DegenerateFit(
            "design matrix is rank deficient".into(),
        ));
    }
    let beta = svd
        .solve(&y, RANK_TOL * smax)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;

    let resid = &y - &x * &beta;
    let ss_res = resid.norm_squared();
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let dof = n - degree - 1;
    let intercept_stderr = if dof > 0 {
        let s2 = ss_res / dof as f64;
        (x.transpose() * &x)
            .try_inverse()
            .map(|inv| (s2 * inv[(0, 0)]).max(0.0).sqrt())
    } else {
        None
    };

    Ok(FitResult {
        degree,
        coefficients: beta.iter().copied().collect(),
        r_squared,
        intercept_stderr,
        n_points: n,
        ill_conditioned: spans_many_decades(points),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Variance,
    DiscardedWeight,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Variance => "variance",
            Method::DiscardedWeight => "discarded_weight",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub method: Method,
    pub estimate: f64,
    pub uncertainty: f64,
    /// Index of the first point in the selected window.
    pub window_start: usize,
    pub n_points: usize,
    /// Linear-fit intercept.
    pub b1: f64,
    /// Quadratic-fit intercept, absent for linear-only fits.
    pub b2: Option<f64>,
    /// R² of the linear fit over the selected window.
    pub r_squared: f64,
    /// Only three points were available, so the uncertainty is the linear intercept's stderr.
    pub linear_only: bool,
    pub warnings: Vec<String>,
}

impl ExtrapolationResult {
    /// Rescales energies, e.g. to per-site values. R² and the window are unaffected.
    pub fn scaled(&self, s: f64) -> ExtrapolationResult {
        ExtrapolationResult {
            estimate: self.estimate * s,
            uncertainty: self.uncertainty * s.abs(),
            b1: self.b1 * s,
            b2: self.b2.map(|b| b * s),
            ..self.clone()
        }
    }
}

impl fmt::Display for ExtrapolationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "estimate: {:.12}", self.estimate)?;
        writeln!(f, "uncertainty: {:.3e}", self.uncertainty)?;
        writeln!(f, "window_start: {}", self.window_start)?;
        writeln!(f, "n_points: {}", self.n_points)?;
        writeln!(f, "b1: {:.12}", self.b1)?;
        match self.b2 {
            Some(b2) => writeln!(f, "b2: {b2:.12}")?,
            None => writeln!(f, "b2: none")?,
        }
        writeln!(f, "r_squared: {:.9}", self.r_squared)?;
        writeln!(f, "linear_only: {}", self.linear_only)?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowOptions {
    pub min_window: usize,
    /// Score with R² itself instead of 1 − R².
    pub literal_r_squared: bool,
    /// Divide the |b₁ − b₂|/2 term by this (e.g. the site count) before scoring.
    pub normalize_by: Option<f64>,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            min_window: 10,
            literal_r_squared: false,
            normalize_by: None,
        }
    }
}

/// Zero-variance extrapolation of `(variance, energy)` points, in trajectory order.
///
/// Every trailing window `[k, end]` with at least `min_window` points is fit with a line
/// and a parabola; the window minimizing `|b₁ − b₂|/2 + (1 − R²_lin)` wins, ties going to
/// the larger window. The estimate is `(b₁ + b₂)/2` with uncertainty `|b₁ − b₂|/2`.
pub fn variance_extrapolate_points(
    points: &[(f64, f64)],
    opts: &WindowOptions,
) -> Result<ExtrapolationResult> {
    let min_window = opts.min_window.max(4);
    if points.len() < min_window {
        return Err(Error::InsufficientData {
            needed: min_window,
            got: points.len(),
        });
    }
    if let Some(s) = opts.normalize_by {
        if !(s > 0.0) {
            return Err(Error::InvalidConfig("normalize_by must be positive".into()));
        }
    }
    let norm = opts.normalize_by.unwrap_or(1.0);
    let mut best: Option<(f64, usize, FitResult, FitResult)> = None;
    for k in 0..=points.len() - min_window {
        let window = &points[k..];
        let (Ok(lin), Ok(quad)) = (polyfit(window, 1), polyfit(window, 2)) else {
            continue;
        };
        let half = (lin.intercept() - quad.intercept()).abs() / 2.0;
        let fit_term = if opts.literal_r_squared {
            lin.r_squared
        } else {
            1.0 - lin.r_squared
        };
        let score = half / norm + fit_term;
        let better = match &best {
            None => true,
            Some((s, ..)) => score < s - 1e-12 * s.abs().max(1.0),
        };
        if better {
            best = Some((score, k, lin, quad));
        }
    }
    let (_, k, lin, quad) =
        best.ok_or_else(|| Error::DegenerateFit("no window admits both fits".into()))?;
    let (b1, b2) = (lin.intercept(), quad.intercept());
    let mut warnings = Vec::new();
    if lin.ill_conditioned {
        warnings.push(format!("abscissae span more than {MAX_DECADES} decades"));
    }
    Ok(ExtrapolationResult {
        method: Method::Variance,
        estimate: (b1 + b2) / 2.0,
        uncertainty: (b1 - b2).abs() / 2.0,
        window_start: k,
        n_points: points.len() - k,
        b1,
        b2: Some(b2),
        r_squared: lin.r_squared,
        linear_only: false,
        warnings,
    })
}

/// [`variance_extrapolate_points`] on a trajectory's raw or corrected `(variance, energy)` pairs.
pub fn variance_extrapolate(
    traj: &Trajectory,
    corrected: bool,
    opts: &WindowOptions,
) -> Result<ExtrapolationResult> {
    variance_extrapolate_points(&traj.variance_points(corrected), opts)
}

/// Extrapolation of final corrected energies to zero discarded weight across runs.
///
/// With four or more runs the linear and quadratic intercepts are averaged; with exactly
/// three only the line is fit and its intercept standard error is the uncertainty.
pub fn dw_extrapolate(runs: &[(f64, f64)]) -> Result<ExtrapolationResult> {
    if runs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: runs.len(),
        });
    }
    let mut xs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(
            "need three distinct discarded weights".into(),
        ));
    }
    let lin = polyfit(runs, 1)?;
    let mut warnings = Vec::new();
    if lin.ill_conditioned {
        warnings.push(format!("abscissae span more than {MAX_DECADES} decades"));
    }
    let b1 = lin.intercept();
    if runs.len() == 3 {
        warnings.push("three runs: linear fit only".into());
        return Ok(ExtrapolationResult {
            method: Method::DiscardedWeight,
            estimate: b1,
            uncertainty: lin.intercept_stderr.unwrap_or(0.0),
            window_start: 0,
            n_points: 3,
            b1,
            b2: None,
            r_squared: lin.r_squared,
            linear_only: true,
            warnings,
        });
    }
    let b2 = polyfit(runs, 2)?.intercept();
    Ok(ExtrapolationResult {
        method: Method::DiscardedWeight,
        estimate: (b1 + b2) / 2.0,
        uncertainty: (b1 - b2).abs() / 2.0,
        window_start: 0,
        n_points: runs.len(),
        b1,
        b2: Some(b2),
        r_squared: lin.r_squared,
        linear_only: false,
        warnings,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
        return Err(Error::DegenerateFit(
            "log-log fit needs positive data".into(),
        ));
    }
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..6).map(|i| (i as f64, 3.0 + 2.0 * i as f64)).collect();
        for d in [1, 2] {
            let f = polyfit(&pts, d).unwrap();
            assert!(close(f.intercept(), 3.0, 1e-12));
            assert!(close(f.r_squared, 1.0, 1e-12));
        }
    }

    #[test]
    fn exact_parabola() {
        let pts: Vec<_> = (1..7).map(|i| (i as f64, 1.0 + (i * i) as f64)).collect();
        assert!(close(polyfit(&pts, 2).unwrap().intercept(), 1.0, 1e-10));
        assert!(!close(polyfit(&pts, 1).unwrap().intercept(), 1.0, 1e-3));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            polyfit(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)], 1),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            polyfit(&[(1.0, 1.0), (2.0, 2.0)], 1),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn linear_trajectory_selects_full_window() {
        let pts: Vec<_> = (0..30)
            .map(|i| (1.0 - i as f64 / 30.0, -5.0 + 0.7 * (1.0 - i as f64 / 30.0)))
            .collect();
        let r = variance_extrapolate_points(&pts, &WindowOptions::default()).unwrap();
        assert!(close(r.estimate, -5.0, 1e-10));
        assert!(r.uncertainty < 1e-10);
        assert_eq!(r.window_start, 0);
        assert_eq!(r.n_points, 30);
    }

    #[test]
    fn too_short_trajectory() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, i as f64)).collect();
        assert!(matches!(
            variance_extrapolate_points(&pts, &WindowOptions::default()),
            Err(Error::InsufficientData { needed: 10, got: 5 })
        ));
    }

    #[test]
    fn dw_three_points_is_linear_only() {
        let r = dw_extrapolate(&[(0.1, -1.0 + 0.2), (0.2, -1.0 + 0.4), (0.4, -1.0 + 0.8)]).unwrap();
        assert!(r.linear_only);
        assert!(r.b2.is_none());
        assert!(close(r.estimate, -1.0, 1e-12));
        assert!(r.uncertainty < 1e-12);
    }

    #[test]
    fn dw_rejects_two_points() {
        assert!(matches!(
            dw_extrapolate(&[(0.1, 1.0), (0.2, 2.0)]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(dw_extrapolate(&[(0.1, 1.0), (0.1, 2.0), (0.2, 2.0)]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [1.0, 3.0, 10.0]
            .iter()
            .map(|&x: &f64| (x, 5.0 * x.powf(0.9)))
            .collect();
        assert!(close(log_log_slope(&pts).unwrap(), 0.9, 1e-12));
    }
}
