use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vdbf::analysis::{polyfit, variance_extrapolate_points, WindowOptions};

/// Closed-form simple linear regression.
fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

fn noisy_trajectory(rng: &mut ChaCha8Rng, len: usize) -> Vec<(f64, f64)> {
    (0..len)
        .map(|i| {
            let v = 2.0 * (-(i as f64) / 15.0).exp();
            (
                v,
                -3.0 + 0.4 * v + 0.05 * v * v + rng.gen_range(-1e-4..1e-4),
            )
        })
        .collect()
}

#[test]
fn linear_fit_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..50 {
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|_| {
                let x = rng.gen_range(0.0..2.0);
                (x, 1.5 - 0.7 * x + rng.gen_range(-0.1..0.1))
            })
            .collect();
        let fit = polyfit(&pts, 1).unwrap();
        let (b, m) = normal_equations(&pts);
        assert!((fit.intercept() - b).abs() < 1e-10);
        assert!((fit.coefficients[1] - m).abs() < 1e-10);
        // the true intercept lies within a few standard errors
        assert!((fit.intercept() - 1.5).abs() < 4.0 * fit.intercept_stderr.unwrap());
    }
}

#[test]
fn window_choice_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts = noisy_trajectory(&mut rng, 60);
    let a = variance_extrapolate_points(&pts, &WindowOptions::default()).unwrap();
    let b = variance_extrapolate_points(&pts, &WindowOptions::default()).unwrap();
    assert_eq!(a, b);
    assert!((a.estimate + 3.0).abs() < 1e-3);
    let literal = WindowOptions {
        literal_r_squared: true,
        ..Default::default()
    };
    assert!(variance_extrapolate_points(&pts, &literal).is_ok());
}

proptest! {
    #[test]
    fn shift_equivariance(seed in any::<u64>(), shift in -10.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = noisy_trajectory(&mut rng, 40);
        let shifted: Vec<_> = pts.iter().map(|p| (p.0, p.1 + shift)).collect();
        let a = variance_extrapolate_points(&pts, &WindowOptions::default()).unwrap();
        let b = variance_extrapolate_points(&shifted, &WindowOptions::default()).unwrap();
        prop_assert_eq!(a.window_start, b.window_start);
        prop_assert!((b.estimate - a.estimate - shift).abs() < 1e-8);
        prop_assert!((b.uncertainty - a.uncertainty).abs() < 1e-8);
    }

    #[test]
    fn exact_lines_give_zero_uncertainty(b in -5.0f64..5.0, m in -2.0f64..2.0, len in 10usize..40) {
        let pts: Vec<_> = (0..len).map(|i| { let x = 1.0 / (1.0 + i as f64); (x, b + m * x) }).collect();
        let r = variance_extrapolate_points(&pts, &WindowOptions::default()).unwrap();
        prop_assert!((r.estimate - b).abs() < 1e-9);
        prop_assert!(r.uncertainty < 1e-9);
        prop_assert_eq!(r.window_start, 0);
    }
}
