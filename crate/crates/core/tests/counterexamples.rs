//! Commuting diagonal pairs on which the two-sided sandwiches with
//! `λ_max^{q−1}` on the lower side and `λ_min^{q−1}` on the upper side fail.
//! Every value here can be checked by hand; the checkers report the same
//! failures on random samples.

use tensor_means::bounds::sandwich_factors;
use tensor_means::connections::{perspective_mean, ConnectionFunction};
use tensor_means::spectral;
use tensor_means::verify::order_violation;
use tensor_means::{EinsteinTensor, Shape};

fn diag(values: &[f64]) -> EinsteinTensor {
    EinsteinTensor::from_diagonal(Shape::new(vec![values.len()]).unwrap(), values).unwrap()
}

struct Sides {
    mean: EinsteinTensor,
    powered: EinsteinTensor,
    lambda_min: f64,
    lambda_max: f64,
    lower: f64,
    upper: f64,
}

fn sides(f: &ConnectionFunction, x: &EinsteinTensor, y: &EinsteinTensor, q: f64) -> Sides {
    let mean = perspective_mean(x, y, f).unwrap().value;
    let powered = perspective_mean(&spectral::power(x, q).unwrap(), &spectral::power(y, q).unwrap(), f)
        .unwrap()
        .value;
    let factors = sandwich_factors(q, f, x, y).unwrap();
    Sides {
        lambda_min: spectral::lambda_min(&mean).unwrap(),
        lambda_max: spectral::lambda_max(&mean).unwrap(),
        mean,
        powered,
        lower: factors.lower,
        upper: factors.upper,
    }
}

#[test]
fn sqrt_mean_at_q2() {
    // X = I, Y = diag(1, 4): M = diag(1, 2), X²#Y² = diag(1, 4), factors 1.
    let s = sides(&ConnectionFunction::power(0.5).unwrap(), &diag(&[1.0, 1.0]), &diag(&[1.0, 4.0]), 2.0);
    assert!(s.powered.max_abs_diff(&diag(&[1.0, 4.0])).unwrap() < 1e-12);
    assert!((s.lower - 1.0).abs() < 1e-12 && (s.upper - 1.0).abs() < 1e-12);
    let lower = s.mean.scale(s.lower * s.lambda_max);
    let upper = s.mean.scale(s.upper * s.lambda_min);
    // diag(2, 4) ⋠ diag(1, 4) and diag(1, 4) ⋠ diag(1, 2)
    assert!(order_violation(&lower, &s.powered).unwrap() > 0.1);
    assert!(order_violation(&s.powered, &upper).unwrap() > 0.1);
    // With the extremes swapped both sides hold.
    assert_eq!(order_violation(&s.mean.scale(s.lambda_min), &s.powered).unwrap(), 0.0);
    assert_eq!(order_violation(&s.powered, &s.mean.scale(s.lambda_max)).unwrap(), 0.0);
}

#[test]
fn arithmetic_mean_lower_side_at_q2() {
    // M = diag(1, 2.5), X²#Y² = diag(1, 8.5), λ_max(M)·M = diag(2.5, 6.25).
    let f = ConnectionFunction::arithmetic();
    let s = sides(&f, &diag(&[1.0, 1.0]), &diag(&[1.0, 4.0]), 2.0);
    assert!(s.powered.max_abs_diff(&diag(&[1.0, 8.5])).unwrap() < 1e-12);
    let lower = s.mean.scale(s.lambda_max);
    assert!(order_violation(&lower, &s.powered).unwrap() > 0.1);
    // Already the scalar factor alone breaks the first diagonal entry.
    assert!(s.lower * s.lambda_max > 1.0);
}

#[test]
fn reciprocal_sqrt_at_q2() {
    // h(x) = x^{−1/2}: M = diag(1, 0.5), X²#Y² = diag(1, 0.25), factors 1.
    let h = ConnectionFunction::reciprocal_power(0.5).unwrap();
    let s = sides(&h, &diag(&[1.0, 1.0]), &diag(&[1.0, 4.0]), 2.0);
    assert!(s.powered.max_abs_diff(&diag(&[1.0, 0.25])).unwrap() < 1e-12);
    assert!((s.lower - 1.0).abs() < 1e-12 && (s.upper - 1.0).abs() < 1e-12);
    // diag(1, 0.5) ⋠ diag(1, 0.25) and diag(1, 0.25) ⋠ diag(0.5, 0.25)
    let lower = s.mean.scale(s.lambda_max);
    let upper = s.mean.scale(s.lambda_min);
    assert!(order_violation(&lower, &s.powered).unwrap() > 0.1);
    assert!(order_violation(&s.powered, &upper).unwrap() > 0.1);
}

#[test]
fn scalar_case_holds_with_equality() {
    for f in [
        ConnectionFunction::arithmetic(),
        ConnectionFunction::harmonic(),
        ConnectionFunction::power(0.5).unwrap(),
    ] {
        let s = sides(&f, &EinsteinTensor::scalar(2.0), &EinsteinTensor::scalar(5.0), 2.0);
        let lower = s.mean.scale(s.lower * s.lambda_max);
        let upper = s.mean.scale(s.upper * s.lambda_min);
        assert!(lower.max_abs_diff(&s.powered).unwrap() < 1e-10, "{}", f.name());
        assert!(upper.max_abs_diff(&s.powered).unwrap() < 1e-10, "{}", f.name());
    }
}
