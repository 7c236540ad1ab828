//! Brute-force cross-checks: each oracle recomputes a library quantity by
//! nested-loop summation or a closed scalar formula and reports the largest
//! deviation.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bounds;
use crate::connections::{perspective_mean, ConnectionSpec};
use crate::error::{Error, Result};
use crate::tensor::{EinsteinTensor, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    EinsteinProduct,
    TraceCyclic,
    RatioSpectrum,
    ScalarMean,
}

impl OracleKind {
    pub const ALL: [OracleKind; 4] = [
        OracleKind::EinsteinProduct,
        OracleKind::TraceCyclic,
        OracleKind::RatioSpectrum,
        OracleKind::ScalarMean,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OracleKind::EinsteinProduct => "einstein_product",
            OracleKind::TraceCyclic => "trace_cyclic",
            OracleKind::RatioSpectrum => "ratio_spectrum",
            OracleKind::ScalarMean => "scalar_mean",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            OracleKind::EinsteinProduct => 1e-13,
            _ => 1e-12,
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown oracle {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleArgs {
    pub shape: Vec<usize>,
    pub seed: u64,
    /// Random samples drawn by the tensor oracles.
    pub pairs: usize,
    pub connection: ConnectionSpec,
    pub q: f64,
    /// Spectrum of `Z` for `ratio_spectrum`.
    pub z: Vec<f64>,
    pub x: f64,
    pub y: f64,
    pub tolerance: Option<f64>,
}

impl Default for OracleArgs {
    fn default() -> Self {
        Self {
            shape: vec![2, 2],
            seed: 0,
            pairs: 1,
            connection: ConnectionSpec::named("sqrt"),
            q: 2.0,
            z: vec![4.0, 1.0],
            x: 4.0,
            y: 9.0,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutcome {
    pub oracle: OracleKind,
    /// Library values, where the quantity is a short list of scalars.
    pub library: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn run_oracle(kind: OracleKind, args: &OracleArgs) -> Result<OracleOutcome> {
    let tolerance = args.tolerance.unwrap_or(kind.default_tolerance());
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let (library, reference, max_deviation) = match kind {
        OracleKind::EinsteinProduct => (Vec::new(), Vec::new(), einstein_product_deviation(args)?),
        OracleKind::TraceCyclic => (Vec::new(), Vec::new(), trace_cyclic_deviation(args)?),
        OracleKind::RatioSpectrum => ratio_spectrum_pair(args)?,
        OracleKind::ScalarMean => scalar_mean_pair(args)?,
    };
    Ok(OracleOutcome {
        oracle: kind,
        library,
        reference,
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    })
}

pub fn random_tensor(shape: &Shape, rng: &mut ChaCha20Rng) -> Result<EinsteinTensor> {
    let d = shape.unfold_dim();
    let entries = (0..d * d)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    EinsteinTensor::from_entries(shape.clone(), entries)
}

/// `Σ_k A[i,k]·B[k,j]` over explicit multi-indices.
pub fn nested_loop_product(a: &EinsteinTensor, b: &EinsteinTensor) -> Result<EinsteinTensor> {
    let shape = a.shape().clone();
    let d = shape.unfold_dim();
    let mut entries = Vec::with_capacity(d * d);
    for r in 0..d {
        let i = shape.multi_index(r);
        for c in 0..d {
            let j = shape.multi_index(c);
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..d {
                let k = shape.multi_index(m);
                acc += a.get(&i, &k) * b.get(&k, &j);
            }
            entries.push(acc);
        }
    }
    EinsteinTensor::from_entries(shape, entries)
}

/// Largest entry deviation of the library product from both the nested-loop
/// sum and the product of unfoldings.
pub fn einstein_product_deviation(args: &OracleArgs) -> Result<f64> {
    let shape = Shape::new(args.shape.clone())?;
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..args.pairs.max(1) {
        let a = random_tensor(&shape, &mut rng)?;
        let b = random_tensor(&shape, &mut rng)?;
        let lib = a.einstein_product(&b)?;
        let naive = nested_loop_product(&a, &b)?;
        let unfolded = EinsteinTensor::fold(&(a.unfold() * b.unfold()), &shape)?;
        worst = worst.max(lib.max_abs_diff(&naive)?).max(lib.max_abs_diff(&unfolded)?);
    }
    Ok(worst)
}

/// `Tr(A⋆B⋆C)` and its cyclic shifts against a triple-sum; relative to
/// `max(1, |Tr|)`.
pub fn trace_cyclic_deviation(args: &OracleArgs) -> Result<f64> {
    let shape = Shape::new(args.shape.clone())?;
    let d = shape.unfold_dim();
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..args.pairs.max(1) {
        let a = random_tensor(&shape, &mut rng)?;
        let b = random_tensor(&shape, &mut rng)?;
        let c = random_tensor(&shape, &mut rng)?;
        let mut reference = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    reference += a.unfolded_entry(i, j) * b.unfolded_entry(j, k) * c.unfolded_entry(k, i);
                }
            }
        }
        let scale = reference.norm().max(1.0);
        for order in [[&a, &b, &c], [&b, &c, &a], [&c, &a, &b]] {
            let t = EinsteinTensor::chain_product(&order)?.trace();
            worst = worst.max((t - reference).norm() / scale);
        }
    }
    Ok(worst)
}

/// Closed-form scalar connection, written out independently of the registry.
fn scalar_connection(spec: &ConnectionSpec) -> Result<Box<dyn Fn(f64) -> f64>> {
    let alpha = spec.parameters.get("alpha").copied().unwrap_or(0.5);
    Ok(match spec.name.as_str() {
        "power" => Box::new(move |x: f64| x.powf(alpha)),
        "sqrt" | "geometric" => Box::new(|x: f64| x.sqrt()),
        "arithmetic" => Box::new(|x: f64| (1.0 + x) / 2.0),
        "harmonic" => Box::new(|x: f64| 2.0 * x / (1.0 + x)),
        "reciprocal_power" => Box::new(move |x: f64| 1.0 / x.powf(alpha)),
        "square" => Box::new(|x: f64| x * x),
        other => return Err(Error::Config(format!("unknown connection {other}"))),
    })
}

fn deviation(library: &[f64], reference: &[f64]) -> f64 {
    library
        .iter()
        .zip(reference)
        .map(|(l, r)| (l - r).abs() / r.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Extremes of `f(λ^q)/f(λ)^q` over the spectrum of `diag(z)`.
pub fn ratio_spectrum_pair(args: &OracleArgs) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let f = args.connection.build()?;
    let shape = Shape::new(vec![args.z.len()])?;
    let z = EinsteinTensor::from_diagonal(shape, &args.z)?;
    let lib = bounds::ratio_spectrum(&f, args.q, &z)?;
    let g = scalar_connection(&args.connection)?;
    let ratios: Vec<f64> = args.z.iter().map(|&l| g(l.powf(args.q)) / g(l).powf(args.q)).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let library = vec![lib.min, lib.max];
    let reference = vec![lo, hi];
    let dev = deviation(&library, &reference);
    Ok((library, reference, dev))
}

/// `x #_f y` on `[1]`-shaped tensors against `x·f(y/x)`.
pub fn scalar_mean_pair(args: &OracleArgs) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(args.x > 0.0 && args.y > 0.0) {
        return Err(Error::Config(format!("x and y must be positive, got {} and {}", args.x, args.y)));
    }
    let f = args.connection.build()?;
    let mean = perspective_mean(&EinsteinTensor::scalar(args.x), &EinsteinTensor::scalar(args.y), &f)?;
    let library = vec![mean.value.entries()[0].re];
    let g = scalar_connection(&args.connection)?;
    let reference = vec![args.x * g(args.y / args.x)];
    let dev = deviation(&library, &reference);
    Ok((library, reference, dev))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for k in OracleKind::ALL {
            assert_eq!(k.as_str().parse::<OracleKind>().unwrap(), k);
        }
        assert!("eigen".parse::<OracleKind>().is_err());
    }

    #[test]
    fn einstein_product_within_tolerance() {
        let out = run_oracle(OracleKind::EinsteinProduct, &OracleArgs { pairs: 5, ..Default::default() }).unwrap();
        assert!(out.passed, "{out:?}");
    }

    #[test]
    fn nested_loop_detects_a_wrong_product() {
        let shape = Shape::new(vec![2, 2]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = random_tensor(&shape, &mut rng).unwrap();
        let b = random_tensor(&shape, &mut rng).unwrap();
        let naive = nested_loop_product(&a, &b).unwrap();
        let swapped = b.einstein_product(&a).unwrap();
        assert!(naive.max_abs_diff(&swapped).unwrap() > 1e-3);
    }

    #[test]
    fn trace_cyclic_within_tolerance() {
        let out = run_oracle(OracleKind::TraceCyclic, &OracleArgs { pairs: 5, ..Default::default() }).unwrap();
        assert!(out.passed, "{out:?}");
    }

    #[test]
    fn arithmetic_ratio_on_diag_four_one() {
        let args = OracleArgs {
            connection: ConnectionSpec::named("arithmetic"),
            ..Default::default()
        };
        let out = run_oracle(OracleKind::RatioSpectrum, &args).unwrap();
        assert!(out.passed);
        // f(16)/f(4)² = 8.5/6.25
        assert!((out.reference[0] - 1.0).abs() < 1e-15);
        assert!((out.reference[1] - 1.36).abs() < 1e-14);
    }

    #[test]
    fn sqrt_mean_of_four_and_nine() {
        let out = run_oracle(OracleKind::ScalarMean, &OracleArgs::default()).unwrap();
        assert!(out.passed);
        assert!((out.library[0] - 6.0).abs() < 1e-12);
        assert_eq!(out.reference, vec![6.0]);
    }

    #[test]
    fn scalar_mean_closed_forms() {
        for (name, expected) in [
            ("arithmetic", 6.5),
            ("harmonic", 72.0 / 13.0),
            ("square", 81.0 / 4.0),
            ("reciprocal_power", 8.0 / 3.0),
        ] {
            let args = OracleArgs {
                connection: ConnectionSpec::named(name),
                ..Default::default()
            };
            let out = run_oracle(OracleKind::ScalarMean, &args).unwrap();
            assert!(out.passed, "{name}");
            assert!((out.library[0] - expected).abs() < 1e-12, "{name}: {}", out.library[0]);
        }
    }
}
