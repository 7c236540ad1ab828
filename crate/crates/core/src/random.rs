//! Seeded samplers for random positive definite tensors, conditioned pairs and
//! Löwner chains.
//!
//! Every trial draws from its own ChaCha20 substream: the generator is seeded
//! with the master seed and its stream id is set to the trial index, so a
//! sample depends only on `(master_seed, trial_index)` and never on the order
//! in which trials run.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connections::{perspective_mean, ConnectionFunction, ConnectionSpec};
use crate::error::{Error, Result};
use crate::spectral;
use crate::tensor::{EinsteinTensor, Shape};

pub const DEFAULT_SPECTRUM_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// `GGᴴ/D + δI` with complex standard Gaussian `G`.
    Wishart,
    /// Diagonal, entries uniform on `[δ, 1]`.
    DiagUniform,
    /// Diagonal, entries `δ + a` or `δ + b` with equal probability.
    TwoAtom,
    /// Diagonal, entries `δ + Exp(1)`.
    Exponential,
}

impl Ensemble {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ensemble::Wishart => "wishart",
            Ensemble::DiagUniform => "diag_uniform",
            Ensemble::TwoAtom => "two_atom",
            Ensemble::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Rescale so that `λ_min(X #_f Y) = 1`.
    MeanGeqIdentity,
    /// Rescale so that `λ_max(X #_f Y) = 1`.
    MeanLeqIdentity,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub shape: Shape,
    pub ensemble: Ensemble,
    /// `δ ≥ 0`, added to the spectrum.
    pub spectrum_floor: f64,
    /// Atom values `(a, b)` for [`Ensemble::TwoAtom`].
    pub atoms: (f64, f64),
    pub normalization: Normalization,
    pub connection: Option<ConnectionSpec>,
}

impl SamplerSpec {
    pub fn new(shape: Shape, ensemble: Ensemble) -> Self {
        Self {
            shape,
            ensemble,
            spectrum_floor: DEFAULT_SPECTRUM_FLOOR,
            atoms: (0.0, 1.0),
            normalization: Normalization::None,
            connection: None,
        }
    }

    pub fn with_floor(mut self, delta: f64) -> Self {
        self.spectrum_floor = delta;
        self
    }

    pub fn with_atoms(mut self, a: f64, b: f64) -> Self {
        self.atoms = (a, b);
        self
    }

    pub fn normalized(mut self, normalization: Normalization, connection: ConnectionSpec) -> Self {
        self.normalization = normalization;
        self.connection = Some(connection);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spectrum_floor >= 0.0 && self.spectrum_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spectrum floor must be ≥ 0, got {}",
                self.spectrum_floor
            )));
        }
        let (a, b) = self.atoms;
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("atoms must be ≥ 0, got ({a}, {b})")));
        }
        if self.normalization != Normalization::None && self.connection.is_none() {
            return Err(Error::InvalidParameter(
                "normalization against a mean requires a connection".into(),
            ));
        }
        Ok(())
    }
}

/// `(master_seed, trial_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    /// Fresh generator positioned at the start of this trial's substream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

fn complex_gaussian(rng: &mut ChaCha20Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One PSD draw of the ensemble with floor `delta`, consuming `rng`.
fn draw(spec: &SamplerSpec, delta: f64, rng: &mut ChaCha20Rng) -> Result<EinsteinTensor> {
    let shape = &spec.shape;
    let d = shape.unfold_dim();
    match spec.ensemble {
        Ensemble::Wishart => {
            let g: Vec<Complex64> = (0..d * d).map(|_| complex_gaussian(rng)).collect();
            let g = EinsteinTensor::from_entries(shape.clone(), g)?;
            let w = g.einstein_product(&g.conjugate_transpose())?.scale(1.0 / d as f64);
            Ok(w.hermitian_part().shift_diagonal(delta))
        }
        Ensemble::DiagUniform => {
            let values: Vec<f64> = (0..d).map(|_| rng.random_range(delta..=1.0f64.max(delta))).collect();
            EinsteinTensor::from_diagonal(shape.clone(), &values)
        }
        Ensemble::TwoAtom => {
            let (a, b) = spec.atoms;
            let values: Vec<f64> = (0..d)
                .map(|_| delta + if rng.random_bool(0.5) { b } else { a })
                .collect();
            EinsteinTensor::from_diagonal(shape.clone(), &values)
        }
        Ensemble::Exponential => {
            let values: Vec<f64> = (0..d)
                .map(|_| {
                    let e: f64 = rng.sample(Exp1);
                    delta + e
                })
                .collect();
            EinsteinTensor::from_diagonal(shape.clone(), &values)
        }
    }
}

/// Hermitian PD draw (PSD when `δ = 0` and the ensemble allows zero eigenvalues).
pub fn sample_pd(spec: &SamplerSpec, stream: SeedStream) -> Result<EinsteinTensor> {
    spec.validate()?;
    draw(spec, spec.spectrum_floor, &mut stream.rng())
}

/// Two independent draws from the same substream.
pub fn sample_pair(spec: &SamplerSpec, stream: SeedStream) -> Result<(EinsteinTensor, EinsteinTensor)> {
    spec.validate()?;
    let mut rng = stream.rng();
    let x = draw(spec, spec.spectrum_floor, &mut rng)?;
    let y = draw(spec, spec.spectrum_floor, &mut rng)?;
    Ok((x, y))
}

/// A pair rescaled so that its mean touches the identity from one side.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedPair {
    pub x: EinsteinTensor,
    pub y: EinsteinTensor,
    /// `X #_f Y` after rescaling.
    pub mean: EinsteinTensor,
    /// The factor `c` both inputs were multiplied by.
    pub scale: f64,
}

/// Draws `(X, Y)` and rescales both by `c = 1/λ_min(X #_f Y)` (geq mode) or
/// `c = 1/λ_max(X #_f Y)` (leq mode).
pub fn sample_pair_conditioned(
    spec: &SamplerSpec,
    f: &ConnectionFunction,
    stream: SeedStream,
) -> Result<ConditionedPair> {
    if spec.normalization == Normalization::None {
        return Err(Error::InvalidParameter(
            "conditioned pairs need a normalization mode".into(),
        ));
    }
    let (x, y) = sample_pair(spec, stream)?;
    condition_pair(&x, &y, f, spec.normalization)
}

/// Applies the rescaling of [`sample_pair_conditioned`] to a given pair.
pub fn condition_pair(
    x: &EinsteinTensor,
    y: &EinsteinTensor,
    f: &ConnectionFunction,
    normalization: Normalization,
) -> Result<ConditionedPair> {
    let mean = perspective_mean(x, y, f)?.value;
    let eig = spectral::eigen_decompose(&mean)?;
    let scale = match normalization {
        Normalization::MeanGeqIdentity => 1.0 / eig.lambda_min(),
        Normalization::MeanLeqIdentity => 1.0 / eig.lambda_max(),
        Normalization::None => 1.0,
    };
    Ok(ConditionedPair {
        x: x.scale(scale),
        y: y.scale(scale),
        mean: mean.scale(scale),
        scale,
    })
}

/// `X ⪯ Y ⪯ Z` built as `Y = X + A`, `Z = Y + B` with PSD increments drawn
/// from the same ensemble without floor.
pub fn sample_chain(
    spec: &SamplerSpec,
    stream: SeedStream,
) -> Result<(EinsteinTensor, EinsteinTensor, EinsteinTensor)> {
    spec.validate()?;
    let mut rng = stream.rng();
    let x = draw(spec, spec.spectrum_floor, &mut rng)?;
    let a = draw(spec, 0.0, &mut rng)?;
    let b = draw(spec, 0.0, &mut rng)?;
    let y = x.checked_add(&a)?;
    let z = y.checked_add(&b)?;
    Ok((x, y, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

/// Runs `trial` for indices `0..n` and returns results in index order.
///
/// The first error by index wins, regardless of scheduling.
pub fn run_trials<T, F>(n: usize, master_seed: u64, parallelism: Parallelism, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SeedStream) -> Result<T> + Sync + Send,
{
    let run = |i: usize| trial(SeedStream::new(master_seed, i as u64));
    let results: Vec<Result<T>> = match parallelism {
        Parallelism::Serial => (0..n).map(run).collect(),
        Parallelism::Parallel => (0..n).into_par_iter().map(run).collect(),
    };
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(ensemble: Ensemble) -> SamplerSpec {
        SamplerSpec::new(Shape::new(vec![2, 2]).unwrap(), ensemble)
    }

    #[test]
    fn floor_is_respected() {
        for e in [Ensemble::Wishart, Ensemble::DiagUniform, Ensemble::TwoAtom, Ensemble::Exponential] {
            for i in 0..20 {
                let t = sample_pd(&spec(e), SeedStream::new(3, i)).unwrap();
                assert!(spectral::lambda_min(&t).unwrap() >= 0.05 - 1e-12, "{e:?}");
                assert!(t.is_hermitian(1e-12));
            }
        }
    }

    #[test]
    fn same_stream_is_bit_identical() {
        let s = spec(Ensemble::Wishart);
        let a = sample_pd(&s, SeedStream::new(11, 5)).unwrap();
        let b = sample_pd(&s, SeedStream::new(11, 5)).unwrap();
        assert_eq!(a.entries(), b.entries());
        let c = sample_pd(&s, SeedStream::new(11, 6)).unwrap();
        assert_ne!(a.entries(), c.entries());
        let d = sample_pd(&s, SeedStream::new(12, 5)).unwrap();
        assert_ne!(a.entries(), d.entries());
    }

    #[test]
    fn wishart_mean_trace() {
        let s = SamplerSpec::new(Shape::square(4).unwrap(), Ensemble::Wishart);
        let n = 10_000;
        let traces = run_trials(n, 99, Parallelism::Parallel, |st| {
            Ok(sample_pd(&s, st)?.trace().re / 4.0)
        })
        .unwrap();
        let mean = traces.iter().sum::<f64>() / n as f64;
        let var = traces.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.05).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn two_atom_uses_atoms() {
        let s = SamplerSpec::new(Shape::square(6).unwrap(), Ensemble::TwoAtom)
            .with_floor(0.1)
            .with_atoms(0.0, 2.0);
        let t = sample_pd(&s, SeedStream::new(1, 0)).unwrap();
        for k in 0..6 {
            let v = t.unfolded_entry(k, k).re;
            assert!(v == 0.1 || v == 2.1);
        }
    }

    #[test]
    fn validation() {
        let mut s = spec(Ensemble::Wishart);
        s.spectrum_floor = -1.0;
        assert!(sample_pd(&s, SeedStream::new(0, 0)).is_err());
        let mut s = spec(Ensemble::Wishart);
        s.normalization = Normalization::MeanGeqIdentity;
        assert!(s.validate().is_err());
        let f = ConnectionFunction::arithmetic();
        assert!(sample_pair_conditioned(&spec(Ensemble::Wishart), &f, SeedStream::new(0, 0)).is_err());
    }

    #[test]
    fn conditioned_pairs_pin_extreme_eigenvalue() {
        let f = ConnectionFunction::arithmetic();
        for (mode, geq) in [(Normalization::MeanGeqIdentity, true), (Normalization::MeanLeqIdentity, false)] {
            let s = spec(Ensemble::Wishart).normalized(mode, ConnectionSpec::named("arithmetic"));
            for i in 0..20 {
                let p = sample_pair_conditioned(&s, &f, SeedStream::new(8, i)).unwrap();
                let recomputed = perspective_mean(&p.x, &p.y, &f).unwrap().value;
                let eig = spectral::eigen_decompose(&recomputed).unwrap();
                let id = EinsteinTensor::identity(p.x.shape());
                if geq {
                    assert!((eig.lambda_min() - 1.0).abs() <= 1e-9);
                    assert!(spectral::loewner_compare(&id, &recomputed, 1e-9).unwrap().is_leq());
                } else {
                    assert!((eig.lambda_max() - 1.0).abs() <= 1e-9);
                    assert!(spectral::loewner_compare(&recomputed, &id, 1e-9).unwrap().is_leq());
                }
            }
        }
    }

    #[test]
    fn scalar_conditioning() {
        let f = ConnectionFunction::power(0.5).unwrap();
        let p = condition_pair(
            &EinsteinTensor::scalar(4.0),
            &EinsteinTensor::scalar(9.0),
            &f,
            Normalization::MeanGeqIdentity,
        )
        .unwrap();
        assert!((p.scale - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.x.entries()[0].re - 4.0 / 6.0).abs() < 1e-15);
        assert!((p.mean.entries()[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rescaling_preserves_z0() {
        let f = ConnectionFunction::harmonic();
        let s = spec(Ensemble::Wishart);
        let (x, y) = sample_pair(&s, SeedStream::new(4, 2)).unwrap();
        let p = condition_pair(&x, &y, &f, Normalization::MeanGeqIdentity).unwrap();
        let z = crate::bounds::z_sequence(&x, &y, 0).unwrap();
        let zc = crate::bounds::z_sequence(&p.x, &p.y, 0).unwrap();
        assert!(z[0].max_abs_diff(&zc[0]).unwrap() <= 1e-10 * z[0].frobenius_norm());
    }

    #[test]
    fn chains_are_ordered() {
        let s = spec(Ensemble::Wishart);
        for i in 0..20 {
            let (x, y, z) = sample_chain(&s, SeedStream::new(2, i)).unwrap();
            assert!(spectral::loewner_compare(&x, &y, 1e-10).unwrap().is_leq());
            assert!(spectral::loewner_compare(&y, &z, 1e-10).unwrap().is_leq());
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let s = spec(Ensemble::Wishart);
        let go = |p| {
            run_trials(64, 5, p, |st| Ok(sample_pd(&s, st)?.entries().to_vec())).unwrap()
        };
        assert_eq!(go(Parallelism::Serial), go(Parallelism::Parallel));
    }

    #[test]
    fn first_error_by_index_wins() {
        let r: Result<Vec<u64>> = run_trials(50, 0, Parallelism::Parallel, |st| {
            if st.trial_index % 10 == 7 {
                Err(Error::InvalidParameter(format!("trial {}", st.trial_index)))
            } else {
                Ok(st.trial_index)
            }
        });
        assert_eq!(r.unwrap_err(), Error::InvalidParameter("trial 7".into()));
    }
}
