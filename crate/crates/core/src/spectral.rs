//! Hermitian eigen-decomposition, functional calculus and Löwner-order tests.
//!
//! The eigensolver is a cyclic complex Jacobi iteration on the unfolding. It is
//! deterministic for a fixed input and reaches high relative accuracy on
//! positive definite inputs, which matters for the large powers used by the
//! bound factors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{EinsteinTensor, Shape};

/// Relative tolerance on `‖H − Hᴴ‖_F / ‖H‖_F` accepted as Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Default relative tolerance for definiteness tests.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;
/// Fractional powers are refused below this `λ_min / λ_max`.
pub const FRACTIONAL_POWER_FLOOR: f64 = 1e-12;

const CONVERGENCE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with the matching unitary eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenbasis: DMatrix<Complex64>,
    source_shape: Shape,
}

impl EigenSystem {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the unfolded eigentensors.
    pub fn eigenbasis(&self) -> &DMatrix<Complex64> {
        &self.eigenbasis
    }

    pub fn shape(&self) -> &Shape {
        &self.source_shape
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("dimension is at least one")
    }

    /// `max |λᵢ|`.
    pub fn spectral_norm(&self) -> f64 {
        self.lambda_max().abs().max(self.lambda_min().abs())
    }

    /// Rank-one projector `𝒰ᵢ ⋆ 𝒰ᵢᴴ` onto the `i`-th eigentensor.
    pub fn projector(&self, i: usize) -> EinsteinTensor {
        let mut weights = vec![0.0; self.eigenvalues.len()];
        weights[i] = 1.0;
        self.combine(&weights)
    }

    /// `Σᵢ λᵢ 𝒰ᵢ𝒰ᵢᴴ`.
    pub fn reconstruct(&self) -> EinsteinTensor {
        self.combine(&self.eigenvalues)
    }

    /// Eigensystem of `φ(H)`: same eigentensors, spectrum mapped and re-sorted.
    pub fn map_spectrum<F>(&self, phi: F) -> Result<EigenSystem>
    where
        F: Fn(f64) -> f64,
    {
        let d = self.eigenvalues.len();
        let mut mapped = Vec::with_capacity(d);
        for &lambda in &self.eigenvalues {
            let value = phi(lambda);
            if !value.is_finite() {
                return Err(Error::Domain {
                    what: "function".into(),
                    eigenvalue: lambda,
                });
            }
            mapped.push(value);
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| mapped[j].total_cmp(&mapped[i]));
        Ok(EigenSystem {
            eigenvalues: order.iter().map(|&i| mapped[i]).collect(),
            eigenbasis: DMatrix::from_fn(d, d, |r, c| self.eigenbasis[(r, order[c])]),
            source_shape: self.source_shape.clone(),
        })
    }

    /// Eigensystem of `H^q`; same domain rules as [`EigenSystem::power`].
    pub fn power_system(&self, q: f64) -> Result<EigenSystem> {
        if q.fract() != 0.0 {
            self.ensure_positive_for_fractional()?;
        }
        let k = q as i32;
        if q.fract() == 0.0 {
            self.map_spectrum(|x| x.powi(k))
        } else {
            self.map_spectrum(|x| x.powf(q))
        }
    }

    /// `Σᵢ φ(λᵢ) 𝒰ᵢ𝒰ᵢᴴ`, refusing points where `φ` is not finite.
    pub fn apply<F>(&self, phi: F) -> Result<EinsteinTensor>
    where
        F: Fn(f64) -> f64,
    {
        let mut weights = Vec::with_capacity(self.eigenvalues.len());
        for &lambda in &self.eigenvalues {
            let value = phi(lambda);
            if !value.is_finite() {
                return Err(Error::Domain {
                    what: "function".into(),
                    eigenvalue: lambda,
                });
            }
            weights.push(value);
        }
        Ok(self.combine(&weights))
    }

    /// `H^q` through the eigensystem.
    ///
    /// Integer exponents work for any Hermitian input with nonzero spectrum where
    /// needed; fractional exponents require `λ_min ≥ 1e-12·λ_max > 0`.
    pub fn power(&self, q: f64) -> Result<EinsteinTensor> {
        if !q.is_finite() {
            return Err(Error::InvalidParameter(format!("power exponent {q}")));
        }
        if q == 0.0 {
            return Ok(EinsteinTensor::identity(&self.source_shape));
        }
        if q.fract() == 0.0 {
            let k = q as i32;
            return self.apply(|x| x.powi(k)).map_err(|err| match err {
                Error::Domain { eigenvalue, .. } => Error::Domain {
                    what: format!("power {q}"),
                    eigenvalue,
                },
                other => other,
            });
        }
        self.ensure_positive_for_fractional()?;
        self.apply(|x| x.powf(q))
    }

    fn ensure_positive_for_fractional(&self) -> Result<()> {
        let lambda_min = self.lambda_min();
        let lambda_max = self.lambda_max();
        if !(lambda_min > 0.0 && lambda_min >= FRACTIONAL_POWER_FLOOR * lambda_max) {
            return Err(Error::NotPositiveDefinite {
                lambda_min,
                lambda_max,
            });
        }
        Ok(())
    }

    /// Exactly Hermitian `V·diag(w)·Vᴴ` folded back to the source shape.
    fn combine(&self, weights: &[f64]) -> EinsteinTensor {
        let d = weights.len();
        let v = &self.eigenbasis;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in r..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        acc += v[(r, k)] * v[(c, k)].conj() * w;
                    }
                }
                if r == c {
                    acc.im = 0.0;
                }
                entries[r * d + c] = acc;
                entries[c * d + r] = acc.conj();
            }
        }
        EinsteinTensor::from_entries(self.source_shape.clone(), entries)
            .expect("finite weights on a unitary basis give finite entries")
    }
}

fn ensure_hermitian(h: &EinsteinTensor) -> Result<()> {
    let norm = h.frobenius_norm();
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * norm {
        return Err(Error::NotHermitian {
            deviation: if norm > 0.0 { deviation / norm } else { deviation },
        });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian tensor.
pub fn eigen_decompose(h: &EinsteinTensor) -> Result<EigenSystem> {
    ensure_hermitian(h)?;
    let d = h.dim();
    let (values, basis) = jacobi(&h.hermitian_part(), d)?;

    let mut order: Vec<usize> = (0..d).collect();
    // stable sort keeps ties in solver order, so the output is deterministic
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenbasis = DMatrix::from_fn(d, d, |r, c| basis[(r, order[c])]);
    Ok(EigenSystem {
        eigenvalues,
        eigenbasis,
        source_shape: h.shape().clone(),
    })
}

fn off_diagonal_mass(a: &[Complex64], d: usize) -> f64 {
    let mut acc = 0.0;
    for r in 0..d {
        for c in 0..d {
            if r != c {
                acc += a[r * d + c].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic complex Jacobi sweeps on an exactly Hermitian tensor.
fn jacobi(h: &EinsteinTensor, d: usize) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let mut a = h.entries().to_vec();
    let mut v = DMatrix::<Complex64>::identity(d, d);
    let threshold = CONVERGENCE_TOL * h.frobenius_norm();

    let mut off = off_diagonal_mass(&a, d);
    let mut sweeps = 0;
    while off > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut a, &mut v, d, p, q);
            }
        }
        off = off_diagonal_mass(&a, d);
        sweeps += 1;
    }
    Ok(((0..d).map(|k| a[k * d + k].re).collect(), v))
}

/// Annihilates `a[p][q]` with a unitary acting on coordinates `p, q`.
fn rotate(a: &mut [Complex64], v: &mut DMatrix<Complex64>, d: usize, p: usize, q: usize) {
    let apq = a[p * d + q];
    let r = apq.norm();
    if r <= f64::MIN_POSITIVE {
        return;
    }
    // phase Pqq = conj(u) makes the pivot real, then a real rotation zeroes it
    let phase = (apq / r).conj();
    let app = a[p * d + p].re;
    let aqq = a[q * d + q].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = phase * (-s);
    let u_qq = phase * c;

    // A ← A·U
    for k in 0..d {
        let akp = a[k * d + p];
        let akq = a[k * d + q];
        a[k * d + p] = akp * u_pp + akq * u_qp;
        a[k * d + q] = akp * u_pq + akq * u_qq;
    }
    // A ← Uᴴ·A
    for k in 0..d {
        let apk = a[p * d + k];
        let aqk = a[q * d + k];
        a[p * d + k] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[q * d + k] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[p * d + q] = Complex64::new(0.0, 0.0);
    a[q * d + p] = Complex64::new(0.0, 0.0);
    a[p * d + p].im = 0.0;
    a[q * d + q].im = 0.0;

    // V ← V·U
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `Σᵢ φ(λᵢ) 𝒰ᵢ𝒰ᵢᴴ` for a Hermitian tensor.
pub fn apply_function<F>(h: &EinsteinTensor, phi: F) -> Result<EinsteinTensor>
where
    F: Fn(f64) -> f64,
{
    eigen_decompose(h)?.apply(phi)
}

pub fn power(h: &EinsteinTensor, q: f64) -> Result<EinsteinTensor> {
    eigen_decompose(h)?.power(q)
}

/// `|H| = (H²)^{1/2}`.
pub fn abs_tensor(h: &EinsteinTensor) -> Result<EinsteinTensor> {
    apply_function(h, f64::abs)
}

pub fn lambda_min(h: &EinsteinTensor) -> Result<f64> {
    Ok(eigen_decompose(h)?.lambda_min())
}

pub fn lambda_max(h: &EinsteinTensor) -> Result<f64> {
    Ok(eigen_decompose(h)?.lambda_max())
}

/// `λ_min ≥ −tol·‖H‖₂`.
pub fn is_psd(h: &EinsteinTensor, tol: f64) -> Result<bool> {
    let eig = eigen_decompose(h)?;
    Ok(eig.lambda_min() >= -tol * eig.spectral_norm())
}

/// `λ_min > tol·‖H‖₂`.
pub fn is_pd(h: &EinsteinTensor, tol: f64) -> Result<bool> {
    let eig = eigen_decompose(h)?;
    Ok(eig.lambda_min() > tol * eig.spectral_norm())
}

/// Fails unless `h` is Hermitian positive definite, reporting its extreme eigenvalues.
pub fn require_pd(h: &EinsteinTensor) -> Result<EigenSystem> {
    let eig = eigen_decompose(h)?;
    if !(eig.lambda_min() > 0.0) {
        return Err(Error::NotPositiveDefinite {
            lambda_min: eig.lambda_min(),
            lambda_max: eig.lambda_max(),
        });
    }
    Ok(eig)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    /// `A ⪯ B`
    Leq,
    /// `A ⪰ B`
    Geq,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub relation: Relation,
    /// Eigenvalue of `B − A` furthest on the violating side.
    pub witness_eigenvalue: f64,
    /// Absolute tolerance actually applied.
    pub tolerance: f64,
}

impl OrderVerdict {
    /// `A ⪯ B` within tolerance.
    pub fn is_leq(&self) -> bool {
        matches!(self.relation, Relation::Leq | Relation::Equal)
    }

    /// `A ⪰ B` within tolerance.
    pub fn is_geq(&self) -> bool {
        matches!(self.relation, Relation::Geq | Relation::Equal)
    }
}

/// Classifies `B − A` by the signs of its eigenvalues.
///
/// `tol` is relative: eigenvalues within `tol·max(‖A‖₂, ‖B‖₂)` of zero count
/// as zero.
pub fn loewner_compare(a: &EinsteinTensor, b: &EinsteinTensor, tol: f64) -> Result<OrderVerdict> {
    ensure_hermitian(a)?;
    ensure_hermitian(b)?;
    let diff = b.checked_sub(a)?;
    let scale = eigen_decompose(a)?
        .spectral_norm()
        .max(eigen_decompose(b)?.spectral_norm());
    compare_with_scale(&diff, tol * scale)
}

/// Classifies `diff = B − A` with an absolute tolerance.
pub fn compare_difference(diff: &EinsteinTensor, abs_tol: f64) -> Result<OrderVerdict> {
    compare_with_scale(diff, abs_tol)
}

fn compare_with_scale(diff: &EinsteinTensor, tolerance: f64) -> Result<OrderVerdict> {
    let eig = eigen_decompose(&diff.hermitian_part())?;
    let lo = eig.lambda_min();
    let hi = eig.lambda_max();
    let nonneg = lo >= -tolerance;
    let nonpos = hi <= tolerance;
    let (relation, witness_eigenvalue) = match (nonneg, nonpos) {
        (true, true) => (Relation::Equal, if hi.abs() > lo.abs() { hi } else { lo }),
        (true, false) => (Relation::Leq, lo),
        (false, true) => (Relation::Geq, hi),
        (false, false) => (Relation::Incomparable, lo),
    };
    Ok(OrderVerdict {
        relation,
        witness_eigenvalue,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(values: &[f64]) -> EinsteinTensor {
        EinsteinTensor::from_diagonal(Shape::square(values.len()).unwrap(), values).unwrap()
    }

    fn hermitian_from(shape: Shape, raw: &[(f64, f64)]) -> EinsteinTensor {
        let d = shape.unfold_dim();
        let g = EinsteinTensor::from_entries(shape, raw[..d * d].iter().map(|&(r, i)| c(r, i)).collect())
            .unwrap();
        (&g + &g.conjugate_transpose()).scale(0.5)
    }

    #[test]
    fn identity_spectrum() {
        let id = EinsteinTensor::identity(&Shape::new(vec![2, 2]).unwrap());
        let eig = eigen_decompose(&id).unwrap();
        assert_eq!(eig.eigenvalues(), &[1.0; 4]);
    }

    #[test]
    fn diagonal_spectrum_and_basis() {
        let eig = eigen_decompose(&diag(&[1.0, 3.0])).unwrap();
        assert_eq!(eig.eigenvalues(), &[3.0, 1.0]);
        let v = eig.eigenbasis();
        assert!((v[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((v[(0, 1)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(eig.lambda_max(), 3.0);
        assert_eq!(eig.lambda_min(), 1.0);
    }

    #[test]
    fn non_hermitian_rejected() {
        let t = EinsteinTensor::from_entries(
            Shape::square(2).unwrap(),
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(eigen_decompose(&t), Err(Error::NotHermitian { .. })));
        assert!(lambda_max(&t).is_err());
    }

    #[test]
    fn complex_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let h = EinsteinTensor::from_entries(
            Shape::square(2).unwrap(),
            vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        )
        .unwrap();
        let eig = eigen_decompose(&h).unwrap();
        assert!((eig.eigenvalues()[0] - 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues()[1] - 1.0).abs() < 1e-14);
        assert!(eig.reconstruct().max_abs_diff(&h).unwrap() < 1e-14);
    }

    #[test]
    fn functional_calculus_examples() {
        let h = diag(&[4.0, 9.0]);
        assert_eq!(apply_function(&h, |x| x).unwrap(), h);
        assert_eq!(
            apply_function(&h, |_| 1.0).unwrap(),
            EinsteinTensor::identity(h.shape())
        );
        let root = apply_function(&h, f64::sqrt).unwrap();
        assert!(root.max_abs_diff(&diag(&[2.0, 3.0])).unwrap() < 1e-15);
    }

    #[test]
    fn domain_error_names_eigenvalue() {
        match apply_function(&diag(&[1.0, -2.0]), f64::ln) {
            Err(Error::Domain { eigenvalue, .. }) => assert_eq!(eigenvalue, -2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn power_examples() {
        let h = diag(&[4.0, 9.0]);
        assert!(power(&h, 1.0).unwrap().max_abs_diff(&h).unwrap() < 1e-15);
        assert_eq!(power(&h, 0.0).unwrap(), EinsteinTensor::identity(h.shape()));
        let half = power(&h, 0.5).unwrap();
        assert!(half.max_abs_diff(&diag(&[2.0, 3.0])).unwrap() < 1e-15);
        assert!(power(&half, 2.0).unwrap().max_abs_diff(&h).unwrap() < 1e-13);
    }

    #[test]
    fn fractional_power_refuses_non_pd() {
        assert!(matches!(
            power(&diag(&[1.0, -1.0]), 0.5),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            power(&diag(&[1.0, 1e-13]), 0.5),
            Err(Error::NotPositiveDefinite { .. })
        ));
        // integer powers of indefinite tensors are fine
        let sq = power(&diag(&[2.0, -3.0]), 2.0).unwrap();
        assert!(sq.max_abs_diff(&diag(&[4.0, 9.0])).unwrap() < 1e-14);
        assert!(power(&diag(&[1.0, 0.0]), -1.0).is_err());
    }

    #[test]
    fn abs_example() {
        let a = abs_tensor(&diag(&[2.0, -3.0])).unwrap();
        assert!(a.max_abs_diff(&diag(&[2.0, 3.0])).unwrap() < 1e-15);
    }

    #[test]
    fn definiteness_examples() {
        let id = EinsteinTensor::identity(&Shape::square(2).unwrap());
        assert!(is_pd(&id, DEFAULT_PSD_TOL).unwrap());
        let semi = diag(&[1.0, 0.0]);
        assert!(is_psd(&semi, DEFAULT_PSD_TOL).unwrap());
        assert!(!is_pd(&semi, DEFAULT_PSD_TOL).unwrap());
        assert!(!is_psd(&diag(&[1.0, -1e-3]), 1e-8).unwrap());
    }

    #[test]
    fn loewner_examples() {
        let id = EinsteinTensor::identity(&Shape::square(2).unwrap());
        let half = id.scale(0.5);
        assert_eq!(loewner_compare(&half, &id, 1e-10).unwrap().relation, Relation::Leq);
        assert_eq!(loewner_compare(&id, &half, 1e-10).unwrap().relation, Relation::Geq);

        let v = loewner_compare(&diag(&[2.0, 0.5]), &id, 1e-10).unwrap();
        assert_eq!(v.relation, Relation::Incomparable);
        assert!((v.witness_eigenvalue + 1.0).abs() < 1e-14);

        let e = loewner_compare(&id, &id, 1e-10).unwrap();
        assert_eq!(e.relation, Relation::Equal);
        assert!(e.is_leq() && e.is_geq());
    }

    #[test]
    fn nested_shape_decomposition() {
        let shape = Shape::new(vec![2, 3]).unwrap();
        let raw: Vec<(f64, f64)> = (0..36)
            .map(|k| (((k * 7) % 11) as f64 - 5.0, ((k * 5) % 13) as f64 - 6.0))
            .collect();
        let h = hermitian_from(shape, &raw);
        let eig = eigen_decompose(&h).unwrap();
        let rel = eig.reconstruct().checked_sub(&h).unwrap().frobenius_norm() / h.frobenius_norm();
        assert!(rel < 1e-12, "relative reconstruction error {rel}");
    }

    fn entries_strategy(d: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_and_unitarity(d in 1usize..9, seed_entries in entries_strategy(8)) {
            let h = hermitian_from(Shape::square(d).unwrap(), &seed_entries);
            let eig = eigen_decompose(&h).unwrap();
            let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
            let rel = eig.reconstruct().checked_sub(&h).unwrap().frobenius_norm() / norm;
            prop_assert!(rel <= 1e-10);
            let basis = EinsteinTensor::fold(eig.eigenbasis(), h.shape()).unwrap();
            prop_assert!(basis.is_unitary(1e-10));
            prop_assert!(eig.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn matches_reference_eigenvalues(d in 1usize..9, seed_entries in entries_strategy(8)) {
            let h = hermitian_from(Shape::square(d).unwrap(), &seed_entries);
            let ours = eigen_decompose(&h).unwrap();
            let mut reference: Vec<f64> = h.unfold().symmetric_eigenvalues().iter().cloned().collect();
            reference.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in ours.eigenvalues().iter().zip(&reference) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn calculus_is_multiplicative(d in 1usize..7, seed_entries in entries_strategy(6)) {
            let h = hermitian_from(Shape::square(d).unwrap(), &seed_entries);
            let eig = eigen_decompose(&h).unwrap();
            let f = eig.apply(|x| x.exp()).unwrap();
            let g = eig.apply(|x| 1.0 + x * x).unwrap();
            let fg = eig.apply(|x| x.exp() * (1.0 + x * x)).unwrap();
            let prod = f.einstein_product(&g).unwrap();
            let rel = prod.checked_sub(&fg).unwrap().frobenius_norm() / fg.frobenius_norm();
            prop_assert!(rel <= 1e-10);
            // functions of the same tensor commute
            let other = g.einstein_product(&f).unwrap();
            prop_assert!(prod.checked_sub(&other).unwrap().frobenius_norm() <= 1e-10 * fg.frobenius_norm());
        }

        #[test]
        fn abs_squared_is_square(d in 1usize..7, seed_entries in entries_strategy(6)) {
            let h = hermitian_from(Shape::square(d).unwrap(), &seed_entries);
            let a = abs_tensor(&h).unwrap();
            let a2 = a.einstein_product(&a).unwrap();
            let h2 = h.einstein_product(&h).unwrap();
            let scale = h2.frobenius_norm().max(1.0);
            prop_assert!(a2.checked_sub(&h2).unwrap().frobenius_norm() <= 1e-10 * scale);
        }

        #[test]
        fn loewner_antisymmetry(d in 1usize..6, x in entries_strategy(5), y in entries_strategy(5)) {
            let shape = Shape::square(d).unwrap();
            let a = hermitian_from(shape.clone(), &x);
            let b = hermitian_from(shape, &y);
            let tol = 1e-10;
            let ab = loewner_compare(&a, &b, tol).unwrap();
            let ba = loewner_compare(&b, &a, tol).unwrap();
            prop_assert_eq!(ab.is_leq(), ba.is_geq());
            if ab.is_leq() && ab.is_geq() {
                let dist = a.checked_sub(&b).unwrap().frobenius_norm();
                prop_assert!(dist <= ab.tolerance * d as f64 + 1e-300);
            }
        }
    }
}
