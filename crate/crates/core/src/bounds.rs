//! Scalar bound factors: Kantorovich constants, the dyadic `Z` sequence,
//! spectral ratio extremes and the Ψ/Φ sandwich factors with their ψ caps.

use serde::{Deserialize, Serialize};

use crate::connections::ConnectionFunction;
use crate::error::{Error, Result};
use crate::spectral::{self, EigenSystem};
use crate::tensor::EinsteinTensor;

/// `K(m, M, p)` for `0 < m < M` and `p > 1`:
///
/// `((p−1)(Mᵖ−mᵖ)/(p(mMᵖ−Mmᵖ)))ᵖ · (mMᵖ−Mmᵖ)/((p−1)(M−m))`.
pub fn kantorovich(m: f64, big_m: f64, p: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite() && big_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("Kantorovich needs m > 0, got m = {m}")));
    }
    if !(m < big_m) {
        return Err(Error::InvalidParameter(format!(
            "Kantorovich needs m < M, got m = {m}, M = {big_m}"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("Kantorovich needs p > 1, got {p}")));
    }
    let mp = m.powf(p);
    let big_mp = big_m.powf(p);
    let cross = m * big_mp - big_m * mp;
    let base = (p - 1.0) * (big_mp - mp) / (p * cross);
    Ok(base.powf(p) * cross / ((p - 1.0) * (big_m - m)))
}

/// [`kantorovich`] extended by the constant 1 when `p ≤ 1` or `m = M`.
pub fn kantorovich_or_one(m: f64, big_m: f64, p: f64) -> Result<f64> {
    if p <= 1.0 || m == big_m {
        if !(m > 0.0 && m <= big_m) {
            return Err(Error::InvalidParameter(format!(
                "Kantorovich needs 0 < m ≤ M, got m = {m}, M = {big_m}"
            )));
        }
        return Ok(1.0);
    }
    kantorovich(m, big_m, p)
}

/// `q = 2ⁿ·q₀` with `q₀ ∈ [1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub q: f64,
    pub n: u32,
    pub q0: f64,
}

pub fn decompose_q(q: f64) -> Result<DyadicDecomposition> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("dyadic decomposition needs q ≥ 1, got {q}")));
    }
    let mut n = q.log2().floor() as u32;
    let mut q0 = q / 2f64.powi(n as i32);
    // guard against log2 rounding at exact powers of two
    if q0 >= 2.0 {
        n += 1;
        q0 = q / 2f64.powi(n as i32);
    } else if q0 < 1.0 {
        n -= 1;
        q0 = q / 2f64.powi(n as i32);
    }
    Ok(DyadicDecomposition { q, n, q0 })
}

/// `Z_j = X^{−2^{j−1}} Y^{2^j} X^{−2^{j−1}}` for `j = 0..=n`, so
/// `Z₀ = X^{−1/2} Y X^{−1/2}`.
pub fn z_sequence(x: &EinsteinTensor, y: &EinsteinTensor, n: u32) -> Result<Vec<EinsteinTensor>> {
    let x_eig = spectral::require_pd(x)?;
    let y_eig = spectral::require_pd(y)?;
    z_sequence_eig(&x_eig, &y_eig, n)
}

/// [`z_sequence`] from precomputed eigensystems.
pub fn z_sequence_eig(x_eig: &EigenSystem, y_eig: &EigenSystem, n: u32) -> Result<Vec<EinsteinTensor>> {
    (0..=n)
        .map(|j| {
            let e = 2f64.powi(j as i32);
            let outer = x_eig.power(-e / 2.0)?;
            let inner = y_eig.power(e)?;
            crate::connections::congruence(&outer, &inner)
        })
        .collect()
}

/// Extremes of `λ ↦ f(λ^q)/f(λ)^q` over the spectrum of `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSpectrum {
    pub min: f64,
    pub max: f64,
}

fn ratio_at(f: &ConnectionFunction, q: f64, lambda: f64) -> Result<f64> {
    let base = f.eval(lambda);
    let lifted = f.eval(lambda.powf(q));
    if !(base > 0.0 && base.is_finite()) {
        return Err(Error::Domain {
            what: format!("connection {}", f.name()),
            eigenvalue: lambda,
        });
    }
    if !(lifted > 0.0 && lifted.is_finite()) {
        return Err(Error::Domain {
            what: format!("connection {} at the {q}-th power", f.name()),
            eigenvalue: lambda,
        });
    }
    let ratio = lifted / base.powf(q);
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::Domain {
            what: format!("ratio f(λ^{q})/f(λ)^{q} for {}", f.name()),
            eigenvalue: lambda,
        });
    }
    Ok(ratio)
}

/// `f^{−q}(Z)·f(Z^q)` is a function of `Z`, so its spectrum is the ratio
/// evaluated on the eigenvalues of `Z`.
pub fn ratio_spectrum(f: &ConnectionFunction, q: f64, z: &EinsteinTensor) -> Result<RatioSpectrum> {
    ratio_spectrum_values(f, q, spectral::require_pd(z)?.eigenvalues())
}

pub fn ratio_spectrum_values(f: &ConnectionFunction, q: f64, spectrum: &[f64]) -> Result<RatioSpectrum> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &lambda in spectrum {
        if !(lambda > 0.0) {
            return Err(Error::Domain {
                what: "ratio spectrum (needs positive eigenvalues)".into(),
                eigenvalue: lambda,
            });
        }
        let r = ratio_at(f, q, lambda)?;
        min = min.min(r);
        max = max.max(r);
    }
    if spectrum.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    Ok(RatioSpectrum { min, max })
}

/// Product of the entries; 1 for the empty sequence.
pub fn acute_prod(values: &[f64]) -> f64 {
    values.iter().product()
}

/// `ψ(q, f, Z) = max(f(λ_min^q)/f(λ_min)^q, f(λ_max^q)/f(λ_max)^q)`.
pub fn psi_cap(q: f64, f: &ConnectionFunction, z: &EinsteinTensor) -> Result<f64> {
    let eig = spectral::require_pd(z)?;
    psi_cap_values(q, f, eig.lambda_min(), eig.lambda_max())
}

pub fn psi_cap_values(q: f64, f: &ConnectionFunction, lambda_min: f64, lambda_max: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("ψ cap needs q > 0, got {q}")));
    }
    Ok(ratio_at(f, q, lambda_min)?.max(ratio_at(f, q, lambda_max)?))
}

/// One factor of a sandwich product, kept for report audit trails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFactor {
    /// Index `j` of `Z_j`.
    pub level: u32,
    /// Exponent applied at this level (`2`, `q₀`, or `q` in the single-level regime).
    pub exponent: f64,
    pub z_lambda_min: f64,
    pub z_lambda_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub psi: f64,
}

/// Ψ (or Φ) lower/upper factors and the matching ψ-cap product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichFactors {
    pub lower: f64,
    pub upper: f64,
    /// `ψ(q₀,f,Z_n)·∏ψ(2,f,Z_{k−1})`, or the single ψ for `q < 1`.
    pub psi_product: f64,
    pub q: f64,
    pub connection: String,
    pub decomposition: Option<DyadicDecomposition>,
    pub levels: Vec<LevelFactor>,
}

fn level(f: &ConnectionFunction, j: u32, exponent: f64, z: &EinsteinTensor) -> Result<LevelFactor> {
    let eig = spectral::require_pd(z)?;
    let ratios = ratio_spectrum_values(f, exponent, eig.eigenvalues())?;
    Ok(LevelFactor {
        level: j,
        exponent,
        z_lambda_min: eig.lambda_min(),
        z_lambda_max: eig.lambda_max(),
        ratio_min: ratios.min,
        ratio_max: ratios.max,
        psi: psi_cap_values(exponent, f, eig.lambda_min(), eig.lambda_max())?,
    })
}

/// Ψ factors for `q ≥ 1`: `lower = r_min(q₀, Z_n)·∏_{k=1..n} r_min(2, Z_{k−1})`
/// and `upper` with maxima. For `q ∈ (0, 1)` the single level `r(q, Z₀)` is used.
pub fn sandwich_factors(
    q: f64,
    f: &ConnectionFunction,
    x: &EinsteinTensor,
    y: &EinsteinTensor,
) -> Result<SandwichFactors> {
    let x_eig = spectral::require_pd(x)?;
    let y_eig = spectral::require_pd(y)?;
    sandwich_factors_eig(q, f, &x_eig, &y_eig)
}

pub fn sandwich_factors_eig(
    q: f64,
    f: &ConnectionFunction,
    x_eig: &EigenSystem,
    y_eig: &EigenSystem,
) -> Result<SandwichFactors> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("sandwich factors need q > 0, got {q}")));
    }
    let (decomposition, levels) = if q < 1.0 {
        let z = z_sequence_eig(x_eig, y_eig, 0)?;
        (None, vec![level(f, 0, q, &z[0])?])
    } else {
        let dec = decompose_q(q)?;
        let zs = z_sequence_eig(x_eig, y_eig, dec.n)?;
        let mut levels = Vec::with_capacity(zs.len());
        for (j, z) in zs.iter().enumerate().take(dec.n as usize) {
            levels.push(level(f, j as u32, 2.0, z)?);
        }
        levels.push(level(f, dec.n, dec.q0, &zs[dec.n as usize])?);
        (Some(dec), levels)
    };
    let lower = acute_prod(&levels.iter().map(|l| l.ratio_min).collect::<Vec<_>>());
    let upper = acute_prod(&levels.iter().map(|l| l.ratio_max).collect::<Vec<_>>());
    let psi_product = acute_prod(&levels.iter().map(|l| l.psi).collect::<Vec<_>>());
    Ok(SandwichFactors {
        lower,
        upper,
        psi_product,
        q,
        connection: f.name().to_string(),
        decomposition,
        levels,
    })
}

/// Kantorovich constants built from the spectrum of `X`:
/// `K1 = K(λ_max⁻¹, λ_min⁻¹, q−1)`, `K2 = K(λ_max⁻¹, λ_min⁻¹, 2q−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KantorovichPair {
    pub k1: f64,
    pub k2: f64,
    pub m: f64,
    pub big_m: f64,
    /// `K1` fell back to 1 because its exponent `q − 1` is at most 1.
    pub k1_by_convention: bool,
    /// `K2` fell back to 1 (degenerate spectrum or exponent at most 1).
    pub k2_by_convention: bool,
}

pub fn kantorovich_pair(x: &EinsteinTensor, q: f64) -> Result<KantorovichPair> {
    let eig = spectral::require_pd(x)?;
    kantorovich_pair_values(eig.lambda_min(), eig.lambda_max(), q)
}

pub fn kantorovich_pair_values(lambda_min: f64, lambda_max: f64, q: f64) -> Result<KantorovichPair> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("Kantorovich pair needs q ≥ 1, got {q}")));
    }
    if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
        return Err(Error::NotPositiveDefinite {
            lambda_min,
            lambda_max,
        });
    }
    let m = 1.0 / lambda_max;
    let big_m = 1.0 / lambda_min;
    // a spectrum that is a point up to rounding is treated as degenerate
    let degenerate = big_m - m <= 1e-14 * big_m;
    let (m_eff, big_m_eff) = if degenerate { (m, m) } else { (m, big_m) };
    let k1 = kantorovich_or_one(m_eff, big_m_eff, q - 1.0)?;
    let k2 = kantorovich_or_one(m_eff, big_m_eff, 2.0 * q - 1.0)?;
    Ok(KantorovichPair {
        k1,
        k2,
        m,
        big_m,
        k1_by_convention: degenerate || q - 1.0 <= 1.0,
        k2_by_convention: degenerate || 2.0 * q - 1.0 <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn diag(values: &[f64]) -> EinsteinTensor {
        EinsteinTensor::from_diagonal(Shape::square(values.len()).unwrap(), values).unwrap()
    }

    fn arith() -> ConnectionFunction {
        ConnectionFunction::arithmetic()
    }

    #[test]
    fn kantorovich_values() {
        assert!((kantorovich(1.0, 2.0, 2.0).unwrap() - 1.125).abs() <= 1e-12);
        assert!((kantorovich(1.0, 4.0, 2.0).unwrap() - 1.5625).abs() <= 1e-12);
        let near = kantorovich(1.0, 1.0001, 2.0).unwrap();
        assert!(near >= 1.0 - 1e-12 && near - 1.0 <= 1e-8, "{near}");
        let k3 = kantorovich(1.0, 2.0, 3.0).unwrap();
        assert!((k3 - (7.0f64 / 9.0).powi(3) * 3.0).abs() < 1e-12);
    }

    #[test]
    fn kantorovich_p2_closed_form() {
        for (m, big_m) in [(0.3, 0.9), (1.0, 10.0), (2.0, 2.5)] {
            let closed = (m + big_m) * (m + big_m) / (4.0 * m * big_m);
            assert!((kantorovich(m, big_m, 2.0).unwrap() - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn kantorovich_errors_and_convention() {
        assert!(kantorovich(2.0, 1.0, 2.0).is_err());
        assert!(kantorovich(0.0, 1.0, 2.0).is_err());
        assert!(kantorovich(1.0, 2.0, 1.0).is_err());
        assert_eq!(kantorovich_or_one(1.0, 2.0, 1.0).unwrap(), 1.0);
        assert_eq!(kantorovich_or_one(1.0, 1.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn dyadic_examples() {
        let d = decompose_q(1.0).unwrap();
        assert_eq!((d.n, d.q0), (0, 1.0));
        let d = decompose_q(6.0).unwrap();
        assert_eq!((d.n, d.q0), (2, 1.5));
        let d = decompose_q(2.0).unwrap();
        assert_eq!((d.n, d.q0), (1, 1.0));
        assert!(decompose_q(0.5).is_err());
    }

    #[test]
    fn z_sequence_examples() {
        let id = EinsteinTensor::identity(&Shape::square(2).unwrap());
        let y = diag(&[3.0, 0.5]);
        let zs = z_sequence(&id, &y, 1).unwrap();
        assert!(zs[0].max_abs_diff(&y).unwrap() < 1e-14);
        assert!(zs[1].max_abs_diff(&diag(&[9.0, 0.25])).unwrap() < 1e-13);

        let z = z_sequence(&EinsteinTensor::scalar(4.0), &EinsteinTensor::scalar(9.0), 0).unwrap();
        assert!((z[0].entries()[0].re - 2.25).abs() < 1e-14);

        let x = diag(&[2.0, 0.5]);
        let y = diag(&[3.0, 4.0]);
        let zs = z_sequence(&x, &y, 2).unwrap();
        for (j, z) in zs.iter().enumerate() {
            let e = 2f64.powi(j as i32);
            let expected = diag(&[(3.0f64 / 2.0).powf(e), (4.0f64 / 0.5).powf(e)]);
            assert!(z.max_abs_diff(&expected).unwrap() <= 1e-12 * expected.frobenius_norm());
        }
    }

    #[test]
    fn ratio_spectrum_examples() {
        let z = diag(&[4.0, 1.0]);
        let p = ConnectionFunction::power(0.3).unwrap();
        let r = ratio_spectrum(&p, 2.5, &z).unwrap();
        assert!((r.min - 1.0).abs() < 1e-14 && (r.max - 1.0).abs() < 1e-14);

        let r = ratio_spectrum(&arith(), 2.0, &z).unwrap();
        assert!((r.min - 1.0).abs() < 1e-15);
        assert!((r.max - 1.36).abs() < 1e-14);

        let id = EinsteinTensor::identity(&Shape::square(3).unwrap());
        let r = ratio_spectrum(&arith(), 3.0, &id).unwrap();
        assert_eq!((r.min, r.max), (1.0, 1.0));
    }

    #[test]
    fn acute_prod_examples() {
        assert_eq!(acute_prod(&[]), 1.0);
        assert_eq!(acute_prod(&[2.0, 3.0]), 6.0);
        assert_eq!(acute_prod(&[0.5]), 0.5);
    }

    #[test]
    fn sandwich_examples() {
        let x = diag(&[2.0, 0.7, 1.3]);
        let y = diag(&[0.4, 1.9, 1.1]);
        let p = ConnectionFunction::power(0.5).unwrap();
        for q in [0.5, 1.0, 1.5, 2.0, 3.0, 6.0] {
            let s = sandwich_factors(q, &p, &x, &y).unwrap();
            assert!((s.lower - 1.0).abs() <= 1e-12 && (s.upper - 1.0).abs() <= 1e-12, "q={q}");
        }
        let s = sandwich_factors(1.0, &arith(), &x, &y).unwrap();
        assert_eq!((s.lower, s.upper), (1.0, 1.0));

        let id = EinsteinTensor::identity(&Shape::square(2).unwrap());
        let s = sandwich_factors(2.0, &arith(), &id, &diag(&[4.0, 1.0])).unwrap();
        // q = 2 gives n = 1, q0 = 1: r(2, Z0) carries the whole product
        assert!((s.lower - 1.0).abs() < 1e-14);
        assert!((s.upper - 1.36).abs() < 1e-13);
        assert_eq!(s.levels.len(), 2);
    }

    #[test]
    fn psi_cap_examples() {
        let z = diag(&[4.0, 1.0]);
        assert!((psi_cap(2.0, &ConnectionFunction::power(0.5).unwrap(), &z).unwrap() - 1.0).abs() < 1e-15);
        assert!((psi_cap(2.0, &arith(), &z).unwrap() - 1.36).abs() < 1e-14);
        let id = EinsteinTensor::identity(&Shape::square(2).unwrap());
        assert_eq!(psi_cap(3.0, &arith(), &id).unwrap(), 1.0);
    }

    #[test]
    fn kantorovich_pair_examples() {
        let x = diag(&[0.5, 1.0]);
        let k = kantorovich_pair(&x, 2.0).unwrap();
        assert!((k.k2 - (7.0f64 / 9.0).powi(3) * 3.0).abs() < 1e-12);
        assert_eq!(k.k1, 1.0);
        assert!(k.k1_by_convention && !k.k2_by_convention);

        let k = kantorovich_pair(&diag(&[1.0, 1.0]), 3.0).unwrap();
        assert_eq!((k.k1, k.k2), (1.0, 1.0));
    }

    proptest! {
        #[test]
        fn kantorovich_at_least_one(m in 0.01f64..10.0, ratio in 1.001f64..50.0, p in 1.01f64..8.0) {
            let k = kantorovich(m, m * ratio, p).unwrap();
            prop_assert!(k >= 1.0 - 1e-12);
        }

        #[test]
        fn dyadic_reconstructs(q in 1.0f64..1000.0) {
            let d = decompose_q(q).unwrap();
            prop_assert!(d.q0 >= 1.0 && d.q0 < 2.0);
            prop_assert!((2f64.powi(d.n as i32) * d.q0 - q).abs() <= 1e-12 * q);
        }

        #[test]
        fn ratio_brackets_every_eigenvalue(spectrum in prop::collection::vec(0.05f64..5.0, 1..6), q in 1.0f64..4.0) {
            let f = arith();
            let r = ratio_spectrum_values(&f, q, &spectrum).unwrap();
            for &l in &spectrum {
                let v = f.eval(l.powf(q)) / f.eval(l).powf(q);
                prop_assert!(r.min <= v && v <= r.max);
            }
        }

        #[test]
        fn z_sequence_matches_repeated_squaring(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 18)) {
            let shape = Shape::square(3).unwrap();
            let mk = |slice: &[(f64, f64)]| {
                let g = EinsteinTensor::from_entries(
                    shape.clone(),
                    slice.iter().map(|&(a, b)| Complex64::new(a, b)).collect(),
                ).unwrap();
                g.einstein_product(&g.conjugate_transpose()).unwrap().hermitian_part().shift_diagonal(0.5)
            };
            let x = mk(&raw[..9]);
            let y = mk(&raw[9..]);
            let zs = z_sequence(&x, &y, 2).unwrap();
            // independent route: inverse square root, then repeated products
            let xnh = spectral::power(&x, -0.5).unwrap();
            let xinv = x.inverse().unwrap();
            let y2 = y.einstein_product(&y).unwrap();
            let y4 = y2.einstein_product(&y2).unwrap();
            let x2inv = xinv.einstein_product(&xinv).unwrap();
            let want = [
                EinsteinTensor::chain_product(&[&xnh, &y, &xnh]).unwrap(),
                EinsteinTensor::chain_product(&[&xinv, &y2, &xinv]).unwrap(),
                EinsteinTensor::chain_product(&[&x2inv, &y4, &x2inv]).unwrap(),
            ];
            for (z, w) in zs.iter().zip(&want) {
                prop_assert!(z.checked_sub(w).unwrap().frobenius_norm() <= 1e-9 * w.frobenius_norm());
            }
        }
    }
}
