//! Connection functions and the operator perspective mean
//! `X #_f Y = X^{1/2} f(X^{−1/2} Y X^{−1/2}) X^{1/2}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, EigenSystem};
use crate::tensor::{EinsteinTensor, Shape};

/// Default `x` grid for the power-monotonicity classifier.
pub const DEFAULT_X_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 4.0, 10.0];
/// Default `q` grid for the power-monotonicity classifier.
pub const DEFAULT_Q_GRID: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

const NORMALIZATION_TOL: f64 = 1e-12;
const CLASSIFIER_SLACK: f64 = 1e-12;
const CONVEXITY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConnectionClass {
    /// tensor monotone increasing
    #[serde(rename = "TMI")]
    Tmi,
    /// tensor monotone decreasing
    #[serde(rename = "TMD")]
    Tmd,
    /// tensor convex
    #[serde(rename = "TC")]
    Tc,
}

impl fmt::Display for ConnectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectionClass::Tmi => "TMI",
            ConnectionClass::Tmd => "TMD",
            ConnectionClass::Tc => "TC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PowerMonotonicity {
    Pmi,
    Pmd,
    Both,
    Neither,
}

type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Power(f64),
    Arithmetic,
    Harmonic,
    ReciprocalPower(f64),
    Square,
    Custom,
}

/// A positive scalar map on `(0, ∞)` with declared class metadata.
#[derive(Clone)]
pub struct ConnectionFunction {
    name: String,
    kind: Kind,
    eval: ScalarMap,
    declared_class: BTreeSet<ConnectionClass>,
    normalized: bool,
    parameters: BTreeMap<String, f64>,
}

impl fmt::Debug for ConnectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionFunction")
            .field("name", &self.name)
            .field("declared_class", &self.declared_class)
            .field("normalized", &self.normalized)
            .field("parameters", &self.parameters)
            .finish()
    }
}

/// Name plus parameters, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl ConnectionSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn build(&self) -> Result<ConnectionFunction> {
        ConnectionFunction::from_registry(&self.name, &self.parameters)
    }
}

fn classes(list: &[ConnectionClass]) -> BTreeSet<ConnectionClass> {
    list.iter().copied().collect()
}

fn params(list: &[(&str, f64)]) -> BTreeMap<String, f64> {
    list.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

impl ConnectionFunction {
    fn builtin(
        name: String,
        kind: Kind,
        eval: ScalarMap,
        declared_class: BTreeSet<ConnectionClass>,
        parameters: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            name,
            kind,
            eval,
            declared_class,
            normalized: true,
            parameters,
        }
    }

    /// `x^α`. Classes follow the exponent: TMI on `(0,1]`, TMD on `[−1,0)`,
    /// TC on `[1,2]`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("power exponent {alpha}")));
        }
        let mut class = BTreeSet::new();
        if alpha > 0.0 && alpha <= 1.0 {
            class.insert(ConnectionClass::Tmi);
        }
        if (-1.0..0.0).contains(&alpha) {
            class.insert(ConnectionClass::Tmd);
        }
        if (1.0..=2.0).contains(&alpha) {
            class.insert(ConnectionClass::Tc);
        }
        let name = if alpha == 0.5 {
            "sqrt".to_string()
        } else {
            format!("power({alpha})")
        };
        Ok(Self::builtin(
            name,
            Kind::Power(alpha),
            Arc::new(move |x: f64| x.powf(alpha)),
            class,
            params(&[("alpha", alpha)]),
        ))
    }

    /// `(1 + x)/2`.
    pub fn arithmetic() -> Self {
        Self::builtin(
            "arithmetic".into(),
            Kind::Arithmetic,
            Arc::new(|x: f64| 0.5 * (1.0 + x)),
            classes(&[ConnectionClass::Tmi]),
            BTreeMap::new(),
        )
    }

    /// `2x/(1 + x)`.
    pub fn harmonic() -> Self {
        Self::builtin(
            "harmonic".into(),
            Kind::Harmonic,
            Arc::new(|x: f64| 2.0 * x / (1.0 + x)),
            classes(&[ConnectionClass::Tmi]),
            BTreeMap::new(),
        )
    }

    /// `x^{−α}` for `α ∈ (0, 1]`.
    pub fn reciprocal_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "reciprocal_power needs alpha in (0, 1], got {alpha}"
            )));
        }
        Ok(Self::builtin(
            format!("reciprocal_power({alpha})"),
            Kind::ReciprocalPower(alpha),
            Arc::new(move |x: f64| x.powf(-alpha)),
            classes(&[ConnectionClass::Tmd]),
            params(&[("alpha", alpha)]),
        ))
    }

    /// `x²`.
    pub fn square() -> Self {
        Self::builtin(
            "square".into(),
            Kind::Square,
            Arc::new(|x: f64| x * x),
            classes(&[ConnectionClass::Tc]),
            BTreeMap::new(),
        )
    }

    /// A user-supplied map with declared classes.
    ///
    /// Rejects maps that are not positive on a log-spaced grid over `[1e−6, 1e6]`.
    pub fn custom<F>(name: &str, declared: &[ConnectionClass], eval: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for k in 0..=120 {
            let x = 10f64.powf(-6.0 + 0.1 * k as f64);
            let y = eval(x);
            if !(y > 0.0 && y.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "connection {name} is not positive at x = {x:e} (value {y})"
                )));
            }
        }
        let normalized = (eval(1.0) - 1.0).abs() <= NORMALIZATION_TOL;
        Ok(Self {
            name: name.to_string(),
            kind: Kind::Custom,
            eval: Arc::new(eval),
            declared_class: classes(declared),
            normalized,
            parameters: BTreeMap::new(),
        })
    }

    /// Looks up a built-in connection by name.
    ///
    /// Names: `power` (`alpha`, default 0.5), `sqrt`/`geometric`, `arithmetic`,
    /// `harmonic`, `reciprocal_power` (`alpha`, default 0.5), `square`.
    pub fn from_registry(name: &str, parameters: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "power" | "reciprocal_power" => &["alpha"],
            _ => &[],
        };
        if let Some(key) = parameters.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "connection {name} does not take parameter {key}"
            )));
        }
        let alpha = parameters.get("alpha").copied().unwrap_or(0.5);
        match name {
            "power" => Self::power(alpha),
            "sqrt" | "geometric" => Self::power(0.5),
            "arithmetic" => Ok(Self::arithmetic()),
            "harmonic" => Ok(Self::harmonic()),
            "reciprocal_power" => Self::reciprocal_power(alpha),
            "square" => Ok(Self::square()),
            other => Err(Error::Config(format!("unknown connection {other}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn declared_class(&self) -> &BTreeSet<ConnectionClass> {
        &self.declared_class
    }

    pub fn has_class(&self, class: ConnectionClass) -> bool {
        self.declared_class.contains(&class)
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    /// Exponent when this is a pure power `x^α` (including `x²` and `x^{−α}`).
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power(a) => Some(a),
            Kind::ReciprocalPower(a) => Some(-a),
            Kind::Square => Some(2.0),
            _ => None,
        }
    }

    /// `f*(x) = 1/f(1/x)`, so that `X⁻¹ #_{f*} Y⁻¹ = (X #_f Y)⁻¹`.
    pub fn adjoint(&self) -> Self {
        match self.kind {
            Kind::Power(_) | Kind::ReciprocalPower(_) | Kind::Square => return self.clone(),
            Kind::Arithmetic => return Self::harmonic(),
            Kind::Harmonic => return Self::arithmetic(),
            Kind::Custom => {}
        }
        let inner = Arc::clone(&self.eval);
        let declared = self
            .declared_class
            .iter()
            .copied()
            .filter(|c| *c != ConnectionClass::Tc)
            .collect();
        Self {
            name: format!("adjoint({})", self.name),
            kind: Kind::Custom,
            eval: Arc::new(move |x: f64| 1.0 / inner(1.0 / x)),
            declared_class: declared,
            normalized: self.normalized,
            parameters: self.parameters.clone(),
        }
    }

    /// `h(x) = x·g(1/x)`, so that `X #_g Y = Y #_h X`.
    pub fn transform_swap(&self) -> Self {
        match self.kind {
            Kind::Power(a) => return Self::power(1.0 - a).expect("finite exponent"),
            Kind::ReciprocalPower(a) => return Self::power(1.0 + a).expect("finite exponent"),
            Kind::Square => return Self::reciprocal_power(1.0).expect("valid exponent"),
            Kind::Arithmetic | Kind::Harmonic => return self.clone(),
            Kind::Custom => {}
        }
        let inner = Arc::clone(&self.eval);
        Self {
            name: format!("swap({})", self.name),
            kind: Kind::Custom,
            eval: Arc::new(move |x: f64| x * inner(1.0 / x)),
            declared_class: self.declared_class.clone(),
            normalized: self.normalized,
            parameters: self.parameters.clone(),
        }
    }

    /// Same map under another name.
    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

/// Value of `X #_f Y` together with the connection that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanResult {
    pub value: EinsteinTensor,
    pub connection: String,
}

/// `X #_f Y = X^{1/2} f(X^{−1/2} Y X^{−1/2}) X^{1/2}`.
pub fn perspective_mean(
    x: &EinsteinTensor,
    y: &EinsteinTensor,
    f: &ConnectionFunction,
) -> Result<MeanResult> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            left: x.shape().modes().to_vec(),
            right: y.shape().modes().to_vec(),
        });
    }
    let x_eig = spectral::require_pd(x)?;
    spectral::require_pd(y)?;
    let value = mean_from_eigen(&x_eig, y, f)?;
    Ok(MeanResult {
        value,
        connection: f.name().to_string(),
    })
}

/// `X #_f Y` where `X` is given by its eigensystem; `Y` must be PD.
pub fn mean_from_eigen(
    x_eig: &EigenSystem,
    y: &EinsteinTensor,
    f: &ConnectionFunction,
) -> Result<EinsteinTensor> {
    let half = x_eig.power(0.5)?;
    let neg_half = x_eig.power(-0.5)?;
    let z = congruence(&neg_half, y)?;
    let fz = apply_connection(&z, f)?;
    congruence(&half, &fz)
}

/// `X^q #_f Y^q` computed from the eigensystems of `X` and `Y`, without
/// re-decomposing the powers.
pub fn power_mean(
    x_eig: &EigenSystem,
    y_eig: &EigenSystem,
    q: f64,
    f: &ConnectionFunction,
) -> Result<EinsteinTensor> {
    let half = x_eig.power(q / 2.0)?;
    let neg_half = x_eig.power(-q / 2.0)?;
    let yq = y_eig.power(q)?;
    let z = congruence(&neg_half, &yq)?;
    let fz = apply_connection(&z, f)?;
    congruence(&half, &fz)
}

/// `A ⋆ B ⋆ A` symmetrized; `A` and `B` Hermitian.
pub fn congruence(a: &EinsteinTensor, b: &EinsteinTensor) -> Result<EinsteinTensor> {
    Ok(a.einstein_product(b)?.einstein_product(a)?.hermitian_part())
}

/// `f(Z)` for PD `Z`, refusing non-positive spectrum or non-positive values of `f`.
pub fn apply_connection(z: &EinsteinTensor, f: &ConnectionFunction) -> Result<EinsteinTensor> {
    let eig = spectral::require_pd(z)?;
    check_positive_on(f, eig.eigenvalues())?;
    eig.apply(|x| f.eval(x))
}

fn check_positive_on(f: &ConnectionFunction, points: &[f64]) -> Result<()> {
    for &x in points {
        let y = f.eval(x);
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain {
                what: format!("connection {}", f.name()),
                eigenvalue: x,
            });
        }
    }
    Ok(())
}

/// Compares `f(x)^q` with `f(x^q)` over the grids.
pub fn classify_power_monotonicity(
    f: &ConnectionFunction,
    q_grid: &[f64],
    x_grid: &[f64],
) -> Result<PowerMonotonicity> {
    if q_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::InvalidParameter("classifier grids must be non-empty".into()));
    }
    if let Some(q) = q_grid.iter().find(|&&q| !(q >= 1.0 && q.is_finite())) {
        return Err(Error::InvalidParameter(format!("q grid point {q} is below 1")));
    }
    if let Some(x) = x_grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("x grid point {x} is not positive")));
    }
    let mut increasing = true;
    let mut decreasing = true;
    for &q in q_grid {
        for &x in x_grid {
            let lhs = f.eval(x).powf(q);
            let rhs = f.eval(x.powf(q));
            increasing &= lhs <= rhs * (1.0 + CLASSIFIER_SLACK);
            decreasing &= rhs <= lhs * (1.0 + CLASSIFIER_SLACK);
        }
    }
    Ok(match (increasing, decreasing) {
        (true, true) => PowerMonotonicity::Both,
        (true, false) => PowerMonotonicity::Pmi,
        (false, true) => PowerMonotonicity::Pmd,
        (false, false) => PowerMonotonicity::Neither,
    })
}

/// Default grid for [`is_geodesically_convex`]: 41 points on `[−5, 5]`.
pub fn default_log_grid() -> Vec<f64> {
    (0..=40).map(|k| -5.0 + 0.25 * k as f64).collect()
}

/// Convexity of `t ↦ log f(eᵗ)` via second divided differences on a grid.
pub fn is_geodesically_convex(f: &ConnectionFunction, grid: &[f64]) -> Result<bool> {
    if grid.len() < 3 {
        return Err(Error::InvalidParameter("need at least three grid points".into()));
    }
    let mut ts = grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 3 {
        return Err(Error::InvalidParameter("need at least three distinct grid points".into()));
    }
    let phi: Vec<f64> = ts.iter().map(|&t| f.eval(t.exp()).ln()).collect();
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: format!("log of connection {}", f.name()),
            eigenvalue: f64::NAN,
        });
    }
    Ok(ts.windows(3).zip(phi.windows(3)).all(|(t, p)| {
        let left = (p[1] - p[0]) / (t[1] - t[0]);
        let right = (p[2] - p[1]) / (t[2] - t[1]);
        2.0 * (right - left) / (t[2] - t[0]) >= -CONVEXITY_SLACK
    }))
}

/// Numeric spot-check of a declared class on random 2×2 PD pairs `A ⪯ B`.
///
/// TMI: `f(A) ⪯ f(B)`; TMD: `f(A) ⪰ f(B)`; TC: `f((A+B)/2) ⪯ (f(A)+f(B))/2`.
/// Returns the number of violating pairs. A zero count is evidence, not proof.
pub fn spot_check_class(
    f: &ConnectionFunction,
    class: ConnectionClass,
    pairs: usize,
    seed: u64,
) -> Result<usize> {
    let shape = Shape::square(2)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..pairs {
        let a = random_pd_2x2(&mut rng, &shape)?;
        let b = &a + &random_psd_2x2(&mut rng, &shape)?;
        let fa = apply_connection(&a, f)?;
        let fb = apply_connection(&b, f)?;
        let ok = match class {
            ConnectionClass::Tmi => spectral::loewner_compare(&fa, &fb, 1e-9)?.is_leq(),
            ConnectionClass::Tmd => spectral::loewner_compare(&fa, &fb, 1e-9)?.is_geq(),
            ConnectionClass::Tc => {
                let mid = apply_connection(&(&a + &b).scale(0.5), f)?;
                let avg = (&fa + &fb).scale(0.5);
                spectral::loewner_compare(&mid, &avg, 1e-9)?.is_leq()
            }
        };
        if !ok {
            violations += 1;
        }
    }
    Ok(violations)
}

fn random_psd_2x2(rng: &mut ChaCha20Rng, shape: &Shape) -> Result<EinsteinTensor> {
    let g = EinsteinTensor::from_fn(shape.clone(), |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })?;
    Ok(g.einstein_product(&g.conjugate_transpose())?.hermitian_part())
}

fn random_pd_2x2(rng: &mut ChaCha20Rng, shape: &Shape) -> Result<EinsteinTensor> {
    Ok(random_psd_2x2(rng, shape)?.shift_diagonal(0.1))
}
