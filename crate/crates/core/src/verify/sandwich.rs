//! Per-sample Löwner sandwiches for `X^q #_f Y^q` and the tail bounds they
//! induce.
//!
//! Every order relation `A ⪯ B` checked here also yields the tail statement
//! `Pr(A ⋠ C) ≤ Tr(E[B^p] C^{−p})`, so each relation is described once as a
//! [`Half`] and turned into a deterministic claim plus, optionally, a tail claim.

use std::collections::BTreeMap;

use super::tail::{abs_power, not_leq, trace_against};
use super::{
    min_max, order_violation, BoundReport, CheckConfig, Claim, DeterministicClaim, Evidence, Role,
    TailClaim, TailEstimate, TheoremId, TraceEstimate,
};
use crate::bounds::{self, SandwichFactors};
use crate::connections::{
    classify_power_monotonicity, congruence, default_log_grid, is_geodesically_convex, mean_from_eigen,
    power_mean, ConnectionClass, ConnectionFunction, ConnectionSpec, PowerMonotonicity, DEFAULT_Q_GRID,
    DEFAULT_X_GRID,
};
use crate::error::{Error, Result};
use crate::random::{run_trials, sample_pair, sample_pair_conditioned, Normalization, SeedStream};
use crate::spectral::{self, EigenSystem};
use crate::tensor::EinsteinTensor;

/// Slack of the ψ-lemma comparisons.
pub const PSI_TOL: f64 = 1e-10;

/// Description of one relation `lower ⪯ upper`.
struct Half {
    name: String,
    role: Role,
    statement: String,
    tail: bool,
}

impl Half {
    fn new(name: &str, role: Role, statement: impl Into<String>, tail: bool) -> Self {
        Self {
            name: name.into(),
            role,
            statement: statement.into(),
            tail,
        }
    }
}

/// Per-trial outcome for one [`Half`].
#[derive(Debug, Clone, Copy)]
struct Outcome {
    violation: f64,
    event: bool,
    rhs: f64,
    printed: f64,
}

/// Weights `C^{−p}` for the verdict and the printed weight.
struct Weights<'a> {
    c: &'a EinsteinTensor,
    primary: EinsteinTensor,
    printed: EinsteinTensor,
    p: f64,
}

impl<'a> Weights<'a> {
    fn new(cfg: &'a CheckConfig, printed: EinsteinTensor) -> Result<Self> {
        if !(cfg.p >= 1.0 && cfg.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be at least 1, got {}", cfg.p)));
        }
        Ok(Self {
            c: &cfg.target,
            primary: spectral::power(&cfg.target, -cfg.p)?,
            printed,
            p: cfg.p,
        })
    }

    /// Printed weight `C⁻¹`.
    fn inverse(cfg: &'a CheckConfig) -> Result<Self> {
        Self::new(cfg, spectral::power(&cfg.target, -1.0)?)
    }

    fn outcome(&self, lower: &EinsteinTensor, upper: &EinsteinTensor, tail: bool) -> Result<Outcome> {
        let violation = order_violation(lower, upper)?;
        if !tail {
            return Ok(Outcome {
                violation,
                event: false,
                rhs: 0.0,
                printed: 0.0,
            });
        }
        let up = abs_power(upper, self.p)?;
        Ok(Outcome {
            violation,
            event: not_leq(lower, self.c)?,
            rhs: trace_against(&up, &self.primary)?,
            printed: trace_against(&up, &self.printed)?,
        })
    }
}

fn claims_from(halves: &[Half], outcomes: &[Vec<Outcome>], tol: f64, seed: u64) -> Result<Vec<Claim>> {
    let mut claims = Vec::new();
    for (i, half) in halves.iter().enumerate() {
        let column: Vec<Outcome> = outcomes.iter().map(|o| o[i]).collect();
        let violations: Vec<f64> = column.iter().map(|o| o.violation).collect();
        claims.push(Claim::new(
            &half.name,
            half.role,
            half.statement.clone(),
            Evidence::Deterministic(DeterministicClaim::from_violations(&violations, tol)),
        ));
        if half.tail {
            let events: Vec<bool> = column.iter().map(|o| o.event).collect();
            let rhs: Vec<f64> = column.iter().map(|o| o.rhs).collect();
            let printed: Vec<f64> = column.iter().map(|o| o.printed).collect();
            let claim = TailClaim::new(
                TailEstimate::from_events(&events, seed)?,
                TraceEstimate::from_samples(&rhs)?,
                Some(TraceEstimate::from_samples(&printed)?),
            );
            claims.push(Claim::new(
                &format!("{}_tail", half.name),
                half.role,
                format!("tail of [{}]: Pr(lhs ⋠ C) ≤ Tr(E[rhs^p] C^(-p))", half.statement),
                Evidence::Tail(claim),
            ));
        }
    }
    Ok(claims)
}

/// Both `X` and `Y` decomposed, plus `M = X #_f Y` and `T = X^q #_f Y^q`.
pub(crate) struct MeanSample {
    pub x_eig: EigenSystem,
    pub y_eig: EigenSystem,
    pub m: EinsteinTensor,
    pub m_min: f64,
    pub m_max: f64,
    pub t: EinsteinTensor,
}

impl MeanSample {
    pub(crate) fn new(x: &EinsteinTensor, y: &EinsteinTensor, f: &ConnectionFunction, q: f64) -> Result<Self> {
        let x_eig = spectral::require_pd(x)?;
        let y_eig = spectral::require_pd(y)?;
        let m = mean_from_eigen(&x_eig, y, f)?;
        let m_eig = spectral::eigen_decompose(&m)?;
        let t = power_mean(&x_eig, &y_eig, q, f)?;
        Ok(Self {
            m_min: m_eig.lambda_min(),
            m_max: m_eig.lambda_max(),
            x_eig,
            y_eig,
            m,
            t,
        })
    }

    pub(crate) fn conditioned(
        cfg: &CheckConfig,
        spec: &ConnectionSpec,
        f: &ConnectionFunction,
        normalization: Normalization,
        q: f64,
        stream: SeedStream,
    ) -> Result<Self> {
        let sampler = cfg.sampler(normalization, Some(spec));
        let pair = sample_pair_conditioned(&sampler, f, stream)?;
        Self::new(&pair.x, &pair.y, f, q)
    }
}

/// Which pair of scalar coefficients multiplies `M` in the sandwich
/// `a·M ⪯ T ⪯ b·M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Form {
    /// As stated for `f ∈ TMI¹` (Ψ factors, `X #_f Y ⪰ I`).
    TmiPrinted,
    /// As stated for `h ∈ TMD¹` (Φ factors, `X #_h Y ⪯ I`).
    TmdPrinted,
    /// `λ_min^{q−1}` and `λ_max^{q−1}` swapped into the roles that make the
    /// two-sided bound consistent; reported alongside.
    Rescaled,
}

/// `(a, b)` for the sandwich `a·M ⪯ T ⪯ b·M`.
pub(crate) fn coefficients(form: Form, q: f64, factors: &SandwichFactors, m_min: f64, m_max: f64) -> (f64, f64) {
    let (lo, hi) = (factors.lower, factors.upper);
    let e = q - 1.0;
    match (form, q >= 1.0) {
        (Form::TmiPrinted | Form::TmdPrinted, true) => (lo * m_max.powf(e), hi * m_min.powf(e)),
        (Form::TmiPrinted, false) => (hi * m_max.powf(e), lo * m_min.powf(e)),
        (Form::TmdPrinted, false) | (Form::Rescaled, false) => (lo * m_max.powf(e), hi * m_min.powf(e)),
        (Form::Rescaled, true) => (lo * m_min.powf(e), hi * m_max.powf(e)),
    }
}

fn audit_factors(audit: &mut BTreeMap<String, f64>, factors: &[SandwichFactors], samples: &[(f64, f64)]) {
    let (lmin, lmax) = min_max(factors.iter().map(|f| f.lower));
    let (umin, umax) = min_max(factors.iter().map(|f| f.upper));
    audit.insert("lower_factor_min".into(), lmin);
    audit.insert("lower_factor_max".into(), lmax);
    audit.insert("upper_factor_min".into(), umin);
    audit.insert("upper_factor_max".into(), umax);
    let (mm, _) = min_max(samples.iter().map(|s| s.0));
    let (_, mx) = min_max(samples.iter().map(|s| s.1));
    audit.insert("mean_lambda_min".into(), mm);
    audit.insert("mean_lambda_max".into(), mx);
    if let Some(levels) = factors.first().map(|f| f.levels.len()) {
        audit.insert("levels".into(), levels as f64);
    }
}

fn two_sided(
    cfg: &CheckConfig,
    q: f64,
    theorem: TheoremId,
    class: ConnectionClass,
    normalization: Normalization,
    printed: Form,
) -> Result<BoundReport> {
    cfg.validate()?;
    let f = cfg.connection.build()?;
    if !f.has_class(class) {
        return Err(Error::InvalidParameter(format!(
            "{theorem} needs a {class} connection; {} is declared {:?}",
            f.name(),
            f.declared_class()
        )));
    }
    let weights = Weights::inverse(cfg)?;
    let sym = if class == ConnectionClass::Tmi { "Ψ" } else { "Φ" };
    let (lo_text, hi_text, lo_re, hi_re) = match (printed, q >= 1.0) {
        (_, true) => (
            format!("{sym}_lower·λmax^(q-1)(M)·M ⪯ T"),
            format!("T ⪯ {sym}_upper·λmin^(q-1)(M)·M"),
            format!("{sym}_lower·λmin^(q-1)(M)·M ⪯ T"),
            format!("T ⪯ {sym}_upper·λmax^(q-1)(M)·M"),
        ),
        (Form::TmiPrinted, false) => (
            "λmax(ratio)·λmax^(q-1)(M)·M ⪯ T".to_string(),
            "T ⪯ λmin(ratio)·λmin^(q-1)(M)·M".to_string(),
            "λmin(ratio)·λmax^(q-1)(M)·M ⪯ T".to_string(),
            "T ⪯ λmax(ratio)·λmin^(q-1)(M)·M".to_string(),
        ),
        (_, false) => (
            "λmin(ratio)·λmax^(q-1)(M)·M ⪯ T".to_string(),
            "T ⪯ λmax(ratio)·λmin^(q-1)(M)·M".to_string(),
            "λmin(ratio)·λmax^(q-1)(M)·M ⪯ T".to_string(),
            "T ⪯ λmax(ratio)·λmin^(q-1)(M)·M".to_string(),
        ),
    };
    let halves = [
        Half::new("lower", Role::Primary, format!("{lo_text}, q = {q}"), true),
        Half::new("upper", Role::Primary, format!("{hi_text}, q = {q}"), true),
        Half::new("rescaled_lower", Role::Informational, format!("{lo_re}, q = {q}"), false),
        Half::new("rescaled_upper", Role::Informational, format!("{hi_re}, q = {q}"), false),
    ];
    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let sample = MeanSample::conditioned(cfg, &cfg.connection, &f, normalization, q, s)?;
        let factors = bounds::sandwich_factors_eig(q, &f, &sample.x_eig, &sample.y_eig)?;
        let (a, b) = coefficients(printed, q, &factors, sample.m_min, sample.m_max);
        let (ra, rb) = coefficients(Form::Rescaled, q, &factors, sample.m_min, sample.m_max);
        let m = &sample.m;
        let t = &sample.t;
        let outcomes = vec![
            weights.outcome(&m.scale(a), t, true)?,
            weights.outcome(t, &m.scale(b), true)?,
            weights.outcome(&m.scale(ra), t, false)?,
            weights.outcome(t, &m.scale(rb), false)?,
        ];
        Ok((outcomes, factors, (sample.m_min, sample.m_max)))
    })?;
    let outcomes: Vec<Vec<Outcome>> = trials.iter().map(|t| t.0.clone()).collect();
    let factors: Vec<SandwichFactors> = trials.iter().map(|t| t.1.clone()).collect();
    let extremes: Vec<(f64, f64)> = trials.iter().map(|t| t.2).collect();
    let claims = claims_from(&halves, &outcomes, cfg.tolerance, cfg.seed)?;
    let mut audit = BTreeMap::new();
    audit_factors(&mut audit, &factors, &extremes);
    Ok(BoundReport::new(theorem, cfg.parameters(Some(&cfg.connection)), claims, audit))
}

/// Ψ sandwich of `X^q #_f Y^q` for `f ∈ TMI¹` on pairs with `X #_f Y ⪰ I`,
/// plus the tail bounds of both halves.
pub fn check_sandwich_tmi(cfg: &CheckConfig, q: f64) -> Result<BoundReport> {
    two_sided(
        cfg,
        q,
        TheoremId::TmiSandwich,
        ConnectionClass::Tmi,
        Normalization::MeanGeqIdentity,
        Form::TmiPrinted,
    )
}

/// Φ sandwich of `X^q #_h Y^q` for `h ∈ TMD¹` on pairs with `X #_h Y ⪯ I`.
pub fn check_sandwich_tmd(cfg: &CheckConfig, q: f64) -> Result<BoundReport> {
    two_sided(
        cfg,
        q,
        TheoremId::TmdSandwich,
        ConnectionClass::Tmd,
        Normalization::MeanLeqIdentity,
        Form::TmdPrinted,
    )
}

/// One-sided relations between `X^q #_f Y^q` and `λ^{q−1}(M)·M` for pmi or
/// pmd `f`, on the pairs of the TMI sandwich.
pub fn check_corollary_pmi_pmd(cfg: &CheckConfig, q: f64) -> Result<BoundReport> {
    cfg.validate()?;
    check_corollary_with(cfg, &cfg.connection.build()?, q)
}

/// [`check_corollary_pmi_pmd`] for an already built `f`, which need not come
/// from the registry.
pub fn check_corollary_with(cfg: &CheckConfig, f: &ConnectionFunction, q: f64) -> Result<BoundReport> {
    cfg.validate()?;
    if !f.has_class(ConnectionClass::Tmi) {
        return Err(Error::InvalidParameter(format!(
            "cor_pmi_pmd uses the TMI setting; {} is not declared TMI",
            f.name()
        )));
    }
    let class = classify_power_monotonicity(f, &DEFAULT_Q_GRID, &DEFAULT_X_GRID)?;
    let (pmi, pmd) = match class {
        PowerMonotonicity::Pmi => (true, false),
        PowerMonotonicity::Pmd => (false, true),
        PowerMonotonicity::Both => (true, true),
        PowerMonotonicity::Neither => {
            return Err(Error::InvalidParameter(format!(
                "connection {} is neither pmi nor pmd on the classifier grids (q ∈ {:?}, x ∈ {:?})",
                f.name(),
                DEFAULT_Q_GRID,
                DEFAULT_X_GRID
            )))
        }
    };
    // the printed bounds multiply by C itself
    let weights = Weights::new(cfg, cfg.target.clone())?;

    // (name, lower-side is the scaled mean, uses λ_max, printed)
    let mut relations: Vec<(&str, bool, bool)> = Vec::new();
    if pmi {
        if q >= 1.0 {
            relations.push(("pmi_lower", true, true));
        } else {
            relations.push(("pmi_upper", false, true));
        }
    }
    if pmd {
        if q > 1.0 {
            relations.push(("pmd_upper", false, false));
        } else {
            relations.push(("pmd_lower", true, false));
        }
    }
    let mut halves = Vec::new();
    for &(name, scaled_below, uses_max) in &relations {
        let lam = if uses_max { "λmax" } else { "λmin" };
        let other = if uses_max { "λmin" } else { "λmax" };
        let text = |l: &str| {
            if scaled_below {
                format!("{l}^(q-1)(M)·M ⪯ T, q = {q}")
            } else {
                format!("T ⪯ {l}^(q-1)(M)·M, q = {q}")
            }
        };
        halves.push(Half::new(name, Role::Primary, text(lam), true));
        halves.push(Half::new(&format!("rescaled_{name}"), Role::Informational, text(other), false));
    }
    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let sample = MeanSample::conditioned(cfg, &cfg.connection, f, Normalization::MeanGeqIdentity, q, s)?;
        let e = q - 1.0;
        let mut outcomes = Vec::new();
        for &(_, scaled_below, uses_max) in &relations {
            let (main, other) = if uses_max {
                (sample.m_max, sample.m_min)
            } else {
                (sample.m_min, sample.m_max)
            };
            for (coef, tail) in [(main.powf(e), true), (other.powf(e), false)] {
                let scaled = sample.m.scale(coef);
                outcomes.push(if scaled_below {
                    weights.outcome(&scaled, &sample.t, tail)?
                } else {
                    weights.outcome(&sample.t, &scaled, tail)?
                });
            }
        }
        Ok(outcomes)
    })?;
    let claims = claims_from(&halves, &trials, cfg.tolerance, cfg.seed)?;
    let mut audit = BTreeMap::new();
    audit.insert(
        "power_monotonicity".into(),
        match class {
            PowerMonotonicity::Pmi => 1.0,
            PowerMonotonicity::Pmd => -1.0,
            _ => 0.0,
        },
    );
    Ok(BoundReport::new(TheoremId::CorPmiPmd, cfg.parameters(Some(&cfg.connection)), claims, audit))
}

/// Scalar caps around `X^q #_g Y^q` built from Kantorovich constants of `K` and the
/// ratio spectrum on `Z = X^{1/2} Y^{−1} X^{1/2}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TcCaps {
    /// `K1·λ_min^{1−q}(M)·λ_max(ratio)·K2`.
    pub upper: f64,
    /// `λ_min^{1−q}(M)·λ_max(ratio)/K2`.
    pub lower: f64,
    /// `λ_min^{1−q}(M)·λ_min(ratio)/K2`.
    pub lower_ratio_min: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Caps for `X^q #_g Y^q`; `k_source` supplies the spectrum behind `K1`, `K2`.
pub(crate) fn tc_caps(sample: &MeanSample, g: &ConnectionFunction, q: f64, k_source: &EigenSystem) -> Result<TcCaps> {
    let x_half = sample.x_eig.power(0.5)?;
    let y_inv = sample.y_eig.power(-1.0)?;
    let z = congruence(&x_half, &y_inv)?;
    let ratio = bounds::ratio_spectrum(g, q, &z)?;
    let k = bounds::kantorovich_pair_values(k_source.lambda_min(), k_source.lambda_max(), q)?;
    let base = sample.m_min.powf(1.0 - q);
    Ok(TcCaps {
        upper: k.k1 * base * ratio.max * k.k2,
        lower: base * ratio.max / k.k2,
        lower_ratio_min: base * ratio.min / k.k2,
        k1: k.k1,
        k2: k.k2,
    })
}

/// Scalar caps of `X^q #_g Y^q` for `g ∈ TC¹`, `q ≥ 1`: the upper cap on pairs
/// with `X #_g Y ⪯ I`, the lower cap on pairs with `X #_g Y ⪰ I`, and the same
/// pair of statements for `h(x) = x·g(1/x)` with constants taken from `Y`.
pub fn check_tc(cfg: &CheckConfig, q: f64) -> Result<BoundReport> {
    cfg.validate()?;
    if q < 1.0 {
        return Err(Error::InvalidParameter(format!("tc_bounds needs q ≥ 1, got {q}")));
    }
    let g = cfg.connection.build()?;
    if !g.has_class(ConnectionClass::Tc) {
        return Err(Error::InvalidParameter(format!("{} is not declared TC", g.name())));
    }
    let h = g.transform_swap();
    let h_spec = swapped_spec(&cfg.connection, &h);
    let weights = Weights::inverse(cfg)?;
    let halves = [
        Half::new("upper", Role::Primary, format!("T ⪯ K1·λmin^(1-q)(M)·λmax(ratio)·K2·I on X #_g Y ⪯ I, q = {q}"), true),
        Half::new("lower", Role::Primary, format!("λmin^(1-q)(M)·λmax(ratio)·K2⁻¹·I ⪯ T on X #_g Y ⪰ I, q = {q}"), true),
        Half::new(
            "lower_ratio_min",
            Role::Informational,
            format!("λmin^(1-q)(M)·λmin(ratio)·K2⁻¹·I ⪯ T on X #_g Y ⪰ I, q = {q}"),
            false,
        ),
        Half::new(
            "swap_upper",
            Role::Primary,
            format!("X^q #_h Y^q ⪯ K1(Y)·λmin^(1-q)·λmax(h-ratio)·K2(Y)·I on X #_h Y ⪯ I, h = {}", h.name()),
            true,
        ),
        Half::new(
            "swap_lower",
            Role::Primary,
            format!("λmin^(1-q)·λmax(h-ratio)·K2(Y)⁻¹·I ⪯ X^q #_h Y^q on X #_h Y ⪰ I, h = {}", h.name()),
            true,
        ),
    ];
    let shape = cfg.shape.clone();
    let id = EinsteinTensor::identity(&shape);
    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let leq = MeanSample::conditioned(cfg, &cfg.connection, &g, Normalization::MeanLeqIdentity, q, s)?;
        let geq = MeanSample::conditioned(cfg, &cfg.connection, &g, Normalization::MeanGeqIdentity, q, s)?;
        let up = tc_caps(&leq, &g, q, &leq.x_eig)?;
        let lo = tc_caps(&geq, &g, q, &geq.x_eig)?;
        let h_leq = MeanSample::conditioned(cfg, &h_spec, &h, Normalization::MeanLeqIdentity, q, s)?;
        let h_geq = MeanSample::conditioned(cfg, &h_spec, &h, Normalization::MeanGeqIdentity, q, s)?;
        let h_up = tc_caps(&h_leq, &h, q, &h_leq.y_eig)?;
        let h_lo = tc_caps(&h_geq, &h, q, &h_geq.y_eig)?;
        let outcomes = vec![
            weights.outcome(&leq.t, &id.scale(up.upper), true)?,
            weights.outcome(&id.scale(lo.lower), &geq.t, true)?,
            weights.outcome(&id.scale(lo.lower_ratio_min), &geq.t, false)?,
            weights.outcome(&h_leq.t, &id.scale(h_up.upper), true)?,
            weights.outcome(&id.scale(h_lo.lower), &h_geq.t, true)?,
        ];
        Ok((outcomes, [up.k1, up.k2, h_up.k1, h_up.k2]))
    })?;
    let outcomes: Vec<Vec<Outcome>> = trials.iter().map(|t| t.0.clone()).collect();
    let claims = claims_from(&halves, &outcomes, cfg.tolerance, cfg.seed)?;
    let mut audit = BTreeMap::new();
    for (i, key) in ["k1", "k2", "swap_k1", "swap_k2"].iter().enumerate() {
        let (lo, hi) = min_max(trials.iter().map(|t| t.1[i]));
        audit.insert(format!("{key}_min"), lo);
        audit.insert(format!("{key}_max"), hi);
    }
    Ok(BoundReport::new(TheoremId::TcBounds, cfg.parameters(Some(&cfg.connection)), claims, audit))
}

/// A spec that rebuilds `h`; registry maps keep their registry name, anything
/// else is carried as a custom spec the sampler never rebuilds.
pub(crate) fn swapped_spec(g_spec: &ConnectionSpec, h: &ConnectionFunction) -> ConnectionSpec {
    let mut spec = ConnectionSpec::named(h.name());
    spec.parameters = h.parameters().clone();
    if spec.build().is_err() {
        spec = ConnectionSpec::named(&format!("swap({})", g_spec.name));
    }
    spec
}

/// `Ψ_lower ≥ 1` and `Ψ_upper ≤ ψ(q₀, f, Z_n)·∏ψ(2, f, Z_{k−1})` for
/// geodesically convex `f`, on unconditioned pairs.
pub fn check_psi_lemma(cfg: &CheckConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let q = cfg.q;
    if q < 1.0 {
        return Err(Error::InvalidParameter(format!("ψ lemma needs q ≥ 1, got {q}")));
    }
    let f = cfg.connection.build()?;
    if !is_geodesically_convex(&f, &default_log_grid())? {
        return Err(Error::InvalidParameter(format!(
            "log {}(e^t) is not convex on the test grid; the ψ lemma does not apply",
            f.name()
        )));
    }
    let spec = cfg.sampler(Normalization::None, None);
    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let (x, y) = sample_pair(&spec, s)?;
        bounds::sandwich_factors(q, &f, &x, &y)
    })?;
    let lower_v: Vec<f64> = trials.iter().map(|t| (1.0 - t.lower).max(0.0)).collect();
    let upper_v: Vec<f64> = trials.iter().map(|t| (t.upper - t.psi_product).max(0.0)).collect();
    let claims = vec![
        Claim::new(
            "lower_at_least_one",
            Role::Primary,
            format!("Ψ_lower ≥ 1 − {PSI_TOL:e}, q = {q}"),
            Evidence::Deterministic(DeterministicClaim::from_violations(&lower_v, PSI_TOL)),
        ),
        Claim::new(
            "upper_below_psi_product",
            Role::Primary,
            format!("Ψ_upper ≤ ψ(q0, f, Z_n)·∏ ψ(2, f, Z_(k-1)) + {PSI_TOL:e}, q = {q}"),
            Evidence::Deterministic(DeterministicClaim::from_violations(&upper_v, PSI_TOL)),
        ),
    ];
    let mut audit = BTreeMap::new();
    let (lmin, _) = min_max(trials.iter().map(|t| t.lower));
    let (_, umax) = min_max(trials.iter().map(|t| t.upper));
    let (_, gap) = min_max(trials.iter().map(|t| (t.psi_product - t.upper).abs()));
    let (_, dev) = min_max(trials.iter().map(|t| (t.lower - 1.0).abs().max((t.upper - 1.0).abs())));
    audit.insert("lower_factor_min".into(), lmin);
    audit.insert("upper_factor_max".into(), umax);
    audit.insert("psi_gap_max".into(), gap);
    audit.insert("factor_deviation_from_one".into(), dev);
    Ok(BoundReport::new(TheoremId::PsiLemma, cfg.parameters(Some(&cfg.connection)), claims, audit))
}
