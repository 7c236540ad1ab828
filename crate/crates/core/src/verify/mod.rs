//! Theorem checkers.
//!
//! Each checker draws seeded samples through [`crate::random`], evaluates its
//! claims per sample and reduces the results in trial order, so a report is a
//! pure function of the configuration and seed.
//!
//! A report is a list of [`Claim`]s. Primary claims decide
//! [`BoundReport::satisfied`]; informational claims (printed variants of a
//! trace bound, rescaled sandwiches) are computed and reported but never
//! change the verdict.

mod majorization;
mod sandwich;
mod tail;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::connections::ConnectionSpec;
use crate::error::{Error, Result};
use crate::random::{Ensemble, Normalization, Parallelism, SamplerSpec, DEFAULT_SPECTRUM_FLOOR};
use crate::spectral;
use crate::tensor::{EinsteinTensor, Shape};

pub use majorization::{
    check_majorization_corollaries, check_majorization_lemma, log_majorize, majorize,
    partial_products, partial_sums, weak_log_majorize, weak_majorize,
};
pub use sandwich::{
    check_corollary_pmi_pmd, check_corollary_with, check_psi_lemma, check_sandwich_tmd, check_sandwich_tmi, check_tc,
};
pub use tail::{
    check_chebyshev, check_generalized_chebyshev, check_markov, check_order_lemma,
    clopper_pearson, estimate_not_leq_prob, not_leq, trace_bound, TailEstimate, TraceEstimate,
};

/// Tolerance for per-sample Löwner checks, relative to the larger spectral norm.
pub const DEFAULT_ORDER_TOL: f64 = 1e-8;
/// Relative tolerance used when deciding the event `X ⋠ C`.
pub const EVENT_TOL: f64 = 1e-12;
/// Coverage of the Clopper–Pearson intervals.
pub const CONFIDENCE: f64 = 0.99;
/// Width of the slack in the tail comparison, in units of the combined error.
pub const SLACK_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Markov,
    Chebyshev,
    GenChebyshev,
    OrderLemma,
    TmiSandwich,
    CorPmiPmd,
    TmdSandwich,
    TcBounds,
    PsiLemma,
    MajorizationLemma,
    MajorizationCorollaries,
}

impl TheoremId {
    pub const ALL: [TheoremId; 11] = [
        TheoremId::Markov,
        TheoremId::Chebyshev,
        TheoremId::GenChebyshev,
        TheoremId::OrderLemma,
        TheoremId::TmiSandwich,
        TheoremId::CorPmiPmd,
        TheoremId::TmdSandwich,
        TheoremId::TcBounds,
        TheoremId::PsiLemma,
        TheoremId::MajorizationLemma,
        TheoremId::MajorizationCorollaries,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::Markov => "markov",
            TheoremId::Chebyshev => "chebyshev",
            TheoremId::GenChebyshev => "gen_chebyshev",
            TheoremId::OrderLemma => "order_lemma",
            TheoremId::TmiSandwich => "tmi_sandwich",
            TheoremId::CorPmiPmd => "cor_pmi_pmd",
            TheoremId::TmdSandwich => "tmd_sandwich",
            TheoremId::TcBounds => "tc_bounds",
            TheoremId::PsiLemma => "psi_lemma",
            TheoremId::MajorizationLemma => "majorization_lemma",
            TheoremId::MajorizationCorollaries => "majorization_corollaries",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown theorem id {s:?}")))
    }
}

/// Everything a checker needs. Fields are public; the builders cover the
/// common overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub shape: Shape,
    pub ensemble: Ensemble,
    pub spectrum_floor: f64,
    pub atoms: (f64, f64),
    /// `f` for the TMI checkers, `h` for the TMD sandwich, `g` for the TC bounds.
    pub connection: ConnectionSpec,
    /// `h` used by the majorization corollaries.
    pub tmd_connection: ConnectionSpec,
    /// `g` used by the majorization corollaries.
    pub tc_connection: ConnectionSpec,
    pub q: f64,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// The deterministic PD tensor `C` (or `A`) of the tail statements.
    pub target: EinsteinTensor,
    pub kappa: Option<f64>,
    pub k: Option<usize>,
    pub parallelism: Parallelism,
}

impl CheckConfig {
    pub fn new(shape: Shape, ensemble: Ensemble) -> Self {
        let target = EinsteinTensor::identity(&shape);
        Self {
            shape,
            ensemble,
            spectrum_floor: DEFAULT_SPECTRUM_FLOOR,
            atoms: (0.0, 1.0),
            connection: ConnectionSpec::named("arithmetic"),
            tmd_connection: ConnectionSpec::named("reciprocal_power").with("alpha", 0.5),
            tc_connection: ConnectionSpec::named("square"),
            q: 2.0,
            p: 1.0,
            trials: 500,
            seed: 0,
            tolerance: DEFAULT_ORDER_TOL,
            target,
            kappa: None,
            k: None,
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_connection(mut self, connection: ConnectionSpec) -> Self {
        self.connection = connection;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_floor(mut self, delta: f64) -> Self {
        self.spectrum_floor = delta;
        self
    }

    pub fn with_target(mut self, target: EinsteinTensor) -> Self {
        self.target = target;
        self
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must be positive, got {}", self.q)));
        }
        if !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!("p must be finite, got {}", self.p)));
        }
        if self.target.shape() != &self.shape {
            return Err(Error::ShapeMismatch {
                left: self.shape.modes().to_vec(),
                right: self.target.shape().modes().to_vec(),
            });
        }
        spectral::require_pd(&self.target)?;
        if let Some(kappa) = self.kappa {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
            }
        }
        self.sampler(Normalization::None, None).validate()
    }

    /// Sampler over this configuration's shape and ensemble.
    pub fn sampler(&self, normalization: Normalization, connection: Option<&ConnectionSpec>) -> SamplerSpec {
        SamplerSpec {
            shape: self.shape.clone(),
            ensemble: self.ensemble,
            spectrum_floor: self.spectrum_floor,
            atoms: self.atoms,
            normalization,
            connection: connection.cloned(),
        }
    }

    fn parameters(&self, connection: Option<&ConnectionSpec>) -> ReportParameters {
        ReportParameters {
            shape: self.shape.modes().to_vec(),
            ensemble: self.ensemble.as_str().to_string(),
            connection: connection.map(connection_label).unwrap_or_else(|| "none".into()),
            q: self.q,
            p: self.p,
            trials: self.trials,
            seed: self.seed,
            tolerance: self.tolerance,
            kappa: self.kappa,
            k: self.k,
        }
    }
}

/// `name` or `name(key=value,...)`.
pub fn connection_label(spec: &ConnectionSpec) -> String {
    if spec.parameters.is_empty() {
        return spec.name.clone();
    }
    let params: Vec<String> = spec.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}({})", spec.name, params.join(","))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Decides the verdict.
    Primary,
    /// Reported only.
    Informational,
}

/// Monte Carlo comparison of a probability with a trace bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailClaim {
    pub lhs: TailEstimate,
    /// Bound in the form used for the verdict.
    pub rhs: TraceEstimate,
    /// Bound exactly as printed, where that differs.
    pub rhs_printed: Option<TraceEstimate>,
    pub satisfied: bool,
    pub vacuous: bool,
    pub printed_satisfied: Option<bool>,
}

impl TailClaim {
    pub fn new(lhs: TailEstimate, rhs: TraceEstimate, rhs_printed: Option<TraceEstimate>) -> Self {
        let satisfied = tail_rule(&lhs, &rhs);
        let printed_satisfied = rhs_printed.as_ref().map(|r| tail_rule(&lhs, r));
        Self {
            vacuous: rhs.mean >= 1.0,
            lhs,
            rhs,
            rhs_printed,
            satisfied,
            printed_satisfied,
        }
    }
}

/// `p̂ ≤ rhs + 3·(ci_half_width + rhs_stderr)`; a bound at or above 1 is
/// vacuous and therefore satisfied.
pub fn tail_rule(lhs: &TailEstimate, rhs: &TraceEstimate) -> bool {
    rhs.mean >= 1.0 || lhs.p_hat <= rhs.mean + SLACK_SIGMAS * (lhs.half_width() + rhs.stderr)
}

/// Per-sample order relation with its pass count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicClaim {
    pub passed: usize,
    pub total: usize,
    pub pass_rate: f64,
    /// Largest violation seen, relative to the spectral norms involved.
    pub max_violation: f64,
    /// First failing trial index, if any.
    pub first_failure: Option<usize>,
    pub satisfied: bool,
}

impl DeterministicClaim {
    /// Builds the claim from per-trial relative violations and the tolerance.
    pub fn from_violations(violations: &[f64], tol: f64) -> Self {
        let total = violations.len();
        let passed = violations.iter().filter(|&&v| v <= tol).count();
        let first_failure = violations.iter().position(|&v| v > tol);
        let max_violation = violations.iter().copied().fold(0.0, f64::max);
        Self {
            passed,
            total,
            pass_rate: if total == 0 { 1.0 } else { passed as f64 / total as f64 },
            max_violation,
            first_failure,
            satisfied: passed == total,
        }
    }
}

/// A chain `Pr(a ≥ κ) ≤ Pr(b ≥ κ) ≤ …` checked link by link with slack
/// `p̂_a − p̂_b ≤ half_a + half_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainClaim {
    pub kappa: f64,
    pub k: usize,
    pub links: Vec<TailEstimate>,
    /// Largest `p̂_a − p̂_b − half_a − half_b` over consecutive links.
    pub worst_gap: f64,
    pub satisfied: bool,
}

impl ChainClaim {
    pub fn new(kappa: f64, k: usize, links: Vec<TailEstimate>) -> Self {
        let worst_gap = links
            .windows(2)
            .map(|w| w[0].p_hat - w[1].p_hat - w[0].half_width() - w[1].half_width())
            .fold(f64::NEG_INFINITY, f64::max);
        let worst_gap = if worst_gap.is_finite() { worst_gap } else { 0.0 };
        Self {
            kappa,
            k,
            links,
            worst_gap,
            satisfied: worst_gap <= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Tail(TailClaim),
    Deterministic(DeterministicClaim),
    Chain(ChainClaim),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub role: Role,
    /// Human-readable statement of what was checked.
    pub statement: String,
    pub evidence: Evidence,
}

impl Claim {
    pub fn new(name: &str, role: Role, statement: impl Into<String>, evidence: Evidence) -> Self {
        Self {
            name: name.to_string(),
            role,
            statement: statement.into(),
            evidence,
        }
    }

    pub fn satisfied(&self) -> bool {
        match &self.evidence {
            Evidence::Tail(t) => t.satisfied,
            Evidence::Deterministic(d) => d.satisfied,
            Evidence::Chain(c) => c.satisfied,
        }
    }

    pub fn vacuous(&self) -> bool {
        matches!(&self.evidence, Evidence::Tail(t) if t.vacuous)
    }

    pub fn drives_verdict(&self) -> bool {
        self.role == Role::Primary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub shape: Vec<usize>,
    pub ensemble: String,
    pub connection: String,
    pub q: f64,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub kappa: Option<f64>,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub parameters: ReportParameters,
    pub claims: Vec<Claim>,
    /// All primary claims satisfied.
    pub satisfied: bool,
    /// Every primary claim is a vacuous tail bound.
    pub vacuous: bool,
    /// Spectral extremes and factor ranges gathered along the way.
    pub audit: BTreeMap<String, f64>,
    /// Wall-clock time; kept out of the serialized report.
    #[serde(skip)]
    pub runtime_ms: u64,
}

impl BoundReport {
    pub fn new(
        theorem: TheoremId,
        parameters: ReportParameters,
        claims: Vec<Claim>,
        audit: BTreeMap<String, f64>,
    ) -> Self {
        let primary: Vec<&Claim> = claims.iter().filter(|c| c.drives_verdict()).collect();
        let satisfied = primary.iter().all(|c| c.satisfied());
        let vacuous = !primary.is_empty() && primary.iter().all(|c| c.vacuous());
        Self {
            theorem,
            parameters,
            claims,
            satisfied,
            vacuous,
            audit,
            runtime_ms: 0,
        }
    }

    pub fn claim(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    /// Fraction of primary samples passing, pooled over primary deterministic claims.
    pub fn deterministic_pass_rate(&self) -> Option<f64> {
        let (passed, total) = self
            .claims
            .iter()
            .filter(|c| c.drives_verdict())
            .filter_map(|c| match &c.evidence {
                Evidence::Deterministic(d) => Some((d.passed, d.total)),
                _ => None,
            })
            .fold((0, 0), |(p, t), (dp, dt)| (p + dp, t + dt));
        (total > 0).then(|| passed as f64 / total as f64)
    }

    /// Fraction of tail claims (any role) whose bound is vacuous.
    pub fn vacuous_fraction(&self) -> Option<f64> {
        let tails: Vec<&TailClaim> = self
            .claims
            .iter()
            .filter_map(|c| match &c.evidence {
                Evidence::Tail(t) => Some(t),
                _ => None,
            })
            .collect();
        (!tails.is_empty()).then(|| tails.iter().filter(|t| t.vacuous).count() as f64 / tails.len() as f64)
    }
}

/// Dispatches to the checker for `theorem`.
pub fn run_check(theorem: TheoremId, cfg: &CheckConfig) -> Result<BoundReport> {
    let start = std::time::Instant::now();
    let mut report = match theorem {
        TheoremId::Markov => check_markov(cfg),
        TheoremId::Chebyshev => check_chebyshev(cfg),
        TheoremId::GenChebyshev => check_generalized_chebyshev(cfg, cfg.p),
        TheoremId::OrderLemma => check_order_lemma(cfg),
        TheoremId::TmiSandwich => check_sandwich_tmi(cfg, cfg.q),
        TheoremId::CorPmiPmd => check_corollary_pmi_pmd(cfg, cfg.q),
        TheoremId::TmdSandwich => check_sandwich_tmd(cfg, cfg.q),
        TheoremId::TcBounds => check_tc(cfg, cfg.q),
        TheoremId::PsiLemma => check_psi_lemma(cfg),
        TheoremId::MajorizationLemma => check_majorization_lemma(cfg, cfg.k, cfg.kappa),
        TheoremId::MajorizationCorollaries => {
            check_majorization_corollaries(cfg, cfg.q, cfg.k, cfg.kappa)
        }
    }?;
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Relative amount by which `A ⪯ B` fails: `max(0, −λ_min(B − A)) / max(‖A‖₂, ‖B‖₂)`.
pub fn order_violation(a: &EinsteinTensor, b: &EinsteinTensor) -> Result<f64> {
    let diff = b.checked_sub(a)?.hermitian_part();
    let lo = spectral::lambda_min(&diff)?;
    let scale = spectral::eigen_decompose(a)?
        .spectral_norm()
        .max(spectral::eigen_decompose(b)?.spectral_norm());
    if lo >= 0.0 {
        return Ok(0.0);
    }
    Ok(if scale > 0.0 { -lo / scale } else { f64::INFINITY })
}

fn min_max(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Empirical median; the mean of the middle pair for even lengths.
fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn estimate(count: usize, n: usize) -> TailEstimate {
        TailEstimate::from_count(count, n, 0).unwrap()
    }

    #[test]
    fn theorem_ids_round_trip() {
        for t in TheoremId::ALL {
            assert_eq!(t.as_str().parse::<TheoremId>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.as_str()));
        }
        assert!("nope".parse::<TheoremId>().is_err());
    }

    #[test]
    fn tail_rule_and_vacuity() {
        let rhs = TraceEstimate { mean: 0.5, stderr: 0.0, n: 10 };
        assert!(TailClaim::new(estimate(1, 100), rhs.clone(), None).satisfied);
        let tight = TraceEstimate { mean: 0.0, stderr: 0.0, n: 10 };
        assert!(!TailClaim::new(estimate(90, 100), tight, None).satisfied);
        let big = TraceEstimate { mean: 2.0, stderr: 0.0, n: 10 };
        let c = TailClaim::new(estimate(100, 100), big, None);
        assert!(c.vacuous && c.satisfied);
    }

    #[test]
    fn deterministic_claim_counts() {
        let d = DeterministicClaim::from_violations(&[0.0, 1e-9, 1e-3, 0.0], 1e-8);
        assert_eq!(d.passed, 3);
        assert_eq!(d.first_failure, Some(2));
        assert!(!d.satisfied);
        assert_eq!(d.max_violation, 1e-3);
    }

    #[test]
    fn chain_slack() {
        let ok = ChainClaim::new(1.0, 1, vec![estimate(10, 100), estimate(50, 100), estimate(50, 100)]);
        assert!(ok.satisfied);
        let bad = ChainClaim::new(1.0, 1, vec![estimate(90, 100), estimate(10, 100)]);
        assert!(!bad.satisfied);
    }

    #[test]
    fn order_violation_is_relative() {
        let s = Shape::square(2).unwrap();
        let a = EinsteinTensor::from_diagonal(s.clone(), &[2.0, 1.0]).unwrap();
        let b = EinsteinTensor::from_diagonal(s, &[1.0, 1.0]).unwrap();
        assert_eq!(order_violation(&b, &a).unwrap(), 0.0);
        assert!((order_violation(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn config_validation() {
        let s = Shape::square(2).unwrap();
        let cfg = CheckConfig::new(s.clone(), Ensemble::Wishart);
        assert!(cfg.validate().is_ok());
        assert!(cfg.clone().with_trials(0).validate().is_err());
        let wrong = EinsteinTensor::identity(&Shape::square(3).unwrap());
        assert!(cfg.clone().with_target(wrong).validate().is_err());
        let singular = EinsteinTensor::from_diagonal(s, &[1.0, 0.0]).unwrap();
        assert!(cfg.with_target(singular).validate().is_err());
    }
}
