//! Bernoulli estimates of `Pr(X ⋠ C)`, plug-in trace bounds and the
//! Markov / Chebyshev family of checkers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use super::{min_max, BoundReport, CheckConfig, Claim, Evidence, Role, TailClaim, TheoremId, CONFIDENCE, EVENT_TOL};
use crate::error::{Error, Result};
use crate::random::{run_trials, sample_chain, sample_pd, Normalization, Parallelism, SeedStream};
use crate::spectral;
use crate::tensor::EinsteinTensor;

/// Fraction of trials in which the event occurred, with a Clopper–Pearson
/// interval at [`CONFIDENCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub count: usize,
    pub n_trials: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl TailEstimate {
    pub fn from_count(count: usize, n_trials: usize, seed: u64) -> Result<Self> {
        let (ci_low, ci_high) = clopper_pearson(count, n_trials, CONFIDENCE)?;
        Ok(Self {
            p_hat: count as f64 / n_trials as f64,
            count,
            n_trials,
            ci_low,
            ci_high,
            seed,
        })
    }

    pub fn from_events(events: &[bool], seed: u64) -> Result<Self> {
        Self::from_count(events.iter().filter(|&&e| e).count(), events.len(), seed)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Exact binomial interval for `count` successes in `n` trials.
pub fn clopper_pearson(count: usize, n: usize, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("interval needs at least one trial".into()));
    }
    if count > n {
        return Err(Error::InvalidParameter(format!("{count} successes out of {n} trials")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let alpha = 1.0 - confidence;
    let (k, n) = (count as f64, n as f64);
    let low = if count == 0 { 0.0 } else { inv_beta_reg(k, n - k + 1.0, alpha / 2.0) };
    let high = if count as f64 == n { 1.0 } else { inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    Ok((low.clamp(0.0, 1.0), high.clamp(0.0, 1.0)))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl TraceEstimate {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidParameter("trace estimate needs at least one sample".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, stderr, n })
    }
}

/// `X ⋠ C`, i.e. `C − X` has an eigenvalue below `−EVENT_TOL·max(‖X‖₂, ‖C‖₂)`.
pub fn not_leq(x: &EinsteinTensor, c: &EinsteinTensor) -> Result<bool> {
    Ok(!spectral::loewner_compare(x, c, EVENT_TOL)?.is_leq())
}

/// `Pr(sample ⋠ C)` over `n` seeded trials.
pub fn estimate_not_leq_prob<F>(
    sample: F,
    c: &EinsteinTensor,
    n: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<TailEstimate>
where
    F: Fn(SeedStream) -> Result<EinsteinTensor> + Sync + Send,
{
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let events = run_trials(n, seed, parallelism, |s| not_leq(&sample(s)?, c))?;
    TailEstimate::from_events(&events, seed)
}

/// Plug-in estimate of `Tr(E[|expr|^p] ⋆ C^{−p})`.
pub fn trace_bound<F>(
    expr: F,
    c: &EinsteinTensor,
    p: f64,
    n: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<TraceEstimate>
where
    F: Fn(SeedStream) -> Result<EinsteinTensor> + Sync + Send,
{
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    require_p(p)?;
    let weight = spectral::power(c, -p)?;
    let values = run_trials(n, seed, parallelism, |s| {
        let x = expr(s)?;
        trace_against(&abs_power(&x, p)?, &weight)
    })?;
    TraceEstimate::from_samples(&values)
}

fn require_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")))
    }
}

/// `|X|^p` for Hermitian `X`.
pub(crate) fn abs_power(x: &EinsteinTensor, p: f64) -> Result<EinsteinTensor> {
    spectral::eigen_decompose(x)?.apply(|l| l.abs().powf(p))
}

/// `Re Tr(A ⋆ W)`.
pub(crate) fn trace_against(a: &EinsteinTensor, w: &EinsteinTensor) -> Result<f64> {
    Ok(a.einstein_product(w)?.trace().re)
}

/// One tail claim from per-trial events and bound terms.
pub(crate) fn tail_claim(
    events: &[bool],
    rhs: &[f64],
    printed: Option<&[f64]>,
    seed: u64,
) -> Result<TailClaim> {
    let lhs = TailEstimate::from_events(events, seed)?;
    let rhs = TraceEstimate::from_samples(rhs)?;
    let printed = printed.map(TraceEstimate::from_samples).transpose()?;
    Ok(TailClaim::new(lhs, rhs, printed))
}

struct TailTrial {
    event: bool,
    rhs: f64,
    printed: Option<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

/// Shared body of the Markov, Chebyshev and generalized Chebyshev checkers.
fn single_tail(
    cfg: &CheckConfig,
    theorem: TheoremId,
    statement: String,
    require_psd: bool,
    p: f64,
    printed_weight: Option<EinsteinTensor>,
) -> Result<BoundReport> {
    cfg.validate()?;
    let spec = cfg.sampler(Normalization::None, None);
    let c = &cfg.target;
    let weight = spectral::power(c, -p)?;
    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let x = sample_pd(&spec, s)?;
        let eig = spectral::eigen_decompose(&x)?;
        if require_psd && eig.lambda_min() < -spectral::DEFAULT_PSD_TOL * eig.spectral_norm().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "{theorem} needs PSD samples; trial {} has eigenvalue {:e}",
                s.trial_index,
                eig.lambda_min()
            )));
        }
        let xp = eig.apply(|l| l.abs().powf(p))?;
        Ok(TailTrial {
            event: not_leq(&x, c)?,
            rhs: trace_against(&xp, &weight)?,
            printed: printed_weight.as_ref().map(|w| trace_against(&xp, w)).transpose()?,
            lambda_min: eig.lambda_min(),
            lambda_max: eig.lambda_max(),
        })
    })?;
    let events: Vec<bool> = trials.iter().map(|t| t.event).collect();
    let rhs: Vec<f64> = trials.iter().map(|t| t.rhs).collect();
    let printed: Option<Vec<f64>> = trials.iter().map(|t| t.printed).collect();
    let claim = tail_claim(&events, &rhs, printed.as_deref(), cfg.seed)?;
    let mut audit = BTreeMap::new();
    let (lo, _) = min_max(trials.iter().map(|t| t.lambda_min));
    let (_, hi) = min_max(trials.iter().map(|t| t.lambda_max));
    audit.insert("sample_lambda_min".into(), lo);
    audit.insert("sample_lambda_max".into(), hi);
    audit.insert("p".into(), p);
    Ok(BoundReport::new(
        theorem,
        cfg.parameters(None),
        vec![Claim::new(theorem.as_str(), Role::Primary, statement, Evidence::Tail(claim))],
        audit,
    ))
}

/// `Pr(X ⋠ A) ≤ Tr(E[X] ⋆ A⁻¹)` for PSD `X`.
pub fn check_markov(cfg: &CheckConfig) -> Result<BoundReport> {
    single_tail(cfg, TheoremId::Markov, "Pr(X ⋠ A) ≤ Tr(E[X] A⁻¹)".into(), true, 1.0, None)
}

/// `Pr(X ⋠ A) ≤ Tr(E[X²] ⋆ A⁻²)`.
pub fn check_chebyshev(cfg: &CheckConfig) -> Result<BoundReport> {
    single_tail(cfg, TheoremId::Chebyshev, "Pr(X ⋠ A) ≤ Tr(E[X²] A⁻²)".into(), false, 2.0, None)
}

/// `Pr(X ⋠ A) ≤ Tr(E[|X|^p] ⋆ A^{−p})`; the `A^{+p}` form appearing at the
/// end of the argument is reported as the printed variant.
pub fn check_generalized_chebyshev(cfg: &CheckConfig, p: f64) -> Result<BoundReport> {
    require_p(p)?;
    cfg.validate()?;
    let printed = spectral::power(&cfg.target, p)?;
    single_tail(
        cfg,
        TheoremId::GenChebyshev,
        format!("Pr(X ⋠ A) ≤ Tr(E[|X|^p] A^(-p)), p = {p}"),
        false,
        p,
        Some(printed),
    )
}

struct ChainTrial {
    x_event: bool,
    y_event: bool,
    zq_primary: f64,
    zq_printed: f64,
    yq_primary: f64,
    yq_printed: f64,
}

/// For chains `X ⪯ Y ⪯ Z` and `q ≥ 1`:
/// `Pr(Y ⋠ C) ≤ Tr(E[Z^q] C^{−q})` and `Pr(X ⋠ C) ≤ Tr(E[Y^q] C^{−q})`,
/// with the `C⁻¹` forms as printed variants.
pub fn check_order_lemma(cfg: &CheckConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let q = cfg.q;
    if q < 1.0 {
        return Err(Error::InvalidParameter(format!("order lemma needs q ≥ 1, got {q}")));
    }
    let spec = cfg.sampler(Normalization::None, None);
    let c = &cfg.target;
    let w_q = spectral::power(c, -q)?;
    let w_1 = spectral::power(c, -1.0)?;
    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let (x, y, z) = sample_chain(&spec, s)?;
        let yq = abs_power(&y, q)?;
        let zq = abs_power(&z, q)?;
        Ok(ChainTrial {
            x_event: not_leq(&x, c)?,
            y_event: not_leq(&y, c)?,
            zq_primary: trace_against(&zq, &w_q)?,
            zq_printed: trace_against(&zq, &w_1)?,
            yq_primary: trace_against(&yq, &w_q)?,
            yq_printed: trace_against(&yq, &w_1)?,
        })
    })?;
    let col = |f: fn(&ChainTrial) -> f64| trials.iter().map(f).collect::<Vec<f64>>();
    let y_events: Vec<bool> = trials.iter().map(|t| t.y_event).collect();
    let x_events: Vec<bool> = trials.iter().map(|t| t.x_event).collect();
    let by_z = tail_claim(&y_events, &col(|t| t.zq_primary), Some(&col(|t| t.zq_printed)), cfg.seed)?;
    let by_y = tail_claim(&x_events, &col(|t| t.yq_primary), Some(&col(|t| t.yq_printed)), cfg.seed)?;
    let claims = vec![
        Claim::new(
            "y_by_z",
            Role::Primary,
            format!("Pr(Y ⋠ C) ≤ Tr(E[Z^q] C^(-q)), q = {q}; printed variant uses C⁻¹"),
            Evidence::Tail(by_z),
        ),
        Claim::new(
            "x_by_y",
            Role::Primary,
            format!("Pr(X ⋠ C) ≤ Tr(E[Y^q] C^(-q)), q = {q}; printed variant uses C⁻¹"),
            Evidence::Tail(by_y),
        ),
    ];
    Ok(BoundReport::new(TheoremId::OrderLemma, cfg.parameters(None), claims, BTreeMap::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Ensemble;
    use crate::tensor::Shape;

    /// `P(Bin(n, p) ≥ k)` by direct summation in log space.
    fn binomial_upper_tail(k: usize, n: usize, p: f64) -> f64 {
        let ln_choose = |n: usize, j: usize| -> f64 {
            (1..=j).map(|i| ((n - j + i) as f64).ln() - (i as f64).ln()).sum()
        };
        (k..=n)
            .map(|j| (ln_choose(n, j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp())
            .sum()
    }

    #[test]
    fn clopper_pearson_matches_binomial_tails() {
        for &(k, n) in &[(1usize, 10usize), (5, 20), (37, 200), (199, 200)] {
            let (lo, hi) = clopper_pearson(k, n, 0.99).unwrap();
            // at the lower end P(X ≥ k) = α/2, at the upper end P(X ≤ k) = α/2
            assert!((binomial_upper_tail(k, n, lo) - 0.005).abs() < 1e-8, "{k}/{n}");
            assert!((1.0 - binomial_upper_tail(k + 1, n, hi) - 0.005).abs() < 1e-8, "{k}/{n}");
        }
        assert_eq!(clopper_pearson(0, 50, 0.99).unwrap().0, 0.0);
        assert_eq!(clopper_pearson(50, 50, 0.99).unwrap().1, 1.0);
        assert!(clopper_pearson(3, 2, 0.99).is_err());
        assert!(clopper_pearson(0, 0, 0.99).is_err());
    }

    #[test]
    fn estimate_invariants() {
        for &(k, n) in &[(0usize, 7usize), (3, 7), (7, 7)] {
            let e = TailEstimate::from_count(k, n, 1).unwrap();
            assert!(0.0 <= e.ci_low && e.ci_low <= e.p_hat && e.p_hat <= e.ci_high && e.ci_high <= 1.0);
        }
    }

    #[test]
    fn deterministic_samples() {
        let s = Shape::square(3).unwrap();
        let c = EinsteinTensor::from_diagonal(s.clone(), &[1.0, 2.0, 3.0]).unwrap();
        let half = estimate_not_leq_prob(|_| Ok(c.scale(0.5)), &c, 20, 0, Parallelism::Serial).unwrap();
        assert_eq!(half.p_hat, 0.0);
        let double = estimate_not_leq_prob(|_| Ok(c.scale(2.0)), &c, 20, 0, Parallelism::Serial).unwrap();
        assert_eq!(double.p_hat, 1.0);
        let tr = trace_bound(|_| Ok(c.clone()), &c, 1.0, 5, 0, Parallelism::Serial).unwrap();
        assert!((tr.mean - 3.0).abs() < 1e-12 && tr.stderr == 0.0);
        let id = EinsteinTensor::identity(&s);
        let tr2 = trace_bound(|_| Ok(id.clone()), &id.scale(2.0), 2.0, 5, 0, Parallelism::Serial).unwrap();
        assert!((tr2.mean - 0.75).abs() < 1e-12);
        assert!(trace_bound(|_| Ok(id.clone()), &id, 0.5, 5, 0, Parallelism::Serial).is_err());
    }

    fn scalar_exp(trials: usize) -> CheckConfig {
        let s = Shape::new(vec![1]).unwrap();
        CheckConfig::new(s.clone(), Ensemble::Exponential)
            .with_floor(0.0)
            .with_trials(trials)
            .with_seed(11)
            .with_target(EinsteinTensor::identity(&s).scale(2.0))
    }

    #[test]
    fn scalar_markov_and_chebyshev() {
        let cfg = scalar_exp(10_000);
        let m = check_markov(&cfg).unwrap();
        let Evidence::Tail(t) = &m.claims[0].evidence else { panic!() };
        let truth = (-2.0f64).exp();
        assert!(t.lhs.ci_low <= truth && truth <= t.lhs.ci_high, "{t:?}");
        assert!((t.rhs.mean - 0.5).abs() < 4.0 * t.rhs.stderr);
        assert!(m.satisfied && !m.vacuous);
        let c = check_chebyshev(&cfg).unwrap();
        let Evidence::Tail(t) = &c.claims[0].evidence else { panic!() };
        assert!((t.rhs.mean - 0.5).abs() < 4.0 * t.rhs.stderr);
        assert!(c.satisfied);
    }

    #[test]
    fn expectation_of_exp_via_trace_bound() {
        let s = Shape::new(vec![1]).unwrap();
        let spec = crate::random::SamplerSpec::new(s.clone(), Ensemble::Exponential).with_floor(0.0);
        let c = EinsteinTensor::scalar(2.0);
        let est = trace_bound(|st| sample_pd(&spec, st), &c, 1.0, 10_000, 5, Parallelism::Parallel).unwrap();
        assert!((est.mean - 0.5).abs() < 4.0 * est.stderr);
    }

    #[test]
    fn order_lemma_deterministic_chain() {
        // X = Y = Z = 0.5 I via a zero-width two-atom ensemble without increments
        let s = Shape::square(2).unwrap();
        let mut cfg = CheckConfig::new(s, Ensemble::TwoAtom).with_trials(50).with_q(2.0);
        cfg.atoms = (0.0, 0.0);
        cfg.spectrum_floor = 0.5;
        let r = check_order_lemma(&cfg).unwrap();
        for claim in &r.claims {
            let Evidence::Tail(t) = &claim.evidence else { panic!() };
            assert_eq!(t.lhs.p_hat, 0.0);
            assert!(t.satisfied);
        }
        assert!(check_order_lemma(&cfg.clone().with_q(0.5)).is_err());
    }

    #[test]
    fn generalized_chebyshev_reports_printed_variant() {
        let cfg = CheckConfig::new(Shape::square(2).unwrap(), Ensemble::Wishart)
            .with_trials(200)
            .with_target(EinsteinTensor::identity(&Shape::square(2).unwrap()).scale(3.0));
        let r = check_generalized_chebyshev(&cfg, 2.0).unwrap();
        let Evidence::Tail(t) = &r.claims[0].evidence else { panic!() };
        let printed = t.rhs_printed.as_ref().unwrap();
        // A^{+p} versus A^{−p} with A = 3I differ by 3^{2p}
        assert!((printed.mean / t.rhs.mean - 81.0).abs() < 1e-9);
        assert!(check_generalized_chebyshev(&cfg, 0.5).is_err());
    }

    #[test]
    fn markov_rejects_indefinite_targets() {
        let s = Shape::square(2).unwrap();
        let bad = EinsteinTensor::from_diagonal(s.clone(), &[1.0, -1.0]).unwrap();
        let cfg = CheckConfig::new(s, Ensemble::Wishart).with_target(bad);
        assert!(check_markov(&cfg).is_err());
    }
}
