//! Partial-sum and partial-product comparisons of eigenvalue sequences.

use std::collections::BTreeMap;

use super::sandwich::{coefficients, tc_caps, Form, MeanSample};
use super::{
    median, BoundReport, ChainClaim, CheckConfig, Claim, DeterministicClaim, Evidence, Role, TailEstimate,
    TheoremId,
};
use crate::bounds;
use crate::connections::ConnectionClass;
use crate::error::{Error, Result};
use crate::random::{run_trials, sample_chain, Normalization};
use crate::spectral;

/// Relative slack in the partial-sum comparisons.
const MAJORIZATION_TOL: f64 = 1e-12;

fn sorted_desc(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn check_lengths(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    Ok(())
}

fn check_positive(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        Some(&x) => Err(Error::Domain {
            what: "log majorization (needs positive entries)".into(),
            eigenvalue: x,
        }),
        None => Ok(()),
    }
}

/// `Σ_{i≤k} x_i` for `k = 1..n`, after sorting descending.
pub fn partial_sums(xs: &[f64]) -> Vec<f64> {
    sorted_desc(xs)
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// `∏_{i≤k} x_i` for `k = 1..n`, after sorting descending.
pub fn partial_products(xs: &[f64]) -> Vec<f64> {
    sorted_desc(xs)
        .iter()
        .scan(1.0, |acc, &x| {
            *acc *= x;
            Some(*acc)
        })
        .collect()
}

fn dominated(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= &(y + MAJORIZATION_TOL * x.abs().max(y.abs())))
}

fn last_equal(a: &[f64], b: &[f64]) -> bool {
    match (a.last(), b.last()) {
        (Some(x), Some(y)) => (x - y).abs() <= MAJORIZATION_TOL * x.abs().max(y.abs()).max(f64::MIN_POSITIVE),
        _ => true,
    }
}

/// `x ⊴_w y`: every partial sum of `x` is at most that of `y`.
pub fn weak_majorize(xs: &[f64], ys: &[f64]) -> Result<bool> {
    check_lengths(xs, ys)?;
    Ok(dominated(&partial_sums(xs), &partial_sums(ys)))
}

/// `x ⊴ y`: weak majorization with equal totals.
pub fn majorize(xs: &[f64], ys: &[f64]) -> Result<bool> {
    check_lengths(xs, ys)?;
    let (a, b) = (partial_sums(xs), partial_sums(ys));
    Ok(dominated(&a, &b) && last_equal(&a, &b))
}

/// `x ⊴_{w log} y` on positive entries.
pub fn weak_log_majorize(xs: &[f64], ys: &[f64]) -> Result<bool> {
    check_lengths(xs, ys)?;
    check_positive(xs)?;
    check_positive(ys)?;
    Ok(dominated(&partial_products(xs), &partial_products(ys)))
}

/// `x ⊴_{log} y`: weak log majorization with equal full products.
pub fn log_majorize(xs: &[f64], ys: &[f64]) -> Result<bool> {
    check_lengths(xs, ys)?;
    check_positive(xs)?;
    check_positive(ys)?;
    let (a, b) = (partial_products(xs), partial_products(ys));
    Ok(dominated(&a, &b) && last_equal(&a, &b))
}

fn top_k_sum(desc: &[f64], k: usize) -> f64 {
    desc[..k].iter().sum()
}

fn top_k_product(desc: &[f64], k: usize) -> f64 {
    desc[..k].iter().product()
}

fn resolve_k(k: Option<usize>, d: usize) -> Result<usize> {
    let k = k.unwrap_or(1);
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={d}, got {k}")));
    }
    Ok(k)
}

/// Chain `Pr(s_0 ≥ κ) ≤ Pr(s_1 ≥ κ) ≤ …` where `stats[link][trial]`; `κ`
/// defaults to the median of link `middle`.
fn chain(stats: &[Vec<f64>], kappa: Option<f64>, middle: usize, k: usize, seed: u64) -> Result<ChainClaim> {
    let kappa = kappa.unwrap_or_else(|| median(&stats[middle]));
    let links = stats
        .iter()
        .map(|s| {
            let events: Vec<bool> = s.iter().map(|&v| v >= kappa).collect();
            TailEstimate::from_events(&events, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainClaim::new(kappa, k, links))
}

/// Spectra of one `(lower, middle, upper)` triple, descending.
type Triple = [Vec<f64>; 3];

fn sums_and_products(triples: &[Triple], k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let sums = (0..3).map(|j| triples.iter().map(|t| top_k_sum(&t[j], k)).collect()).collect();
    let prods = (0..3).map(|j| triples.iter().map(|t| top_k_product(&t[j], k)).collect()).collect();
    (sums, prods)
}

fn domination_violation(t: &Triple) -> f64 {
    let scale = t[2].first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..t[0].len() {
        worst = worst.max(t[0][i] - t[1][i]).max(t[1][i] - t[2][i]);
    }
    worst.max(0.0) / scale
}

/// Claims of the lemma for already computed spectra of chains `X ⪯ Y ⪯ Z`.
fn lemma_claims(
    triples: &[Triple],
    k: usize,
    kappa: Option<f64>,
    tol: f64,
    seed: u64,
) -> Result<(Vec<Claim>, BTreeMap<String, f64>)> {
    let violations: Vec<f64> = triples.iter().map(domination_violation).collect();
    let (sums, prods) = sums_and_products(triples, k);
    let sum_chain = chain(&sums, kappa, 1, k, seed)?;
    let prod_chain = chain(&prods, kappa, 1, k, seed)?;
    let mut audit = BTreeMap::new();
    audit.insert("kappa_sum".into(), sum_chain.kappa);
    audit.insert("kappa_product".into(), prod_chain.kappa);
    let claims = vec![
        Claim::new(
            "eigenvalue_domination",
            Role::Primary,
            "λ_i(X) ≤ λ_i(Y) ≤ λ_i(Z) for every i",
            Evidence::Deterministic(DeterministicClaim::from_violations(&violations, tol)),
        ),
        Claim::new(
            "partial_sum_chain",
            Role::Primary,
            format!("Pr(Σ_(i≤{k}) λ_i(X) ≥ κ) ≤ Pr(… Y …) ≤ Pr(… Z …)"),
            Evidence::Chain(sum_chain),
        ),
        Claim::new(
            "partial_product_chain",
            Role::Primary,
            format!("Pr(∏_(i≤{k}) λ_i(X) ≥ κ) ≤ Pr(… Y …) ≤ Pr(… Z …)"),
            Evidence::Chain(prod_chain),
        ),
    ];
    Ok((claims, audit))
}

/// Eigenvalue domination along constructed chains `X ⪯ Y ⪯ Z` and the
/// monotone chains of `Pr(Σ_{i≤k} λ_i ≥ κ)` and `Pr(∏_{i≤k} λ_i ≥ κ)`.
pub fn check_majorization_lemma(cfg: &CheckConfig, k: Option<usize>, kappa: Option<f64>) -> Result<BoundReport> {
    cfg.validate()?;
    let k = resolve_k(k, cfg.shape.unfold_dim())?;
    let spec = cfg.sampler(Normalization::None, None);
    let triples = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let (x, y, z) = sample_chain(&spec, s)?;
        Ok([
            spectral::eigen_decompose(&x)?.eigenvalues().to_vec(),
            spectral::eigen_decompose(&y)?.eigenvalues().to_vec(),
            spectral::eigen_decompose(&z)?.eigenvalues().to_vec(),
        ])
    })?;
    let (claims, audit) = lemma_claims(&triples, k, kappa, cfg.tolerance, cfg.seed)?;
    let mut params = cfg.parameters(None);
    params.k = Some(k);
    Ok(BoundReport::new(TheoremId::MajorizationLemma, params, claims, audit))
}

fn scaled(spectrum: &[f64], c: f64) -> Vec<f64> {
    spectrum.iter().map(|l| c * l).collect()
}

/// Adds the sum and product chains over `links[link][trial]` spectra.
#[allow(clippy::too_many_arguments)]
fn push_chains(
    claims: &mut Vec<Claim>,
    audit: &mut BTreeMap<String, f64>,
    prefix: &str,
    role: Role,
    what: &str,
    links: &[Vec<Vec<f64>>],
    middle: usize,
    k: usize,
    kappa: Option<f64>,
    seed: u64,
) -> Result<()> {
    let sums: Vec<Vec<f64>> = links.iter().map(|l| l.iter().map(|s| top_k_sum(s, k)).collect()).collect();
    let prods: Vec<Vec<f64>> = links.iter().map(|l| l.iter().map(|s| top_k_product(s, k)).collect()).collect();
    let sum_chain = chain(&sums, kappa, middle, k, seed)?;
    let prod_chain = chain(&prods, kappa, middle, k, seed)?;
    audit.insert(format!("{prefix}_kappa_sum"), sum_chain.kappa);
    audit.insert(format!("{prefix}_kappa_product"), prod_chain.kappa);
    claims.push(Claim::new(
        &format!("{prefix}_sum"),
        role,
        format!("partial sums, k = {k}: {what}"),
        Evidence::Chain(sum_chain),
    ));
    claims.push(Claim::new(
        &format!("{prefix}_product"),
        role,
        format!("partial products, k = {k}: {what}"),
        Evidence::Chain(prod_chain),
    ));
    Ok(())
}

/// Tail-probability chains for the eigenvalue partial sums and products of
/// the three sandwich results: the Ψ sandwich (TMI `f`, `X #_f Y ⪰ I`), the
/// Φ sandwich (TMD `h`, `X #_h Y ⪯ I`) and, for `q ≥ 1`, the scalar caps of
/// TC `g`.
pub fn check_majorization_corollaries(
    cfg: &CheckConfig,
    q: f64,
    k: Option<usize>,
    kappa: Option<f64>,
) -> Result<BoundReport> {
    cfg.validate()?;
    let k = resolve_k(k, cfg.shape.unfold_dim())?;
    let f = cfg.connection.build()?;
    let h = cfg.tmd_connection.build()?;
    let g = cfg.tc_connection.build()?;
    for (func, class) in [(&f, ConnectionClass::Tmi), (&h, ConnectionClass::Tmd), (&g, ConnectionClass::Tc)] {
        if !func.has_class(class) {
            return Err(Error::InvalidParameter(format!("{} is not declared {class}", func.name())));
        }
    }
    let with_tc = q >= 1.0;

    struct Trial {
        tmi: Triple,
        tmi_rescaled: Triple,
        tmd: Triple,
        tmd_rescaled: Triple,
        tc: Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)>,
    }

    let trials = run_trials(cfg.trials, cfg.seed, cfg.parallelism, |s| {
        let triple = |sample: &MeanSample, form: Form, func| -> Result<Triple> {
            let factors = bounds::sandwich_factors_eig(q, func, &sample.x_eig, &sample.y_eig)?;
            let (a, b) = coefficients(form, q, &factors, sample.m_min, sample.m_max);
            let m = spectral::eigen_decompose(&sample.m)?.eigenvalues().to_vec();
            let t = spectral::eigen_decompose(&sample.t)?.eigenvalues().to_vec();
            Ok([scaled(&m, a), t, scaled(&m, b)])
        };
        let fs = MeanSample::conditioned(cfg, &cfg.connection, &f, Normalization::MeanGeqIdentity, q, s)?;
        let hs = MeanSample::conditioned(cfg, &cfg.tmd_connection, &h, Normalization::MeanLeqIdentity, q, s)?;
        let tc = if with_tc {
            let leq = MeanSample::conditioned(cfg, &cfg.tc_connection, &g, Normalization::MeanLeqIdentity, q, s)?;
            let geq = MeanSample::conditioned(cfg, &cfg.tc_connection, &g, Normalization::MeanGeqIdentity, q, s)?;
            let d = cfg.shape.unfold_dim();
            let up = tc_caps(&leq, &g, q, &leq.x_eig)?;
            let lo = tc_caps(&geq, &g, q, &geq.x_eig)?;
            Some((
                spectral::eigen_decompose(&leq.t)?.eigenvalues().to_vec(),
                vec![up.upper; d],
                vec![lo.lower; d],
                spectral::eigen_decompose(&geq.t)?.eigenvalues().to_vec(),
            ))
        } else {
            None
        };
        Ok(Trial {
            tmi: triple(&fs, Form::TmiPrinted, &f)?,
            tmi_rescaled: triple(&fs, Form::Rescaled, &f)?,
            tmd: triple(&hs, Form::TmdPrinted, &h)?,
            tmd_rescaled: triple(&hs, Form::Rescaled, &h)?,
            tc,
        })
    })?;

    let links3 = |get: fn(&Trial) -> &Triple| -> Vec<Vec<Vec<f64>>> {
        (0..3).map(|j| trials.iter().map(|t| get(t)[j].clone()).collect()).collect()
    };
    let mut claims = Vec::new();
    let mut audit = BTreeMap::new();
    let seed = cfg.seed;
    let sandwich_text = "Pr(lower ≥ κ) ≤ Pr(X^q # Y^q ≥ κ) ≤ Pr(upper ≥ κ)";
    push_chains(&mut claims, &mut audit, "tmi", Role::Primary, sandwich_text, &links3(|t| &t.tmi), 1, k, kappa, seed)?;
    push_chains(
        &mut claims,
        &mut audit,
        "tmi_rescaled",
        Role::Informational,
        sandwich_text,
        &links3(|t| &t.tmi_rescaled),
        1,
        k,
        kappa,
        seed,
    )?;
    push_chains(&mut claims, &mut audit, "tmd", Role::Primary, sandwich_text, &links3(|t| &t.tmd), 1, k, kappa, seed)?;
    push_chains(
        &mut claims,
        &mut audit,
        "tmd_rescaled",
        Role::Informational,
        sandwich_text,
        &links3(|t| &t.tmd_rescaled),
        1,
        k,
        kappa,
        seed,
    )?;
    if with_tc {
        let tc: Vec<&(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> =
            trials.iter().map(|t| t.tc.as_ref().expect("computed for q ≥ 1")).collect();
        let upper = vec![
            tc.iter().map(|t| t.0.clone()).collect(),
            tc.iter().map(|t| t.1.clone()).collect(),
        ];
        let lower = vec![
            tc.iter().map(|t| t.2.clone()).collect(),
            tc.iter().map(|t| t.3.clone()).collect(),
        ];
        push_chains(
            &mut claims,
            &mut audit,
            "tc_upper",
            Role::Primary,
            "Pr(X^q #_g Y^q ≥ κ) ≤ Pr(cap ≥ κ) on X #_g Y ⪯ I",
            &upper,
            0,
            k,
            kappa,
            seed,
        )?;
        push_chains(
            &mut claims,
            &mut audit,
            "tc_lower",
            Role::Primary,
            "Pr(floor ≥ κ) ≤ Pr(X^q #_g Y^q ≥ κ) on X #_g Y ⪰ I",
            &lower,
            1,
            k,
            kappa,
            seed,
        )?;
    }
    audit.insert("tc_included".into(), if with_tc { 1.0 } else { 0.0 });
    let mut params = cfg.parameters(Some(&cfg.connection));
    params.q = q;
    params.k = Some(k);
    params.connection = format!(
        "{};{};{}",
        params.connection,
        super::connection_label(&cfg.tmd_connection),
        super::connection_label(&cfg.tc_connection)
    );
    Ok(BoundReport::new(TheoremId::MajorizationCorollaries, params, claims, audit))
}
