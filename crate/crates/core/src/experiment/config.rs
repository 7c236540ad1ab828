use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::connections::ConnectionSpec;
use crate::error::{Error, Result};
use crate::random::{Ensemble, Parallelism, DEFAULT_SPECTRUM_FLOOR};
use crate::tensor::{EinsteinTensor, Shape};
use crate::verify::{CheckConfig, TheoremId, DEFAULT_ORDER_TOL};

/// The tensor `C` (or `A`) against which tail events are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `c·I`.
    Scalar(f64),
    /// Real diagonal with the given entries, one per unfolded index.
    Diagonal(Vec<f64>),
}

impl TargetSpec {
    pub fn build(&self, shape: &Shape) -> Result<EinsteinTensor> {
        match self {
            TargetSpec::Scalar(c) => Ok(EinsteinTensor::identity(shape).scale(*c)),
            TargetSpec::Diagonal(values) => EinsteinTensor::from_diagonal(shape.clone(), values),
        }
    }
}

fn default_ensemble() -> Ensemble {
    Ensemble::Wishart
}

/// One experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theorem: TheoremId,
    pub shape: Vec<usize>,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmd_connection: Option<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc_connection: Option<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Command-line values that replace the corresponding config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub parallelism: Parallelism,
}

/// Fields a theorem cannot run without.
pub fn required_fields(theorem: TheoremId) -> &'static [&'static str] {
    match theorem {
        TheoremId::Markov | TheoremId::Chebyshev | TheoremId::MajorizationLemma => &[],
        TheoremId::GenChebyshev => &["p"],
        TheoremId::OrderLemma => &["q"],
        TheoremId::TmiSandwich
        | TheoremId::CorPmiPmd
        | TheoremId::TmdSandwich
        | TheoremId::TcBounds
        | TheoremId::PsiLemma => &["connection", "q"],
        TheoremId::MajorizationCorollaries => &["connection", "tmd_connection", "tc_connection", "q"],
    }
}

fn field_error(field: &str, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {message}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(trials) = overrides.trials {
            self.trials = trials;
        }
        if let Some(tol) = overrides.tolerance {
            self.tolerance = Some(tol);
        }
    }

    fn has(&self, field: &str) -> bool {
        match field {
            "connection" => self.connection.is_some(),
            "tmd_connection" => self.tmd_connection.is_some(),
            "tc_connection" => self.tc_connection.is_some(),
            "q" => self.q.is_some(),
            "p" => self.p.is_some(),
            _ => true,
        }
    }

    /// Checks everything that can be checked without sampling.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(field_error("trials", "must be at least 1"));
        }
        for field in required_fields(self.theorem) {
            if !self.has(field) {
                return Err(field_error(field, format!("required by theorem {}", self.theorem)));
            }
        }
        Shape::new(self.shape.clone()).map_err(|e| field_error("shape", e))?;
        for (name, value) in [("q", self.q), ("p", self.p), ("kappa", self.kappa)] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(field_error(name, format!("must be finite, got {v}")));
                }
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(field_error("tolerance", format!("must be positive, got {tol}")));
            }
        }
        for (name, spec) in [
            ("connection", &self.connection),
            ("tmd_connection", &self.tmd_connection),
            ("tc_connection", &self.tc_connection),
        ] {
            if let Some(spec) = spec {
                spec.build().map_err(|e| field_error(name, e))?;
            }
        }
        let cfg = self.to_check_config(Parallelism::Serial)?;
        crate::spectral::require_pd(&cfg.target)
            .map_err(|e| field_error("target", format!("must be positive definite: {e}")))?;
        cfg.validate()
    }

    pub fn to_check_config(&self, parallelism: Parallelism) -> Result<CheckConfig> {
        let shape = Shape::new(self.shape.clone()).map_err(|e| field_error("shape", e))?;
        let mut cfg = CheckConfig::new(shape.clone(), self.ensemble);
        cfg.spectrum_floor = self.spectrum_floor.unwrap_or(DEFAULT_SPECTRUM_FLOOR);
        if let Some([a, b]) = self.atoms {
            cfg.atoms = (a, b);
        }
        if let Some(c) = &self.connection {
            cfg.connection = c.clone();
        }
        if let Some(c) = &self.tmd_connection {
            cfg.tmd_connection = c.clone();
        }
        if let Some(c) = &self.tc_connection {
            cfg.tc_connection = c.clone();
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        cfg.trials = self.trials;
        cfg.seed = self.seed;
        cfg.tolerance = self.tolerance.unwrap_or(DEFAULT_ORDER_TOL);
        if let Some(target) = &self.target {
            cfg.target = target.build(&shape).map_err(|e| field_error("target", e))?;
        }
        cfg.kappa = self.kappa;
        cfg.k = self.k;
        cfg.parallelism = parallelism;
        Ok(cfg)
    }

    /// Report path without extension. `--out-dir` keeps the file name of
    /// `out` (or the theorem id) and replaces its directory.
    pub fn output_base(&self, out_dir: Option<&Path>) -> PathBuf {
        let configured = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(self.theorem.as_str()));
        let base = match out_dir {
            Some(dir) => dir.join(configured.file_name().unwrap_or(configured.as_os_str())),
            None => configured,
        };
        strip_known_extension(base)
    }
}

fn strip_known_extension(path: PathBuf) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => path.with_extension(""),
        _ => path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn markov() -> ExperimentConfig {
        ExperimentConfig::from_json(r#"{"theorem": "markov", "shape": [1], "trials": 10}"#).unwrap()
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = markov();
        assert_eq!(cfg.ensemble, Ensemble::Wishart);
        assert_eq!(cfg.seed, 0);
        let check = cfg.to_check_config(Parallelism::Serial).unwrap();
        assert_eq!(check.tolerance, DEFAULT_ORDER_TOL);
        assert_eq!(check.spectrum_floor, DEFAULT_SPECTRUM_FLOOR);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_field_reports_name_and_position() {
        let err = ExperimentConfig::from_json(
            "{\"theorem\": \"markov\",\n \"shape\": [1],\n \"trails\": 10}",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("trails"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn zero_trials_rejected() {
        let mut cfg = markov();
        cfg.trials = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("trials"));
    }

    #[test]
    fn missing_theorem_parameters_rejected() {
        let cfg = ExperimentConfig::from_json(
            r#"{"theorem": "tmi_sandwich", "shape": [2], "trials": 10, "q": 2}"#,
        )
        .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("connection"));
        let cfg = ExperimentConfig::from_json(r#"{"theorem": "gen_chebyshev", "shape": [2], "trials": 10}"#)
            .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("`p`"));
    }

    #[test]
    fn unknown_connection_and_bad_target_rejected() {
        let mut cfg = markov();
        cfg.connection = Some(ConnectionSpec::named("cubic"));
        assert!(cfg.validate().is_err());
        let mut cfg = markov();
        cfg.target = Some(TargetSpec::Diagonal(vec![1.0, 2.0]));
        assert!(cfg.validate().unwrap_err().to_string().contains("target"));
        let mut cfg = markov();
        cfg.target = Some(TargetSpec::Scalar(-1.0));
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = markov();
        cfg.apply(&Overrides {
            seed: Some(9),
            trials: Some(3),
            tolerance: Some(1e-6),
            ..Overrides::default()
        });
        assert_eq!((cfg.seed, cfg.trials, cfg.tolerance), (9, 3, Some(1e-6)));
    }

    #[test]
    fn output_base_rules() {
        let mut cfg = markov();
        assert_eq!(cfg.output_base(None), PathBuf::from("markov"));
        cfg.out = Some(PathBuf::from("runs/scalar.csv"));
        assert_eq!(cfg.output_base(None), PathBuf::from("runs/scalar"));
        assert_eq!(cfg.output_base(Some(Path::new("/tmp/x"))), PathBuf::from("/tmp/x/scalar"));
    }

    #[test]
    fn config_round_trips() {
        let text = r#"{"theorem": "tc_bounds", "shape": [2, 2], "ensemble": "diag_uniform",
            "connection": {"name": "square"}, "q": 2.0, "trials": 5, "seed": 3,
            "target": {"diagonal": [1, 2, 3, 4]}, "atoms": [0.5, 2.0]}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
        cfg.validate().unwrap();
    }
}
