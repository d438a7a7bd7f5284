//! Run configuration: a single TOML (or JSON) document with flat tables.
//! Unknown keys are rejected everywhere, and the schema version is pinned.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use gadd_core::expansion::IntegrationScheme;
use gadd_core::measure::GaussianMeasure;

/// Errors surfaced while reading or validating a configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config schema version; must be 1.
    pub schema: u32,
    /// Number of input variables N.
    pub dimension: usize,
    pub covariance: CovarianceSpec,
    pub model: ModelSpec,
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub report: ReportSpec,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSpec>,
    /// Output directory; overridden by GADD_OUT_DIR and by --out.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub s: usize,
    pub m: u32,
}

/// Covariance as a full matrix (kind = "matrix", field `rows`) or as unit
/// variances plus a correlation list (kind = "correlation", field
/// `correlations` holding (i, j, rho) entries).
///
/// Kept as a flat struct rather than a tagged enum so unknown keys are
/// rejected reliably.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlations: Option<Vec<(usize, usize, f64)>>,
}

/// Model selection.  Kinds: "quadratic_symmetric" (field `params` =
/// [a0, a1, b0, b1, c0, c1], dimension 3), "additive_linear" (field
/// `coefficients`), "polynomial" (field `terms`), and "external" (fields
/// `command`, `timeout_secs`, `restart`).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartPolicy>,
}

/// The validated view of a [`ModelSpec`].
pub enum ModelKind<'a> {
    QuadraticSymmetric {
        params: [f64; 6],
    },
    AdditiveLinear {
        coefficients: &'a [f64],
    },
    Polynomial {
        terms: &'a [TermSpec],
    },
    External {
        command: &'a CommandSpec,
        timeout_secs: u64,
        restart: RestartPolicy,
    },
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<ModelKind<'_>, ConfigError> {
        let reject_builtin_fields = |spec: &ModelSpec| -> Result<(), ConfigError> {
            if spec.command.is_some() || spec.timeout_secs.is_some() || spec.restart.is_some() {
                return fail(format!(
                    "model kind {:?} does not take external-process fields",
                    spec.kind
                ));
            }
            Ok(())
        };
        match self.kind.as_str() {
            "quadratic_symmetric" => {
                reject_builtin_fields(self)?;
                if self.coefficients.is_some() || self.terms.is_some() {
                    return fail("quadratic_symmetric takes only the `params` field");
                }
                let params = self
                    .params
                    .ok_or_else(|| ConfigError("quadratic_symmetric needs `params`".into()))?;
                Ok(ModelKind::QuadraticSymmetric { params })
            }
            "additive_linear" => {
                reject_builtin_fields(self)?;
                if self.params.is_some() || self.terms.is_some() {
                    return fail("additive_linear takes only the `coefficients` field");
                }
                let coefficients = self
                    .coefficients
                    .as_deref()
                    .ok_or_else(|| ConfigError("additive_linear needs `coefficients`".into()))?;
                Ok(ModelKind::AdditiveLinear { coefficients })
            }
            "polynomial" => {
                reject_builtin_fields(self)?;
                if self.params.is_some() || self.coefficients.is_some() {
                    return fail("polynomial takes only the `terms` field");
                }
                let terms = self
                    .terms
                    .as_deref()
                    .ok_or_else(|| ConfigError("polynomial needs `terms`".into()))?;
                Ok(ModelKind::Polynomial { terms })
            }
            "external" => {
                if self.params.is_some() || self.coefficients.is_some() || self.terms.is_some() {
                    return fail("external takes `command`, `timeout_secs`, `restart` only");
                }
                let command = self
                    .command
                    .as_ref()
                    .ok_or_else(|| ConfigError("external needs `command`".into()))?;
                Ok(ModelKind::External {
                    command,
                    timeout_secs: self.timeout_secs.unwrap_or_else(default_timeout_secs),
                    restart: self.restart.unwrap_or_default(),
                })
            }
            other => fail(format!(
                "unknown model kind {:?} (expected quadratic_symmetric, additive_linear, polynomial, or external)",
                other
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CommandSpec {
    Line(String),
    Argv(Vec<String>),
}

impl CommandSpec {
    pub fn argv(&self) -> Result<Vec<String>, ConfigError> {
        let argv: Vec<String> = match self {
            CommandSpec::Line(s) => s.split_whitespace().map(String::from).collect(),
            CommandSpec::Argv(v) => v.clone(),
        };
        if argv.is_empty() {
            return fail("external model command is empty");
        }
        Ok(argv)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RestartPolicy {
    /// Fail the run on the first protocol violation or timeout.
    #[default]
    Never,
    /// Restart the process once per failed evaluation and retry.
    OnFailure,
}

fn default_timeout_secs() -> u64 {
    30
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Points per dimension.
    #[serde(default = "default_points")]
    pub n: usize,
    #[serde(default)]
    pub scheme: SchemeSpec,
    /// Reduction order S for the reduced scheme.
    #[serde(default = "default_reduction_order")]
    pub reduction_order: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    /// Full tensor-product rule; exact for low-degree integrands, feasible
    /// for small N.
    #[default]
    Tensor,
    /// Dimension-reduction (cut) scheme; linear or quadratic cost in N.
    Reduced,
}

fn default_points() -> usize {
    5
}

fn default_reduction_order() -> usize {
    2
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n: default_points(),
            scheme: SchemeSpec::default(),
            reduction_order: default_reduction_order(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    /// Percentile threshold p for the effective dimensions.
    #[serde(default = "default_threshold")]
    pub threshold_p: f64,
}

fn default_threshold() -> f64 {
    0.99
}

impl Default for ReportSpec {
    fn default() -> Self {
        Self {
            threshold_p: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSpec {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub m_max: u32,
}

impl RunConfig {
    /// Reads and validates a TOML or JSON configuration file.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {}", path.display(), e)))?;
        let is_json =
            path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let config: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| ConfigError(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != 1 {
            return fail(format!("unsupported schema version {}", self.schema));
        }
        if self.dimension == 0 {
            return fail("dimension must be at least 1");
        }
        if self.truncation.s < 1 || self.truncation.s > self.dimension {
            return fail(format!(
                "truncation s = {} must lie in 1..={}",
                self.truncation.s, self.dimension
            ));
        }
        if self.truncation.m < 1 {
            return fail("truncation m must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.report.threshold_p) {
            return fail("report.threshold_p must lie in [0, 1]");
        }
        match self.model.resolve()? {
            ModelKind::QuadraticSymmetric { .. } if self.dimension != 3 => {
                return fail("quadratic_symmetric requires dimension = 3")
            }
            ModelKind::AdditiveLinear { coefficients } if coefficients.len() != self.dimension => {
                return fail("additive_linear needs one coefficient per variable")
            }
            ModelKind::Polynomial { terms } => {
                for t in terms {
                    if t.exponents.len() != self.dimension {
                        return fail("polynomial terms need one exponent per variable");
                    }
                }
            }
            ModelKind::External { command, .. } => {
                command.argv()?;
            }
            _ => {}
        }
        self.measure()?;
        Ok(())
    }

    /// Builds and validates the input measure from the covariance spec.
    pub fn measure(&self) -> Result<GaussianMeasure, ConfigError> {
        let n = self.dimension;
        let cov = match self.covariance.kind.as_str() {
            "matrix" => {
                if self.covariance.correlations.is_some() {
                    return fail("covariance kind \"matrix\" takes only `rows`");
                }
                let rows =
                    self.covariance.rows.as_ref().ok_or_else(|| {
                        ConfigError("covariance kind \"matrix\" needs `rows`".into())
                    })?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return fail(format!("covariance matrix must be {n}x{n}"));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            "correlation" => {
                if self.covariance.rows.is_some() {
                    return fail("covariance kind \"correlation\" takes only `correlations`");
                }
                let correlations = self.covariance.correlations.as_deref().ok_or_else(|| {
                    ConfigError("covariance kind \"correlation\" needs `correlations`".into())
                })?;
                let mut cov = DMatrix::<f64>::identity(n, n);
                for &(i, j, rho) in correlations {
                    if i < 1 || j < 1 || i > n || j > n || i == j {
                        return fail(format!("correlation entry ({i}, {j}) is out of range"));
                    }
                    cov[(i - 1, j - 1)] = rho;
                    cov[(j - 1, i - 1)] = rho;
                }
                cov
            }
            other => {
                return fail(format!(
                    "unknown covariance kind {:?} (expected \"matrix\" or \"correlation\")",
                    other
                ))
            }
        };
        GaussianMeasure::validate(cov).map_err(|e| ConfigError(e.to_string()))
    }

    /// The quadrature scheme used for black-box integrals.
    pub fn integration_scheme(&self) -> IntegrationScheme {
        match self.quadrature.scheme {
            SchemeSpec::Tensor => IntegrationScheme::Tensor {
                points: self.quadrature.n,
            },
            SchemeSpec::Reduced => IntegrationScheme::Reduced {
                order: self.quadrature.reduction_order,
                points: self.quadrature.n,
            },
        }
    }
}
