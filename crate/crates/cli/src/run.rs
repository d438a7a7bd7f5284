//! The decompose / sensitivity / sample commands and the model-serve loop.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use gadd_core::expansion::{assemble_and_solve, classical_add, AddExpansion, ExpansionRecord};
use gadd_core::measure::VariableSubset;
use gadd_core::model::{Model, PolynomialModel};
use gadd_core::moments::Polynomial;
use gadd_core::quadrature::ReductionPlan;
use gadd_core::sensitivity::{adaptive_select, indices, AdaptiveSelection, SensitivityReport};

use crate::config::{ModelKind, RunConfig, SchemeSpec};
use crate::error::CliError;
use crate::external::ExternalModel;

/// Shared command-line arguments.
pub struct RunArgs {
    pub config: PathBuf,
    pub classical: bool,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub expansion: Option<PathBuf>,
    pub dump_basis: bool,
}

fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

fn subset_column(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Output directory resolution: --out beats GADD_OUT_DIR beats the config,
/// with ./out as the fallback.
fn output_dir(config: &RunConfig, args: &RunArgs) -> Result<PathBuf, CliError> {
    let dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os("GADD_OUT_DIR").map(PathBuf::from))
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {}", dir.display(), e)))?;
    Ok(dir)
}

/// The parallel-width override is accepted and validated, but this build
/// serializes all model evaluations, so only width 1 is meaningful.
fn check_parallel_width() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("GADD_PARALLEL") {
        match v.parse::<usize>() {
            Ok(1) => {}
            Ok(k) => {
                return Err(CliError::config(format!(
                    "GADD_PARALLEL={} requested, but model evaluations are serialized in this build (only width 1 is supported)",
                    k
                )))
            }
            Err(_) => {
                return Err(CliError::config(format!(
                    "GADD_PARALLEL must be a positive integer, got {:?}",
                    v
                )))
            }
        }
    }
    Ok(())
}

fn build_model(config: &RunConfig) -> Result<Box<dyn Model>, CliError> {
    let n = config.dimension;
    match config.model.resolve().map_err(CliError::from_config)? {
        ModelKind::QuadraticSymmetric { params } => {
            Ok(Box::new(PolynomialModel::quadratic_symmetric(params)))
        }
        ModelKind::AdditiveLinear { coefficients } => {
            Ok(Box::new(PolynomialModel::additive_linear(coefficients)))
        }
        ModelKind::Polynomial { terms } => {
            let sub = VariableSubset::full(n);
            let mut poly = Polynomial::zero(sub.clone());
            for t in terms {
                poly.axpy(
                    t.coefficient,
                    &Polynomial::monomial(sub.clone(), t.exponents.clone(), 1.0)
                        .map_err(CliError::from_core)?,
                );
            }
            Ok(Box::new(
                PolynomialModel::new(n, poly).map_err(CliError::from_core)?,
            ))
        }
        ModelKind::External {
            command,
            timeout_secs,
            restart,
        } => {
            let argv = command.argv().map_err(CliError::from_config)?;
            let model = ExternalModel::spawn(n, argv, Duration::from_secs(timeout_secs), restart)
                .map_err(CliError::from_core)?;
            Ok(Box::new(model))
        }
    }
}

/// Top-level JSON document written by `decompose` and read back by
/// `sensitivity --expansion`.
#[derive(Serialize, Deserialize)]
pub struct ExpansionDocument {
    pub schema: u32,
    pub classical: bool,
    pub model_evaluations: u64,
    pub expansion: ExpansionRecord,
}

fn compute_expansion(config: &RunConfig, args: &RunArgs) -> Result<(AddExpansion, u64), CliError> {
    let measure = config.measure().map_err(CliError::from_config)?;
    let model = build_model(config)?;
    let scheme = config.integration_scheme();
    let baseline = model.evaluation_count();
    let expansion = if args.classical {
        classical_add(
            model.as_ref(),
            &measure,
            config.truncation.s,
            config.truncation.m,
            scheme,
        )
    } else {
        assemble_and_solve(
            model.as_ref(),
            &measure,
            config.truncation.s,
            config.truncation.m,
            scheme,
        )
    }
    .map_err(CliError::from_core)?;
    let evaluations = model.evaluation_count() - baseline;

    if model.as_polynomial().is_none() {
        log_plan_counts(config, &expansion, evaluations);
    }
    Ok((expansion, evaluations))
}

/// For reduced-scheme black-box runs, report the unique evaluation count of
/// each response-integral plan.  Every plan shares the same cut structure,
/// so the total divides evenly.
fn log_plan_counts(config: &RunConfig, expansion: &AddExpansion, evaluations: u64) {
    if config.quadrature.scheme != SchemeSpec::Reduced {
        eprintln!(
            "gadd: tensor quadrature, {} model evaluations in total",
            evaluations
        );
        return;
    }
    let plans = expansion.basis().len() as u64 + 1;
    if let Ok(plan) = ReductionPlan::new(
        config.dimension,
        config.quadrature.reduction_order,
        config.quadrature.n,
    ) {
        eprintln!(
            "gadd: dimension-reduction order {}, n = {}: {} integral plans, {} unique model evaluations per plan ({} expected), {} in total",
            config.quadrature.reduction_order,
            config.quadrature.n,
            plans,
            evaluations / plans,
            plan.expected_unique_evaluations(),
            evaluations,
        );
    }
}

fn load_expansion(path: &Path) -> Result<AddExpansion, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {}", path.display(), e)))?;
    let doc: ExpansionDocument =
        serde_json::from_str(&text).map_err(|e| CliError::config(e.to_string()))?;
    AddExpansion::from_record(&doc.expansion).map_err(CliError::from_core)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::io(format!("cannot write {}: {}", path.display(), e)))
}

pub fn cmd_decompose(args: &RunArgs) -> Result<(), CliError> {
    check_parallel_width()?;
    let config = RunConfig::load(&args.config).map_err(CliError::from_config)?;
    let (expansion, evaluations) = compute_expansion(&config, args)?;
    let dir = output_dir(&config, args)?;

    let doc = ExpansionDocument {
        schema: 1,
        classical: args.classical,
        model_evaluations: evaluations,
        expansion: expansion.to_record(),
    };
    write_file(
        &dir.join("expansion.json"),
        &serde_json::to_string_pretty(&doc).map_err(|e| CliError::io(e.to_string()))?,
    )?;

    let mut csv = String::from("subset,exponents,coefficient\n");
    csv.push_str(&format!(",,{}\n", fmt17(expansion.constant())));
    for u in expansion.basis().subsets() {
        let poly = expansion
            .component_function(u)
            .map_err(CliError::from_core)?;
        for (e, &c) in poly.terms() {
            csv.push_str(&format!(
                "{},{},{}\n",
                subset_column(u.indices()),
                e.iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt17(c)
            ));
        }
    }
    write_file(&dir.join("components.csv"), &csv)?;
    if args.dump_basis {
        write_file(
            &dir.join("basis.json"),
            &expansion.basis().debug_dump_json(),
        )?;
    }
    eprintln!(
        "gadd: wrote expansion.json and components.csv to {}",
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SensitivityDocument<'a> {
    schema: u32,
    report: &'a SensitivityReport,
    sum_variance_driven: f64,
    sum_covariance_driven: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    adaptive: Option<AdaptiveSelection>,
}

pub fn cmd_sensitivity(args: &RunArgs) -> Result<(), CliError> {
    check_parallel_width()?;
    let config = RunConfig::load(&args.config).map_err(CliError::from_config)?;
    let expansion = match &args.expansion {
        Some(path) => load_expansion(path)?,
        None => compute_expansion(&config, args)?.0,
    };
    let report = indices(&expansion, config.report.threshold_p).map_err(CliError::from_core)?;

    // The adaptive sweep re-solves at increasing orders, so it needs the
    // model itself; it is skipped when working from a saved expansion.
    let adaptive = match (&config.adaptive, &args.expansion) {
        (Some(spec), None) => {
            let measure = config.measure().map_err(CliError::from_config)?;
            let model = build_model(&config)?;
            Some(
                adaptive_select(
                    model.as_ref(),
                    &measure,
                    spec.epsilon1,
                    spec.epsilon2,
                    spec.m_max,
                    config.integration_scheme(),
                )
                .map_err(CliError::from_core)?,
            )
        }
        _ => None,
    };

    let dir = output_dir(&config, args)?;
    let doc = SensitivityDocument {
        schema: 1,
        report: &report,
        sum_variance_driven: report.sum_variance_driven(),
        sum_covariance_driven: report.sum_covariance_driven(),
        adaptive,
    };
    write_file(
        &dir.join("sensitivity.json"),
        &serde_json::to_string_pretty(&doc).map_err(|e| CliError::io(e.to_string()))?,
    )?;

    let mut csv = String::from("subset,s_variance,s_covariance,s_total\n");
    for t in &report.triplets {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            subset_column(t.subset.indices()),
            fmt17(t.variance_driven),
            fmt17(t.covariance_driven),
            fmt17(t.total)
        ));
    }
    write_file(&dir.join("indices.csv"), &csv)?;

    let mut csv = String::from("variable,total_effect,rank,tied\n");
    for e in &report.total_effects {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            e.variable,
            fmt17(e.value),
            e.rank,
            e.tied
        ));
    }
    write_file(&dir.join("effects.csv"), &csv)?;
    eprintln!(
        "gadd: wrote sensitivity.json, indices.csv, effects.csv to {}",
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SampleSummary {
    schema: u32,
    count: usize,
    seed: u64,
    mean: Option<f64>,
    std_dev: Option<f64>,
    histogram: Option<Histogram>,
}

#[derive(Serialize)]
struct Histogram {
    min: f64,
    max: f64,
    counts: Vec<usize>,
}

pub fn cmd_sample(args: &RunArgs) -> Result<(), CliError> {
    check_parallel_width()?;
    let config = RunConfig::load(&args.config).map_err(CliError::from_config)?;
    let expansion = match &args.expansion {
        Some(path) => load_expansion(path)?,
        None => compute_expansion(&config, args)?.0,
    };
    let measure = expansion.measure().clone();
    let count = config.sampling.count;
    let seed = args.seed.unwrap_or(config.sampling.seed);

    let mut csv = String::new();
    for i in 1..=config.dimension {
        csv.push_str(&format!("x{},", i));
    }
    csv.push_str("y\n");

    let mut values = Vec::with_capacity(count);
    for point in measure.sample(count, seed) {
        let y = expansion
            .evaluate_surrogate(point.as_slice())
            .map_err(CliError::from_core)?;
        for v in point.iter() {
            csv.push_str(&fmt17(*v));
            csv.push(',');
        }
        csv.push_str(&fmt17(y));
        csv.push('\n');
        values.push(y);
    }

    let summary = if values.is_empty() {
        SampleSummary {
            schema: 1,
            count,
            seed,
            mean: None,
            std_dev: None,
            histogram: None,
        }
    } else {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() as f64 - 1.0).max(1.0);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bins = 20usize;
        let mut counts = vec![0usize; bins];
        let width = ((max - min) / bins as f64).max(f64::MIN_POSITIVE);
        for v in &values {
            let b = (((v - min) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        SampleSummary {
            schema: 1,
            count,
            seed,
            mean: Some(mean),
            std_dev: Some(var.sqrt()),
            histogram: Some(Histogram { min, max, counts }),
        }
    };

    let dir = output_dir(&config, args)?;
    write_file(&dir.join("samples.csv"), &csv)?;
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).map_err(|e| CliError::io(e.to_string()))?,
    )?;
    eprintln!(
        "gadd: wrote samples.csv and summary.json to {}",
        dir.display()
    );
    Ok(())
}

/// Serves a builtin model over the line protocol on stdin/stdout, so any
/// builtin can be exercised as an external process.
pub fn cmd_model_serve(config_path: &Path) -> Result<(), CliError> {
    let config = RunConfig::load(config_path).map_err(CliError::from_config)?;
    if matches!(
        config.model.resolve().map_err(CliError::from_config)?,
        ModelKind::External { .. }
    ) {
        return Err(CliError::config(
            "model-serve requires a builtin model in the config".into(),
        ));
    }
    let model = build_model(&config)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let x: Result<Vec<f64>, _> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect();
        let x = x.map_err(|_| {
            CliError::protocol(format!("model-serve received a malformed line: {:?}", line))
        })?;
        let y = model.evaluate(&x).map_err(CliError::from_core)?;
        writeln!(out, "{:.16e}", y).map_err(|e| CliError::io(e.to_string()))?;
        out.flush().map_err(|e| CliError::io(e.to_string()))?;
    }
    Ok(())
}
