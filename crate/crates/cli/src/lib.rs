//! Batch front end: reads family and distribution files, dispatches to the
//! library and renders a JSON (or CSV) report that embeds the resolved
//! configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use expfam::circuits::{
    circuit_basis, closure_membership, coparallel_classes, mixture_decomposition, rank_of_class,
    DEFAULT_MEMBERSHIP_TOL,
};
use expfam::divmax::{dbar, local_maximizers, max_divergence_oracle, psi_family, DEFAULT_STARTS, DEFAULT_TOL};
use expfam::io::{circuits_to_value, family_to_value, parse_distribution, parse_family, FamilyDoc};
use expfam::lab::{one_dim_optimality, scan_conjecture, verify_family};
use expfam::projection::{ri_project_with, ProjectionConfig};
use expfam::ProbabilityVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// Largest accepted gap between the multistart estimate and the oracle.
pub const ORACLE_AGREEMENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Build,
    Project,
    Divergence,
    Maximize,
    Circuits,
    Decompose,
    Verify,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<PathBuf>,
    pub dist: Option<PathBuf>,
    pub seed: u64,
    /// Command-specific default when absent; the resolved value is reported.
    pub tol: Option<f64>,
    pub starts: usize,
    pub oracle: bool,
    pub grid_step: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub samples: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            family: None,
            dist: None,
            seed: 0,
            tol: None,
            starts: DEFAULT_STARTS,
            oracle: false,
            grid_step: 0.05,
            out: None,
            format: Format::Json,
            n: None,
            k: None,
            samples: 200,
        }
    }

    pub fn resolved_tol(&self) -> f64 {
        self.tol.unwrap_or(match self.command {
            Command::Project | Command::Divergence => ProjectionConfig::default().tol,
            Command::Circuits => DEFAULT_MEMBERSHIP_TOL,
            Command::Verify => 1e-6,
            _ => DEFAULT_TOL,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] expfam::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: String,
    /// A checked contract or verdict failed.
    pub violation: bool,
}

/// Runs the command, writes the report and returns the process exit code.
pub fn execute(config: &RunConfig) -> i32 {
    match run(config).and_then(|r| emit(config, &r).map(|_| r)) {
        Ok(r) if r.violation => EXIT_VIOLATION,
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn emit(config: &RunConfig, report: &Report) -> Result<(), CliError> {
    match &config.out {
        Some(path) => fs::write(path, &report.body).map_err(|e| CliError::Write {
            path: path.clone(),
            message: e.to_string(),
        }),
        None => {
            print!("{}", report.body);
            Ok(())
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    if config.format == Format::Csv && config.command != Command::Scan {
        return Err(CliError::Usage("csv output is only available for scan".into()));
    }
    match config.command {
        Command::Build => build(config),
        Command::Project => project(config),
        Command::Divergence => divergence(config),
        Command::Maximize => maximize(config),
        Command::Circuits => circuits(config),
        Command::Decompose => decompose(config),
        Command::Verify => verify(config),
        Command::Scan => scan(config),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_family(config: &RunConfig) -> Result<FamilyDoc, CliError> {
    let path = config
        .family
        .as_ref()
        .ok_or_else(|| CliError::Usage("--family is required".into()))?;
    Ok(parse_family(&read(path)?)?)
}

fn load_dist(config: &RunConfig) -> Result<ProbabilityVector, CliError> {
    let path = config
        .dist
        .as_ref()
        .ok_or_else(|| CliError::Usage("--dist is required".into()))?;
    Ok(parse_distribution(&read(path)?)?)
}

fn config_value(config: &RunConfig) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    v["tol"] = json!(config.resolved_tol());
    v["version"] = json!(env!("CARGO_PKG_VERSION"));
    v
}

fn json_report(config: &RunConfig, result: Value, violation: bool) -> Report {
    let doc = json!({ "config": config_value(config), "result": result });
    let mut body = serde_json::to_string_pretty(&doc).expect("report serializes");
    body.push('\n');
    Report { body, violation }
}

fn build(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let mut v = family_to_value(&doc.family);
    v["config"] = config_value(config);
    let mut body = serde_json::to_string_pretty(&v).expect("family serializes");
    body.push('\n');
    Ok(Report { body, violation: false })
}

fn project(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let p = load_dist(config)?;
    let r = ri_project_with(&doc.family, &p, &ProjectionConfig::with_tol(config.resolved_tol()))?;
    let violation = r.residual > config.resolved_tol();
    Ok(json_report(config, serde_json::to_value(&r).expect("projection"), violation))
}

fn divergence(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let p = load_dist(config)?;
    let r = ri_project_with(&doc.family, &p, &ProjectionConfig::with_tol(config.resolved_tol()))?;
    let mut result = json!({
        "divergence": r.divergence,
        "projection": r.point,
        "in_closure": r.divergence <= 1e-10,
    });
    if r.divergence > 1e-10 {
        let u = psi_family(&doc.family, &p)?;
        result["u"] = json!(u.values());
        result["Dbar"] = json!(dbar(&doc.family, u.values())?);
    }
    Ok(json_report(config, result, false))
}

fn maximize(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let report = local_maximizers(&doc.family, config.starts, config.seed, config.resolved_tol())?;
    let mut result = serde_json::to_value(&report).expect("maximizers");
    let mut violation = false;
    if config.oracle {
        let o = max_divergence_oracle(&doc.family, config.grid_step)?;
        let gap = (o.value - report.global_estimate).abs();
        violation = gap > ORACLE_AGREEMENT;
        result["oracle"] = json!({
            "value": o.value,
            "argmax": o.argmax,
            "grid_step": config.grid_step,
            "gap": gap,
            "agrees": !violation,
        });
    }
    Ok(json_report(config, result, violation))
}

fn circuits(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let basis = circuit_basis(&doc.family)?;
    let mut result = json!({ "circuits": circuits_to_value(&basis) });
    if config.dist.is_some() {
        let p = load_dist(config)?;
        if p.len() != doc.family.size() {
            return Err(expfam::Error::DimensionMismatch {
                what: "distribution",
                expected: doc.family.size(),
                found: p.len(),
            }
            .into());
        }
        let m = closure_membership(&doc.family, &basis, &p, config.resolved_tol());
        result["membership"] = serde_json::to_value(&m).expect("membership");
    }
    Ok(json_report(config, result, false))
}

fn decompose(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let family = &doc.family;
    let basis = circuit_basis(family)?;
    let cop = coparallel_classes(family, &basis);
    let labels = |states: &[usize]| -> Vec<String> {
        states.iter().map(|&x| family.space().label(x).to_string()).collect()
    };
    let classes = cop
        .classes
        .iter()
        .map(|c| {
            Ok(json!({
                "states": c,
                "labels": labels(c),
                "rank": rank_of_class(family, &basis, c)?,
            }))
        })
        .collect::<Result<Vec<Value>, expfam::Error>>()?;
    let components: Vec<Value> = mixture_decomposition(family, &basis)
        .iter()
        .map(|c| {
            json!({
                "states": c.states,
                "labels": labels(&c.states),
                "dim": c.family.dim(),
                "family": family_to_value(&c.family),
            })
        })
        .collect();
    let result = json!({
        "dim": family.dim(),
        "normal_dim": family.normal_dim(),
        "coparallel_classes": classes,
        "loops": cop.loops,
        "components": components,
    });
    Ok(json_report(config, result, false))
}

fn verify(config: &RunConfig) -> Result<Report, CliError> {
    let doc = load_family(config)?;
    let family = &doc.family;
    let report = verify_family(family, config.starts, config.seed, config.resolved_tol())?;
    let mut violation = report.verdicts.iter().any(|v| !v.pass);
    let mut result = serde_json::to_value(&report).expect("optimality report");
    if family.dim() == 1 && family.size() == 3 {
        let one = one_dim_optimality(family, report.max_d)?;
        violation |= !one.optimal;
        result["one_dim"] = serde_json::to_value(&one).expect("one-dim report");
    }
    if config.oracle && !family.is_full_simplex() {
        let o = max_divergence_oracle(family, config.grid_step)?;
        let gap = (o.value - report.max_d).abs();
        violation |= gap > ORACLE_AGREEMENT;
        result["oracle"] = json!({ "value": o.value, "gap": gap, "agrees": gap <= ORACLE_AGREEMENT });
    }
    Ok(json_report(config, result, violation))
}

fn scan(config: &RunConfig) -> Result<Report, CliError> {
    let n = config.n.ok_or_else(|| CliError::Usage("--n is required for scan".into()))?;
    let k = config.k.ok_or_else(|| CliError::Usage("--k is required for scan".into()))?;
    let report = scan_conjecture(n, k, config.samples, config.seed, config.starts)?;
    match config.format {
        Format::Json => Ok(json_report(config, serde_json::to_value(&report).expect("scan"), false)),
        Format::Csv => {
            let mut body = String::from("family_id,N,k,maxD,bound\n");
            for r in &report.rows {
                writeln!(body, "{},{},{},{:?},{:?}", r.family_id, r.n, r.k, r.max_d, r.bound).expect("string write");
            }
            Ok(Report { body, violation: false })
        }
    }
}
