//! Scenario runs: validate, run analyses, write artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use moyal_core::Error;
use rayon::prelude::*;

use crate::registry::{Registry, RunContext};
use crate::report::{AnalysisRecord, CheckItem, Outcome, Summary};
use crate::scenario::{Scenario, ValidationError};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub plots: bool,
    pub tolerance_scale: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
    #[error("analysis {index} ({kind}) failed: {source}")]
    Analysis { index: usize, kind: String, source: Error },
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            _ => 3,
        }
    }
}

/// Errors that describe a numerical outcome of the run rather than a
/// malfunction; they fail the analysis instead of aborting.
fn is_numerical_outcome(e: &Error) -> bool {
    matches!(
        e,
        Error::FieldUndersampled { .. }
            | Error::ChartIncompatible { .. }
            | Error::UnwrapDiscontinuity { .. }
            | Error::BoundaryContact { .. }
            | Error::MaskFragmented { .. }
    )
}

/// Parse and validate, returning the scenario with `seed` applied.
pub fn prepare(text: &str, registry: &Registry, seed: Option<u64>) -> Result<(Scenario, crate::scenario::System), ValidationError> {
    let mut scenario = Scenario::parse(text)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let system = scenario.validate(registry)?;
    Ok((scenario, system))
}

fn kind_of(table: &toml::Table) -> &str {
    table.get("kind").and_then(|v| v.as_str()).unwrap_or("")
}

/// Run every analysis of a scenario and write its artifacts to `opts.out`.
pub fn run_scenario(text: &str, registry: &Registry, opts: &RunOptions) -> Result<Summary, RunError> {
    let (scenario, system) = prepare(text, registry, opts.seed)?;
    let ctx = RunContext::new(&scenario, &system, registry, scenario.seed, opts.tolerance_scale, opts.plots);
    // evolve once up front so parallel analyses share the series
    if scenario.evolution.is_some() {
        if let Err(e) = ctx.series() {
            if !is_numerical_outcome(&e) {
                return Err(RunError::Analysis {
                    index: 0,
                    kind: "evolution".into(),
                    source: e,
                });
            }
        }
    }
    let outcomes: Vec<Result<Outcome, RunError>> = scenario
        .analysis
        .par_iter()
        .enumerate()
        .map(|(index, table)| {
            let kind = kind_of(table);
            let analysis = registry.analysis(kind).expect("validated");
            match analysis.run(table, &ctx) {
                Ok(o) => Ok(o),
                Err(e) if is_numerical_outcome(&e) => Ok(Outcome {
                    checks: vec![CheckItem::failed(kind, e.to_string())],
                    ..Outcome::default()
                }),
                Err(source) => Err(RunError::Analysis {
                    index,
                    kind: kind.to_string(),
                    source,
                }),
            }
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    for (index, (table, outcome)) in scenario.analysis.iter().zip(outcomes).enumerate() {
        let outcome = outcome?;
        records.push(AnalysisRecord {
            kind: kind_of(table).to_string(),
            index,
            passed: outcome.passed(),
            outcome,
            files: Vec::new(),
        });
    }
    let mut summary = Summary {
        scenario: scenario.name.clone(),
        version: crate::VERSION.to_string(),
        seed: scenario.seed,
        tolerance_scale: opts.tolerance_scale,
        passed: records.iter().all(|r| r.passed),
        analyses: records,
    };
    write_outputs(&opts.out, &mut summary)?;
    Ok(summary)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| RunError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_outputs(dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Output {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    for rec in &mut summary.analyses {
        let stem = format!("{:02}-{}", rec.index, rec.kind);
        for t in &rec.outcome.tables {
            let file = format!("{stem}-{}.csv", t.name);
            let bytes = t.to_csv().map_err(|e| RunError::Output {
                path: file.clone(),
                message: e.to_string(),
            })?;
            write(&dir.join(&file), &bytes)?;
            rec.files.push(file);
        }
        for (name, svg) in &rec.outcome.plots {
            let file = format!("{stem}-{name}.svg");
            write(&dir.join(&file), svg.as_bytes())?;
            rec.files.push(file);
        }
    }
    let json = serde_json::to_vec_pretty(summary).map_err(|e| RunError::Output {
        path: "summary.json".into(),
        message: e.to_string(),
    })?;
    write(&dir.join("summary.json"), &json)
}
