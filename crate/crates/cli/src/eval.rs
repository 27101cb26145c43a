use std::path::{Path, PathBuf};

use clap::Args;
use relaxed_tikhonov::io::{parse_table, to_json};
use relaxed_tikhonov::synth::{angular_errors, mean_sphere_distance, rmse};
use relaxed_tikhonov::SphereSignal;
use serde::Serialize;

use crate::error::{CliError, CliResult, InputContext};
use crate::output::read_text;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Denoised signal CSV.
    #[arg(long)]
    pub result: PathBuf,
    /// Ground-truth signal CSV of the same shape.
    #[arg(long)]
    pub truth: PathBuf,
    /// Also write the metrics JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub n_vertices: usize,
    pub d: usize,
    pub rmse: f64,
    pub mean_sphere_distance: f64,
    pub mean_angular_error: f64,
    pub max_angular_error: f64,
    /// Radians, one per vertex.
    pub angular_errors: Vec<f64>,
}

fn load(path: &Path) -> CliResult<SphereSignal> {
    let what = path.display().to_string();
    let rows = parse_table(&read_text(path)?, None).input(&what)?;
    SphereSignal::from_vectors(&rows).input(&what)
}

pub fn evaluate(result: &SphereSignal, truth: &SphereSignal) -> CliResult<EvalReport> {
    let rmse = rmse(result, truth).input("shape mismatch")?;
    let angular = angular_errors(result, truth).input("shape mismatch")?;
    let n = angular.len().max(1) as f64;
    Ok(EvalReport {
        n_vertices: result.len(),
        d: result.dim(),
        rmse,
        mean_sphere_distance: mean_sphere_distance(result),
        mean_angular_error: angular.iter().sum::<f64>() / n,
        max_angular_error: angular.iter().copied().fold(0.0, f64::max),
        angular_errors: angular,
    })
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let report = evaluate(&load(&args.result)?, &load(&args.truth)?)?;
    let mut json = to_json(&report).map_err(CliError::failure)?;
    json.push('\n');
    if let Some(p) = &args.out {
        std::fs::write(p, &json).map_err(|e| CliError::failure(format!("writing {}: {e}", p.display())))?;
    }
    print!("{json}");
    Ok(())
}
