use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use relaxed_tikhonov::admm::{admm_solve, DenoiseResult, SolverConfig, DEFAULT_RHO, DEFAULT_TOL, GRID_MAX_ITER, LINE_MAX_ITER};
use relaxed_tikhonov::graph::{grid_graph, line_graph, parse_edge_list, parse_vector, Graph, Weights};
use relaxed_tikhonov::io::{format_quaternions, format_rotations, format_signal, parse_signal, parse_table, RgbImage};
use relaxed_tikhonov::manifold::{Quaternion, RotationMatrix, ROTATION_TOL};
use relaxed_tikhonov::pipeline::{denoise_chroma, denoise_hue, denoise_quaternions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, InputContext, SolverContext};
use crate::output::{read_bytes, read_text, trace_csv, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sphere,
    Hue,
    Chroma,
    So3,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Signal CSV (sphere), quaternion or rotation rows (so3), or PPM image (hue, chroma).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// `line`, `grid` or `edgelist:<path>`.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Expected signal dimension; checked against the input.
    #[arg(long)]
    pub d: Option<usize>,
    /// Edge weight: a number or a file with one value per edge.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Vertex weight: a number or a file with one value per vertex.
    #[arg(long)]
    pub w: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Normalize the output onto the sphere (sphere mode; other modes always do).
    #[arg(long)]
    pub retract: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON file with any of the settings above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

/// Number or path, as accepted by `--lambda` and `--w`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Weight {
    Value(f64),
    Path(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<Mode>,
    graph: Option<String>,
    height: Option<usize>,
    width: Option<usize>,
    d: Option<usize>,
    lambda: Option<Weight>,
    w: Option<Weight>,
    rho: Option<f64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    retract: Option<bool>,
    threads: Option<usize>,
}

/// Effective settings after merging defaults, config file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct DenoiseEcho {
    pub input: String,
    pub mode: Mode,
    pub graph: String,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub d: usize,
    pub lambda: String,
    pub w: String,
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub retract: bool,
    pub threads: usize,
}

#[derive(Debug, Serialize)]
pub struct DenoiseReport {
    pub config: DenoiseEcho,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub objective_k: f64,
    pub mean_sphere_distance: f64,
    pub max_sphere_deviation: f64,
    pub wall_time_seconds: f64,
    pub degenerate_vertices: usize,
    /// Sign lifting succeeded on every edge (so3 mode).
    pub consistent: Option<bool>,
    pub lifting_violations: Option<Vec<(usize, usize)>>,
    /// Gray (hue) or black (chroma) pixels.
    pub undefined_pixels: Option<usize>,
    pub execution: String,
}

enum Loaded {
    Sphere(relaxed_tikhonov::SphereSignal),
    Quaternions(Vec<Quaternion>),
    Image(RgbImage),
}

fn weight_spec(flag: &Option<String>, file: &Option<Weight>) -> Option<String> {
    flag.clone().or_else(|| {
        file.as_ref().map(|w| match w {
            Weight::Value(v) => v.to_string(),
            Weight::Path(p) => p.clone(),
        })
    })
}

/// A number, or else a file of numbers with the expected length.
fn resolve_weights(spec: &str, expected: usize, what: &str) -> CliResult<Vec<f64>> {
    if let Ok(v) = spec.parse::<f64>() {
        return Ok(vec![v; expected]);
    }
    let values = parse_vector(&read_text(Path::new(spec))?).input(what)?;
    if values.len() != expected {
        return Err(CliError::parse(format!("{what}: {} values for {expected} entries", values.len())));
    }
    Ok(values)
}

fn load_input(path: &Path, mode: Mode) -> CliResult<Loaded> {
    let what = format!("input {}", path.display());
    match mode {
        Mode::Sphere => Ok(Loaded::Sphere(parse_signal(&read_text(path)?).input(&what)?)),
        Mode::So3 => {
            let rows = parse_table(&read_text(path)?, None).input(&what)?;
            let quats = match rows.first().map(Vec::len) {
                Some(4) => rows.iter().map(|r| Quaternion::from_slice(r)).collect::<Result<Vec<_>, _>>().input(&what)?,
                Some(9) => rows
                    .iter()
                    .map(|r| {
                        RotationMatrix::from_row_major(r, ROTATION_TOL)
                            .and_then(|m| relaxed_tikhonov::manifold::rotation_to_quat(&m))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .input(&what)?,
                _ => return Err(CliError::parse(format!("{what}: expected 4 (quaternion) or 9 (rotation) columns"))),
            };
            Ok(Loaded::Quaternions(quats))
        }
        Mode::Hue | Mode::Chroma => Ok(Loaded::Image(RgbImage::from_ppm(&read_bytes(path)?).input(&what)?)),
    }
}

fn build_graph(
    spec: &str,
    n: usize,
    dims: (Option<usize>, Option<usize>),
) -> CliResult<(Graph, Option<Vec<f64>>)> {
    let graph = if spec == "line" {
        (line_graph(n).input("graph")?, None)
    } else if spec == "grid" {
        let (Some(h), Some(w)) = dims else {
            return Err(CliError::parse("grid graph needs --height and --width"));
        };
        (grid_graph(h, w).input("graph")?, None)
    } else if let Some(path) = spec.strip_prefix("edgelist:") {
        parse_edge_list(&read_text(Path::new(path))?).input(&format!("edge list {path}"))?
    } else {
        return Err(CliError::parse(format!("unknown graph {spec:?}; use line, grid or edgelist:<path>")));
    };
    if graph.0.n_vertices() != n {
        return Err(CliError::parse(format!(
            "graph has {} vertices but the input has {n}",
            graph.0.n_vertices()
        )));
    }
    Ok(graph)
}

pub fn run(args: &DenoiseArgs) -> CliResult<()> {
    let file: FileConfig = match &args.config {
        Some(p) => serde_json::from_str(&read_text(p)?).input(&format!("config {}", p.display()))?,
        None => FileConfig::default(),
    };
    let mode = args.mode.or(file.mode).unwrap_or(Mode::Sphere);
    let loaded = load_input(&args.input, mode)?;
    let (n, d, image_dims) = match &loaded {
        Loaded::Sphere(x) => (x.len(), x.dim(), None),
        Loaded::Quaternions(q) => (q.len(), 4, None),
        Loaded::Image(img) => (img.width() * img.height(), if mode == Mode::Hue { 2 } else { 3 }, Some((img.height(), img.width()))),
    };
    if let Some(want) = args.d.or(file.d) {
        if want != d {
            return Err(CliError::parse(format!("--d {want} does not match input dimension {d}")));
        }
    }
    let default_graph = if image_dims.is_some() { "grid" } else { "line" };
    let graph_spec = args.graph.clone().or(file.graph).unwrap_or_else(|| default_graph.to_string());
    let dims = match image_dims {
        Some((h, w)) => (Some(args.height.or(file.height).unwrap_or(h)), Some(args.width.or(file.width).unwrap_or(w))),
        None => (args.height.or(file.height), args.width.or(file.width)),
    };
    let (g, file_lambdas) = build_graph(&graph_spec, n, dims)?;

    let lambda_spec = weight_spec(&args.lambda, &file.lambda);
    let lambda = match (&lambda_spec, file_lambdas) {
        (Some(s), _) => resolve_weights(s, g.n_edges(), "lambda")?,
        (None, Some(l)) => l,
        (None, None) => vec![1.0; g.n_edges()],
    };
    let w_spec = weight_spec(&args.w, &file.w);
    let w = resolve_weights(w_spec.as_deref().unwrap_or("1"), n, "w")?;
    let wt = Weights::new(&g, w, lambda).input("weights")?;

    let max_default = if graph_spec == "line" { LINE_MAX_ITER } else { GRID_MAX_ITER };
    let cfg = SolverConfig {
        rho: args.rho.or(file.rho).unwrap_or(DEFAULT_RHO),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(max_default),
        tol: args.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
        retract: args.retract || file.retract.unwrap_or(false) || mode != Mode::Sphere,
        threads: args.threads.or(file.threads).unwrap_or(1),
    };
    cfg.validate().input("solver settings")?;

    let out = OutDir::create(&args.outdir)?;
    let mut consistent = None;
    let mut violations = None;
    let mut undefined = None;
    let result: DenoiseResult = match loaded {
        Loaded::Sphere(y) => {
            let r = admm_solve(&y, &g, &wt, &cfg).solver()?;
            out.write("signal.csv", format_signal(&r.x))?;
            r
        }
        Loaded::Quaternions(q) => {
            let o = denoise_quaternions(&q, &g, &wt, &cfg).solver()?;
            out.write("signal.csv", format_rotations(&o.rotations))?;
            out.write("quaternions.csv", format_quaternions(&o.quaternions))?;
            consistent = Some(o.lifting.consistent);
            violations = Some(o.lifting.violations);
            o.result
        }
        Loaded::Image(img) => {
            let o = if mode == Mode::Hue { denoise_hue(&img, &g, &wt, &cfg) } else { denoise_chroma(&img, &g, &wt, &cfg) }
                .solver()?;
            out.write("signal.csv", format_signal(&o.result.x))?;
            out.write("denoised.ppm", o.image.to_ppm())?;
            undefined = Some(o.undefined_pixels);
            o.result
        }
    };
    out.write("trace.csv", trace_csv(&result.trace))?;
    let report = DenoiseReport {
        config: DenoiseEcho {
            input: args.input.display().to_string(),
            mode,
            graph: graph_spec,
            n_vertices: g.n_vertices(),
            n_edges: g.n_edges(),
            d,
            lambda: lambda_spec.unwrap_or_else(|| "1".into()),
            w: w_spec.unwrap_or_else(|| "1".into()),
            rho: cfg.rho,
            max_iter: cfg.max_iter,
            tol: cfg.tol,
            retract: cfg.retract,
            threads: cfg.threads,
        },
        iterations: result.iterations,
        converged: result.converged,
        final_residual: result.final_residual,
        objective_k: result.objective_k,
        mean_sphere_distance: result.mean_sphere_distance,
        max_sphere_deviation: result.max_sphere_deviation,
        wall_time_seconds: result.wall_time_seconds,
        degenerate_vertices: result.degenerate.iter().filter(|&&b| b).count(),
        consistent,
        lifting_violations: violations,
        undefined_pixels: undefined,
        execution: if cfg.threads > 1 { "parallel" } else { "sequential" }.into(),
    };
    out.write_json("report.json", &report)?;
    println!(
        "denoised {n} vertices in {} iterations; mean sphere distance {:.3e}",
        report.iterations,
        report.mean_sphere_distance
    );
    Ok(())
}
