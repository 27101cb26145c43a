//! ADMM for the simplified relaxed real model.
//!
//! With `U = 𝒬(x, ℓ)` as consensus constraint and `U_e ∈ 𝒞 = {A ⪰ -I}`,
//! one iteration is
//!
//! 1. `x_n = (𝒬*_x(U - Z)_n + w_n y_n / ρ) / (2 ν_n)`,
//!    `ℓ_e = (𝒬*_ℓ(U - Z)_e + λ_e / ρ) / 2`,
//! 2. `U_e = proj_𝒞(𝒬(x, ℓ)_e + Z_e)`,
//! 3. `Z_e = Z_e + 𝒬(x, ℓ)_e - U_e`,
//!
//! started from all-zero variables.

pub mod matrix_model;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Weights};
use crate::model::{adjoint_into, objective_k_unchecked, write_shifted_block, BlockField, EdgeScalars, SphereSignal};
use crate::smallsym::project_shifted_psd_into;
use crate::synth::metrics::mean_sphere_distance;

pub use matrix_model::{solve_matrix_model, MatrixModelResult, MatrixVariant};

/// Default penalty parameter.
pub const DEFAULT_RHO: f64 = 3.0;
/// Default iterate-change stopping threshold.
pub const DEFAULT_TOL: f64 = 1e-4;
pub const LINE_MAX_ITER: usize = 600;
pub const GRID_MAX_ITER: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iter: usize,
    /// Stop once the 2-norm change of `(x, ℓ)` drops below this value.
    pub tol: f64,
    /// Normalize the returned `x` onto the sphere.
    pub retract: bool,
    /// Worker threads for the per-edge block updates; 1 is sequential.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rho: DEFAULT_RHO, max_iter: LINE_MAX_ITER, tol: DEFAULT_TOL, retract: false, threads: 1 }
    }
}

impl SolverConfig {
    pub fn grid() -> Self {
        Self { max_iter: GRID_MAX_ITER, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return invalid(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.tol >= 0.0) {
            return invalid(format!("tol must be nonnegative, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        Ok(())
    }
}

/// Primal variables, consensus blocks and scaled multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: SphereSignal,
    pub ell: EdgeScalars,
    pub u: BlockField,
    pub z: BlockField,
    pub iteration: usize,
}

impl AdmmState {
    /// All-zero start.
    pub fn zeros(d: usize, g: &Graph) -> Result<Self> {
        Ok(Self {
            x: SphereSignal::zeros(d, g.n_vertices())?,
            ell: EdgeScalars::zeros(g.n_edges()),
            u: BlockField::zeros(d + 2, g.n_edges()),
            z: BlockField::zeros(d + 2, g.n_edges()),
            iteration: 0,
        })
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub objective_k: f64,
    pub mean_sphere_distance: f64,
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    pub x: SphereSignal,
    pub ell: EdgeScalars,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// `K` at the relaxed (unretracted) iterate.
    pub objective_k: f64,
    /// Mean of `1 - ‖x_n‖` at the relaxed iterate.
    pub mean_sphere_distance: f64,
    /// Largest `|1 - ‖x_n‖|` at the relaxed iterate.
    pub max_sphere_deviation: f64,
    pub wall_time_seconds: f64,
    /// Vertices whose norm was below `1e-12` at retraction time.
    pub degenerate: Vec<bool>,
    pub trace: Vec<IterationRecord>,
}

pub(crate) fn check_problem(y: &SphereSignal, g: &Graph, wt: &Weights) -> Result<()> {
    if y.len() != g.n_vertices() {
        return invalid(format!("signal has {} vertices, graph {}", y.len(), g.n_vertices()));
    }
    if wt.vertex().len() != g.n_vertices() || wt.edge().len() != g.n_edges() {
        return invalid("weights do not match the graph");
    }
    if let Some(n) = g.degree_table().nu.iter().position(|&v| v == 0) {
        return Err(Error::InvalidGraph(format!("vertex {} is isolated", n + 1)));
    }
    Ok(())
}

fn check_blocks(u: &BlockField, d: usize, g: &Graph) -> Result<()> {
    if u.block_dim() != d + 2 || u.n_blocks() != g.n_edges() {
        return invalid(format!(
            "block field {}x{} with {} blocks does not match d = {d}, {} edges",
            u.block_dim(),
            u.block_dim(),
            u.n_blocks(),
            g.n_edges()
        ));
    }
    Ok(())
}

/// Closed-form minimizer of `K(x, ℓ) + ρ/2 ‖𝒬(x, ℓ) - U + Z‖²`.
pub fn primal_update(
    u: &BlockField,
    z: &BlockField,
    y: &SphereSignal,
    wt: &Weights,
    g: &Graph,
    rho: f64,
) -> Result<(SphereSignal, EdgeScalars)> {
    if !(rho > 0.0) {
        return invalid(format!("rho must be positive, got {rho}"));
    }
    check_problem(y, g, wt)?;
    let d = y.dim();
    check_blocks(u, d, g)?;
    check_blocks(z, d, g)?;
    let nu = g.degree_table().nu;
    let diff = u.sub(z);
    let mut x = vec![0.0; g.n_vertices() * d];
    let mut ell = vec![0.0; g.n_edges()];
    primal_kernel(diff.as_slice(), y.as_slice(), d, wt, g, &nu, rho, &mut x, &mut ell);
    Ok((SphereSignal::new(d, x)?, EdgeScalars::new(ell)?))
}

#[allow(clippy::too_many_arguments)]
fn primal_kernel(
    diff: &[f64],
    y: &[f64],
    d: usize,
    wt: &Weights,
    g: &Graph,
    nu: &[usize],
    rho: f64,
    x: &mut [f64],
    ell: &mut [f64],
) {
    adjoint_into(diff, d, g, x, ell);
    for (n, xn) in x.chunks_exact_mut(d).enumerate() {
        let scale = 1.0 / (2.0 * nu[n] as f64);
        let wr = wt.vertex()[n] / rho;
        for (c, yc) in xn.iter_mut().zip(&y[n * d..(n + 1) * d]) {
            *c = scale * (*c + wr * yc);
        }
    }
    for (l, lam) in ell.iter_mut().zip(wt.edge()) {
        *l = 0.5 * (*l + lam / rho);
    }
}

/// `U_e = proj_𝒞(𝒬(x, ℓ)_e + Z_e)` for every edge.
pub fn block_update(x: &SphereSignal, ell: &EdgeScalars, z: &BlockField, g: &Graph) -> Result<BlockField> {
    let d = x.dim();
    check_blocks(z, d, g)?;
    let k = d + 2;
    let mut u = BlockField::zeros(k, g.n_edges());
    let mut buf = vec![0.0; k * k];
    for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
        write_shifted_block(x.vertex(a), x.vertex(b), ell.as_slice()[e], &mut buf);
        buf.iter_mut().zip(z.block(e)).for_each(|(v, zv)| *v += zv);
        project_shifted_psd_into(k, &buf, u.block_mut(e));
    }
    Ok(u)
}

/// `Z + 𝒬(x, ℓ) - U`.
pub fn dual_update(z: &BlockField, x: &SphereSignal, ell: &EdgeScalars, u: &BlockField, g: &Graph) -> Result<BlockField> {
    let d = x.dim();
    check_blocks(z, d, g)?;
    check_blocks(u, d, g)?;
    let k = d + 2;
    let mut out = z.clone();
    let mut buf = vec![0.0; k * k];
    for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
        write_shifted_block(x.vertex(a), x.vertex(b), ell.as_slice()[e], &mut buf);
        for ((o, q), uv) in out.block_mut(e).iter_mut().zip(&buf).zip(u.block(e)) {
            *o += q - uv;
        }
    }
    Ok(out)
}

/// Euclidean norm of the concatenated change in `(x, ℓ)`.
pub fn residual(prev: (&SphereSignal, &EdgeScalars), next: (&SphereSignal, &EdgeScalars)) -> f64 {
    residual_slices(prev.0.as_slice(), next.0.as_slice(), prev.1.as_slice(), next.1.as_slice())
}

pub(crate) fn residual_slices(x0: &[f64], x1: &[f64], l0: &[f64], l1: &[f64]) -> f64 {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    (sq(x0, x1) + sq(l0, l1)).sqrt()
}

/// Fused block projection and dual ascent for one edge:
/// `A = 𝒬_e + Z_e`, `U_e = proj(A)`, `Z_e = A - U_e`.
#[inline]
fn edge_step(k: usize, xa: &[f64], xb: &[f64], ell: f64, u: &mut [f64], z: &mut [f64], scratch: &mut [f64]) {
    write_shifted_block(xa, xb, ell, scratch);
    scratch.iter_mut().zip(z.iter()).for_each(|(s, zv)| *s += zv);
    project_shifted_psd_into(k, scratch, u);
    z.iter_mut().zip(scratch.iter()).zip(u.iter()).for_each(|((zv, a), uv)| *zv = a - uv);
}

/// Runs ADMM from the all-zero state.
pub fn admm_solve(y: &SphereSignal, g: &Graph, wt: &Weights, cfg: &SolverConfig) -> Result<DenoiseResult> {
    cfg.validate()?;
    check_problem(y, g, wt)?;
    if !y.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("input signal".into()));
    }
    let d = y.dim();
    let state = AdmmState::zeros(d, g)?;
    if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| run(state, y, g, wt, cfg, true))
    } else {
        run(state, y, g, wt, cfg, false)
    }
}

fn run(mut st: AdmmState, y: &SphereSignal, g: &Graph, wt: &Weights, cfg: &SolverConfig, parallel: bool) -> Result<DenoiseResult> {
    let start = Instant::now();
    let d = y.dim();
    let k = d + 2;
    let s = k * k;
    let nu = g.degree_table().nu;
    let edges = g.index_pairs();
    let mut diff = vec![0.0; s * g.n_edges()];
    let mut x_prev = st.x.clone();
    let mut ell_prev = st.ell.clone();
    let mut trace = Vec::with_capacity(cfg.max_iter.min(100_000));
    let mut converged = false;
    let mut res = f64::INFINITY;
    let mut scratch = vec![0.0; s];

    while st.iteration < cfg.max_iter {
        for ((o, uv), zv) in diff.iter_mut().zip(st.u.as_slice()).zip(st.z.as_slice()) {
            *o = uv - zv;
        }
        primal_kernel(&diff, y.as_slice(), d, wt, g, &nu, cfg.rho, st.x.as_mut_slice(), st.ell.as_mut_slice());
        if !st.x.as_slice().iter().chain(st.ell.as_slice()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("iterate at iteration {}", st.iteration + 1)));
        }

        let x = st.x.as_slice();
        let ell = st.ell.as_slice();
        if parallel {
            st.u.as_mut_slice()
                .par_chunks_mut(s)
                .zip(st.z.as_mut_slice().par_chunks_mut(s))
                .zip(edges.par_iter().zip(ell.par_iter()))
                .for_each_init(
                    || vec![0.0; s],
                    |buf, ((u, z), (&(a, b), &l))| {
                        edge_step(k, &x[a * d..(a + 1) * d], &x[b * d..(b + 1) * d], l, u, z, buf)
                    },
                );
        } else {
            for (((u, z), &(a, b)), &l) in st
                .u
                .as_mut_slice()
                .chunks_exact_mut(s)
                .zip(st.z.as_mut_slice().chunks_exact_mut(s))
                .zip(edges)
                .zip(ell)
            {
                edge_step(k, &x[a * d..(a + 1) * d], &x[b * d..(b + 1) * d], l, u, z, &mut scratch);
            }
        }
        st.iteration += 1;

        res = residual((&x_prev, &ell_prev), (&st.x, &st.ell));
        trace.push(IterationRecord {
            iteration: st.iteration,
            residual: res,
            objective_k: objective_k_unchecked(st.x.as_slice(), st.ell.as_slice(), y.as_slice(), d, wt),
            mean_sphere_distance: mean_sphere_distance(&st.x),
        });
        if res < cfg.tol {
            converged = true;
            break;
        }
        x_prev.as_mut_slice().copy_from_slice(st.x.as_slice());
        ell_prev.as_mut_slice().copy_from_slice(st.ell.as_slice());
    }

    let objective_k = objective_k_unchecked(st.x.as_slice(), st.ell.as_slice(), y.as_slice(), d, wt);
    let mean_dist = mean_sphere_distance(&st.x);
    let max_dev = st.x.norms().iter().map(|n| (1.0 - n).abs()).fold(0.0, f64::max);
    let (x, degenerate) = if cfg.retract {
        st.x.retract()
    } else {
        let n = st.x.len();
        (st.x, vec![false; n])
    };
    Ok(DenoiseResult {
        x,
        ell: st.ell,
        iterations: st.iteration,
        converged,
        final_residual: res,
        objective_k,
        mean_sphere_distance: mean_dist,
        max_sphere_deviation: max_dev,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        degenerate,
        trace,
    })
}

/// Runs the three ADMM steps once on an explicit state, using the public
/// step functions. Intended for inspection and testing.
pub fn admm_step(st: &mut AdmmState, y: &SphereSignal, g: &Graph, wt: &Weights, rho: f64) -> Result<f64> {
    let (x, ell) = primal_update(&st.u, &st.z, y, wt, g, rho)?;
    let u = block_update(&x, &ell, &st.z, g)?;
    let z = dual_update(&st.z, &x, &ell, &u, g)?;
    let res = residual((&st.x, &st.ell), (&x, &ell));
    *st = AdmmState { x, ell, u, z, iteration: st.iteration + 1 };
    Ok(res)
}
