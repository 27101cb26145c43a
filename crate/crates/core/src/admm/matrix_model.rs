//! ADMM on the complex (`d = 2`) and quaternion (`d = 4`) matrix relaxation.
//!
//! Each edge carries a `3d × 3d` block
//!
//! ```text
//! P_(n,m) = [ I        M(x_n)  M(x_m) ]
//!           [ M(x_n)ᵀ  I       M(r)ᵀ  ]
//!           [ M(x_m)ᵀ  M(r)    I      ]
//! ```
//!
//! with `M` the left-multiplication matrix and `r_(n,m) ∈ R^d` an edge
//! variable standing in for `x̄_m x_n`. The objective is
//! `J = -Σ w_n⟨x_n, y_n⟩ - Σ λ_(n,m) Re r_(n,m)`.
//!
//! Since `⟨M(a), M(b)⟩_F = d⟨a, b⟩`, the operator `𝒫 = P - I` satisfies
//! `𝒫*_x 𝒫 = 2 d ν_n x_n` and `𝒫*_r 𝒫 = 2 d r`, so the primal step is
//! `x_n = (𝒫*_x(U - Z)_n + w_n y_n / ρ) / (2 d ν_n)` and
//! `r_e = (𝒫*_r(U - Z)_e + λ_e e₁ / ρ) / (2 d)`.

use serde::{Deserialize, Serialize};

use super::{residual_slices, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Weights};
use crate::manifold::matrix_rep;
use crate::model::{block_psd_with_rank, dot, BlockField, EdgeScalars, SphereSignal};
use crate::smallsym::{project_shifted_psd_into, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixVariant {
    ComplexD2,
    QuaternionD4,
}

impl MatrixVariant {
    pub fn dim(self) -> usize {
        match self {
            MatrixVariant::ComplexD2 => 2,
            MatrixVariant::QuaternionD4 => 4,
        }
    }

    pub fn for_dim(d: usize) -> Result<Self> {
        match d {
            2 => Ok(MatrixVariant::ComplexD2),
            4 => Ok(MatrixVariant::QuaternionD4),
            _ => invalid(format!("matrix relaxation needs d = 2 or 4, got {d}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixModelResult {
    pub x: SphereSignal,
    /// Edge variables, one `d`-vector per edge.
    pub r: SphereSignal,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub objective_j: f64,
}

impl MatrixModelResult {
    /// Real parts of the edge variables, comparable to `ℓ`.
    pub fn real_parts(&self) -> EdgeScalars {
        EdgeScalars::new(self.r.iter().map(|r| r[0]).collect()).expect("finite by construction")
    }
}

/// Basis matrices `M(e_c)`, each row-major `d × d`.
fn basis(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|c| {
            let mut e = vec![0.0; d];
            e[c] = 1.0;
            matrix_rep(&e, d).expect("d is 2 or 4")
        })
        .collect()
}

/// Writes sub-block `(bi, bj)` of a `3d × 3d` row-major buffer, optionally transposed.
fn put(out: &mut [f64], d: usize, bi: usize, bj: usize, m: &[f64], transpose: bool) {
    let k = 3 * d;
    for i in 0..d {
        for j in 0..d {
            out[(bi * d + i) * k + bj * d + j] = if transpose { m[j * d + i] } else { m[i * d + j] };
        }
    }
}

/// `⟨B, U_(bi,bj)⟩` for a `d × d` matrix `B`, optionally with `Bᵀ`.
fn pair(u: &[f64], d: usize, bi: usize, bj: usize, m: &[f64], transpose: bool) -> f64 {
    let k = 3 * d;
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let b = if transpose { m[j * d + i] } else { m[i * d + j] };
            acc += b * u[(bi * d + i) * k + bj * d + j];
        }
    }
    acc
}

fn write_shifted(x_n: &[f64], x_m: &[f64], r: &[f64], out: &mut [f64]) {
    let d = x_n.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    let mn = matrix_rep(x_n, d).expect("d is 2 or 4");
    let mm = matrix_rep(x_m, d).expect("d is 2 or 4");
    let mr = matrix_rep(r, d).expect("d is 2 or 4");
    put(out, d, 0, 1, &mn, false);
    put(out, d, 1, 0, &mn, true);
    put(out, d, 0, 2, &mm, false);
    put(out, d, 2, 0, &mm, true);
    put(out, d, 1, 2, &mr, true);
    put(out, d, 2, 1, &mr, false);
}

/// The block `P_(n,m)` (unshifted).
pub fn build_matrix_block(x_n: &[f64], x_m: &[f64], r: &[f64]) -> Result<SymMatrix> {
    let d = x_n.len();
    MatrixVariant::for_dim(d)?;
    if x_m.len() != d || r.len() != d {
        return invalid("block inputs differ in dimension");
    }
    let mut buf = vec![0.0; 9 * d * d];
    write_shifted(x_n, x_m, r, &mut buf);
    for i in 0..3 * d {
        buf[i * 3 * d + i] = 1.0;
    }
    SymMatrix::from_row_major(3 * d, &buf)
}

/// Whether `P_(n,m)` is PSD with numerical rank `d`.
pub fn matrix_feasibility_check(x_n: &[f64], x_m: &[f64], r: &[f64], tol: f64) -> bool {
    match build_matrix_block(x_n, x_m, r) {
        Ok(p) => block_psd_with_rank(&p, x_n.len(), tol),
        Err(_) => false,
    }
}

fn check_sizes(x: &SphereSignal, r: &SphereSignal, g: &Graph) -> Result<usize> {
    let d = x.dim();
    MatrixVariant::for_dim(d)?;
    if x.len() != g.n_vertices() || r.len() != g.n_edges() || r.dim() != d {
        return invalid("matrix-model variables do not match the graph");
    }
    Ok(d)
}

/// `𝒫(x, r) = (P_e - I)_e`.
pub fn apply_p(x: &SphereSignal, r: &SphereSignal, g: &Graph) -> Result<BlockField> {
    let d = check_sizes(x, r, g)?;
    let mut out = BlockField::zeros(3 * d, g.n_edges());
    for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
        write_shifted(x.vertex(a), x.vertex(b), r.vertex(e), out.block_mut(e));
    }
    Ok(out)
}

fn adjoint_p_into(u: &[f64], d: usize, g: &Graph, basis: &[Vec<f64>], xp: &mut [f64], rp: &mut [f64]) {
    let s = 9 * d * d;
    xp.iter_mut().for_each(|v| *v = 0.0);
    for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
        let blk = &u[e * s..(e + 1) * s];
        for (c, m) in basis.iter().enumerate() {
            xp[a * d + c] += pair(blk, d, 0, 1, m, false) + pair(blk, d, 1, 0, m, true);
            xp[b * d + c] += pair(blk, d, 0, 2, m, false) + pair(blk, d, 2, 0, m, true);
            rp[e * d + c] = pair(blk, d, 1, 2, m, true) + pair(blk, d, 2, 1, m, false);
        }
    }
}

/// The adjoint `𝒫*` split into vertex and edge components.
pub fn adjoint_p(u: &BlockField, g: &Graph) -> Result<(SphereSignal, SphereSignal)> {
    let k = u.block_dim();
    if !k.is_multiple_of(3) || u.n_blocks() != g.n_edges() {
        return invalid("block field does not match the graph");
    }
    let d = k / 3;
    MatrixVariant::for_dim(d)?;
    let mut xp = vec![0.0; g.n_vertices() * d];
    let mut rp = vec![0.0; g.n_edges() * d];
    adjoint_p_into(u.as_slice(), d, g, &basis(d), &mut xp, &mut rp);
    Ok((SphereSignal::new(d, xp)?, SphereSignal::new(d, rp)?))
}

/// `J(x, r) = -Σ w_n⟨x_n, y_n⟩ - Σ λ_e Re r_e`.
pub fn objective_j(x: &SphereSignal, r: &SphereSignal, y: &SphereSignal, wt: &Weights) -> Result<f64> {
    if x.len() != y.len() || x.dim() != y.dim() || wt.vertex().len() != x.len() || wt.edge().len() != r.len() {
        return invalid("objective inputs have mismatched sizes");
    }
    Ok(objective_j_raw(x.as_slice(), r.as_slice(), y.as_slice(), x.dim(), wt))
}

fn objective_j_raw(x: &[f64], r: &[f64], y: &[f64], d: usize, wt: &Weights) -> f64 {
    let data: f64 = x
        .chunks_exact(d)
        .zip(y.chunks_exact(d))
        .zip(wt.vertex())
        .map(|((a, b), w)| w * dot(a, b))
        .sum();
    let reg: f64 = r.chunks_exact(d).zip(wt.edge()).map(|(re, lam)| lam * re[0]).sum();
    -data - reg
}

/// Runs ADMM on the matrix relaxation from the all-zero state.
pub fn solve_matrix_model(
    y: &SphereSignal,
    g: &Graph,
    wt: &Weights,
    cfg: &SolverConfig,
    variant: MatrixVariant,
) -> Result<MatrixModelResult> {
    cfg.validate()?;
    let d = variant.dim();
    if y.dim() != d {
        return invalid(format!("{variant:?} needs d = {d}, signal has d = {}", y.dim()));
    }
    super::check_problem(y, g, wt)?;
    let nu = g.degree_table().nu;
    let k = 3 * d;
    let s = k * k;
    let m = g.n_edges();
    let basis = basis(d);
    let mut x = vec![0.0; g.n_vertices() * d];
    let mut r = vec![0.0; m * d];
    let mut x_prev = x.clone();
    let mut r_prev = r.clone();
    let mut u = vec![0.0; m * s];
    let mut z = vec![0.0; m * s];
    let mut diff = vec![0.0; m * s];
    let mut buf = vec![0.0; s];
    let mut iterations = 0;
    let mut converged = false;
    let mut res = f64::INFINITY;

    while iterations < cfg.max_iter {
        diff.iter_mut().zip(u.iter().zip(&z)).for_each(|(o, (a, b))| *o = a - b);
        adjoint_p_into(&diff, d, g, &basis, &mut x, &mut r);
        for (n, xn) in x.chunks_exact_mut(d).enumerate() {
            let scale = 1.0 / (2.0 * d as f64 * nu[n] as f64);
            let wr = wt.vertex()[n] / cfg.rho;
            for (c, yc) in xn.iter_mut().zip(y.vertex(n)) {
                *c = scale * (*c + wr * yc);
            }
        }
        for (re, lam) in r.chunks_exact_mut(d).zip(wt.edge()) {
            re[0] += lam / cfg.rho;
            re.iter_mut().for_each(|v| *v /= 2.0 * d as f64);
        }
        if !x.iter().chain(&r).all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix-model iterate at iteration {}", iterations + 1)));
        }
        for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
            write_shifted(&x[a * d..(a + 1) * d], &x[b * d..(b + 1) * d], &r[e * d..(e + 1) * d], &mut buf);
            let (ue, ze) = (&mut u[e * s..(e + 1) * s], &mut z[e * s..(e + 1) * s]);
            buf.iter_mut().zip(ze.iter()).for_each(|(p, zv)| *p += zv);
            project_shifted_psd_into(k, &buf, ue);
            ze.iter_mut().zip(buf.iter().zip(ue.iter())).for_each(|(zv, (p, uv))| *zv = p - uv);
        }
        iterations += 1;
        res = residual_slices(&x_prev, &x, &r_prev, &r);
        if res < cfg.tol {
            converged = true;
            break;
        }
        x_prev.copy_from_slice(&x);
        r_prev.copy_from_slice(&r);
    }
    let objective_j = objective_j_raw(&x, &r, y.as_slice(), d, wt);
    Ok(MatrixModelResult {
        x: SphereSignal::new(d, x)?,
        r: SphereSignal::new(d, r)?,
        iterations,
        converged,
        final_residual: res,
        objective_j,
    })
}
