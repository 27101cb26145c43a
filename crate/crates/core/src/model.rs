//! The simplified relaxed real model.
//!
//! For an edge `(n, m)` the constraint block is
//!
//! ```text
//!     [ I_d   x_n  x_m ]
//! Q = [ x_nᵀ  1    ℓ   ]   ∈ R^{(d+2)×(d+2)},   Q ⪰ 0.
//!     [ x_mᵀ  ℓ    1   ]
//! ```
//!
//! The relaxed problem minimizes `K(x, ℓ) = -Σ w_n⟨x_n, y_n⟩ - Σ λ_(n,m) ℓ_(n,m)`
//! subject to every block being PSD. The linear map `𝒬(x, ℓ) = (Q_e - I)_e`
//! and its adjoint drive the ADMM primal step.

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Weights};
use crate::smallsym::{sym_eig, SymMatrix};

/// Default relative eigenvalue threshold for the feasibility (rank) test.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// One `d`-vector per vertex, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSignal {
    dim: usize,
    values: Vec<f64>,
}

impl SphereSignal {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=8).contains(&dim) {
            return invalid(format!("signal dimension {dim} not supported"));
        }
        if !values.len().is_multiple_of(dim) {
            return invalid(format!("{} values is not a multiple of d = {dim}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal values".into()));
        }
        Ok(Self { dim, values })
    }

    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; dim * n])
    }

    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return invalid("vectors of unequal length");
        }
        Self::new(dim, vectors.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vertex(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn vertex_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn norms(&self) -> Vec<f64> {
        self.iter().map(norm).collect()
    }

    /// Every vertex has unit norm within `tol`.
    pub fn is_unit(&self, tol: f64) -> bool {
        self.iter().all(|v| (norm(v) - 1.0).abs() <= tol)
    }

    /// Normalizes every vertex. Vectors with norm below `1e-12` are left as
    /// they are and flagged in the returned mask.
    pub fn retract(&self) -> (SphereSignal, Vec<bool>) {
        let mut out = self.clone();
        let mut degenerate = vec![false; self.len()];
        for (v, flag) in out.values.chunks_exact_mut(self.dim).zip(degenerate.iter_mut()) {
            let r = norm(v);
            if r < 1e-12 {
                *flag = true;
            } else {
                v.iter_mut().for_each(|c| *c /= r);
            }
        }
        (out, degenerate)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One scalar `ℓ_(n,m)` per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScalars {
    values: Vec<f64>,
}

impl EdgeScalars {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("edge scalars".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(m: usize) -> Self {
        Self { values: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// One symmetric `k × k` block per edge, row-major and contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockField {
    block_dim: usize,
    data: Vec<f64>,
}

impl BlockField {
    pub fn zeros(block_dim: usize, n_blocks: usize) -> Self {
        Self { block_dim, data: vec![0.0; block_dim * block_dim * n_blocks] }
    }

    pub fn from_blocks(blocks: &[SymMatrix]) -> Result<Self> {
        let k = blocks.first().map_or(0, SymMatrix::dim);
        if blocks.iter().any(|b| b.dim() != k) {
            return invalid("blocks of unequal dimension");
        }
        let data = blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect();
        Ok(Self { block_dim: k, data })
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn n_blocks(&self) -> usize {
        self.data.len() / (self.block_dim * self.block_dim).max(1)
    }

    pub fn block(&self, e: usize) -> &[f64] {
        let s = self.block_dim * self.block_dim;
        &self.data[e * s..(e + 1) * s]
    }

    pub fn block_mut(&mut self, e: usize) -> &mut [f64] {
        let s = self.block_dim * self.block_dim;
        &mut self.data[e * s..(e + 1) * s]
    }

    pub fn to_sym(&self, e: usize) -> SymMatrix {
        SymMatrix::from_row_major(self.block_dim, self.block(e)).expect("block dimension is valid")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Sum of blockwise Frobenius inner products.
    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { block_dim: self.block_dim, data }
    }
}

/// The constraint block `Q_(n,m)` (unshifted).
pub fn build_constraint_block(x_n: &[f64], x_m: &[f64], ell: f64) -> Result<SymMatrix> {
    let d = x_n.len();
    if x_m.len() != d {
        return invalid("x_n and x_m differ in dimension");
    }
    let mut q = SymMatrix::identity(d + 2)?;
    for i in 0..d {
        q.set(i, d, x_n[i]);
        q.set(i, d + 1, x_m[i]);
    }
    q.set(d, d + 1, ell);
    Ok(q)
}

/// Writes `Q_(n,m) - I` into a row-major `(d+2)²` buffer.
#[inline]
pub(crate) fn write_shifted_block(x_n: &[f64], x_m: &[f64], ell: f64, out: &mut [f64]) {
    let d = x_n.len();
    let k = d + 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..d {
        out[i * k + d] = x_n[i];
        out[d * k + i] = x_n[i];
        out[i * k + d + 1] = x_m[i];
        out[(d + 1) * k + i] = x_m[i];
    }
    out[d * k + d + 1] = ell;
    out[(d + 1) * k + d] = ell;
}

/// Whether the block built from `(x_n, x_m, ℓ)` is PSD with numerical rank `d`.
///
/// Eigenvalues below `tol · λ_max` count as zero; the block must have no
/// eigenvalue below `-tol · λ_max` and exactly two near-zero eigenvalues.
pub fn lemma_feasibility_check(x_n: &[f64], x_m: &[f64], ell: f64, tol: f64) -> bool {
    let Ok(q) = build_constraint_block(x_n, x_m, ell) else {
        return false;
    };
    block_psd_with_rank(&q, x_n.len(), tol)
}

/// PSD test combined with a numerical rank test, both relative to `λ_max`.
pub fn block_psd_with_rank(a: &SymMatrix, rank: usize, tol: f64) -> bool {
    let Ok(e) = sym_eig(a) else {
        return false;
    };
    let lmax = e.eigenvalues.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let thr = tol * lmax;
    if e.eigenvalues[0] < -thr {
        return false;
    }
    let zeros = e.eigenvalues.iter().filter(|&&s| s.abs() <= thr).count();
    zeros == a.dim() - rank
}

fn check_sizes(x: &SphereSignal, ell: &EdgeScalars, g: &Graph) -> Result<()> {
    if x.len() != g.n_vertices() {
        return invalid(format!("signal has {} vertices, graph {}", x.len(), g.n_vertices()));
    }
    if ell.len() != g.n_edges() {
        return invalid(format!("{} edge scalars for {} edges", ell.len(), g.n_edges()));
    }
    Ok(())
}

/// `𝒬(x, ℓ) = (Q_(n,m) - I)_{(n,m) ∈ E}`.
pub fn apply_q(x: &SphereSignal, ell: &EdgeScalars, g: &Graph) -> Result<BlockField> {
    check_sizes(x, ell, g)?;
    let d = x.dim();
    let mut out = BlockField::zeros(d + 2, g.n_edges());
    for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
        write_shifted_block(x.vertex(a), x.vertex(b), ell.as_slice()[e], out.block_mut(e));
    }
    Ok(out)
}

/// Accumulates `𝒬*_x(U)` into `x_part` (length `N·d`) and writes `𝒬*_ℓ(U)`
/// into `ell_part`. Vertex sums follow the fixed edge order.
pub(crate) fn adjoint_into(u: &[f64], d: usize, g: &Graph, x_part: &mut [f64], ell_part: &mut [f64]) {
    let k = d + 2;
    let s = k * k;
    x_part.iter_mut().for_each(|v| *v = 0.0);
    for (e, &(a, b)) in g.index_pairs().iter().enumerate() {
        let blk = &u[e * s..(e + 1) * s];
        for i in 0..d {
            x_part[a * d + i] += blk[i * k + d] + blk[d * k + i];
            x_part[b * d + i] += blk[i * k + d + 1] + blk[(d + 1) * k + i];
        }
        ell_part[e] = blk[d * k + d + 1] + blk[(d + 1) * k + d];
    }
}

/// The adjoint `𝒬*` split into its vertex and edge components.
pub fn adjoint_q(u: &BlockField, g: &Graph) -> Result<(SphereSignal, EdgeScalars)> {
    let k = u.block_dim();
    if k < 3 || u.n_blocks() != g.n_edges() {
        return invalid(format!(
            "block field with {} blocks of size {k} does not match {} edges",
            u.n_blocks(),
            g.n_edges()
        ));
    }
    let d = k - 2;
    let mut x_part = vec![0.0; g.n_vertices() * d];
    let mut ell_part = vec![0.0; g.n_edges()];
    adjoint_into(u.as_slice(), d, g, &mut x_part, &mut ell_part);
    Ok((SphereSignal::new(d, x_part)?, EdgeScalars::new(ell_part)?))
}

fn check_objective_sizes(x: &SphereSignal, y: &SphereSignal, wt: &Weights, g: &Graph) -> Result<()> {
    if x.len() != g.n_vertices() || y.len() != g.n_vertices() || x.dim() != y.dim() {
        return invalid("signal sizes do not match the graph");
    }
    if wt.vertex().len() != g.n_vertices() || wt.edge().len() != g.n_edges() {
        return invalid("weights do not match the graph");
    }
    Ok(())
}

/// `K(x, ℓ) = -Σ w_n⟨x_n, y_n⟩ - Σ λ_(n,m) ℓ_(n,m)`.
pub fn objective_k(x: &SphereSignal, ell: &EdgeScalars, y: &SphereSignal, wt: &Weights, g: &Graph) -> Result<f64> {
    check_objective_sizes(x, y, wt, g)?;
    check_sizes(x, ell, g)?;
    Ok(objective_k_unchecked(x.as_slice(), ell.as_slice(), y.as_slice(), x.dim(), wt))
}

pub(crate) fn objective_k_unchecked(x: &[f64], ell: &[f64], y: &[f64], d: usize, wt: &Weights) -> f64 {
    let data: f64 = x
        .chunks_exact(d)
        .zip(y.chunks_exact(d))
        .zip(wt.vertex())
        .map(|((xn, yn), w)| w * dot(xn, yn))
        .sum();
    let reg: f64 = ell.iter().zip(wt.edge()).map(|(l, lam)| lam * l).sum();
    -data - reg
}

/// The nonconvex Tikhonov objective
/// `Σ w_n/2 ‖x_n - y_n‖² + Σ λ_(n,m)/2 ‖x_n - x_m‖²`.
pub fn objective_tikhonov(x: &SphereSignal, y: &SphereSignal, wt: &Weights, g: &Graph) -> Result<f64> {
    check_objective_sizes(x, y, wt, g)?;
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    let data: f64 = (0..x.len()).map(|n| 0.5 * wt.vertex()[n] * sq(x.vertex(n), y.vertex(n))).sum();
    let reg: f64 = g
        .index_pairs()
        .iter()
        .zip(wt.edge())
        .map(|(&(a, b), lam)| 0.5 * lam * sq(x.vertex(a), x.vertex(b)))
        .sum();
    Ok(data + reg)
}

/// Largest instance accepted by [`brute_force_min`].
pub const BRUTE_FORCE_MAX_VERTICES: usize = 4;

/// Exhaustive search of the circle-valued Tikhonov problem over the angle
/// grid `{k · step : k = 0, 1, …}`, `step` given in degrees.
pub fn brute_force_min(y: &SphereSignal, wt: &Weights, g: &Graph, step_degrees: f64) -> Result<(SphereSignal, f64)> {
    if y.dim() != 2 {
        return invalid(format!("brute force search needs d = 2, got {}", y.dim()));
    }
    if !(step_degrees > 0.0 && step_degrees <= 1.0) {
        return invalid(format!("angular step {step_degrees}° must lie in (0°, 1°]"));
    }
    let n = g.n_vertices();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(Error::Capacity(format!(
            "{n} vertices exceeds the brute force limit of {BRUTE_FORCE_MAX_VERTICES}"
        )));
    }
    check_objective_sizes(y, y, wt, g)?;
    let k_steps = (360.0 / step_degrees).round() as usize;
    let h = std::f64::consts::TAU / k_steps as f64;
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..k_steps).map(|k| ((k as f64 * h).cos(), (k as f64 * h).sin())).unzip();
    // data[v][k] = w_v/2 ‖(cos θ_k, sin θ_k) - y_v‖²
    let data: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let yv = y.vertex(v);
            let w = wt.vertex()[v];
            (0..k_steps)
                .map(|k| 0.5 * w * ((cos_t[k] - yv[0]).powi(2) + (sin_t[k] - yv[1]).powi(2)))
                .collect()
        })
        .collect();
    // λ/2 ‖x_a - x_b‖² = λ (1 - cos(θ_a - θ_b)) for unit vectors
    let one_minus_cos: Vec<f64> = cos_t.iter().map(|c| 1.0 - c).collect();
    // back[v]: (earlier vertex, λ) for every edge whose larger endpoint is v
    let mut back: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(a, b), &lam) in g.index_pairs().iter().zip(wt.edge()) {
        back[b].push((a, lam));
    }

    struct Search<'a> {
        k_steps: usize,
        data: &'a [Vec<f64>],
        one_minus_cos: &'a [f64],
        back: &'a [Vec<(usize, f64)>],
        assign: Vec<usize>,
        best: f64,
        best_assign: Vec<usize>,
    }
    impl Search<'_> {
        fn run(&mut self, v: usize, partial: f64) {
            let n = self.data.len();
            for k in 0..self.k_steps {
                let mut cost = partial + self.data[v][k];
                for &(a, lam) in &self.back[v] {
                    let diff = (k + self.k_steps - self.assign[a]) % self.k_steps;
                    cost += lam * self.one_minus_cos[diff];
                }
                if cost >= self.best {
                    continue;
                }
                self.assign[v] = k;
                if v + 1 == n {
                    self.best = cost;
                    self.best_assign.copy_from_slice(&self.assign);
                } else {
                    self.run(v + 1, cost);
                }
            }
        }
    }
    let mut search = Search {
        k_steps,
        data: &data,
        one_minus_cos: &one_minus_cos,
        back: &back,
        assign: vec![0; n],
        best: f64::INFINITY,
        best_assign: vec![0; n],
    };
    search.run(0, 0.0);
    let values = search.best_assign.iter().flat_map(|&k| [cos_t[k], sin_t[k]]).collect();
    let x = SphereSignal::new(2, values)?;
    let value = objective_tikhonov(&x, y, wt, g)?;
    Ok((x, value))
}
