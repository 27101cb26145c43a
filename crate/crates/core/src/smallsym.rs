//! Dense symmetric matrices of dimension at most 12.
//!
//! Eigendecompositions use cyclic Jacobi rotations on stack arrays, with one
//! monomorphized kernel per dimension. The per-edge projection onto the
//! shifted PSD cone `{A = Aᵀ : A ⪰ -I}` sits on the ADMM hot path.

use std::fmt;

use crate::error::{invalid, Error, Result};

pub const MAX_DIM: usize = 12;

const MAX_SWEEPS: usize = 60;

/// Symmetric `dim × dim` matrix stored row-major inline.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            writeln!(f, "  {:?}", &self.data[i * self.dim..(i + 1) * self.dim])?;
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return invalid(format!("matrix dimension {dim} outside 1..={MAX_DIM}"));
    }
    Ok(())
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [0.0; MAX_DIM * MAX_DIM] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        Ok(m)
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        Ok(m)
    }

    /// Builds from row-major entries, symmetrizing as `(A + Aᵀ)/2`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return invalid(format!("{} entries for a {dim}x{dim} matrix", entries.len()));
        }
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.data[i * self.dim + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim);
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(other.data.iter()) {
            *o -= b;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(other.data.iter()) {
            *o += b;
        }
        out
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on `rows` (in the given order).
    pub fn submatrix(&self, rows: &[usize]) -> Result<Self> {
        let mut out = Self::zeros(rows.len())?;
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                out.data[a * rows.len() + b] = self.get(i, j);
            }
        }
        Ok(out)
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Row-major `dim × dim`; column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|r| self.eigenvectors[r * n + i]).collect()
    }

    /// `V diag(f(σ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let s: Vec<f64> = self.eigenvalues.iter().map(|&v| f(v)).collect();
        let v = &self.eigenvectors;
        let mut out = SymMatrix::zeros(n).expect("dimension already validated");
        for i in 0..n {
            for j in i..n {
                let x: f64 = (0..n).map(|k| v[i * n + k] * s[k] * v[j * n + k]).sum();
                out.set(i, j, x);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|s| s)
    }
}

/// Cyclic Jacobi on a `K × K` row-major slice. Returns unsorted eigenvalues
/// and the rotation accumulator (eigenvectors in columns).
#[inline]
fn jacobi<const K: usize>(src: &[f64]) -> ([f64; K], [[f64; K]; K]) {
    let mut a = [[0.0f64; K]; K];
    let mut norm2 = 0.0;
    for i in 0..K {
        for j in 0..K {
            a[i][j] = src[i * K + j];
            norm2 += a[i][j] * a[i][j];
        }
    }
    let mut v = [[0.0f64; K]; K];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    // Backward error of the decomposition is the off-diagonal mass left behind.
    let stop = norm2 * 1e-32;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..K {
            for q in p + 1..K {
                off += a[p][q] * a[p][q];
            }
        }
        if off <= stop || off == 0.0 {
            break;
        }
        for p in 0..K {
            for q in p + 1..K {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let g = 100.0 * apq.abs();
                let (app, aqq) = (a[p][p], a[q][q]);
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let shift = t * apq;
                a[p][p] = app - shift;
                a[q][q] = aqq + shift;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for r in 0..K {
                    if r != p && r != q {
                        let (g, h) = (a[r][p], a[r][q]);
                        let rp = g - s * (h + g * tau);
                        let rq = h + s * (g - h * tau);
                        a[r][p] = rp;
                        a[p][r] = rp;
                        a[r][q] = rq;
                        a[q][r] = rq;
                    }
                }
                for row in v.iter_mut() {
                    let (g, h) = (row[p], row[q]);
                    row[p] = g - s * (h + g * tau);
                    row[q] = h + s * (g - h * tau);
                }
            }
        }
    }
    let mut w = [0.0; K];
    for i in 0..K {
        w[i] = a[i][i];
    }
    (w, v)
}

fn eig_fixed<const K: usize>(src: &[f64], vals: &mut [f64], vecs: &mut [f64]) {
    let (w, v) = jacobi::<K>(src);
    let mut order = [0usize; K];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&i, &j| w[i].total_cmp(&w[j]));
    for (dst, &src_col) in order.iter().enumerate() {
        vals[dst] = w[src_col];
        for r in 0..K {
            vecs[r * K + dst] = v[r][src_col];
        }
    }
}

/// `dst = src + Σ_{σ_i < -1} (-1 - σ_i) v_i v_iᵀ`, i.e. `V max(Σ, -1) Vᵀ`.
/// Returns `true` when some eigenvalue was clipped.
fn project_fixed<const K: usize>(src: &[f64], dst: &mut [f64]) -> bool {
    let (w, v) = jacobi::<K>(src);
    dst[..K * K].copy_from_slice(&src[..K * K]);
    let mut clipped = false;
    for k in 0..K {
        let gap = -1.0 - w[k];
        if gap > 0.0 {
            clipped = true;
            for i in 0..K {
                let vi = gap * v[i][k];
                for j in i..K {
                    dst[i * K + j] += vi * v[j][k];
                }
            }
        }
    }
    if clipped {
        for i in 0..K {
            for j in 0..i {
                dst[i * K + j] = dst[j * K + i];
            }
        }
    }
    clipped
}

macro_rules! dispatch_dim {
    ($dim:expr, $f:ident, $($arg:expr),*) => {
        match $dim {
            1 => $f::<1>($($arg),*),
            2 => $f::<2>($($arg),*),
            3 => $f::<3>($($arg),*),
            4 => $f::<4>($($arg),*),
            5 => $f::<5>($($arg),*),
            6 => $f::<6>($($arg),*),
            7 => $f::<7>($($arg),*),
            8 => $f::<8>($($arg),*),
            9 => $f::<9>($($arg),*),
            10 => $f::<10>($($arg),*),
            11 => $f::<11>($($arg),*),
            12 => $f::<12>($($arg),*),
            _ => unreachable!("dimension checked by caller"),
        }
    };
}

/// Projects a row-major `dim × dim` symmetric block onto the shifted PSD cone.
///
/// The input is assumed symmetric; no validation on this path.
pub(crate) fn project_shifted_psd_into(dim: usize, src: &[f64], dst: &mut [f64]) -> bool {
    dispatch_dim!(dim, project_fixed, src, dst)
}

pub(crate) fn eig_into(dim: usize, src: &[f64], vals: &mut [f64], vecs: &mut [f64]) {
    dispatch_dim!(dim, eig_fixed, src, vals, vecs)
}

pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::NonFinite("sym_eig input".into()));
    }
    let n = a.dim;
    let mut vals = vec![0.0; n];
    let mut vecs = vec![0.0; n * n];
    eig_into(n, a.as_slice(), &mut vals, &mut vecs);
    Ok(EigenDecomposition { eigenvalues: vals, eigenvectors: vecs })
}

/// Frobenius-nearest point of `{A = Aᵀ : A ⪰ -I}`.
pub fn project_shifted_psd(a: &SymMatrix) -> Result<SymMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("projection input".into()));
    }
    let mut out = SymMatrix::zeros(a.dim)?;
    let n = a.dim;
    project_shifted_psd_into(n, a.as_slice(), &mut out.data[..n * n]);
    Ok(out)
}

/// Smallest eigenvalue is at least `-tol`. Non-finite input is never PSD.
pub fn is_psd(a: &SymMatrix, tol: f64) -> bool {
    match sym_eig(a) {
        Ok(e) => e.eigenvalues[0] >= -tol,
        Err(_) => false,
    }
}

/// Schur complement `B - Cᵀ A⁻¹ C` of the leading `k × k` block `A`.
pub fn schur_complement(w: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = w.dim;
    if k == 0 || k >= n {
        return invalid(format!("leading block size {k} must be in 1..{n}"));
    }
    let lead = w.submatrix(&(0..k).collect::<Vec<_>>())?;
    let e = sym_eig(&lead)?;
    let smallest = e.eigenvalues.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if smallest <= 1e-12 {
        return Err(Error::SingularBlock(smallest));
    }
    let inv = e.reconstruct_with(|s| 1.0 / s);
    let m = n - k;
    let mut out = SymMatrix::zeros(m)?;
    for i in 0..m {
        for j in i..m {
            let mut acc = w.get(k + i, k + j);
            for p in 0..k {
                let cp = w.get(p, k + i);
                if cp == 0.0 {
                    continue;
                }
                for q in 0..k {
                    acc -= cp * inv.get(p, q) * w.get(q, k + j);
                }
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
        let e: Vec<f64> = (0..n * n).map(|_| rng.random_range(-scale..scale)).collect();
        SymMatrix::from_row_major(n, &e).unwrap()
    }

    fn orthogonality_error(e: &EigenDecomposition) -> f64 {
        let n = e.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..n).map(|r| e.eigenvectors[r * n + i] * e.eigenvectors[r * n + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eig(&SymMatrix::identity(4).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 4]);
    }

    #[test]
    fn diagonal_eigen() {
        let e = sym_eig(&SymMatrix::from_diag(&[-3.0, 2.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![-3.0, 2.0]);
        assert_eq!(e.eigenvector(0), vec![1.0, 0.0]);
        assert_eq!(e.eigenvector(1), vec![0.0, 1.0]);
        let e = sym_eig(&SymMatrix::from_diag(&[2.0, -3.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![-3.0, 2.0]);
        assert_eq!(e.eigenvector(0), vec![0.0, 1.0]);
    }

    #[test]
    fn random_reconstruction_all_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=MAX_DIM {
            for _ in 0..50 {
                let a = random_sym(&mut rng, n, 3.0);
                let e = sym_eig(&a).unwrap();
                assert!(e.reconstruct().max_abs_diff(&a) < 1e-10, "dim {n}");
                assert!(orthogonality_error(&e) < 1e-10);
                assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = SymMatrix::identity(3).unwrap();
        a.set(0, 1, f64::NAN);
        assert!(matches!(sym_eig(&a), Err(Error::NonFinite(_))));
        assert!(project_shifted_psd(&a).is_err());
        assert!(!is_psd(&a, 1.0));
    }

    #[test]
    fn symmetrizes_on_construction() {
        let a = SymMatrix::from_row_major(2, &[1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
        assert!(SymMatrix::from_row_major(13, &[0.0; 169]).is_err());
        assert!(SymMatrix::from_row_major(2, &[0.0; 3]).is_err());
    }

    #[test]
    fn projection_examples() {
        let a = SymMatrix::from_diag(&[0.5, -0.5]).unwrap();
        assert_eq!(project_shifted_psd(&a).unwrap(), a);
        let a = SymMatrix::from_diag(&[-3.0, 2.0]).unwrap();
        assert_eq!(project_shifted_psd(&a).unwrap(), SymMatrix::from_diag(&[-1.0, 2.0]).unwrap());
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [4, 5, 6, 12] {
            for _ in 0..200 {
                let a = random_sym(&mut rng, n, 4.0);
                let p = project_shifted_psd(&a).unwrap();
                let pp = project_shifted_psd(&p).unwrap();
                assert!(pp.max_abs_diff(&p) < 1e-10);
                assert!(sym_eig(&p).unwrap().eigenvalues[0] >= -1.0 - 1e-10);
            }
        }
    }

    #[test]
    fn psd_tests() {
        assert!(is_psd(&SymMatrix::identity(3).unwrap(), 0.0));
        assert!(!is_psd(&SymMatrix::from_diag(&[1.0, -1e-3]).unwrap(), 1e-6));
    }

    #[test]
    fn schur_block_diagonal() {
        let mut w = SymMatrix::zeros(4).unwrap();
        w.set(0, 0, 2.0);
        w.set(1, 1, 3.0);
        w.set(0, 1, 0.5);
        w.set(2, 2, 5.0);
        w.set(3, 3, 7.0);
        w.set(2, 3, 1.0);
        let s = schur_complement(&w, 2).unwrap();
        assert_eq!(s, w.submatrix(&[2, 3]).unwrap());
    }

    #[test]
    fn schur_singular_leading_block() {
        let w = SymMatrix::from_diag(&[0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(schur_complement(&w, 1), Err(Error::SingularBlock(_))));
        assert!(schur_complement(&w, 0).is_err());
        assert!(schur_complement(&w, 3).is_err());
    }

    #[test]
    fn schur_with_identity_lead_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut w = random_sym(&mut rng, 6, 1.0);
            for i in 0..4 {
                for j in 0..4 {
                    w.set(i, j, if i == j { 1.0 } else { 0.0 });
                }
            }
            let s = schur_complement(&w, 4).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let direct = w.get(4 + i, 4 + j)
                        - (0..4).map(|p| w.get(p, 4 + i) * w.get(p, 4 + j)).sum::<f64>();
                    assert!((s.get(i, j) - direct).abs() < 1e-13);
                }
            }
        }
    }
}
