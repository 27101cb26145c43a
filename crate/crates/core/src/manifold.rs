//! Quaternions, rotation matrices and the double cover `S³ → SO(3)`.

use std::collections::VecDeque;
use std::ops::{Mul, Neg};

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;

/// `w + i·xi + j·xj + k·xk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub xi: f64,
    pub xj: f64,
    pub xk: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, xi: f64, xj: f64, xk: f64) -> Self {
        Self { w, xi, xj, xk }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            [w, i, j, k] => Ok(Self::new(*w, *i, *j, *k)),
            _ => invalid(format!("quaternion needs 4 components, got {}", v.len())),
        }
    }

    /// `(Re, Im_i, Im_j, Im_k)`.
    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.xi, self.xj, self.xk]
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.xi, -self.xj, -self.xk)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.xi * self.xi + self.xj * self.xj + self.xk * self.xk
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product.
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.xi * b.xi - a.xj * b.xj - a.xk * b.xk,
            a.w * b.xi + a.xi * b.w + a.xj * b.xk - a.xk * b.xj,
            a.w * b.xj - a.xi * b.xk + a.xj * b.w + a.xk * b.xi,
            a.w * b.xk + a.xi * b.xj - a.xj * b.xi + a.xk * b.w,
        )
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.xi, -self.xj, -self.xk)
    }
}

pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

pub fn quat_conj(q: Quaternion) -> Quaternion {
    q.conj()
}

pub fn quat_norm(q: Quaternion) -> f64 {
    q.norm()
}

/// `Re[a·conj(b)]`, which equals the Euclidean inner product of the 4-vectors.
pub fn re_mul_conj(a: Quaternion, b: Quaternion) -> f64 {
    a.w * b.w + a.xi * b.xi + a.xj * b.xj + a.xk * b.xk
}

const UNIT_TOL: f64 = 1e-8;

/// Orthogonal 3×3 matrix with determinant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Validates `RᵀR = I` and `det R = 1`, each within `tol` (entrywise).
    pub fn new(rows: [[f64; 3]; 3], tol: f64) -> Result<Self> {
        let r = RotationMatrix(rows);
        let (orth, det) = r.invariant_errors();
        if !(orth <= tol && (det - 1.0).abs() <= tol) {
            return Err(Error::InvalidRotation(format!(
                "orthogonality error {orth:e}, determinant {det}"
            )));
        }
        Ok(r)
    }

    pub fn from_row_major(v: &[f64], tol: f64) -> Result<Self> {
        if v.len() != 9 {
            return invalid(format!("rotation needs 9 entries, got {}", v.len()));
        }
        Self::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]], tol)
    }

    pub fn row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    /// Largest entry of `|RᵀR - I|` and the determinant.
    pub fn invariant_errors(&self) -> (f64, f64) {
        let m = &self.0;
        let mut orth: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((s - target).abs());
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if orth.is_nan() || det.is_nan() {
            return (f64::INFINITY, f64::NAN);
        }
        (orth, det)
    }

    pub fn frobenius_distance_sqr(&self, other: &RotationMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = self.0[i][j] - other.0[i][j];
                s += d * d;
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &RotationMatrix) -> f64 {
        self.row_major().iter().zip(other.row_major()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    }
}

/// Rotation axis and angle in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
}

fn check_unit_axis(v: [f64; 3]) -> Result<()> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !((r - 1.0).abs() <= UNIT_TOL) {
        return invalid(format!("rotation axis must be unit, has norm {r}"));
    }
    Ok(())
}

/// `cos(α/2) + sin(α/2)(i v₁ + j v₂ + k v₃)`.
pub fn axis_angle_to_quat(v: [f64; 3], alpha: f64) -> Result<Quaternion> {
    check_unit_axis(v)?;
    let (s, c) = (0.5 * alpha).sin_cos();
    Ok(Quaternion::new(c, s * v[0], s * v[1], s * v[2]))
}

/// The rotation `R(q)`; `R(q) = R(-q)`.
pub fn quat_to_rotation(q: Quaternion) -> Result<RotationMatrix> {
    let r = q.norm();
    if !((r - 1.0).abs() <= UNIT_TOL) {
        return invalid(format!("quaternion must be unit, has norm {r}"));
    }
    let Quaternion { w, xi: i, xj: j, xk: k } = q;
    Ok(RotationMatrix([
        [1.0 - 2.0 * j * j - 2.0 * k * k, 2.0 * i * j - 2.0 * k * w, 2.0 * i * k + 2.0 * j * w],
        [2.0 * i * j + 2.0 * k * w, 1.0 - 2.0 * i * i - 2.0 * k * k, 2.0 * j * k - 2.0 * i * w],
        [2.0 * i * k - 2.0 * j * w, 2.0 * j * k + 2.0 * i * w, 1.0 - 2.0 * i * i - 2.0 * j * j],
    ]))
}

/// The axis-angle rotation formula (Rodrigues form).
pub fn axis_angle_to_rotation(v: [f64; 3], alpha: f64) -> Result<RotationMatrix> {
    check_unit_axis(v)?;
    let (s, c) = alpha.sin_cos();
    let t = 1.0 - c;
    let [v1, v2, v3] = v;
    Ok(RotationMatrix([
        [t * v1 * v1 + c, t * v1 * v2 - v3 * s, t * v1 * v3 + v2 * s],
        [t * v2 * v1 + v3 * s, t * v2 * v2 + c, t * v2 * v3 - v1 * s],
        [t * v1 * v3 - v2 * s, t * v3 * v2 + v1 * s, t * v3 * v3 + c],
    ]))
}

/// Tolerance for accepting a matrix as a rotation in [`rotation_to_quat`].
pub const ROTATION_TOL: f64 = 1e-6;

/// Quaternion representative with nonnegative real part.
///
/// Uses the largest of `tr R, R₁₁, R₂₂, R₃₃` as pivot. When the real part
/// vanishes the first nonzero imaginary component is made positive.
pub fn rotation_to_quat(r: &RotationMatrix) -> Result<Quaternion> {
    let (orth, det) = r.invariant_errors();
    if !(orth <= ROTATION_TOL && (det - 1.0).abs() <= ROTATION_TOL) {
        return Err(Error::InvalidRotation(format!(
            "orthogonality error {orth:e}, determinant {det}"
        )));
    }
    let m = &r.0;
    let tr = m[0][0] + m[1][1] + m[2][2];
    let q = if tr >= m[0][0] && tr >= m[1][1] && tr >= m[2][2] {
        let s = 2.0 * (1.0 + tr).sqrt();
        Quaternion::new(0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
    } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
        let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
        Quaternion::new((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
    } else if m[1][1] >= m[2][2] {
        let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
        Quaternion::new((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
    } else {
        let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
        Quaternion::new((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
    };
    let n = q.norm();
    let q = Quaternion::new(q.w / n, q.xi / n, q.xj / n, q.xk / n);
    Ok(canonical_sign(q))
}

const SIGN_TIE_TOL: f64 = 1e-14;

fn canonical_sign(q: Quaternion) -> Quaternion {
    if q.w.abs() > SIGN_TIE_TOL {
        return if q.w < 0.0 { -q } else { q };
    }
    let lead = [q.xi, q.xj, q.xk].into_iter().find(|c| c.abs() > SIGN_TIE_TOL).unwrap_or(0.0);
    if lead < 0.0 {
        -q
    } else {
        q
    }
}

/// Axis and angle `α ∈ [0, π]`. Returns `None` for the axis when the
/// rotation is (numerically) the identity.
pub fn rotation_to_axis_angle(r: &RotationMatrix) -> Result<(Option<[f64; 3]>, f64)> {
    let q = rotation_to_quat(r)?;
    let s = (q.xi * q.xi + q.xj * q.xj + q.xk * q.xk).sqrt();
    let angle = 2.0 * s.atan2(q.w);
    if angle < 1e-8 {
        return Ok((None, angle));
    }
    Ok((Some([q.xi / s, q.xj / s, q.xk / s]), angle))
}

/// Result of [`lift_signs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    pub lifted: Vec<Quaternion>,
    pub consistent: bool,
    /// 1-based edges with `Re[q_n q̄_m] < 0` after lifting.
    pub violations: Vec<(usize, usize)>,
}

/// Chooses quaternion signs along a breadth-first traversal from vertex 1
/// so that `Re[q_n q̄_parent] ≥ 0`, then checks every edge.
pub fn lift_signs(q: &[Quaternion], g: &Graph) -> Result<Lifting> {
    if q.len() != g.n_vertices() {
        return invalid(format!("{} quaternions for {} vertices", q.len(), g.n_vertices()));
    }
    let mut lifted = q.to_vec();
    let adj = g.adjacency();
    let mut visited = vec![false; q.len()];
    let mut queue = VecDeque::new();
    visited[0] = true;
    queue.push_back(0);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in &adj[v] {
            if visited[u] {
                continue;
            }
            if re_mul_conj(lifted[u], lifted[v]) < 0.0 {
                lifted[u] = -lifted[u];
            }
            visited[u] = true;
            queue.push_back(u);
        }
    }
    let violations: Vec<(usize, usize)> = g
        .index_pairs()
        .iter()
        .filter(|&&(a, b)| re_mul_conj(lifted[a], lifted[b]) < 0.0)
        .map(|&(a, b)| (a + 1, b + 1))
        .collect();
    Ok(Lifting { lifted, consistent: violations.is_empty(), violations })
}

/// `(‖R(q_n) - R(q_m)‖²_F, 8(1 - Re[q_n q̄_m]²))`.
pub fn frobenius_identity_check(qn: Quaternion, qm: Quaternion) -> Result<(f64, f64)> {
    let lhs = quat_to_rotation(qn)?.frobenius_distance_sqr(&quat_to_rotation(qm)?);
    let re = re_mul_conj(qn, qm);
    Ok((lhs, 8.0 * (1.0 - re * re)))
}

/// Real matrix representation of a complex number (`d = 2`) or quaternion
/// (`d = 4`), row-major. `M(a)·M(b) = M(ab)` and `M(z)ᵀ w = z̄ w`.
pub fn matrix_rep(z: &[f64], d: usize) -> Result<Vec<f64>> {
    if z.len() != d {
        return invalid(format!("expected {d} components, got {}", z.len()));
    }
    match d {
        2 => Ok(vec![z[0], -z[1], z[1], z[0]]),
        4 => {
            let [a, b, c, e] = [z[0], z[1], z[2], z[3]];
            Ok(vec![
                a, -b, -c, -e, //
                b, a, -e, c, //
                c, e, a, -b, //
                e, -c, b, a,
            ])
        }
        _ => invalid(format!("matrix representation exists for d = 2 or 4, not {d}")),
    }
}
