//! Smooth synthetic ground truths on line and grid graphs.
//!
//! Circle signals follow low-frequency trigonometric angle paths, sphere
//! signals normalize low-frequency curves, rotation signals slerp through
//! random keyframes. Every generator caps the angle between graph neighbours
//! at [`MAX_INCREMENT_DEG`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::manifold::{quat_to_rotation, Quaternion, RotationMatrix};
use crate::model::{dot, norm, SphereSignal};

pub const MAX_INCREMENT_DEG: f64 = 5.0;

/// Random smooth scalar field `Σ a_k sin(2π(f_k·t) + φ_k)` on `[0,1]^dims`.
struct Waves {
    terms: Vec<(f64, Vec<f64>, f64)>,
}

impl Waves {
    fn new(rng: &mut ChaCha8Rng, dims: usize, count: usize) -> Self {
        let terms = (0..count)
            .map(|k| {
                let amp = rng.random_range(0.5..1.0) / (k + 1) as f64;
                let freq = (0..dims).map(|_| rng.random_range(0.3..2.0)).collect();
                (amp, freq, rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        Self { terms }
    }

    fn eval(&self, t: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, f, p)| a * (2.0 * PI * f.iter().zip(t).map(|(fi, ti)| fi * ti).sum::<f64>() + p).sin())
            .sum()
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos()
}

/// Line coordinates `n/(N-1)` or grid coordinates `(i/(H-1), j/(W-1))`.
fn coordinates(shape: (usize, usize)) -> Vec<Vec<f64>> {
    let (h, w) = shape;
    let scale = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            if h == 1 {
                out.push(vec![scale(j, w)]);
            } else {
                out.push(vec![scale(i, h), scale(j, w)]);
            }
        }
    }
    out
}

/// Pairs of row-major neighbours in an `h × w` layout (a line when `h = 1`).
fn neighbour_pairs(shape: (usize, usize)) -> Vec<(usize, usize)> {
    let (h, w) = shape;
    let mut out = Vec::new();
    for i in 0..h {
        for j in 0..w {
            let v = i * w + j;
            if j + 1 < w {
                out.push((v, v + 1));
            }
            if i + 1 < h {
                out.push((v, v + w));
            }
        }
    }
    out
}

fn check_shape(shape: (usize, usize)) -> Result<()> {
    if shape.0 * shape.1 < 2 {
        return invalid("signal needs at least 2 vertices");
    }
    Ok(())
}

fn circle_field(shape: (usize, usize), seed: u64) -> Result<SphereSignal> {
    check_shape(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = coordinates(shape);
    let dims = coords[0].len();
    let waves = Waves::new(&mut rng, dims, 3);
    let offset = rng.random_range(0.0..2.0 * PI);
    let base: Vec<f64> = coords.iter().map(|t| waves.eval(t)).collect();
    let max_step = neighbour_pairs(shape)
        .iter()
        .map(|&(a, b)| (base[a] - base[b]).abs())
        .fold(0.0, f64::max);
    // Wind around the circle about twice, unless that breaks the increment cap.
    let cap = 0.99 * MAX_INCREMENT_DEG.to_radians();
    let amp = if max_step > 0.0 { (2.0 * PI).min(cap / max_step) } else { 1.0 };
    let values = base.iter().flat_map(|b| {
        let t = offset + amp * b;
        [t.cos(), t.sin()]
    });
    SphereSignal::new(2, values.collect())
}

fn sphere_field(shape: (usize, usize), d: usize, seed: u64) -> Result<SphereSignal> {
    check_shape(shape)?;
    if !(2..=8).contains(&d) {
        return invalid(format!("dimension {d} outside 2..=8"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = coordinates(shape);
    let dims = coords[0].len();
    let waves: Vec<Waves> = (0..d).map(|_| Waves::new(&mut rng, dims, 3)).collect();
    let pairs = neighbour_pairs(shape);
    // Shrink the parameter domain until neighbouring values are close enough.
    let mut span = 1.0;
    loop {
        let vals: Vec<Vec<f64>> = coords
            .iter()
            .map(|t| {
                let ts: Vec<f64> = t.iter().map(|c| c * span).collect();
                let v: Vec<f64> = waves.iter().map(|w| w.eval(&ts) + 0.2).collect();
                let nv = norm(&v);
                v.iter().map(|c| c / nv).collect()
            })
            .collect();
        let worst = pairs.iter().map(|&(a, b)| angle_between(&vals[a], &vals[b])).fold(0.0, f64::max);
        if worst <= MAX_INCREMENT_DEG.to_radians() || span < 1e-6 {
            return SphereSignal::new(d, vals.concat());
        }
        span *= 0.5;
    }
}

pub fn smooth_circle_signal(n: usize, seed: u64) -> Result<SphereSignal> {
    circle_field((1, n), seed)
}

pub fn smooth_circle_image(height: usize, width: usize, seed: u64) -> Result<SphereSignal> {
    circle_field((height, width), seed)
}

pub fn smooth_sphere_signal(n: usize, d: usize, seed: u64) -> Result<SphereSignal> {
    sphere_field((1, n), d, seed)
}

pub fn smooth_sphere_image(height: usize, width: usize, d: usize, seed: u64) -> Result<SphereSignal> {
    sphere_field((height, width), d, seed)
}

fn slerp(a: [f64; 4], b: [f64; 4], t: f64) -> [f64; 4] {
    let c = dot(&a, &b).clamp(-1.0, 1.0);
    let theta = c.acos();
    let mut out = [0.0; 4];
    if theta < 1e-12 {
        out = a;
    } else {
        let s = theta.sin();
        let (wa, wb) = (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s);
        for i in 0..4 {
            out[i] = wa * a[i] + wb * b[i];
        }
    }
    let n = norm(&out);
    out.map(|v| v / n)
}

fn random_unit_quat(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

/// Unit quaternions slerped through random keyframes, in the same hemisphere
/// as their predecessor.
pub fn smooth_quaternion_signal(n: usize, seed: u64) -> Result<Vec<Quaternion>> {
    if n < 2 {
        return invalid("signal needs at least 2 vertices");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = (n / 100).max(1);
    let steps = (n - 1) as f64 / segments as f64;
    // Rotation angle per step is twice the quaternion arc per step.
    let max_arc = (0.99 * MAX_INCREMENT_DEG.to_radians() / 2.0 * steps).min(PI / 3.0);
    let mut keys = vec![random_unit_quat(&mut rng)];
    for _ in 0..segments {
        let prev = *keys.last().expect("nonempty");
        let mut dir = random_unit_quat(&mut rng);
        // Tangent direction at prev.
        let c = dot(&dir, &prev);
        dir.iter_mut().zip(&prev).for_each(|(d, p)| *d -= c * p);
        let nd = norm(&dir);
        let arc = rng.random_range(0.5..1.0) * max_arc;
        let next: [f64; 4] = std::array::from_fn(|i| arc.cos() * prev[i] + arc.sin() * dir[i] / nd);
        keys.push(next);
    }
    let out = (0..n)
        .map(|i| {
            let pos = i as f64 / steps;
            let k = (pos.floor() as usize).min(segments - 1);
            let q = slerp(keys[k], keys[k + 1], pos - k as f64);
            Quaternion::new(q[0], q[1], q[2], q[3])
        })
        .collect();
    Ok(out)
}

pub fn smooth_so3_signal(n: usize, seed: u64) -> Result<Vec<RotationMatrix>> {
    smooth_quaternion_signal(n, seed)?.into_iter().map(quat_to_rotation).collect()
}

/// Rotation field `exp` of a smooth rotation-vector field on an image grid.
pub fn smooth_so3_image(height: usize, width: usize, seed: u64) -> Result<Vec<RotationMatrix>> {
    check_shape((height, width))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = coordinates((height, width));
    let dims = coords[0].len();
    let waves: Vec<Waves> = (0..3).map(|_| Waves::new(&mut rng, dims, 3)).collect();
    let pairs = neighbour_pairs((height, width));
    let mut span = 1.0;
    loop {
        let qs: Vec<[f64; 4]> = coords
            .iter()
            .map(|t| {
                let ts: Vec<f64> = t.iter().map(|c| c * span).collect();
                let v: Vec<f64> = waves.iter().map(|w| 0.6 * w.eval(&ts)).collect();
                let half = norm(&v);
                if half < 1e-12 {
                    [1.0, 0.0, 0.0, 0.0]
                } else {
                    let s = half.sin() / half;
                    [half.cos(), s * v[0], s * v[1], s * v[2]]
                }
            })
            .collect();
        // Rotation angle between neighbours is 2·acos|⟨q_a, q_b⟩|.
        let worst = pairs
            .iter()
            .map(|&(a, b)| 2.0 * dot(&qs[a], &qs[b]).abs().min(1.0).acos())
            .fold(0.0, f64::max);
        if worst <= MAX_INCREMENT_DEG.to_radians() || span < 1e-6 {
            return qs
                .into_iter()
                .map(|q| quat_to_rotation(Quaternion::new(q[0], q[1], q[2], q[3])))
                .collect();
        }
        span *= 0.5;
    }
}
