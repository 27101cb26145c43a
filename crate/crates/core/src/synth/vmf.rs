//! von Mises–Fisher sampling on `S^{d-1}` and SO(3) noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::manifold::{axis_angle_to_rotation, rotation_to_axis_angle, RotationMatrix};
use crate::model::{norm, SphereSignal};

#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    mu: Vec<f64>,
    kappa: f64,
}

impl VmfParams {
    pub fn new(mu: Vec<f64>, kappa: f64) -> Result<Self> {
        if !(2..=4).contains(&mu.len()) {
            return invalid(format!("vMF sampling supports d in 2..=4, got {}", mu.len()));
        }
        if !(kappa >= 0.0) || kappa.is_infinite() {
            return invalid(format!("kappa must be finite and nonnegative, got {kappa}"));
        }
        if (norm(&mu) - 1.0).abs() > 1e-10 {
            return invalid("mean direction must be a unit vector");
        }
        Ok(Self { mu, kappa })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct So3NoiseParams {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl So3NoiseParams {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        for k in [kappa1, kappa2] {
            if !(k >= 0.0) || k.is_infinite() {
                return invalid(format!("concentrations must be finite and nonnegative, got {k}"));
            }
        }
        Ok(Self { kappa1, kappa2 })
    }
}

/// Angular offset with density proportional to `exp(κ cos θ)` on `(-π, π]`
/// (Best–Fisher wrapped-Cauchy envelope).
pub fn sample_vm_angle<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if rng.random::<f64>() < 0.5 { -theta } else { theta };
        }
    }
}

/// Cosine of the angle to the mean direction, by Wood's rejection scheme.
fn sample_wood_cosine<R: Rng + ?Sized>(d: usize, kappa: f64, rng: &mut R) -> f64 {
    let m = (d - 1) as f64;
    let b = m / (2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * m, 0.5 * m).expect("positive shape parameters");
    loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
            return w;
        }
    }
}

/// One vMF draw around `mu` (unit, length `d ≥ 2`).
pub fn sample_vmf_one<R: Rng + ?Sized>(mu: &[f64], kappa: f64, rng: &mut R) -> Vec<f64> {
    let d = mu.len();
    let mut s = vec![0.0; d];
    if d == 2 {
        let t = sample_vm_angle(kappa, rng);
        s[0] = t.cos();
        s[1] = t.sin();
    } else {
        let w = sample_wood_cosine(d, kappa, rng);
        let mut v: Vec<f64> = (0..d - 1).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm(&v).max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|c| *c /= nv);
        let t = (1.0 - w * w).max(0.0).sqrt();
        s[0] = w;
        for (si, vi) in s[1..].iter_mut().zip(&v) {
            *si = t * vi;
        }
    }
    // Householder reflection taking e₁ to mu.
    let mut h = mu.to_vec();
    h[0] -= 1.0;
    let hh: f64 = h.iter().map(|v| v * v).sum();
    if hh > 1e-30 {
        let proj: f64 = h.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() * 2.0 / hh;
        s.iter_mut().zip(&h).for_each(|(si, hi)| *si -= proj * hi);
    }
    let ns = norm(&s);
    s.iter_mut().for_each(|v| *v /= ns);
    s
}

/// `count` i.i.d. draws, deterministic in `seed`.
pub fn sample_vmf(p: &VmfParams, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_vmf_one(&p.mu, p.kappa, &mut rng)).collect()
}

/// Replaces each vertex `x_n` by a vMF draw around it.
pub fn add_vmf_noise(x: &SphereSignal, kappa: f64, seed: u64) -> Result<SphereSignal> {
    if !(2..=4).contains(&x.dim()) {
        return invalid(format!("vMF noise supports d in 2..=4, got {}", x.dim()));
    }
    if !(kappa >= 0.0) || kappa.is_infinite() {
        return invalid(format!("kappa must be finite and nonnegative, got {kappa}"));
    }
    if !x.is_unit(1e-10) {
        return invalid("vMF noise needs a unit-norm signal");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    for n in 0..x.len() {
        let s = sample_vmf_one(x.vertex(n), kappa, &mut rng);
        out.vertex_mut(n).copy_from_slice(&s);
    }
    Ok(out)
}

/// Perturbs the axis by vMF(κ₁) on S² and the angle by vMF(κ₂) on S¹, then
/// recomposes. Near the identity the axis is undefined and drawn uniformly.
pub fn perturb_so3_with<R: Rng + ?Sized>(r: &RotationMatrix, p: So3NoiseParams, rng: &mut R) -> Result<RotationMatrix> {
    let (axis, alpha) = rotation_to_axis_angle(r)?;
    let w = match axis {
        Some(v) => sample_vmf_one(&v, p.kappa1, rng),
        None => sample_vmf_one(&[1.0, 0.0, 0.0], 0.0, rng),
    };
    let beta = alpha + sample_vm_angle(p.kappa2, rng);
    axis_angle_to_rotation([w[0], w[1], w[2]], beta)
}

pub fn perturb_so3(r: &RotationMatrix, p: So3NoiseParams, seed: u64) -> Result<RotationMatrix> {
    perturb_so3_with(r, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Perturbs a whole rotation signal with one seeded stream.
pub fn perturb_so3_signal(rs: &[RotationMatrix], p: So3NoiseParams, seed: u64) -> Result<Vec<RotationMatrix>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rs.iter().map(|r| perturb_so3_with(r, p, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_and_determinism() {
        for d in 2..=4 {
            let mut mu = vec![0.0; d];
            mu[d - 1] = 1.0;
            let p = VmfParams::new(mu, 5.0).unwrap();
            let a = sample_vmf(&p, 3, 500);
            let b = sample_vmf(&p, 3, 500);
            assert_eq!(a, b);
            assert!(a.iter().all(|s| (norm(s) - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn concentrated_samples_stay_near_mean() {
        for d in 2..=4 {
            let mut mu = vec![0.0; d];
            mu[0] = 1.0;
            let p = VmfParams::new(mu, 1e6).unwrap();
            for s in sample_vmf(&p, 9, 2000) {
                assert!(s[0].clamp(-1.0, 1.0).acos() < 0.01);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(VmfParams::new(vec![1.0, 0.0], -1.0).is_err());
        assert!(VmfParams::new(vec![1.0, 1.0], 1.0).is_err());
        assert!(VmfParams::new(vec![1.0], 1.0).is_err());
        assert!(So3NoiseParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn perturb_identity_and_concentrated() {
        let p = So3NoiseParams::new(30.0, 15.0).unwrap();
        let out = perturb_so3(&RotationMatrix::IDENTITY, p, 4).unwrap();
        let (orth, det) = out.invariant_errors();
        assert!(orth < 1e-10 && (det - 1.0).abs() < 1e-10);

        let r = axis_angle_to_rotation([0.0, 0.6, 0.8], 1.1).unwrap();
        let tight = So3NoiseParams::new(1e9, 1e9).unwrap();
        let q = perturb_so3(&r, tight, 11).unwrap();
        assert!(q.frobenius_distance_sqr(&r).sqrt() < 1e-3);
        assert_eq!(perturb_so3(&r, p, 5).unwrap(), perturb_so3(&r, p, 5).unwrap());
    }
}
