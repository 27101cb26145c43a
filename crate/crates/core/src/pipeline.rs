//! End-to-end denoising for rotation and color data on top of [`admm_solve`].

use crate::admm::{admm_solve, DenoiseResult, SolverConfig};
use crate::error::{invalid, Result};
use crate::graph::{Graph, Weights};
use crate::io::RgbImage;
use crate::manifold::{lift_signs, quat_to_rotation, rotation_to_quat, Lifting, Quaternion, RotationMatrix};
use crate::model::SphereSignal;
use crate::synth::color::{chroma_to_image, hue_to_image, image_to_chroma, image_to_hue};

#[derive(Debug, Clone)]
pub struct So3Outcome {
    pub rotations: Vec<RotationMatrix>,
    /// Unit quaternions behind `rotations`.
    pub quaternions: Vec<Quaternion>,
    pub lifting: Lifting,
    pub result: DenoiseResult,
}

/// Lifts unit quaternions along the graph, denoises them on S³ and maps the
/// retracted result back to rotations. Degenerate vertices map to the identity.
pub fn denoise_quaternions(q: &[Quaternion], g: &Graph, wt: &Weights, cfg: &SolverConfig) -> Result<So3Outcome> {
    for (n, qn) in q.iter().enumerate() {
        if !qn.is_finite() || (qn.norm() - 1.0).abs() > 1e-6 {
            return invalid(format!("quaternion at vertex {} is not unit", n + 1));
        }
    }
    let unit: Vec<Quaternion> = q
        .iter()
        .map(|&p| {
            let n = p.norm();
            Quaternion::new(p.w / n, p.xi / n, p.xj / n, p.xk / n)
        })
        .collect();
    let lifting = lift_signs(&unit, g)?;
    let y = SphereSignal::new(4, lifting.lifted.iter().flat_map(|p| p.to_array()).collect())?;
    let result = admm_solve(&y, g, wt, &SolverConfig { retract: true, ..*cfg })?;
    let quaternions: Vec<Quaternion> = result
        .x
        .iter()
        .zip(&result.degenerate)
        .map(|(v, &deg)| if deg { Quaternion::ONE } else { Quaternion::new(v[0], v[1], v[2], v[3]) })
        .collect();
    let rotations = quaternions.iter().map(|&p| quat_to_rotation(p)).collect::<Result<_>>()?;
    Ok(So3Outcome { rotations, quaternions, lifting, result })
}

pub fn denoise_rotations(rs: &[RotationMatrix], g: &Graph, wt: &Weights, cfg: &SolverConfig) -> Result<So3Outcome> {
    let q: Vec<Quaternion> = rs.iter().map(rotation_to_quat).collect::<Result<_>>()?;
    denoise_quaternions(&q, g, wt, cfg)
}

/// `sqrt((1/N) Σ ‖R_n - T_n‖²_F)`.
pub fn rotation_rmse(a: &[RotationMatrix], b: &[RotationMatrix]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return invalid(format!("rotation signals of lengths {} and {}", a.len(), b.len()));
    }
    let s: f64 = a.iter().zip(b).map(|(p, q)| p.frobenius_distance_sqr(q)).sum();
    Ok((s / a.len() as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct ColorOutcome {
    pub image: RgbImage,
    pub result: DenoiseResult,
    /// Pixels whose hue or chromaticity was undefined (gray or black).
    pub undefined_pixels: usize,
}

fn check_image_graph(img: &RgbImage, g: &Graph) -> Result<()> {
    if img.width() * img.height() != g.n_vertices() {
        return invalid(format!(
            "{}x{} image on a graph with {} vertices",
            img.width(),
            img.height(),
            g.n_vertices()
        ));
    }
    Ok(())
}

/// Denoises the hue channel, keeping saturation and value.
pub fn denoise_hue(img: &RgbImage, g: &Graph, wt: &Weights, cfg: &SolverConfig) -> Result<ColorOutcome> {
    check_image_graph(img, g)?;
    let (hue, hsv) = image_to_hue(img)?;
    let result = admm_solve(&hue, g, wt, &SolverConfig { retract: true, ..*cfg })?;
    let image = hue_to_image(&result.x, &hsv, img.width(), img.height())?;
    let undefined_pixels = hsv.iter().filter(|h| h.gray).count();
    Ok(ColorOutcome { image, result, undefined_pixels })
}

/// Denoises the chromaticity, keeping brightness.
pub fn denoise_chroma(img: &RgbImage, g: &Graph, wt: &Weights, cfg: &SolverConfig) -> Result<ColorOutcome> {
    check_image_graph(img, g)?;
    let (chroma, cb) = image_to_chroma(img)?;
    let result = admm_solve(&chroma, g, wt, &SolverConfig { retract: true, ..*cfg })?;
    let image = chroma_to_image(&result.x, &cb, img.width(), img.height())?;
    let undefined_pixels = cb.iter().filter(|c| c.black).count();
    Ok(ColorOutcome { image, result, undefined_pixels })
}
