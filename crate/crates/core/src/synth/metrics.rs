use crate::error::{invalid, Result};
use crate::model::{dot, norm, SphereSignal};

/// `(1/N) Σ (1 - ‖x_n‖)`.
pub fn mean_sphere_distance(x: &SphereSignal) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| 1.0 - norm(v)).sum::<f64>() / x.len() as f64
}

fn check_pair(x: &SphereSignal, t: &SphereSignal) -> Result<()> {
    if x.len() != t.len() || x.dim() != t.dim() {
        return invalid(format!(
            "signals differ in shape: {}x{} vs {}x{}",
            x.len(),
            x.dim(),
            t.len(),
            t.dim()
        ));
    }
    Ok(())
}

/// `sqrt((1/N) Σ ‖x_n - t_n‖²)`.
pub fn rmse(x: &SphereSignal, truth: &SphereSignal) -> Result<f64> {
    check_pair(x, truth)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = x
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / x.len() as f64).sqrt())
}

/// Angle between the directions of `x_n` and `t_n`; a zero vector counts as
/// orthogonal to everything.
pub fn angular_errors(x: &SphereSignal, truth: &SphereSignal) -> Result<Vec<f64>> {
    check_pair(x, truth)?;
    Ok(x
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| {
            let nn = norm(a) * norm(b);
            if nn < 1e-300 {
                std::f64::consts::FRAC_PI_2
            } else {
                (dot(a, b) / nn).clamp(-1.0, 1.0).acos()
            }
        })
        .collect())
}
