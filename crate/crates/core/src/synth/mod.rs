//! Synthetic ground truths, noise models, metrics and color conversions.

pub mod color;
pub mod metrics;
pub mod signals;
pub mod vmf;

pub use color::{
    chromaticity_brightness_to_rgb, hue_to_rgb, rgb_to_chromaticity_brightness, rgb_to_hsv, rgb_to_hue,
    synthetic_color_image, Chromaticity, Hsv,
};
pub use metrics::{angular_errors, mean_sphere_distance, rmse};
pub use signals::{
    smooth_circle_image, smooth_circle_signal, smooth_quaternion_signal, smooth_so3_image, smooth_so3_signal,
    smooth_sphere_image, smooth_sphere_signal, MAX_INCREMENT_DEG,
};
pub use vmf::{add_vmf_noise, perturb_so3, perturb_so3_signal, sample_vmf, So3NoiseParams, VmfParams};
