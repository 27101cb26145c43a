//! HSV hue on S¹ and chromaticity/brightness on S².

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::io::RgbImage;
use crate::model::SphereSignal;
use crate::synth::signals::{smooth_circle_image, smooth_sphere_image};

fn check_rgb(rgb: [f64; 3]) -> Result<()> {
    if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return invalid(format!("rgb components must lie in [0, 1], got {rgb:?}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    /// Hue as `(cos θ, sin θ)`, red at `θ = 0`.
    pub hue: [f64; 2],
    pub saturation: f64,
    pub value: f64,
    /// Hue is undefined (`r = g = b`); `hue` holds `θ = 0`.
    pub gray: bool,
}

pub fn rgb_to_hsv(rgb: [f64; 3]) -> Result<Hsv> {
    check_rgb(rgb)?;
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let saturation = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return Ok(Hsv { hue: [1.0, 0.0], saturation, value: max, gray: true });
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let theta = sector * PI / 3.0;
    Ok(Hsv { hue: [theta.cos(), theta.sin()], saturation, value: max, gray: false })
}

/// Hue direction and gray flag.
pub fn rgb_to_hue(rgb: [f64; 3]) -> Result<([f64; 2], bool)> {
    let h = rgb_to_hsv(rgb)?;
    Ok((h.hue, h.gray))
}

pub fn hue_to_rgb(hue: [f64; 2], saturation: f64, value: f64) -> [f64; 3] {
    let theta = hue[1].atan2(hue[0]).rem_euclid(2.0 * PI);
    let sector = theta / (PI / 3.0);
    let chroma = value * saturation;
    let x = chroma * (1.0 - (sector.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match sector as usize {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = value - chroma;
    [r + m, g + m, b + m]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chromaticity {
    pub chroma: [f64; 3],
    pub brightness: f64,
    /// Black pixel; `chroma` holds `(1,1,1)/√3`.
    pub black: bool,
}

pub fn rgb_to_chromaticity_brightness(rgb: [f64; 3]) -> Result<Chromaticity> {
    check_rgb(rgb)?;
    let brightness = rgb.iter().map(|c| c * c).sum::<f64>().sqrt();
    if brightness == 0.0 {
        let c = 1.0 / 3f64.sqrt();
        return Ok(Chromaticity { chroma: [c; 3], brightness, black: true });
    }
    Ok(Chromaticity { chroma: rgb.map(|c| c / brightness), brightness, black: false })
}

pub fn chromaticity_brightness_to_rgb(chroma: [f64; 3], brightness: f64) -> [f64; 3] {
    chroma.map(|c| c * brightness)
}

/// Smooth test image: hue and chromaticity fields from the smooth generators,
/// with a gently varying value channel.
pub fn synthetic_color_image(height: usize, width: usize, seed: u64) -> Result<RgbImage> {
    let hue = smooth_circle_image(height, width, seed)?;
    let sat = smooth_sphere_image(height, width, 2, seed.wrapping_add(1))?;
    let pixels = (0..height * width)
        .map(|n| {
            let s = 0.55 + 0.35 * sat.vertex(n)[0].abs();
            let v = 0.6 + 0.35 * sat.vertex(n)[1].abs();
            let h = hue.vertex(n);
            hue_to_rgb([h[0], h[1]], s, v)
        })
        .collect();
    RgbImage::new(width, height, pixels)
}

/// Hue signal of an image with saturation, value and gray flags per pixel.
pub fn image_to_hue(img: &RgbImage) -> Result<(SphereSignal, Vec<Hsv>)> {
    let hsv: Vec<Hsv> = img.pixels().iter().map(|&p| rgb_to_hsv(p)).collect::<Result<_>>()?;
    let sig = SphereSignal::new(2, hsv.iter().flat_map(|h| h.hue).collect())?;
    Ok((sig, hsv))
}

/// Replaces the hue of every pixel, keeping saturation and value.
pub fn hue_to_image(hue: &SphereSignal, hsv: &[Hsv], width: usize, height: usize) -> Result<RgbImage> {
    if hue.dim() != 2 || hue.len() != hsv.len() {
        return invalid("hue signal does not match the pixel data");
    }
    let pixels = hue
        .iter()
        .zip(hsv)
        .map(|(h, p)| hue_to_rgb([h[0], h[1]], p.saturation, p.value).map(|c| c.clamp(0.0, 1.0)))
        .collect();
    RgbImage::new(width, height, pixels)
}

pub fn image_to_chroma(img: &RgbImage) -> Result<(SphereSignal, Vec<Chromaticity>)> {
    let cb: Vec<Chromaticity> =
        img.pixels().iter().map(|&p| rgb_to_chromaticity_brightness(p)).collect::<Result<_>>()?;
    let sig = SphereSignal::new(3, cb.iter().flat_map(|c| c.chroma).collect())?;
    Ok((sig, cb))
}

/// Recombines chromaticity with the stored brightness. Components are clipped
/// to `[0, 1]` for export.
pub fn chroma_to_image(chroma: &SphereSignal, cb: &[Chromaticity], width: usize, height: usize) -> Result<RgbImage> {
    if chroma.dim() != 3 || chroma.len() != cb.len() {
        return invalid("chromaticity signal does not match the pixel data");
    }
    let pixels = chroma
        .iter()
        .zip(cb)
        .map(|(c, p)| chromaticity_brightness_to_rgb([c[0], c[1], c[2]], p.brightness).map(|v| v.clamp(0.0, 1.0)))
        .collect();
    RgbImage::new(width, height, pixels)
}
