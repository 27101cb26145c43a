//! Text and image formats: CSV signals, quaternion/rotation rows, PPM (P6),
//! and JSON with 17 significant digits.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::manifold::{Quaternion, RotationMatrix, ROTATION_TOL};
use crate::model::SphereSignal;

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse { line: i + 1, msg: format!("{t:?}: {e}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse { line: i + 1, msg: format!("non-finite value {v}") });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Numeric table with a fixed column count; `#` starts a comment line.
pub fn parse_table(text: &str, columns: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let rows = parse_rows(text)?;
    let width = columns.or_else(|| rows.first().map(Vec::len)).unwrap_or(0);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Parse { line: i + 1, msg: format!("expected {width} columns, found {}", r.len()) });
        }
    }
    Ok(rows)
}

pub fn format_table<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One vertex per row, `d` columns.
pub fn parse_signal(text: &str) -> Result<SphereSignal> {
    let rows = parse_table(text, None)?;
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no rows".into() });
    }
    SphereSignal::from_vectors(&rows)
}

pub fn format_signal(x: &SphereSignal) -> String {
    format_table(x.iter())
}

/// Quaternion rows `w, x, y, z`.
pub fn parse_quaternions(text: &str) -> Result<Vec<Quaternion>> {
    parse_table(text, Some(4))?.iter().map(|r| Quaternion::from_slice(r)).collect()
}

pub fn format_quaternions(q: &[Quaternion]) -> String {
    let rows: Vec<[f64; 4]> = q.iter().map(|q| q.to_array()).collect();
    format_table(rows.iter().map(|r| r.as_slice()))
}

/// Rotations as 9 row-major entries per line.
pub fn parse_rotations(text: &str) -> Result<Vec<RotationMatrix>> {
    parse_table(text, Some(9))?
        .iter()
        .map(|r| RotationMatrix::from_row_major(r, ROTATION_TOL))
        .collect()
}

pub fn format_rotations(rs: &[RotationMatrix]) -> String {
    let rows: Vec<[f64; 9]> = rs.iter().map(|r| r.row_major()).collect();
    format_table(rows.iter().map(|r| r.as_slice()))
}

/// Axis-angle rows `v1, v2, v3, α`.
pub fn parse_axis_angles(text: &str) -> Result<Vec<([f64; 3], f64)>> {
    Ok(parse_table(text, Some(4))?
        .into_iter()
        .map(|r| ([r[0], r[1], r[2]], r[3]))
        .collect())
}

/// RGB image with components in `[0, 1]`, row-major pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return invalid(format!("{} pixels for a {width}x{height} image", pixels.len()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    /// Binary PPM, 8 bits per channel.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 3 * self.pixels.len());
        write!(out, "P6\n{} {}\n255\n", self.width, self.height).expect("writing to a Vec cannot fail");
        for p in &self.pixels {
            for c in p {
                out.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }

    /// Reads binary PPM with any `maxval` up to 65535.
    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let err = |msg: &str| Error::Parse { line: 0, msg: format!("PPM: {msg}") };
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(err("truncated header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        if token()? != "P6" {
            return Err(err("only binary P6 is supported"));
        }
        let mut num = |what: &str| -> Result<usize> {
            token()?.parse::<usize>().map_err(|_| err(&format!("bad {what}")))
        };
        let width = num("width")?;
        let height = num("height")?;
        let maxval = num("maxval")?;
        if !(1..=65535).contains(&maxval) {
            return Err(err("maxval outside 1..=65535"));
        }
        // Exactly one whitespace byte separates the header from the raster.
        let data = bytes.get(pos + 1..).ok_or_else(|| err("missing raster"))?;
        let bps = if maxval < 256 { 1 } else { 2 };
        let need = width * height * 3 * bps;
        if data.len() < need {
            return Err(err(&format!("raster has {} bytes, need {need}", data.len())));
        }
        let scale = maxval as f64;
        let sample = |i: usize| -> f64 {
            let v = if bps == 1 { data[i] as u32 } else { (data[2 * i] as u32) << 8 | data[2 * i + 1] as u32 };
            (v as f64 / scale).min(1.0)
        };
        let pixels = (0..width * height)
            .map(|p| [sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)])
            .collect();
        RgbImage::new(width, height, pixels)
    }
}

/// `serde_json` formatter printing floats with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

/// JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}
