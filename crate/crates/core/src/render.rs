//! Binary PPM rendering of label grids.
//!
//! Palette, fixed: escaped pixels ramp from white to blue with escape time,
//! convergent pixels are black, undecided pixels red. Optional overlays
//! stroke diamond boundaries in green and the seed sets in yellow.

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{LabelGrid, OrbitLabel};
use crate::regions::{Diamond, EscapeSeeds};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("label grid has a zero dimension")]
    EmptyGrid,
    #[error("label buffer holds {got} entries, grid wants {want}")]
    LengthMismatch { want: usize, got: usize },
}

/// Escape-time ramp length in iterations; beyond it the pixel is fully blue.
const RAMP_STEPS: f64 = 96.0;

const BLACK: [u8; 3] = [0, 0, 0];
const RED: [u8; 3] = [255, 0, 0];
const GREEN: [u8; 3] = [0, 200, 0];
const YELLOW: [u8; 3] = [255, 215, 0];

#[derive(Debug, Clone, Copy, Default)]
pub struct RenderOptions {
    /// Stroke the boundaries of the diamonds at scales `0..=k`.
    pub overlay_diamonds: Option<u32>,
    /// Stroke the outline of the seed sets.
    pub overlay_seeds: Option<EscapeSeeds>,
}

fn base_color(label: OrbitLabel) -> [u8; 3] {
    match label {
        OrbitLabel::Escaped(n) => {
            let t = (n as f64 / RAMP_STEPS).min(1.0);
            let shade = (255.0 * (1.0 - t)).round() as u8;
            [shade, shade, 255]
        }
        OrbitLabel::ConvergedToZero(_) => BLACK,
        OrbitLabel::Undecided => RED,
    }
}

/// Encode the grid as binary PPM: `P6\n<w> <h>\n255\n` then RGB triples,
/// row-major, top row first. Byte-deterministic for fixed inputs.
pub fn render_ppm(grid: &LabelGrid, opts: &RenderOptions) -> Result<Vec<u8>, RenderError> {
    let w = grid.grid.width as usize;
    let h = grid.grid.height as usize;
    if w == 0 || h == 0 {
        return Err(RenderError::EmptyGrid);
    }
    if grid.labels.len() != w * h {
        return Err(RenderError::LengthMismatch {
            want: w * h,
            got: grid.labels.len(),
        });
    }
    let header = format!("P6\n{} {}\n255\n", w, h);
    let mut bytes = Vec::with_capacity(header.len() + 3 * w * h);
    bytes.extend_from_slice(header.as_bytes());
    let (px, py) = grid.grid.pixel_size();
    let stroke_radius = 0.6 * px.max(py);
    for row in 0..h {
        for col in 0..w {
            let label = grid.labels[row * w + col];
            let z = grid.grid.pixel_center(col as u32, row as u32);
            let mut color = base_color(label);
            if let Some(seeds) = &opts.overlay_seeds {
                if on_seed_outline(seeds, z, px, py) {
                    color = YELLOW;
                }
            }
            if let Some(max_k) = opts.overlay_diamonds {
                for k in 0..=max_k {
                    if Diamond::new(k).boundary_distance(z) <= stroke_radius {
                        color = GREEN;
                        break;
                    }
                }
            }
            bytes.extend_from_slice(&color);
        }
    }
    Ok(bytes)
}

/// A pixel sits on the seed outline when membership flips across one pixel.
fn on_seed_outline(seeds: &EscapeSeeds, z: Complex64, px: f64, py: f64) -> bool {
    let here = seeds.contains(z);
    [
        Complex64::new(z.re - px, z.im),
        Complex64::new(z.re + px, z.im),
        Complex64::new(z.re, z.im - py),
        Complex64::new(z.re, z.im + py),
    ]
    .iter()
    .any(|&n| seeds.contains(n) != here)
}
