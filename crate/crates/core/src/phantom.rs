//! Synthetic test images.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const MIN_PHANTOM_SIZE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhantomKind {
    SheppLogan,
    DirectionalGrid,
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhantomKind::SheppLogan => "shepp_logan",
            PhantomKind::DirectionalGrid => "directional_grid",
        })
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shepp_logan" => Ok(PhantomKind::SheppLogan),
            "directional_grid" => Ok(PhantomKind::DirectionalGrid),
            other => Err(Error::InvalidConfig(format!(
                "unknown phantom kind `{other}`"
            ))),
        }
    }
}

// (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Rectangular region of the directional grid holding stripes at one angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripeTile {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    /// Angle of the constant-intensity lines, radians in `[0, π)`, measured
    /// from the column axis towards increasing row index.
    pub angle: f64,
    pub period: f64,
}

const GRID_TILES: usize = 4;

/// Tile layout of the `directional_grid` phantom: a 4×4 grid cycling through
/// eight angles in steps of π/8, with a shorter period in the top half.
pub fn directional_grid_tiles(size: usize) -> Vec<StripeTile> {
    let edges: Vec<usize> = (0..=GRID_TILES).map(|k| k * size / GRID_TILES).collect();
    let mut tiles = Vec::with_capacity(GRID_TILES * GRID_TILES);
    for tr in 0..GRID_TILES {
        for tc in 0..GRID_TILES {
            let t = tr * GRID_TILES + tc;
            tiles.push(StripeTile {
                rows: (edges[tr], edges[tr + 1]),
                cols: (edges[tc], edges[tc + 1]),
                angle: (t % 8) as f64 * PI / 8.0,
                period: if t < 8 { 8.0 } else { 12.0 },
            });
        }
    }
    tiles
}

/// Deterministic real phantom with peak magnitude 1.
pub fn make_phantom<T: Real>(size: usize, kind: PhantomKind) -> Result<Image<T>> {
    if size < MIN_PHANTOM_SIZE {
        return Err(Error::InvalidConfig(format!(
            "phantom size must be at least {MIN_PHANTOM_SIZE}, got {size}"
        )));
    }
    let values = match kind {
        PhantomKind::SheppLogan => shepp_logan(size),
        PhantomKind::DirectionalGrid => directional_grid(size),
    };
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled: Vec<T> = values.iter().map(|v| T::lit(v / peak)).collect();
    Image::from_real(size, size, &scaled)
}

fn shepp_logan(size: usize) -> Vec<f64> {
    let half = (size as f64 - 1.0) / 2.0;
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        // y axis points up
        let y = (half - r as f64) / half;
        for c in 0..size {
            let x = (c as f64 - half) / half;
            let mut v = 0.0;
            for &[amp, a, b, x0, y0, deg] in &SHEPP_LOGAN {
                let (s, co) = deg.to_radians().sin_cos();
                let dx = x - x0;
                let dy = y - y0;
                let u = dx * co + dy * s;
                let w = -dx * s + dy * co;
                if (u * u) / (a * a) + (w * w) / (b * b) <= 1.0 {
                    v += amp;
                }
            }
            out[r * size + c] = v;
        }
    }
    out
}

fn directional_grid(size: usize) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    for tile in directional_grid_tiles(size) {
        let (s, c) = tile.angle.sin_cos();
        for r in tile.rows.0..tile.rows.1 {
            for col in tile.cols.0..tile.cols.1 {
                let offset = -(col as f64) * s + r as f64 * c;
                out[r * size + col] = 0.6 + 0.4 * (2.0 * PI * offset / tile.period).cos();
            }
        }
    }
    out
}
