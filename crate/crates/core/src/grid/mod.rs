//! Dense 2D field primitives.
//!
//! A [`Grid`] is a `W x H` single-channel field of real values stored
//! row-major. The same type serves as detection heatmap, tag map, binary
//! mask and free parameter field. On top of it this module provides
//! Gaussian peak rendering, local-maximum extraction, bilinear resizing and
//! bit-exact tensor file I/O (see [`io`]).

use crate::error::{Error, Result};

pub mod io;

/// Contributions below this never alter a pixel during Gaussian rendering,
/// which keeps far-away centers from touching the grid at all.
const MIN_GAUSSIAN_CONTRIB: f64 = 1e-16;

/// A `W x H` field of real values, row-major.
///
/// Values are `f64` in memory; the on-disk tensor format stores 32-bit
/// values (see [`io`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid {
    /// All-zero grid. Both dimensions must be at least 1.
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::check_dims(width, height)?;
        Ok(Grid {
            width,
            height,
            values: vec![0.0; width * height],
        })
    }

    /// Grid from an existing row-major value buffer.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::shape(format!(
                "value buffer holds {} entries, expected {}x{} = {}",
                values.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Grid {
            width,
            height,
            values,
        })
    }

    /// Grid filled with a constant.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::check_dims(width, height)?;
        Ok(Grid {
            width,
            height,
            values: vec![value; width * height],
        })
    }

    fn check_dims(width: usize, height: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::parameter(format!(
                "grid dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    /// Value at pixel `(x, y)`. Panics when out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = self.idx(x, y);
        self.values[i] = value;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterator over `(x, y, value)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i % w, i / w, v))
    }

    /// Largest value in the grid.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A local maximum extracted from a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// Composes a unit-height 2D Gaussian into the grid by pointwise `max`.
///
/// Each pixel `p` becomes `max(existing, exp(-|p - center|^2 / (2 sigma^2)))`.
/// Max-composition keeps overlapping peaks at unit height, so a single
/// detection threshold works no matter how many centers stack up.
/// The center may lie anywhere, including outside the grid bounds; pixels
/// whose contribution would fall below `1e-16` are left untouched.
pub fn render_gaussian(grid: &Grid, center: (f64, f64), sigma_px: f64) -> Result<Grid> {
    Error::require_positive(sigma_px, "sigma_px")?;
    let mut out = grid.clone();
    paint_gaussian_max(&mut out, center, sigma_px);
    Ok(out)
}

/// In-place variant of [`render_gaussian`] used by the renderers.
pub(crate) fn paint_gaussian_max(grid: &mut Grid, (cx, cy): (f64, f64), sigma_px: f64) {
    debug_assert!(sigma_px > 0.0);
    // exp(-r^2 / (2 sigma^2)) = MIN_GAUSSIAN_CONTRIB at the cutoff radius.
    let radius = sigma_px * (-2.0 * MIN_GAUSSIAN_CONTRIB.ln()).sqrt();
    let (w, h) = (grid.width as i64, grid.height as i64);
    let x_lo = (cx - radius).ceil() as i64;
    let x_hi = (cx + radius).floor() as i64;
    let y_lo = (cy - radius).ceil() as i64;
    let y_hi = (cy + radius).floor() as i64;
    if x_hi < 0 || y_hi < 0 || x_lo >= w || y_lo >= h {
        return;
    }
    let inv = 1.0 / (2.0 * sigma_px * sigma_px);
    for y in y_lo.max(0)..=y_hi.min(h - 1) {
        let dy = y as f64 - cy;
        for x in x_lo.max(0)..=x_hi.min(w - 1) {
            let dx = x as f64 - cx;
            let g = (-(dx * dx + dy * dy) * inv).exp();
            let i = (y as usize) * grid.width + x as usize;
            if g > grid.values[i] {
                grid.values[i] = g;
            }
        }
    }
}

/// Extracts all local maxima at or above `threshold`.
///
/// A pixel survives when its value is strictly greater than every other
/// pixel in its `window x window` neighborhood (clipped at the borders).
/// Equal-valued neighbors are tie-broken lexicographically: only the pixel
/// with the smallest `(y, x)` among the equals survives, so the result is
/// deterministic. Peaks come back sorted by descending score, then `(y, x)`.
pub fn nms_peaks(grid: &Grid, window: usize, threshold: f64) -> Result<Vec<Peak>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::parameter(format!(
            "nms window must be odd and >= 3, got {window}"
        )));
    }
    let r = window / 2;
    let (w, h) = (grid.width, grid.height);
    let mut peaks = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = grid.get(x, y);
            if v < threshold {
                continue;
            }
            if is_window_max(grid, x, y, r) {
                peaks.push(Peak { x, y, score: v });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    Ok(peaks)
}

#[inline]
fn is_window_max(grid: &Grid, x: usize, y: usize, r: usize) -> bool {
    let v = grid.get(x, y);
    let y_hi = (y + r).min(grid.height - 1);
    let x_hi = (x + r).min(grid.width - 1);
    for ny in y.saturating_sub(r)..=y_hi {
        for nx in x.saturating_sub(r)..=x_hi {
            if nx == x && ny == y {
                continue;
            }
            let nv = grid.get(nx, ny);
            if nv > v || (nv == v && (ny, nx) < (y, x)) {
                return false;
            }
        }
    }
    true
}

/// Bilinear resize with corner-aligned sampling.
///
/// Output corner pixels map exactly onto input corner pixels; resizing to
/// the same dimensions reproduces the input bit for bit. A target dimension
/// of 1 collapses that axis onto the first input row/column.
pub fn resize_bilinear(grid: &Grid, new_w: usize, new_h: usize) -> Result<Grid> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::parameter(format!(
            "resize target must be at least 1x1, got {new_w}x{new_h}"
        )));
    }
    let mut out = Grid::zeros(new_w, new_h)?;
    for oy in 0..new_h {
        let sy = axis_position(oy, grid.height, new_h);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(grid.height - 1);
        let ty = sy - y0 as f64;
        for ox in 0..new_w {
            let sx = axis_position(ox, grid.width, new_w);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(grid.width - 1);
            let tx = sx - x0 as f64;
            let top = (1.0 - tx) * grid.get(x0, y0) + tx * grid.get(x1, y0);
            let bottom = (1.0 - tx) * grid.get(x0, y1) + tx * grid.get(x1, y1);
            out.set(ox, oy, (1.0 - ty) * top + ty * bottom);
        }
    }
    Ok(out)
}

#[inline]
fn axis_position(i: usize, src: usize, dst: usize) -> f64 {
    if dst <= 1 {
        0.0
    } else {
        i as f64 * (src - 1) as f64 / (dst - 1) as f64
    }
}
