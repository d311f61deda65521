//! Binary pixel masks with run-length encoding and overlap measures.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A `W x H` binary mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::parameter(format!(
                "mask dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Mask {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::shape(format!(
                "bit buffer holds {} entries, expected {width}x{height}",
                bits.len()
            )));
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    /// Foreground = any non-zero grid value.
    pub fn from_grid(grid: &Grid) -> Self {
        Mask {
            width: grid.width(),
            height: grid.height(),
            bits: grid.values().iter().map(|&v| v != 0.0).collect(),
        }
    }

    pub fn to_grid(&self) -> Grid {
        let values = self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Grid::from_values(self.width, self.height, values).expect("mask dims are valid")
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
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Foreground pixels as `(x, y)` in row-major order.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    /// Intersection over union against another mask of the same shape.
    /// Two empty masks have IoU 0.
    pub fn iou(&self, other: &Mask) -> f64 {
        assert!(
            self.width == other.width && self.height == other.height,
            "IoU requires masks of identical shape"
        );
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            if *a && *b {
                inter += 1;
            }
            if *a || *b {
                union += 1;
            }
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Run-length encoding: alternating run lengths over the row-major
    /// scan, starting with a background run (which may be 0). The runs
    /// always sum to `W * H`.
    pub fn to_rle(&self) -> Vec<u64> {
        let mut runs = Vec::new();
        let mut current = false; // encoding starts on background
        let mut len = 0u64;
        for &b in &self.bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    /// Inverse of [`Mask::to_rle`].
    pub fn from_rle(width: usize, height: usize, runs: &[u64]) -> Result<Self> {
        let total: u64 = runs.iter().sum();
        if total != (width * height) as u64 {
            return Err(Error::Format(format!(
                "RLE runs sum to {total}, expected {}",
                width * height
            )));
        }
        let mut bits = Vec::with_capacity(width * height);
        let mut value = false;
        for &run in runs {
            for _ in 0..run {
                bits.push(value);
            }
            value = !value;
        }
        Mask::from_bits(width, height, bits)
    }
}
