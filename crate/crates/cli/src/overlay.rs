//! Overlay rendering as a binary portable pixmap (P6), keeping the core
//! free of image codecs.

use std::io::Write;
use std::path::Path;

use aegroup::grid::Grid;
use aegroup::pose_decode::PoseEstimate;

const PALETTE: [[u8; 3]; 12] = [
    [230, 60, 60],
    [60, 180, 75],
    [60, 100, 240],
    [255, 180, 0],
    [170, 60, 230],
    [0, 190, 190],
    [240, 120, 180],
    [140, 200, 60],
    [250, 140, 60],
    [70, 70, 200],
    [190, 190, 60],
    [130, 80, 50],
];

/// Writes detection heatmaps (max-composited, grayscale) with a colored
/// 3x3 marker per decoded joint; one palette color per person.
pub fn write_overlay(path: &Path, det: &[Grid], poses: &[PoseEstimate]) -> std::io::Result<()> {
    let (w, h) = (det[0].width(), det[0].height());
    let mut pixels = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let v = det
                .iter()
                .map(|g| g.get(x, y))
                .fold(0.0f64, f64::max)
                .clamp(0.0, 1.0);
            let gray = (v * 255.0).round() as u8;
            let i = (y * w + x) * 3;
            pixels[i..i + 3].copy_from_slice(&[gray, gray, gray]);
        }
    }
    for (pi, pose) in poses.iter().enumerate() {
        let color = PALETTE[pi % PALETTE.len()];
        for slot in pose.slots.iter().flatten() {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let px = slot.x as i64 + dx;
                    let py = slot.y as i64 + dy;
                    if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                        let i = (py as usize * w + px as usize) * 3;
                        pixels[i..i + 3].copy_from_slice(&color);
                    }
                }
            }
        }
    }

    let mut out = Vec::with_capacity(pixels.len() + 32);
    write!(out, "P6\n{w} {h}\n255\n")?;
    out.extend_from_slice(&pixels);
    std::fs::write(path, out)
}
