//! Heatmaps as binary PPM (P6).
//!
//! Entry `(i, j)` of an m x n matrix becomes pixel `(row i, column j + 1)`.
//! Nonnegative values are gray, `255 * (1 - v / max)`, so larger is darker;
//! negative values use the same scale on a red ramp. Column 0 is a strip
//! coloring the output partition, the extra bottom row a strip coloring the
//! input partition.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Partition, Result};

/// Strip colors, cycled by label.
pub const PALETTE: [[u8; 3]; 8] = [
    [230, 190, 0],
    [40, 160, 60],
    [200, 40, 40],
    [50, 90, 200],
    [150, 70, 170],
    [0, 170, 170],
    [240, 120, 30],
    [120, 120, 120],
];

const WHITE: [u8; 3] = [255, 255, 255];

fn shade(v: f64, max: f64) -> [u8; 3] {
    if max == 0.0 || v == 0.0 {
        return WHITE;
    }
    let level = (255.0 * (1.0 - (v.abs() / max).clamp(0.0, 1.0))).round() as u8;
    if v > 0.0 {
        [level; 3]
    } else {
        [255, level, level]
    }
}

fn strip_color(partition: Option<&Partition>, index: usize) -> [u8; 3] {
    partition.map_or(WHITE, |p| PALETTE[p.label(index) % PALETTE.len()])
}

/// Encode `matrix` with optional partition strips as PPM bytes.
pub fn render_matrix_image(
    matrix: &DMatrix<f64>,
    bottom: Option<&Partition>,
    left: Option<&Partition>,
) -> Result<Vec<u8>> {
    let (m, n) = matrix.shape();
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot render a matrix with non-finite entries"));
    }
    if bottom.is_some_and(|p| p.len() != n) || left.is_some_and(|p| p.len() != m) {
        return Err(Error::shape("partition strip does not match the matrix"));
    }
    let max = matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (width, height) = (n + 1, m + 1);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * width * height);
    for i in 0..m {
        out.extend_from_slice(&strip_color(left, i));
        for j in 0..n {
            out.extend_from_slice(&shade(matrix[(i, j)], max));
        }
    }
    out.extend_from_slice(&WHITE);
    for j in 0..n {
        out.extend_from_slice(&strip_color(bottom, j));
    }
    Ok(out)
}

pub fn write_matrix_image(
    matrix: &DMatrix<f64>,
    bottom: Option<&Partition>,
    left: Option<&Partition>,
    path: &Path,
) -> Result<()> {
    fs::write(path, render_matrix_image(matrix, bottom, left)?)?;
    Ok(())
}
