//! Text artifacts describing element placements on the surface grid.

use std::fs;
use std::path::{Path, PathBuf};

use irris_core::model::TopologyMask;
use irris_core::RisError;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyBitmap {
    /// Row-major `1`/`0` grid, one surface row per line.
    pub grid: String,
    /// `index,row,col` of every selected grid point.
    pub coordinates: String,
}

pub fn export_topology(mask: &TopologyMask, rows: usize, cols: usize) -> Result<TopologyBitmap> {
    if rows * cols != mask.len() {
        return Err(RisError::InvalidArgument(format!(
            "{rows}x{cols} grid cannot hold a mask of length {}",
            mask.len()
        ))
        .into());
    }
    let mut grid = String::with_capacity(mask.len() + rows);
    for r in 0..rows {
        for c in 0..cols {
            grid.push(if mask.is_active(r * cols + c) { '1' } else { '0' });
        }
        grid.push('\n');
    }
    let mut coordinates = String::from("index,row,col\n");
    for n in mask.active_indices() {
        coordinates.push_str(&format!("{n},{},{}\n", n / cols, n % cols));
    }
    Ok(TopologyBitmap { grid, coordinates })
}

/// Inverse of the grid part of [`export_topology`]: returns the mask and
/// the grid shape.
pub fn parse_topology(grid: &str) -> Result<(TopologyMask, usize, usize)> {
    let rows: Vec<&str> = grid.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let cols = rows.first().map_or(0, |r| r.len());
    let mut bits = Vec::with_capacity(rows.len() * cols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(RisError::InvalidArgument(format!("row {i} has {} cells, expected {cols}", row.len())).into());
        }
        for ch in row.chars() {
            match ch {
                '1' => bits.push(true),
                '0' => bits.push(false),
                other => return Err(RisError::InvalidArgument(format!("unexpected cell `{other}`")).into()),
            }
        }
    }
    Ok((TopologyMask::from_bits(bits), rows.len(), cols))
}

/// Writes `<stem>.txt` and `<stem>.csv` under `dir`.
pub fn write_topology(dir: &Path, stem: &str, bitmap: &TopologyBitmap) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let grid = dir.join(format!("{stem}.txt"));
    fs::write(&grid, &bitmap.grid)?;
    fs::write(dir.join(format!("{stem}.csv")), &bitmap.coordinates)?;
    Ok(grid)
}
