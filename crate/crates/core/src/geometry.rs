//! Grid, block, and cell arithmetic, sensor deployment, and transmitter
//! sampling.
//!
//! The monitored area is an n×n grid of 10 m × 10 m cells with the origin at
//! the grid corner, partitioned into square blocks whose side (in cells) is
//! the divisor of n closest to √n. Indices are row-major throughout: cell
//! `i` has column `i % n` and row `i / n`, and the same convention applies
//! to blocks.
//!
//! Sensor deployment is fully deterministic so that experiments are
//! reproducible from a seed alone:
//!
//! - Coarse sensors sit on a centered k×k lattice (k² sensors) or a 3×3
//!   lattice minus its center (8 sensors). Ideal offsets (2i+1)·L/(2k) are
//!   snapped away from the grid center onto the 10 m cell-corner lattice
//!   (the exact middle offset, when not cell-aligned, ties toward the
//!   smaller coordinate). Any sensor that lands exactly on a block center
//!   would sit at zero distance from a discrimination target, so it is
//!   moved one cell per axis toward the grid center, or away if that spot
//!   is taken or still a block center. Counts whose lattice cannot be made
//!   collision-free this way are rejected as unsupported.
//! - Fine sensors are the 4 edge midpoints of each block, so adjacent
//!   blocks share their border sensor ("need not be disjoint").
//!
//! Transmitter sampling is either discrete (the cell center) or continuous
//! (uniform inside the cell, rejection-resampled until it is at least 5 m
//! from every sensor in the layout it will be sensed with).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::qmath::Rng;
use crate::sensing::MIN_SEPARATION_M;

#[allow(unused_imports)]
use num_traits::Float;

/// Cell side length in meters, fixed across all settings.
pub const CELL_SIZE_M: f64 = 10.0;

/// Rejection-sampling attempt budget before a cell is declared
/// geometrically infeasible.
pub const MAX_REJECTION_ATTEMPTS: usize = 10_000;

/// Errors from grid construction, deployment, and sampling.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    /// Grid side or index outside its legal range.
    #[error("value {got} outside supported range {min}..={max}")]
    OutOfRange { got: usize, min: usize, max: usize },
    /// Coarse sensor count with no collision-free deterministic lattice on
    /// this grid.
    #[error(
        "coarse sensor count {coarse_count} is unsupported on a {n}x{n} grid \
         (supported counts are 4, 8, and 16 where a collision-free lattice exists)"
    )]
    UnsupportedCount { coarse_count: usize, n: usize },
    /// Continuous sampling found no point ≥ 5 m from all layout sensors.
    #[error(
        "no transmitter position ≥ {MIN_SEPARATION_M} m from all sensors found in cell \
         {cell_id} after {attempts} attempts (geometrically infeasible cell)"
    )]
    ExhaustedRejection { cell_id: usize, attempts: usize },
}

/// A position in meters, origin at the grid corner.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    /// East coordinate in meters.
    pub x: f64,
    /// North coordinate in meters.
    pub y: f64,
}

impl Point {
    /// Creates a point from coordinates in meters.
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// 2D Euclidean distance in meters.
    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Which center set an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Individual 10 m cells.
    Cell,
    /// Blocks of block_side × block_side cells.
    Block,
}

/// Transmitter placement setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Setting {
    /// Transmitter anywhere inside its cell.
    Continuous,
    /// Transmitter exactly at its cell center.
    Discrete,
}

/// An n×n grid of 10 m cells partitioned into square blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridGeometry {
    n: usize,
    block_side: usize,
}

/// Builds the grid for `n` cells per side.
///
/// The block side is the divisor of `n` closest to √n, ties broken toward
/// the smaller divisor, so blocks are as close to √n × √n cells as the
/// grid allows.
///
/// Returns `OutOfRange` unless 2 ≤ n ≤ 16.
pub fn make_grid(n: usize) -> Result<GridGeometry, GeometryError> {
    if !(2..=16).contains(&n) {
        return Err(GeometryError::OutOfRange { got: n, min: 2, max: 16 });
    }
    let target = (n as f64).sqrt();
    let mut best = 1usize;
    let mut best_dist = f64::INFINITY;
    for d in 1..=n {
        if n % d == 0 {
            let dist = (d as f64 - target).abs();
            // Strict inequality keeps the smaller divisor on ties.
            if dist < best_dist {
                best = d;
                best_dist = dist;
            }
        }
    }
    Ok(GridGeometry { n, block_side: best })
}

impl GridGeometry {
    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cells per block side.
    pub fn block_side(&self) -> usize {
        self.block_side
    }

    /// Blocks per side.
    pub fn blocks_per_side(&self) -> usize {
        self.n / self.block_side
    }

    /// Total cell count n².
    pub fn cell_count(&self) -> usize {
        self.n * self.n
    }

    /// Total block count (n / block_side)².
    pub fn block_count(&self) -> usize {
        self.blocks_per_side() * self.blocks_per_side()
    }

    /// Cells per block, block_side².
    pub fn cells_per_block(&self) -> usize {
        self.block_side * self.block_side
    }

    /// Area side length in meters.
    pub fn side_length(&self) -> f64 {
        self.n as f64 * CELL_SIZE_M
    }

    /// Center of cell `cell_id` (row-major).
    pub fn cell_center(&self, cell_id: usize) -> Point {
        let col = cell_id % self.n;
        let row = cell_id / self.n;
        Point::new((col as f64 + 0.5) * CELL_SIZE_M, (row as f64 + 0.5) * CELL_SIZE_M)
    }

    /// Center of block `block_id` (row-major).
    pub fn block_center(&self, block_id: usize) -> Point {
        let per = self.blocks_per_side();
        let col = block_id % per;
        let row = block_id / per;
        let side = self.block_side as f64 * CELL_SIZE_M;
        Point::new((col as f64 + 0.5) * side, (row as f64 + 0.5) * side)
    }

    /// Row-major cell centers, cell i at ((col+0.5)·10, (row+0.5)·10).
    pub fn cell_centers(&self) -> Vec<Point> {
        (0..self.cell_count()).map(|i| self.cell_center(i)).collect()
    }

    /// Row-major block centers.
    pub fn block_centers(&self) -> Vec<Point> {
        (0..self.block_count()).map(|i| self.block_center(i)).collect()
    }

    /// Cell containing `p`. Interior boundaries belong to the higher cell;
    /// the outer boundary is clamped inward so every point of the closed
    /// area maps to a cell.
    pub fn cell_of(&self, p: Point) -> usize {
        let col = ((p.x / CELL_SIZE_M) as usize).min(self.n - 1);
        let row = ((p.y / CELL_SIZE_M) as usize).min(self.n - 1);
        row * self.n + col
    }

    /// Block containing cell `cell_id`.
    pub fn block_of_cell(&self, cell_id: usize) -> usize {
        let col = cell_id % self.n;
        let row = cell_id / self.n;
        (row / self.block_side) * self.blocks_per_side() + col / self.block_side
    }

    /// Block containing `p`.
    pub fn block_of(&self, p: Point) -> usize {
        self.block_of_cell(self.cell_of(p))
    }

    /// Global cell ids of block `block_id`, ascending (row-major within the
    /// block). This ordering is the candidate order of every per-block
    /// discrimination or classification stage.
    pub fn cells_in_block(&self, block_id: usize) -> Vec<usize> {
        let per = self.blocks_per_side();
        let bcol = block_id % per;
        let brow = block_id / per;
        let mut out = Vec::with_capacity(self.cells_per_block());
        for r in 0..self.block_side {
            for c in 0..self.block_side {
                let row = brow * self.block_side + r;
                let col = bcol * self.block_side + c;
                out.push(row * self.n + col);
            }
        }
        out
    }

    /// Axis-aligned bounds (x0, y0, x1, y1) of cell `cell_id` in meters.
    pub fn cell_rect(&self, cell_id: usize) -> (f64, f64, f64, f64) {
        let col = cell_id % self.n;
        let row = cell_id / self.n;
        (
            col as f64 * CELL_SIZE_M,
            row as f64 * CELL_SIZE_M,
            (col + 1) as f64 * CELL_SIZE_M,
            (row + 1) as f64 * CELL_SIZE_M,
        )
    }

    /// Axis-aligned bounds (x0, y0, x1, y1) of block `block_id` in meters.
    pub fn block_rect(&self, block_id: usize) -> (f64, f64, f64, f64) {
        let per = self.blocks_per_side();
        let bcol = block_id % per;
        let brow = block_id / per;
        let side = self.block_side as f64 * CELL_SIZE_M;
        (bcol as f64 * side, brow as f64 * side, (bcol + 1) as f64 * side, (brow + 1) as f64 * side)
    }
}

/// Ordered centers of the requested level, row-major.
pub fn centers(grid: &GridGeometry, level: Level) -> Vec<Point> {
    match level {
        Level::Cell => grid.cell_centers(),
        Level::Block => grid.block_centers(),
    }
}

/// Deployed sensor positions: coarse sensors for the whole area plus four
/// fine sensors per block.
///
/// Every sensor lies inside the area. Fine sensors lie on their block's
/// border; a sensor on a shared border appears in both adjacent blocks'
/// lists, so lists need not be disjoint.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorLayout {
    coarse: Vec<Point>,
    fine: BTreeMap<usize, [Point; 4]>,
}

impl SensorLayout {
    /// Coarse (area-level) sensors.
    pub fn coarse(&self) -> &[Point] {
        &self.coarse
    }

    /// The four fine sensors of `block_id`, in bottom/left/right/top edge
    /// order, when the layout carries that block.
    pub fn fine_of(&self, block_id: usize) -> Option<&[Point; 4]> {
        self.fine.get(&block_id)
    }

    /// Block ids carrying fine sensors, ascending.
    pub fn fine_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.fine.keys().copied()
    }

    /// Every sensor in the layout: coarse first, then fine by block id.
    pub fn all_sensors(&self) -> impl Iterator<Item = Point> + '_ {
        self.coarse.iter().copied().chain(self.fine.values().flat_map(|f| f.iter().copied()))
    }

    /// The same layout restricted to its coarse sensors. Used when sampling
    /// transmitters sensed by the coarse stage alone (single-cell blocks
    /// short-circuit their fine stage, so fine sensors never see them).
    pub fn coarse_only(&self) -> SensorLayout {
        SensorLayout { coarse: self.coarse.clone(), fine: BTreeMap::new() }
    }

    /// A layout holding just the given sensors. Used as the separation mask
    /// when sampling transmitters sensed by a known subset (for example one
    /// block's fine sensors).
    pub fn from_sensors(sensors: Vec<Point>) -> SensorLayout {
        SensorLayout { coarse: sensors, fine: BTreeMap::new() }
    }
}

/// Integer-meter deployment lattice: offsets of a k-per-axis centered
/// lattice snapped away from the grid center onto the cell-corner lattice.
///
/// Exact integer arithmetic: offset i solves (2i+1)·L/(2k) with L = 10n,
/// i.e. num/k with num = (2i+1)·5n meters.
fn axis_offsets(n: usize, k: usize) -> Vec<i64> {
    let n = n as i64;
    let k = k as i64;
    let center_num = 5 * n * k;
    let step = 10 * k;
    (0..k)
        .map(|i| {
            let num = (2 * i + 1) * 5 * n;
            if num < center_num {
                num.div_euclid(step) * 10
            } else if num > center_num {
                // Ceiling division snaps away from center on the high side.
                (num + step - 1).div_euclid(step) * 10
            } else if num % step == 0 {
                num / step * 10
            } else {
                // Exact middle offset not cell-aligned: tie toward the
                // smaller coordinate.
                num.div_euclid(step) * 10
            }
        })
        .collect()
}

/// Deploys sensors for the grid.
///
/// Coarse sensors: `coarse_count` of 4 or 16 gives a centered k×k lattice
/// (k = 2 or 4); 8 gives a 3×3 lattice minus its center. Ideal offsets are
/// snapped away from the grid center onto the 10 m cell-corner lattice, and
/// any sensor landing exactly on a block center (a discrimination target,
/// which must stay ≥ 5 m from every sensor) moves one cell per axis toward
/// the grid center, or away from it if that position is occupied or still
/// a block center.
///
/// Fine sensors: the four edge midpoints of every block.
///
/// The result is fully deterministic: no randomness is consumed.
///
/// Returns `UnsupportedCount` when `coarse_count` is not 4, 8, or 16, or
/// when the snapped lattice degenerates (duplicate offsets) or cannot be
/// freed of block-center collisions (both happen only for 16 sensors on
/// small grids).
pub fn deploy_sensors(
    grid: &GridGeometry,
    coarse_count: usize,
) -> Result<SensorLayout, GeometryError> {
    let n = grid.n();
    let k = match coarse_count {
        4 => 2,
        8 | 16 => if coarse_count == 8 { 3 } else { 4 },
        _ => return Err(GeometryError::UnsupportedCount { coarse_count, n }),
    };
    let offsets = axis_offsets(n, k);
    let mut sorted = offsets.clone();
    sorted.dedup();
    if sorted.len() != offsets.len() {
        return Err(GeometryError::UnsupportedCount { coarse_count, n });
    }

    // Build the lattice row-major (y outer), skipping the center for 8.
    let mid = offsets[k / 2];
    let mut positions: Vec<(i64, i64)> = Vec::with_capacity(coarse_count);
    for &y in &offsets {
        for &x in &offsets {
            if coarse_count == 8 && x == mid && y == mid {
                continue;
            }
            positions.push((x, y));
        }
    }

    // Block centers in integer meters; (b + 0.5) · block_side · 10 is the
    // integer block_side·5 offset plus whole-block strides.
    let bs = grid.block_side() as i64;
    let per = grid.blocks_per_side() as i64;
    let is_block_center = |p: (i64, i64)| -> bool {
        let on_axis = |v: i64| {
            let rel = v - 5 * bs;
            rel >= 0 && rel % (10 * bs) == 0 && rel / (10 * bs) < per
        };
        on_axis(p.0) && on_axis(p.1)
    };
    let half = 5 * n as i64;
    let step_axis = |v: i64, toward: bool| -> i64 {
        use core::cmp::Ordering;
        match (v.cmp(&half), toward) {
            (Ordering::Less, true) | (Ordering::Greater, false) => v + 10,
            (Ordering::Greater, true) | (Ordering::Less, false) => v - 10,
            (Ordering::Equal, _) => v,
        }
    };
    for i in 0..positions.len() {
        if !is_block_center(positions[i]) {
            continue;
        }
        let p = positions[i];
        let toward = (step_axis(p.0, true), step_axis(p.1, true));
        let away = (step_axis(p.0, false), step_axis(p.1, false));
        let free = |q: (i64, i64), positions: &[(i64, i64)]| {
            !is_block_center(q) && !positions.contains(&q)
        };
        if free(toward, &positions) {
            positions[i] = toward;
        } else if free(away, &positions) {
            positions[i] = away;
        }
        // Otherwise the sensor stays put; reject below if it still collides.
    }
    if positions.iter().any(|&p| is_block_center(p)) {
        return Err(GeometryError::UnsupportedCount { coarse_count, n });
    }
    let coarse: Vec<Point> = positions.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();

    // Fine sensors: edge midpoints in bottom/left/right/top order.
    let mut fine = BTreeMap::new();
    for b in 0..grid.block_count() {
        let (x0, y0, x1, y1) = grid.block_rect(b);
        let cx = (x0 + x1) / 2.0;
        let cy = (y0 + y1) / 2.0;
        fine.insert(
            b,
            [Point::new(cx, y0), Point::new(x0, cy), Point::new(x1, cy), Point::new(cx, y1)],
        );
    }
    Ok(SensorLayout { coarse, fine })
}

/// A transmitter position with its derived cell and block indices.
///
/// Invariants: inside the area, and at least 5 m from every sensor in the
/// layout used to sense it (guaranteed by [`sample_tx`] for the layout it
/// was given).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TxLocation {
    /// East coordinate in meters.
    pub x: f64,
    /// North coordinate in meters.
    pub y: f64,
    /// Row-major cell index.
    pub cell_id: usize,
    /// Row-major block index.
    pub block_id: usize,
}

impl TxLocation {
    /// Position as a point.
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Places a transmitter in cell `cell_id`.
///
/// Discrete setting: exactly the cell center (deployment keeps sensors on
/// the cell-corner lattice, ≥ √50 m from every cell center, so no check is
/// needed). Continuous setting: uniform inside the cell, rejection-resampled
/// until the point is at least 5 m from every sensor in `layout`; pass the
/// layout of sensors that will actually sense this transmitter.
///
/// Returns `OutOfRange` for an invalid cell and `ExhaustedRejection` when
/// 10,000 attempts find no admissible point (a geometrically infeasible
/// cell for this layout).
pub fn sample_tx(
    grid: &GridGeometry,
    cell_id: usize,
    setting: Setting,
    rng: &mut Rng,
    layout: &SensorLayout,
) -> Result<TxLocation, GeometryError> {
    if cell_id >= grid.cell_count() {
        return Err(GeometryError::OutOfRange { got: cell_id, min: 0, max: grid.cell_count() - 1 });
    }
    let block_id = grid.block_of_cell(cell_id);
    match setting {
        Setting::Discrete => {
            let c = grid.cell_center(cell_id);
            Ok(TxLocation { x: c.x, y: c.y, cell_id, block_id })
        }
        Setting::Continuous => {
            let (x0, y0, x1, y1) = grid.cell_rect(cell_id);
            for _ in 0..MAX_REJECTION_ATTEMPTS {
                let p = Point::new(rng.uniform_range(x0, x1), rng.uniform_range(y0, y1));
                if layout.all_sensors().all(|s| p.distance(&s) >= MIN_SEPARATION_M) {
                    debug_assert_eq!(grid.cell_of(p), cell_id);
                    return Ok(TxLocation { x: p.x, y: p.y, cell_id, block_id });
                }
            }
            Err(GeometryError::ExhaustedRejection { cell_id, attempts: MAX_REJECTION_ATTEMPTS })
        }
    }
}
