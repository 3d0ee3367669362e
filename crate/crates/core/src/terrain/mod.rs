//! Elevation rasters, slopes, adjacency and visibility.
//!
//! Grids are stored row-major with row 0 at the northern edge, matching the
//! ESRI ASCII grid layout. Cells holding the nodata sentinel are impassable and
//! opaque.

mod los;
mod synthetic;

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::math;

pub use los::{line_of_sight, viewshed, DEFAULT_EYE_HEIGHT};
pub use synthetic::{make_synthetic, Axis, Recipe, Synthetic};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TerrainError {
    #[error("grid dimensions must be positive (got {nrows}x{ncols})")]
    EmptyGrid { nrows: usize, ncols: usize },
    #[error("cellsize must be positive and finite (got {0})")]
    BadCellsize(f64),
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite elevation at index {0}")]
    NonFinite(usize),
    #[error("cell ({row}, {col}) is outside the grid")]
    OutOfBounds { row: usize, col: usize },
    #[error("cells {a} and {b} are not adjacent")]
    NotAdjacent { a: CellIndex, b: CellIndex },
    #[error("cell {0} holds nodata")]
    Nodata(CellIndex),
    #[error("invalid recipe: {0}")]
    Recipe(&'static str),
}

/// Row/column address of a grid cell. Ordering is lexicographic `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Chebyshev (king-move) distance in cells.
    pub fn chebyshev(self, other: CellIndex) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    /// Octile distance in cell units: diagonal steps cost `sqrt(2)`.
    pub fn octile(self, other: CellIndex) -> f64 {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        let (lo, hi) = if dr < dc { (dr, dc) } else { (dc, dr) };
        lo as f64 * core::f64::consts::SQRT_2 + (hi - lo) as f64
    }

    /// The direction of a single step from `self` to `other`, if they are
    /// 8-neighbors.
    pub fn direction_to(self, other: CellIndex) -> Option<Direction> {
        let dr = other.row as isize - self.row as isize;
        let dc = other.col as isize - self.col as isize;
        Direction::ALL
            .into_iter()
            .find(|d| d.offset() == (dr, dc))
    }

    pub fn is_adjacent(self, other: CellIndex) -> bool {
        self != other && self.chebyshev(other) == 1
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// The eight compass moves, in the order used for action indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    /// `(d_row, d_col)`; north is decreasing row.
    pub const fn offset(self) -> (isize, isize) {
        match self {
            Direction::N => (-1, 0),
            Direction::NE => (-1, 1),
            Direction::E => (0, 1),
            Direction::SE => (1, 1),
            Direction::S => (1, 0),
            Direction::SW => (1, -1),
            Direction::W => (0, -1),
            Direction::NW => (-1, -1),
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Direction::ALL.get(i).copied()
    }

    pub const fn is_diagonal(self) -> bool {
        matches!(
            self,
            Direction::NE | Direction::SE | Direction::SW | Direction::NW
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::NE => "NE",
            Direction::E => "E",
            Direction::SE => "SE",
            Direction::S => "S",
            Direction::SW => "SW",
            Direction::W => "W",
            Direction::NW => "NW",
        }
    }

    /// Bucket an arbitrary displacement into the nearest of the eight
    /// compass directions. A zero displacement maps to `N`.
    pub fn bucket(d_row: isize, d_col: isize) -> Direction {
        if d_row == 0 && d_col == 0 {
            return Direction::N;
        }
        // angle measured clockwise from north
        let angle = math::atan2(d_col as f64, -(d_row as f64));
        let sector = math::round(angle / core::f64::consts::FRAC_PI_4) as i64;
        Direction::ALL[sector.rem_euclid(8) as usize]
    }
}

/// One of the eight moves or staying in place. `Stay` has index 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Action {
    Move(Direction),
    Stay,
}

impl Action {
    pub const COUNT: usize = 9;

    pub const ALL: [Action; 9] = [
        Action::Move(Direction::N),
        Action::Move(Direction::NE),
        Action::Move(Direction::E),
        Action::Move(Direction::SE),
        Action::Move(Direction::S),
        Action::Move(Direction::SW),
        Action::Move(Direction::W),
        Action::Move(Direction::NW),
        Action::Stay,
    ];

    pub const fn index(self) -> usize {
        match self {
            Action::Move(d) => d.index(),
            Action::Stay => 8,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Move(d) => d.as_str(),
            Action::Stay => "STAY",
        }
    }
}

/// Rise over run between two adjacent cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeSample {
    /// `|rise| / run * 100`
    pub percent: f64,
    /// Signed elevation change from the first cell to the second, meters.
    pub rise: f64,
    /// Horizontal distance between cell centers, meters.
    pub run: f64,
}

/// A georeferenced elevation raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    ncols: usize,
    nrows: usize,
    xll: f64,
    yll: f64,
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
}

impl ElevationGrid {
    pub const DEFAULT_NODATA: f64 = -9999.0;

    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        if ncols == 0 || nrows == 0 {
            return Err(TerrainError::EmptyGrid { nrows, ncols });
        }
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(TerrainError::BadCellsize(cellsize));
        }
        let expected = ncols * nrows;
        if values.len() != expected {
            return Err(TerrainError::ValueCount {
                expected,
                got: values.len(),
            });
        }
        if let Some(i) = values
            .iter()
            .position(|&v| v != nodata && !v.is_finite())
        {
            return Err(TerrainError::NonFinite(i));
        }
        Ok(Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    /// A grid with the lower-left corner at the origin and every cell set by
    /// `f(row, col)`.
    pub fn from_fn(
        nrows: usize,
        ncols: usize,
        cellsize: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, TerrainError> {
        let mut values = Vec::with_capacity(nrows * ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                values.push(f(r, c));
            }
        }
        Self::new(ncols, nrows, 0.0, 0.0, cellsize, Self::DEFAULT_NODATA, values)
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn xll(&self) -> f64 {
        self.xll
    }

    pub fn yll(&self) -> f64 {
        self.yll
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn in_bounds(&self, c: CellIndex) -> bool {
        c.row < self.nrows && c.col < self.ncols
    }

    pub fn flat_index(&self, c: CellIndex) -> usize {
        c.row * self.ncols + c.col
    }

    pub fn cell_of(&self, flat: usize) -> CellIndex {
        CellIndex::new(flat / self.ncols, flat % self.ncols)
    }

    /// Raw stored value, which may be the nodata sentinel.
    pub fn raw(&self, c: CellIndex) -> f64 {
        self.values[self.flat_index(c)]
    }

    /// Elevation in meters, `None` for nodata or out-of-bounds cells.
    pub fn elevation(&self, c: CellIndex) -> Option<f64> {
        if !self.in_bounds(c) {
            return None;
        }
        let v = self.raw(c);
        (v != self.nodata).then_some(v)
    }

    pub fn is_traversable(&self, c: CellIndex) -> bool {
        self.elevation(c).is_some()
    }

    /// Mark a cell as nodata.
    pub fn set_nodata(&mut self, c: CellIndex) {
        let i = self.flat_index(c);
        self.values[i] = self.nodata;
    }

    pub fn set(&mut self, c: CellIndex, value: f64) {
        let i = self.flat_index(c);
        self.values[i] = value;
    }

    pub fn step(&self, c: CellIndex, d: Direction) -> Option<CellIndex> {
        let (dr, dc) = d.offset();
        let row = c.row.checked_add_signed(dr)?;
        let col = c.col.checked_add_signed(dc)?;
        let n = CellIndex::new(row, col);
        self.in_bounds(n).then_some(n)
    }

    /// Cell center as `(easting, northing)` in map units.
    pub fn center(&self, c: CellIndex) -> (f64, f64) {
        (
            self.xll + (c.col as f64 + 0.5) * self.cellsize,
            self.yll + (self.nrows as f64 - c.row as f64 - 0.5) * self.cellsize,
        )
    }

    /// The cell containing a map point, if inside the grid.
    pub fn cell_at(&self, easting: f64, northing: f64) -> Option<CellIndex> {
        let col = math::floor((easting - self.xll) / self.cellsize);
        let row_from_south = math::floor((northing - self.yll) / self.cellsize);
        if col < 0.0 || row_from_south < 0.0 {
            return None;
        }
        let (col, rfs) = (col as usize, row_from_south as usize);
        if col >= self.ncols || rfs >= self.nrows {
            return None;
        }
        Some(CellIndex::new(self.nrows - 1 - rfs, col))
    }

    /// Horizontal distance between adjacent cell centers.
    pub fn run(&self, d: Direction) -> f64 {
        if d.is_diagonal() {
            self.cellsize * core::f64::consts::SQRT_2
        } else {
            self.cellsize
        }
    }

    /// Slope between two 8-adjacent traversable cells.
    pub fn slope_percent(&self, a: CellIndex, b: CellIndex) -> Result<SlopeSample, TerrainError> {
        for c in [a, b] {
            if !self.in_bounds(c) {
                return Err(TerrainError::OutOfBounds {
                    row: c.row,
                    col: c.col,
                });
            }
        }
        let dir = a
            .direction_to(b)
            .ok_or(TerrainError::NotAdjacent { a, b })?;
        let ea = self.elevation(a).ok_or(TerrainError::Nodata(a))?;
        let eb = self.elevation(b).ok_or(TerrainError::Nodata(b))?;
        let rise = eb - ea;
        let run = self.run(dir);
        Ok(SlopeSample {
            percent: rise.abs() / run * 100.0,
            rise,
            run,
        })
    }

    /// Whether the move `c -> c + d` lands on a traversable cell without
    /// cutting a corner between two nodata cells.
    pub fn move_allowed(&self, c: CellIndex, d: Direction) -> Option<CellIndex> {
        let n = self.step(c, d)?;
        if !self.is_traversable(n) {
            return None;
        }
        if d.is_diagonal() {
            let (dr, dc) = d.offset();
            let side_a = CellIndex::new(c.row.wrapping_add_signed(dr), c.col);
            let side_b = CellIndex::new(c.row, c.col.wrapping_add_signed(dc));
            if !self.is_traversable(side_a) && !self.is_traversable(side_b) {
                return None;
            }
        }
        Some(n)
    }

    /// Traversable 8-neighbors of `c`, in [`Direction::ALL`] order.
    pub fn neighbors(&self, c: CellIndex) -> Vec<CellIndex> {
        self.neighbor_moves(c).map(|(_, n)| n).collect()
    }

    pub fn neighbor_moves(
        &self,
        c: CellIndex,
    ) -> impl Iterator<Item = (Direction, CellIndex)> + '_ {
        Direction::ALL
            .into_iter()
            .filter_map(move |d| self.move_allowed(c, d).map(|n| (d, n)))
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(|i| self.cell_of(i))
    }

    /// Euclidean distance between two cell centers in meters.
    pub fn distance(&self, a: CellIndex, b: CellIndex) -> f64 {
        let dr = a.row.abs_diff(b.row) as f64;
        let dc = a.col.abs_diff(b.col) as f64;
        math::hypot(dr, dc) * self.cellsize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(nrows: usize, ncols: usize, values: Vec<f64>) -> ElevationGrid {
        ElevationGrid::new(ncols, nrows, 0.0, 0.0, 30.0, -9999.0, values).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            ElevationGrid::new(2, 2, 0.0, 0.0, 0.0, -9999.0, vec![0.0; 4]),
            Err(TerrainError::BadCellsize(_))
        ));
        assert!(matches!(
            ElevationGrid::new(2, 2, 0.0, 0.0, 30.0, -9999.0, vec![0.0; 3]),
            Err(TerrainError::ValueCount { expected: 4, got: 3 })
        ));
        assert!(matches!(
            ElevationGrid::new(2, 1, 0.0, 0.0, 30.0, -9999.0, vec![0.0, f64::NAN]),
            Err(TerrainError::NonFinite(1))
        ));
    }

    #[test]
    fn row_major_with_row_zero_north() {
        let g = grid(3, 3, (0..9).map(f64::from).collect());
        assert_eq!(g.elevation(CellIndex::new(2, 0)), Some(6.0));
        // row 2 is the southernmost row
        let (_, n0) = g.center(CellIndex::new(0, 0));
        let (_, n2) = g.center(CellIndex::new(2, 0));
        assert!(n0 > n2);
        assert_eq!(g.cell_at(15.0, 15.0), Some(CellIndex::new(2, 0)));
        assert_eq!(g.cell_at(85.0, 85.0), Some(CellIndex::new(0, 2)));
        assert_eq!(g.cell_at(-1.0, 10.0), None);
    }

    #[test]
    fn slope_examples() {
        let g = grid(2, 2, vec![0.0, 4.5, 0.0, 0.0]);
        let flat = g
            .slope_percent(CellIndex::new(1, 0), CellIndex::new(1, 1))
            .unwrap();
        assert_eq!(flat.percent, 0.0);
        let orth = g
            .slope_percent(CellIndex::new(0, 0), CellIndex::new(0, 1))
            .unwrap();
        assert_eq!(orth.percent, 15.0);
        let diag = g
            .slope_percent(CellIndex::new(1, 0), CellIndex::new(0, 1))
            .unwrap();
        assert!((diag.percent - 10.606_601_717_798_213).abs() < 1e-9);
        assert!((diag.run - 30.0 * core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn slope_errors() {
        let mut g = grid(1, 3, vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            g.slope_percent(CellIndex::new(0, 0), CellIndex::new(0, 2)),
            Err(TerrainError::NotAdjacent { .. })
        ));
        assert!(matches!(
            g.slope_percent(CellIndex::new(0, 0), CellIndex::new(0, 0)),
            Err(TerrainError::NotAdjacent { .. })
        ));
        g.set_nodata(CellIndex::new(0, 1));
        assert!(matches!(
            g.slope_percent(CellIndex::new(0, 0), CellIndex::new(0, 1)),
            Err(TerrainError::Nodata(_))
        ));
    }

    #[test]
    fn neighbor_counts() {
        let g = grid(3, 3, vec![1.0; 9]);
        assert_eq!(g.neighbors(CellIndex::new(1, 1)).len(), 8);
        assert_eq!(g.neighbors(CellIndex::new(0, 0)).len(), 3);
    }

    #[test]
    fn corner_cut_excluded() {
        let mut g = grid(3, 3, vec![1.0; 9]);
        g.set_nodata(CellIndex::new(0, 1)); // N of center
        g.set_nodata(CellIndex::new(1, 2)); // E of center
        let n = g.neighbors(CellIndex::new(1, 1));
        assert!(!n.contains(&CellIndex::new(0, 2)));
        assert!(!n.contains(&CellIndex::new(0, 1)));
        assert_eq!(n.len(), 5);
        // only one blocked side: diagonal stays available
        let mut g = grid(3, 3, vec![1.0; 9]);
        g.set_nodata(CellIndex::new(0, 1));
        assert!(g
            .neighbors(CellIndex::new(1, 1))
            .contains(&CellIndex::new(0, 2)));
    }

    #[test]
    fn direction_buckets() {
        assert_eq!(Direction::bucket(-5, 0), Direction::N);
        assert_eq!(Direction::bucket(0, 3), Direction::E);
        assert_eq!(Direction::bucket(2, 2), Direction::SE);
        assert_eq!(Direction::bucket(1, -1), Direction::SW);
        assert_eq!(Direction::bucket(0, -7), Direction::W);
        assert_eq!(Direction::bucket(-4, -3), Direction::NW);
        assert_eq!(Direction::bucket(1, 5), Direction::E);
        for d in Direction::ALL {
            let (dr, dc) = d.offset();
            assert_eq!(Direction::bucket(dr, dc), d);
        }
    }

    #[test]
    fn octile_distance() {
        let a = CellIndex::new(0, 0);
        let b = CellIndex::new(3, 4);
        assert!((a.octile(b) - (3.0 * core::f64::consts::SQRT_2 + 1.0)).abs() < 1e-12);
        assert_eq!(a.chebyshev(b), 4);
    }
}
