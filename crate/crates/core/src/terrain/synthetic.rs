//! Deterministic synthetic terrains used as desk-scale stand-ins for real DEMs.

use alloc::vec;

use super::{CellIndex, ElevationGrid, TerrainError};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Axis {
    /// Elevation increases eastward (with column).
    X,
    /// Elevation increases northward (against row).
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Recipe {
    Flat {
        height: f64,
    },
    Ramp {
        slope_percent: f64,
        axis: Axis,
    },
    /// North-south ridge line at column `position`, falling linearly to zero
    /// `half_width` cells either side.
    Ridge {
        height: f64,
        position: usize,
        half_width: f64,
    },
    /// Cone centered on the grid with the given peak height and base radius
    /// in meters.
    Cone {
        peak: f64,
        radius: f64,
    },
    /// Two routes between a start and goal at different elevations, walled in
    /// by nodata: a short straight corridor climbing at `steep` percent and a
    /// long U-shaped detour climbing at no more than `gentle` percent. The
    /// short corridor has `ncols - 1` steps; the number of rows is derived.
    TwoCorridor {
        gentle: f64,
        steep: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub grid: ElevationGrid,
    /// Designated start marker (two-corridor recipe only).
    pub start: Option<CellIndex>,
    /// Designated goal marker (two-corridor recipe only).
    pub goal: Option<CellIndex>,
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

pub fn make_synthetic(
    recipe: Recipe,
    nrows: usize,
    ncols: usize,
    cellsize: f64,
) -> Result<Synthetic, TerrainError> {
    if !(cellsize > 0.0 && cellsize.is_finite()) {
        return Err(TerrainError::BadCellsize(cellsize));
    }
    let plain = |grid| Synthetic {
        grid,
        start: None,
        goal: None,
    };
    match recipe {
        Recipe::Flat { height } => {
            if !height.is_finite() {
                return Err(TerrainError::Recipe("flat height must be finite"));
            }
            ElevationGrid::from_fn(nrows, ncols, cellsize, |_, _| height).map(plain)
        }
        Recipe::Ramp {
            slope_percent,
            axis,
        } => {
            if !finite_nonneg(slope_percent) {
                return Err(TerrainError::Recipe("ramp slope must be finite and >= 0"));
            }
            let step = slope_percent / 100.0 * cellsize;
            ElevationGrid::from_fn(nrows, ncols, cellsize, |r, c| match axis {
                Axis::X => step * c as f64,
                Axis::Y => step * (nrows - 1 - r) as f64,
            })
            .map(plain)
        }
        Recipe::Ridge {
            height,
            position,
            half_width,
        } => {
            if !finite_nonneg(height) {
                return Err(TerrainError::Recipe("ridge height must be finite and >= 0"));
            }
            if !(half_width > 0.0 && half_width.is_finite()) {
                return Err(TerrainError::Recipe("ridge half_width must be positive"));
            }
            if position >= ncols {
                return Err(TerrainError::Recipe("ridge position outside the grid"));
            }
            ElevationGrid::from_fn(nrows, ncols, cellsize, |_, c| {
                let off = (c as f64 - position as f64).abs();
                height * (1.0 - off / half_width).max(0.0)
            })
            .map(plain)
        }
        Recipe::Cone { peak, radius } => {
            if !finite_nonneg(peak) {
                return Err(TerrainError::Recipe("cone peak must be finite and >= 0"));
            }
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(TerrainError::Recipe("cone radius must be positive"));
            }
            let cr = (nrows / 2) as f64;
            let cc = (ncols / 2) as f64;
            ElevationGrid::from_fn(nrows, ncols, cellsize, |r, c| {
                let d = math::hypot(r as f64 - cr, c as f64 - cc) * cellsize;
                peak * (1.0 - d / radius).max(0.0)
            })
            .map(plain)
        }
        Recipe::TwoCorridor { gentle, steep } => two_corridor(gentle, steep, ncols, cellsize),
    }
}

fn two_corridor(
    gentle: f64,
    steep: f64,
    ncols: usize,
    cellsize: f64,
) -> Result<Synthetic, TerrainError> {
    if !(gentle > 0.0 && gentle.is_finite() && steep.is_finite()) {
        return Err(TerrainError::Recipe("corridor slopes must be positive"));
    }
    if gentle >= steep {
        return Err(TerrainError::Recipe("gentle slope must be below steep slope"));
    }
    if ncols < 3 {
        return Err(TerrainError::Recipe("two_corridor needs at least 3 columns"));
    }
    let length = ncols - 1;
    // the detour's vertical legs are `legs` cells long each
    let legs = math::ceil(length as f64 * (steep / gentle - 1.0) / 2.0 - 1e-9).max(1.0) as usize;
    let nrows = legs + 1;
    let climb = steep / 100.0 * cellsize * length as f64;
    let detour = (2 * legs + length) as f64;

    let nodata = ElevationGrid::DEFAULT_NODATA;
    let mut values = vec![nodata; nrows * ncols];
    let mut put = |r: usize, c: usize, v: f64| values[r * ncols + c] = v;
    // short corridor along the bottom row
    for j in 0..=length {
        put(legs, j, steep / 100.0 * cellsize * j as f64);
    }
    // long corridor: up the west column, along the top row, down the east column
    let along = |d: usize| climb * d as f64 / detour;
    for i in 1..=legs {
        put(legs - i, 0, along(i));
    }
    for j in 1..=length {
        put(0, j, along(legs + j));
    }
    for i in 1..legs {
        put(i, length, along(legs + length + i));
    }
    let grid = ElevationGrid::new(ncols, nrows, 0.0, 0.0, cellsize, nodata, values)?;
    Ok(Synthetic {
        grid,
        start: Some(CellIndex::new(legs, 0)),
        goal: Some(CellIndex::new(legs, length)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_recipe() {
        let s = make_synthetic(Recipe::Flat { height: 100.0 }, 10, 10, 30.0).unwrap();
        assert!(s.grid.values().iter().all(|&v| v == 100.0));
        assert_eq!(s.grid.len(), 100);
    }

    #[test]
    fn ramp_recipe_step() {
        let s = make_synthetic(
            Recipe::Ramp {
                slope_percent: 15.0,
                axis: Axis::X,
            },
            4,
            6,
            30.0,
        )
        .unwrap();
        let g = &s.grid;
        for c in 0..5 {
            let d = g.raw(CellIndex::new(2, c + 1)) - g.raw(CellIndex::new(2, c));
            assert!((d - 4.5).abs() < 1e-9);
        }
    }

    #[test]
    fn two_corridor_layout() {
        let s = make_synthetic(
            Recipe::TwoCorridor {
                gentle: 10.0,
                steep: 25.0,
            },
            0,
            9,
            30.0,
        )
        .unwrap();
        assert_eq!(s.grid.nrows(), 7);
        assert_eq!(s.start, Some(CellIndex::new(6, 0)));
        assert_eq!(s.goal, Some(CellIndex::new(6, 8)));
        assert_eq!(s.grid.elevation(CellIndex::new(6, 8)), Some(60.0));
        assert_eq!(s.grid.elevation(CellIndex::new(3, 4)), None);
    }

    #[test]
    fn recipe_ranges() {
        assert!(make_synthetic(Recipe::Flat { height: f64::NAN }, 2, 2, 30.0).is_err());
        assert!(make_synthetic(
            Recipe::TwoCorridor {
                gentle: 25.0,
                steep: 10.0
            },
            0,
            9,
            30.0
        )
        .is_err());
        assert!(make_synthetic(
            Recipe::Ridge {
                height: 10.0,
                position: 20,
                half_width: 2.0
            },
            4,
            4,
            30.0
        )
        .is_err());
        assert!(make_synthetic(Recipe::Cone { peak: 10.0, radius: 0.0 }, 4, 4, 30.0).is_err());
    }
}
