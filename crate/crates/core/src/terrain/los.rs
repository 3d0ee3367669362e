//! Line of sight over cell centers.
//!
//! The sight line runs from the observer's eye above the center of the first
//! cell to the target point above the center of the second. Every cell whose
//! closed square touches the segment in plan view (the supercover of the
//! segment) is tested: its terrain must not rise above the sight line's height
//! at the projection of the cell center. Nodata cells along the way block the
//! view. No earth curvature or refraction correction is applied.

use alloc::vec;
use alloc::vec::Vec;

use super::{CellIndex, ElevationGrid};

/// Eye height of a standing adult, meters.
pub const DEFAULT_EYE_HEIGHT: f64 = 1.7;

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

/// Visit every in-bounds cell whose closed square intersects the segment
/// between the centers of `a` and `b` (both included). Exact integer
/// arithmetic, so the visited set does not depend on the endpoint order.
pub(crate) fn supercover(
    grid: &ElevationGrid,
    a: CellIndex,
    b: CellIndex,
    mut visit: impl FnMut(CellIndex) -> bool,
) -> bool {
    let (mut xa, mut ya) = (a.col as i64, a.row as i64);
    let (mut xb, mut yb) = (b.col as i64, b.row as i64);
    if xa > xb {
        core::mem::swap(&mut xa, &mut xb);
        core::mem::swap(&mut ya, &mut yb);
    }
    let nrows = grid.nrows() as i64;
    let dx = xb - xa;
    let dy = yb - ya;
    if dx == 0 {
        for r in ya.min(yb)..=ya.max(yb) {
            if !visit(CellIndex::new(r as usize, xa as usize)) {
                return false;
            }
        }
        return true;
    }
    for c in xa..=xb {
        // doubled x coordinates of the segment part inside column c
        let x_lo = (2 * c - 1).max(2 * xa);
        let x_hi = (2 * c + 1).min(2 * xb);
        // 2 * y * dx at both ends
        let n_lo = 2 * ya * dx + (x_lo - 2 * xa) * dy;
        let n_hi = 2 * ya * dx + (x_hi - 2 * xa) * dy;
        let (y_min, y_max) = if n_lo <= n_hi { (n_lo, n_hi) } else { (n_hi, n_lo) };
        let r_min = ceil_div(y_min - dx, 2 * dx).max(0);
        let r_max = floor_div(y_max + dx, 2 * dx).min(nrows - 1);
        for r in r_min..=r_max {
            if !visit(CellIndex::new(r as usize, c as usize)) {
                return false;
            }
        }
    }
    true
}

/// Whether a target `target_height` above `b` is visible from an eye
/// `observer_height` above `a`.
///
/// Symmetric in `a` and `b` whenever the two heights are equal. Returns
/// `false` if either endpoint is nodata or out of bounds.
pub fn line_of_sight(
    grid: &ElevationGrid,
    a: CellIndex,
    b: CellIndex,
    observer_height: f64,
    target_height: f64,
) -> bool {
    let (Some(ea), Some(eb)) = (grid.elevation(a), grid.elevation(b)) else {
        return false;
    };
    if a == b {
        return true;
    }
    // canonical order keeps the interpolation arithmetic identical both ways
    let (p, q, zp, zq) = if a <= b {
        (a, b, ea + observer_height, eb + target_height)
    } else {
        (b, a, eb + target_height, ea + observer_height)
    };
    let vx = q.col as i64 - p.col as i64;
    let vy = q.row as i64 - p.row as i64;
    let len2 = (vx * vx + vy * vy) as f64;
    supercover(grid, p, q, |c| {
        if c == p || c == q {
            return true;
        }
        let Some(ground) = grid.elevation(c) else {
            return false;
        };
        let wx = c.col as i64 - p.col as i64;
        let wy = c.row as i64 - p.row as i64;
        let t = ((wx * vx + wy * vy) as f64 / len2).clamp(0.0, 1.0);
        let sight = zp + t * (zq - zp);
        ground <= sight
    })
}

/// Visibility mask (row-major, `nrows * ncols`) of every cell whose center
/// lies within `radius` meters of the origin's center.
pub fn viewshed(
    grid: &ElevationGrid,
    origin: CellIndex,
    radius: f64,
    observer_height: f64,
    target_height: f64,
) -> Vec<bool> {
    let mut mask = vec![false; grid.len()];
    if !grid.is_traversable(origin) || !(radius > 0.0) {
        return mask;
    }
    let reach = ((radius / grid.cellsize()) as usize).saturating_add(1);
    let r0 = origin.row.saturating_sub(reach);
    let r1 = origin.row.saturating_add(reach).min(grid.nrows() - 1);
    let c0 = origin.col.saturating_sub(reach);
    let c1 = origin.col.saturating_add(reach).min(grid.ncols() - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let cell = CellIndex::new(r, c);
            if grid.distance(origin, cell) <= radius {
                mask[grid.flat_index(cell)] =
                    line_of_sight(grid, origin, cell, observer_height, target_height);
            }
        }
    }
    mask
}
