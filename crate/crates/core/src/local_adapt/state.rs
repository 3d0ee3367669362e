use crate::planner::PathPlan;
use crate::terrain::{CellIndex, Direction, ElevationGrid};

/// Number of distinct local states: 2^8 occupancy patterns x 8 waypoint
/// directions x 4 deviation buckets.
pub const STATE_COUNT: usize = 256 * 8 * 4;

/// Discretized local navigation context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalState {
    /// Bit `d.index()` is set when the neighbor in direction `d` is occupied
    /// by an obstacle or another agent.
    pub occupancy: u8,
    /// Compass bucket toward the tracked plan waypoint.
    pub waypoint_dir: Direction,
    /// Cells off the plan, saturated at 3.
    pub deviation_bucket: u8,
}

impl LocalState {
    pub fn new(occupancy: u8, waypoint_dir: Direction, deviation_cells: usize) -> Self {
        Self {
            occupancy,
            waypoint_dir,
            deviation_bucket: deviation_cells.min(3) as u8,
        }
    }

    pub fn code(&self) -> usize {
        self.occupancy as usize
            | (self.waypoint_dir.index() << 8)
            | ((self.deviation_bucket.min(3) as usize) << 11)
    }

    pub fn from_code(code: usize) -> Option<Self> {
        if code >= STATE_COUNT {
            return None;
        }
        Some(Self {
            occupancy: (code & 0xff) as u8,
            waypoint_dir: Direction::from_index((code >> 8) & 7)?,
            deviation_bucket: (code >> 11) as u8,
        })
    }

    pub fn is_occupied(&self, d: Direction) -> bool {
        self.occupancy & (1 << d.index()) != 0
    }
}

/// Distance in cells (king moves) from `at` to the nearest plan waypoint at
/// or after `waypoint_index`.
pub fn deviation(plan: &PathPlan, waypoint_index: usize, at: CellIndex) -> usize {
    plan.waypoints[waypoint_index.min(plan.len() - 1)..]
        .iter()
        .map(|w| w.chebyshev(at))
        .min()
        .unwrap_or(0)
}

/// Index of the waypoint an agent steers toward while its next plan step is
/// obstructed: the first waypoint past `waypoint_index + 1` that is free, or
/// `waypoint_index + 1` itself when it is free.
pub fn rejoin_target(
    plan: &PathPlan,
    waypoint_index: usize,
    occupied: &impl Fn(CellIndex) -> bool,
) -> usize {
    let last = plan.len() - 1;
    ((waypoint_index + 1).min(last)..=last)
        .find(|&k| !occupied(plan.waypoints[k]))
        .unwrap_or(last)
}

/// Encode the local state of an agent at `at`.
pub fn observe(
    grid: &ElevationGrid,
    occupied: &impl Fn(CellIndex) -> bool,
    at: CellIndex,
    plan: &PathPlan,
    waypoint_index: usize,
) -> LocalState {
    let mut occupancy = 0u8;
    for d in Direction::ALL {
        if let Some(n) = grid.step(at, d) {
            if occupied(n) {
                occupancy |= 1 << d.index();
            }
        }
    }
    let target = plan.waypoints[rejoin_target(plan, waypoint_index, occupied)];
    let dir = Direction::bucket(
        target.row as isize - at.row as isize,
        target.col as isize - at.col as isize,
    );
    LocalState::new(occupancy, dir, deviation(plan, waypoint_index, at))
}
