//! Global least-cost routing over the terrain grid.
//!
//! Edge weights are traversal times from the profile's speed law, so plans are
//! time-optimal. Nodes are expanded in order of `f = g + h` where `h` is the
//! octile distance divided by the profile's flat speed. Among equal `f` the
//! deeper node (larger `g`) is expanded first, then the lexicographically
//! smaller `(row, col)`, which makes plans reproducible.

mod oracle;

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::agents::{traversal_time, AgentProfile, EdgeTraversal};
use crate::terrain::{Action, CellIndex, Direction, ElevationGrid, TerrainError};

pub use oracle::dijkstra_oracle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no path from {start} to {goal} for `{profile}`")]
    NoPath {
        start: CellIndex,
        goal: CellIndex,
        profile: String,
    },
    #[error("endpoint {0} is outside the grid or holds nodata")]
    Untraversable(CellIndex),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
}

/// What the search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CostMode {
    /// Traversal seconds.
    #[default]
    Time,
    /// Horizontal meters, still honoring the profile's impassable slopes.
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    pub waypoints: Vec<CellIndex>,
    /// Seconds for each consecutive waypoint pair.
    pub edge_times: Vec<f64>,
    /// Horizontal meters for each consecutive waypoint pair.
    pub edge_runs: Vec<f64>,
    pub total_time: f64,
    pub total_distance: f64,
    pub profile_name: String,
}

impl PathPlan {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn start(&self) -> CellIndex {
        self.waypoints[0]
    }

    pub fn goal(&self) -> CellIndex {
        *self.waypoints.last().expect("plan has at least one waypoint")
    }

    /// Build a plan from a cell sequence, pricing every edge with the profile.
    /// Returns `None` if consecutive cells are not passable neighbors.
    pub fn from_cells(
        grid: &ElevationGrid,
        profile: &AgentProfile,
        waypoints: Vec<CellIndex>,
    ) -> Option<PathPlan> {
        let mut edge_times = Vec::with_capacity(waypoints.len().saturating_sub(1));
        let mut edge_runs = Vec::with_capacity(edge_times.capacity());
        let mut total_time = 0.0;
        let mut total_distance = 0.0;
        for pair in waypoints.windows(2) {
            let e = edge(grid, profile, pair[0], pair[1])?;
            total_time += e.seconds;
            total_distance += e.run;
            edge_times.push(e.seconds);
            edge_runs.push(e.run);
        }
        Some(PathPlan {
            waypoints,
            edge_times,
            edge_runs,
            total_time,
            total_distance,
            profile_name: profile.name.clone(),
        })
    }

    /// Position of `cell` in the plan at or after `from`, if any.
    pub fn position_from(&self, cell: CellIndex, from: usize) -> Option<usize> {
        self.waypoints
            .iter()
            .skip(from)
            .position(|&w| w == cell)
            .map(|i| i + from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub open_peak: usize,
    /// Wall-clock seconds; measured only with the `std` feature, zero otherwise.
    pub wall_time: f64,
}

/// A grid edge as used by every search in this module: the destination must
/// be reachable under the corner-cutting rule and the slope must be passable.
pub fn edge(
    grid: &ElevationGrid,
    profile: &AgentProfile,
    from: CellIndex,
    to: CellIndex,
) -> Option<EdgeTraversal> {
    let d = from.direction_to(to)?;
    grid.move_allowed(from, d)?;
    traversal_time(profile, grid, from, to).ok().flatten()
}

pub(crate) fn out_edges<'a>(
    grid: &'a ElevationGrid,
    profile: &'a AgentProfile,
    from: CellIndex,
) -> impl Iterator<Item = (CellIndex, EdgeTraversal)> + 'a {
    grid.neighbor_moves(from).filter_map(move |(_, n)| {
        traversal_time(profile, grid, from, n)
            .ok()
            .flatten()
            .map(|e| (n, e))
    })
}

/// Admissible estimate of the remaining traversal time: octile distance over
/// the flat-ground speed, which no edge can beat.
pub fn heuristic(c: CellIndex, goal: CellIndex, profile: &AgentProfile, cellsize: f64) -> f64 {
    c.octile(goal) * cellsize / profile.s_flat
}

struct Open {
    f: f64,
    g: f64,
    cell: CellIndex,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // BinaryHeap pops the maximum: smallest f, then largest g, then smallest cell
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.cell.cmp(&self.cell))
    }
}

const NO_PARENT: usize = usize::MAX;

/// Time-optimal A* plan.
pub fn astar(
    grid: &ElevationGrid,
    profile: &AgentProfile,
    start: CellIndex,
    goal: CellIndex,
) -> Result<(PathPlan, SearchStats), PlanError> {
    astar_with(grid, profile, start, goal, CostMode::Time)
}

pub fn astar_with(
    grid: &ElevationGrid,
    profile: &AgentProfile,
    start: CellIndex,
    goal: CellIndex,
    mode: CostMode,
) -> Result<(PathPlan, SearchStats), PlanError> {
    #[cfg(feature = "std")]
    let clock = std::time::Instant::now();

    for c in [start, goal] {
        if !grid.is_traversable(c) {
            return Err(PlanError::Untraversable(c));
        }
    }
    let h = |c: CellIndex| match mode {
        CostMode::Time => heuristic(c, goal, profile, grid.cellsize()),
        CostMode::Distance => c.octile(goal) * grid.cellsize(),
    };
    let mut g_best = vec![f64::INFINITY; grid.len()];
    let mut parent = vec![NO_PARENT; grid.len()];
    let mut heap = BinaryHeap::new();
    let mut stats = SearchStats::default();

    g_best[grid.flat_index(start)] = 0.0;
    heap.push(Open {
        f: h(start),
        g: 0.0,
        cell: start,
    });
    stats.open_peak = 1;

    let mut found = false;
    while let Some(Open { g, cell, .. }) = heap.pop() {
        let i = grid.flat_index(cell);
        if g > g_best[i] {
            continue;
        }
        stats.nodes_expanded += 1;
        if cell == goal {
            found = true;
            break;
        }
        for (n, e) in out_edges(grid, profile, cell) {
            let w = match mode {
                CostMode::Time => e.seconds,
                CostMode::Distance => e.run,
            };
            let ng = g + w;
            let j = grid.flat_index(n);
            if ng < g_best[j] {
                g_best[j] = ng;
                parent[j] = i;
                heap.push(Open {
                    f: ng + h(n),
                    g: ng,
                    cell: n,
                });
            }
        }
        stats.open_peak = stats.open_peak.max(heap.len());
    }
    if !found {
        return Err(PlanError::NoPath {
            start,
            goal,
            profile: profile.name.clone(),
        });
    }

    let mut cells = vec![goal];
    let mut i = grid.flat_index(goal);
    while parent[i] != NO_PARENT {
        i = parent[i];
        cells.push(grid.cell_of(i));
    }
    cells.reverse();
    let plan = PathPlan::from_cells(grid, profile, cells).expect("search edges are passable");

    #[cfg(feature = "std")]
    {
        stats.wall_time = clock.elapsed().as_secs_f64();
    }
    Ok((plan, stats))
}

/// Traversal time of taking `action` from `at`, the per-step term of the
/// plan-following policy. `Stay` costs nothing; `None` marks a blocked move.
pub fn local_step_cost(
    grid: &ElevationGrid,
    profile: &AgentProfile,
    at: CellIndex,
    action: Action,
) -> Result<Option<f64>, TerrainError> {
    let Action::Move(d) = action else {
        return Ok(Some(0.0));
    };
    let to = grid.step(at, d).ok_or(TerrainError::OutOfBounds {
        row: at.row.wrapping_add_signed(d.offset().0),
        col: at.col.wrapping_add_signed(d.offset().1),
    })?;
    if grid.move_allowed(at, d).is_none() {
        return Ok(None);
    }
    Ok(traversal_time(profile, grid, at, to)?.map(|e| e.seconds))
}

/// Exact least traversal time to `target` from every cell of a square window
/// of the given radius around it, with paths confined to the window.
#[derive(Debug, Clone)]
pub struct LocalField {
    target: CellIndex,
    r0: usize,
    c0: usize,
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
}

impl LocalField {
    pub fn new(
        grid: &ElevationGrid,
        profile: &AgentProfile,
        target: CellIndex,
        radius: usize,
    ) -> LocalField {
        let r0 = target.row.saturating_sub(radius);
        let c0 = target.col.saturating_sub(radius);
        let r1 = (target.row + radius).min(grid.nrows() - 1);
        let c1 = (target.col + radius).min(grid.ncols() - 1);
        let rows = r1 - r0 + 1;
        let cols = c1 - c0 + 1;
        let mut field = LocalField {
            target,
            r0,
            c0,
            rows,
            cols,
            cost: vec![f64::INFINITY; rows * cols],
        };
        if !grid.is_traversable(target) {
            return field;
        }
        let mut done = vec![false; rows * cols];
        let mut heap = BinaryHeap::new();
        let ti = field.slot(target).expect("target inside its window");
        field.cost[ti] = 0.0;
        heap.push(Open {
            f: 0.0,
            g: 0.0,
            cell: target,
        });
        while let Some(Open { g, cell, .. }) = heap.pop() {
            let i = field.slot(cell).expect("queued cells are in the window");
            if done[i] {
                continue;
            }
            done[i] = true;
            // relax predecessors u with an edge u -> cell
            for d in Direction::ALL {
                let Some(u) = grid.step(cell, d) else {
                    continue;
                };
                let Some(j) = field.slot(u) else {
                    continue;
                };
                if done[j] {
                    continue;
                }
                let Some(e) = edge(grid, profile, u, cell) else {
                    continue;
                };
                let ng = g + e.seconds;
                if ng < field.cost[j] {
                    field.cost[j] = ng;
                    heap.push(Open {
                        f: ng,
                        g: ng,
                        cell: u,
                    });
                }
            }
        }
        field
    }

    fn slot(&self, c: CellIndex) -> Option<usize> {
        let r = c.row.checked_sub(self.r0)?;
        let k = c.col.checked_sub(self.c0)?;
        (r < self.rows && k < self.cols).then(|| r * self.cols + k)
    }

    pub fn target(&self) -> CellIndex {
        self.target
    }

    /// Cost-to-go, infinite outside the window or when unreachable.
    pub fn cost(&self, c: CellIndex) -> f64 {
        self.slot(c).map_or(f64::INFINITY, |i| self.cost[i])
    }
}
