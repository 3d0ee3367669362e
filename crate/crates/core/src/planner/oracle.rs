//! Plain uniform-cost search used to check planner optimality.

use alloc::collections::BinaryHeap;
use alloc::vec;
use core::cmp::{Ordering, Reverse};

use super::{out_edges, PlanError};
use crate::agents::AgentProfile;
use crate::terrain::{CellIndex, ElevationGrid};

#[derive(PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Optimal traversal time from `start` to `goal` by Dijkstra's algorithm over
/// the same edges and weights the planner uses, without any heuristic.
pub fn dijkstra_oracle(
    grid: &ElevationGrid,
    profile: &AgentProfile,
    start: CellIndex,
    goal: CellIndex,
) -> Result<f64, PlanError> {
    for c in [start, goal] {
        if !grid.is_traversable(c) {
            return Err(PlanError::Untraversable(c));
        }
    }
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut settled = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    dist[grid.flat_index(start)] = 0.0;
    heap.push(Reverse((Cost(0.0), grid.flat_index(start))));
    while let Some(Reverse((Cost(d), i))) = heap.pop() {
        if settled[i] {
            continue;
        }
        settled[i] = true;
        let cell = grid.cell_of(i);
        if cell == goal {
            return Ok(d);
        }
        for (n, e) in out_edges(grid, profile, cell) {
            let j = grid.flat_index(n);
            let nd = d + e.seconds;
            if !settled[j] && nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse((Cost(nd), j)));
            }
        }
    }
    Err(PlanError::NoPath {
        start,
        goal,
        profile: profile.name.clone(),
    })
}
