#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use terramob_core::agents::AgentProfile;
use terramob_core::planner::edge;
use terramob_core::terrain::{CellIndex, Direction, ElevationGrid};

/// Rough random terrain with scattered nodata holes.
pub fn random_grid(seed: u64, n: usize, relief: f64, holes: f64) -> ElevationGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ElevationGrid::from_fn(n, n, 30.0, |_, _| rng.random::<f64>() * relief).unwrap();
    for c in g.cells().collect::<Vec<_>>() {
        if rng.random::<f64>() < holes {
            g.set_nodata(c);
        }
    }
    g
}

pub fn random_cell(rng: &mut impl Rng, g: &ElevationGrid) -> CellIndex {
    loop {
        let c = CellIndex::new(rng.random_range(0..g.nrows()), rng.random_range(0..g.ncols()));
        if g.is_traversable(c) {
            return c;
        }
    }
}

/// Exact cost-to-go to `goal` from every cell (infinite when unreachable),
/// by a quadratic-time Dijkstra over predecessor edges.
pub fn cost_to_go(g: &ElevationGrid, p: &AgentProfile, goal: CellIndex) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut done = vec![false; g.len()];
    dist[g.flat_index(goal)] = 0.0;
    loop {
        let mut best = None;
        for i in 0..g.len() {
            if !done[i] && dist[i].is_finite() && best.is_none_or(|b: usize| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        done[i] = true;
        let v = g.cell_of(i);
        for d in Direction::ALL {
            let Some(u) = g.step(v, d) else { continue };
            if let Some(e) = edge(g, p, u, v) {
                let j = g.flat_index(u);
                if dist[i] + e.seconds < dist[j] {
                    dist[j] = dist[i] + e.seconds;
                }
            }
        }
    }
    dist
}
