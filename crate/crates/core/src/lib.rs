//! Terrain-aware multi-agent navigation.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation: elevation grids with slope and visibility queries, agent
//! mobility laws, the global least-cost planner, tabular Q-learning for local
//! obstacle bypass and the discrete-time simulation kernel. File formats, the
//! scenario runner and the command-line interface live in the `terramob`
//! companion crate.
//!
//! Enable the `std` feature to have planner wall-clock timings measured, and
//! the `serde` feature to derive `Serialize`/`Deserialize` for the domain types.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agents;
pub mod local_adapt;
pub(crate) mod math;
pub mod planner;
pub mod sim;
pub mod terrain;

pub use agents::{AgentProfile, AgentRole, SlopeMode, SpeedLaw, SpeedResult};
pub use planner::{astar, dijkstra_oracle, CostMode, PathPlan, PlanError, SearchStats};
pub use terrain::{Action, CellIndex, Direction, ElevationGrid, SlopeSample, TerrainError};
