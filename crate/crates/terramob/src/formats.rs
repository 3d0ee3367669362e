//! Text formats: plans, traces, learning curves, Q-tables and visibility
//! rasters. Every writer produces LF line endings and shortest round-trip
//! float text, so output is byte-stable for identical input.

use std::fmt::Write as _;

use terramob_core::local_adapt::{EpisodeRecord, QTable, TableMeta, STATE_COUNT};
use terramob_core::sim::TraceRecord;
use terramob_core::terrain::{Action, ElevationGrid};
use terramob_core::PathPlan;
use thiserror::Error;

pub const QTABLE_MAGIC: &str = "# terramob-qtable v1";
const QTABLE_ENCODING: &str = "occupancy8xdirection8xdeviation4";

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

fn ferr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError {
        line,
        msg: msg.into(),
    }
}

pub fn plan_csv(grid: &ElevationGrid, plan: &PathPlan) -> String {
    let mut out = String::from("index,row,col,easting,northing,elevation,edge_time_s,cum_time_s\n");
    let mut cum = 0.0;
    for (i, c) in plan.waypoints.iter().enumerate() {
        let edge = if i == 0 { 0.0 } else { plan.edge_times[i - 1] };
        cum += edge;
        let (x, y) = grid.center(*c);
        let _ = writeln!(
            out,
            "{i},{},{},{x},{y},{},{edge},{cum}",
            c.row,
            c.col,
            grid.raw(*c)
        );
    }
    out
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from(
        "t_s,row,col,easting,northing,elevation_m,mode,chi,action,speed_mps,d_t_cells,effort\n",
    );
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.cell.row,
            r.cell.col,
            r.easting,
            r.northing,
            r.elevation,
            r.mode.as_str(),
            u8::from(r.chi),
            r.action.map_or("", Action::as_str),
            r.speed,
            r.deviation,
            r.effort
        );
    }
    out
}

pub fn curve_csv(curve: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,return,success,steps\n");
    for r in curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.episode,
            r.ret,
            u8::from(r.success),
            r.steps
        );
    }
    out
}

pub fn write_qtable(q: &QTable) -> String {
    let m = q.meta;
    let mut out = String::new();
    let _ = writeln!(out, "{QTABLE_MAGIC}");
    let _ = writeln!(
        out,
        "states {STATE_COUNT} actions {} encoding {QTABLE_ENCODING}",
        Action::COUNT
    );
    let _ = writeln!(out, "gamma {}", m.gamma);
    let _ = writeln!(out, "alpha {}", m.alpha);
    let _ = writeln!(out, "seed {}", m.seed);
    let _ = writeln!(out, "episodes {}", m.episodes);
    for (s, a, v) in q.nonzero() {
        let _ = writeln!(out, "{s} {a} {v}");
    }
    out
}

pub fn parse_qtable(text: &str) -> Result<QTable, FormatError> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| ferr(0, format!("truncated file, expected {what}")))
    };
    let (_, magic) = next("header")?;
    if magic.trim() != QTABLE_MAGIC {
        return Err(ferr(1, "not a terramob Q-table (bad magic line)"));
    }
    let (_, shape) = next("state-space line")?;
    let want = format!("states {STATE_COUNT} actions {} encoding {QTABLE_ENCODING}", Action::COUNT);
    if shape.split_whitespace().collect::<Vec<_>>().join(" ") != want {
        return Err(ferr(2, format!("state space mismatch, expected `{want}`")));
    }
    let mut field = |key: &str, line: usize| -> Result<String, FormatError> {
        let (_, l) = next(key)?;
        let mut it = l.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
            _ => Err(ferr(line, format!("expected `{key} <value>`"))),
        }
    };
    let num = |s: String, line: usize| s.parse::<f64>().map_err(|_| ferr(line, "bad number"));
    let gamma = num(field("gamma", 3)?, 3)?;
    let alpha = num(field("alpha", 4)?, 4)?;
    let seed = field("seed", 5)?.parse::<u64>().map_err(|_| ferr(5, "bad seed"))?;
    let episodes = field("episodes", 6)?
        .parse::<usize>()
        .map_err(|_| ferr(6, "bad episode count"))?;
    let mut q = QTable::new();
    q.meta = TableMeta {
        gamma,
        alpha,
        seed,
        episodes,
    };
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(s), Some(a), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(ferr(n, "expected `state action value`"));
        };
        let s = s.parse::<usize>().map_err(|_| ferr(n, "bad state code"))?;
        let a = a.parse::<usize>().map_err(|_| ferr(n, "bad action code"))?;
        let v = v
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ferr(n, "bad value"))?;
        if !q.set_raw(s, a, v) {
            return Err(ferr(n, "state or action code out of range"));
        }
    }
    Ok(q)
}

/// Plain PGM (P2): visible cells white, hidden cells black.
pub fn mask_pgm(grid: &ElevationGrid, mask: &[bool]) -> String {
    let mut out = format!("P2\n{} {}\n255\n", grid.ncols(), grid.nrows());
    for row in mask.chunks(grid.ncols()) {
        let line: Vec<&str> = row.iter().map(|&v| if v { "255" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn mask_csv(grid: &ElevationGrid, mask: &[bool]) -> String {
    let mut out = String::from("row,col,visible\n");
    for (i, &v) in mask.iter().enumerate() {
        let c = grid.cell_of(i);
        let _ = writeln!(out, "{},{},{}", c.row, c.col, u8::from(v));
    }
    out
}
