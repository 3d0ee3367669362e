//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use terramob::asc::{parse_asc, write_asc};
use terramob::cli::{cmd_simulate, SimulateArgs};
use terramob_core::agents::{builtin_profiles, find_builtin, AgentProfile};
use terramob_core::local_adapt::{
    evaluate_bypass, train_bypass, ActionMask, CorridorEnv, LearningParams, LocalState, QTable,
    RewardWeights, STATE_COUNT,
};
use terramob_core::planner::{astar, dijkstra_oracle, edge, heuristic, PlanError};
use terramob_core::sim::{AgentMode, AgentSpec, Obstacle, PursuitRule, SimParams, World};
use terramob_core::terrain::{
    line_of_sight, make_synthetic, viewshed, Action, CellIndex, Direction, ElevationGrid, Recipe,
};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_grid(seed: u64, n: usize, relief: f64, holes: f64) -> ElevationGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ElevationGrid::from_fn(n, n, 30.0, |_, _| rng.random::<f64>() * relief).unwrap();
    for c in g.cells().collect::<Vec<_>>() {
        if rng.random::<f64>() < holes {
            g.set_nodata(c);
        }
    }
    g
}

fn random_cell(rng: &mut impl Rng, g: &ElevationGrid) -> CellIndex {
    loop {
        let c = CellIndex::new(rng.random_range(0..g.nrows()), rng.random_range(0..g.ncols()));
        if g.is_traversable(c) {
            return c;
        }
    }
}

/// Exact cost-to-go to `goal` from every cell by quadratic Dijkstra.
fn cost_to_go(g: &ElevationGrid, p: &AgentProfile, goal: CellIndex) -> Vec<f64> {
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
                dist[j] = dist[j].min(dist[i] + e.seconds);
            }
        }
    }
    dist
}

fn profile(name: &str) -> AgentProfile {
    find_builtin(name).unwrap()
}

fn spec(id: &str, name: &str, start: (usize, usize), goal: (usize, usize), table: Option<usize>) -> AgentSpec {
    AgentSpec {
        id: id.into(),
        profile: profile(name),
        start: CellIndex::new(start.0, start.1),
        goal: CellIndex::new(goal.0, goal.1),
        qtable: table,
    }
}

fn flat(rows: usize, cols: usize) -> ElevationGrid {
    make_synthetic(Recipe::Flat { height: 100.0 }, rows, cols, 30.0).unwrap().grid
}

fn trained() -> QTable {
    let env = CorridorEnv::new(profile("fit adults"));
    train_bypass(&env, &RewardWeights::default(), &LearningParams::default())
        .unwrap()
        .table
}

fn run(mut w: World) -> World {
    w.run();
    w
}

fn pursuit_flat() -> World {
    World::new(
        flat(11, 60),
        vec![
            spec("target", "elderly", (5, 20), (5, 59), None),
            spec("hostile", "hostile", (5, 0), (5, 20), None),
        ],
        vec![],
        vec![PursuitRule::new(1, 0)],
        vec![],
        SimParams::default(),
        3,
    )
    .unwrap()
}

fn pursuit_ridge() -> World {
    let g = make_synthetic(
        Recipe::Ridge {
            height: 30.0,
            position: 30,
            half_width: 10.0,
        },
        11,
        60,
        30.0,
    )
    .unwrap()
    .grid;
    World::new(
        g,
        vec![
            spec("target", "elderly", (5, 25), (5, 50), None),
            spec("hostile", "hostile", (5, 0), (5, 25), None),
        ],
        vec![],
        vec![PursuitRule {
            los_loss_limit: 120.0,
            ..PursuitRule::new(1, 0)
        }],
        vec![],
        SimParams::default(),
        3,
    )
    .unwrap()
}

fn two_corridor() -> (World, CellIndex) {
    let s = make_synthetic(Recipe::TwoCorridor { gentle: 10.0, steep: 25.0 }, 0, 9, 30.0).unwrap();
    let (start, goal) = (s.start.unwrap(), s.goal.unwrap());
    let mk = |id: &str, name: &str| AgentSpec {
        start,
        goal,
        ..spec(id, name, (0, 0), (0, 0), None)
    };
    let w = World::new(
        s.grid,
        vec![mk("cart", "ox-driven cart"), mk("mule", "mule")],
        vec![],
        vec![],
        vec![],
        SimParams::default(),
        5,
    )
    .unwrap();
    (w, start)
}

fn mobility_table() -> Check {
    let expected = [
        ("Fit adults", 1.125),
        ("Elderly", 0.50),
        ("Families", 0.78),
        ("Hostile", 1.44),
        ("Ox-driven cart", 0.84),
        ("Mule", 0.96),
    ];
    let mut worst = 0.0f64;
    for (name, want) in expected {
        let p = profile(name);
        let got = p.speed(p.ref_slope).map_err(|e| e.to_string())?.speed;
        ensure((got - want).abs() <= 0.005, || format!("{name}: {got} vs {want}"))?;
        worst = worst.max((got - want).abs());
    }
    ensure(builtin_profiles().len() == 6, || "expected six built-in profiles".into())?;
    Ok(format!("6 profiles, max |S_new - table| = {worst:.5} m/s"))
}

fn astar_optimality() -> Check {
    let mut solved = 0;
    let profiles = builtin_profiles();
    for p in &profiles {
        for seed in 0..100u64 {
            let g = random_grid(seed, 32, 6.0, 0.12);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xacce);
            let (s, t) = (random_cell(&mut rng, &g), random_cell(&mut rng, &g));
            match (astar(&g, p, s, t), dijkstra_oracle(&g, p, s, t)) {
                (Ok((plan, _)), Ok(best)) => {
                    ensure(plan.total_time == best, || {
                        format!("{} seed {seed}: {} vs {best}", p.name, plan.total_time)
                    })?;
                    solved += 1;
                }
                (Err(PlanError::NoPath { .. }), Err(PlanError::NoPath { .. })) => {}
                (a, b) => return Err(format!("{} seed {seed}: {a:?} vs {b:?}", p.name)),
            }
        }
    }
    let mut pairs = 0usize;
    for p in &profiles {
        for seed in 0..2u64 {
            let g = random_grid(500 + seed, 16, 5.0, 0.1);
            for goal in g.cells().filter(|c| g.is_traversable(*c)).collect::<Vec<_>>() {
                let exact = cost_to_go(&g, p, goal);
                for c in g.cells() {
                    let h = heuristic(c, goal, p, g.cellsize());
                    let d = exact[g.flat_index(c)];
                    ensure(h <= d + 1e-9, || format!("{}: h({c}->{goal}) = {h} > {d}", p.name))?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!(
        "{} grids x {} profiles, {solved} solvable plans exact; {pairs} heuristic pairs admissible",
        100,
        profiles.len()
    ))
}

fn hybrid_contract(table: &QTable) -> Check {
    let env = CorridorEnv::new(profile("fit adults"));
    let w = RewardWeights::default();
    let eval = evaluate_bypass(&env, table, &w, 200, 0xfeed, LearningParams::default().max_steps_per_episode)
        .map_err(|e| e.to_string())?;
    ensure(eval.success_rate() >= 0.95, || format!("bypass success {}", eval.success_rate()))?;
    ensure(eval.worst_ratio() <= 1.25, || format!("worst hybrid/oracle ratio {}", eval.worst_ratio()))?;

    let obstacle_world = World::new(
        flat(9, 20),
        vec![
            spec("a", "fit adults", (4, 0), (4, 19), Some(0)),
            spec("b", "families", (2, 0), (6, 19), Some(0)),
            spec("c", "elderly", (8, 19), (0, 0), Some(0)),
        ],
        vec![
            Obstacle::permanent(vec![CellIndex::new(4, 6), CellIndex::new(3, 6)]),
            Obstacle {
                footprint: vec![CellIndex::new(5, 12)],
                schedule: vec![(0.0, 60.0)],
            },
        ],
        vec![],
        vec![table.clone()],
        SimParams::default(),
        9,
    )
    .map_err(|e| e.to_string())?;
    let worlds = [
        run(obstacle_world),
        run(pursuit_flat()),
        run(pursuit_ridge()),
        run(two_corridor().0),
    ];
    let mut agents = 0;
    let mut adapted = false;
    for w in &worlds {
        for a in &w.agents {
            ensure(a.astar_calls == 1, || format!("agent {} called A* {} times", a.id, a.astar_calls))?;
            adapted |= a.trace.iter().any(|r| r.chi);
            agents += 1;
        }
    }
    ensure(adapted, || "no run exercised local adaptation".into())?;
    Ok(format!(
        "bypass success {:.1}% on 200 held-out, worst ratio {:.3}; A* once per agent over {agents} agents",
        eval.success_rate() * 100.0,
        eval.worst_ratio()
    ))
}

fn qlearning_properties() -> Check {
    let w = RewardWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r_max = w.r_max(30.0, 3.0);
    let state = |c: usize| LocalState::from_code(c).unwrap();
    let params = |alpha: f64, gamma: f64| LearningParams {
        alpha,
        gamma,
        ..Default::default()
    };
    let gamma = 0.95;
    let p = params(0.6, gamma);
    let mut q = QTable::new();
    for _ in 0..100_000 {
        let s = state(rng.random_range(0..STATE_COUNT));
        let s2 = state(rng.random_range(0..STATE_COUNT));
        let a = Action::ALL[rng.random_range(0..Action::COUNT)];
        let r = rng.random_range(-r_max..=r_max);
        q.update(&s, a, r, &s2, &p);
    }
    let bound = r_max / (1.0 - gamma);
    ensure(q.max_abs() <= bound, || format!("|Q| {} > {bound}", q.max_abs()))?;

    let random_table = |rng: &mut ChaCha8Rng| {
        let mut t = QTable::new();
        for _ in 0..200 {
            t.set_raw(rng.random_range(0..STATE_COUNT), rng.random_range(0..9), rng.random_range(-20.0..20.0));
        }
        t
    };
    for _ in 0..200 {
        let base = random_table(&mut rng);
        let s = state(rng.random_range(0..STATE_COUNT));
        let s2 = state(rng.random_range(0..STATE_COUNT));
        let a = Action::ALL[rng.random_range(0..9)];
        let r = rng.random_range(-10.0..10.0);

        let mut frozen = base.clone();
        frozen.update(&s, a, r, &s2, &params(0.0, 0.9));
        ensure(frozen.values() == base.values(), || "alpha = 0 changed the table".into())?;

        let mut one = base.clone();
        one.update(&s, a, r, &s2, &params(0.5, 0.9));
        let changed: Vec<usize> = (0..base.values().len())
            .filter(|&i| one.values()[i] != base.values()[i])
            .collect();
        let target = s.code() * Action::COUNT + a.index();
        ensure(changed.iter().all(|&i| i == target), || format!("update touched {changed:?}"))?;

        let bits = rng.random_range(1u16..512);
        let mask = Action::ALL
            .into_iter()
            .filter(|a| bits & (1 << a.index()) != 0)
            .fold(ActionMask::EMPTY, ActionMask::with);
        let shift = rng.random_range(-100.0..100.0);
        let mut shifted = base.clone();
        for b in Action::ALL {
            shifted.set(&s, b, base.get(&s, b) + shift);
        }
        ensure(base.greedy(&s, mask) == shifted.greedy(&s, mask), || "row shift changed argmax".into())?;
    }
    Ok(format!("max |Q| {:.2} <= {bound:.2}; identity, locality, shift invariance on 200 tables", q.max_abs()))
}

fn transport_comparison() -> Check {
    let (w, start) = two_corridor();
    let w = run(w);
    let (cart, mule) = (&w.agents[0], &w.agents[1]);
    let goal = cart.goal;
    ensure(
        cart.plan.waypoints.iter().all(|c| c.row != start.row || *c == start || *c == goal),
        || "cart uses the steep corridor".into(),
    )?;
    ensure(mule.plan.waypoints.iter().all(|c| c.row == start.row), || "mule left the steep corridor".into())?;
    let (dc, dm) = (cart.duration().ok_or("cart did not arrive")?, mule.duration().ok_or("mule did not arrive")?);
    ensure(dm < dc, || format!("mule {dm} s not faster than cart {dc} s"))?;
    for a in [cart, mule] {
        let mut sum = 0.0;
        for pair in a.plan.waypoints.windows(2) {
            let e = edge(&w.grid, &a.profile, pair[0], pair[1]).ok_or("impassable plan edge")?;
            sum += e.run / e.speed;
        }
        let d = a.duration().unwrap();
        ensure((d - sum).abs() < 1e-6, || format!("{}: duration {d} vs edge sum {sum}", a.id))?;
    }
    let hours = 24_000.0 / 0.96 / 3600.0;
    ensure((7.5 * 0.85..7.5).contains(&hours), || format!("24 km at 0.96 m/s = {hours:.2} h"))?;
    Ok(format!(
        "cart {dc:.0} s, mule {dm:.0} s ({:.1}% shorter); 24 km sanity {hours:.2} h vs 7.5 h band",
        (dc - dm) / dc * 100.0
    ))
}

fn pursuit_properties() -> Check {
    let a = run(pursuit_flat());
    let t = a.pursuits[0].time().ok_or("flat pursuit unresolved")?;
    ensure(a.pursuits[0].as_str() == "interception", || format!("flat: {}", a.pursuits[0].as_str()))?;
    let closed_form = (600.0 - 15.0) / (1.8 - 1.0);
    ensure((t - closed_form).abs() / closed_form <= 0.05, || format!("interception {t} vs {closed_form}"))?;
    ensure(a.agents[0].mode == AgentMode::Intercepted, || "target not intercepted".into())?;
    let b = run(pursuit_flat());
    ensure(a.report(&[]) == b.report(&[]), || "flat pursuit not deterministic".into())?;
    ensure(
        a.agents.iter().zip(&b.agents).all(|(x, y)| x.trace == y.trace),
        || "traces differ between runs".into(),
    )?;

    let r = run(pursuit_ridge());
    ensure(r.pursuits[0].as_str() == "abandonment-los", || format!("ridge: {}", r.pursuits[0].as_str()))?;

    let mut z = pursuit_flat();
    z.rules[0].effort_budget = 0.0;
    z.step(1.0);
    ensure(
        z.pursuits[0].as_str() == "abandonment-effort" && z.pursuits[0].time() == Some(1.0),
        || format!("budget 0: {:?}", z.pursuits[0]),
    )?;
    Ok(format!(
        "interception at {t:.0} s vs {closed_form:.2} s closed form; ridge abandonment-los at {:.0} s; budget 0 ends at 1 s",
        r.pursuits[0].time().unwrap_or(f64::NAN)
    ))
}

fn terrain_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..20u64 {
        let n = rng.random_range(1..40);
        let mut g = random_grid(seed, n, 2500.0, 0.1);
        g.set(CellIndex::new(0, 0), rng.random::<f64>() * 1e-3);
        let text = write_asc(&g);
        let back = parse_asc(&text).map_err(|e| e.to_string())?;
        ensure(back == g && write_asc(&back) == text, || format!("grid {seed} did not round-trip"))?;
    }
    let canonical = "ncols 3\nnrows 2\nxllcorner 500000.5\nyllcorner 4200000\ncellsize 30\nNODATA_value -9999\n1.25 2 -9999\n0.1 0.0000001 3000\n";
    let g = parse_asc(canonical).map_err(|e| e.to_string())?;
    ensure(write_asc(&g) == canonical, || "canonical text not reproduced".into())?;

    let mut pairs = 0;
    for seed in 0..30u64 {
        let g = random_grid(900 + seed, 24, 20.0, 0.05);
        for _ in 0..200 {
            let a = CellIndex::new(rng.random_range(0..24), rng.random_range(0..24));
            let b = CellIndex::new(rng.random_range(0..24), rng.random_range(0..24));
            let h = rng.random_range(0.0..5.0);
            ensure(line_of_sight(&g, a, b, h, h) == line_of_sight(&g, b, a, h, h), || {
                format!("asymmetric LOS {a} {b}")
            })?;
            pairs += 1;
        }
    }

    let mut checked = 0;
    for (seed, n) in [(11u64, 64usize), (12, 48), (13, 23)] {
        let g = random_grid(seed, n, 20.0, 0.02);
        for i in 0..3 {
            for j in 0..3 {
                let o = CellIndex::new(i * (n - 1) / 2, j * (n - 1) / 2);
                if !g.is_traversable(o) {
                    continue;
                }
                let mask = viewshed(&g, o, 1e9, 1.7, 1.7);
                for c in g.cells() {
                    ensure(mask[g.flat_index(c)] == line_of_sight(&g, o, c, 1.7, 1.7), || {
                        format!("viewshed disagrees at {o} -> {c}")
                    })?;
                    checked += 1;
                }
            }
        }
    }

    let ridge = ElevationGrid::from_fn(1, 5, 30.0, |_, c| [0.0, 0.0, 50.0, 0.0, 0.0][c]).unwrap();
    ensure(
        !line_of_sight(&ridge, CellIndex::new(0, 0), CellIndex::new(0, 4), 1.7, 1.7),
        || "ridge did not occlude".into(),
    )?;
    ensure(
        line_of_sight(&ridge, CellIndex::new(0, 0), CellIndex::new(0, 1), 1.7, 1.7),
        || "adjacent cell hidden".into(),
    )?;
    Ok(format!("21 grids byte-identical; {pairs} symmetric pairs; {checked} viewshed cells match LOS; ridge occludes"))
}

const SCENARIO: &str = r#"{
  "terrain": "ridge:25,20,8@15x40/30",
  "agents": [
    {"id": "target", "profile": "Elderly", "start": [7, 12], "goal": [7, 39]},
    {"id": "hostile", "profile": "Hostile", "start": [7, 0], "goal": [7, 12]},
    {"id": "walker", "profile": "Families", "start": [2, 0], "goal": [2, 30]},
    {"id": "mule", "profile": "Mule", "start": [12, 0], "goal": [12, 39]},
    {"id": "cart", "profile": "Ox-driven cart", "start": [12, 0], "goal": [12, 39]}
  ],
  "obstacles": [{"cells": [[2, 5], [3, 5]]}, {"cells": [[12, 10]], "schedule": [[0, 90]]}],
  "pursuit_rules": [{"pursuer": "hostile", "target": "target"}],
  "transport_pairs": [{"route": "south", "first": "cart", "second": "mule"}],
  "training": {"episodes": 1000},
  "sim": {"seed": 21}
}"#;

fn determinism() -> Check {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let config = tmp.path().join("scenario.json");
    fs::write(&config, SCENARIO).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let out: PathBuf = tmp.path().join(name);
        let args = SimulateArgs {
            config: config.clone(),
            seed: None,
            dt: None,
            strict: true,
            out: Some(out.clone()),
        };
        cmd_simulate(args, &mut std::io::sink()).map_err(|e| e.to_string())?;
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    ensure(outputs[0] == outputs[1], || "outputs differ between runs".into())?;
    let bytes: usize = outputs[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical across two runs", outputs[0].len()))
}

fn main() -> ExitCode {
    let table = trained();
    let criteria: Vec<Criterion> = vec![
        ("mobility table reproduction", Box::new(mobility_table)),
        ("A* optimality", Box::new(astar_optimality)),
        ("hybrid contract", Box::new(move || hybrid_contract(&table))),
        ("Q-learning properties", Box::new(qlearning_properties)),
        ("transport comparison at desk scale", Box::new(transport_comparison)),
        ("pursuit-evasion properties", Box::new(pursuit_properties)),
        ("terrain and LOS suite", Box::new(terrain_suite)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = check();
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
