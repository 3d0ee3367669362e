use terramob_core::agents::find_builtin;
use std::sync::OnceLock;

use terramob_core::local_adapt::{train_bypass, CorridorEnv, LearningParams, QTable, RewardWeights};
use terramob_core::sim::{
    compare_transport, effort_accrual, AgentMode, AgentSpec, Obstacle, PursuitRule, SimParams,
    World,
};
use terramob_core::terrain::{make_synthetic, Action, CellIndex, ElevationGrid, Recipe};

fn spec(id: &str, profile: &str, start: (usize, usize), goal: (usize, usize)) -> AgentSpec {
    AgentSpec {
        id: id.into(),
        profile: find_builtin(profile).unwrap(),
        start: CellIndex::new(start.0, start.1),
        goal: CellIndex::new(goal.0, goal.1),
        qtable: None,
    }
}

fn flat(rows: usize, cols: usize) -> ElevationGrid {
    make_synthetic(Recipe::Flat { height: 100.0 }, rows, cols, 30.0).unwrap().grid
}

fn world(grid: ElevationGrid, specs: Vec<AgentSpec>, obstacles: Vec<Obstacle>, rules: Vec<PursuitRule>) -> World {
    World::new(grid, specs, obstacles, rules, vec![], SimParams::default(), 7).unwrap()
}

fn trained() -> QTable {
    static TABLE: OnceLock<QTable> = OnceLock::new();
    TABLE
        .get_or_init(|| {
            let env = CorridorEnv::new(find_builtin("fit adults").unwrap());
            train_bypass(&env, &RewardWeights::default(), &LearningParams::default())
                .unwrap()
                .table
        })
        .clone()
}

#[test]
fn one_step_covers_flat_speed() {
    let mut w = world(flat(5, 10), vec![spec("a", "fit adults", (2, 0), (2, 9))], vec![], vec![]);
    let (x0, y0) = w.agents[0].position;
    w.step(1.0);
    let (x1, y1) = w.agents[0].position;
    assert!((x1 - x0 - 1.5).abs() < 1e-12);
    assert_eq!(y1, y0);
    assert_eq!(w.agents[0].mode, AgentMode::Following);
}

#[test]
fn effort_increments() {
    assert_eq!(effort_accrual(20.0, 0.0), 20.0);
    assert!((effort_accrual(26.667, 15.0) - 30.667).abs() < 1e-3);
    assert_eq!(effort_accrual(0.0, 12.0), 0.0);
}

#[test]
fn obstacle_on_next_cell_switches_to_adapting() {
    let g = flat(7, 12);
    let table = trained();
    let mut a = spec("a", "fit adults", (3, 0), (3, 11));
    a.qtable = Some(0);
    let mut w = World::new(
        g,
        vec![a],
        vec![Obstacle::permanent(vec![CellIndex::new(3, 1)])],
        vec![],
        vec![table],
        SimParams::default(),
        1,
    )
    .unwrap();
    assert!(w.detect_block(0));
    w.step(1.0);
    let rec = w.agents[0].trace.last().unwrap();
    assert!(rec.chi);
    assert_eq!(rec.mode, AgentMode::Adapting);
    w.run();
    let a = &w.agents[0];
    assert_eq!(a.mode, AgentMode::Arrived);
    assert_eq!(a.astar_calls, 1);
    assert!(a.trace.iter().all(|r| r.cell != CellIndex::new(3, 1)));
    for r in &a.trace {
        if r.mode == AgentMode::Following && r.t > 0.0 {
            assert_eq!(r.deviation, 0, "off-plan while following at t={}", r.t);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let build = || {
        let mut w = world(
            make_synthetic(Recipe::Cone { peak: 40.0, radius: 400.0 }, 21, 21, 30.0).unwrap().grid,
            vec![
                spec("a", "families", (0, 0), (20, 20)),
                spec("b", "elderly", (20, 0), (0, 20)),
                spec("c", "mule", (10, 0), (10, 20)),
            ],
            vec![Obstacle {
                footprint: vec![CellIndex::new(10, 5), CellIndex::new(11, 5)],
                schedule: vec![(0.0, 200.0), (400.0, 900.0)],
            }],
            vec![],
        );
        w.run();
        w
    };
    let (a, b) = (build(), build());
    assert_eq!(a.report(&[]), b.report(&[]));
    for (x, y) in a.agents.iter().zip(&b.agents) {
        assert_eq!(x.trace, y.trace);
    }
}

#[test]
fn kinematic_invariants_hold() {
    let mut w = world(
        make_synthetic(Recipe::Cone { peak: 60.0, radius: 500.0 }, 25, 25, 30.0).unwrap().grid,
        vec![
            spec("a", "fit adults", (0, 0), (24, 24)),
            spec("b", "ox-driven cart", (24, 0), (0, 24)),
            spec("c", "hostile", (12, 0), (12, 24)),
        ],
        vec![],
        vec![],
    );
    w.run();
    for a in &w.agents {
        assert_eq!(a.mode, AgentMode::Arrived);
        assert_eq!(a.astar_calls, 1);
        let dur = a.duration().unwrap();
        assert!((dur - (a.travel_time + a.wait_time)).abs() < 1e-6);
        let plan_time: f64 = a.plan.edge_times.iter().sum();
        assert!((a.travel_time - plan_time).abs() < 1e-6);
        let mut last_t = -1.0;
        for pair in a.trace.windows(2) {
            let d = ((pair[1].easting - pair[0].easting).powi(2) + (pair[1].northing - pair[0].northing).powi(2)).sqrt();
            assert!(d <= a.profile.s_flat * 1.0 + 1e-9);
            assert!(pair[1].t > last_t);
            last_t = pair[1].t;
        }
    }
}

#[test]
fn idle_grid_transport_reduction_is_zero_for_identical_profiles() {
    let g = flat(5, 12);
    let m = find_builtin("mule").unwrap();
    let row = compare_transport(&g, "r", &m, &m, CellIndex::new(2, 0), CellIndex::new(2, 11), SimParams::default()).unwrap();
    assert_eq!(row.reduction_percent, Some(0.0));
}

#[test]
fn mule_beats_cart_on_two_corridors() {
    let s = make_synthetic(Recipe::TwoCorridor { gentle: 10.0, steep: 25.0 }, 0, 9, 30.0).unwrap();
    let (start, goal) = (s.start.unwrap(), s.goal.unwrap());
    let mut w = world(
        s.grid.clone(),
        vec![
            AgentSpec { start, goal, ..spec("cart", "ox-driven cart", (0, 0), (0, 0)) },
            AgentSpec { start, goal, ..spec("mule", "mule", (0, 0), (0, 0)) },
        ],
        vec![],
        vec![],
    );
    w.run();
    let cart = &w.agents[0];
    let mule = &w.agents[1];
    assert!(cart.plan.waypoints.iter().all(|c| c.row != start.row || c == &start || c == &goal));
    assert!(mule.plan.waypoints.iter().all(|c| c.row == start.row));
    assert!(mule.duration().unwrap() < cart.duration().unwrap());
    let row = compare_transport(&s.grid, "two", &cart.profile, &mule.profile, start, goal, SimParams::default()).unwrap();
    assert!(row.reduction_percent.unwrap() > 0.0);
}

#[test]
fn pursuit_on_flat_ground_ends_in_interception() {
    let mut w = world(
        flat(11, 60),
        vec![spec("target", "elderly", (5, 20), (5, 59)), spec("hostile", "hostile", (5, 0), (5, 20))],
        vec![],
        vec![PursuitRule::new(1, 0)],
    );
    w.run();
    let t = w.pursuits[0].time().unwrap();
    assert_eq!(w.pursuits[0].as_str(), "interception");
    let closed_form = (600.0 - 15.0) / (1.8 - 1.0);
    assert!((t - closed_form).abs() / closed_form < 0.05, "{t} vs {closed_form}");
    assert_eq!(w.agents[0].mode, AgentMode::Intercepted);
}

#[test]
fn pursuit_behind_a_ridge_is_abandoned() {
    let g = make_synthetic(Recipe::Ridge { height: 30.0, position: 30, half_width: 10.0 }, 11, 60, 30.0)
        .unwrap()
        .grid;
    let mut w = world(
        g,
        vec![spec("target", "elderly", (5, 25), (5, 50)), spec("hostile", "hostile", (5, 0), (5, 25))],
        vec![],
        vec![PursuitRule::new(1, 0)],
    );
    w.run();
    assert_eq!(w.pursuits[0].as_str(), "abandonment-los");
    assert_eq!(w.agents[1].mode, AgentMode::Abandoned);
    assert_eq!(w.agents[1].astar_calls, 1);
}

#[test]
fn zero_effort_budget_abandons_at_once() {
    let mut w = world(
        flat(11, 30),
        vec![spec("target", "elderly", (5, 10), (5, 29)), spec("hostile", "hostile", (5, 0), (5, 10))],
        vec![],
        vec![PursuitRule { effort_budget: 0.0, ..PursuitRule::new(1, 0) }],
    );
    w.step(1.0);
    assert_eq!(w.pursuits[0].as_str(), "abandonment-effort");
    assert_eq!(w.pursuits[0].time(), Some(1.0));
}

#[test]
fn later_agent_yields_on_conflict() {
    let specs = vec![spec("a", "fit adults", (1, 0), (1, 2)), spec("b", "fit adults", (0, 1), (2, 1))]
        .into_iter()
        .map(|s| AgentSpec { qtable: Some(0), ..s })
        .collect();
    let mut w = World::new(flat(3, 3), specs, vec![], vec![], vec![trained()], SimParams::default(), 7).unwrap();
    w.run();
    for a in &w.agents {
        assert_eq!(a.mode, AgentMode::Arrived);
    }
    assert!(w.agents[1].trace.iter().any(|r| r.action == Some(Action::Stay)));
}

#[test]
fn unreachable_goal_is_reported_per_agent() {
    let mut g = flat(5, 5);
    for r in 0..5 {
        g.set_nodata(CellIndex::new(r, 2));
    }
    let mut w = world(g, vec![spec("a", "elderly", (0, 0), (0, 4)), spec("b", "elderly", (4, 0), (0, 1))], vec![], vec![]);
    w.run();
    let rep = w.report(&[]);
    assert_eq!(rep.agents[0].outcome, "no-path");
    assert_eq!(rep.agents[1].outcome, "arrived");
}
