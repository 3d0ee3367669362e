//! Plain-text rendering of simulation reports.

use terramob_core::sim::{ComparisonRow, SimReport};

pub const NO_ROUTES: &str = "no routes: the report holds no transport comparison";

/// Seconds as `h:mm`, rounded to the nearest minute.
pub fn hmm(seconds: f64) -> String {
    let minutes = (seconds / 60.0).round() as i64;
    let sign = if minutes < 0 { "-" } else { "" };
    let m = minutes.abs();
    format!("{sign}{}:{:02}", m / 60, m % 60)
}

/// Meters as kilometers with one decimal.
pub fn km(meters: f64) -> String {
    format!("{:.1}", meters / 1000.0)
}

fn opt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out += &line(&rule);
    for r in rows {
        out += &line(r);
    }
    out
}

fn transport_table(rows: &[ComparisonRow]) -> String {
    let first = &rows[0].first.mode;
    let second = &rows[0].second.mode;
    let header = vec![
        "Route".to_string(),
        format!("{first} Duration"),
        format!("{first} Distance (km)"),
        format!("{second} Duration"),
        format!("{second} Distance (km)"),
        "Difference".to_string(),
        "Reduction (%)".to_string(),
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.route.clone(),
                opt(r.first.duration, hmm),
                opt(r.first.distance, km),
                opt(r.second.duration, hmm),
                opt(r.second.distance, km),
                opt(r.difference, hmm),
                opt(r.reduction_percent, |p| format!("{p:.1}")),
            ]
        })
        .collect();
    table(&header, &body)
}

pub fn render(report: &SimReport) -> String {
    let mut out = String::new();
    if !report.agents.is_empty() {
        out += &format!("seed {}  end time {}\n\nAgents\n", report.seed, hmm(report.end_time));
        let header: Vec<String> = [
            "Id", "Profile", "Outcome", "Duration", "Distance (km)", "Wait (s)", "Effort", "A* calls",
        ]
        .map(String::from)
        .to_vec();
        let rows: Vec<Vec<String>> = report
            .agents
            .iter()
            .map(|a| {
                vec![
                    a.id.clone(),
                    a.profile.clone(),
                    a.outcome.clone(),
                    opt(a.duration, hmm),
                    km(a.distance),
                    format!("{:.0}", a.wait_time),
                    format!("{:.1}", a.effort),
                    a.astar_calls.to_string(),
                ]
            })
            .collect();
        out += &table(&header, &rows);
        out.push('\n');
    }
    if !report.pursuits.is_empty() {
        out += "Pursuits\n";
        let header: Vec<String> = ["Pursuer", "Target", "Outcome", "Time"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = report
            .pursuits
            .iter()
            .map(|p| {
                vec![
                    p.pursuer.clone(),
                    p.target.clone(),
                    p.outcome.clone(),
                    opt(p.time, hmm),
                ]
            })
            .collect();
        out += &table(&header, &rows);
        out.push('\n');
    }
    if report.transport.is_empty() {
        out += NO_ROUTES;
        out.push('\n');
    } else {
        out += "Transport comparison\n";
        out += &transport_table(&report.transport);
    }
    out
}
