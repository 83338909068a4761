//! Fixed-width per-flow tables in Mbps, one row per metric and flow.

use std::fmt::Write;

use flowlab_core::{Scenario, SteadyStateSummary};

/// Row label and per-engine values of one table line.
pub struct Row {
    pub label: String,
    pub values: Vec<Option<f64>>,
    /// Marks rows that take part in a pass/fail check.
    pub checked: bool,
}

/// Ā_k, Ā, X̄_k, X̄ (Mbps), Q̄_k (packets), L̄_k (Mbps) for each summary.
pub fn rows(scenario: &Scenario, summaries: &[Option<&SteadyStateSummary>]) -> Vec<Row> {
    let u = scenario.units();
    let n = scenario.flows().len();
    let mut out = Vec::new();
    let per_flow = |f: &dyn Fn(&SteadyStateSummary, usize) -> Option<f64>, k: usize| -> Vec<Option<f64>> {
        summaries.iter().map(|s| s.and_then(|s| f(s, k))).collect()
    };
    let total = |f: &dyn Fn(&SteadyStateSummary, usize) -> Option<f64>| -> Vec<Option<f64>> {
        summaries
            .iter()
            .map(|s| s.and_then(|s| (0..n).map(|k| f(s, k)).sum::<Option<f64>>()))
            .collect()
    };
    let a = |s: &SteadyStateSummary, k: usize| Some(u.pps_to_mbps(s.flows[k].sending_rate));
    let x = |s: &SteadyStateSummary, k: usize| Some(u.pps_to_mbps(s.flows[k].throughput));
    let q = |s: &SteadyStateSummary, k: usize| s.flows[k].mean_queue;
    let l = |s: &SteadyStateSummary, k: usize| Some(u.pps_to_mbps(s.flows[k].loss_rate));

    for k in 0..n {
        out.push(Row {
            label: format!("A{} [Mbps]", k + 1),
            values: per_flow(&a, k),
            checked: false,
        });
    }
    out.push(Row {
        label: "A  [Mbps]".into(),
        values: total(&a),
        checked: false,
    });
    for k in 0..n {
        out.push(Row {
            label: format!("X{} [Mbps]", k + 1),
            values: per_flow(&x, k),
            checked: true,
        });
    }
    out.push(Row {
        label: "X  [Mbps]".into(),
        values: total(&x),
        checked: false,
    });
    for k in 0..n {
        out.push(Row {
            label: format!("Q{} [pkt]", k + 1),
            values: per_flow(&q, k),
            checked: false,
        });
    }
    for k in 0..n {
        out.push(Row {
            label: format!("L{} [Mbps]", k + 1),
            values: per_flow(&l, k),
            checked: false,
        });
    }
    out.push(Row {
        label: "utilization".into(),
        values: summaries.iter().map(|s| s.map(|s| s.utilization)).collect(),
        checked: false,
    });
    out
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:>10.2}"),
        None => format!("{:>10}", "-"),
    }
}

/// Renders `rows` under `headers`; `extra` adds a trailing column per row.
pub fn render(headers: &[&str], rows: &[Row], extra: Option<(&str, Vec<String>)>) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<13}", "metric");
    for h in headers {
        let _ = write!(s, "{h:>10}");
    }
    if let Some((h, _)) = &extra {
        let _ = write!(s, "{h:>10}");
    }
    s.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let label = if r.checked && extra.is_some() {
            format!("{} *", r.label)
        } else {
            r.label.clone()
        };
        let _ = write!(s, "{label:<13}");
        for v in &r.values {
            s.push_str(&cell(*v));
        }
        if let Some((_, col)) = &extra {
            let _ = write!(s, "{:>10}", col[i]);
        }
        s.push('\n');
    }
    s
}

pub fn heading(scenario: &Scenario) -> String {
    format!(
        "discipline {}, C = {:.2} Mbps, B = {} pkt, {} flows, horizon {} s, rtt {}, detection {}",
        scenario.discipline(),
        scenario.units().pps_to_mbps(scenario.capacity()),
        scenario.buffer(),
        scenario.flows().len(),
        scenario.horizon(),
        scenario.rtt_mode().as_str(),
        scenario.detection_mode().as_str(),
    )
}
