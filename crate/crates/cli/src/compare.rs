//! Three-engine comparison on X̄.

use anyhow::Result;
use flowlab_core::{Scenario, SteadyStateSummary};
use serde::Serialize;

use crate::{run_analytic, run_fluid, run_packet, table, RunOptions};

/// Deviation of `a` from `b` relative to the larger of the two, with a floor
/// of 1% of capacity so that two near-zero rates do not count as far apart.
pub fn relative_deviation(a: f64, b: f64, capacity: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(0.01 * capacity)
}

#[derive(Debug, Serialize)]
pub struct FlowCheck {
    pub flow: usize,
    pub fluid_vs_analytic: f64,
    pub packet_vs_analytic: f64,
    pub packet_vs_fluid: f64,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub analytic: SteadyStateSummary,
    pub fluid: SteadyStateSummary,
    pub packet: SteadyStateSummary,
    pub tol: f64,
    pub fluid_tol: f64,
    pub checks: Vec<FlowCheck>,
    pub pass: bool,
}

pub fn compare(s: &Scenario, opts: &RunOptions, tol: f64, fluid_tol: f64) -> Result<Comparison> {
    let analytic = run_analytic(s)?;
    let (_, fluid) = run_fluid(s, opts)?;
    let packet = run_packet(s, opts)?.summary;
    let c = s.capacity();
    let checks: Vec<FlowCheck> = (0..s.flows().len())
        .map(|k| {
            let (a, f, p) = (
                analytic.flows[k].throughput,
                fluid.flows[k].throughput,
                packet.flows[k].throughput,
            );
            FlowCheck {
                flow: k + 1,
                fluid_vs_analytic: relative_deviation(f, a, c),
                packet_vs_analytic: relative_deviation(p, a, c),
                packet_vs_fluid: relative_deviation(p, f, c),
            }
        })
        .collect();
    let pass = checks
        .iter()
        .all(|ch| ch.fluid_vs_analytic <= fluid_tol && ch.packet_vs_analytic <= tol && ch.packet_vs_fluid <= tol);
    Ok(Comparison {
        analytic,
        fluid,
        packet,
        tol,
        fluid_tol,
        checks,
        pass,
    })
}

impl Comparison {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }

    pub fn render(&self, s: &Scenario) -> String {
        let summaries = [Some(&self.analytic), Some(&self.fluid), Some(&self.packet)];
        let rows = table::rows(s, &summaries);
        let c = s.capacity();
        let max_dev: Vec<String> = rows
            .iter()
            .map(|r| {
                let v: Vec<f64> = r.values.iter().flatten().cloned().collect();
                if v.len() < 2 || r.label == "utilization" {
                    return "-".to_string();
                }
                let mut m: f64 = 0.0;
                for i in 0..v.len() {
                    for j in i + 1..v.len() {
                        // rows are in Mbps or packets; the floor uses C in the row's unit
                        let floor = if r.label.contains("pkt") {
                            s.buffer_pkts()
                        } else {
                            s.units().pps_to_mbps(c)
                        };
                        m = m.max(relative_deviation(v[i], v[j], floor));
                    }
                }
                format!("{:.1}%", 100.0 * m)
            })
            .collect();
        let mut out = format!("{}\n", table::heading(s));
        out.push_str(&table::render(
            &["analytic", "fluid", "packet"],
            &rows,
            Some(("max dev", max_dev)),
        ));
        for n in self.analytic.notes.iter() {
            out.push_str(&format!("note: {n}\n"));
        }
        out.push_str(&format!(
            "X* checked: fluid vs analytic <= {:.1}%, packet vs either <= {:.1}%: {}\n",
            100.0 * self.fluid_tol,
            100.0 * self.tol,
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}
