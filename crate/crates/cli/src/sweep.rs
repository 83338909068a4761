//! Parameter sweeps: one engine run per value, fanned out over threads.

use std::fmt::Write;

use anyhow::{bail, Context, Result};
use flowlab_core::ScenarioDoc;
use rayon::prelude::*;

use crate::{run_engine, Engine, RunOptions};

/// Numeric keys; the rest (discipline, modes, seed, ...) are not sweepable.
const GLOBAL_KEYS: [&str; 3] = ["capacity_mbps", "buffer_kb", "horizon_s"];
const FLOW_KEYS: [&str; 4] = ["rtt_ms", "rate_mbps", "initial_rate_pps", "initial_queue_pkts"];

pub fn check_sweepable(doc: &ScenarioDoc, key: &str) -> Result<()> {
    if GLOBAL_KEYS.contains(&key) {
        return Ok(());
    }
    if let Some((flow, k)) = key.strip_prefix("flow").and_then(|r| r.split_once('.')) {
        if FLOW_KEYS.contains(&k) {
            match flow.parse::<usize>() {
                Ok(n) if n >= 1 && n <= doc.flows.len() => return Ok(()),
                _ => bail!("`{key}`: the scenario has {} flows", doc.flows.len()),
            }
        }
    }
    bail!(
        "`{key}` is not sweepable; use one of {} or flowN.{{{}}}",
        GLOBAL_KEYS.join(", "),
        FLOW_KEYS.join(",")
    )
}

/// `steps` evenly spaced values from `from` to `to`, ends included.
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![from],
        n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// CSV with one row per value, in the order given. Rates are in Mbps,
/// queues in packets.
pub fn sweep(doc: &ScenarioDoc, key: &str, values: &[f64], engine: Engine, opts: &RunOptions) -> Result<String> {
    check_sweepable(doc, key)?;
    let n = doc.flows.len();
    let mut csv = format!("{key},engine,utilization");
    for k in 1..=n {
        let _ = write!(csv, ",A{k}_mbps,X{k}_mbps,Q{k}_pkts,L{k}_mbps");
    }
    csv.push('\n');

    let rows: Vec<Result<String>> = values
        .par_iter()
        .map(|&v| -> Result<String> {
            let mut d = doc.clone();
            d.set(key, &v.to_string())?;
            let s = d.build().with_context(|| format!("{key} = {v}"))?;
            let summary = run_engine(engine, &s, opts).with_context(|| format!("{key} = {v}"))?;
            let u = s.units();
            let mut row = format!("{v},{},{}", engine.name(), summary.utilization);
            for f in &summary.flows {
                let q = f.mean_queue.map_or(String::new(), |q| q.to_string());
                let _ = write!(
                    row,
                    ",{},{},{},{}",
                    u.pps_to_mbps(f.sending_rate),
                    u.pps_to_mbps(f.throughput),
                    q,
                    u.pps_to_mbps(f.loss_rate)
                );
            }
            row.push('\n');
            Ok(row)
        })
        .collect();
    for r in rows {
        csv.push_str(&r?);
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert!(linspace(1.0, 9.0, 0).is_empty());
        assert_eq!(linspace(3.0, 9.0, 1), vec![3.0]);
        assert_eq!(linspace(1.0, 9.0, 5), vec![1.0, 3.0, 5.0, 7.0, 9.0]);
    }

    #[test]
    fn sweepable_keys() {
        let doc = ScenarioDoc::new(10.0, 150.0, flowlab_core::Discipline::Fq).tcp(20.0);
        assert!(check_sweepable(&doc, "flow1.rtt_ms").is_ok());
        assert!(check_sweepable(&doc, "buffer_kb").is_ok());
        assert!(check_sweepable(&doc, "flow2.rtt_ms").is_err());
        assert!(check_sweepable(&doc, "discipline").is_err());
        assert!(check_sweepable(&doc, "flow1.kind").is_err());
    }
}
