//! Result export: CSV and JSON-lines renderings of scenario runs and
//! supply curves. All output is deterministic for identical inputs: rows
//! follow map order, floats print with Rust's shortest round-trip
//! formatting, and the metadata header pins seed, config hash, and RNG
//! algorithm so runs can be reproduced from the artifact alone.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::json;

use crate::scenario::{RunResult, SupplyCurve};
use crate::RNG_ALGORITHM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    JsonLines,
}

fn header_block(scenario: &str, seed: u64, config_hash: &str) -> String {
    format!(
        "# scenario: {scenario}\n# seed: {seed}\n# config: {config_hash}\n# rng: {RNG_ALGORITHM}\n"
    )
}

fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Renders per-timestep metrics as CSV: a commented metadata header, then
/// one row per timestep with the per-consumer delivered-cost columns last.
pub fn run_result_csv(result: &RunResult) -> String {
    let consumers: BTreeSet<usize> = result
        .records
        .iter()
        .flat_map(|r| r.consumer_cost.keys().copied())
        .collect();

    let mut out = header_block(&result.scenario, result.seed, &result.config_hash);
    out.push_str("timestep,scenario,total_cost,total_shortfall");
    for id in &consumers {
        out.push_str(&format!(",consumer_{id}"));
    }
    out.push('\n');
    for record in &result.records {
        out.push_str(&format!(
            "{},{},{},{}",
            record.timestep,
            csv_field(&result.scenario),
            record.total_cost,
            record.total_shortfall
        ));
        for id in &consumers {
            match record.consumer_cost.get(id) {
                Some(cost) => out.push_str(&format!(",{cost}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Renders a supply curve as CSV (quantity, cost) rows under the same
/// metadata header.
pub fn curve_csv(curve: &SupplyCurve, seed: u64, config_hash: &str) -> String {
    let mut out = header_block(&curve.provenance, seed, config_hash);
    out.push_str(&format!("# total_demanded: {}\n", curve.total_demanded));
    out.push_str(&format!("# truncated: {}\n", curve.truncated));
    out.push_str("quantity,cost\n");
    for (quantity, cost) in &curve.steps {
        out.push_str(&format!("{quantity},{cost}\n"));
    }
    out
}

/// Renders a run as JSON lines: one metadata object, one object per
/// timestep, and a final supply-curve object.
pub fn run_result_jsonl(result: &RunResult) -> String {
    let mut out = String::new();
    let meta = json!({
        "scenario": result.scenario,
        "seed": result.seed,
        "config": result.config_hash,
        "rng": RNG_ALGORITHM,
    });
    out.push_str(&meta.to_string());
    out.push('\n');
    for record in &result.records {
        let line = json!({
            "timestep": record.timestep,
            "total_cost": record.total_cost,
            "total_shortfall": record.total_shortfall,
            "consumer_cost": record.consumer_cost,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    let curve = json!({
        "curve": {
            "steps": result.curve.steps,
            "total_demanded": result.curve.total_demanded,
            "truncated": result.curve.truncated,
        }
    });
    out.push_str(&curve.to_string());
    out.push('\n');
    out
}

/// Writes a run to `path` in the requested format; returns bytes written.
pub fn export_results(
    result: &RunResult,
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> io::Result<usize> {
    let text = match format {
        ExportFormat::Csv => run_result_csv(result),
        ExportFormat::JsonLines => run_result_jsonl(result),
    };
    fs::write(path, &text)?;
    Ok(text.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{run, ScenarioSpec};
    use crate::topology::validation_fixture_3node;

    #[test]
    fn csv_has_header_and_one_row_per_timestep() {
        let net = validation_fixture_3node();
        let result = run(&net, &ScenarioSpec::stationary("idle", 3)).unwrap();
        let csv = run_result_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4 + 1 + 3, "4 meta + 1 header + 3 data");
        assert!(lines[0].starts_with("# scenario: idle"));
        assert!(lines[3].ends_with("splitmix64"));
        assert_eq!(
            lines[4],
            "timestep,scenario,total_cost,total_shortfall,consumer_3"
        );
        assert!(lines[5].starts_with("1,idle,"));
        assert!(lines[7].starts_with("3,idle,"));
    }

    #[test]
    fn identical_runs_export_identical_bytes() {
        let net = validation_fixture_3node();
        let spec = ScenarioSpec::stationary("idle", 2);
        let a = run(&net, &spec).unwrap();
        let b = run(&net, &spec).unwrap();
        assert_eq!(run_result_csv(&a), run_result_csv(&b));
        assert_eq!(run_result_jsonl(&a), run_result_jsonl(&b));
        assert_eq!(
            curve_csv(&a.curve, a.seed, &a.config_hash),
            curve_csv(&b.curve, b.seed, &b.config_hash)
        );
    }

    #[test]
    fn zero_demand_run_exports_zero_costs() {
        let mut net = validation_fixture_3node();
        for agent in net.agents.values_mut() {
            agent.final_demand = vec![0.0; 3];
        }
        let result = run(&net, &ScenarioSpec::stationary("empty", 2)).unwrap();
        let csv = run_result_csv(&result);
        for line in csv.lines().skip(5) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[2], "0", "total_cost column: {line}");
        }
    }

    #[test]
    fn curve_csv_lists_every_step() {
        let net = validation_fixture_3node();
        let result = run(&net, &ScenarioSpec::stationary("idle", 1)).unwrap();
        let csv = curve_csv(&result.curve, result.seed, &result.config_hash);
        let data_rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(data_rows, result.curve.steps.len());
        assert!(csv.contains("# truncated: false"));
    }

    #[test]
    fn jsonl_is_parseable_and_complete() {
        let net = validation_fixture_3node();
        let result = run(&net, &ScenarioSpec::stationary("idle", 2)).unwrap();
        let text = run_result_jsonl(&result);
        let lines: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 4, "meta + 2 records + curve");
        assert_eq!(lines[0]["rng"], "splitmix64");
        assert_eq!(lines[1]["timestep"], 1);
        assert!(lines[3]["curve"]["steps"].is_array());
    }

    #[test]
    fn awkward_scenario_names_are_quoted() {
        let net = validation_fixture_3node();
        let mut spec = ScenarioSpec::stationary("a,b \"c\"", 1);
        spec.seed = 3;
        let result = run(&net, &spec).unwrap();
        let csv = run_result_csv(&result);
        assert!(csv.contains("1,\"a,b \"\"c\"\"\","));
    }
}
