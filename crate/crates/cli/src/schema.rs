use anyhow::{bail, Result};
use clap::ValueEnum;
use phimp_core::estimation::CostBreakdown;
use phimp_core::feature_map::{load_fsm_map, MapFile};
use phimp_core::selection::{CountableSearchResult, SelectionResult, TrajectoryRow};
use phimp_core::seq::ErgodicityReport;
use phimp_core::source::CrossEntropyEstimate;
use serde::de::DeserializeOwned;
use serde_json::Value;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    /// JSON lines from `score`.
    Costs,
    /// CSV from `experiment`.
    Traj,
    /// JSON from `maps enumerate`.
    Maps,
    /// JSON line from `select` or `active`.
    Selection,
    /// JSON line from `xent`.
    Xent,
    /// JSON line from `diagnose`.
    Diagnose,
}

pub const TRAJ_HEADER: [&str; 7] = ["seed", "n", "chosen_map_id", "total", "data_cost", "penalty", "stabilized"];
const COST_KEYS: [&str; 6] = ["map_id", "n", "criterion", "data_cost", "penalty", "total"];

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_as<T: DeserializeOwned>(line: usize, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| anyhow::anyhow!("line {}: {e}", line + 1))
}

fn check_cost_keys(line: usize, v: &Value) -> Result<()> {
    let Some(obj) = v.as_object() else {
        bail!("line {}: expected an object", line + 1);
    };
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    let mut want = COST_KEYS.to_vec();
    want.sort_unstable();
    if keys != want {
        bail!("line {}: keys {keys:?}, expected {want:?}", line + 1);
    }
    Ok(())
}

/// Number of records that parse under `kind`.
pub fn validate(kind: Kind, text: &str) -> Result<usize> {
    match kind {
        Kind::Costs => {
            let mut count = 0;
            for (i, line) in content_lines(text) {
                let v: Value = serde_json::from_str(line).map_err(|e| anyhow::anyhow!("line {}: {e}", i + 1))?;
                check_cost_keys(i, &v)?;
                parse_as::<CostBreakdown>(i, v)?;
                count += 1;
            }
            Ok(count)
        }
        Kind::Traj => {
            let body: String = text
                .lines()
                .filter(|l| !l.starts_with('#'))
                .map(|l| format!("{l}\n"))
                .collect();
            let mut reader = csv::Reader::from_reader(body.as_bytes());
            let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
            if header != TRAJ_HEADER {
                bail!("header {header:?}, expected {TRAJ_HEADER:?}");
            }
            let mut count = 0;
            for row in reader.deserialize::<TrajectoryRow>() {
                row.map_err(|e| anyhow::anyhow!("row {}: {e}", count + 1))?;
                count += 1;
            }
            Ok(count)
        }
        Kind::Maps => {
            let files: Vec<MapFile> = serde_json::from_str(text)?;
            for f in &files {
                load_fsm_map(f)?;
            }
            Ok(files.len())
        }
        Kind::Selection => {
            let mut count = 0;
            for (i, line) in content_lines(text) {
                let v: Value = serde_json::from_str(line).map_err(|e| anyhow::anyhow!("line {}: {e}", i + 1))?;
                let costs = if v.get("selection").is_some() {
                    parse_as::<CountableSearchResult>(i, v.clone())?;
                    v["selection"]["costs"].clone()
                } else {
                    parse_as::<SelectionResult>(i, v.clone())?;
                    v["costs"].clone()
                };
                for c in costs.as_array().into_iter().flatten() {
                    check_cost_keys(i, c)?;
                }
                count += 1;
            }
            Ok(count)
        }
        Kind::Xent => single::<CrossEntropyEstimate>(text),
        Kind::Diagnose => single::<ErgodicityReport>(text),
    }
}

fn single<T: DeserializeOwned>(text: &str) -> Result<usize> {
    let mut count = 0;
    for (i, line) in content_lines(text) {
        let v: Value = serde_json::from_str(line).map_err(|e| anyhow::anyhow!("line {}: {e}", i + 1))?;
        parse_as::<T>(i, v)?;
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_lines() {
        let ok = "{\"map_id\":\"{0,1}\",\"n\":10,\"criterion\":\"icost\",\"data_cost\":null,\"penalty\":1.0,\"total\":null}\n";
        assert_eq!(validate(Kind::Costs, ok).unwrap(), 1);
        let extra = "{\"map_id\":\"x\",\"n\":10,\"criterion\":\"cost\",\"data_cost\":1,\"penalty\":1.0,\"total\":2,\"z\":0}";
        assert!(validate(Kind::Costs, extra).is_err());
    }

    #[test]
    fn traj_header() {
        let ok = "seed,n,chosen_map_id,total,data_cost,penalty,stabilized\n1,100,\"{0,1}\",3.5,1.5,2,true\n";
        assert_eq!(validate(Kind::Traj, ok).unwrap(), 1);
        assert!(validate(Kind::Traj, "seed,n\n1,2\n").is_err());
        assert!(validate(Kind::Traj, "seed,n,chosen_map_id,total,data_cost,penalty,stabilized\nx,1,a,1,1,1,true\n").is_err());
    }
}
