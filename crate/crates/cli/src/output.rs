//! CSV artifact writers. Floating-point values use the shortest exact
//! representation, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use qfqs::optimizer::Trajectory;

/// Header `sweep,unit,cost,evaluations`, one row per record. A local-to-global
/// cost switch is marked with a `# switch=global` comment line before the first
/// record of the switch sweep.
pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut text = String::from("sweep,unit,cost,evaluations\n");
    for record in &trajectory.records {
        if trajectory.switch_sweep == Some(record.sweep) && record.unit == 1 {
            text.push_str("# switch=global\n");
        }
        writeln!(
            text,
            "{},{},{},{}",
            record.sweep, record.unit, record.cost, record.evaluations
        )
        .expect("string write");
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Per-seed final costs and evaluation counts, then aggregate rows.
pub fn write_summary(
    path: &Path,
    rows: impl Iterator<Item = (u64, f64, u64)>,
) -> Result<()> {
    let rows: Vec<(u64, f64, u64)> = rows.collect();
    let mut text = String::from("seed,final_cost,evaluations\n");
    for (seed, cost, evals) in &rows {
        writeln!(text, "{seed},{cost},{evals}").expect("string write");
    }
    if !rows.is_empty() {
        let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
        let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        writeln!(text, "mean,{mean},").expect("string write");
        writeln!(text, "min,{min},").expect("string write");
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `t,infidelity` series.
pub fn write_series(path: &Path, series: &[(f64, f64)]) -> Result<()> {
    let mut text = String::from("t,infidelity\n");
    for (t, v) in series {
        writeln!(text, "{t},{v}").expect("string write");
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
