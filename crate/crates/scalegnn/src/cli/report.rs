//! CSV and manifest writers. All outputs are deterministic functions of
//! their inputs (no timestamps), so identical runs produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::CmdError;
use crate::train::{EpochStats, MetricRow, TraceRow};

pub fn write_text(path: &Path, text: &str) -> Result<(), CmdError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Columns: task, model, scale, metric, value, seed.
pub fn metrics_csv(task: &str, model: &str, seed: u64, rows: &[MetricRow]) -> String {
    let mut out = String::from("task,model,scale,metric,value,seed\n");
    for r in rows {
        writeln!(
            out,
            "{task},{model},{},{},{},{seed}",
            r.scale, r.metric, r.value
        )
        .expect("string write");
    }
    out
}

/// One row per controller run: sample id, steps, forced halt, first
/// crossing step, plus the distance and its half for the
/// steps-vs-distance plot.
pub fn trace_csv(traces: &[TraceRow]) -> String {
    let mut out = String::from("sample,distance,steps,forced_halt,first_crossing,min_steps,correct\n");
    for t in traces {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.sample,
            t.distance,
            t.steps,
            t.forced_halt,
            t.steps,
            t.min_steps,
            t.correct.map(|c| c.to_string()).unwrap_or_default()
        )
        .expect("string write");
    }
    out
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_score\n");
    for h in history {
        writeln!(
            out,
            "{},{},{}",
            h.epoch,
            h.train_loss,
            h.val_score.map(|v| v.to_string()).unwrap_or_default()
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_csv_layout() {
        let rows = vec![MetricRow {
            scale: "100".into(),
            metric: "relative_loss".into(),
            value: 0.25,
            count: 10,
        }];
        let csv = metrics_csv("shortest_path", "iter-homo-path", 7, &rows);
        assert_eq!(
            csv,
            "task,model,scale,metric,value,seed\nshortest_path,iter-homo-path,100,relative_loss,0.25,7\n"
        );
    }
}
