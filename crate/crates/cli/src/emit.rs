//! Report files.
//!
//! `report.json` is the full serialized report (byte-identical across runs
//! with the same config and seed). The CSVs are plot-ready views: UTF-8,
//! LF, header row, accuracies with 6 fixed decimals. `timing.csv` carries
//! the wall-clock training times and is the one file that differs between
//! otherwise identical runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fedscore_core::sim::{summarize, ExperimentReport};
use fedscore_core::{Error, Result};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write report.json, accuracy.csv, summary.csv, global_accuracy.csv,
/// payload.csv and timing.csv under `out_dir`, returning the paths written.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<()> {
        let path = out_dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
        Ok(())
    };

    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::ConfigInvalid(format!("report serialization: {e}")))?;
    json.push('\n');
    emit("report.json", json)?;

    let mut acc = String::from("iteration,client,local_accuracy,global_accuracy\n");
    for iter in &report.iterations {
        for c in &iter.clients {
            let _ = writeln!(
                acc,
                "{},{},{:.6},{:.6}",
                iter.iteration, c.id, c.local_accuracy, c.global_accuracy
            );
        }
    }
    emit("accuracy.csv", acc)?;

    emit("summary.csv", summary_csv(report))?;

    let mut glob = String::from("iteration,global_accuracy\n");
    for iter in &report.iterations {
        let _ = writeln!(glob, "{},{:.6}", iter.iteration, iter.global_accuracy);
    }
    emit("global_accuracy.csv", glob)?;

    let mut pay = String::from("iteration,client,score_payload_bytes,weight_payload_bytes,ratio\n");
    for iter in &report.iterations {
        for c in &iter.clients {
            let _ = writeln!(
                pay,
                "{},{},{},{},{:.6}",
                iter.iteration, c.id, c.score_payload_bytes, c.weight_payload_bytes, c.payload_ratio
            );
        }
    }
    emit("payload.csv", pay)?;

    let mut timing = String::from("iteration,client,train_ms\n");
    for iter in &report.iterations {
        for c in &iter.clients {
            let _ = writeln!(timing, "{},{},{:.3}", iter.iteration, c.id, c.train_ms);
        }
    }
    emit("timing.csv", timing)?;

    Ok(written)
}

/// The summary.csv content for an already-written report, as a string
/// (used by the `summarize` subcommand).
pub fn summary_csv(report: &ExperimentReport) -> String {
    let summary = summarize(report);
    let mut out = String::from("user,local_mean,global_mean,increase\n");
    for u in &summary.users {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            u.id, u.local_mean, u.global_mean, u.increase
        );
    }
    let _ = writeln!(
        out,
        "average,{:.6},{:.6},{:.6}",
        summary.overall_local, summary.overall_global, summary.overall_increase
    );
    out
}

/// Read a report back from report.json.
pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))
}
