//! Run-directory comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Manifest;
use crate::analysis::{tier_deviation, Deviation};
use crate::propagator::ObservableSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub id: String,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub a: String,
    pub b: String,
    pub runs: Vec<RunComparison>,
}

impl CompareReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} vs {}", self.a, self.b);
        for r in &self.runs {
            let _ = writeln!(s, "{}:", r.id);
            for c in &r.deviation.columns {
                let _ = writeln!(s, "  {:<8} rms {:.3e}  max {:.3e}", c.name, c.rms, c.max);
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn load_series(dir: &Path, id: &str) -> Result<ObservableSeries> {
    let path = dir.join(format!("{id}.csv"));
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    ObservableSeries::read_csv(&text)
}

/// Per-run deviation tables between two run directories with the same run ids.
pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let ma = Manifest::read(dir_a)?;
    let mb = Manifest::read(dir_b)?;
    let ids_a: Vec<&str> = ma.runs.iter().map(|r| r.id.as_str()).collect();
    let ids_b: Vec<&str> = mb.runs.iter().map(|r| r.id.as_str()).collect();
    if ids_a != ids_b {
        return Err(Error::Analysis(format!(
            "run identity mismatch: [{}] vs [{}]",
            ids_a.join(", "),
            ids_b.join(", ")
        )));
    }
    let mut runs = Vec::new();
    for id in ids_a {
        let a = load_series(dir_a, id)?;
        let b = load_series(dir_b, id)?;
        let deviation = tier_deviation(&a, &b).map_err(|e| Error::Run {
            run: id.to_string(),
            source: Box::new(e),
        })?;
        runs.push(RunComparison {
            id: id.to_string(),
            deviation,
        });
    }
    Ok(CompareReport {
        a: dir_a.display().to_string(),
        b: dir_b.display().to_string(),
        runs,
    })
}
