//! The bundled scenario suite and its summary table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};

use crate::runner::{run, Outcome, Overrides, Status};
use crate::scenario::{self, Scenario};

/// Scenarios compiled into the binary, in run order.
pub const BUNDLED: &[(&str, &str)] = &[
    ("halfplane_exact.json", include_str!("../scenarios/halfplane_exact.json")),
    ("tilted_plane_strict_increase.json", include_str!("../scenarios/tilted_plane_strict_increase.json")),
    ("truncated_y_constant.json", include_str!("../scenarios/truncated_y_constant.json")),
    ("v_cone_monotone.json", include_str!("../scenarios/v_cone_monotone.json")),
    ("two_lines_general_h.json", include_str!("../scenarios/two_lines_general_h.json")),
    ("halfplane_relaxed.json", include_str!("../scenarios/halfplane_relaxed.json")),
    ("competitor_collapse.json", include_str!("../scenarios/competitor_collapse.json")),
];

/// Scenarios with the directory their relative paths resolve against.
pub fn load_dir(dir: &Path) -> Result<Vec<(Scenario, PathBuf)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    if files.is_empty() {
        bail!("no scenario files in {}", dir.display());
    }
    files.iter().map(|f| scenario::load(f)).collect()
}

pub fn load_bundled() -> Result<Vec<(Scenario, PathBuf)>> {
    BUNDLED
        .iter()
        .map(|(name, text)| Ok((scenario::parse(text).with_context(|| format!("bundled {name}"))?, PathBuf::from("."))))
        .collect()
}

pub struct SuiteResult {
    pub outcomes: Vec<(Outcome, f64)>,
    pub table: String,
}

impl SuiteResult {
    pub fn status(&self) -> Status {
        self.outcomes.iter().map(|(o, _)| o.status()).max().unwrap_or(Status::Pass)
    }
}

/// Runs scenarios one after another and tabulates every verdict.
pub fn run_all(scenarios: Vec<(Scenario, PathBuf)>, overrides: &Overrides, out_dir: &Path) -> Result<SuiteResult> {
    let mut outcomes = Vec::new();
    let mut table = format!("{:<30} {:<24} {:<8} {:<13} {:>11} {:>9}\n", "scenario", "check", "expected", "got", "margin", "time_s");
    let total = Instant::now();
    for (mut s, base) in scenarios {
        overrides.apply(&mut s);
        let start = Instant::now();
        let outcome = run(&s, &base).with_context(|| format!("scenario {}", s.name))?;
        let elapsed = start.elapsed().as_secs_f64();
        outcome.write(out_dir)?;
        for v in &outcome.verdicts {
            let got = format!("{:?}", v.got).to_lowercase();
            let mark = if v.status() == Status::Pass { "" } else { " *" };
            let _ = writeln!(
                table,
                "{:<30} {:<24} {:<8} {:<13} {:>11.3e} {:>9.3}{mark}",
                s.name,
                v.action,
                format!("{:?}", v.expected).to_lowercase(),
                got,
                v.margin,
                v.runtime_s
            );
        }
        outcomes.push((outcome, elapsed));
    }
    let mut result = SuiteResult { outcomes, table };
    let _ = writeln!(
        result.table,
        "{} scenarios, status {:?}, total {:.2} s",
        result.outcomes.len(),
        result.status(),
        total.elapsed().as_secs_f64()
    );
    Ok(result)
}
