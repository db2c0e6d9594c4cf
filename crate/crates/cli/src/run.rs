use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use spectral_shift::properties::{run_property_suites, PropertyOutcome};
use spectral_shift::sweep::{run_sweep_with, verify_expansion_with, SweepOptions, SweepTable, Verdict};
use spectral_shift::LeadingCoefficient;

use crate::config::RunConfig;

/// Result of a full sweep run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub table: SweepTable,
    pub verdict: Verdict,
    pub summary: String,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.verdict.all_pass()
    }
}

/// Runs the sweep, verifies it and writes `sweep.csv`, `verdict.json` and
/// `summary.txt` into the output directory.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let threads = config.threads.or(SweepOptions::from_env().threads);
    let opts = config.tolerances.sweep_options(threads);
    let table = run_sweep_with(&config.model, &config.schedule, &opts)?;
    let verdict = verify_expansion_with(&table, &config.model, &config.tolerances.verify_options());
    let summary = summarize(config, &table, &verdict);

    let out = &config.output;
    fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
    fs::write(out.csv_path(), table.to_csv()).with_context(|| format!("writing {}", out.csv_path().display()))?;
    fs::write(out.verdict_path(), verdict.to_json())
        .with_context(|| format!("writing {}", out.verdict_path().display()))?;
    fs::write(out.summary_path(), &summary).with_context(|| format!("writing {}", out.summary_path().display()))?;
    Ok(RunReport {
        table,
        verdict,
        summary,
    })
}

fn summarize(config: &RunConfig, table: &SweepTable, verdict: &Verdict) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model            {}", table.model);
    let _ = writeln!(s, "mode index       {}", table.mode_index);
    let _ = writeln!(s, "lambda_0         {:.12e}", table.lambda_0);
    match table.coefficient {
        LeadingCoefficient::Linear(c) => {
            let _ = writeln!(s, "coefficient      {c:.12e}");
        }
        LeadingCoefficient::CapacityRatio => {
            let _ = writeln!(s, "coefficient      capacity law");
        }
    }
    let tracked: Vec<String> = table.rows.iter().map(|r| r.tracked_index.to_string()).collect();
    let _ = writeln!(
        s,
        "tracked modes    [{}] ({} of {} rows tracked)",
        tracked.join(", "),
        table.rows.len() - table.failed_rows(),
        table.rows.len()
    );
    let _ = writeln!(
        s,
        "schedule         {} points, {:e} .. {:e}",
        config.schedule.len(),
        config.schedule[0],
        config.schedule[config.schedule.len() - 1]
    );
    match &verdict.shift_fit {
        Some(f) => {
            let _ = writeln!(
                s,
                "shift slope      {:.6} (r² {:.6}, {} points, {} below noise floor)",
                f.slope, f.r_squared, f.points_used, f.excluded
            );
        }
        None => {
            let _ = writeln!(s, "shift slope      n/a (too few points above the noise floor)");
        }
    }
    let _ = writeln!(s);
    for c in &verdict.checks {
        let _ = writeln!(
            s,
            "{}  {:<30} expected {:<12.6e} measured {:<12.6e} tolerance {:.3e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check,
            c.expected,
            c.measured,
            c.tolerance
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{}",
        if verdict.all_pass() {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
    s
}

/// Runs the randomized property suites.
pub fn check(seed: u64, instances: usize) -> Result<Vec<PropertyOutcome>> {
    Ok(run_property_suites(seed, instances)?)
}
