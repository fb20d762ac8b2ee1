//! File formats for batch and sweep results.

use std::io::{self, Write};

use capture_core::dynamics::trace::SCHEMA_LINE;
use capture_core::experiments::SweepTable;
use capture_core::TrialOutcome;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trials_csv<W: Write>(outcomes: &[TrialOutcome], out: &mut W) -> io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(
        out,
        "index,seed,success,terminal_phase,failure_cause,abort_cause,detach_time,capture_time,end_time"
    )?;
    for o in outcomes {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            o.index,
            o.seed,
            o.success,
            o.terminal_phase,
            o.failure_cause.map(|c| c.as_str()).unwrap_or(""),
            o.abort_cause.map(|c| c.as_str()).unwrap_or(""),
            opt(o.detach_time),
            opt(o.capture_time),
            o.end_time
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: &mut W) -> io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut header = vec!["cell".to_string()];
    header.extend(table.paths.iter().cloned());
    header.extend(["trials", "successes", "estimate", "ci_low", "ci_high"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for c in &table.cells {
        let mut row = vec![c.index.to_string()];
        row.extend(c.values.iter().map(|v| v.to_string()));
        row.push(c.result.trials.to_string());
        row.push(c.result.successes.to_string());
        row.push(c.result.estimate.to_string());
        row.push(c.result.interval.lower.to_string());
        row.push(c.result.interval.upper.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
