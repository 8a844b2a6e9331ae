use std::io::Write;

use super::monte_carlo::{Envelope, McSummary};
use super::RunResult;
use crate::error::Result;

/// Column order of `trajectories.csv`. `E` and `dev` are empty when not evaluated.
pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "r", "u", "y", "y0", "J_t", "E", "dev"];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_trajectories_csv<W: Write>(writer: W, run: &RunResult, deviation: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for t in 0..run.steps() {
        w.write_record([
            t.to_string(),
            num(run.r[t]),
            num(run.u[t]),
            num(run.y[t]),
            num(run.y0[t]),
            num(run.stage_cost[t]),
            opt(run.discrepancy[t]),
            opt(deviation.and_then(|d| d.get(t).copied())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of per-run metrics per run.
pub fn write_runs_csv<W: Write>(writer: W, runs: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "run",
        "steps",
        "J_tot",
        "J_tot_u",
        "mean_g_norm_sq",
        "median_E",
        "fallbacks",
        "failure",
    ])?;
    for r in runs {
        let e = super::stats::Stats::of(&r.discrepancies()).map(|s| s.median);
        w.write_record([
            r.run_index.to_string(),
            r.steps().to_string(),
            num(r.j_tot),
            num(r.j_tot_u),
            opt(r.mean_g_norm_sq()),
            opt(e),
            r.fallbacks.to_string(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_envelope_csv<W: Write>(writer: W, env: &Envelope) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "t",
        "r",
        "u_mean",
        "u_std",
        "y0_mean",
        "y0_std",
        "J_t_mean",
        "J_t_median",
        "dev_mean",
    ])?;
    for t in 0..env.r.len() {
        w.write_record([
            t.to_string(),
            num(env.r[t]),
            num(env.u_mean[t]),
            num(env.u_std[t]),
            num(env.y0_mean[t]),
            num(env.y0_std[t]),
            num(env.stage_cost_mean[t]),
            num(env.stage_cost_median[t]),
            opt(env.deviation_mean.as_ref().map(|d| d[t])),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(mut writer: W, summary: &McSummary) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, summary)?;
    writeln!(writer)?;
    Ok(())
}
