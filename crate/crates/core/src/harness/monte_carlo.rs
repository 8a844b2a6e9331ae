use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{DiscrepancyStats, Stats};
use super::{closed_loop, deviation_from_baseline, RunResult, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run_index: u64,
    pub message: String,
}

/// Aggregates over the completed runs of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub label: String,
    pub seed: u64,
    pub runs: usize,
    pub completed: usize,
    pub failures: Vec<RunFailure>,
    pub j_tot: Option<Stats>,
    pub j_tot_u: Option<Stats>,
    /// Over runs, of each run's time-averaged `||g_t||^2`.
    pub mean_g_norm_sq: Option<Stats>,
    pub discrepancy: Option<DiscrepancyStats>,
    /// Over runs, of each run's time-averaged deviation from the baseline.
    pub deviation: Option<Stats>,
    pub fallback_steps: usize,
}

/// Per-step mean and one-standard-deviation band over completed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub r: Vec<f64>,
    pub u_mean: Vec<f64>,
    pub u_std: Vec<f64>,
    pub y0_mean: Vec<f64>,
    pub y0_std: Vec<f64>,
    pub stage_cost_mean: Vec<f64>,
    pub stage_cost_median: Vec<f64>,
    pub deviation_mean: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub config: ScenarioConfig,
    /// Indexed by run, failed runs included.
    pub runs: Vec<RunResult>,
    /// Per-run `|y0 - y0_base|` series, when a baseline was given.
    pub deviations: Option<Vec<Vec<f64>>>,
    pub summary: McSummary,
    pub envelope: Envelope,
}

/// Run `cfg` for run indices `0..n_runs` on at most `jobs` threads
/// (`0` lets the pool decide). Results are collected in run order, so the
/// output does not depend on scheduling.
pub fn monte_carlo(cfg: &ScenarioConfig, n_runs: usize, jobs: usize) -> Result<McResult> {
    monte_carlo_with_baseline(cfg, n_runs, jobs, None)
}

/// As [`monte_carlo`], also measuring each run against the same-index run of
/// `baseline` (typically the ideal MPC under the same seed).
pub fn monte_carlo_with_baseline(
    cfg: &ScenarioConfig,
    n_runs: usize,
    jobs: usize,
    baseline: Option<&[RunResult]>,
) -> Result<McResult> {
    if n_runs == 0 {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "need at least one run".into(),
        });
    }
    cfg.validate()?;
    if let Some(b) = baseline {
        if b.len() < n_runs {
            return Err(Error::DimensionMismatch {
                context: "baseline runs",
                expected: n_runs,
                actual: b.len(),
            });
        }
    }
    let runs = run_parallel(jobs, || {
        (0..n_runs as u64)
            .into_par_iter()
            .map(|i| closed_loop(cfg, i).unwrap_or_else(|e| failed_run(cfg, i, e)))
            .collect::<Vec<_>>()
    })?;
    let deviations = baseline.map(|b| {
        runs.iter()
            .zip(b)
            .map(|(run, base)| {
                if run.failed() || base.failed() {
                    Vec::new()
                } else {
                    deviation_from_baseline(run, base).map(|d| d.series).unwrap_or_default()
                }
            })
            .collect::<Vec<_>>()
    });
    let summary = summarize(cfg, &runs, deviations.as_deref());
    let envelope = envelope(cfg, &runs, deviations.as_deref());
    Ok(McResult {
        config: cfg.clone(),
        runs,
        deviations,
        summary,
        envelope,
    })
}

pub(crate) fn run_parallel<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "jobs",
            reason: e.to_string(),
        })?;
    Ok(pool.install(f))
}

fn failed_run(cfg: &ScenarioConfig, run_index: u64, e: Error) -> RunResult {
    RunResult {
        label: cfg.label(),
        seed: cfg.seed,
        run_index,
        r: Vec::new(),
        u: Vec::new(),
        y: Vec::new(),
        y0: Vec::new(),
        stage_cost: Vec::new(),
        discrepancy: Vec::new(),
        g_norm_sq: Vec::new(),
        lambda: Vec::new(),
        fallbacks: 0,
        j_tot: 0.0,
        j_tot_u: 0.0,
        failure: Some(e.to_string()),
    }
}

fn summarize(cfg: &ScenarioConfig, runs: &[RunResult], deviations: Option<&[Vec<f64>]>) -> McSummary {
    let done: Vec<&RunResult> = runs.iter().filter(|r| !r.failed()).collect();
    let collect = |f: &dyn Fn(&RunResult) -> Option<f64>| -> Vec<f64> { done.iter().filter_map(|r| f(r)).collect() };
    let e_all: Vec<f64> = done.iter().flat_map(|r| r.discrepancies()).collect();
    let deviation = deviations.and_then(|d| {
        let means: Vec<f64> = runs
            .iter()
            .zip(d)
            .filter(|(r, s)| !r.failed() && !s.is_empty())
            .map(|(_, s)| s.iter().sum::<f64>() / s.len() as f64)
            .collect();
        Stats::of(&means)
    });
    McSummary {
        label: cfg.label(),
        seed: cfg.seed,
        runs: runs.len(),
        completed: done.len(),
        failures: runs
            .iter()
            .filter_map(|r| {
                r.failure.as_ref().map(|m| RunFailure {
                    run_index: r.run_index,
                    message: m.clone(),
                })
            })
            .collect(),
        j_tot: Stats::of(&collect(&|r| Some(r.j_tot))),
        j_tot_u: Stats::of(&collect(&|r| Some(r.j_tot_u))),
        mean_g_norm_sq: Stats::of(&collect(&|r| r.mean_g_norm_sq())),
        discrepancy: DiscrepancyStats::of(&e_all),
        deviation,
        fallback_steps: done.iter().map(|r| r.fallbacks).sum(),
    }
}

fn envelope(cfg: &ScenarioConfig, runs: &[RunResult], deviations: Option<&[Vec<f64>]>) -> Envelope {
    let n = cfg.task.steps;
    let done: Vec<&RunResult> = runs.iter().filter(|r| !r.failed() && r.steps() == n).collect();
    let band = |f: &dyn Fn(&RunResult) -> &[f64]| -> (Vec<f64>, Vec<f64>) {
        (0..n)
            .map(|t| {
                let vals: Vec<f64> = done.iter().map(|r| f(r)[t]).collect();
                Stats::of(&vals).map_or((f64::NAN, f64::NAN), |s| (s.mean, s.std))
            })
            .unzip()
    };
    let (u_mean, u_std) = band(&|r| &r.u);
    let (y0_mean, y0_std) = band(&|r| &r.y0);
    let (stage_cost_mean, stage_cost_median): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|t| {
            let vals: Vec<f64> = done.iter().map(|r| r.stage_cost[t]).collect();
            Stats::of(&vals).map_or((f64::NAN, f64::NAN), |s| (s.mean, s.median))
        })
        .unzip();
    let deviation_mean = deviations.map(|d| {
        let full: Vec<&Vec<f64>> = d.iter().filter(|s| s.len() == n).collect();
        (0..n)
            .map(|t| {
                if full.is_empty() {
                    f64::NAN
                } else {
                    full.iter().map(|s| s[t]).sum::<f64>() / full.len() as f64
                }
            })
            .collect()
    });
    Envelope {
        r: (0..n).map(|t| super::reference(&cfg.task.reference, t)).collect(),
        u_mean,
        u_std,
        y0_mean,
        y0_std,
        stage_cost_mean,
        stage_cost_median,
        deviation_mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::benchmark(seed);
        cfg.task.steps = 15;
        cfg
    }

    #[test]
    fn single_run_summary_equals_run_metrics() {
        let cfg = short(11);
        let mc = monte_carlo(&cfg, 1, 1).unwrap();
        let run = closed_loop(&cfg, 0).unwrap();
        assert_eq!(mc.runs[0], run);
        let j = mc.summary.j_tot.unwrap();
        assert_eq!(
            (j.count, j.median, j.mean, j.q1, j.q3, j.std),
            (1, run.j_tot, run.j_tot, run.j_tot, run.j_tot, 0.0)
        );
        assert_eq!(mc.summary.mean_g_norm_sq.unwrap().median, run.mean_g_norm_sq().unwrap());
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg = short(5);
        let a = monte_carlo(&cfg, 4, 1).unwrap();
        let b = monte_carlo(&cfg, 4, 3).unwrap();
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let mut cfg = short(2);
        assert!(monte_carlo_with_baseline(&cfg, 3, 1, Some(&[])).is_err());
        cfg.task.steps = 0;
        assert!(monte_carlo(&cfg, 2, 1).is_err());
        assert!(monte_carlo(&short(2), 0, 1).is_err());
    }
}
