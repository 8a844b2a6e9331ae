//! Built-in presets for the six benchmark studies.
//!
//! Each study runs a fixed set of controller configurations under one master
//! seed. Run `i` of every configuration shares the offline data and the
//! measurement noise of run `i` of every other, so medians compare paired
//! samples. The ideal MPC is always included and doubles as the baseline for
//! the per-step output deviation.
//!
//! | id | setting | configurations |
//! |----|---------|----------------|
//! | 1 | `N = 50`, `sigma^2 = sigma_p^2 = 0.1` | SMM-PC with discrepancy tracking, plain and compressed |
//! | 2 | as 1 | SMM-PC, DeePC over a 9-point `lambda_g` grid in `[10, 1000]` with `lambda_y = 1000` |
//! | 3 | `N = 100`, `sigma^2 = sigma_p^2 = 1` | SMM-PC fixed and adaptive (`gamma = 1`) |
//! | 4 | drifting plant, `N = 50`, `sigma^2 = sigma_p^2 = 0.01` | fixed, adaptive with `gamma` in `{1, 0.9, 0.7, 0.5}` |
//! | 5 | as 3 | SMM-PC with `L0` in `{4, 10}`, fixed and adaptive; impulse MPC |
//! | 6 | as 1 | SMM-PC with `zeta` in `{0, 1, 10, 1e2, 1e3, 1e4}` |

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    fmt_param, monte_carlo, monte_carlo_with_baseline, write_envelope_csv, write_runs_csv, write_summary_json,
    write_trajectories_csv, ControllerKind, McResult, McSummary, ScenarioConfig, Stats,
};
use crate::plant::DriftSpec;

pub const EXAMPLE_IDS: std::ops::RangeInclusive<u8> = 1..=6;

/// The nine-point logarithmic `lambda_g` grid between 10 and 1000.
pub fn lambda_g_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(1.0 + k as f64 / 4.0)).collect()
}

pub const GAMMAS: [f64; 4] = [1.0, 0.9, 0.7, 0.5];
pub const ZETAS: [f64; 6] = [0.0, 1.0, 10.0, 1e2, 1e3, 1e4];

pub fn default_runs(id: u8) -> Result<usize> {
    Ok(match id {
        1 => 10,
        3 => 200,
        2 | 4 | 5 | 6 => 50,
        _ => return Err(unknown(id)),
    })
}

pub fn title(id: u8) -> Result<&'static str> {
    Ok(match id {
        1 => "linearized vs iterated predictor discrepancy",
        2 => "SMM-PC vs oracle-tuned regularized DeePC",
        3 => "online data adaptation under heavy noise",
        4 => "forgetting factor under a drifting plant",
        5 => "initial-condition horizon and impulse MPC",
        6 => "prediction-variance regularization",
        _ => return Err(unknown(id)),
    })
}

fn unknown(id: u8) -> Error {
    Error::InvalidParameter {
        name: "example",
        reason: format!("unknown example id {id}, expected 1..=6"),
    }
}

fn noisy(mut cfg: ScenarioConfig, length: usize, sigma2: f64) -> ScenarioConfig {
    cfg.data.length = length;
    cfg.data.sigma2 = sigma2;
    cfg.online.sigma2_p = sigma2;
    cfg
}

fn adaptive(mut cfg: ScenarioConfig, gamma: f64) -> ScenarioConfig {
    cfg.online.adapt = true;
    cfg.online.gamma = gamma;
    cfg
}

/// Configurations of study `id`, the ideal MPC last.
pub fn presets(id: u8, seed: u64) -> Result<Vec<ScenarioConfig>> {
    let base = ScenarioConfig::benchmark(seed);
    let mut out = match id {
        1 => {
            let mut plain = base.clone();
            plain.controller.track_discrepancy = true;
            let mut compressed = plain.clone();
            compressed.online.compress = true;
            vec![plain, compressed]
        }
        2 => {
            let mut v = vec![base.clone()];
            for lg in lambda_g_grid() {
                let mut c = base.clone().with_kind(ControllerKind::Deepc);
                c.controller.lambda_g = lg;
                c.controller.lambda_y = 1000.0;
                v.push(c);
            }
            v
        }
        3 => {
            let b = noisy(base.clone(), 100, 1.0);
            vec![b.clone(), adaptive(b, 1.0)]
        }
        4 => {
            let mut b = noisy(base.clone(), 50, 0.01);
            b.plant.drift = Some(DriftSpec::benchmark());
            let mut v = vec![b.clone()];
            v.extend(GAMMAS.iter().map(|&g| adaptive(b.clone(), g)));
            v
        }
        5 => {
            let b = noisy(base.clone(), 100, 1.0);
            let mut v = Vec::new();
            for l0 in [4, 10] {
                let mut c = b.clone();
                c.controller.l0 = l0;
                v.push(c.clone());
                v.push(adaptive(c.clone(), 1.0));
                v.push(c.with_kind(ControllerKind::ImpulseMpc));
            }
            v
        }
        6 => ZETAS
            .iter()
            .map(|&z| {
                let mut c = base.clone();
                c.controller.zeta = z;
                c
            })
            .collect(),
        _ => return Err(unknown(id)),
    };
    let mpc_base = out[0].clone();
    out.push(mpc_base.with_kind(ControllerKind::IdealMpc));
    Ok(out)
}

/// Label of a configuration within its study; unique within each preset.
pub fn config_label(cfg: &ScenarioConfig) -> String {
    let mut s = cfg.label();
    if cfg.online.compress && cfg.controller.kind == ControllerKind::SmmPc {
        s += "_compressed";
    }
    if cfg.controller.kind == ControllerKind::SmmPc && cfg.controller.zeta == 0.0 && cfg.controller.track_discrepancy {
        s += "_tracked";
    }
    s
}

/// An ordinal claim checked on the study's medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Part of the study's acceptance criterion (the rest are reported only).
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub id: u8,
    pub title: String,
    pub seed: u64,
    pub runs: usize,
    pub labels: Vec<String>,
    pub summaries: Vec<McSummary>,
    pub verdicts: Vec<Verdict>,
    /// The DeePC configuration chosen a posteriori by median total cost.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().filter(|v| v.required).all(|v| v.passed)
    }
}

pub struct Reproduction {
    pub report: Report,
    pub results: Vec<McResult>,
}

impl Reproduction {
    pub fn result(&self, label: &str) -> Option<&McResult> {
        self.report
            .labels
            .iter()
            .position(|l| l == label)
            .map(|i| &self.results[i])
    }

    /// Plain-text comparison table and verdicts.
    pub fn render(&self) -> String {
        let r = &self.report;
        let mut s = format!("example {}: {} ({} runs, seed {})\n", r.id, r.title, r.runs, r.seed);
        s += &format!(
            "{:<40} {:>5} {:>11} {:>11} {:>11} {:>11} {:>11}\n",
            "configuration", "done", "J_tot q1", "J_tot med", "J_tot q3", "J_u med", "|g|^2 med"
        );
        for (label, sum) in r.labels.iter().zip(&r.summaries) {
            let j = sum.j_tot.as_ref();
            s += &format!(
                "{:<40} {:>5} {:>11} {:>11} {:>11} {:>11} {:>11}\n",
                label,
                sum.completed,
                cell(j.map(|x| x.q1)),
                cell(j.map(|x| x.median)),
                cell(j.map(|x| x.q3)),
                cell(sum.j_tot_u.as_ref().map(|x| x.median)),
                cell(sum.mean_g_norm_sq.as_ref().map(|x| x.median)),
            );
        }
        if let Some(o) = &r.oracle {
            s += &format!("oracle DeePC: {o}\n");
        }
        for v in &r.verdicts {
            let tag = match (v.passed, v.required) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "MISS",
            };
            s += &format!("[{tag}] {}: {}\n", v.name, v.detail);
        }
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

/// Run study `id` with `runs` Monte Carlo runs per configuration on at most
/// `jobs` threads (`0` for the default pool size).
pub fn reproduce(id: u8, runs: usize, seed: u64, jobs: usize) -> Result<Reproduction> {
    let configs = presets(id, seed)?;
    let mpc = configs.last().expect("presets end with the ideal MPC");
    let baseline = monte_carlo(mpc, runs, jobs)?;
    let mut results = Vec::with_capacity(configs.len());
    for cfg in &configs[..configs.len() - 1] {
        results.push(monte_carlo_with_baseline(cfg, runs, jobs, Some(&baseline.runs))?);
    }
    results.push(monte_carlo_with_baseline(mpc, runs, jobs, Some(&baseline.runs))?);
    let labels: Vec<String> = configs.iter().map(config_label).collect();
    let summaries: Vec<McSummary> = results.iter().map(|r| r.summary.clone()).collect();
    let mut report = Report {
        id,
        title: title(id)?.into(),
        seed,
        runs,
        labels,
        summaries,
        verdicts: Vec::new(),
        oracle: None,
    };
    verdicts(&mut report, &results);
    Ok(Reproduction { report, results })
}

fn median_j(s: &McSummary) -> f64 {
    s.j_tot.as_ref().map_or(f64::NAN, |x| x.median)
}

fn verdict(name: &str, passed: bool, detail: String, required: bool) -> Verdict {
    Verdict {
        name: name.into(),
        passed,
        detail,
        required,
    }
}

fn by_label<'a>(report: &'a Report, label: &str) -> &'a McSummary {
    let i = report
        .labels
        .iter()
        .position(|l| l == label)
        .unwrap_or_else(|| panic!("missing configuration {label}"));
    &report.summaries[i]
}

fn verdicts(report: &mut Report, results: &[McResult]) {
    let mut out = Vec::new();
    let mpc = median_j(by_label(report, "ideal-mpc"));
    match report.id {
        1 => {
            let s = by_label(report, "smm-pc_l0=4_fixed_tracked");
            match &s.discrepancy {
                Some(d) => {
                    out.push(verdict(
                        "median discrepancy below 5%",
                        d.stats.median < 0.05,
                        format!("median E = {:.4}", d.stats.median),
                        true,
                    ));
                    out.push(verdict(
                        "at least 80% of steps below 10%",
                        d.fraction_below_10pct >= 0.8,
                        format!(
                            "fraction = {:.4} (below 5%: {:.4})",
                            d.fraction_below_10pct, d.fraction_below_5pct
                        ),
                        true,
                    ));
                }
                None => out.push(verdict("discrepancy recorded", false, "no samples".into(), true)),
            }
            let worst = max_input_gap(&results[0], &results[1]);
            out.push(verdict(
                "compression leaves applied inputs unchanged",
                worst < 1e-6,
                format!("max |u - u_compressed| = {worst:.3e}"),
                true,
            ));
        }
        2 => {
            let smm = median_j(by_label(report, "smm-pc_l0=4_fixed"));
            let (best_label, best) = report
                .labels
                .iter()
                .zip(&report.summaries)
                .filter(|(l, _)| l.starts_with("deepc"))
                .map(|(l, s)| (l.clone(), median_j(s)))
                .fold(
                    (String::new(), f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            out.push(verdict(
                "SMM-PC beats oracle-tuned DeePC",
                smm < best,
                format!("median J_tot {smm:.4} vs {best:.4} ({best_label})"),
                true,
            ));
            let dev = |l: &str| by_label(report, l).deviation.as_ref().map_or(f64::NAN, |d| d.median);
            let (d_smm, d_deepc) = (dev("smm-pc_l0=4_fixed"), dev(&best_label));
            out.push(verdict(
                "DeePC deviates more from the ideal MPC",
                d_deepc > d_smm,
                format!("median mean |y0 - y0_mpc| {d_deepc:.4} vs {d_smm:.4}"),
                false,
            ));
            report.oracle = Some(best_label);
        }
        3 => {
            let fixed = by_label(report, "smm-pc_l0=4_fixed");
            let adapt = by_label(report, "smm-pc_l0=4_adaptive_gamma=1");
            let (f, a) = (median_j(fixed), median_j(adapt));
            out.push(verdict(
                "adaptation lowers the median cost",
                a < f,
                format!("median J_tot adaptive {a:.4} vs fixed {f:.4}"),
                true,
            ));
            out.push(verdict(
                "adaptive stays above the ideal MPC",
                a > mpc,
                format!("median J_tot adaptive {a:.4} vs MPC {mpc:.4}"),
                true,
            ));
            let d = |s: &McSummary| s.deviation.as_ref().map_or(f64::NAN, |d| d.median);
            out.push(verdict(
                "adaptation reduces the deviation from the ideal MPC",
                d(adapt) < d(fixed),
                format!("median mean |y0 - y0_mpc| {:.4} vs {:.4}", d(adapt), d(fixed)),
                false,
            ));
        }
        4 => {
            let g = |gamma: f64| {
                median_j(by_label(
                    report,
                    &format!("smm-pc_l0=4_adaptive_gamma={}", fmt_param(gamma)),
                ))
            };
            let (g1, g09, g05) = (g(1.0), g(0.9), g(0.5));
            out.push(verdict(
                "gamma = 0.9 beats gamma = 1",
                g09 < g1,
                format!("median J_tot {g09:.4} vs {g1:.4}"),
                true,
            ));
            out.push(verdict(
                "gamma = 0.9 beats gamma = 0.5",
                g09 < g05,
                format!("median J_tot {g09:.4} vs {g05:.4}"),
                true,
            ));
            let fixed = median_j(by_label(report, "smm-pc_l0=4_fixed"));
            out.push(verdict(
                "adaptation beats the fixed matrix",
                g09 < fixed,
                format!("median J_tot {g09:.4} vs fixed {fixed:.4}"),
                false,
            ));
        }
        5 => {
            let m = |l: &str| median_j(by_label(report, l));
            let a4 = m("smm-pc_l0=4_adaptive_gamma=1");
            let a10 = m("smm-pc_l0=10_adaptive_gamma=1");
            let f4 = m("smm-pc_l0=4_fixed");
            let imp4 = m("impulse-mpc_l0=4");
            out.push(verdict(
                "L0 = 10 beats L0 = 4 with adaptation",
                a10 < a4,
                format!("median J_tot {a10:.4} vs {a4:.4}"),
                true,
            ));
            out.push(verdict(
                "fixed L0 = 4 no better than impulse MPC",
                f4 >= imp4,
                format!("median J_tot {f4:.4} vs impulse {imp4:.4}"),
                true,
            ));
            let imp10 = m("impulse-mpc_l0=10");
            out.push(verdict(
                "adaptive L0 = 10 beats impulse MPC",
                a10 < imp10,
                format!("median J_tot {a10:.4} vs impulse {imp10:.4}"),
                false,
            ));
        }
        6 => {
            let sums: Vec<&McSummary> = ZETAS
                .iter()
                .map(|&z| {
                    let label = if z == 0.0 {
                        "smm-pc_l0=4_fixed".to_string()
                    } else {
                        format!("smm-pc_l0=4_fixed_zeta={}", fmt_param(z))
                    };
                    by_label(report, &label)
                })
                .collect();
            let med = |f: fn(&McSummary) -> Option<&Stats>| -> Vec<f64> {
                sums.iter().map(|s| f(s).map_or(f64::NAN, |x| x.median)).collect()
            };
            let g = med(|s| s.mean_g_norm_sq.as_ref());
            let ju = med(|s| s.j_tot_u.as_ref());
            let j = med(|s| s.j_tot.as_ref());
            let g_rises: Vec<usize> = (1..g.len()).filter(|&k| !(g[k] <= g[k - 1])).collect();
            let g_ok = g_rises.len() <= 1 && g_rises.iter().all(|&k| g[k] <= 1.02 * g[k - 1]);
            out.push(verdict(
                "time-averaged ||g||^2 nonincreasing in zeta",
                g_ok,
                format!("medians {}", join(&g)),
                true,
            ));
            let ju_ok = (1..ju.len()).all(|k| ju[k] <= ju[k - 1]);
            out.push(verdict(
                "input cost nonincreasing in zeta",
                ju_ok,
                format!("medians {}", join(&ju)),
                true,
            ));
            let (first, last) = (j[0], j[j.len() - 1]);
            let interior = j[1..j.len() - 1].iter().cloned().fold(f64::INFINITY, f64::min);
            out.push(verdict(
                "an interior zeta beats both ends",
                interior < first && interior < last,
                format!("medians {}", join(&j)),
                true,
            ));
        }
        _ => {}
    }
    report.verdicts = out;
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn max_input_gap(a: &McResult, b: &McResult) -> f64 {
    a.runs
        .iter()
        .zip(&b.runs)
        .map(|(x, y)| {
            if x.u.len() != y.u.len() {
                return f64::INFINITY;
            }
            x.u.iter().zip(&y.u).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| io_err(path, e))
}

/// Files of one Monte Carlo study in `dir`: `trajectories.csv` (run 0),
/// `runs.csv`, `envelope.csv` and `summary.json`.
pub fn write_mc_result(dir: &Path, result: &McResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    if let Some(run) = result.runs.first() {
        let dev = result.deviations.as_ref().map(|d| d[0].as_slice());
        write_trajectories_csv(create(&dir.join("trajectories.csv"))?, run, dev)?;
    }
    write_runs_csv(create(&dir.join("runs.csv"))?, &result.runs)?;
    write_envelope_csv(create(&dir.join("envelope.csv"))?, &result.envelope)?;
    write_summary_json(create(&dir.join("summary.json"))?, &result.summary)?;
    Ok(())
}

const METRICS: [&str; 4] = ["J_tot", "J_tot_u", "mean_g_norm_sq", "dev"];

/// `comparison.csv`: one row per configuration with the order statistics
/// of total cost, input cost, time-averaged `||g||^2` and mean deviation.
pub fn write_comparison_csv<W: std::io::Write>(writer: W, labels: &[String], summaries: &[McSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string(), "runs".into(), "completed".into()];
    for m in METRICS {
        for s in ["min", "q1", "median", "q3", "max", "mean", "std"] {
            header.push(format!("{m}_{s}"));
        }
    }
    w.write_record(&header)?;
    for (label, sum) in labels.iter().zip(summaries) {
        let mut row = vec![label.clone(), sum.runs.to_string(), sum.completed.to_string()];
        for st in [&sum.j_tot, &sum.j_tot_u, &sum.mean_g_norm_sq, &sum.deviation] {
            match st {
                Some(s) => row.extend(
                    [s.min, s.q1, s.median, s.q3, s.max, s.mean, s.std]
                        .iter()
                        .map(|v| format!("{v:e}")),
                ),
                None => row.extend(std::iter::repeat_n(String::new(), 7)),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram of pooled discrepancy samples: bins of width 0.01 on `[0, 0.2)`
/// plus one open bin.
pub fn write_discrepancy_histogram<W: std::io::Write>(writer: W, samples: &[f64]) -> Result<()> {
    let mut counts = [0usize; 21];
    for &e in samples {
        let k = ((e / 0.01).floor() as usize).min(20);
        counts[k] += 1;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lower", "upper", "count"])?;
    for (k, c) in counts.iter().enumerate() {
        let lo = format!("{:e}", k as f64 * 0.01);
        let hi = if k == 20 {
            "inf".to_string()
        } else {
            format!("{:e}", (k + 1) as f64 * 0.01)
        };
        w.write_record([lo, hi, c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write every output of a reproduction under `out`.
pub fn write_reproduction(out: &Path, rep: &Reproduction) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    for (label, res) in rep.report.labels.iter().zip(&rep.results) {
        write_mc_result(&out.join(label), res)?;
    }
    write_comparison_csv(
        create(&out.join("comparison.csv"))?,
        &rep.report.labels,
        &rep.report.summaries,
    )?;
    if rep.report.id == 1 {
        let e: Vec<f64> = rep.results[0]
            .runs
            .iter()
            .filter(|r| !r.failed())
            .flat_map(|r| r.discrepancies())
            .collect();
        write_discrepancy_histogram(create(&out.join("e_histogram.csv"))?, &e)?;
    }
    let mut f = create(&out.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, &rep.report)?;
    std::io::Write::write_all(&mut f, b"\n")?;
    Ok(())
}
