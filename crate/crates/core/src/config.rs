//! TOML experiment files.
//!
//! ```toml
//! seed = 1          # optional; the command line and SMMPC_SEED override it
//! runs = 20         # optional Monte Carlo run count, default 1
//!
//! [plant]           # optional; defaults to the benchmark plant
//! num = [0.1159, 0.0, 0.05795, 0.0]
//! den = [1.0, -2.2, 2.42, -1.87, 0.7225]
//! drift = { index = 3, theta0 = 1.87, tau = 1500.0 }
//!
//! [data]
//! length = 50
//! sigma2 = 0.1
//!
//! [online]
//! sigma2_p = 0.1
//! adapt = false     # append each new window to the signal matrix
//! gamma = 1.0       # forgetting factor, in (0, 1]
//! compress = false  # keep the signal matrix at 2L columns
//!
//! [controller]
//! kind = "smm-pc"   # smm-pc | deepc | ideal-mpc | impulse-mpc
//! q = 1.0
//! r = 1.0
//! l0 = 4
//! horizon = 10
//! zeta = 0.0
//! lambda_g = 100.0  # DeePC only
//! lambda_y = 1000.0 # DeePC only
//! # u_min, u_max, y_min, y_max: optional per-step bounds
//! track_discrepancy = false
//!
//! [task]
//! steps = 120
//! reference = { kind = "sine", amplitude = 0.5, period = 20.0 }
//!
//! [sweep]           # optional grids; the scenario set is their product
//! zeta = [0.0, 10.0]
//! gamma = [1.0, 0.9]
//! lambda_g = [10.0, 100.0]
//! l0 = [4, 10]
//! ```
//!
//! Unknown keys are rejected, and every error names its key path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{fmt_param, ControllerConfig, DataConfig, OnlineConfig, PlantConfig, ScenarioConfig, TaskConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default)]
    pub plant: PlantConfig,
    pub data: DataConfig,
    pub online: OnlineConfig,
    pub controller: ControllerConfig,
    pub task: TaskConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// One point of the sweep; `label` is empty without a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub config: ScenarioConfig,
}

impl ExperimentFile {
    /// Parse and validate. Syntax and schema errors carry the key path of
    /// the first problem; semantic errors list every problem.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
            path: "<document>".into(),
            message: e.to_string().trim().to_string(),
        })?;
        let file: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path: if path == "." { "<document>".into() } else { path },
                message: e.into_inner().message().trim().to_string(),
            }
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            path: "<document>".into(),
            message: e.to_string(),
        })
    }

    pub fn runs(&self) -> usize {
        self.runs.unwrap_or(1)
    }

    fn base(&self, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            plant: self.plant.clone(),
            data: self.data,
            online: self.online,
            controller: self.controller,
            task: self.task,
            seed,
        }
    }

    /// Every scenario of the sweep product (in `zeta`, `gamma`, `lambda_g`,
    /// `l0` order, the last varying fastest) under master seed `seed`.
    pub fn scenarios(&self, seed: u64) -> Vec<Scenario> {
        let mut out = vec![Scenario {
            label: String::new(),
            config: self.base(seed),
        }];
        let Some(sweep) = &self.sweep else {
            return out;
        };
        fn expand<T: Copy>(
            out: Vec<Scenario>,
            grid: &Option<Vec<T>>,
            name: &str,
            show: impl Fn(T) -> String,
            set: impl Fn(&mut ScenarioConfig, T),
        ) -> Vec<Scenario> {
            let Some(grid) = grid else { return out };
            let mut next = Vec::with_capacity(out.len() * grid.len());
            for s in &out {
                for &v in grid {
                    let mut config = s.config.clone();
                    set(&mut config, v);
                    let sep = if s.label.is_empty() { "" } else { "_" };
                    next.push(Scenario {
                        label: format!("{}{sep}{name}={}", s.label, show(v)),
                        config,
                    });
                }
            }
            next
        }
        out = expand(out, &sweep.zeta, "zeta", fmt_param, |c, v| c.controller.zeta = v);
        out = expand(out, &sweep.gamma, "gamma", fmt_param, |c, v| c.online.gamma = v);
        out = expand(out, &sweep.lambda_g, "lambda_g", fmt_param, |c, v| {
            c.controller.lambda_g = v
        });
        out = expand(
            out,
            &sweep.l0,
            "l0",
            |v: usize| v.to_string(),
            |c, v| c.controller.l0 = v,
        );
        out
    }

    /// Semantic checks of the base scenario and of every sweep point.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.runs == Some(0) {
            problems.push("runs: must be at least one".to_string());
        }
        if let Some(s) = &self.sweep {
            for (name, len) in [
                ("zeta", s.zeta.as_ref().map(Vec::len)),
                ("gamma", s.gamma.as_ref().map(Vec::len)),
                ("lambda_g", s.lambda_g.as_ref().map(Vec::len)),
                ("l0", s.l0.as_ref().map(Vec::len)),
            ] {
                if len == Some(0) {
                    problems.push(format!("sweep.{name}: grid must not be empty"));
                }
            }
        }
        for sc in self.scenarios(0) {
            for issue in sc.config.issues() {
                let at = if sc.label.is_empty() {
                    String::new()
                } else {
                    format!(" (sweep point {})", sc.label)
                };
                let line = format!("{issue}{at}");
                if !problems.contains(&line) {
                    problems.push(line);
                }
            }
        }
        if problems.is_empty() {
            return Ok(());
        }
        let path = problems[0].split(':').next().unwrap_or_default().to_string();
        Err(Error::Config {
            path,
            message: problems.join("; "),
        })
    }
}
