//! The experiment document: one TOML file describing every command's protocol.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tdlab_core::harness::{
    CurveSelection, MdpShape, RunConfig, RuntimeConfig, Setting, SweepGrid, DEFAULT_BAIRD_RUNS, DEFAULT_CLAMP_CEILING,
    DEFAULT_N_MDPS, DEFAULT_N_RUNS, DEFAULT_N_STEPS, DEFAULT_SEED_ROOT,
};
use tdlab_core::metrics::MetricKind;
use tdlab_core::{Algorithm, Execution, FeatureKind, HyperParams};

use crate::failure::Failure;

pub const CONFIG_VERSION: u32 = 1;
pub const SEED_ENV: &str = "TDLAB_SEED";

/// Shorthand accepted in algorithm lists for "every algorithm the setting allows".
const ALL: &str = "all";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed_root: u64,
    /// Directory that receives every artifact unless `--out` is given.
    pub out: PathBuf,
    pub execution: Execution,
    pub clamp_ceiling: f64,
    pub sweep: SweepSection,
    pub baird: BairdSection,
    pub runtime: RuntimeSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub algorithms: Vec<String>,
    pub setting: Setting,
    pub representation: FeatureKind,
    pub metric: MetricKind,
    pub n_steps: usize,
    pub n_runs: usize,
    pub n_mdps: usize,
    /// Per-run curves written to `raw.csv`: every cell, the best cell, or none.
    pub raw_curves: CurveSelection,
    /// Mean curves written to `aggregated.csv`.
    pub aggregated_curves: CurveSelection,
    pub mdp: MdpShape,
    pub grid: SweepGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BairdSection {
    pub algorithms: Vec<String>,
    pub metric: MetricKind,
    pub n_steps: usize,
    pub n_runs: usize,
    pub raw_curves: CurveSelection,
    pub aggregated_curves: CurveSelection,
    pub grid: SweepGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeSection {
    pub setting: Setting,
    pub n_mdps: usize,
    pub n_runs: usize,
    /// Updates timed per measurement in table mode.
    pub n_steps: usize,
    /// Table mode reports the median over this many timed passes.
    pub repetitions: usize,
    /// Per-iteration budgets in milliseconds for budget mode.
    pub c_values: Vec<f64>,
    pub n_iterations: usize,
    pub alpha: f64,
    pub eta: f64,
    pub lambda: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed_root: DEFAULT_SEED_ROOT,
            out: PathBuf::from("results"),
            execution: Execution::Parallel,
            clamp_ceiling: DEFAULT_CLAMP_CEILING,
            sweep: SweepSection {
                algorithms: vec![ALL.into()],
                setting: Setting::OnPolicy,
                representation: FeatureKind::Tabular,
                metric: MetricKind::Mave,
                n_steps: DEFAULT_N_STEPS,
                n_runs: DEFAULT_N_RUNS,
                n_mdps: DEFAULT_N_MDPS,
                raw_curves: CurveSelection::Best,
                aggregated_curves: CurveSelection::All,
                mdp: MdpShape::default(),
                grid: SweepGrid::random_mdp(),
            },
            baird: BairdSection {
                algorithms: vec![ALL.into()],
                metric: MetricKind::Rmse,
                n_steps: DEFAULT_N_STEPS,
                n_runs: DEFAULT_BAIRD_RUNS,
                raw_curves: CurveSelection::None,
                aggregated_curves: CurveSelection::Best,
                grid: SweepGrid::baird(),
            },
            runtime: RuntimeSection {
                setting: Setting::OnPolicy,
                n_mdps: 5,
                n_runs: 5,
                n_steps: 500,
                repetitions: 11,
                c_values: vec![0.1, 0.5, 1.0, 1.75],
                n_iterations: 200,
                alpha: 0.05,
                eta: 1.0,
                lambda: 0.9,
            },
        }
    }
}

/// Resolves an algorithm list against a setting, reporting every unknown or
/// inapplicable name at once.
pub fn resolve_algorithms(names: &[String], setting: Setting) -> Result<Vec<Algorithm>, Failure> {
    if names.is_empty() {
        return Err(Failure::Config("the algorithm list is empty".into()));
    }
    let allowed = setting.algorithms();
    let mut out = Vec::new();
    let mut unknown = Vec::new();
    let mut excluded = Vec::new();
    for name in names {
        let name = name.trim();
        if name == ALL {
            out.extend(allowed.iter().copied());
            continue;
        }
        match name.parse::<Algorithm>() {
            Ok(a) if allowed.contains(&a) => out.push(a),
            Ok(a) => excluded.push(a.name().to_string()),
            Err(_) => unknown.push(name.to_string()),
        }
    }
    let mut problems = Vec::new();
    if !unknown.is_empty() {
        let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        problems.push(format!("unknown algorithm(s): {} (known: {})", unknown.join(", "), known.join(", ")));
    }
    if !excluded.is_empty() {
        problems.push(format!("on-policy-only algorithm(s) in the {setting} setting: {}", excluded.join(", ")));
    }
    if !problems.is_empty() {
        return Err(Failure::Config(problems.join("; ")));
    }
    let mut seen = Vec::new();
    out.retain(|a| {
        let fresh = !seen.contains(a);
        seen.push(*a);
        fresh
    });
    Ok(out)
}

impl ExperimentConfig {
    pub fn emit(&self) -> Result<String, Failure> {
        toml::to_string(self).map_err(|e| Failure::Config(format!("cannot serialise config: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let config: Self = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| match f {
            Failure::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies the `TDLAB_SEED` override, if set.
    pub fn apply_env(&mut self) -> Result<(), Failure> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed_root = v
                .trim()
                .parse()
                .map_err(|_| Failure::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
            self.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the emitted document.
    pub fn hash(&self) -> Result<String, Failure> {
        let digest = Sha256::digest(self.emit()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let cfg = |e: tdlab_core::Error| Failure::Config(e.to_string());
        if self.version != CONFIG_VERSION {
            return Err(Failure::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.seed_root > i64::MAX as u64 {
            return Err(Failure::Config(format!("seed_root {} does not fit a signed 64-bit integer", self.seed_root)));
        }
        let s = &self.sweep;
        if s.setting == Setting::Baird {
            return Err(Failure::Config("sweep.setting must be on-policy or off-policy; use the [baird] section".into()));
        }
        for a in resolve_algorithms(&s.algorithms, s.setting)? {
            self.sweep_config(a, s.setting, s.representation).validate().map_err(cfg)?;
        }
        s.grid.validate().map_err(|e| Failure::Config(format!("sweep.grid: {e}")))?;
        let b = &self.baird;
        for a in resolve_algorithms(&b.algorithms, Setting::Baird)? {
            self.baird_config(a, b.metric).validate().map_err(cfg)?;
        }
        b.grid.validate().map_err(|e| Failure::Config(format!("baird.grid: {e}")))?;
        let r = &self.runtime;
        if r.setting == Setting::Baird {
            return Err(Failure::Config("runtime.setting must be on-policy or off-policy".into()));
        }
        if r.n_mdps == 0 || r.n_runs == 0 || r.n_steps == 0 || r.repetitions == 0 || r.n_iterations == 0 {
            return Err(Failure::Config("runtime counts must be positive".into()));
        }
        self.runtime_hp()?;
        validate_budgets(&r.c_values)
    }

    pub fn sweep_config(&self, algorithm: Algorithm, setting: Setting, representation: FeatureKind) -> RunConfig {
        let s = &self.sweep;
        let mut c = RunConfig::new(algorithm, setting, representation);
        c.metric = s.metric;
        c.n_steps = s.n_steps;
        c.n_runs = s.n_runs;
        c.n_mdps = s.n_mdps;
        c.seed_root = self.seed_root;
        c.clamp_ceiling = self.clamp_ceiling;
        c.mdp_shape = s.mdp;
        c.execution = self.execution;
        c.raw = s.raw_curves;
        c
    }

    pub fn baird_config(&self, algorithm: Algorithm, metric: MetricKind) -> RunConfig {
        let b = &self.baird;
        let mut c = RunConfig::new(algorithm, Setting::Baird, FeatureKind::Baird);
        c.metric = metric;
        c.n_steps = b.n_steps;
        c.n_runs = b.n_runs;
        c.seed_root = self.seed_root;
        c.clamp_ceiling = self.clamp_ceiling;
        c.execution = self.execution;
        c.raw = b.raw_curves;
        c
    }

    pub fn runtime_hp(&self) -> Result<HyperParams, Failure> {
        let r = &self.runtime;
        HyperParams::new(r.alpha, r.eta, r.lambda).map_err(|e| Failure::Config(format!("runtime: {e}")))
    }

    pub fn runtime_config(&self, setting: Setting) -> Result<RuntimeConfig, Failure> {
        let r = &self.runtime;
        let mut c = RuntimeConfig::new(setting);
        c.n_mdps = r.n_mdps;
        c.n_runs = r.n_runs;
        c.n_steps = r.n_steps;
        c.repetitions = r.repetitions;
        c.seed_root = self.seed_root;
        c.mdp_shape = self.sweep.mdp;
        c.hp = self.runtime_hp()?;
        Ok(c)
    }
}

pub fn validate_budgets(c_values: &[f64]) -> Result<(), Failure> {
    if c_values.is_empty() {
        return Err(Failure::Config("the list of budgets is empty".into()));
    }
    if let Some(c) = c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Failure::Config(format!("budget {c} ms must be positive and finite")));
    }
    Ok(())
}
