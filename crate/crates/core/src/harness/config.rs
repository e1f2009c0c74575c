//! Experiment configuration: a TOML document validated before any compute.
//!
//! ```toml
//! experiment = "gp-concentration"
//! seed = 20240501
//! replicates = 2000
//! schedule = [5, 10, 20, 40]
//! taus = [1.0, 2.0]
//!
//! [gp]
//! resolution = 513
//! kernel = { kind = "matern", s = 2.0, d = 1 }
//! fit = { model = "polynomial", from = 10, to = 40 }
//! ```

use crate::bounds::DecaySpec;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::real::Precision;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Greedy,
    GpConcentration,
    Chi2,
    Spheres,
    BoundTable,
}

impl ExperimentKind {
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentKind::Greedy => "greedy",
            ExperimentKind::GpConcentration => "gp-concentration",
            ExperimentKind::Chi2 => "chi2",
            ExperimentKind::Spheres => "spheres",
            ExperimentKind::BoundTable => "bound-table",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Monte-Carlo replicates `M`; 0 gives a bound-only report.
    #[serde(default)]
    pub replicates: usize,
    /// Design sizes `n`.
    #[serde(default)]
    pub schedule: Vec<usize>,
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp: Option<GpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi2: Option<Chi2Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spheres: Option<SpheresConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_table: Option<BoundTableConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Matern { s: f64, d: usize },
    Gaussian { d: usize },
}

impl KernelConfig {
    pub fn spec(&self) -> Result<KernelSpec> {
        match *self {
            KernelConfig::Matern { s, d } => KernelSpec::matern(s, d),
            KernelConfig::Gaussian { d } => KernelSpec::gaussian(d),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            KernelConfig::Matern { d, .. } | KernelConfig::Gaussian { d } => d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `log c_n` against `log(n+1)`.
    Polynomial,
    /// `log c_n` against `n^{1/α}`.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub model: FitModel,
    /// Stretch `α` of the exponential model.
    #[serde(default = "one")]
    pub alpha: f64,
    /// Regression range `from ≤ n ≤ to`; `to` defaults to the last measured `n`.
    #[serde(default = "first")]
    pub from: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    /// Below this `R²` the fit is reported as failed.
    #[serde(default = "default_r2")]
    pub min_r2: f64,
}

fn one() -> f64 {
    1.0
}

fn first() -> usize {
    1
}

fn default_r2() -> f64 {
    0.9
}

fn default_budget() -> f64 {
    1e-8
}

/// Assertions turned into report checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpExpectations {
    /// Fitted log-log (or log-linear) slope must not exceed this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_r2: Option<f64>,
    /// `log` of the model-free bound is concave in `n` over the schedule.
    #[serde(default)]
    pub concave_log_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub kernel: KernelConfig,
    /// Points per axis of the uniform grid that serves as candidate set and path grid.
    pub resolution: usize,
    #[serde(default)]
    pub precision: Precision,
    /// Relative trace mass the Karhunen–Loève sampler may discard.
    #[serde(default = "default_budget")]
    pub tail_budget: f64,
    pub fit: FitConfig,
    #[serde(default)]
    pub expect: GpExpectations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightFamily {
    /// `b_j = scale·ratio^j`.
    Geometric { scale: f64, ratio: f64 },
    /// `b_j = coef·j^{−exponent}`.
    Power { coef: f64, exponent: f64 },
    Finite { values: Vec<f64> },
    /// `len` weights drawn uniformly from `[0, 1)` with the master seed.
    RandomFinite { len: usize },
}

impl WeightFamily {
    pub fn label(&self) -> String {
        match self {
            WeightFamily::Geometric { scale, ratio } => format!("geometric({scale},{ratio})"),
            WeightFamily::Power { coef, exponent } => format!("power({coef},{exponent})"),
            WeightFamily::Finite { values } if values.len() <= 4 => format!("finite{values:?}"),
            WeightFamily::Finite { values } => format!("finite(len={})", values.len()),
            WeightFamily::RandomFinite { len } => format!("random-finite({len})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chi2Config {
    pub families: Vec<WeightFamily>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpheresConfig {
    pub d1: usize,
    pub d2: usize,
    pub c: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jmax: Option<usize>,
    #[serde(default)]
    pub explicit_degree: usize,
    /// Truncation degree of the grid operator-norm check; omitted skips it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_degree: Option<usize>,
    /// Allowed excess of the median-error slope over `−α`.
    #[serde(default = "default_slope_slack")]
    pub slope_slack: f64,
}

fn default_slope_slack() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundTableConfig {
    pub decay: DecaySpec,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML used for hashing and for the manifest.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Built-in configurations, named as listed by [`PRESETS`].
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "greedy" => GREEDY,
            "gp-matern" => GP_MATERN,
            "gp-gaussian" => GP_GAUSSIAN,
            "chi2" => CHI2,
            "spheres" => SPHERES,
            "bound-table" => BOUND_TABLE,
            _ => {
                return Err(config_err(format!(
                    "unknown preset {name:?}; available: {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Self::from_toml(text)
    }

    /// Preset used when a subcommand is given no configuration.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let name = match kind {
            ExperimentKind::Greedy => "greedy",
            ExperimentKind::GpConcentration => "gp-matern",
            ExperimentKind::Chi2 => "chi2",
            ExperimentKind::Spheres => "spheres",
            ExperimentKind::BoundTable => "bound-table",
        };
        Self::preset(name).expect("presets are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let present = [
            ("gp", self.gp.is_some()),
            ("chi2", self.chi2.is_some()),
            ("spheres", self.spheres.is_some()),
            ("bound_table", self.bound_table.is_some()),
        ];
        let want = match self.experiment {
            ExperimentKind::Greedy | ExperimentKind::GpConcentration => "gp",
            ExperimentKind::Chi2 => "chi2",
            ExperimentKind::Spheres => "spheres",
            ExperimentKind::BoundTable => "bound_table",
        };
        for (name, is) in present {
            if (name == want) != is {
                return Err(config_err(if is {
                    format!("section [{name}] does not apply to experiment {}", self.experiment.id())
                } else {
                    format!("experiment {} needs a [{name}] section", self.experiment.id())
                }));
            }
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(config_err(format!("tau must be positive and finite, got {t}")));
        }
        let needs_taus = self.experiment != ExperimentKind::Greedy;
        if needs_taus && self.taus.is_empty() {
            return Err(Error::EmptySchedule("tau list is empty".into()));
        }
        let needs_schedule = self.experiment != ExperimentKind::Chi2;
        if needs_schedule && self.schedule.is_empty() {
            return Err(Error::EmptySchedule("n schedule is empty".into()));
        }
        if self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("schedule must be strictly increasing"));
        }
        if self.replicates > 0 && self.replicates < 100 {
            return Err(config_err(format!(
                "replicates must be 0 (bounds only) or at least 100, got {}",
                self.replicates
            )));
        }
        match self.experiment {
            ExperimentKind::Greedy | ExperimentKind::GpConcentration => {
                self.validate_gp(self.gp.as_ref().unwrap())?
            }
            ExperimentKind::Chi2 => self.validate_chi2(self.chi2.as_ref().unwrap())?,
            ExperimentKind::Spheres => self.validate_spheres(self.spheres.as_ref().unwrap())?,
            ExperimentKind::BoundTable => {
                let b = self.bound_table.as_ref().unwrap();
                b.decay.validate().map_err(|e| config_err(e.to_string()))?;
                if self.schedule[0] == 0 {
                    return Err(config_err("closed-form bounds need n >= 1"));
                }
            }
        }
        Ok(())
    }

    fn validate_gp(&self, gp: &GpConfig) -> Result<()> {
        gp.kernel.spec().map_err(|e| config_err(e.to_string()))?;
        if gp.resolution < 2 {
            return Err(config_err("resolution must be at least 2"));
        }
        let m = gp
            .resolution
            .checked_pow(gp.kernel.dim() as u32)
            .filter(|m| *m <= 20_000)
            .ok_or_else(|| config_err("grid larger than 20000 points"))?;
        let nmax = *self.schedule.last().unwrap();
        if nmax >= m {
            return Err(config_err(format!("schedule reaches n = {nmax} on a grid of {m} points")));
        }
        if !(gp.tail_budget > 0.0 && gp.tail_budget <= 0.05) {
            return Err(config_err(format!("tail_budget must lie in (0, 0.05], got {}", gp.tail_budget)));
        }
        let f = &gp.fit;
        if !(f.alpha > 0.0 && f.alpha.is_finite()) {
            return Err(config_err(format!("fit alpha must be positive, got {}", f.alpha)));
        }
        let to = f.to.unwrap_or(nmax);
        if to > nmax || to < f.from + 1 {
            return Err(config_err(format!(
                "fit range [{}, {to}] must hold two points within the schedule (max {nmax})",
                f.from
            )));
        }
        Ok(())
    }

    fn validate_chi2(&self, c: &Chi2Config) -> Result<()> {
        if c.families.is_empty() {
            return Err(Error::EmptySchedule("no weight families".into()));
        }
        if self.replicates > 0 && self.replicates < 1000 {
            return Err(config_err("chi-square runs need at least 1000 replicates"));
        }
        for f in &c.families {
            if let WeightFamily::RandomFinite { len: 0 } = f {
                return Err(config_err("random-finite family needs len >= 1"));
            }
            super::experiments::weights(f, self.seed, 0).map_err(|e| config_err(e.to_string()))?;
        }
        Ok(())
    }

    fn validate_spheres(&self, s: &SpheresConfig) -> Result<()> {
        if self.schedule[0] == 0 {
            return Err(config_err("sphere bounds need n >= 1"));
        }
        if let Some(j) = s.operator_degree {
            if s.d1 + s.d2 > 2 && j > 8 {
                return Err(config_err("operator check above degree 8 is only supported on the torus"));
            }
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 6] = ["greedy", "gp-matern", "gp-gaussian", "chi2", "spheres", "bound-table"];

const GREEDY: &str = r#"
experiment = "greedy"
seed = 20240500
schedule = [1, 2, 4, 8, 16, 32, 64]

[gp]
resolution = 513
kernel = { kind = "matern", s = 2.0, d = 1 }
fit = { model = "polynomial", from = 10 }
"#;

const GP_MATERN: &str = r#"
experiment = "gp-concentration"
seed = 20240501
replicates = 2000
schedule = [5, 10, 20, 40]
taus = [1.0, 2.0]

[gp]
resolution = 513
kernel = { kind = "matern", s = 2.0, d = 1 }
tail_budget = 1e-8
fit = { model = "polynomial", from = 10, to = 40 }
expect = { max_slope = -1.7 }
"#;

const GP_GAUSSIAN: &str = r#"
experiment = "gp-concentration"
seed = 20240502
replicates = 2000
schedule = [4, 8, 16, 32]
taus = [1.0, 2.0]

[gp]
resolution = 513
kernel = { kind = "gaussian", d = 1 }
precision = "extended"
tail_budget = 1e-80
fit = { model = "exponential", from = 4, to = 32 }
expect = { min_r2 = 0.98, concave_log_bound = true }
"#;

const CHI2: &str = r#"
experiment = "chi2"
seed = 20240503
replicates = 100000
taus = [0.5, 1.0, 2.0, 3.0]

[chi2]
families = [
    { kind = "finite", values = [1.0] },
    { kind = "geometric", scale = 1.0, ratio = 0.5 },
    { kind = "power", coef = 1.0, exponent = 2.0 },
    { kind = "random-finite", len = 20 },
]
"#;

const SPHERES: &str = r#"
experiment = "spheres"
seed = 20240504
replicates = 2000
schedule = [2, 3, 4, 6, 8, 11, 16]
taus = [1.0, 2.0]

[spheres]
d1 = 1
d2 = 1
c = 1.0
alpha = 1.0
explicit_degree = 16
operator_degree = 16
"#;

const BOUND_TABLE: &str = r#"
experiment = "bound-table"
seed = 0
schedule = [1, 2, 5, 10, 20, 50, 100]
taus = [0.5, 1.0, 5.0]

[bound_table]
decay = { kind = "polynomial", c = 1.0, alpha = 3.0 }
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_roundtrip() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(c, again, "{name}");
        }
        assert!(matches!(ExperimentConfig::preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ExperimentConfig::default_for(ExperimentKind::Chi2).to_toml();
        let unknown = base.replace("seed = 20240503", "seed = 20240503\nsed = 3");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(Error::Config(_))));
        let no_taus = base.replace("taus = [0.5, 1.0, 2.0, 3.0]", "taus = []");
        assert!(matches!(ExperimentConfig::from_toml(&no_taus), Err(Error::EmptySchedule(_))));
        let neg = base.replace("taus = [0.5, 1.0, 2.0, 3.0]", "taus = [-1.0]");
        assert!(matches!(ExperimentConfig::from_toml(&neg), Err(Error::Config(_))));

        let mut gp = ExperimentConfig::default_for(ExperimentKind::GpConcentration);
        gp.schedule = vec![10, 5];
        assert!(gp.validate().is_err());
        gp.schedule = vec![5, 600];
        assert!(gp.validate().is_err());
        gp.schedule = vec![5, 10];
        gp.chi2 = Some(Chi2Config { families: vec![] });
        assert!(gp.validate().is_err());

        let mut gp = ExperimentConfig::default_for(ExperimentKind::GpConcentration);
        gp.gp.as_mut().unwrap().kernel = KernelConfig::Matern { s: 0.5, d: 1 };
        assert!(gp.validate().is_err());
        let mut gp = ExperimentConfig::default_for(ExperimentKind::GpConcentration);
        gp.replicates = 5;
        assert!(gp.validate().is_err());
    }

    #[test]
    fn bound_only_configs_are_valid() {
        let mut c = ExperimentConfig::default_for(ExperimentKind::GpConcentration);
        c.replicates = 0;
        c.validate().unwrap();
    }
}
