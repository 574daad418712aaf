//! Run configuration: one TOML file with a section per module.
//!
//! Every key has a default, unknown keys are rejected by name, and
//! `--set a.b=value` edits the parsed tree before it is typed.

use std::path::{Path, PathBuf};

use fourier_kinetic::bobylev::{SolveConfig, StabilityOptions};
use fourier_kinetic::charfun::{AnalyticCharFn, GridSpec};
use fourier_kinetic::dsmc::DsmcConfig;
use fourier_kinetic::interp::Interpolation;
use fourier_kinetic::kernel::{AngularKernel, RegularPart};
use fourier_kinetic::povzner::{PovznerQuadrature, PovznerSuiteConfig};
use fourier_kinetic::verify::VerifyConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config does not parse: {0}")]
    Syntax(String),
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Flat kernel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    /// `constant`, `power_law` or `tabulated`.
    pub kind: String,
    pub level: f64,
    pub s: f64,
    pub k: f64,
    /// Exponent `p` of an optional `cos^p θ` regular part.
    pub cos_power: Option<f64>,
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
    /// Table given on `[0, π]` rather than `(0, π/2]`.
    pub full_range: bool,
    pub cutoff: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            kind: "constant".into(),
            level: 1.0,
            s: 0.25,
            k: 1.0,
            cos_power: None,
            theta: Vec::new(),
            values: Vec::new(),
            full_range: false,
            cutoff: None,
        }
    }
}

impl KernelSection {
    pub fn build(&self) -> Result<AngularKernel<f64>, ConfigError> {
        let invalid = |e: fourier_kinetic::Error| ConfigError::Invalid(e.to_string());
        let base = match self.kind.as_str() {
            "constant" => AngularKernel::constant(self.level),
            "power_law" => match self.cos_power {
                Some(p) => AngularKernel::power_law_with(self.s, self.k, RegularPart::CosPower { p }),
                None => AngularKernel::power_law(self.s, self.k),
            },
            "tabulated" if self.full_range => {
                AngularKernel::tabulated_full_range(self.theta.clone(), self.values.clone()).map_err(invalid)?
            }
            "tabulated" => AngularKernel::tabulated(self.theta.clone(), self.values.clone()).map_err(invalid)?,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "kernel.kind `{other}` is not one of constant, power_law, tabulated"
                )))
            }
        };
        let k = match self.cutoff {
            Some(n) => base.with_cutoff(n),
            None => base,
        };
        k.validate().map_err(invalid)?;
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub interpolation: Interpolation,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { interpolation: Interpolation::Spline }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSection {
    pub exponents: Vec<f64>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self { exponents: vec![0.0, 0.5, 1.0, 1.5, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub alpha: f64,
    pub beta: f64,
    /// Read the datum from a charfun CSV instead of `[initial]`.
    pub source_csv: Option<PathBuf>,
    /// Second datum for the distances; none are computed when absent.
    pub other: Option<AnalyticCharFn<f64>>,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self { alpha: 1.5, beta: 1.0, source_csv: None, other: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySection {
    pub alphas: Vec<f64>,
    /// Classify the lift `(1 − Δ)^n φ` instead, reporting `∫|v|^α⟨v⟩^{2n} dF`.
    pub lift: Option<usize>,
}

impl Default for ClassifySection {
    fn default() -> Self {
        Self { alphas: vec![0.5, 1.0, 1.5], lift: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub perturbed: AnalyticCharFn<f64>,
    pub options: StabilityOptions<f64>,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self { perturbed: AnalyticCharFn::gaussian(1.1), options: StabilityOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitSection {
    pub levels: Vec<f64>,
}

impl Default for LimitSection {
    fn default() -> Self {
        Self { levels: vec![4.0, 8.0, 16.0, 32.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PovznerSection {
    pub suite: PovznerSuiteConfig,
    pub quadrature: PovznerQuadrature<f64>,
    /// Limit on the relative momentum, energy and `Y + Z cos ϕ` defects.
    pub identity_tol: f64,
    /// Limit on `|K|` for the linear test function and on `max(−H)`.
    pub sign_tol: f64,
    /// Limit on the relative spread of the two fitted `G` constants.
    pub spread_limit: f64,
}

impl Default for PovznerSection {
    fn default() -> Self {
        Self {
            suite: PovznerSuiteConfig::default(),
            quadrature: PovznerQuadrature::default(),
            identity_tol: 1e-12,
            sign_tol: 1e-12,
            spread_limit: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DsmcSection {
    pub run: DsmcConfig,
    /// Moment index `n` and exponent `α` of the tracked `|v|^{2n+α}`.
    pub moment_n: u32,
    pub moment_alpha: f64,
    pub records: usize,
}

impl Default for DsmcSection {
    fn default() -> Self {
        Self { run: DsmcConfig::default(), moment_n: 1, moment_alpha: 1.0, records: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Criteria to run; all when empty.
    pub criteria: Vec<usize>,
    /// Exit 1 on any failure, including the criteria known to be unattainable.
    pub strict: bool,
    pub suite: VerifyConfig,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { criteria: Vec::new(), strict: false, suite: VerifyConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub run: RunSection,
    pub kernel: KernelSection,
    pub grid: GridSpec<f64>,
    pub initial: AnalyticCharFn<f64>,
    pub solver: SolveConfig<f64>,
    pub constants: ConstantsSection,
    pub norms: NormsSection,
    pub classify: ClassifySection,
    pub stability: StabilitySection,
    pub limit: LimitSection,
    pub povzner: PovznerSection,
    pub dsmc: DsmcSection,
    pub verify: VerifySection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            run: RunSection::default(),
            kernel: KernelSection::default(),
            grid: GridSpec::default(),
            initial: AnalyticCharFn::gaussian(1.0),
            solver: SolveConfig::default(),
            constants: ConstantsSection::default(),
            norms: NormsSection::default(),
            classify: ClassifySection::default(),
            stability: StabilitySection::default(),
            limit: LimitSection::default(),
            povzner: PovznerSection::default(),
            dsmc: DsmcSection::default(),
            verify: VerifySection::default(),
        }
    }
}

impl Config {
    /// Sets every seed in the configuration.
    pub fn set_seed(&mut self, seed: u64) {
        self.dsmc.run.seed = seed;
        self.povzner.suite.seed = seed;
        self.verify.suite.seed = seed;
        self.verify.suite.dsmc.seed = seed;
        self.verify.suite.povzner.seed = seed;
    }

    pub fn seeds(&self) -> serde_json::Value {
        serde_json::json!({
            "dsmc": self.dsmc.run.seed,
            "povzner": self.povzner.suite.seed,
            "verify": self.verify.suite.seed,
            "verify_dsmc": self.verify.suite.dsmc.seed,
            "verify_povzner": self.verify.suite.povzner.seed,
        })
    }
}

/// Parses an override value as TOML, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(spec.into()));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::Override(format!("{spec}: `{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), override_value(raw.trim()));
    Ok(())
}

/// Reads `path` (or starts from defaults), applies overrides and rejects
/// unknown keys.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::Read { path: p.display().to_string(), source: e })?,
        None => String::new(),
    };
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut unknown = Vec::new();
    let cfg: Config = serde_ignored::deserialize(toml::Value::Table(table), |path| unknown.push(path.to_string()))
        .map_err(|e| {
            let msg = e.to_string();
            match msg.strip_prefix("unknown field ") {
                Some(rest) => ConfigError::UnknownKeys(vec![rest.to_string()]),
                None => ConfigError::Syntax(msg),
            }
        })?;
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys(unknown));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = parse("", &[]).unwrap();
        assert_eq!(cfg, Config::default());
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse(&text, &[]).unwrap(), cfg);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = parse("", &["solver.alpha=0.9".into(), "kernel.kind=power_law".into(), "kernel.cutoff=10".into()]).unwrap();
        assert_eq!(cfg.solver.alpha, 0.9);
        assert_eq!(cfg.kernel.kind, "power_law");
        assert_eq!(cfg.kernel.cutoff, Some(10.0));
        assert!(matches!(parse("", &["solver".into()]), Err(ConfigError::Override(_))));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse("[solver]\nalpah = 1.0\n", &[]).unwrap_err();
        assert!(err.to_string().contains("alpah"), "{err}");
        let err = parse("[nosuch]\nx = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("nosuch"), "{err}");
    }

    #[test]
    fn families_parse_from_tables() {
        let cfg = parse(
            "[initial]\nfamily = \"mixture\"\ncomponents = [{ weight = 0.5, family = \"gaussian\", variance = 1.0 }, \
             { weight = 0.5, family = \"dirac_pair\", radius = 2.0 }]\n",
            &[],
        )
        .unwrap();
        assert!(matches!(cfg.initial, AnalyticCharFn::Mixture { ref components } if components.len() == 2));
    }
}
