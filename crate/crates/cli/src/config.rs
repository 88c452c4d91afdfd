//! Run configuration: a single JSON file plus dotted-path overrides.

use std::f64::consts::PI;
use std::fmt;

use nuloss_core::coeffs::{NuFunction, NuSpec};
use nuloss_core::counterexample::FamilyConfig;
use nuloss_core::exprlang::parse;
use nuloss_core::modesolve::SolverOptions;
use nuloss_core::spectral::Boundary;
use nuloss_core::zones::ZoneParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub coefficient: CoefficientConfig,
    pub zones: ZonesConfig,
    pub solver: SolverConfig,
    pub counterexample: CounterexampleConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Periodic,
}

impl From<BoundaryKind> for Boundary {
    fn from(b: BoundaryKind) -> Boundary {
        match b {
            BoundaryKind::Dirichlet => Boundary::Dirichlet,
            BoundaryKind::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub length: f64,
    pub potential: String,
    pub boundary: BoundaryKind,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { length: PI, potential: "0".into(), boundary: BoundaryKind::Dirichlet }
    }
}

/// `"log"`, `"constant"` or any other bare string (read as an expression in
/// `t`), or a tagged object such as `{"kind": "log_power", "gamma": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NuConfig {
    Tag(String),
    Spec(NuSpec),
}

impl NuConfig {
    pub fn spec(&self) -> NuSpec {
        match self {
            NuConfig::Spec(s) => s.clone(),
            NuConfig::Tag(tag) => match tag.as_str() {
                "log" => NuSpec::Log,
                "constant" => NuSpec::Constant { c: 1.0 },
                expr => NuSpec::Custom { expr: expr.to_string() },
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientConfig {
    pub b: String,
    pub nu: NuConfig,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig { b: "2 + sin(log(1/t))".into(), nu: NuConfig::Tag("log".into()), horizon: (-1.0f64).exp() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZonesConfig {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "P")]
    pub p: i64,
}

impl Default for ZonesConfig {
    fn default() -> Self {
        ZonesConfig { m: 16.0, p: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig { rel_tol: d.rel_tol, abs_tol: d.abs_tol }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub epsilon: f64,
    pub p: u32,
    pub k_max: usize,
    pub psi_r: f64,
    pub a0: i64,
    pub c1: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        let d = FamilyConfig::default();
        CounterexampleConfig { epsilon: d.epsilon, p: d.p, k_max: d.k_count, psi_r: d.psi_r, a0: d.a0, c1: d.c1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "nuloss-out".into(), format: OutputFormat::Csv }
    }
}

impl RunConfig {
    /// Reads `source` (JSON text; empty means all defaults), applies the
    /// `section.key=value` overrides in order and validates the result.
    pub fn load(source: Option<&str>, overrides: &[String]) -> Result<RunConfig> {
        let mut tree: Value = match source {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| ConfigError(format!("config is not valid JSON: {e} (byte {})", byte_offset(text, &e))))?,
            None => Value::Object(Default::default()),
        };
        if !tree.is_object() {
            return err("config must be a JSON object");
        }
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let config: RunConfig = serde_json::from_value(tree).map_err(|e| ConfigError(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.length > 0.0 && d.length.is_finite()) {
            return err(format!("domain.length must be positive, got {}", d.length));
        }
        check_expr("domain.potential", &d.potential)?;
        check_expr("coefficient.b", &self.coefficient.b)?;
        if let NuSpec::Custom { expr } = self.coefficient.nu.spec() {
            check_expr("coefficient.nu", &expr)?;
        }
        if !(self.coefficient.horizon > 0.0 && self.coefficient.horizon.is_finite()) {
            return err(format!("coefficient.T must be positive, got {}", self.coefficient.horizon));
        }
        if !(self.zones.m > 0.0 && self.zones.m.is_finite()) {
            return err(format!("zones.M must be positive, got {}", self.zones.m));
        }
        if self.zones.p < 0 || self.zones.p > 60 {
            return err(format!("zones.P must lie in [0, 60], got {}", self.zones.p));
        }
        for (what, v) in [("solver.rel_tol", self.solver.rel_tol), ("solver.abs_tol", self.solver.abs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return err(format!("{what} must lie in (0, 1), got {v}"));
            }
        }
        let c = &self.counterexample;
        if !(c.epsilon > 0.0 && c.epsilon.is_finite()) {
            return err(format!("counterexample.epsilon must be positive, got {}", c.epsilon));
        }
        if c.k_max == 0 {
            return err("counterexample.k_max must be at least 1");
        }
        if !(c.psi_r > 0.0 && c.c1.is_finite()) {
            return err("counterexample.psi_r must be positive and c1 finite");
        }
        if self.output.dir.is_empty() {
            return err("output.dir must not be empty");
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration in canonical JSON.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { rel_tol: self.solver.rel_tol, abs_tol: self.solver.abs_tol }
    }

    pub fn zone_params(&self) -> ZoneParams {
        ZoneParams::new(self.zones.m, self.zones.p as u32).expect("validated zone parameters")
    }

    pub fn nu(&self) -> nuloss_core::Result<NuFunction> {
        NuFunction::new(self.coefficient.nu.spec(), self.coefficient.horizon)
    }

    pub fn family_config(&self) -> FamilyConfig {
        let c = &self.counterexample;
        FamilyConfig {
            epsilon: c.epsilon,
            zone_p: self.zones.p as u32,
            p: c.p,
            a0: c.a0,
            k_count: c.k_max,
            c1: c.c1,
            psi_r: c.psi_r,
        }
    }
}

fn check_expr(field: &str, source: &str) -> Result<()> {
    parse(source).map(|_| ()).map_err(|e| ConfigError(format!("{field}: {e}")))
}

fn byte_offset(text: &str, e: &serde_json::Error) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(e.line().saturating_sub(1)).map(str::len).sum();
    line_start + e.column().saturating_sub(1)
}

/// `section.key=value`; the value is read as JSON when it parses and as a
/// plain string otherwise.
fn apply_override(tree: &mut Value, assignment: &str) -> Result<()> {
    let Some((path, raw)) = assignment.split_once('=') else {
        return err(format!("override `{assignment}` needs the form section.key=value"));
    };
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        return err(format!("override path `{path}` needs at least section.key"));
    }
    let mut node = tree;
    for key in &keys[..keys.len() - 1] {
        let map = node.as_object_mut().ok_or_else(|| ConfigError(format!("`{path}` does not name a leaf")))?;
        node = map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(keys[keys.len() - 1].to_string(), value);
            Ok(())
        }
        None => err(format!("`{path}` does not name a leaf")),
    }
}
