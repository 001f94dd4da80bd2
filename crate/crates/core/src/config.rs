//! Experiment configuration: the checked-in defaults merged with user files,
//! environment overrides and `key.path=value` assignments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::borchers::{CommutatorOptions, Generator, LongoWittenOptions};
use crate::innerfunc::InnerFunction;
use crate::scatter::ScatterOptions;
use crate::smatrix::{Deformation, LightrayShift};

/// The defaults file, compiled in.
pub const DEFAULTS: &str = include_str!("../defaults.toml");
/// Overrides `out_dir` when set.
pub const OUT_DIR_ENV: &str = "BORCHERS_LAB_OUT";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key.path=value")]
    Override(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    SKappa,
    SPhi,
    SPhiFermi,
    Massive,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::SKappa => "s_kappa",
            Model::SPhi => "s_phi",
            Model::SPhiFermi => "s_phi_fermi",
            Model::Massive => "massive",
        }
    }

    pub fn default_checks(self) -> Vec<CheckKind> {
        use CheckKind::*;
        match self {
            Model::SKappa | Model::SPhi => vec![
                Inner,
                Axioms,
                Gamma,
                CrossConstruction,
                PairPhases,
                LongoWitten,
                Cyclicity,
                Scattering,
            ],
            Model::SPhiFermi => vec![Inner, Axioms, PairPhases, LongoWitten],
            Model::Massive => vec![MassiveAxioms, MassiveSweep],
        }
    }

    fn supports(self, check: CheckKind) -> bool {
        use CheckKind::*;
        match check {
            MassiveAxioms | MassiveSweep => self == Model::Massive,
            Inner | Axioms | PairPhases | LongoWitten | Gamma => self != Model::Massive,
            CrossConstruction | Cyclicity | Scattering | WedgeCommutators => {
                matches!(self, Model::SKappa | Model::SPhi)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Inner,
    Axioms,
    Gamma,
    CrossConstruction,
    PairPhases,
    WedgeCommutators,
    LongoWitten,
    Cyclicity,
    Scattering,
    MassiveAxioms,
    MassiveSweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub modes: usize,
    pub cutoff: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub grid_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub exact: f64,
    pub unimodular: f64,
    pub leakage: f64,
    pub cross: f64,
    pub inner: f64,
    pub pair_phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerConfig {
    pub random_count: usize,
    pub max_zeros: usize,
    pub test_points: usize,
    pub test_extent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub left: Vec<Generator>,
    pub right: Vec<Generator>,
    pub shifts: Vec<LightrayShift>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicityConfig {
    pub modes: usize,
    pub cutoff: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub max_len: usize,
    pub min_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassiveConfig {
    pub theta_min: f64,
    pub theta_max: f64,
    pub points: usize,
    pub mass: f64,
    pub cutoff: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub seed: u64,
    pub kappa: f64,
    pub checks: Vec<CheckKind>,
    pub out_dir: PathBuf,
    pub phi: InnerFunction,
    pub basis: BasisConfig,
    pub tolerances: Tolerances,
    pub inner: InnerConfig,
    pub generators: GeneratorConfig,
    pub wedge_commutators: CommutatorOptions,
    pub longo_witten: LongoWittenOptions,
    pub cyclicity: CyclicityConfig,
    pub scatter: ScatterOptions,
    pub massive: MassiveConfig,
}

impl ExperimentConfig {
    /// The requested checks, or the model's default list when none are given.
    pub fn resolved_checks(&self) -> Vec<CheckKind> {
        if self.checks.is_empty() {
            self.model.default_checks()
        } else {
            self.checks.clone()
        }
    }

    /// The deformation of a massless model.
    pub fn deformation(&self) -> Option<Deformation> {
        match self.model {
            Model::SKappa => Some(Deformation::Kappa { kappa: self.kappa }),
            Model::SPhi => Some(Deformation::Phi { phi: self.phi.clone() }),
            Model::SPhiFermi => Some(Deformation::PhiFermionic { phi: self.phi.clone() }),
            Model::Massive => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.kappa.is_finite()) || (self.model == Model::SKappa && self.kappa < 0.0) {
            return bad(format!("kappa must be finite and non-negative, got {}", self.kappa));
        }
        if self.model == Model::SPhi && !self.phi.is_symmetric() {
            return bad("model s_phi needs a symmetric scattering function".into());
        }
        if self.basis.modes == 0 || self.basis.modes > self.basis.grid_points {
            return bad(format!(
                "basis.modes must lie in 1..={}, got {}",
                self.basis.grid_points, self.basis.modes
            ));
        }
        if self.generators.left.is_empty() || self.generators.right.is_empty() {
            return bad("generator lists must be nonempty".into());
        }
        if self.wedge_commutators.levels.is_empty() {
            return bad("wedge_commutators.levels must be nonempty".into());
        }
        if self.massive.points == 0 {
            return bad("massive.points must be positive".into());
        }
        for c in self.resolved_checks() {
            if !self.model.supports(c) {
                return bad(format!("check {c:?} does not apply to model {}", self.model.name()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}

/// Recursively merges `over` into `base`; tables merge key by key, everything
/// else is replaced.
pub fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses the right-hand side of an assignment as a TOML value, falling back to
/// a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `a.b.c=value`.
pub fn apply_assignment(root: &mut toml::Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let mut over = parse_value(raw.trim());
    for part in path.iter().rev() {
        let mut t = toml::Table::new();
        t.insert(part.to_string(), over);
        over = toml::Value::Table(t);
    }
    merge(root, over);
    Ok(())
}

/// Layered configuration source.
#[derive(Clone, Debug)]
pub struct ConfigBuilder {
    value: toml::Value,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ConfigBuilder {
    pub fn new() -> Self {
        let value = toml::from_str::<toml::Table>(DEFAULTS).expect("defaults parse");
        Self {
            value: toml::Value::Table(value),
        }
    }

    pub fn merge_str(mut self, text: &str) -> Result<Self, ConfigError> {
        let t = toml::from_str::<toml::Table>(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut self.value, toml::Value::Table(t));
        Ok(self)
    }

    pub fn merge_file(self, path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.merge_str(&text)
    }

    pub fn set(mut self, assignment: &str) -> Result<Self, ConfigError> {
        apply_assignment(&mut self.value, assignment)?;
        Ok(self)
    }

    pub fn set_value(mut self, key: &str, value: toml::Value) -> Self {
        let mut t = toml::Table::new();
        t.insert(key.to_string(), value);
        merge(&mut self.value, toml::Value::Table(t));
        self
    }

    /// Applies [`OUT_DIR_ENV`] when it is set and nonempty.
    pub fn env(self) -> Self {
        match std::env::var(OUT_DIR_ENV) {
            Ok(dir) if !dir.is_empty() => self.set_value("out_dir", toml::Value::String(dir)),
            _ => self,
        }
    }

    pub fn build(self) -> Result<ExperimentConfig, ConfigError> {
        let cfg: ExperimentConfig = self
            .value
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigBuilder::new().build().expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borchers::default_generators;
    use crate::lightray::Side;

    #[test]
    fn defaults_agree_with_library_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.model, Model::SKappa);
        assert_eq!(c.wedge_commutators, CommutatorOptions::default());
        assert_eq!(c.longo_witten, LongoWittenOptions::default());
        assert_eq!(c.scatter, ScatterOptions::default());
        assert_eq!(c.generators.left, default_generators(Side::Left));
        assert_eq!(c.generators.right, default_generators(Side::Right));
        assert!(c.phi.is_symmetric());
    }

    #[test]
    fn overrides_merge_deeply() {
        let c = ConfigBuilder::new()
            .merge_str("kappa = 1.5\n[basis]\ncutoff = 2\n")
            .unwrap()
            .set("scatter.points=17")
            .unwrap()
            .set("model=s_phi")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!((c.kappa, c.basis.cutoff, c.basis.modes), (1.5, 2, 8));
        assert_eq!(c.scatter.points, 17);
        assert_eq!(c.scatter.tolerance, 1e-3);
        assert_eq!(c.model, Model::SPhi);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ConfigBuilder::new().set("nonsense"), Err(ConfigError::Override(_))));
        let unknown = ConfigBuilder::new().set("basis.colour=1").unwrap().build();
        assert!(matches!(unknown, Err(ConfigError::Parse(_))));
        let negative = ConfigBuilder::new().set("kappa=-1").unwrap().build();
        assert!(matches!(negative, Err(ConfigError::Invalid(_))));
        let mismatch = ConfigBuilder::new()
            .set("model=massive")
            .unwrap()
            .set("checks=[\"axioms\"]")
            .unwrap()
            .build();
        assert!(matches!(mismatch, Err(ConfigError::Invalid(_))));
        let lopsided = ConfigBuilder::new()
            .set("model=s_phi")
            .unwrap()
            .set("phi.zeros=[[0.5, 1.0]]")
            .unwrap()
            .build();
        assert!(matches!(lopsided, Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let back = ConfigBuilder::new().merge_str(&c.to_toml()).unwrap().build().unwrap();
        assert_eq!(back, c);
    }
}
