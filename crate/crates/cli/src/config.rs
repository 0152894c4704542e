//! Bundle configuration files.
//!
//! Everything is validated before any numerics run; unknown keys are rejected.

use std::path::Path;

use projflat_core::phi_family::{Builtin, CFunction, FgPair, PhiFamily, SmoothFn};
use projflat_core::{BetaField, MetricBundle, OneFormSpec, SpaceForm};
use serde::{Deserialize, Serialize};

use crate::expr::Expr;

/// Schema tag accepted in config files.
pub const CONFIG_SCHEMA: &str = "projflat.config/1";

/// Anything wrong with a config file. Maps to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("expression in {field}: {source}")]
    Expr { field: &'static str, source: crate::expr::ParseError },
    #[error("rejected by the bundle builder: {0}")]
    Core(#[from] projflat_core::Error),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// `c(b²)`: either `{"constant": λ}` or `{"expression": "...", "range": [lo, hi]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

impl CSpec {
    pub fn constant(lambda: f64) -> Self {
        Self { constant: Some(lambda), expression: None, range: None }
    }

    fn build(&self, field: &'static str) -> Result<CFunction, ConfigError> {
        let c = match (self.constant, &self.expression, self.range) {
            (Some(l), None, None) => CFunction::Constant(l),
            (None, Some(src), Some([lo, hi])) => {
                let e = Expr::parse(src).map_err(|source| ConfigError::Expr { field, source })?;
                CFunction::variable(e.to_smooth_fn(), (lo, hi))?
            }
            (None, Some(_), None) => return invalid(format!("{field}: an expression needs a range [lo, hi]")),
            _ => return invalid(format!("{field}: give exactly one of constant or expression")),
        };
        c.validate()?;
        Ok(c)
    }
}

/// `f(t)`: `{"builtin": name}` or `{"expression": "...", "d1": "...", "d2": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<String>,
}

impl FSpec {
    pub fn builtin(name: &str) -> Self {
        Self { builtin: Some(name.to_string()), expression: None, d1: None, d2: None }
    }

    fn build(&self) -> Result<SmoothFn, ConfigError> {
        let parse = |src: &str| Expr::parse(src).map_err(|source| ConfigError::Expr { field: "f", source });
        match (&self.builtin, &self.expression) {
            (Some(name), None) => {
                if self.d1.is_some() || self.d2.is_some() {
                    return invalid("f: d1/d2 only go with an expression");
                }
                match Builtin::from_name(name) {
                    Some(b) => Ok(SmoothFn::builtin(b)),
                    None => invalid(format!(
                        "f: unknown builtin {name:?} (expected one of {})",
                        Builtin::ALL.map(Builtin::name).join(", ")
                    )),
                }
            }
            (None, Some(src)) => {
                let f = parse(src)?;
                match (&self.d1, &self.d2) {
                    (None, None) => Ok(f.to_smooth_fn()),
                    (Some(d1), d2) => {
                        let d2 = d2.as_deref().map(parse).transpose()?;
                        Ok(f.with_derivatives(&parse(d1)?, d2.as_ref()))
                    }
                    (None, Some(_)) => invalid("f: d2 given without d1"),
                }
            }
            _ => invalid("f: give exactly one of builtin or expression"),
        }
    }
}

/// `g(b²)`: `{"builtin": "zero" | "one" | "identity"}` or `{"expression": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
}

impl Default for GSpec {
    fn default() -> Self {
        Self { builtin: Some("zero".into()), expression: None }
    }
}

impl GSpec {
    fn build(&self) -> Result<SmoothFn, ConfigError> {
        match (&self.builtin, &self.expression) {
            (Some(name), None) => match name.as_str() {
                "zero" => Ok(SmoothFn::constant(0.0)),
                "one" => Ok(SmoothFn::constant(1.0)),
                "identity" => Ok(SmoothFn::affine(0.0, 1.0)),
                _ => invalid(format!("g: unknown builtin {name:?} (expected zero, one or identity)")),
            },
            (None, Some(src)) => Expr::parse(src)
                .map(|e| e.to_smooth_fn())
                .map_err(|source| ConfigError::Expr { field: "g", source }),
            _ => invalid("g: give exactly one of builtin or expression"),
        }
    }
}

/// Sampling plan for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    /// Seed for the ChaCha8 generator.
    pub seed: u64,
    /// Points per axis of the `(b², s)` grids.
    pub grid: usize,
    /// `b²` interval covered by grids and random samples.
    pub b2_range: [f64; 2],
    /// Random `(x, y)` pairs for the pointwise checks.
    pub points: usize,
    /// Random geodesics.
    pub geodesics: usize,
    /// Integration time for each geodesic.
    pub geodesic_time: f64,
    /// RK4 steps for each geodesic (the convergence check also runs twice as many).
    pub geodesic_steps: usize,
    /// Euclidean length of the initial velocity.
    pub geodesic_speed: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            grid: 20,
            b2_range: [0.1, 0.9],
            points: 50,
            geodesics: 20,
            geodesic_time: 0.5,
            geodesic_steps: 64,
            geodesic_speed: 0.2,
        }
    }
}

/// Named tolerances. Every record compares its max residual against one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub pde: f64,
    pub pde_fd: f64,
    pub beta_condition: f64,
    pub k_agreement: f64,
    pub antisymmetric: f64,
    pub b2_recovery: f64,
    pub spray_agreement: f64,
    pub projective: f64,
    pub straightness: f64,
    pub geodesic_convergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pde: 1e-8,
            pde_fd: 1e-5,
            beta_condition: 1e-6,
            k_agreement: 1e-7,
            antisymmetric: 1e-8,
            b2_recovery: 1e-9,
            spray_agreement: 1e-6,
            projective: 1e-6,
            straightness: 1e-5,
            geodesic_convergence: 1e-7,
        }
    }
}

impl Tolerances {
    fn all(&self) -> [(&'static str, f64); 10] {
        [
            ("pde", self.pde),
            ("pde_fd", self.pde_fd),
            ("beta_condition", self.beta_condition),
            ("k_agreement", self.k_agreement),
            ("antisymmetric", self.antisymmetric),
            ("b2_recovery", self.b2_recovery),
            ("spray_agreement", self.spray_agreement),
            ("projective", self.projective),
            ("straightness", self.straightness),
            ("geodesic_convergence", self.geodesic_convergence),
        ]
    }

    /// Every tolerance multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let s = |v: f64| v * k;
        Self {
            pde: s(self.pde),
            pde_fd: s(self.pde_fd),
            beta_condition: s(self.beta_condition),
            k_agreement: s(self.k_agreement),
            antisymmetric: s(self.antisymmetric),
            b2_recovery: s(self.b2_recovery),
            spray_agreement: s(self.spray_agreement),
            projective: s(self.projective),
            straightness: s(self.straightness),
            geodesic_convergence: s(self.geodesic_convergence),
        }
    }
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

fn one() -> f64 {
    1.0
}

/// A bundle definition plus its verification plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    /// Sectional curvature of the base space form.
    pub kappa: f64,
    /// Dimension.
    pub n: usize,
    #[serde(default = "one")]
    pub epsilon: f64,
    /// Translation part of the conformal 1-form; zero if omitted.
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    pub c: CSpec,
    pub f: FSpec,
    #[serde(default)]
    pub g: GSpec,
    #[serde(default = "one")]
    pub b0_sq_base: f64,
    /// Deform `β` with this coupling instead of `c`. Used to build negative controls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_c: Option<CSpec>,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// The numerical objects a config describes.
pub struct Built {
    pub family: PhiFamily,
    pub spec: OneFormSpec,
    pub bundle: MetricBundle,
    /// True when `beta_c` is set, so `β` is not coupled to `φ`.
    pub uncoupled: bool,
}

impl BundleConfig {
    /// A config with default sampling and tolerances and `a = 0`, `g = 0`.
    pub fn new(kappa: f64, n: usize, c: CSpec, f: FSpec) -> Self {
        Self {
            schema: default_schema(),
            kappa,
            n,
            epsilon: 1.0,
            a: None,
            c,
            f,
            g: GSpec::default(),
            b0_sq_base: 1.0,
            beta_c: None,
            sample: SampleConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Parses and validates JSON text.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    fn normalize(&mut self) {
        if self.a.is_none() {
            self.a = Some(vec![0.0; self.n]);
        }
    }

    /// The translation vector, zero-filled if absent.
    pub fn a_vec(&self) -> Vec<f64> {
        self.a.clone().unwrap_or_else(|| vec![0.0; self.n])
    }

    /// Structural checks that need no numerics.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA {
            return invalid(format!("schema {:?} is not {CONFIG_SCHEMA:?}", self.schema));
        }
        if self.n < 2 {
            return invalid("n must be at least 2");
        }
        for (name, v) in [("kappa", self.kappa), ("epsilon", self.epsilon), ("b0_sq_base", self.b0_sq_base)] {
            if !v.is_finite() {
                return invalid(format!("{name} must be finite"));
            }
        }
        if self.b0_sq_base <= 0.0 {
            return invalid("b0_sq_base must be positive");
        }
        let a = self.a_vec();
        if a.len() != self.n {
            return invalid(format!("a has {} components, n = {}", a.len(), self.n));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return invalid("a must be finite");
        }
        let s = &self.sample;
        let [lo, hi] = s.b2_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return invalid("sample.b2_range must satisfy 0 < lo < hi");
        }
        if s.grid < 2 {
            return invalid("sample.grid must be at least 2");
        }
        if s.geodesic_steps == 0 {
            return invalid("sample.geodesic_steps must be positive");
        }
        if !(s.geodesic_time > 0.0 && s.geodesic_time.is_finite()) {
            return invalid("sample.geodesic_time must be positive");
        }
        if !(s.geodesic_speed > 0.0 && s.geodesic_speed.is_finite()) {
            return invalid("sample.geodesic_speed must be positive");
        }
        for (name, v) in self.tolerances.all() {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("tolerances.{name} must be positive"));
            }
        }
        for (name, c) in [("c", Some(&self.c)), ("beta_c", self.beta_c.as_ref())] {
            if let Some(CSpec { range: Some([clo, chi]), .. }) = c {
                if !(*clo <= lo && hi <= *chi) {
                    return invalid(format!("{name}.range must contain sample.b2_range"));
                }
            }
        }
        // shapes and expression syntax; the results are rebuilt in `build`
        self.c.build("c")?;
        if let Some(bc) = &self.beta_c {
            bc.build("beta_c")?;
        }
        self.f.build()?;
        self.g.build()?;
        Ok(())
    }

    /// Builds `φ`, `β` and the bundle.
    pub fn build(&self) -> Result<Built, ConfigError> {
        let space = SpaceForm::new(self.kappa, self.n)?;
        let c = self.c.build("c")?;
        let family = PhiFamily::with_base(FgPair::new(self.f.build()?, self.g.build()?), c.clone(), self.b0_sq_base)?;
        let spec = OneFormSpec::new(self.epsilon, self.a_vec());
        let beta_c = match &self.beta_c {
            Some(bc) => bc.build("beta_c")?,
            None => c,
        };
        let beta = BetaField::new(space, spec.clone(), beta_c, self.b0_sq_base)?;
        Ok(Built {
            bundle: MetricBundle::with_parts(space, family.clone(), beta),
            family,
            spec,
            uncoupled: self.beta_c.is_some(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"kappa": 0, "n": 3, "c": {"constant": 2}, "f": {"builtin": "one_plus_t"}}"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = BundleConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.a, Some(vec![0.0; 3]));
        assert_eq!(cfg.sample, SampleConfig::default());
        assert_eq!(cfg.g, GSpec::default());
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"n\": 3", "\"n\": 3, \"dim\": 3");
        assert!(matches!(BundleConfig::from_json(&text), Err(ConfigError::Parse(_))));
        let text = MINIMAL.replace("{\"constant\": 2}", "{\"constant\": 2, \"lambda\": 2}");
        assert!(BundleConfig::from_json(&text).is_err());
    }

    #[test]
    fn expression_syntax_is_checked_on_load() {
        let text = MINIMAL.replace("{\"builtin\": \"one_plus_t\"}", "{\"expression\": \"1 +\"}");
        assert!(matches!(BundleConfig::from_json(&text), Err(ConfigError::Expr { field: "f", .. })));
    }

    #[test]
    fn structural_errors() {
        let bad = [
            MINIMAL.replace("\"n\": 3", "\"n\": 1"),
            MINIMAL.replace("\"n\": 3", "\"n\": 3, \"a\": [1, 2]"),
            MINIMAL.replace("{\"constant\": 2}", "{\"expression\": \"1 + t\"}"),
            MINIMAL.replace("{\"constant\": 2}", "{\"constant\": 2, \"expression\": \"t\", \"range\": [0, 1]}"),
            MINIMAL.replace("one_plus_t", "cosh"),
            MINIMAL.replace("\"kappa\": 0", "\"kappa\": 0, \"schema\": \"other/2\""),
            MINIMAL.replace("\"kappa\": 0", "\"kappa\": 0, \"tolerances\": {\"pde\": -1}"),
        ];
        for text in bad {
            assert!(BundleConfig::from_json(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn zero_coupling_is_rejected_on_load() {
        let text = MINIMAL.replace("\"constant\": 2", "\"constant\": 0");
        assert!(matches!(BundleConfig::from_json(&text), Err(ConfigError::Core(_))));
    }

    #[test]
    fn expression_parts_build() {
        let text = r#"{"kappa": -0.5, "n": 2, "c": {"expression": "1 + t", "range": [0.01, 2]},
            "f": {"expression": "exp(t)"}, "g": {"expression": "0.1 * t"}}"#;
        let built = BundleConfig::from_json(text).unwrap().build().unwrap();
        assert!(built.family.pde_residual(0.5, 0.2).unwrap() < 1e-8);
    }

    #[test]
    fn echo_round_trips() {
        let cfg = BundleConfig::from_json(MINIMAL).unwrap();
        let again = BundleConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
