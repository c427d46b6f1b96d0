//! Experiment configuration: a small sectioned key-value format,
//! parsed strictly (unknown sections or keys are errors) with line-numbered
//! diagnostics.
//!
//! ```text
//! [model]
//! d = 2
//! epsilon = 0.3
//! boundary = periodic
//! potential = invsq
//!
//! [experiment]
//! kind = duality-check
//! T = 1.0
//! seeds = 20
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use qkinet_core::{Boundary, ModelConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `[section]` or `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unterminated section header")]
    UnterminatedSection { line: usize },
    #[error("line {line}: key `{key}` appears before any section")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` in section [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("section [{section}], key `{key}` (line {line}): {message}")]
    InvalidValue { section: String, key: String, line: usize, message: String },
    #[error("missing required key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("invalid model: {0}")]
    Model(String),
}

type Entries = BTreeMap<String, (String, usize)>;

#[derive(Debug, Default)]
struct RawConfig {
    sections: BTreeMap<String, Entries>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut current: Option<String> = None;
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full_line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or(ConfigError::UnterminatedSection { line: line_no })?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(ConfigError::UnterminatedSection { line: line_no });
            }
            raw.sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed { line: line_no, text: line.to_string() });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Malformed { line: line_no, text: line.to_string() });
        }
        let section = current
            .clone()
            .ok_or_else(|| ConfigError::KeyOutsideSection { line: line_no, key: key.clone() })?;
        let entries = raw.sections.get_mut(&section).expect("section was inserted");
        if entries.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line: line_no, section, key });
        }
        entries.insert(key, (value, line_no));
    }
    Ok(raw)
}

struct SectionView<'a> {
    name: &'a str,
    entries: Option<&'a Entries>,
    known: &'a [&'a str],
}

impl<'a> SectionView<'a> {
    fn check_known(&self) -> Result<(), ConfigError> {
        if let Some(entries) = self.entries {
            for (key, (_, line)) in entries {
                if !self.known.contains(&key.as_str()) {
                    return Err(ConfigError::UnknownKey {
                        line: *line,
                        section: self.name.to_string(),
                        key: key.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&'a (String, usize)> {
        self.entries.and_then(|e| e.get(key))
    }

    fn invalid(&self, key: &str, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            section: self.name.to_string(),
            key: key.to_string(),
            line,
            message: message.into(),
        }
    }

    fn parse_with<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((value, line)) => parse(value)
                .map(Some)
                .map_err(|m| self.invalid(key, *line, m)),
        }
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(key, |v| {
            v.parse::<f64>().map_err(|e| e.to_string()).and_then(|x| {
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err("value must be finite".into())
                }
            })
        })
    }

    fn positive_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64_opt(key)?.unwrap_or(default);
        if v <= 0.0 {
            let line = self.raw(key).map(|(_, l)| *l).unwrap_or(0);
            return Err(self.invalid(key, line, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn nonneg_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64_opt(key)?.unwrap_or(default);
        if v < 0.0 {
            let line = self.raw(key).map(|(_, l)| *l).unwrap_or(0);
            return Err(self.invalid(key, line, format!("must be nonnegative, got {v}")));
        }
        Ok(v)
    }

    fn usize_opt(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(key, |v| v.parse::<usize>().map_err(|e| e.to_string()))
    }

    fn positive_usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v = self.usize_opt(key)?.unwrap_or(default);
        if v == 0 {
            let line = self.raw(key).map(|(_, l)| *l).unwrap_or(0);
            return Err(self.invalid(key, line, "must be positive"));
        }
        Ok(v)
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self
            .parse_with(key, |v| v.parse::<u64>().map_err(|e| e.to_string()))?
            .unwrap_or(default))
    }

    fn list_f64(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        Ok(self
            .parse_with(key, |v| {
                v.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<f64>, String>>()
            })?
            .unwrap_or_else(|| default.to_vec()))
    }

    fn list_usize(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        Ok(self
            .parse_with(key, |v| {
                v.split(',')
                    .map(|x| x.trim().parse::<usize>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<usize>, String>>()
            })?
            .unwrap_or_else(|| default.to_vec()))
    }

    fn text(&self, key: &str, default: &str) -> String {
        self.raw(key).map(|(v, _)| v.clone()).unwrap_or_else(|| default.to_string())
    }
}

/// Named experiment kinds runnable from a config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    CumulantCheck,
    BbgkyDemo,
    DualityCheck,
    GkeCheck,
    MeanfieldSweep,
    Hartree,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::CumulantCheck => "cumulant-check",
            ExperimentKind::BbgkyDemo => "bbgky-demo",
            ExperimentKind::DualityCheck => "duality-check",
            ExperimentKind::GkeCheck => "gke-check",
            ExperimentKind::MeanfieldSweep => "meanfield-sweep",
            ExperimentKind::Hartree => "hartree",
        }
    }

    fn parse(text: &str) -> Result<Self, String> {
        match text {
            "cumulant-check" => Ok(ExperimentKind::CumulantCheck),
            "bbgky-demo" => Ok(ExperimentKind::BbgkyDemo),
            "duality-check" => Ok(ExperimentKind::DualityCheck),
            "gke-check" => Ok(ExperimentKind::GkeCheck),
            "meanfield-sweep" => Ok(ExperimentKind::MeanfieldSweep),
            "hartree" => Ok(ExperimentKind::Hartree),
            other => Err(format!(
                "unknown experiment `{other}` (expected cumulant-check, bbgky-demo, \
                 duality-check, gke-check, meanfield-sweep, or hartree)"
            )),
        }
    }
}

/// Pair-potential kernel families selectable in configs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialKind {
    Zero,
    Delta,
    InverseSquare,
    Exponential,
}

impl PotentialKind {
    fn parse(text: &str) -> Result<Self, String> {
        match text {
            "zero" => Ok(PotentialKind::Zero),
            "delta" => Ok(PotentialKind::Delta),
            "invsq" => Ok(PotentialKind::InverseSquare),
            "exp" => Ok(PotentialKind::Exponential),
            other => Err(format!("unknown potential `{other}` (expected zero, delta, invsq, exp)")),
        }
    }

    pub fn phi(&self, strength: f64) -> impl Fn(f64) -> f64 {
        let kind = *self;
        move |r: f64| match kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Delta => {
                if r == 0.0 {
                    strength
                } else {
                    0.0
                }
            }
            PotentialKind::InverseSquare => strength / (1.0 + r * r),
            PotentialKind::Exponential => strength * (-r).exp(),
        }
    }
}

/// Lattice model section.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub d: usize,
    pub epsilon: f64,
    pub boundary: Boundary,
    pub potential: PotentialKind,
    pub potential_strength: f64,
}

impl ModelSpec {
    pub fn build(&self) -> Result<ModelConfig, ConfigError> {
        ModelConfig::lattice(
            self.d,
            self.boundary,
            self.epsilon,
            self.potential.phi(self.potential_strength),
        )
        .map_err(|e| ConfigError::Model(e.to_string()))
    }
}

/// Grid section for the Hartree experiment.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub n_points: usize,
    pub length: f64,
    pub dt: f64,
}

/// Fully validated experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub kind: ExperimentKind,
    pub horizon: f64,
    pub seed: u64,
    pub seeds: usize,
    pub n_particles: usize,
    pub s_max: usize,
    pub n_max: usize,
    pub order: usize,
    pub t_points: usize,
    pub nodes: usize,
    pub sweep_epsilons: Vec<f64>,
    pub sweep_particles: Vec<usize>,
    pub grid: GridSpec,
    pub stem: String,
}

const MODEL_KEYS: &[&str] = &["d", "epsilon", "boundary", "potential", "potential_strength"];
const EXPERIMENT_KEYS: &[&str] = &[
    "kind", "T", "seed", "seeds", "n_particles", "s_max", "n_max", "order", "t_points", "nodes",
];
const SWEEP_KEYS: &[&str] = &["epsilons", "particles"];
const GRID_KEYS: &[&str] = &["n_points", "length", "dt"];
const OUTPUT_KEYS: &[&str] = &["stem"];

impl ExperimentConfig {
    /// Parse and validate a config from text.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let raw = parse_raw(text)?;
        for name in raw.sections.keys() {
            if !["model", "experiment", "sweep", "grid", "output"].contains(&name.as_str()) {
                return Err(ConfigError::UnknownSection { line: 0, name: name.clone() });
            }
        }
        let section = |name: &'static str, known: &'static [&'static str]| SectionView {
            name,
            entries: raw.sections.get(name),
            known,
        };

        let model = section("model", MODEL_KEYS);
        model.check_known()?;
        let experiment = section("experiment", EXPERIMENT_KEYS);
        experiment.check_known()?;
        let sweep = section("sweep", SWEEP_KEYS);
        sweep.check_known()?;
        let grid = section("grid", GRID_KEYS);
        grid.check_known()?;
        let output = section("output", OUTPUT_KEYS);
        output.check_known()?;

        let kind_entry = experiment
            .raw("kind")
            .ok_or(ConfigError::MissingKey { section: "experiment".into(), key: "kind".into() });
        let (kind_text, kind_line) = kind_entry?;
        let kind = ExperimentKind::parse(kind_text)
            .map_err(|m| experiment.invalid("kind", *kind_line, m))?;

        let boundary = match model.text("boundary", "periodic").as_str() {
            "periodic" => Boundary::Periodic,
            "open" => Boundary::Open,
            other => {
                let line = model.raw("boundary").map(|(_, l)| *l).unwrap_or(0);
                return Err(model.invalid(
                    "boundary",
                    line,
                    format!("unknown boundary `{other}` (expected periodic or open)"),
                ));
            }
        };
        let potential = match model.raw("potential") {
            None => PotentialKind::InverseSquare,
            Some((text, line)) => {
                PotentialKind::parse(text).map_err(|m| model.invalid("potential", *line, m))?
            }
        };
        let model_spec = ModelSpec {
            d: model.positive_usize("d", 2)?,
            epsilon: model.nonneg_f64("epsilon", 1.0)?,
            boundary,
            potential,
            potential_strength: model.positive_f64("potential_strength", 1.0)?,
        };
        model_spec.build()?;

        let cfg = ExperimentConfig {
            model: model_spec,
            kind,
            horizon: experiment.positive_f64("T", 1.0)?,
            seed: experiment.u64_or("seed", 7)?,
            seeds: experiment.positive_usize("seeds", 20)?,
            n_particles: experiment.positive_usize("n_particles", 3)?,
            s_max: experiment.positive_usize("s_max", 2)?,
            n_max: experiment.usize_opt("n_max")?.unwrap_or(1),
            order: experiment.positive_usize("order", 2)?,
            t_points: experiment.positive_usize("t_points", 4)?,
            nodes: experiment.positive_usize("nodes", 16)?,
            sweep_epsilons: sweep.list_f64("epsilons", &[1.0, 0.5, 0.25])?,
            sweep_particles: sweep.list_usize("particles", &[2, 4, 6, 8])?,
            grid: GridSpec {
                n_points: grid.positive_usize("n_points", 16)?,
                length: grid.positive_f64("length", 16.0)?,
                dt: grid.positive_f64("dt", 1e-4)?,
            },
            stem: output.text("stem", kind.name()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !self.grid.n_points.is_power_of_two() {
            return Err(ConfigError::Model(format!(
                "grid n_points {} must be a power of two",
                self.grid.n_points
            )));
        }
        if self
            .sweep_epsilons
            .windows(2)
            .any(|w| w[1] >= w[0])
            || self.sweep_epsilons.iter().any(|&e| e <= 0.0)
        {
            return Err(ConfigError::Model(
                "sweep epsilons must be positive and strictly decreasing".into(),
            ));
        }
        if self.sweep_particles.contains(&0) {
            return Err(ConfigError::Model("sweep particle numbers must be positive".into()));
        }
        if self.stem.is_empty() || self.stem.contains(['/', '\\']) {
            return Err(ConfigError::Model(format!("invalid output stem `{}`", self.stem)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# comment
[model]
d = 2
epsilon = 0.3
boundary = periodic
potential = invsq

[experiment]
kind = duality-check
T = 0.5          # inline comment
seeds = 5
";

    #[test]
    fn parses_valid_config() {
        let cfg = ExperimentConfig::parse_str(GOOD).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::DualityCheck);
        assert_eq!(cfg.model.d, 2);
        assert_eq!(cfg.seeds, 5);
        assert_eq!(cfg.horizon, 0.5);
        assert_eq!(cfg.stem, "duality-check");
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "[model]\nd == 2\n[experiment]\nkind = hartree\n";
        match ExperimentConfig::parse_str(bad) {
            Err(ConfigError::InvalidValue { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
        let bad2 = "[model]\nnot a key value\n";
        match ExperimentConfig::parse_str(bad2) {
            Err(ConfigError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad = "[model]\nd = 2\nfoo = 1\n[experiment]\nkind = hartree\n";
        assert!(matches!(
            ExperimentConfig::parse_str(bad),
            Err(ConfigError::UnknownKey { .. })
        ));
        let bad2 = "[mdoel]\nd = 2\n";
        assert!(matches!(
            ExperimentConfig::parse_str(bad2),
            Err(ConfigError::UnknownSection { .. })
        ));
    }

    #[test]
    fn requires_experiment_kind() {
        assert!(matches!(
            ExperimentConfig::parse_str("[model]\nd = 2\n"),
            Err(ConfigError::MissingKey { .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_numbers() {
        let bad = "[experiment]\nkind = hartree\nT = -1\n";
        assert!(matches!(
            ExperimentConfig::parse_str(bad),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn duplicate_keys_are_errors() {
        let bad = "[model]\nd = 2\nd = 3\n[experiment]\nkind = hartree\n";
        assert!(matches!(
            ExperimentConfig::parse_str(bad),
            Err(ConfigError::DuplicateKey { line: 3, .. })
        ));
    }
}
