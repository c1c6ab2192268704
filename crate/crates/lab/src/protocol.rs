//! Declarative experiment definitions, loaded from JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use cogtown_core::cognition::Ablation;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Helplessness,
    Dissonance,
    Fitd,
    Diffusion,
    Ostracism,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Helplessness,
        ExperimentKind::Dissonance,
        ExperimentKind::Fitd,
        ExperimentKind::Diffusion,
        ExperimentKind::Ostracism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Helplessness => "helplessness",
            ExperimentKind::Dissonance => "dissonance",
            ExperimentKind::Fitd => "fitd",
            ExperimentKind::Diffusion => "diffusion",
            ExperimentKind::Ostracism => "ostracism",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.trim().to_lowercase();
        ExperimentKind::ALL.into_iter().find(|k| k.name() == l).ok_or_else(|| {
            format!("unknown experiment `{s}` (expected helplessness, dissonance, fitd, diffusion or ostracism)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Base,
    Extended,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Extended => "extended",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "base" => Ok(Variant::Base),
            "extended" | "ext" => Ok(Variant::Extended),
            _ => Err(format!("unknown variant `{s}` (expected base or extended)")),
        }
    }
}

/// One experimental group and its condition parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub size: usize,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl GroupSpec {
    pub fn flag(&self, key: &str) -> bool {
        self.params.get(key).and_then(Value::as_bool).unwrap_or(false)
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_f64)
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Value::as_str)
    }

    pub fn list(&self, key: &str) -> Vec<u64> {
        self.params
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_u64).collect())
            .unwrap_or_default()
    }
}

/// A questionnaire item on a numeric scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleItem {
    pub key: String,
    pub text: String,
    pub min: f64,
    pub max: f64,
    /// Reported under this category (the key when absent).
    #[serde(default)]
    pub category: Option<String>,
    /// Scored as `min + max - x`.
    #[serde(default)]
    pub reverse: bool,
}

impl ScaleItem {
    pub fn category(&self) -> &str {
        self.category.as_deref().unwrap_or(&self.key)
    }
}

/// One scripted stage: stimulus text, trial count, optional answer options
/// and questionnaire items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub options: Vec<String>,
    #[serde(default)]
    pub items: Vec<ScaleItem>,
}

/// Emotion deltas the harness applies for aversive or social stimuli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Injections {
    pub noise_fear: f64,
    pub noise_sadness: f64,
    pub noise_anger: f64,
    pub exclusion_sadness: f64,
    pub receipt_happiness: f64,
}

impl Default for Injections {
    fn default() -> Self {
        Injections {
            noise_fear: 0.1,
            noise_sadness: 0.05,
            noise_anger: 0.05,
            exclusion_sadness: 0.08,
            receipt_happiness: 0.05,
        }
    }
}

/// Who the subjects are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub occupation: String,
    #[serde(default)]
    pub gender: Option<String>,
    pub min_age: u32,
    pub max_age: u32,
}

impl Default for Population {
    fn default() -> Self {
        Population {
            occupation: "undergraduate student".into(),
            gender: None,
            min_age: 18,
            max_age: 23,
        }
    }
}

/// A planned two-group comparison on one metric. The test follows the
/// metric's unit: proportions get chi-square/Fisher, everything else Welch t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub a: String,
    pub b: String,
    pub metric: String,
}

fn default_repetitions() -> usize {
    10
}

fn default_seed() -> u64 {
    7
}

fn default_ablation() -> Ablation {
    Ablation::Full
}

fn default_dmn_episodes() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentProtocol {
    pub name: ExperimentKind,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_ablation")]
    pub ablation: Ablation,
    pub n_agents: usize,
    pub groups: Vec<GroupSpec>,
    pub phases: Vec<Phase>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub population: Population,
    #[serde(default)]
    pub injections: Injections,
    /// Spontaneous-thought episodes per rest period.
    #[serde(default = "default_dmn_episodes")]
    pub dmn_episodes: usize,
    /// Ablations this protocol may run under; empty means all.
    #[serde(default)]
    pub supported_ablations: Vec<Ablation>,
    #[serde(default)]
    pub comparisons: Vec<ComparisonSpec>,
}

macro_rules! builtin_protocols {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../protocols/", $file, ".json")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin_protocols!(
    "helplessness_base",
    "helplessness_extended",
    "dissonance_base",
    "dissonance_extended",
    "fitd_base",
    "fitd_extended",
    "diffusion_base",
    "diffusion_extended",
    "ostracism_base",
    "ostracism_extended",
);

/// Phases each experiment and variant cannot run without, with the minimum
/// number of options each must list.
fn required_phases(kind: ExperimentKind, variant: Variant) -> &'static [(&'static str, usize)] {
    use ExperimentKind::*;
    match (kind, variant) {
        (Helplessness, _) => &[("locus", 2), ("instruction", 2), ("pretreatment", 2), ("test", 2), ("noise", 2)],
        (Dissonance, Variant::Base) => &[("task", 0), ("request", 2), ("lie", 0), ("interview", 0)],
        (Dissonance, Variant::Extended) => &[
            ("values", 0),
            ("task", 0),
            ("request", 2),
            ("lie", 0),
            ("relief", 2),
            ("interview", 0),
        ],
        (Fitd, Variant::Base) => &[
            ("small_request", 2),
            ("questions", 0),
            ("agree_only", 0),
            ("familiarization", 0),
            ("gap", 0),
            ("large_request", 2),
        ],
        (Fitd, Variant::Extended) => &[("screening", 2), ("gap", 0), ("first_request", 2), ("second_request", 2)],
        (Diffusion, Variant::Base) => &[("discussion", 1), ("emergency", 2)],
        (Diffusion, Variant::Extended) => &[("discussion", 1), ("role", 2), ("emergency", 2), ("member", 2)],
        (Ostracism, Variant::Base) => &[("game", 2), ("survey", 0)],
        (Ostracism, Variant::Extended) => &[("watch", 2), ("join", 0), ("exclusion", 0), ("return", 0)],
    }
}

impl ExperimentProtocol {
    /// The shipped protocol for an experiment and variant.
    pub fn builtin(kind: ExperimentKind, variant: Variant) -> Self {
        let file = format!("{}_{}", kind.name(), variant.name());
        let (_, text) = BUILTIN
            .iter()
            .find(|(f, _)| *f == file)
            .expect("every experiment ships both variants");
        serde_json::from_str(text).unwrap_or_else(|e| panic!("built-in protocol {file} is malformed: {e}"))
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let p: Self = serde_json::from_str(text).map_err(|e| LabError::Config(format!("protocol: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// Loads a protocol file and checks it describes `kind`.
    pub fn load_for(path: &Path, kind: ExperimentKind) -> Result<Self, LabError> {
        let p = Self::load(path)?;
        if p.name != kind {
            return Err(LabError::Config(format!(
                "{} describes `{}`, not `{kind}`",
                path.display(),
                p.name
            )));
        }
        Ok(p)
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let err = |m: String| Err(LabError::Config(format!("{} ({}): {m}", self.name, self.variant)));
        if self.groups.is_empty() {
            return err("no groups".into());
        }
        let total: usize = self.groups.iter().map(|g| g.size).sum();
        if total != self.n_agents {
            return err(format!("group sizes sum to {total}, expected n_agents = {}", self.n_agents));
        }
        if self.groups.iter().any(|g| g.size == 0) {
            return err("empty group".into());
        }
        let mut labels: Vec<&str> = self.groups.iter().map(|g| g.label.as_str()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.groups.len() {
            return err("duplicate group label".into());
        }
        if self.repetitions == 0 {
            return err("repetitions must be at least 1".into());
        }
        if !self.supported_ablations.is_empty() && !self.supported_ablations.contains(&self.ablation) {
            return err(format!("ablation `{}` is not supported by this protocol", self.ablation));
        }
        let inj = self.injections;
        for v in [
            inj.noise_fear,
            inj.noise_sadness,
            inj.noise_anger,
            inj.exclusion_sadness,
            inj.receipt_happiness,
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("injection {v} outside [0, 1]"));
            }
        }
        for (name, min_options) in required_phases(self.name, self.variant) {
            match self.phase(name) {
                None => return err(format!("missing phase `{name}`")),
                Some(p) if p.options.len() < *min_options => {
                    return err(format!("phase `{name}` needs at least {min_options} options"))
                }
                Some(_) => {}
            }
        }
        if let Err(m) = crate::experiments::check(self) {
            return err(m);
        }
        if self.population.min_age > self.population.max_age {
            return err("population min_age exceeds max_age".into());
        }
        for p in &self.phases {
            for it in &p.items {
                if !(it.min < it.max) {
                    return err(format!("item `{}` has an empty scale", it.key));
                }
            }
        }
        for c in &self.comparisons {
            if c.a == c.b {
                return err(format!("comparison of `{}` with itself", c.a));
            }
        }
        Ok(())
    }

    pub fn phase(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }

    /// A phase that validation guarantees to exist.
    pub(crate) fn required(&self, name: &str) -> &Phase {
        self.phase(name).expect("validated protocol has its required phases")
    }

    pub fn group(&self, label: &str) -> Option<&GroupSpec> {
        self.groups.iter().find(|g| g.label == label)
    }

    /// Group label per subject, in subject order.
    pub fn assignment(&self) -> Vec<(&GroupSpec, usize)> {
        self.groups
            .iter()
            .flat_map(|g| (0..g.size).map(move |i| (g, i)))
            .collect()
    }
}
