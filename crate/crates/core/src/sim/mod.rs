//! The discrete-tick town.

mod engine;
pub mod log;
pub mod needs;
pub mod world;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{AgentRuntime, CurrentActivity, Transit, World};
pub use log::{EventKind, Snapshot, SummaryRow, TrajectoryEvent};
pub use needs::{step_needs, Activity, ActivityEffect, NeedsParams};
pub use world::{daily_life, hops, RelationshipSeed, WorldConfig};

use crate::backend::{
    BackendError, Gateway, GenerationDefaults, HttpBackend, HttpConfig, ReplayBackend, ScriptRule, ScriptedBackend,
    TemplateSet,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("backend failure at tick {tick}: {error}")]
    Backend {
        error: BackendError,
        tick: u64,
        checkpoint: Option<PathBuf>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Which engine produces text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendChoice {
    /// Built-in daily-life rules followed by `rules`.
    Scripted {
        #[serde(default)]
        rules: Vec<ScriptRule>,
    },
    Replay {
        transcript: PathBuf,
    },
    Http {
        #[serde(default)]
        config: HttpConfig,
    },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Scripted { rules: Vec::new() }
    }
}

impl BackendChoice {
    pub fn build(&self, templates: TemplateSet, seed: u64) -> Result<Gateway, BackendError> {
        let defaults = GenerationDefaults {
            seed,
            ..GenerationDefaults::default()
        };
        let backend: Arc<dyn crate::backend::Backend> = match self {
            BackendChoice::Scripted { rules } => {
                let mut all = ScriptedBackend::daily_life_rules();
                all.extend(rules.iter().cloned());
                Arc::new(ScriptedBackend::new(all)?)
            }
            BackendChoice::Replay { transcript } => Arc::new(ReplayBackend::from_file(transcript)?),
            BackendChoice::Http { config } => Arc::new(HttpBackend::new(config.clone())?),
        };
        Ok(Gateway::new(backend, templates, defaults))
    }
}

/// One run-configuration file: the world (or the daily-life scenario),
/// the engine and how long to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Explicit world. When absent the daily-life town is generated from
    /// `seed`.
    #[serde(default)]
    pub world: Option<WorldConfig>,
    #[serde(default = "default_ticks")]
    pub ticks: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub backend: BackendChoice,
    /// Directory of `*.txt` templates overriding the built-in ones.
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
}

fn default_ticks() -> u64 {
    72
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world: None,
            ticks: default_ticks(),
            seed: None,
            backend: BackendChoice::default(),
            templates_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.or(self.world.as_ref().map(|w| w.seed)).unwrap_or(7)
    }

    pub fn world_config(&self) -> WorldConfig {
        let seed = self.seed();
        match &self.world {
            Some(w) => WorldConfig { seed, ..w.clone() },
            None => daily_life(seed),
        }
    }

    pub fn gateway(&self) -> Result<Gateway, SimError> {
        let mut templates = TemplateSet::builtin();
        if let Some(dir) = &self.templates_dir {
            templates
                .override_from_dir(dir)
                .map_err(|e| SimError::Config(e.to_string()))?;
        }
        self.backend
            .build(templates, self.seed())
            .map_err(|e| SimError::Config(e.to_string()))
    }
}

/// Builds the world and runs it for `ticks` waking ticks.
pub fn run(config: WorldConfig, gateway: &Gateway, ticks: u64) -> Result<World, SimError> {
    let mut w = World::new(config)?;
    w.run(gateway, ticks, None)?;
    Ok(w)
}
