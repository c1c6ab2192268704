//! The five paradigms. Each runs one repetition: it builds subjects, drives
//! them through the protocol's phases, enforces the environment mechanics and
//! records observations on a [`Sheet`].

mod diffusion;
mod dissonance;
mod fitd;
mod helplessness;
mod ostracism;

use cogtown_core::backend::{BackendError, Gateway};
use cogtown_core::memory::AgentId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::protocol::{ExperimentKind, ExperimentProtocol, GroupSpec, Variant};
use crate::results::Sheet;
use crate::subject::{generate_profiles, AffectSnapshot, Subject};

pub use diffusion::{HELP_ACTIONS, INSTRUCT_ACTION, FOLLOW_ACTION};

/// One logged step of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub repetition: usize,
    pub agent: AgentId,
    pub name: String,
    pub group: String,
    pub phase: String,
    pub trial: usize,
    pub data: Value,
    pub affect: AffectSnapshot,
}

/// Everything one repetition produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub repetition: usize,
    pub sheet: Sheet,
    pub trials: Vec<TrialOutcome>,
    pub flags: Vec<String>,
    pub invalid: usize,
}

impl RepOutcome {
    pub(crate) fn log(&mut self, s: &Subject, phase: &str, trial: usize, data: Value) {
        self.trials.push(TrialOutcome {
            repetition: self.repetition,
            agent: s.id(),
            name: s.name().to_string(),
            group: s.group.clone(),
            phase: phase.to_string(),
            trial,
            data,
            affect: s.snapshot(),
        });
    }

    pub(crate) fn note(&mut self, s: &Subject, what: &str) {
        self.flags.push(format!("rep {} agent {} ({}): {what}", self.repetition, s.id(), s.group));
    }
}

pub(crate) struct Ctx<'a> {
    pub p: &'a ExperimentProtocol,
    pub gw: Gateway,
    pub rng: ChaCha8Rng,
}

impl Ctx<'_> {
    /// Fresh subjects in group order.
    pub fn subjects(&mut self) -> Vec<Subject> {
        let profiles = generate_profiles(&self.p.population, self.p.n_agents, &mut self.rng);
        self.p
            .assignment()
            .into_iter()
            .zip(profiles)
            .map(|((g, slot), prof)| Subject::new(prof, &g.label, slot, self.p.ablation))
            .collect()
    }

    pub fn group(&self, s: &Subject) -> &GroupSpec {
        self.p.group(&s.group).expect("subjects come from protocol groups")
    }

    pub fn rest(&mut self, s: &mut Subject) -> Result<Vec<String>, BackendError> {
        s.rest(&self.gw, self.p.dmn_episodes, &mut self.rng)
    }
}

/// Seed for repetition `rep`, decorrelated from neighbouring repetitions.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(rep as u64 + 1)
}

/// Runs one repetition. `gw` must carry the lab templates.
pub fn run_repetition(p: &ExperimentProtocol, gw: &Gateway, rep: usize) -> Result<RepOutcome, BackendError> {
    let seed = repetition_seed(p.seed, rep);
    let mut ctx = Ctx {
        p,
        gw: gw.with_seed(seed),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut out = RepOutcome {
        repetition: rep,
        ..RepOutcome::default()
    };
    match p.name {
        ExperimentKind::Helplessness => helplessness::run(&mut ctx, &mut out)?,
        ExperimentKind::Dissonance => dissonance::run(&mut ctx, &mut out)?,
        ExperimentKind::Fitd => fitd::run(&mut ctx, &mut out)?,
        ExperimentKind::Diffusion => diffusion::run(&mut ctx, &mut out)?,
        ExperimentKind::Ostracism => ostracism::run(&mut ctx, &mut out)?,
    }
    Ok(out)
}

/// Experiment-specific protocol checks beyond the shared ones.
pub(crate) fn check(p: &ExperimentProtocol) -> Result<(), String> {
    match p.name {
        ExperimentKind::Helplessness => helplessness::check(p),
        ExperimentKind::Dissonance => dissonance::check(p),
        ExperimentKind::Fitd => fitd::check(p),
        ExperimentKind::Diffusion => diffusion::check(p),
        ExperimentKind::Ostracism => ostracism::check(p),
    }
}

pub(crate) fn is_extended(p: &ExperimentProtocol) -> bool {
    p.variant == Variant::Extended
}
