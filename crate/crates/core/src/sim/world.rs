//! Static description of a town: clock, places, residents and their
//! initial relationships, plus the model parameters a run uses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::needs::NeedsParams;
use crate::affect::{AffectParams, PersonalityProfile};
use crate::clock::Clock;
use crate::cognition::{Ablation, DmnStrategy, PriorityParams, SnConfig};
use crate::memory::{AgentId, AgentProfile, Goal, Horizon, RetrievalParams, SummaryParams};
use crate::social::SocialParams;

pub const CENTRAL_SQUARE: &str = "central square";

pub const TOWN_PLACES: [&str; 7] = ["restaurant", "cafe", "library", "clinic", "store", "park", CENTRAL_SQUARE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipSeed {
    pub a: AgentId,
    pub b: AgentId,
    pub kind: String,
    pub intimacy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    #[serde(default)]
    pub clock: Clock,
    /// Public places. Homes come from the agents' profiles.
    #[serde(default = "default_places")]
    pub locations: Vec<String>,
    /// Undirected links. Empty means every place links to the central
    /// square only.
    #[serde(default)]
    pub adjacency: Vec<(String, String)>,
    pub agents: Vec<AgentProfile>,
    #[serde(default)]
    pub relationships: Vec<RelationshipSeed>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ablation")]
    pub ablation: Ablation,
    #[serde(default)]
    pub affect: AffectParams,
    #[serde(default)]
    pub priority: PriorityParams,
    #[serde(default)]
    pub sn: SnConfig,
    #[serde(default)]
    pub dmn_strategy: DmnStrategy,
    #[serde(default)]
    pub social: SocialParams,
    #[serde(default)]
    pub needs: NeedsParams,
    #[serde(default)]
    pub retrieval: RetrievalParams,
    #[serde(default)]
    pub summary: SummaryParams,
    /// Ticks between two conversations of the same pair.
    #[serde(default = "default_cooldown")]
    pub conversation_cooldown: u64,
}

fn default_places() -> Vec<String> {
    TOWN_PLACES.iter().map(|s| s.to_string()).collect()
}

fn default_seed() -> u64 {
    7
}

fn default_ablation() -> Ablation {
    Ablation::Full
}

fn default_cooldown() -> u64 {
    8
}

impl WorldConfig {
    pub fn new(agents: Vec<AgentProfile>, seed: u64) -> Self {
        WorldConfig {
            clock: Clock::default(),
            locations: default_places(),
            adjacency: Vec::new(),
            agents,
            relationships: Vec::new(),
            seed,
            ablation: Ablation::Full,
            affect: AffectParams::default(),
            priority: PriorityParams::default(),
            sn: SnConfig::default(),
            dmn_strategy: DmnStrategy::Cyclic,
            social: SocialParams::default(),
            needs: NeedsParams::default(),
            retrieval: RetrievalParams::default(),
            summary: SummaryParams::default(),
            conversation_cooldown: default_cooldown(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.clock.validate()?;
        self.affect.validate()?;
        self.priority.validate()?;
        self.sn.validate()?;
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if !ids.insert(a.id) {
                return Err(format!("duplicate agent id {}", a.id));
            }
            if a.home.trim().is_empty() {
                return Err(format!("agent {} ({}) has no home", a.id, a.name));
            }
            if !a.big_five.is_valid() {
                return Err(format!("agent {} has personality traits outside [0, 1]", a.id));
            }
        }
        for r in &self.relationships {
            if !ids.contains(&r.a) || !ids.contains(&r.b) || r.a == r.b {
                return Err(format!("relationship {}-{} names an unknown agent", r.a, r.b));
            }
        }
        let places: BTreeSet<&str> = self.all_places().into_iter().collect();
        for (x, y) in &self.adjacency {
            if !places.contains(x.as_str()) || !places.contains(y.as_str()) {
                return Err(format!("adjacency {x} - {y} names an unknown place"));
            }
        }
        let g = self.graph();
        let start = self.all_places()[0];
        for p in self.all_places() {
            if hops(&g, start, p).is_none() {
                return Err(format!("{p} is unreachable"));
            }
        }
        Ok(())
    }

    /// Public places followed by homes, without duplicates.
    pub fn all_places(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.locations.iter().map(String::as_str).collect();
        for a in &self.agents {
            if !out.contains(&a.home.as_str()) {
                out.push(&a.home);
            }
        }
        out
    }

    pub fn graph(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut g: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut link = |x: &str, y: &str| {
            g.entry(x.to_string()).or_default().insert(y.to_string());
            g.entry(y.to_string()).or_default().insert(x.to_string());
        };
        if self.adjacency.is_empty() {
            for p in self.all_places() {
                if p != CENTRAL_SQUARE {
                    link(p, CENTRAL_SQUARE);
                }
            }
        } else {
            for (x, y) in &self.adjacency {
                link(x, y);
            }
        }
        g
    }
}

/// Shortest hop count between two places.
pub fn hops(graph: &BTreeMap<String, BTreeSet<String>>, from: &str, to: &str) -> Option<u64> {
    if from == to {
        return Some(0);
    }
    let mut seen = BTreeSet::from([from.to_string()]);
    let mut queue = VecDeque::from([(from.to_string(), 0u64)]);
    while let Some((p, d)) = queue.pop_front() {
        for n in graph.get(&p).into_iter().flatten() {
            if n == to {
                return Some(d + 1);
            }
            if seen.insert(n.clone()) {
                queue.push_back((n.clone(), d + 1));
            }
        }
    }
    None
}

const WOMEN: [&str; 4] = ["Alice Chen", "Maria Lopez", "Hana Sato", "Grace Miller"];
const MEN: [&str; 4] = ["David Kim", "Omar Haddad", "Lucas Weber", "Samuel Brown"];

const JOBS: [(&str, &str); 6] = [
    ("chef", "restaurant"),
    ("barista", "cafe"),
    ("librarian", "library"),
    ("doctor", "clinic"),
    ("shopkeeper", "store"),
    ("park keeper", "park"),
];

const LOOKS: [&str; 8] = [
    "wears a neat jacket and smiles often",
    "carries a worn backpack and looks around curiously",
    "has paint on their sleeves and hums quietly",
    "is tall, in running clothes, checking a watch",
    "wears glasses and holds a paperback",
    "dresses plainly and walks quickly",
    "has a friendly dog on a leash",
    "wears a bright scarf and talks on the phone",
];

/// The eight-resident town: ages 20 to 60, four women and four men, random
/// personalities, six workers and two unemployed newcomers, with family,
/// cooperative-competitive and antagonistic ties; everyone else is a
/// stranger. Everything is drawn from `seed`.
pub fn daily_life(seed: u64) -> WorldConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names: Vec<(&str, &str)> = WOMEN
        .iter()
        .map(|n| (*n, "woman"))
        .chain(MEN.iter().map(|n| (*n, "man")))
        .collect();
    names.shuffle(&mut rng);
    let mut agents = Vec::new();
    for (i, (name, gender)) in names.into_iter().enumerate() {
        let big_five = PersonalityProfile::from_array(std::array::from_fn(|_| rng.gen::<f64>()));
        let age = rng.gen_range(20..=60);
        let id = i as AgentId + 1;
        let (occupation, workplace, goals) = if i < JOBS.len() {
            let (job, place) = JOBS[i];
            (
                job.to_string(),
                Some(place.to_string()),
                vec![
                    Goal {
                        text: format!("do good work at the {place}"),
                        horizon: Horizon::Short,
                    },
                    Goal {
                        text: "build closer friendships in town".into(),
                        horizon: Horizon::Long,
                    },
                ],
            )
        } else {
            (
                "newcomer looking for work".to_string(),
                None,
                vec![
                    Goal {
                        text: "find a job in town".into(),
                        horizon: Horizon::Short,
                    },
                    Goal {
                        text: "get to know the neighbours".into(),
                        horizon: Horizon::Long,
                    },
                ],
            )
        };
        let mut p = AgentProfile::new(id, name, gender, age, &occupation, big_five);
        p.workplace = workplace;
        p.goals = goals;
        p.appearance = LOOKS[i].to_string();
        agents.push(p);
    }
    let relationships = vec![
        RelationshipSeed { a: 1, b: 2, kind: "family".into(), intimacy: 0.8 },
        RelationshipSeed { a: 3, b: 4, kind: "family".into(), intimacy: 0.75 },
        RelationshipSeed { a: 2, b: 3, kind: "colleague and rival".into(), intimacy: 0.5 },
        RelationshipSeed { a: 5, b: 6, kind: "colleague and rival".into(), intimacy: 0.45 },
        RelationshipSeed { a: 1, b: 5, kind: "antagonist".into(), intimacy: 0.15 },
        RelationshipSeed { a: 4, b: 6, kind: "friend".into(), intimacy: 0.65 },
    ];
    WorldConfig {
        relationships,
        ..WorldConfig::new(agents, seed)
    }
}
