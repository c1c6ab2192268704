//! Agent state and the three-tier memory store.
//!
//! Full records hold every experience, summarized records hold distilled
//! insights with provenance, and relational records hold one entry per
//! acquaintance. [`AgentState`] bundles the store with persona, needs,
//! affect, memo and schedule.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{AffectState, EmotionVector, PersonalityProfile};
use crate::backend::{BackendError, ExpectedFormat, Gateway};
use crate::clock::Tick;

pub type AgentId = u32;
pub type RecordId = u64;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Short,
    Long,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub text: String,
    pub horizon: Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: AgentId,
    pub name: String,
    pub gender: String,
    pub age: u32,
    pub occupation: String,
    pub big_five: PersonalityProfile,
    /// Prose per trait, in profile order.
    #[serde(default)]
    pub trait_descriptions: Vec<String>,
    #[serde(default)]
    pub goals: Vec<Goal>,
    #[serde(default)]
    pub home: String,
    #[serde(default)]
    pub workplace: Option<String>,
    #[serde(default)]
    pub appearance: String,
    /// Extra persona lines (experiment instructions, value statements).
    #[serde(default)]
    pub notes: Vec<String>,
}

const TRAIT_WORDS: [(&str, &str, &str); 5] = [
    ("extraversion", "outgoing and energetic", "reserved and quiet"),
    ("agreeableness", "warm and cooperative", "blunt and competitive"),
    ("neuroticism", "easily worried and sensitive", "calm and emotionally stable"),
    ("openness", "curious and imaginative", "practical and conventional"),
    ("conscientiousness", "organized and dependable", "spontaneous and easygoing"),
];

/// One phrase per trait; the cut is at 0.5.
pub fn describe_traits(p: &PersonalityProfile) -> Vec<String> {
    p.to_array()
        .iter()
        .zip(TRAIT_WORDS)
        .map(|(v, (name, hi, lo))| {
            let word = if *v >= 0.5 { hi } else { lo };
            format!("{word} ({name} {v:.2})")
        })
        .collect()
}

/// Adjectives for self-judgement prompts.
pub fn trait_adjectives(p: &PersonalityProfile) -> Vec<&'static str> {
    p.to_array()
        .iter()
        .zip(TRAIT_WORDS)
        .map(|(v, (_, hi, lo))| {
            let phrase = if *v >= 0.5 { hi } else { lo };
            phrase.split(" and ").next().unwrap_or(phrase)
        })
        .collect()
}

impl AgentProfile {
    pub fn new(id: AgentId, name: &str, gender: &str, age: u32, occupation: &str, big_five: PersonalityProfile) -> Self {
        AgentProfile {
            id,
            name: name.to_string(),
            gender: gender.to_string(),
            age,
            occupation: occupation.to_string(),
            trait_descriptions: describe_traits(&big_five),
            big_five,
            goals: Vec::new(),
            home: format!("home of {name}"),
            workplace: None,
            appearance: String::new(),
            notes: Vec::new(),
        }
    }

    pub fn goals_text(&self) -> String {
        if self.goals.is_empty() {
            return "none in particular".into();
        }
        self.goals
            .iter()
            .map(|g| {
                let h = match g.horizon {
                    Horizon::Short => "short-term",
                    Horizon::Long => "long-term",
                };
                format!("{} ({h})", g.text)
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Persona paragraph opening every prompt.
    pub fn persona(&self) -> String {
        let traits = if self.trait_descriptions.is_empty() {
            describe_traits(&self.big_five)
        } else {
            self.trait_descriptions.clone()
        };
        let mut s = format!(
            "You are {}, a {}-year-old {} working as {}. Your personality: {}.",
            self.name,
            self.age,
            self.gender,
            self.occupation,
            traits.join(", ")
        );
        for n in &self.notes {
            s.push(' ');
            s.push_str(n);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Need {
    Fullness,
    Fun,
    Health,
    Social,
    Energy,
}

impl Need {
    pub const ALL: [Need; 5] = [Need::Fullness, Need::Fun, Need::Health, Need::Social, Need::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Need::Fullness => "fullness",
            Need::Fun => "fun",
            Need::Health => "health",
            Need::Social => "social",
            Need::Energy => "energy",
        }
    }
}

impl fmt::Display for Need {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeedsState {
    pub fullness: f64,
    pub fun: f64,
    pub health: f64,
    pub social: f64,
    pub energy: f64,
}

impl Default for NeedsState {
    fn default() -> Self {
        NeedsState {
            fullness: 0.5,
            fun: 0.5,
            health: 0.5,
            social: 0.5,
            energy: 1.0,
        }
    }
}

impl NeedsState {
    pub fn get(&self, n: Need) -> f64 {
        match n {
            Need::Fullness => self.fullness,
            Need::Fun => self.fun,
            Need::Health => self.health,
            Need::Social => self.social,
            Need::Energy => self.energy,
        }
    }

    pub fn set(&mut self, n: Need, v: f64) {
        let v = v.clamp(0.0, 1.0);
        match n {
            Need::Fullness => self.fullness = v,
            Need::Fun => self.fun = v,
            Need::Health => self.health = v,
            Need::Social => self.social = v,
            Need::Energy => self.energy = v,
        }
    }

    pub fn add(&mut self, n: Need, delta: f64) {
        self.set(n, self.get(n) + delta);
    }

    /// Lowest need; ties go to the earlier need in [`Need::ALL`].
    pub fn min(&self) -> (Need, f64) {
        Need::ALL
            .into_iter()
            .map(|n| (n, self.get(n)))
            .fold((Need::Fullness, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    pub fn in_bounds(&self) -> bool {
        Need::ALL.iter().all(|n| (0.0..=1.0).contains(&self.get(*n)))
    }

    pub fn describe(&self) -> String {
        Need::ALL
            .iter()
            .map(|n| format!("{n} {:.2}", self.get(*n)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "with", rename_all = "lowercase")]
pub enum MemoSource {
    #[serde(rename = "self")]
    SelfNote,
    Commitment(AgentId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoEntry {
    pub text: String,
    pub due: Option<Tick>,
    pub source: MemoSource,
    pub created: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullMemoryRecord {
    pub id: RecordId,
    pub tick: Tick,
    pub location: String,
    pub content: String,
    pub importance: f64,
    /// Emotion levels right after the experience; 0.5 is neutral.
    pub emotional_response: EmotionVector,
    /// Free tag such as `imagined` or `inspiration`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl FullMemoryRecord {
    /// A record awaiting an id from [`MemoryStore::record_event`].
    pub fn new(tick: Tick, location: &str, content: &str, importance: f64, emotional_response: EmotionVector) -> Self {
        FullMemoryRecord {
            id: 0,
            tick,
            location: location.to_string(),
            content: content.to_string(),
            importance: importance.clamp(0.0, 1.0),
            emotional_response,
            tag: None,
        }
    }

    pub fn tagged(mut self, tag: &str) -> Self {
        self.tag = Some(tag.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizedMemoryRecord {
    pub id: RecordId,
    pub period: (Tick, Tick),
    pub insight: String,
    pub importance: f64,
    pub provenance: Vec<RecordId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub tick: Tick,
    pub location: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationalMemoryRecord {
    pub other_agent: AgentId,
    #[serde(default)]
    pub other_name: String,
    pub relationship_kind: String,
    pub intimacy: f64,
    pub impression: String,
    pub interactions: Vec<Interaction>,
}

impl RelationalMemoryRecord {
    pub fn display_name(&self) -> String {
        if self.other_name.is_empty() {
            format!("agent {}", self.other_agent)
        } else {
            self.other_name.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start: Tick,
    /// Exclusive.
    pub end: Tick,
    pub activity: String,
    #[serde(default)]
    pub location: String,
    pub importance: f64,
}

impl ScheduleEntry {
    pub fn contains(&self, tick: Tick) -> bool {
        self.start <= tick && tick < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalParams {
    pub w_rel: f64,
    pub w_rec: f64,
    pub w_imp: f64,
    /// Age in ticks at which recency scores 0.5.
    pub recency_half_life: f64,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        RetrievalParams {
            w_rel: 0.5,
            w_rec: 0.3,
            w_imp: 0.2,
            recency_half_life: 96.0,
        }
    }
}

impl RetrievalParams {
    pub fn recency(&self, age: f64) -> f64 {
        (-(std::f64::consts::LN_2 / self.recency_half_life) * age.max(0.0)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryParams {
    pub importance_threshold: f64,
    pub emotion_threshold: f64,
}

impl Default for SummaryParams {
    fn default() -> Self {
        SummaryParams {
            importance_threshold: 0.3,
            emotion_threshold: 0.1,
        }
    }
}

impl SummaryParams {
    /// Unimportant and emotionally neutral.
    pub fn discards(&self, r: &FullMemoryRecord) -> bool {
        r.importance < self.importance_threshold && r.emotional_response.deviation_from_neutral() < self.emotion_threshold
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryOutcome {
    pub summaries: Vec<SummarizedMemoryRecord>,
    pub deleted: Vec<RecordId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoreMeta {
    owner: AgentId,
    next_id: RecordId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryStore {
    pub owner: AgentId,
    next_id: RecordId,
    pub full: Vec<FullMemoryRecord>,
    pub summarized: Vec<SummarizedMemoryRecord>,
    pub relations: BTreeMap<AgentId, RelationalMemoryRecord>,
    pub retrieval: RetrievalParams,
    pub summary: SummaryParams,
}

impl MemoryStore {
    pub fn new(owner: AgentId) -> Self {
        MemoryStore {
            owner,
            next_id: 1,
            full: Vec::new(),
            summarized: Vec::new(),
            relations: BTreeMap::new(),
            retrieval: RetrievalParams::default(),
            summary: SummaryParams::default(),
        }
    }

    fn fresh_id(&mut self) -> RecordId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn record_event(&mut self, mut record: FullMemoryRecord) -> RecordId {
        record.id = self.fresh_id();
        record.importance = record.importance.clamp(0.0, 1.0);
        let id = record.id;
        self.full.push(record);
        id
    }

    pub fn get(&self, id: RecordId) -> Option<&FullMemoryRecord> {
        self.full.iter().find(|r| r.id == id)
    }

    /// Top `k` full records for `query`. `relevance` scores (query, content).
    pub fn retrieve_with(
        &self,
        query: &str,
        k: usize,
        now: Tick,
        relevance: impl Fn(&str, &str) -> f64,
    ) -> Vec<&FullMemoryRecord> {
        let p = self.retrieval;
        let mut scored: Vec<(f64, &FullMemoryRecord)> = self
            .full
            .iter()
            .map(|r| {
                let age = now.saturating_sub(r.tick) as f64;
                let s = p.w_rel * relevance(query, &r.content) + p.w_rec * p.recency(age) + p.w_imp * r.importance;
                (s, r)
            })
            .collect();
        scored.sort_by(|(sa, a), (sb, b)| {
            sb.total_cmp(sa)
                .then_with(|| b.tick.cmp(&a.tick))
                .then_with(|| a.id.cmp(&b.id))
        });
        scored.into_iter().take(k.max(1)).map(|(_, r)| r).collect()
    }

    /// Retrieval with the gateway's similarity (embedding cosine, token
    /// overlap when embeddings fail).
    pub fn retrieve(&self, query: &str, k: usize, now: Tick, gateway: &Gateway) -> Vec<&FullMemoryRecord> {
        self.retrieve_with(query, k, now, |q, c| gateway.similarity(q, c))
    }

    pub fn records_in(&self, period: (Tick, Tick)) -> Vec<&FullMemoryRecord> {
        self.full
            .iter()
            .filter(|r| r.tick >= period.0 && r.tick <= period.1)
            .collect()
    }

    /// Drops unimportant neutral records of the closed `period`, distills the
    /// rest (one backend call per location) and removes the originals. On a
    /// backend error nothing changes.
    pub fn summarize_tier(
        &mut self,
        period: (Tick, Tick),
        gateway: &Gateway,
        persona: &str,
    ) -> Result<SummaryOutcome, BackendError> {
        let in_period = self.records_in(period);
        let mut deleted = Vec::new();
        let mut groups: BTreeMap<&str, Vec<&FullMemoryRecord>> = BTreeMap::new();
        for r in &in_period {
            if self.summary.discards(r) {
                deleted.push(r.id);
            } else {
                groups.entry(r.location.as_str()).or_default().push(r);
            }
        }
        let mut drafts = Vec::new();
        for (location, records) in &groups {
            let memories = records
                .iter()
                .map(|r| format!("- {}", r.content))
                .collect::<Vec<_>>()
                .join("\n");
            let resp = gateway.ask(
                "memory_summary",
                &[
                    ("persona", persona.to_string()),
                    ("location", location.to_string()),
                    ("memories", memories),
                ],
                ExpectedFormat::JsonSchema("memory_summary".into()),
            )?;
            let insight = resp
                .json()
                .and_then(|v| v.get("insight"))
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .unwrap_or_else(|| resp.text.trim().to_string());
            let start = records.iter().map(|r| r.tick).min().unwrap_or(period.0);
            let end = records.iter().map(|r| r.tick).max().unwrap_or(period.1);
            let importance = records.iter().map(|r| r.importance).fold(0.0, f64::max);
            drafts.push(((start, end), insight, importance, records.iter().map(|r| r.id).collect::<Vec<_>>()));
        }
        let mut summaries = Vec::new();
        for (p, insight, importance, provenance) in drafts {
            let rec = SummarizedMemoryRecord {
                id: self.fresh_id(),
                period: p,
                insight,
                importance,
                provenance,
            };
            summaries.push(rec);
        }
        self.full.retain(|r| r.tick < period.0 || r.tick > period.1);
        self.summarized.extend(summaries.iter().cloned());
        Ok(SummaryOutcome { summaries, deleted })
    }

    /// Adds a higher-level insight directly to the summarized tier.
    pub fn add_insight(&mut self, period: (Tick, Tick), insight: &str, importance: f64, provenance: Vec<RecordId>) -> RecordId {
        let id = self.fresh_id();
        self.summarized.push(SummarizedMemoryRecord {
            id,
            period,
            insight: insight.to_string(),
            importance: importance.clamp(0.0, 1.0),
            provenance,
        });
        id
    }

    pub fn recent_insights(&self, n: usize) -> Vec<&SummarizedMemoryRecord> {
        let skip = self.summarized.len().saturating_sub(n);
        self.summarized.iter().skip(skip).collect()
    }

    pub fn relation(&self, other: AgentId) -> Option<&RelationalMemoryRecord> {
        self.relations.get(&other)
    }

    pub fn is_acquainted(&self, other: AgentId) -> bool {
        self.relations.contains_key(&other)
    }

    /// Seeds a relationship without an interaction.
    pub fn set_relationship(&mut self, other: AgentId, name: &str, kind: &str, intimacy: f64, impression: &str) {
        self.relations.insert(
            other,
            RelationalMemoryRecord {
                other_agent: other,
                other_name: name.to_string(),
                relationship_kind: kind.to_string(),
                intimacy: intimacy.clamp(0.0, 1.0),
                impression: impression.to_string(),
                interactions: Vec::new(),
            },
        );
    }

    /// Unknown agents start as strangers at intimacy 0.5.
    pub fn update_relationship(
        &mut self,
        other: AgentId,
        delta_intimacy: f64,
        impression: Option<&str>,
        interaction: Interaction,
    ) -> &RelationalMemoryRecord {
        let rec = self.relations.entry(other).or_insert_with(|| RelationalMemoryRecord {
            other_agent: other,
            other_name: String::new(),
            relationship_kind: "stranger".into(),
            intimacy: 0.5,
            impression: String::new(),
            interactions: Vec::new(),
        });
        let d = if delta_intimacy.is_finite() { delta_intimacy } else { 0.0 };
        rec.intimacy = (rec.intimacy + d).clamp(0.0, 1.0);
        if let Some(i) = impression {
            rec.impression = i.to_string();
        }
        rec.interactions.push(interaction);
        rec
    }

    pub fn set_name(&mut self, other: AgentId, name: &str) {
        if let Some(r) = self.relations.get_mut(&other) {
            r.other_name = name.to_string();
        }
    }

    pub fn set_impression(&mut self, other: AgentId, impression: &str) -> bool {
        match self.relations.get_mut(&other) {
            Some(r) => {
                r.impression = impression.to_string();
                true
            }
            None => false,
        }
    }

    /// Writes `full.jsonl`, `summarized.jsonl`, `relational.jsonl` and
    /// `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), MemoryError> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| MemoryError::Io { path: path.clone(), source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        write_jsonl(&dir.join("full.jsonl"), &self.full)?;
        write_jsonl(&dir.join("summarized.jsonl"), &self.summarized)?;
        let rels: Vec<_> = self.relations.values().collect();
        write_jsonl(&dir.join("relational.jsonl"), &rels)?;
        let meta = StoreMeta {
            owner: self.owner,
            next_id: self.next_id,
        };
        let mp = dir.join("meta.json");
        fs::write(&mp, serde_json::to_string(&meta).expect("meta serializes")).map_err(io(&mp))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, MemoryError> {
        let mp = dir.join("meta.json");
        let raw = fs::read_to_string(&mp).map_err(|source| MemoryError::Io {
            path: mp.display().to_string(),
            source,
        })?;
        let meta: StoreMeta = serde_json::from_str(&raw).map_err(|e| MemoryError::Parse {
            path: mp.display().to_string(),
            line: 1,
            message: e.to_string(),
        })?;
        let mut store = MemoryStore::new(meta.owner);
        store.next_id = meta.next_id;
        store.full = read_jsonl(&dir.join("full.jsonl"))?;
        store.summarized = read_jsonl(&dir.join("summarized.jsonl"))?;
        let rels: Vec<RelationalMemoryRecord> = read_jsonl(&dir.join("relational.jsonl"))?;
        store.relations = rels.into_iter().map(|r| (r.other_agent, r)).collect();
        Ok(store)
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), MemoryError> {
    let err = |source| MemoryError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(err)?;
    for it in items {
        writeln!(f, "{}", serde_json::to_string(it).expect("record serializes")).map_err(err)?;
    }
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, MemoryError> {
    let err = |source| MemoryError::Io {
        path: path.display().to_string(),
        source,
    };
    let f = fs::File::open(path).map_err(err)?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(err)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| MemoryError::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Everything one agent carries between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub profile: AgentProfile,
    pub needs: NeedsState,
    pub affect: AffectState,
    pub memo: Vec<MemoEntry>,
    pub schedule: Vec<ScheduleEntry>,
    pub memory: MemoryStore,
}

impl AgentState {
    pub fn new(profile: AgentProfile, layered_affect: bool) -> Self {
        let affect = AffectState::new(&profile.big_five, layered_affect);
        let memory = MemoryStore::new(profile.id);
        AgentState {
            profile,
            needs: NeedsState::default(),
            affect,
            memo: Vec::new(),
            schedule: Vec::new(),
            memory,
        }
    }

    pub fn id(&self) -> AgentId {
        self.profile.id
    }

    pub fn persona(&self) -> String {
        self.profile.persona()
    }

    /// Appends a memo entry unless an identical one exists. Returns whether
    /// it was added.
    pub fn add_memo(&mut self, entry: MemoEntry) -> bool {
        let dup = self
            .memo
            .iter()
            .any(|m| m.text == entry.text && m.due == entry.due && m.source == entry.source);
        if !dup {
            self.memo.push(entry);
        }
        !dup
    }

    pub fn memo_text(&self) -> String {
        if self.memo.is_empty() {
            return "empty".into();
        }
        self.memo
            .iter()
            .map(|m| m.text.clone())
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Records an experience stamped with the current emotions.
    pub fn remember(&mut self, tick: Tick, location: &str, content: &str, importance: f64) -> RecordId {
        let rec = FullMemoryRecord::new(tick, location, content, importance, self.affect.emotions);
        self.memory.record_event(rec)
    }

    pub fn schedule_at(&self, tick: Tick) -> Option<&ScheduleEntry> {
        self.schedule.iter().find(|e| e.contains(tick))
    }
}
