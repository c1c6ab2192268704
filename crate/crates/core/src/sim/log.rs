//! Trajectory events and the per-tick summary table.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::affect::{AffectState, EmotionVector, Octant};
use crate::clock::Tick;
use crate::memory::{AgentId, AgentState, NeedsState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Init,
    Action,
    Move,
    Conversation,
    Emotion,
    Mood,
    Need,
    Dmn,
    Plan,
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub emotions: EmotionVector,
    pub needs: NeedsState,
    pub mood_octant: Octant,
}

impl Snapshot {
    pub fn of(agent: &AgentState) -> Self {
        Snapshot {
            emotions: agent.affect.emotions,
            needs: agent.needs,
            mood_octant: agent.affect.mood.octant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub tick: Tick,
    pub agent: AgentId,
    pub kind: EventKind,
    pub payload: Value,
    pub snapshot: Snapshot,
}

/// One line per event, in log order.
pub fn to_jsonl(events: &[TrajectoryEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, events: &[TrajectoryEvent]) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(to_jsonl(events).as_bytes())?;
    w.flush()
}

pub fn read_jsonl(path: &Path) -> std::io::Result<Vec<TrajectoryEvent>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
        .collect()
}

/// SHA-256 of the JSON Lines rendering.
pub fn digest(events: &[TrajectoryEvent]) -> String {
    hex::encode(Sha256::digest(to_jsonl(events).as_bytes()))
}

/// State of one agent at the end of one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub tick: Tick,
    pub time: String,
    pub agent: AgentId,
    pub name: String,
    pub location: String,
    pub activity: String,
    pub happiness: f64,
    pub sadness: f64,
    pub anger: f64,
    pub fear: f64,
    pub disgust: f64,
    pub surprise: f64,
    pub fullness: f64,
    pub fun: f64,
    pub health: f64,
    pub social: f64,
    pub energy: f64,
    pub mood_p: f64,
    pub mood_a: f64,
    pub mood_d: f64,
    pub mood_intensity: f64,
    pub mood_octant: String,
}

impl SummaryRow {
    pub fn new(tick: Tick, time: String, agent: &AgentState, location: &str, activity: &str) -> Self {
        let AffectState { emotions: e, mood, .. } = &agent.affect;
        let n = &agent.needs;
        SummaryRow {
            tick,
            time,
            agent: agent.id(),
            name: agent.profile.name.clone(),
            location: location.to_string(),
            activity: activity.to_string(),
            happiness: e.happiness,
            sadness: e.sadness,
            anger: e.anger,
            fear: e.fear,
            disgust: e.disgust,
            surprise: e.surprise,
            fullness: n.fullness,
            fun: n.fun,
            health: n.health,
            social: n.social,
            energy: n.energy,
            mood_p: mood.position.p,
            mood_a: mood.position.a,
            mood_d: mood.position.d,
            mood_intensity: mood.intensity,
            mood_octant: mood.octant.name().to_string(),
        }
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}
