//! Conversations between agents: the trigger, the stranger gate, dialogue
//! generation and the bookkeeping afterwards.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::affect::{AffectParams, Emotion, EmotionEvent};
use crate::backend::{BackendError, ExpectedFormat, Gateway};
use crate::clock::{Clock, Tick};
use crate::memory::{AgentId, AgentState, Interaction, MemoEntry, MemoSource, NeedsState, RelationalMemoryRecord};

pub const END_MARKER: &str = "[END]";
pub const INTERRUPTED: &str = "interrupted";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceInfo {
    pub appearance: String,
    pub behavior: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterContext {
    pub self_id: AgentId,
    pub other: AgentId,
    pub location: String,
    pub other_surface: SurfaceInfo,
    pub acquainted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialParams {
    pub base: f64,
    pub intimacy_weight: f64,
    pub deficit_weight: f64,
    pub max_turns: usize,
    pub max_intimacy_delta: f64,
}

impl Default for SocialParams {
    fn default() -> Self {
        SocialParams {
            base: 0.2,
            intimacy_weight: 0.5,
            deficit_weight: 0.3,
            max_turns: 8,
            max_intimacy_delta: 0.2,
        }
    }
}

impl SocialParams {
    pub fn trigger_probability(&self, intimacy: f64, social_need: f64) -> f64 {
        (self.base + self.intimacy_weight * intimacy + self.deficit_weight * (1.0 - social_need)).clamp(0.0, 1.0)
    }
}

/// Outcome of the trigger, kept for the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerDecision {
    pub converse: bool,
    pub probability: f64,
    /// Surface judgement for strangers; `None` for acquaintances.
    pub willing: Option<bool>,
}

/// Acquaintances converse with probability rising in intimacy and in the
/// social deficit. Strangers first pass a backend judgement of the other's
/// surface and then use intimacy 0.
#[allow(clippy::too_many_arguments)]
pub fn should_converse<R: Rng + ?Sized>(
    ctx: &EncounterContext,
    needs: &NeedsState,
    relation: Option<&RelationalMemoryRecord>,
    params: &SocialParams,
    gateway: &Gateway,
    persona: &str,
    rng: &mut R,
) -> Result<TriggerDecision, BackendError> {
    let (intimacy, willing) = match (ctx.acquainted, relation) {
        (true, Some(r)) => (r.intimacy, None),
        _ => {
            let resp = gateway.ask(
                "surface_judgement",
                &[
                    ("persona", persona.to_string()),
                    ("location", ctx.location.clone()),
                    ("appearance", ctx.other_surface.appearance.clone()),
                    ("behavior", ctx.other_surface.behavior.clone()),
                ],
                ExpectedFormat::Choice(vec!["yes".into(), "no".into()]),
            )?;
            let yes = resp.choice() == Some("yes");
            if !yes {
                return Ok(TriggerDecision {
                    converse: false,
                    probability: 0.0,
                    willing: Some(false),
                });
            }
            (0.0, Some(true))
        }
    };
    let p = params.trigger_probability(intimacy, needs.social);
    Ok(TriggerDecision {
        converse: rng.gen::<f64>() < p,
        probability: p,
        willing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: AgentId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub participants: (AgentId, AgentId),
    pub tick: Tick,
    pub location: String,
    pub turns: Vec<Turn>,
    pub summary: String,
    pub commitments: Vec<MemoEntry>,
    pub intimacy_deltas: (f64, f64),
    /// Emotion each party took away, in participant order.
    pub ratings: Vec<(AgentId, EmotionEvent)>,
    pub interrupted: bool,
}

struct Extraction {
    summary: String,
    deltas: (f64, f64),
    impressions: (Option<String>, Option<String>),
    commitments: Vec<(String, Option<Tick>)>,
}

fn extract(
    v: &Value,
    clock: &Clock,
    tick: Tick,
    limit: f64,
) -> Extraction {
    let num = |k: &str| v.get(k).and_then(Value::as_f64).unwrap_or(0.0).clamp(-limit, limit);
    let s = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_string).filter(|x| !x.is_empty());
    let mut commitments: Vec<(String, Option<Tick>)> = Vec::new();
    for c in v.get("commitments").and_then(Value::as_array).into_iter().flatten() {
        let (text, due_raw) = match c {
            Value::String(t) => (t.clone(), t.clone()),
            Value::Object(o) => {
                let t = o.get("text").and_then(Value::as_str).unwrap_or_default().to_string();
                let d = o.get("due").and_then(Value::as_str).map(str::to_string).unwrap_or_else(|| t.clone());
                (t, d)
            }
            _ => continue,
        };
        let text = text.trim().to_string();
        if text.is_empty() {
            continue;
        }
        let due = clock.parse_due(tick, &due_raw);
        if !commitments.iter().any(|(t, d)| *t == text && *d == due) {
            commitments.push((text, due));
        }
    }
    Extraction {
        summary: s("summary").unwrap_or_else(|| "They talked.".into()),
        deltas: (num("delta_initiator"), num("delta_partner")),
        impressions: (s("impression_initiator"), s("impression_partner")),
        commitments,
    }
}

fn relation_label(a: &AgentState, other: AgentId) -> (String, String) {
    match a.memory.relation(other) {
        Some(r) => (
            r.relationship_kind.clone(),
            if r.impression.is_empty() { "none yet".into() } else { r.impression.clone() },
        ),
        None => ("stranger".into(), "none yet".into()),
    }
}

fn rate(agent: &AgentState, gateway: &Gateway, situation: &str, tick: Tick) -> Option<EmotionEvent> {
    let resp = gateway
        .ask(
            "emotion_rating",
            &[("persona", agent.persona()), ("situation", situation.to_string())],
            ExpectedFormat::JsonSchema("emotion_rating".into()),
        )
        .ok()?;
    let v = resp.json()?;
    let kind: Emotion = v.get("emotion")?.as_str()?.parse().ok()?;
    Some(EmotionEvent::new(kind, v.get("intensity")?.as_f64()?, tick))
}

/// Runs a dialogue between `a` (initiator) and `b`, then updates memos,
/// relationships, memories and emotions of both. A backend failure closes
/// the conversation as interrupted with whatever turns were produced.
#[allow(clippy::too_many_arguments)]
pub fn converse(
    a: &mut AgentState,
    b: &mut AgentState,
    gateway: &Gateway,
    clock: &Clock,
    tick: Tick,
    location: &str,
    params: &SocialParams,
    affect: &AffectParams,
) -> ConversationRecord {
    let mut turns: Vec<Turn> = Vec::new();
    let mut failed = false;
    for i in 0..params.max_turns.max(1) {
        let (speaker, listener) = if i % 2 == 0 { (&*a, &*b) } else { (&*b, &*a) };
        let (kind, impression) = relation_label(speaker, listener.id());
        let history = if turns.is_empty() {
            "(nothing yet)".to_string()
        } else {
            turns
                .iter()
                .map(|t| {
                    let who = if t.speaker == a.id() { &a.profile.name } else { &b.profile.name };
                    format!("{who}: {}", t.text)
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        let resp = gateway.ask(
            "conversation_turn",
            &[
                ("persona", speaker.persona()),
                ("location", location.to_string()),
                ("partner", listener.profile.name.clone()),
                ("relationship", kind),
                ("impression", impression),
                ("feelings", speaker.affect.describe()),
                ("history", history),
                ("turn", (i + 1).to_string()),
                ("max_turns", params.max_turns.to_string()),
            ],
            ExpectedFormat::Freetext,
        );
        let text = match resp {
            Ok(r) => r.text,
            Err(e) => {
                log::warn!("conversation between {} and {} interrupted: {e}", a.id(), b.id());
                failed = true;
                break;
            }
        };
        let ended = text.contains(END_MARKER);
        let clean = text.replace(END_MARKER, "").trim().to_string();
        turns.push(Turn {
            speaker: speaker.id(),
            text: clean,
        });
        if ended {
            break;
        }
    }

    let extraction = if failed {
        None
    } else {
        let transcript = turns
            .iter()
            .map(|t| {
                let who = if t.speaker == a.id() { &a.profile.name } else { &b.profile.name };
                format!("{who}: {}", t.text)
            })
            .collect::<Vec<_>>()
            .join("\n");
        gateway
            .ask(
                "conversation_summary",
                &[
                    ("location", location.to_string()),
                    ("initiator", a.profile.name.clone()),
                    ("partner", b.profile.name.clone()),
                    ("transcript", transcript),
                ],
                ExpectedFormat::JsonSchema("conversation_summary".into()),
            )
            .ok()
            .and_then(|r| r.json().cloned())
            .map(|v| extract(&v, clock, tick, params.max_intimacy_delta))
    };
    let interrupted = extraction.is_none();
    let ex = extraction.unwrap_or(Extraction {
        summary: INTERRUPTED.into(),
        deltas: (0.0, 0.0),
        impressions: (None, None),
        commitments: vec![],
    });

    let mut commitments = Vec::new();
    for (text, due) in &ex.commitments {
        let ma = MemoEntry {
            text: text.clone(),
            due: *due,
            source: MemoSource::Commitment(b.id()),
            created: tick,
        };
        let mb = MemoEntry {
            source: MemoSource::Commitment(a.id()),
            ..ma.clone()
        };
        a.add_memo(ma.clone());
        b.add_memo(mb);
        commitments.push(ma);
    }

    let interaction = Interaction {
        tick,
        location: location.to_string(),
        summary: ex.summary.clone(),
    };
    let (a_id, b_id) = (a.id(), b.id());
    a.memory
        .update_relationship(b_id, ex.deltas.0, ex.impressions.0.as_deref(), interaction.clone());
    a.memory.set_name(b_id, &b.profile.name);
    b.memory
        .update_relationship(a_id, ex.deltas.1, ex.impressions.1.as_deref(), interaction);
    b.memory.set_name(a_id, &a.profile.name);

    let mut ratings = Vec::new();
    if !interrupted {
        let names = (a.profile.name.clone(), b.profile.name.clone());
        for (me, other) in [(&mut *a, &names.1), (&mut *b, &names.0)] {
            let situation = format!("You talked with {other} at {location}. {}", ex.summary);
            if let Some(ev) = rate(me, gateway, &situation, tick) {
                let profile = me.profile.big_five;
                me.affect.feel(&profile, &ev, affect);
                ratings.push((me.id(), ev));
            }
        }
    }
    let a_note = format!("Talked with {} at {location}: {}", b.profile.name, ex.summary);
    let b_note = format!("Talked with {} at {location}: {}", a.profile.name, ex.summary);
    a.remember(tick, location, &a_note, 0.4);
    b.remember(tick, location, &b_note, 0.4);

    ConversationRecord {
        participants: (a_id, b_id),
        tick,
        location: location.to_string(),
        turns,
        summary: ex.summary,
        commitments,
        intimacy_deltas: ex.deltas,
        ratings,
        interrupted,
    }
}
