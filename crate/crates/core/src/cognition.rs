//! Thinking: salience gating between goal-directed (CEN) and spontaneous
//! (DMN) modes, the priority-based decision policy, day planning,
//! reflection, and the three spontaneous-thought functions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::affect::{Emotion, EmotionEvent, EmotionVector};
use crate::backend::{BackendError, ExpectedFormat, Gateway};
use crate::clock::{Clock, Tick};
use crate::memory::{
    trait_adjectives, AgentId, AgentState, MemoEntry, Need, NeedsState, RecordId, ScheduleEntry, SummaryOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ThinkingMode {
    Cen,
    Dmn,
}

/// Which optional modules are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ablation {
    Based,
    Affection,
    Sim,
    #[serde(rename = "self")]
    SelfSocial,
    Mind,
    Full,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::Based,
        Ablation::Affection,
        Ablation::Sim,
        Ablation::SelfSocial,
        Ablation::Mind,
        Ablation::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Based => "based",
            Ablation::Affection => "affection",
            Ablation::Sim => "sim",
            Ablation::SelfSocial => "self",
            Ablation::Mind => "mind",
            Ablation::Full => "full",
        }
    }

    /// Mood and personality layers. Every variant except `based` has them.
    pub fn layered_affect(self) -> bool {
        self != Ablation::Based
    }

    pub fn dmn_functions(self) -> Vec<DmnFunction> {
        match self {
            Ablation::Based | Ablation::Affection => vec![],
            Ablation::Sim => vec![DmnFunction::ScenarioSimulation],
            Ablation::SelfSocial => vec![DmnFunction::SelfSocialCognition],
            Ablation::Mind => vec![DmnFunction::MindWandering],
            Ablation::Full => DmnFunction::ALL.to_vec(),
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.trim().to_lowercase();
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == l)
            .ok_or_else(|| format!("unknown ablation `{s}` (expected based, affection, sim, self, mind or full)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnConfig {
    pub relaxed_contexts: BTreeSet<String>,
    pub disturbance_prob: f64,
}

impl Default for SnConfig {
    fn default() -> Self {
        SnConfig {
            relaxed_contexts: ["walk", "rest", "idle", "commute", "daydream"]
                .into_iter()
                .map(String::from)
                .collect(),
            disturbance_prob: 0.1,
        }
    }
}

impl SnConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.disturbance_prob) {
            return Err(format!("disturbance_prob {} outside [0, 1]", self.disturbance_prob));
        }
        Ok(())
    }

    /// A context is relaxed when any tag occurs in it ("taking a walk").
    pub fn is_relaxed(&self, context: &str) -> bool {
        let c = context.to_lowercase();
        self.relaxed_contexts.iter().any(|t| c.contains(&t.to_lowercase()))
    }
}

/// Relaxed contexts always yield DMN. Task contexts consume one draw and
/// switch to DMN with probability ε.
pub fn sn_select_mode<R: Rng + ?Sized>(context: &str, cfg: &SnConfig, rng: &mut R) -> ThinkingMode {
    if cfg.is_relaxed(context) {
        return ThinkingMode::Dmn;
    }
    if rng.gen::<f64>() < cfg.disturbance_prob {
        ThinkingMode::Dmn
    } else {
        ThinkingMode::Cen
    }
}

/// Two exponential branches meeting at 0.5:
/// `1 - exp(alpha (beta - x))` for `x <= 0.5`, `exp(gamma (x - delta))` above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityCurve {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for PriorityCurve {
    /// Solved so the curve runs from 0.98 at 0 through 0.5 at 0.5 to 0.02
    /// at 1, continuous and decreasing: with k = 2 ln 25, alpha = gamma = -k,
    /// beta = ln 50 / k and delta = 1/2 - ln 2 / k.
    fn default() -> Self {
        let k = 2.0 * 25f64.ln();
        PriorityCurve {
            alpha: -k,
            beta: 50f64.ln() / k,
            gamma: -k,
            delta: 0.5 - std::f64::consts::LN_2 / k,
        }
    }
}

impl PriorityCurve {
    pub fn eval(&self, x: f64) -> f64 {
        let v = if x <= 0.5 {
            1.0 - (self.alpha * (self.beta - x)).exp()
        } else {
            (self.gamma * (x - self.delta)).exp()
        };
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorityParams {
    pub task_weight: f64,
    pub need_curve: PriorityCurve,
    pub emotion_curve: PriorityCurve,
    pub threshold: f64,
}

impl Default for PriorityParams {
    fn default() -> Self {
        PriorityParams {
            task_weight: 0.5,
            need_curve: PriorityCurve::default(),
            emotion_curve: PriorityCurve::default(),
            threshold: 0.65,
        }
    }
}

impl PriorityParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if !(0.0..=1.0).contains(&self.task_weight) {
            return Err(format!("task_weight {} outside [0, 1]", self.task_weight));
        }
        Ok(())
    }

    pub fn need_priority(&self, n_min: f64) -> f64 {
        self.need_curve.eval(n_min)
    }

    /// Strong negative emotion acts like a depleted need.
    pub fn emotion_priority(&self, e_max: f64) -> f64 {
        self.emotion_curve.eval(1.0 - e_max)
    }

    pub fn task_priority(&self, importance: f64, urgency: f64) -> f64 {
        (self.task_weight * importance + (1.0 - self.task_weight) * urgency).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priorities {
    pub task: f64,
    pub need: f64,
    pub emotion: f64,
}

impl Priorities {
    pub fn max(&self) -> f64 {
        self.task.max(self.need).max(self.emotion)
    }
}

/// Urgency of a schedule entry: how little of a day-length remains before
/// its window closes.
pub fn urgency(entry: &ScheduleEntry, now: Tick, day_length: u64) -> f64 {
    let remaining = entry.end.saturating_sub(now) as f64;
    (1.0 - remaining / day_length.max(1) as f64).clamp(0.0, 1.0)
}

/// P_t, P_n and P_e. Without a schedule entry the task priority is 0.
pub fn compute_priorities(
    entry: Option<&ScheduleEntry>,
    needs: &NeedsState,
    emotions: &EmotionVector,
    params: &PriorityParams,
    now: Tick,
    clock: &Clock,
) -> Priorities {
    let task = entry
        .map(|e| params.task_priority(e.importance, urgency(e, now, clock.waking_ticks())))
        .unwrap_or(0.0);
    Priorities {
        task,
        need: params.need_priority(needs.min().1),
        emotion: params.emotion_priority(emotions.max_negative().1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Task,
    Need,
    Emotion,
}

/// Argmax with ties resolved need, then emotion, then task.
pub fn argmax_branch(p: &Priorities) -> Branch {
    if p.need >= p.emotion && p.need >= p.task {
        Branch::Need
    } else if p.emotion >= p.task {
        Branch::Emotion
    } else {
        Branch::Task
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", content = "name", rename_all = "lowercase")]
pub enum ActionSource {
    /// Nothing crossed the threshold; the plan is followed by default.
    Schedule,
    /// The scheduled task itself won on priority.
    Task,
    Need(Need),
    Emotion(Emotion),
}

/// The branch taken before any activity text is generated.
pub fn decide_source(p: &Priorities, needs: &NeedsState, emotions: &EmotionVector, params: &PriorityParams) -> ActionSource {
    if p.max() <= params.threshold {
        return ActionSource::Schedule;
    }
    match argmax_branch(p) {
        Branch::Need => ActionSource::Need(needs.min().0),
        Branch::Emotion => ActionSource::Emotion(emotions.max_negative().0),
        Branch::Task => ActionSource::Task,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionChoice {
    pub source: ActionSource,
    pub activity: String,
}

/// Prompt facts for need- and emotion-driven activity generation.
#[derive(Debug, Clone, Default)]
pub struct DecisionContext {
    pub persona: String,
    pub now: String,
    pub location: String,
    pub scheduled: String,
    pub feelings: String,
    pub inspirations: String,
}

pub fn default_need_activity(n: Need) -> &'static str {
    match n {
        Need::Fullness => "eat a meal",
        Need::Fun => "do something fun",
        Need::Health => "see a doctor",
        Need::Social => "chat with someone",
        Need::Energy => "take a rest",
    }
}

/// Decision policy. Schedule and task branches reuse the scheduled activity;
/// need and emotion branches ask the backend once for a concrete activity
/// and fall back to a stock activity when it fails.
pub fn decide(
    p: &Priorities,
    entry: Option<&ScheduleEntry>,
    needs: &NeedsState,
    emotions: &EmotionVector,
    params: &PriorityParams,
    gateway: &Gateway,
    ctx: &DecisionContext,
) -> ActionChoice {
    let source = decide_source(p, needs, emotions, params);
    let scheduled = entry.map(|e| e.activity.clone()).unwrap_or_else(|| "free time".into());
    let activity = match source {
        ActionSource::Schedule | ActionSource::Task => scheduled,
        ActionSource::Need(n) => gateway
            .ask(
                "decide_need",
                &[
                    ("persona", ctx.persona.clone()),
                    ("now", ctx.now.clone()),
                    ("location", ctx.location.clone()),
                    ("scheduled", ctx.scheduled.clone()),
                    ("need", n.name().into()),
                    ("level", format!("{:.2}", needs.get(n))),
                    ("feelings", ctx.feelings.clone()),
                ],
                ExpectedFormat::Freetext,
            )
            .map(|r| one_line(&r.text))
            .ok()
            .filter(|t| !t.is_empty())
            .map(|t| ensure_need_word(n, t))
            .unwrap_or_else(|| default_need_activity(n).into()),
        ActionSource::Emotion(e) => gateway
            .ask(
                "decide_emotion",
                &[
                    ("persona", ctx.persona.clone()),
                    ("now", ctx.now.clone()),
                    ("location", ctx.location.clone()),
                    ("scheduled", ctx.scheduled.clone()),
                    ("emotion", e.name().into()),
                    ("level", format!("{:.2}", emotions.get(e))),
                    ("feelings", ctx.feelings.clone()),
                    ("inspirations", ctx.inspirations.clone()),
                ],
                ExpectedFormat::Freetext,
            )
            .map(|r| one_line(&r.text))
            .ok()
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| "take a walk to clear my head".into()),
    };
    ActionChoice { source, activity }
}

/// Keeps the activity recognisable as serving the need, so the needs model
/// can credit it ("Okay." alone would not feed anyone).
fn ensure_need_word(n: Need, text: String) -> String {
    let key = match n {
        Need::Fullness => "eat",
        Need::Fun => "fun",
        Need::Health => "doctor",
        Need::Social => "chat",
        Need::Energy => "rest",
    };
    if text.to_lowercase().contains(key) {
        text
    } else {
        format!("{}: {text}", default_need_activity(n))
    }
}

fn one_line(s: &str) -> String {
    s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim().to_string()
}

/// Maps a location word from a plan onto a known place.
pub fn resolve_location(raw: &str, agent: &AgentState, locations: &[String]) -> String {
    let l = raw.trim().to_lowercase();
    if l.is_empty() || l.contains("home") {
        return agent.profile.home.clone();
    }
    if l == "workplace" || l == "work" || l == "office" {
        return agent.profile.workplace.clone().unwrap_or_else(|| agent.profile.home.clone());
    }
    if let Some(x) = locations.iter().find(|x| x.to_lowercase() == l) {
        return x.clone();
    }
    if let Some(x) = locations.iter().find(|x| l.contains(&x.to_lowercase()) || x.to_lowercase().contains(&l)) {
        return x.clone();
    }
    agent.profile.home.clone()
}

/// Likely place for a memo item: a location named in the text, else a
/// keyword guess, else the central square.
pub fn location_hint(text: &str, agent: &AgentState, locations: &[String]) -> String {
    let t = text.to_lowercase();
    if let Some(x) = locations.iter().find(|x| t.contains(&x.to_lowercase())) {
        return x.clone();
    }
    let guess = if t.contains("coffee") || t.contains("cafe") || t.contains("café") {
        "cafe"
    } else if t.contains("dinner") || t.contains("lunch") || t.contains("breakfast") || t.contains("meal") {
        "restaurant"
    } else if t.contains("book") || t.contains("study") {
        "library"
    } else if t.contains("walk") || t.contains("picnic") {
        "park"
    } else if t.contains("doctor") {
        "clinic"
    } else if t.contains("shop") || t.contains("buy") {
        "store"
    } else {
        "central square"
    };
    resolve_location(guess, agent, locations)
}

fn entries_from_json(v: &Value, day: u64, clock: &Clock, agent: &AgentState, locations: &[String]) -> Vec<ScheduleEntry> {
    let items = v.get("entries").and_then(Value::as_array).cloned().unwrap_or_default();
    items
        .iter()
        .filter_map(|e| {
            let start = clock.parse_hhmm(day, e.get("start")?.as_str()?)?;
            let end = clock.parse_hhmm(day, e.get("end")?.as_str()?)?;
            let activity = e.get("activity")?.as_str()?.trim().to_string();
            let loc = e.get("location").and_then(Value::as_str).unwrap_or("home");
            let importance = e.get("importance").and_then(Value::as_f64).unwrap_or(0.5).clamp(0.0, 1.0);
            Some(ScheduleEntry {
                start,
                end,
                activity,
                location: resolve_location(loc, agent, locations),
                importance,
            })
        })
        .collect()
}

/// Sorts, clips to `[from, to)`, removes overlaps and fills gaps with free
/// time at home, so the result tiles the window exactly.
pub fn normalize_schedule(mut entries: Vec<ScheduleEntry>, from: Tick, to: Tick, home: &str) -> Vec<ScheduleEntry> {
    entries.sort_by_key(|e| (e.start, e.end));
    let mut out: Vec<ScheduleEntry> = Vec::new();
    let mut cursor = from;
    let filler = |s: Tick, e: Tick| ScheduleEntry {
        start: s,
        end: e,
        activity: "free time".into(),
        location: home.to_string(),
        importance: 0.1,
    };
    for mut e in entries {
        e.start = e.start.max(cursor);
        e.end = e.end.min(to);
        if e.end <= e.start || e.activity.is_empty() {
            continue;
        }
        if e.start > cursor {
            out.push(filler(cursor, e.start));
        }
        cursor = e.end;
        out.push(e);
    }
    if cursor < to {
        out.push(filler(cursor, to));
    }
    out
}

/// Puts every memo item due in `[from, to)` into the schedule unless an
/// entry covering its due time already mentions it. Inserted blocks last an
/// hour (shorter at the end of the window) and split what they overlap.
pub fn enforce_memo(
    schedule: Vec<ScheduleEntry>,
    memo: &[MemoEntry],
    from: Tick,
    to: Tick,
    clock: &Clock,
    agent: &AgentState,
    locations: &[String],
) -> Vec<ScheduleEntry> {
    let mut sched = schedule;
    let hour = clock.ticks_per_hour().round().max(1.0) as u64;
    for m in memo {
        let Some(due) = m.due else { continue };
        if due < from || due >= to {
            continue;
        }
        let needle = m.text.to_lowercase();
        let covered = sched
            .iter()
            .any(|e| e.contains(due) && e.activity.to_lowercase().contains(&needle));
        if covered {
            continue;
        }
        let block = ScheduleEntry {
            start: due,
            end: (due + hour).min(to),
            activity: m.text.clone(),
            location: location_hint(&m.text, agent, locations),
            importance: 0.9,
        };
        let mut next = Vec::with_capacity(sched.len() + 2);
        for e in sched {
            if e.end <= block.start || e.start >= block.end {
                next.push(e);
                continue;
            }
            if e.start < block.start {
                next.push(ScheduleEntry { end: block.start, ..e.clone() });
            }
            if e.end > block.end {
                next.push(ScheduleEntry { start: block.end, ..e });
            }
        }
        next.push(block);
        next.sort_by_key(|e| e.start);
        sched = next;
    }
    sched
}

fn plan_vars(agent: &AgentState, clock: &Clock, day: u64, locations: &[String]) -> Vec<(&'static str, String)> {
    let insights = agent
        .memory
        .recent_insights(3)
        .iter()
        .map(|s| s.insight.clone())
        .collect::<Vec<_>>();
    vec![
        ("persona", agent.persona()),
        ("day", day.to_string()),
        ("day_start", clock.hhmm(clock.day_start(day))),
        ("day_end", crate::clock::fmt_minutes(clock.day_end_min)),
        ("goals", agent.profile.goals_text()),
        ("memo", agent.memo_text()),
        (
            "insights",
            if insights.is_empty() { "none yet".into() } else { insights.join("; ") },
        ),
        ("locations", locations.join(", ")),
    ]
}

/// A full-day schedule for `day`, tiling the waking window, with every memo
/// item due that day included.
pub fn plan_day(
    agent: &AgentState,
    gateway: &Gateway,
    clock: &Clock,
    day: u64,
    locations: &[String],
) -> Result<Vec<ScheduleEntry>, BackendError> {
    let vars = plan_vars(agent, clock, day, locations);
    let resp = gateway.ask("day_plan", &vars, ExpectedFormat::JsonSchema("day_plan".into()))?;
    let raw = entries_from_json(resp.json().unwrap_or(&Value::Null), day, clock, agent, locations);
    let (from, to) = (clock.day_start(day), clock.day_end(day));
    let sched = normalize_schedule(raw, from, to, &agent.profile.home);
    Ok(enforce_memo(sched, &agent.memo, from, to, clock, agent, locations))
}

/// Re-plans from `now` to the end of the day after a memo change. Entries
/// that ended before `now` are kept as they were.
pub fn replan(
    agent: &AgentState,
    gateway: &Gateway,
    clock: &Clock,
    now: Tick,
    locations: &[String],
) -> Result<Vec<ScheduleEntry>, BackendError> {
    let day = clock.day_of(now);
    let to = clock.day_end(day);
    let mut past: Vec<ScheduleEntry> = agent
        .schedule
        .iter()
        .filter(|e| e.start < now && clock.day_of(e.start) == day)
        .map(|e| ScheduleEntry {
            end: e.end.min(now),
            ..e.clone()
        })
        .collect();
    let so_far = past
        .iter()
        .map(|e| format!("{}-{} {}", clock.hhmm(e.start), clock.hhmm(e.end), e.activity))
        .collect::<Vec<_>>()
        .join("; ");
    let mut vars = plan_vars(agent, clock, day, locations);
    vars.push(("now", clock.hhmm(now)));
    vars.push(("plan_so_far", if so_far.is_empty() { "nothing yet".into() } else { so_far }));
    let resp = gateway.ask("replan", &vars, ExpectedFormat::JsonSchema("day_plan".into()))?;
    let raw = entries_from_json(resp.json().unwrap_or(&Value::Null), day, clock, agent, locations);
    let rest = normalize_schedule(raw, now, to, &agent.profile.home);
    let rest = enforce_memo(rest, &agent.memo, now, to, clock, agent, locations);
    past.extend(rest);
    Ok(past)
}

/// Moves a schedule forward by whole days; used when planning fails and the
/// previous day's plan is reused.
pub fn shift_schedule(schedule: &[ScheduleEntry], days: u64, clock: &Clock) -> Vec<ScheduleEntry> {
    let d = days * clock.ticks_per_day();
    schedule
        .iter()
        .map(|e| ScheduleEntry {
            start: e.start + d,
            end: e.end + d,
            ..e.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReflectOutcome {
    pub summary: SummaryOutcome,
    pub insight: Option<RecordId>,
}

/// Summarizes the period and stores one higher-level conclusion rated by
/// the backend. Either everything is committed or nothing is.
pub fn reflect(agent: &mut AgentState, gateway: &Gateway, period: (Tick, Tick), clock: &Clock) -> Result<ReflectOutcome, BackendError> {
    let records = agent.memory.records_in(period);
    if records.is_empty() {
        return Ok(ReflectOutcome::default());
    }
    let ids: Vec<RecordId> = records.iter().map(|r| r.id).collect();
    let memories = records
        .iter()
        .map(|r| format!("- {} at {}: {}", clock.hhmm(r.tick), r.location, r.content))
        .collect::<Vec<_>>()
        .join("\n");
    let persona = agent.persona();
    let resp = gateway.ask(
        "reflection",
        &[
            ("persona", persona.clone()),
            ("period_start", clock.stamp(period.0)),
            ("period_end", clock.stamp(period.1)),
            ("memories", memories),
        ],
        ExpectedFormat::JsonSchema("reflection".into()),
    )?;
    let v = resp.json().cloned().unwrap_or(Value::Null);
    let insight = v
        .get("insight")
        .and_then(Value::as_str)
        .unwrap_or(resp.text.trim())
        .to_string();
    let importance = v.get("importance").and_then(Value::as_f64).unwrap_or(0.5).clamp(0.0, 1.0);
    let summary = agent.memory.summarize_tier(period, gateway, &persona)?;
    let id = agent.memory.add_insight(period, &insight, importance, ids);
    Ok(ReflectOutcome {
        summary,
        insight: Some(id),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmnFunction {
    ScenarioSimulation,
    SelfSocialCognition,
    MindWandering,
}

impl DmnFunction {
    pub const ALL: [DmnFunction; 3] = [
        DmnFunction::ScenarioSimulation,
        DmnFunction::SelfSocialCognition,
        DmnFunction::MindWandering,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            DmnFunction::ScenarioSimulation => "scenario_simulation",
            DmnFunction::SelfSocialCognition => "self_social_cognition",
            DmnFunction::MindWandering => "mind_wandering",
        }
    }

    /// Text compared against the memory digest by the similarity strategy.
    pub fn description(self) -> &'static str {
        match self {
            DmnFunction::ScenarioSimulation => {
                "recall past events or imagine future events and how they could turn out differently"
            }
            DmnFunction::SelfSocialCognition => {
                "reflect on my own personality and behavior and infer what other people think and feel"
            }
            DmnFunction::MindWandering => "let thoughts drift freely between loosely associated memories and ideas",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmnStrategy {
    #[default]
    Cyclic,
    Similarity,
    Priority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DmnSelector {
    pub strategy: DmnStrategy,
    pub cursor: usize,
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.map_or(true, |(_, b)| *s > b) {
            best = Some((i, *s));
        }
    }
    best.map(|(i, _)| i)
}

impl DmnSelector {
    pub fn new(strategy: DmnStrategy) -> Self {
        DmnSelector { strategy, cursor: 0 }
    }

    /// Next enabled function in the fixed order, advancing the cursor.
    pub fn next_cyclic(&mut self, enabled: &[DmnFunction]) -> Option<DmnFunction> {
        for step in 0..3 {
            let idx = (self.cursor + step) % 3;
            let f = DmnFunction::ALL[idx];
            if enabled.contains(&f) {
                self.cursor = (idx + 1) % 3;
                return Some(f);
            }
        }
        None
    }

    /// Picks a function among `enabled`; `None` when nothing is enabled.
    pub fn select(
        &mut self,
        memory_digest: &str,
        goals: &str,
        enabled: &[DmnFunction],
        gateway: &Gateway,
        persona: &str,
    ) -> Option<DmnFunction> {
        if enabled.is_empty() {
            return None;
        }
        let candidates: Vec<DmnFunction> = DmnFunction::ALL.into_iter().filter(|f| enabled.contains(f)).collect();
        match self.strategy {
            DmnStrategy::Cyclic => self.next_cyclic(enabled),
            DmnStrategy::Similarity => {
                let scores: Vec<f64> = candidates
                    .iter()
                    .map(|f| gateway.similarity(memory_digest, f.description()))
                    .collect();
                argmax_first(&scores).map(|i| candidates[i])
            }
            DmnStrategy::Priority => {
                let resp = gateway.ask(
                    "dmn_priority",
                    &[
                        ("persona", persona.to_string()),
                        ("goals", goals.to_string()),
                        ("f1", DmnFunction::ALL[0].description().into()),
                        ("f2", DmnFunction::ALL[1].description().into()),
                        ("f3", DmnFunction::ALL[2].description().into()),
                    ],
                    ExpectedFormat::Scores(3),
                );
                match resp.ok().and_then(|r| r.scores().map(<[f64]>::to_vec)) {
                    Some(all) => {
                        let scores: Vec<f64> = candidates.iter().map(|f| all[f.index()].clamp(0.0, 1.0)).collect();
                        argmax_first(&scores).map(|i| candidates[i])
                    }
                    None => {
                        log::warn!("priority scoring failed; falling back to cyclic selection");
                        self.next_cyclic(enabled)
                    }
                }
            }
        }
    }
}

/// Output of one spontaneous-thought episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmnArtifact {
    pub kind: DmnFunction,
    pub text: String,
    /// Emotion events to apply to the thinker.
    pub events: Vec<EmotionEvent>,
    pub records: Vec<RecordId>,
    pub impression_updates: Vec<AgentId>,
}

fn json_str(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_string)
}

fn rated_event(v: &Value, now: Tick) -> Option<EmotionEvent> {
    let kind: Emotion = v.get("emotion")?.as_str()?.parse().ok()?;
    let intensity = v.get("intensity")?.as_f64()?;
    Some(EmotionEvent::new(kind, intensity, now))
}

/// Runs one DMN function for `agent` at `now`. Results are written to the
/// agent's memory; emotion events are returned for the caller to apply.
pub fn run_dmn_function<R: Rng + ?Sized>(
    kind: DmnFunction,
    agent: &mut AgentState,
    gateway: &Gateway,
    clock: &Clock,
    now: Tick,
    location: &str,
    rng: &mut R,
) -> Result<DmnArtifact, BackendError> {
    let persona = agent.persona();
    match kind {
        DmnFunction::ScenarioSimulation => {
            let upcoming = agent
                .schedule
                .iter()
                .filter(|e| e.start > now && clock.day_of(e.start) == clock.day_of(now))
                .min_by_key(|e| e.start)
                .cloned();
            let memorable = agent
                .memory
                .full
                .iter()
                .filter(|r| r.tag.as_deref() != Some("imagined"))
                .max_by(|a, b| a.importance.total_cmp(&b.importance).then(b.id.cmp(&a.id)))
                .cloned();
            let (focus, target) = match (upcoming, memorable) {
                (Some(e), Some(r)) if r.importance > e.importance => ("a past event".to_string(), r.content),
                (Some(e), _) => (
                    "an upcoming event".to_string(),
                    format!("{} at {}", e.activity, clock.hhmm(e.start)),
                ),
                (None, Some(r)) => ("a past event".to_string(), r.content),
                (None, None) => ("the rest of the day".to_string(), "whatever comes next".to_string()),
            };
            let resp = gateway.ask(
                "scenario_simulation",
                &[
                    ("persona", persona),
                    ("focus", focus),
                    ("target", target.clone()),
                ],
                ExpectedFormat::JsonSchema("scenario".into()),
            )?;
            let v = resp.json().cloned().unwrap_or(Value::Null);
            let scenario = json_str(&v, "scenario").unwrap_or_else(|| resp.text.trim().to_string());
            let text = format!("Imagined \"{target}\": {scenario}");
            let rec = crate::memory::FullMemoryRecord::new(now, location, &text, 0.4, agent.affect.emotions).tagged("imagined");
            let id = agent.memory.record_event(rec);
            Ok(DmnArtifact {
                kind,
                text,
                events: rated_event(&v, now).into_iter().collect(),
                records: vec![id],
                impression_updates: vec![],
            })
        }
        DmnFunction::SelfSocialCognition => {
            let behavior = agent
                .memory
                .full
                .iter()
                .rev()
                .take(5)
                .map(|r| r.content.clone())
                .collect::<Vec<_>>();
            let other = agent
                .memory
                .relations
                .values()
                .filter(|r| !r.interactions.is_empty())
                .max_by_key(|r| (r.interactions.last().map(|i| i.tick), std::cmp::Reverse(r.other_agent)))
                .cloned();
            let (other_name, interactions) = match &other {
                Some(r) => (
                    r.display_name(),
                    r.interactions
                        .iter()
                        .rev()
                        .take(3)
                        .map(|i| i.summary.clone())
                        .collect::<Vec<_>>()
                        .join("; "),
                ),
                None => ("nobody in particular".to_string(), "nothing specific".to_string()),
            };
            let resp = gateway.ask(
                "self_judgement",
                &[
                    ("persona", persona),
                    (
                        "behavior",
                        if behavior.is_empty() { "nothing notable yet".into() } else { behavior.join("; ") },
                    ),
                    ("traits", trait_adjectives(&agent.profile.big_five).join(", ")),
                    ("other", other_name),
                    ("interactions", interactions),
                ],
                ExpectedFormat::JsonSchema("self_judgement".into()),
            )?;
            let v = resp.json().cloned().unwrap_or(Value::Null);
            let self_view = json_str(&v, "self_view").unwrap_or_else(|| resp.text.trim().to_string());
            let rec = crate::memory::FullMemoryRecord::new(now, location, &format!("Thinking about myself: {self_view}"), 0.3, agent.affect.emotions)
                .tagged("self");
            let id = agent.memory.record_event(rec);
            let mut updates = vec![];
            if let (Some(r), Some(imp)) = (other, json_str(&v, "impression")) {
                if agent.memory.set_impression(r.other_agent, &imp) {
                    updates.push(r.other_agent);
                }
            }
            Ok(DmnArtifact {
                kind,
                text: self_view,
                events: vec![],
                records: vec![id],
                impression_updates: updates,
            })
        }
        DmnFunction::MindWandering => {
            let query = agent
                .schedule_at(now)
                .map(|e| e.activity.clone())
                .unwrap_or_else(|| "free time".into());
            let pool: Vec<String> = agent
                .memory
                .retrieve(&query, 5, now, gateway)
                .into_iter()
                .map(|r| r.content.clone())
                .collect();
            let seed = if pool.is_empty() {
                query
            } else {
                pool[rng.gen_range(0..pool.len())].clone()
            };
            let resp = gateway.ask(
                "mind_wandering",
                &[("persona", persona), ("seed", seed)],
                ExpectedFormat::Freetext,
            )?;
            let text = resp.text.trim().to_string();
            let rec = crate::memory::FullMemoryRecord::new(now, location, &text, 0.1, agent.affect.emotions).tagged("inspiration");
            let id = agent.memory.record_event(rec);
            Ok(DmnArtifact {
                kind,
                text,
                events: vec![],
                records: vec![id],
                impression_updates: vec![],
            })
        }
    }
}

/// Recent mind-wandering output, offered to emotion-driven decisions.
pub fn inspirations(agent: &AgentState, n: usize) -> String {
    let v: Vec<String> = agent
        .memory
        .full
        .iter()
        .rev()
        .filter(|r| r.tag.as_deref() == Some("inspiration"))
        .take(n)
        .map(|r| r.content.clone())
        .collect();
    if v.is_empty() {
        "nothing in particular".into()
    } else {
        v.join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affect::PersonalityProfile;
    use crate::backend::{ScriptRule, ScriptedBackend};
    use crate::memory::{AgentProfile, MemoSource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agent() -> AgentState {
        let mut p = AgentProfile::new(1, "Ann", "woman", 30, "baker", PersonalityProfile::default());
        p.workplace = Some("store".into());
        AgentState::new(p, true)
    }

    fn locations() -> Vec<String> {
        ["restaurant", "cafe", "library", "clinic", "store", "park", "central square"]
            .into_iter()
            .map(String::from)
            .collect()
    }

    #[test]
    fn sn_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg0 = SnConfig {
            disturbance_prob: 0.0,
            ..SnConfig::default()
        };
        let cfg1 = SnConfig {
            disturbance_prob: 1.0,
            ..SnConfig::default()
        };
        assert_eq!(sn_select_mode("taking a walk", &cfg0, &mut rng), ThinkingMode::Dmn);
        assert_eq!(sn_select_mode("planning", &cfg0, &mut rng), ThinkingMode::Cen);
        assert_eq!(sn_select_mode("planning", &cfg1, &mut rng), ThinkingMode::Dmn);
    }

    #[test]
    fn curve_defaults() {
        let p = PriorityParams::default();
        assert!((p.need_priority(0.5) - 0.5).abs() < 1e-12);
        assert!((p.need_priority(0.0) - (1.0 - (-3.912f64).exp())).abs() < 1e-3);
        assert!((p.need_priority(1.0) - (-3.912f64).exp()).abs() < 1e-3);
        let c = p.need_curve;
        assert!((c.alpha + 6.438).abs() < 1e-3 && (c.beta - 0.6077).abs() < 1e-4 && (c.delta - 0.3923).abs() < 1e-4);
        assert!((p.task_priority(0.6, 0.2) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn decision_examples() {
        let p = PriorityParams::default();
        let mut needs = NeedsState::default();
        let e = EmotionVector::neutral();
        let pr = |t, n, em| Priorities { task: t, need: n, emotion: em };
        assert_eq!(decide_source(&pr(0.3, 0.2, 0.1), &needs, &e, &p), ActionSource::Schedule);
        needs.fullness = 0.05;
        assert_eq!(decide_source(&pr(0.3, 0.9, 0.2), &needs, &e, &p), ActionSource::Need(Need::Fullness));
        assert_eq!(decide_source(&pr(0.8, 0.8, 0.1), &needs, &e, &p), ActionSource::Need(Need::Fullness));
        assert_eq!(decide_source(&pr(0.8, 0.1, 0.1), &needs, &e, &p), ActionSource::Task);
    }

    #[test]
    fn hungry_agent_eats() {
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let mut needs = NeedsState::default();
        needs.fullness = 0.05;
        let e = EmotionVector::neutral();
        let p = PriorityParams::default();
        let pr = compute_priorities(None, &needs, &e, &p, 30, &Clock::default());
        let c = decide(&pr, None, &needs, &e, &p, &g, &DecisionContext::default());
        assert_eq!(c.source, ActionSource::Need(Need::Fullness));
        assert!(c.activity.contains("eat"));
    }

    #[test]
    fn urgency_and_priorities() {
        let clock = Clock::default();
        let e = ScheduleEntry {
            start: 30,
            end: 40,
            activity: "work".into(),
            location: "store".into(),
            importance: 0.6,
        };
        assert!((urgency(&e, 40, 72) - 1.0).abs() < 1e-12);
        assert!((urgency(&e, 30, 72) - (1.0 - 10.0 / 72.0)).abs() < 1e-12);
        let pr = compute_priorities(Some(&e), &NeedsState::default(), &EmotionVector::neutral(), &PriorityParams::default(), 30, &clock);
        assert!((pr.need - 0.5).abs() < 1e-12);
        assert!((pr.emotion - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plan_covers_window_and_memo() {
        let clock = Clock::default();
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let mut a = agent();
        let dinner = clock.parse_hhmm(0, "19:00").unwrap();
        a.add_memo(MemoEntry {
            text: "dinner with B".into(),
            due: Some(dinner),
            source: MemoSource::Commitment(2),
            created: 30,
        });
        let s = plan_day(&a, &g, &clock, 0, &locations()).unwrap();
        assert_eq!(s.first().unwrap().start, clock.day_start(0));
        assert_eq!(s.last().unwrap().end, clock.day_end(0));
        for w in s.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        let hit = s.iter().find(|e| e.contains(dinner)).unwrap();
        assert!(hit.activity.contains("dinner with B"));
        assert_eq!(hit.location, "restaurant");
        assert!(s.iter().any(|e| e.location == "store"), "workplace resolved");
    }

    #[test]
    fn replan_keeps_past() {
        let clock = Clock::default();
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let mut a = agent();
        a.schedule = plan_day(&a, &g, &clock, 0, &locations()).unwrap();
        let now = clock.parse_hhmm(0, "12:30").unwrap();
        let before: Vec<_> = a.schedule.iter().filter(|e| e.end <= now).cloned().collect();
        a.add_memo(MemoEntry {
            text: "coffee with C".into(),
            due: Some(clock.parse_hhmm(0, "15:00").unwrap()),
            source: MemoSource::Commitment(3),
            created: now,
        });
        let s = replan(&a, &g, &clock, now, &locations()).unwrap();
        assert_eq!(&s[..before.len()], &before[..]);
        assert!(s.iter().any(|e| e.activity == "coffee with C" && e.location == "cafe"));
        assert_eq!(s.last().unwrap().end, clock.day_end(0));
    }

    #[test]
    fn reflect_cases() {
        let clock = Clock::default();
        let g = Gateway::scripted(
            ScriptedBackend::new(vec![ScriptRule::new(
                Some("reflection"),
                ".",
                r#"{"insight": "work matters to me", "importance": 1.7}"#,
            )])
            .unwrap(),
        );
        let mut a = agent();
        assert_eq!(reflect(&mut a, &g, (0, 95), &clock).unwrap(), ReflectOutcome::default());
        a.remember(30, "store", "sold bread", 0.6);
        let out = reflect(&mut a, &g, (0, 95), &clock).unwrap();
        let id = out.insight.unwrap();
        let rec = a.memory.summarized.iter().find(|s| s.id == id).unwrap();
        assert_eq!(rec.insight, "work matters to me");
        assert_eq!(rec.importance, 1.0);
    }

    #[test]
    fn cyclic_order_and_ablation() {
        let mut s = DmnSelector::new(DmnStrategy::Cyclic);
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let seq: Vec<_> = (0..6).map(|_| s.select("", "", &DmnFunction::ALL, &g, "").unwrap()).collect();
        assert_eq!(&seq[..3], &DmnFunction::ALL);
        assert_eq!(&seq[3..], &DmnFunction::ALL);
        let only = [DmnFunction::MindWandering];
        assert_eq!(s.select("", "", &only, &g, ""), Some(DmnFunction::MindWandering));
        assert_eq!(s.select("", "", &[], &g, ""), None);
    }

    #[test]
    fn similarity_exact_description_wins() {
        let mut s = DmnSelector::new(DmnStrategy::Similarity);
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let d = DmnFunction::SelfSocialCognition.description();
        assert_eq!(s.select(d, "", &DmnFunction::ALL, &g, ""), Some(DmnFunction::SelfSocialCognition));
    }

    #[test]
    fn priority_strategy_uses_scores() {
        let g = Gateway::scripted(
            ScriptedBackend::new(vec![ScriptRule::new(Some("dmn_priority"), ".", "0.1, 0.2, 0.9")]).unwrap(),
        );
        let mut s = DmnSelector::new(DmnStrategy::Priority);
        assert_eq!(s.select("", "get fit", &DmnFunction::ALL, &g, "p"), Some(DmnFunction::MindWandering));
        let tie = Gateway::scripted(ScriptedBackend::defaults_only());
        assert_eq!(s.select("", "g", &DmnFunction::ALL, &tie, "p"), Some(DmnFunction::ScenarioSimulation));
    }

    #[test]
    fn scenario_on_upcoming_interview() {
        let clock = Clock::default();
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let mut a = agent();
        let t = clock.parse_hhmm(0, "14:00").unwrap();
        a.schedule.push(ScheduleEntry {
            start: t,
            end: t + 4,
            activity: "interview".into(),
            location: "store".into(),
            importance: 0.9,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let art = run_dmn_function(DmnFunction::ScenarioSimulation, &mut a, &g, &clock, 30, "home", &mut rng).unwrap();
        let rec = a.memory.get(art.records[0]).unwrap();
        assert!(rec.content.contains("interview at 14:00"));
        assert_eq!(rec.tag.as_deref(), Some("imagined"));
        assert_eq!(art.events.len(), 1);
    }

    #[test]
    fn self_social_updates_impression() {
        let clock = Clock::default();
        let g = Gateway::scripted(ScriptedBackend::defaults_only());
        let mut a = agent();
        a.memory.update_relationship(
            2,
            0.1,
            Some("chatty"),
            crate::memory::Interaction {
                tick: 31,
                location: "cafe".into(),
                summary: "talked about bread".into(),
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let art = run_dmn_function(DmnFunction::SelfSocialCognition, &mut a, &g, &clock, 32, "cafe", &mut rng).unwrap();
        assert_eq!(art.impression_updates, vec![2]);
        assert_eq!(a.memory.relation(2).unwrap().impression, "They seem considerate.");
    }

    #[test]
    fn mind_wandering_from_book_gives_inspiration() {
        let clock = Clock::default();
        let g = Gateway::scripted(ScriptedBackend::daily_life());
        let mut a = agent();
        a.remember(30, "library", "read a book about animal protection", 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        run_dmn_function(DmnFunction::MindWandering, &mut a, &g, &clock, 31, "park", &mut rng).unwrap();
        let insp = inspirations(&a, 3);
        assert!(insp.contains("animal shelter"));
        let mut e = EmotionVector::neutral();
        e.sadness = 0.95;
        let p = PriorityParams::default();
        let pr = compute_priorities(None, &NeedsState { fullness: 0.9, fun: 0.9, health: 0.9, social: 0.9, energy: 0.9 }, &e, &p, 31, &clock);
        let ctx = DecisionContext {
            inspirations: insp,
            ..DecisionContext::default()
        };
        let echo = Gateway::scripted(
            ScriptedBackend::new(vec![ScriptRule::new(Some("decide_emotion"), "animal shelter", "visit the animal shelter")]).unwrap(),
        );
        let c = decide(&pr, None, &a.needs, &e, &p, &echo, &ctx);
        assert_eq!(c.source, ActionSource::Emotion(Emotion::Sadness));
        assert_eq!(c.activity, "visit the animal shelter");
    }
}
