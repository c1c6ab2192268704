//! The tick loop. Each waking tick runs four phases over all agents:
//! planning (first tick of a day), body (arrivals, affect decay, needs
//! drift, mood update), encounters (sequential pairing in id order) and
//! thinking (SN gate, then CEN decision or a DMN episode). The last tick of
//! a day is followed by reflection and the night.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::log::{self, EventKind, Snapshot, SummaryRow, TrajectoryEvent};
use super::needs::{step_needs, Activity};
use super::world::{hops, WorldConfig};
use super::SimError;
use crate::backend::{Backend, BackendError, BackendRequest, Gateway};
use crate::clock::Tick;
use crate::cognition::{
    compute_priorities, decide, decide_source, inspirations, location_hint, normalize_schedule, plan_day, reflect, replan,
    run_dmn_function, shift_schedule, sn_select_mode, ActionSource, DecisionContext, DmnSelector, Priorities,
    ThinkingMode,
};
use crate::memory::{AgentState, NeedsState};
use crate::social::{converse, should_converse, EncounterContext, SurfaceInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transit {
    pub from: String,
    pub to: String,
    pub arrive: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentActivity {
    pub text: String,
    pub location: String,
    pub source: ActionSource,
    pub importance: f64,
    /// Set once the agent is at the location and the activity has begun.
    pub started: bool,
    pub since: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRuntime {
    pub state: AgentState,
    pub location: String,
    pub transit: Option<Transit>,
    pub activity: Option<CurrentActivity>,
    pub dmn: DmnSelector,
    pub planned_day: Option<u64>,
    /// Memo length at the last (re)plan; growth triggers a re-plan.
    pub memo_seen: usize,
}

impl AgentRuntime {
    pub fn activity_text(&self) -> &str {
        if self.transit.is_some() {
            return "commute";
        }
        match &self.activity {
            Some(a) if a.started => &a.text,
            _ => "idle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub config: WorldConfig,
    pub now: Tick,
    pub ticks_done: u64,
    pub agents: Vec<AgentRuntime>,
    pub rng: ChaCha8Rng,
    /// Last encounter tick per pair, keyed "low-high".
    pub last_encounter: BTreeMap<String, Tick>,
    pub log: Vec<TrajectoryEvent>,
    pub summary: Vec<SummaryRow>,
}

/// Passes calls through and remembers the first engine failure, so a tick
/// that hit one can be rolled back.
struct Watch {
    inner: Arc<dyn Backend>,
    fault: Mutex<Option<BackendError>>,
}

impl Watch {
    fn take_fault(&self) -> Option<BackendError> {
        self.fault.lock().expect("fault lock").take()
    }
}

impl Backend for Watch {
    fn engine_name(&self) -> &'static str {
        self.inner.engine_name()
    }

    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        let out = self.inner.complete(req);
        if let Err(e) = &out {
            let mut f = self.fault.lock().expect("fault lock");
            if f.is_none() {
                *f = Some(e.clone());
            }
        }
        out
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        self.inner.embed(text)
    }
}

fn push(log: &mut Vec<TrajectoryEvent>, tick: Tick, agent: &AgentState, kind: EventKind, payload: Value) {
    log.push(TrajectoryEvent {
        tick,
        agent: agent.id(),
        kind,
        payload,
        snapshot: Snapshot::of(agent),
    });
}

fn pair_key(a: u32, b: u32) -> String {
    format!("{}-{}", a.min(b), a.max(b))
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (l, r) = v.split_at_mut(j);
        (&mut l[i], &mut r[0])
    } else {
        let (l, r) = v.split_at_mut(i);
        (&mut r[0], &mut l[j])
    }
}

fn needs_delta(before: &NeedsState, after: &NeedsState) -> Value {
    let mut m = serde_json::Map::new();
    for n in crate::memory::Need::ALL {
        let d = after.get(n) - before.get(n);
        if d.abs() > 1e-12 {
            m.insert(n.name().to_string(), json!(d));
        }
    }
    Value::Object(m)
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self, SimError> {
        config.validate().map_err(SimError::Config)?;
        let layered = config.ablation.layered_affect();
        let mut agents: Vec<AgentRuntime> = config
            .agents
            .iter()
            .map(|p| {
                let mut state = AgentState::new(p.clone(), layered);
                state.memory.retrieval = config.retrieval;
                state.memory.summary = config.summary;
                AgentRuntime {
                    location: p.home.clone(),
                    state,
                    transit: None,
                    activity: None,
                    dmn: DmnSelector::new(config.dmn_strategy),
                    planned_day: None,
                    memo_seen: 0,
                }
            })
            .collect();
        agents.sort_by_key(|a| a.state.id());
        let name_of = |id| config.agents.iter().find(|a| a.id == id).map(|a| a.name.clone()).unwrap_or_default();
        for r in &config.relationships {
            for (me, other) in [(r.a, r.b), (r.b, r.a)] {
                if let Some(rt) = agents.iter_mut().find(|x| x.state.id() == me) {
                    rt.state.memory.set_relationship(other, &name_of(other), &r.kind, r.intimacy, "");
                }
            }
        }
        let now = config.clock.day_start(0);
        let mut log = Vec::new();
        for rt in &agents {
            push(
                &mut log,
                now,
                &rt.state,
                EventKind::Init,
                json!({
                    "name": rt.state.profile.name,
                    "location": rt.location,
                    "occupation": rt.state.profile.occupation,
                    "default_mood": rt.state.affect.default_mood,
                }),
            );
        }
        Ok(World {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            now,
            ticks_done: 0,
            agents,
            last_encounter: BTreeMap::new(),
            log,
            summary: Vec::new(),
        })
    }

    pub fn agent(&self, id: u32) -> Option<&AgentRuntime> {
        self.agents.iter().find(|a| a.state.id() == id)
    }

    /// Runs `ticks` more waking ticks.
    pub fn run(&mut self, gateway: &Gateway, ticks: u64, checkpoint: Option<&Path>) -> Result<(), SimError> {
        self.run_to(gateway, self.ticks_done + ticks, checkpoint)
    }

    /// Runs until `total` waking ticks have been simulated. On an engine
    /// failure the failing tick is undone, the world is written to
    /// `checkpoint` (if given) and the error is returned; loading the
    /// checkpoint and calling `run_to` again continues the same run.
    pub fn run_to(&mut self, gateway: &Gateway, total: u64, checkpoint: Option<&Path>) -> Result<(), SimError> {
        let watch = Arc::new(Watch {
            inner: gateway.backend(),
            fault: Mutex::new(None),
        });
        let gw = gateway.with_backend(watch.clone());
        while self.ticks_done < total {
            let before = self.clone();
            self.step(&gw);
            if let Some(error) = watch.take_fault() {
                *self = before;
                let saved = match checkpoint {
                    Some(p) => {
                        self.save_checkpoint(p)?;
                        Some(p.to_path_buf())
                    }
                    None => None,
                };
                return Err(SimError::Backend {
                    error,
                    tick: self.now,
                    checkpoint: saved,
                });
            }
        }
        Ok(())
    }

    fn places(&self) -> Vec<String> {
        self.config.all_places().into_iter().map(str::to_string).collect()
    }

    /// One waking tick.
    pub fn step(&mut self, gw: &Gateway) {
        let clock = self.config.clock;
        if !clock.is_waking(self.now) {
            self.now = clock.next_waking(self.now);
        }
        let t = self.now;
        let day = clock.day_of(t);
        let places = self.places();
        for i in 0..self.agents.len() {
            if self.agents[i].planned_day != Some(day) {
                self.plan(i, gw, day, &places);
            }
        }
        for i in 0..self.agents.len() {
            self.body(i, t);
        }
        self.encounters(gw, t);
        for i in 0..self.agents.len() {
            self.think(i, gw, t, &places);
        }
        for rt in &self.agents {
            self.summary.push(SummaryRow::new(
                t,
                clock.stamp(t),
                &rt.state,
                &rt.location,
                rt.activity_text(),
            ));
        }
        self.now += 1;
        self.ticks_done += 1;
        if self.now == clock.day_end(day) {
            self.end_day(gw, day);
        }
    }

    fn plan(&mut self, i: usize, gw: &Gateway, day: u64, places: &[String]) {
        let clock = self.config.clock;
        let t = self.now;
        let rt = &mut self.agents[i];
        let payload = match plan_day(&rt.state, gw, &clock, day, places) {
            Ok(s) => {
                rt.state.schedule = s;
                json!({"day": day, "schedule": rt.state.schedule, "fallback": false})
            }
            Err(e) => {
                let prev_day = rt.state.schedule.first().map(|e| clock.day_of(e.start));
                rt.state.schedule = match prev_day {
                    Some(d) if d < day => shift_schedule(&rt.state.schedule, day - d, &clock),
                    _ => normalize_schedule(Vec::new(), clock.day_start(day), clock.day_end(day), &rt.state.profile.home),
                };
                json!({"day": day, "schedule": rt.state.schedule, "fallback": true, "error": e.to_string()})
            }
        };
        rt.planned_day = Some(day);
        rt.memo_seen = rt.state.memo.len();
        push(&mut self.log, t, &rt.state, EventKind::Plan, payload);
    }

    fn body(&mut self, i: usize, t: Tick) {
        let clock = self.config.clock;
        let rt = &mut self.agents[i];
        if let Some(tr) = rt.transit.clone() {
            if tr.arrive <= t {
                rt.location = tr.to.clone();
                rt.transit = None;
                push(
                    &mut self.log,
                    t,
                    &rt.state,
                    EventKind::Move,
                    json!({"arrived": tr.to, "from": tr.from}),
                );
            }
        }
        rt.state.affect.decay(1.0, &self.config.affect);
        let doing = match (&rt.transit, &rt.activity) {
            (Some(_), _) => Activity::new("commute", "", false),
            (None, Some(a)) if a.started => Activity::new(&a.text, &a.location, false),
            _ => Activity::new("idle", &rt.location, false),
        };
        rt.state.needs = step_needs(&rt.state.needs, &doing, clock.hours(1), &self.config.needs);
        if let Some(c) = rt.state.affect.accumulate(&self.config.affect) {
            let mood = rt.state.affect.mood;
            push(
                &mut self.log,
                t,
                &rt.state,
                EventKind::Mood,
                json!({"center": c.position, "mood": mood.position, "octant": mood.octant, "intensity": mood.intensity}),
            );
        }
    }

    fn encounters(&mut self, gw: &Gateway, t: Tick) {
        let n = self.agents.len();
        let mut busy = vec![false; n];
        let cooldown = self.config.conversation_cooldown;
        for i in 0..n {
            if busy[i] || self.agents[i].transit.is_some() {
                continue;
            }
            for j in 0..n {
                if j == i || busy[i] || busy[j] {
                    continue;
                }
                let (a, b) = (&self.agents[i], &self.agents[j]);
                if b.transit.is_some() || a.location != b.location {
                    continue;
                }
                let key = pair_key(a.state.id(), b.state.id());
                if self.last_encounter.get(&key).is_some_and(|&last| t < last + cooldown) {
                    continue;
                }
                self.last_encounter.insert(key, t);
                let ctx = EncounterContext {
                    self_id: a.state.id(),
                    other: b.state.id(),
                    location: a.location.clone(),
                    other_surface: SurfaceInfo {
                        appearance: b.state.profile.appearance.clone(),
                        behavior: b.activity_text().to_string(),
                    },
                    acquainted: a.state.memory.is_acquainted(b.state.id()),
                };
                let decision = should_converse(
                    &ctx,
                    &a.state.needs,
                    a.state.memory.relation(b.state.id()),
                    &self.config.social,
                    gw,
                    &a.state.persona(),
                    &mut self.rng,
                );
                if !decision.is_ok_and(|d| d.converse) {
                    continue;
                }
                let location = ctx.location.clone();
                let (ra, rb) = pair_mut(&mut self.agents, i, j);
                let rec = converse(
                    &mut ra.state,
                    &mut rb.state,
                    gw,
                    &self.config.clock,
                    t,
                    &location,
                    &self.config.social,
                    &self.config.affect,
                );
                let gain = self.config.needs.conversation_social;
                let payload = serde_json::to_value(&rec).expect("record serializes");
                for rt in [&mut *ra, &mut *rb] {
                    let before = rt.state.needs;
                    rt.state.needs.add(crate::memory::Need::Social, gain);
                    push(&mut self.log, t, &rt.state, EventKind::Conversation, payload.clone());
                    if let Some((_, ev)) = rec.ratings.iter().find(|(id, _)| *id == rt.state.id()) {
                        push(
                            &mut self.log,
                            t,
                            &rt.state,
                            EventKind::Emotion,
                            json!({"cause": "conversation", "event": ev}),
                        );
                    }
                    push(
                        &mut self.log,
                        t,
                        &rt.state,
                        EventKind::Need,
                        json!({"cause": "conversation", "delta": needs_delta(&before, &rt.state.needs)}),
                    );
                }
                busy[i] = true;
                busy[j] = true;
            }
        }
    }

    fn think(&mut self, i: usize, gw: &Gateway, t: Tick, places: &[String]) {
        let clock = self.config.clock;
        let enabled = self.config.ablation.dmn_functions();
        let rt = &mut self.agents[i];
        if rt.state.memo.len() != rt.memo_seen {
            rt.memo_seen = rt.state.memo.len();
            let payload = match replan(&rt.state, gw, &clock, t, places) {
                Ok(s) => {
                    rt.state.schedule = s;
                    json!({"replan": true, "memo": rt.state.memo_text(), "schedule": rt.state.schedule})
                }
                Err(e) => json!({"replan": true, "memo": rt.state.memo_text(), "error": e.to_string()}),
            };
            push(&mut self.log, t, &rt.state, EventKind::Plan, payload);
        }
        let context = match (&rt.transit, &rt.activity, rt.state.schedule_at(t)) {
            (Some(_), _, _) => "commute".to_string(),
            (None, Some(a), _) => a.text.clone(),
            (None, None, Some(e)) => e.activity.clone(),
            _ => "idle".to_string(),
        };
        let mode = if enabled.is_empty() {
            ThinkingMode::Cen
        } else {
            sn_select_mode(&context, &self.config.sn, &mut self.rng)
        };
        if mode == ThinkingMode::Dmn {
            let digest = rt
                .state
                .memory
                .full
                .iter()
                .rev()
                .take(5)
                .map(|r| r.content.clone())
                .collect::<Vec<_>>()
                .join("; ");
            let persona = rt.state.persona();
            let goals = rt.state.profile.goals_text();
            if let Some(kind) = rt.dmn.select(&digest, &goals, &enabled, gw, &persona) {
                let location = rt.location.clone();
                match run_dmn_function(kind, &mut rt.state, gw, &clock, t, &location, &mut self.rng) {
                    Ok(art) => {
                        push(
                            &mut self.log,
                            t,
                            &rt.state,
                            EventKind::Dmn,
                            json!({"function": kind, "context": context, "text": art.text, "records": art.records, "impression_updates": art.impression_updates}),
                        );
                        for ev in &art.events {
                            let profile = rt.state.profile.big_five;
                            let i_eff = rt.state.affect.feel(&profile, ev, &self.config.affect);
                            push(
                                &mut self.log,
                                t,
                                &rt.state,
                                EventKind::Emotion,
                                json!({"cause": kind, "event": ev, "effective_intensity": i_eff}),
                            );
                        }
                    }
                    Err(e) => push(
                        &mut self.log,
                        t,
                        &rt.state,
                        EventKind::Dmn,
                        json!({"function": kind, "context": context, "error": e.to_string()}),
                    ),
                }
            }
        }
        if rt.transit.is_some() {
            return;
        }
        let entry = rt.state.schedule_at(t).cloned();
        let (source, priorities): (ActionSource, Option<Priorities>) = match mode {
            ThinkingMode::Dmn => (ActionSource::Schedule, None),
            ThinkingMode::Cen => {
                let p = compute_priorities(
                    entry.as_ref(),
                    &rt.state.needs,
                    &rt.state.affect.emotions,
                    &self.config.priority,
                    t,
                    &clock,
                );
                (
                    decide_source(&p, &rt.state.needs, &rt.state.affect.emotions, &self.config.priority),
                    Some(p),
                )
            }
        };
        let continuing = matches!(source, ActionSource::Need(_) | ActionSource::Emotion(_))
            && rt.activity.as_ref().is_some_and(|a| a.source == source);
        if !continuing {
            let (text, location, importance) = match source {
                ActionSource::Schedule | ActionSource::Task => match &entry {
                    Some(e) => (e.activity.clone(), e.location.clone(), e.importance),
                    None => ("free time".to_string(), rt.state.profile.home.clone(), 0.1),
                },
                ActionSource::Need(_) | ActionSource::Emotion(_) => {
                    let p = priorities.expect("CEN computed priorities");
                    let ctx = DecisionContext {
                        persona: rt.state.persona(),
                        now: clock.stamp(t),
                        location: rt.location.clone(),
                        scheduled: entry.as_ref().map(|e| e.activity.clone()).unwrap_or_else(|| "free time".into()),
                        feelings: format!("{}; needs: {}", rt.state.affect.describe(), rt.state.needs.describe()),
                        inspirations: inspirations(&rt.state, 3),
                    };
                    let choice = decide(
                        &p,
                        entry.as_ref(),
                        &rt.state.needs,
                        &rt.state.affect.emotions,
                        &self.config.priority,
                        gw,
                        &ctx,
                    );
                    let loc = location_hint(&choice.activity, &rt.state, places);
                    (choice.activity, loc, 0.5)
                }
            };
            let changed = rt
                .activity
                .as_ref()
                .map_or(true, |a| a.text != text || a.location != location || a.source != source);
            if changed {
                rt.activity = Some(CurrentActivity {
                    text: text.clone(),
                    location: location.clone(),
                    source,
                    importance,
                    started: false,
                    since: t,
                });
                push(
                    &mut self.log,
                    t,
                    &rt.state,
                    EventKind::Action,
                    json!({"mode": mode, "source": source, "activity": text, "location": location, "priorities": priorities}),
                );
            }
        }
        let Some(act) = rt.activity.clone() else { return };
        if act.started {
            return;
        }
        if act.location != rt.location {
            let graph = self.config.graph();
            let d = hops(&graph, &rt.location, &act.location).unwrap_or(1).max(1);
            rt.transit = Some(Transit {
                from: rt.location.clone(),
                to: act.location.clone(),
                arrive: t + d,
            });
            push(
                &mut self.log,
                t,
                &rt.state,
                EventKind::Move,
                json!({"from": rt.location, "to": act.location, "arrive": t + d}),
            );
            return;
        }
        let before = rt.state.needs;
        rt.state.needs = step_needs(&before, &Activity::new(&act.text, &act.location, true), 0.0, &self.config.needs);
        if rt.state.needs != before {
            push(
                &mut self.log,
                t,
                &rt.state,
                EventKind::Need,
                json!({"cause": act.text, "delta": needs_delta(&before, &rt.state.needs)}),
            );
        }
        rt.state.remember(t, &act.location, &format!("I {}", act.text), act.importance);
        if let Some(a) = rt.activity.as_mut() {
            a.started = true;
        }
    }

    fn end_day(&mut self, gw: &Gateway, day: u64) {
        let clock = self.config.clock;
        let (from, to) = (clock.day_start(day), clock.day_end(day));
        for rt in &mut self.agents {
            let payload = match reflect(&mut rt.state, gw, (from, to - 1), &clock) {
                Ok(out) => json!({
                    "day": day,
                    "insight": out.insight.and_then(|id| rt.state.memory.summarized.iter().find(|s| s.id == id)).map(|s| s.insight.clone()),
                    "summaries": out.summary.summaries.len(),
                    "deleted": out.summary.deleted.len(),
                }),
                Err(e) => json!({"day": day, "error": e.to_string()}),
            };
            push(&mut self.log, to, &rt.state, EventKind::Reflection, payload);
        }
        let next = clock.day_start(day + 1);
        let night = next - to;
        for rt in &mut self.agents {
            rt.location = rt.state.profile.home.clone();
            rt.transit = None;
            rt.activity = None;
            let before = rt.state.needs;
            let home = rt.location.clone();
            rt.state.needs = step_needs(&before, &Activity::new("sleep", &home, false), clock.hours(night), &self.config.needs);
            rt.state.affect.decay(night as f64, &self.config.affect);
            push(
                &mut self.log,
                to,
                &rt.state,
                EventKind::Need,
                json!({"cause": "night", "delta": needs_delta(&before, &rt.state.needs)}),
            );
        }
        self.now = next;
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), SimError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(self).map_err(|e| SimError::Config(e.to_string()))?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, SimError> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| SimError::Config(format!("bad checkpoint {}: {e}", path.display())))
    }

    /// Writes `trajectory.jsonl`, `summary.csv` and each agent's memory
    /// under `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
        fs::create_dir_all(dir)?;
        let traj = dir.join("trajectory.jsonl");
        log::write_jsonl(&traj, &self.log)?;
        let summary = dir.join("summary.csv");
        log::write_summary_csv(&summary, &self.summary)?;
        for rt in &self.agents {
            rt.state
                .memory
                .save(&dir.join("memory").join(format!("agent_{}", rt.state.id())))
                .map_err(|e| SimError::Config(e.to_string()))?;
        }
        Ok(vec![traj, summary])
    }
}
