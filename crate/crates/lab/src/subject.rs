//! A participant: an agent state plus the thinking modules its ablation
//! enables, and the prompts the harness poses to it.

use cogtown_core::affect::{AffectParams, Emotion, EmotionEvent, PersonalityProfile};
use cogtown_core::backend::{BackendError, ExpectedFormat, Gateway};
use cogtown_core::clock::{Clock, Tick};
use cogtown_core::cognition::{run_dmn_function, Ablation, DmnFunction, DmnSelector, DmnStrategy};
use cogtown_core::memory::{AgentId, AgentProfile, AgentState};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::Population;

const WOMEN: [&str; 40] = [
    "Alice", "Beatrice", "Clara", "Dana", "Elena", "Fiona", "Grace", "Hannah", "Irene", "Julia", "Karen", "Laura",
    "Maria", "Nadia", "Olivia", "Paula", "Rosa", "Sofia", "Tara", "Ursula", "Vera", "Wendy", "Yara", "Zoe", "Amira",
    "Bianca", "Carmen", "Daisy", "Esther", "Frances", "Gemma", "Helen", "Ingrid", "Joan", "Kira", "Lena", "Maya",
    "Nora", "Opal", "Ruth",
];

const MEN: [&str; 40] = [
    "Adam", "Bruno", "Carl", "David", "Ethan", "Felix", "George", "Henry", "Ivan", "James", "Kevin", "Leo", "Marco",
    "Noah", "Oscar", "Peter", "Quentin", "Ryan", "Samuel", "Thomas", "Victor", "Walter", "Xavier", "Yusuf", "Zack",
    "Aaron", "Boris", "Colin", "Derek", "Emil", "Frank", "Gavin", "Hugo", "Isaac", "Jonah", "Kyle", "Liam", "Miles",
    "Nathan", "Owen",
];

/// `n` random participants drawn from `pop`.
pub fn generate_profiles<R: Rng + ?Sized>(pop: &Population, n: usize, rng: &mut R) -> Vec<AgentProfile> {
    let mut pool: Vec<(&str, &str)> = match pop.gender.as_deref() {
        Some("woman") => WOMEN.iter().map(|n| (*n, "woman")).collect(),
        Some("man") => MEN.iter().map(|n| (*n, "man")).collect(),
        _ => WOMEN
            .iter()
            .map(|n| (*n, "woman"))
            .chain(MEN.iter().map(|n| (*n, "man")))
            .collect(),
    };
    pool.shuffle(rng);
    (0..n)
        .map(|i| {
            let (base, gender) = pool[i % pool.len()];
            let name = if i < pool.len() {
                base.to_string()
            } else {
                format!("{base} {}", i / pool.len() + 1)
            };
            let age = rng.gen_range(pop.min_age..=pop.max_age);
            let big_five = PersonalityProfile::from_array(std::array::from_fn(|_| rng.gen::<f64>()));
            AgentProfile::new(i as AgentId + 1, &name, gender, age, &pop.occupation, big_five)
        })
        .collect()
}

/// Emotions and mood after a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectSnapshot {
    pub emotions: [f64; 6],
    pub mood: [f64; 3],
    pub octant: String,
}

/// A bounded rating, with whether it had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub value: Option<f64>,
    pub raw: Option<f64>,
    pub clamped: bool,
}

/// Format failures (after the gateway's re-ask) become missing answers;
/// anything else aborts the run.
fn soft<T>(r: Result<T, BackendError>) -> Result<Option<T>, BackendError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(BackendError::Format { expected, raw }) => {
            log::warn!("unparseable reply (expected {expected}): {raw:?}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct Subject {
    pub state: AgentState,
    pub group: String,
    /// Index within the group.
    pub slot: usize,
    pub now: Tick,
    functions: Vec<DmnFunction>,
    selector: DmnSelector,
    params: AffectParams,
    clock: Clock,
}

impl Subject {
    pub fn new(profile: AgentProfile, group: &str, slot: usize, ablation: Ablation) -> Self {
        let clock = Clock::default();
        Subject {
            state: AgentState::new(profile, ablation.layered_affect()),
            group: group.to_string(),
            slot,
            now: clock.day_start(0),
            functions: ablation.dmn_functions(),
            selector: DmnSelector::new(DmnStrategy::Cyclic),
            params: AffectParams::default(),
            clock,
        }
    }

    pub fn id(&self) -> AgentId {
        self.state.id()
    }

    pub fn name(&self) -> &str {
        &self.state.profile.name
    }

    /// Adds a line to the persona (beliefs, instructions, values).
    pub fn note(&mut self, line: &str) {
        self.state.profile.notes.push(line.to_string());
    }

    pub fn feelings(&self) -> String {
        self.state.affect.describe()
    }

    /// Recent spontaneous thoughts, newest first.
    pub fn thoughts(&self) -> String {
        let v: Vec<&str> = self
            .state
            .memory
            .full
            .iter()
            .rev()
            .filter(|r| matches!(r.tag.as_deref(), Some("imagined" | "self" | "inspiration")))
            .take(3)
            .map(|r| r.content.as_str())
            .collect();
        if v.is_empty() {
            "nothing in particular".into()
        } else {
            v.join(" / ")
        }
    }

    fn memories(&self, gw: &Gateway, query: &str) -> String {
        let v: Vec<String> = self
            .state
            .memory
            .retrieve(query, 3, self.now, gw)
            .into_iter()
            .map(|r| r.content.clone())
            .collect();
        if v.is_empty() {
            "nothing relevant".into()
        } else {
            v.join("; ")
        }
    }

    fn vars(&self, gw: &Gateway, situation: &str) -> Vec<(&'static str, String)> {
        vec![
            ("persona", self.state.persona()),
            ("memories", self.memories(gw, situation)),
            ("feelings", self.feelings()),
            ("thoughts", self.thoughts()),
            ("situation", situation.to_string()),
        ]
    }

    /// One of `options`, or `None` when no option could be read from the
    /// reply.
    pub fn choose(
        &self,
        gw: &Gateway,
        template: &str,
        situation: &str,
        options: &[String],
    ) -> Result<Option<String>, BackendError> {
        let r = soft(gw.ask(template, &self.vars(gw, situation), ExpectedFormat::Choice(options.to_vec())))?;
        Ok(r.and_then(|r| r.choice().map(str::to_string)))
    }

    pub fn say(&self, gw: &Gateway, situation: &str) -> Result<String, BackendError> {
        let r = gw.ask("lab_say", &self.vars(gw, situation), ExpectedFormat::Freetext)?;
        Ok(r.text.trim().to_string())
    }

    /// A number on `[min, max]`. Out-of-range answers are clamped and
    /// flagged; unreadable ones are missing.
    pub fn rate(
        &self,
        gw: &Gateway,
        situation: &str,
        question: &str,
        min: f64,
        max: f64,
    ) -> Result<Rating, BackendError> {
        let mut vars = self.vars(gw, situation);
        vars.push(("question", question.to_string()));
        vars.push(("min", fmt_bound(min)));
        vars.push(("max", fmt_bound(max)));
        let r = soft(gw.ask("lab_rating", &vars, ExpectedFormat::Scores(1)))?;
        let raw = r.and_then(|r| r.scores().and_then(|s| s.first().copied()));
        Ok(match raw {
            Some(x) if x.is_finite() => {
                let v = x.clamp(min, max);
                Rating {
                    value: Some(v),
                    raw: Some(x),
                    clamped: v != x,
                }
            }
            _ => Rating {
                value: None,
                raw: None,
                clamped: false,
            },
        })
    }

    /// An ordered list of actions; `None` when the reply is not a list.
    pub fn sequence(
        &self,
        gw: &Gateway,
        situation: &str,
        actions: &[String],
        notice: &str,
    ) -> Result<Option<Vec<String>>, BackendError> {
        let mut vars = self.vars(gw, situation);
        vars.push(("actions", actions.join(", ")));
        vars.push(("notice", notice.to_string()));
        let r = soft(gw.ask("lab_actions", &vars, ExpectedFormat::JsonSchema("action_sequence".into())))?;
        Ok(r.and_then(|r| {
            r.json()?.get("actions")?.as_array().map(|a| {
                a.iter()
                    .map(|v| v.as_str().unwrap_or_default().trim().to_string())
                    .collect()
            })
        }))
    }

    /// Asks which emotion the situation evokes and applies it.
    pub fn react(&mut self, gw: &Gateway, situation: &str) -> Result<Option<EmotionEvent>, BackendError> {
        let vars = [
            ("persona", self.state.persona()),
            ("feelings", self.feelings()),
            ("situation", situation.to_string()),
        ];
        let r = soft(gw.ask("lab_react", &vars, ExpectedFormat::JsonSchema("emotion_rating".into())))?;
        let ev = r.and_then(|r| {
            let v = r.json()?;
            let kind: Emotion = v.get("emotion")?.as_str()?.parse().ok()?;
            let intensity = v.get("intensity")?.as_f64()?;
            Some(EmotionEvent::new(kind, intensity.clamp(0.0, 1.0), self.now))
        });
        if let Some(e) = &ev {
            self.state.affect.feel(&self.state.profile.big_five, e, &self.params);
        }
        Ok(ev)
    }

    /// Raises `kind` by `delta` over its current level.
    pub fn inject(&mut self, kind: Emotion, delta: f64) {
        if delta > 0.0 {
            self.state
                .affect
                .nudge(&self.state.profile.big_five, kind, delta, self.now, &self.params);
        }
    }

    /// Folds pending emotions into the mood, then lets `ticks` pass.
    pub fn advance(&mut self, ticks: u64) {
        self.state.affect.accumulate(&self.params);
        if ticks > 0 {
            self.state.affect.decay(ticks as f64, &self.params);
            self.now += ticks;
        }
    }

    pub fn remember(&mut self, text: &str, importance: f64) {
        self.state.remember(self.now, "lab", text, importance);
    }

    /// Runs `episodes` spontaneous-thought episodes with the enabled
    /// functions, applying any emotions they produce. Returns the texts.
    pub fn rest<R: Rng + ?Sized>(&mut self, gw: &Gateway, episodes: usize, rng: &mut R) -> Result<Vec<String>, BackendError> {
        let mut out = Vec::new();
        for _ in 0..episodes {
            let digest: String = self
                .state
                .memory
                .full
                .iter()
                .rev()
                .take(5)
                .map(|r| r.content.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let goals = self.state.profile.goals_text();
            let persona = self.state.persona();
            let Some(f) = self.selector.select(&digest, &goals, &self.functions, gw, &persona) else {
                break;
            };
            let Some(art) = soft(run_dmn_function(f, &mut self.state, gw, &self.clock, self.now, "lab", rng))? else {
                continue;
            };
            for e in &art.events {
                self.state.affect.feel(&self.state.profile.big_five, e, &self.params);
            }
            out.push(format!("{}: {}", f.name(), art.text));
        }
        self.state.affect.accumulate(&self.params);
        Ok(out)
    }

    pub fn snapshot(&self) -> AffectSnapshot {
        let a = &self.state.affect;
        AffectSnapshot {
            emotions: a.emotions.to_array(),
            mood: a.mood.position.to_array(),
            octant: a.mood.octant.name().to_string(),
        }
    }
}

fn fmt_bound(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogtown_core::backend::{ScriptRule, ScriptedBackend};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn subject(ablation: Ablation) -> Subject {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = generate_profiles(&Population::default(), 1, &mut rng).remove(0);
        Subject::new(p, "g", 0, ablation)
    }

    fn lab_gw(rules: Vec<ScriptRule>) -> Gateway {
        crate::templates::lab_gateway(&Gateway::scripted(ScriptedBackend::new(rules).unwrap()))
    }

    #[test]
    fn profiles_are_unique_and_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pop = Population {
            occupation: "housewife".into(),
            gender: Some("woman".into()),
            min_age: 25,
            max_age: 55,
        };
        let ps = generate_profiles(&pop, 45, &mut rng);
        let mut names: Vec<_> = ps.iter().map(|p| p.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 45);
        assert!(ps.iter().all(|p| (25..=55).contains(&p.age) && p.gender == "woman"));
    }

    #[test]
    fn out_of_range_rating_is_clamped_and_flagged() {
        let gw = lab_gw(vec![ScriptRule::new(Some("lab_rating"), ".", "+7")]);
        let r = subject(Ablation::Full).rate(&gw, "s", "q", -5.0, 5.0).unwrap();
        assert_eq!(r.value, Some(5.0));
        assert_eq!(r.raw, Some(7.0));
        assert!(r.clamped);
    }

    #[test]
    fn unreadable_rating_is_missing() {
        let gw = lab_gw(vec![ScriptRule::new(Some("lab_rating"), ".", "no idea")]);
        let r = subject(Ablation::Full).rate(&gw, "s", "q", 0.0, 10.0).unwrap();
        assert_eq!(r.value, None);
    }

    #[test]
    fn based_subject_has_no_spontaneous_thought() {
        let gw = lab_gw(vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = subject(Ablation::Based);
        assert!(s.rest(&gw, 3, &mut rng).unwrap().is_empty());
        let mut f = subject(Ablation::Full);
        assert_eq!(f.rest(&gw, 3, &mut rng).unwrap().len(), 3);
        assert_ne!(f.thoughts(), "nothing in particular");
    }
}
