//! Needs dynamics: constant hourly drift plus effects of what the agent is
//! doing.

use serde::{Deserialize, Serialize};

use crate::memory::{Need, NeedsState};

/// One row of the activity-effect table. An activity matches when any
/// keyword occurs in its text or its location equals `location`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEffect {
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub location: Option<String>,
    pub need: Need,
    pub amount: f64,
    /// `true`: amount per hour while the activity lasts. `false`: applied
    /// once when the activity starts.
    pub per_hour: bool,
}

impl ActivityEffect {
    fn new(keywords: &[&str], location: Option<&str>, need: Need, amount: f64, per_hour: bool) -> Self {
        ActivityEffect {
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            location: location.map(str::to_string),
            need,
            amount,
            per_hour,
        }
    }

    pub fn matches(&self, activity: &Activity) -> bool {
        let text = activity.text.to_lowercase();
        let tokens = crate::backend::tokenize(&text);
        self.keywords.iter().any(|k| {
            if k.contains(' ') {
                text.contains(k.as_str())
            } else {
                tokens.iter().any(|t| word_form_of(t, k))
            }
        }) || self.location.as_deref().is_some_and(|l| l == activity.location)
    }
}

/// `eating` and `eats` are forms of `eat`; `restaurant` is not a form of
/// `rest`.
fn word_form_of(token: &str, keyword: &str) -> bool {
    const SUFFIXES: [&str; 9] = ["", "e", "s", "es", "ed", "ing", "ping", "ting", "ning"];
    token
        .strip_prefix(keyword)
        .is_some_and(|rest| SUFFIXES.contains(&rest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeedsParams {
    /// Drift per hour in [`Need::ALL`] order.
    pub drift_per_hour: [f64; 5],
    pub effects: Vec<ActivityEffect>,
    /// Social gain from one conversation.
    pub conversation_social: f64,
}

impl Default for NeedsParams {
    fn default() -> Self {
        NeedsParams {
            drift_per_hour: [-0.05, -0.03, 0.0, -0.03, -0.04],
            effects: vec![
                ActivityEffect::new(&["eat", "breakfast", "lunch", "dinner", "meal"], None, Need::Fullness, 0.4, false),
                ActivityEffect::new(&["sleep", "nap", "rest"], None, Need::Energy, 0.1, true),
                ActivityEffect::new(&["chat", "socializ", "party", "visit friends"], None, Need::Social, 0.2, false),
                ActivityEffect::new(&["doctor", "checkup"], Some("clinic"), Need::Health, 0.3, false),
                ActivityEffect::new(&["fun", "play", "game", "hobby", "music", "movie"], None, Need::Fun, 0.1, true),
            ],
            conversation_social: 0.2,
        }
    }
}

/// What an agent is doing this step.
#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub text: String,
    pub location: String,
    /// First step of this activity.
    pub onset: bool,
}

impl Activity {
    pub fn new(text: &str, location: &str, onset: bool) -> Self {
        Activity {
            text: text.to_string(),
            location: location.to_string(),
            onset,
        }
    }
}

/// Advances needs by `dt_hours`. One-off effects fire when `activity.onset`
/// is set; with `dt_hours == 0` and no onset the needs are unchanged.
pub fn step_needs(needs: &NeedsState, activity: &Activity, dt_hours: f64, params: &NeedsParams) -> NeedsState {
    let mut out = *needs;
    let dt = dt_hours.max(0.0);
    for (n, rate) in Need::ALL.iter().zip(params.drift_per_hour) {
        out.add(*n, rate * dt);
    }
    for e in params.effects.iter().filter(|e| e.matches(activity)) {
        if e.per_hour {
            out.add(e.need, e.amount * dt);
        } else if activity.onset {
            out.add(e.need, e.amount);
        }
    }
    out
}
