//! Layered affect: emotions (short-term), mood (medium-term) and personality
//! (long-term), all projected into Pleasure-Arousal-Dominance space.
//!
//! Everything here is a pure function over values. [`AffectState`] bundles the
//! three layers for one agent and keeps the queue of emotion points that feed
//! the next mood update.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffectError {
    #[error("unknown emotion `{0}`")]
    UnknownEmotion(String),
    #[error("virtual emotion center is undefined: {0}")]
    UndefinedCenter(&'static str),
}

/// A point in PAD space. Components are kept in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PadVector {
    pub p: f64,
    pub a: f64,
    pub d: f64,
}

impl PadVector {
    pub const ORIGIN: PadVector = PadVector { p: 0.0, a: 0.0, d: 0.0 };

    /// Builds a clamped vector.
    pub fn new(p: f64, a: f64, d: f64) -> Self {
        Self::raw(p, a, d).clamped()
    }

    /// Builds a vector without clamping (intermediate arithmetic only).
    pub const fn raw(p: f64, a: f64, d: f64) -> Self {
        PadVector { p, a, d }
    }

    pub fn clamped(self) -> Self {
        PadVector {
            p: self.p.clamp(-1.0, 1.0),
            a: self.a.clamp(-1.0, 1.0),
            d: self.d.clamp(-1.0, 1.0),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p, self.a, self.d]
    }

    pub fn dot(self, other: PadVector) -> f64 {
        self.p * other.p + self.a * other.a + self.d * other.d
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(self, other: PadVector) -> PadVector {
        PadVector::raw(self.p + other.p, self.a + other.a, self.d + other.d)
    }

    pub fn sub(self, other: PadVector) -> PadVector {
        PadVector::raw(self.p - other.p, self.a - other.a, self.d - other.d)
    }

    pub fn scale(self, k: f64) -> PadVector {
        PadVector::raw(self.p * k, self.a * k, self.d * k)
    }

    pub fn distance(self, other: PadVector) -> f64 {
        self.sub(other).norm()
    }

    /// Euclidean length normalised by the length of the cube's corner, so
    /// the result lies in `[0, 1]` for any clamped vector.
    pub fn intensity(self) -> f64 {
        (self.norm() / 3f64.sqrt()).min(1.0)
    }

    /// Cosine similarity; zero when either vector is at the origin.
    pub fn cosine(self, other: PadVector) -> f64 {
        let n = self.norm() * other.norm();
        if n == 0.0 {
            0.0
        } else {
            self.dot(other) / n
        }
    }

    pub fn is_finite(self) -> bool {
        self.p.is_finite() && self.a.is_finite() && self.d.is_finite()
    }
}

/// Big-Five profile, each trait in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonalityProfile {
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
    pub openness: f64,
    pub conscientiousness: f64,
}

impl Default for PersonalityProfile {
    fn default() -> Self {
        Self::from_array([0.5; 5])
    }
}

impl PersonalityProfile {
    /// Order: extraversion, agreeableness, neuroticism, openness, conscientiousness.
    pub fn from_array(c: [f64; 5]) -> Self {
        PersonalityProfile {
            extraversion: c[0].clamp(0.0, 1.0),
            agreeableness: c[1].clamp(0.0, 1.0),
            neuroticism: c[2].clamp(0.0, 1.0),
            openness: c[3].clamp(0.0, 1.0),
            conscientiousness: c[4].clamp(0.0, 1.0),
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
            self.openness,
            self.conscientiousness,
        ]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// Personality-to-PAD weight rows, indexed like [`PersonalityProfile::to_array`].
pub const PLEASURE_WEIGHTS: [f64; 5] = [0.21, 0.59, 0.19, 0.0, 0.0];
pub const AROUSAL_WEIGHTS: [f64; 5] = [0.0, 0.30, -0.57, 0.15, 0.0];
pub const DOMINANCE_WEIGHTS: [f64; 5] = [0.60, -0.32, 0.0, 0.25, 0.17];

fn dot5(w: &[f64; 5], c: &[f64; 5]) -> f64 {
    w.iter().zip(c).map(|(a, b)| a * b).sum()
}

/// Projects a personality into PAD space. The result doubles as the agent's
/// default mood.
pub fn map_personality_to_pad(profile: &PersonalityProfile) -> PadVector {
    let c = profile.to_array();
    PadVector::new(
        dot5(&PLEASURE_WEIGHTS, &c),
        dot5(&AROUSAL_WEIGHTS, &c),
        dot5(&DOMINANCE_WEIGHTS, &c),
    )
}

/// The six basic emotions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Happiness,
    Sadness,
    Anger,
    Fear,
    Disgust,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Disgust,
        Emotion::Surprise,
    ];

    pub const NEGATIVE: [Emotion; 4] = [
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Disgust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Disgust => "disgust",
            Emotion::Surprise => "surprise",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_negative(self) -> bool {
        Self::NEGATIVE.contains(&self)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = AffectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == lower)
            .ok_or(AffectError::UnknownEmotion(s.to_string()))
    }
}

/// Fixed PAD coordinates of the basic emotions.
pub fn emotion_basis(kind: Emotion) -> PadVector {
    match kind {
        Emotion::Happiness => PadVector::raw(0.4, 0.2, 0.1),
        Emotion::Sadness => PadVector::raw(-0.6, -0.4, -0.5),
        Emotion::Anger => PadVector::raw(-0.51, 0.59, 0.25),
        Emotion::Fear => PadVector::raw(-0.64, 0.6, -0.43),
        Emotion::Disgust => PadVector::raw(-0.4, 0.2, 0.1),
        Emotion::Surprise => PadVector::raw(0.2, 0.5, 0.1),
    }
}

/// Name-based lookup for callers holding free text (backend output, configs).
pub fn emotion_basis_by_name(name: &str) -> Result<PadVector, AffectError> {
    name.parse::<Emotion>().map(emotion_basis)
}

/// Levels of the six emotions, each in `[0, 1]`; 0.5 is neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionVector {
    pub happiness: f64,
    pub sadness: f64,
    pub anger: f64,
    pub fear: f64,
    pub disgust: f64,
    pub surprise: f64,
}

impl Default for EmotionVector {
    fn default() -> Self {
        Self::neutral()
    }
}

impl EmotionVector {
    pub const NEUTRAL_LEVEL: f64 = 0.5;

    pub fn neutral() -> Self {
        Self::from_array([Self::NEUTRAL_LEVEL; 6])
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        EmotionVector {
            happiness: v[0].clamp(0.0, 1.0),
            sadness: v[1].clamp(0.0, 1.0),
            anger: v[2].clamp(0.0, 1.0),
            fear: v[3].clamp(0.0, 1.0),
            disgust: v[4].clamp(0.0, 1.0),
            surprise: v[5].clamp(0.0, 1.0),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.happiness,
            self.sadness,
            self.anger,
            self.fear,
            self.disgust,
            self.surprise,
        ]
    }

    pub fn get(&self, kind: Emotion) -> f64 {
        self.to_array()[kind.index()]
    }

    pub fn set(&mut self, kind: Emotion, value: f64) {
        let mut v = self.to_array();
        v[kind.index()] = value;
        *self = Self::from_array(v);
    }

    /// Strongest negative emotion and its level. Ties resolve in
    /// [`Emotion::NEGATIVE`] order.
    pub fn max_negative(&self) -> (Emotion, f64) {
        let mut best = (Emotion::Sadness, self.sadness);
        for kind in Emotion::NEGATIVE {
            let v = self.get(kind);
            if v > best.1 {
                best = (kind, v);
            }
        }
        best
    }

    /// Largest absolute deviation from the neutral level.
    pub fn deviation_from_neutral(&self) -> f64 {
        self.to_array()
            .iter()
            .map(|v| (v - Self::NEUTRAL_LEVEL).abs())
            .fold(0.0, f64::max)
    }

    pub fn in_bounds(&self) -> bool {
        self.to_array().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// A single emotion-eliciting event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionEvent {
    pub kind: Emotion,
    pub base_intensity: f64,
    pub tick: u64,
}

impl EmotionEvent {
    pub fn new(kind: Emotion, base_intensity: f64, tick: u64) -> Self {
        EmotionEvent {
            kind,
            base_intensity: base_intensity.clamp(0.0, 1.0),
            tick,
        }
    }
}

/// The eight sign-pattern regions of PAD space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Octant {
    Exuberant,
    Dependent,
    Relaxed,
    Docile,
    Hostile,
    Anxious,
    Disdainful,
    Bored,
}

impl Octant {
    pub fn name(self) -> &'static str {
        match self {
            Octant::Exuberant => "exuberant",
            Octant::Dependent => "dependent",
            Octant::Relaxed => "relaxed",
            Octant::Docile => "docile",
            Octant::Hostile => "hostile",
            Octant::Anxious => "anxious",
            Octant::Disdainful => "disdainful",
            Octant::Bored => "bored",
        }
    }
}

impl fmt::Display for Octant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Zero components count as positive.
pub fn classify_octant(v: PadVector) -> Octant {
    match (v.p >= 0.0, v.a >= 0.0, v.d >= 0.0) {
        (true, true, true) => Octant::Exuberant,
        (true, true, false) => Octant::Dependent,
        (true, false, true) => Octant::Relaxed,
        (true, false, false) => Octant::Docile,
        (false, true, true) => Octant::Hostile,
        (false, true, false) => Octant::Anxious,
        (false, false, true) => Octant::Disdainful,
        (false, false, false) => Octant::Bored,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoodState {
    pub position: PadVector,
    pub octant: Octant,
    pub intensity: f64,
}

impl MoodState {
    pub fn at(position: PadVector) -> Self {
        let position = position.clamped();
        MoodState {
            position,
            octant: classify_octant(position),
            intensity: position.intensity(),
        }
    }
}

impl Default for MoodState {
    fn default() -> Self {
        MoodState::at(PadVector::ORIGIN)
    }
}

/// Tunables of the affect layers. Half-lives are in simulation ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffectParams {
    pub pull_rate: f64,
    pub push_rate: f64,
    pub emotion_half_life: f64,
    pub mood_half_life: f64,
    pub mood_weight_base: f64,
    pub mood_weight_span: f64,
}

impl Default for AffectParams {
    /// Half-lives assume 15-minute ticks: 2 hours for emotions, 24 for mood.
    fn default() -> Self {
        AffectParams {
            pull_rate: 0.3,
            push_rate: 0.1,
            emotion_half_life: 8.0,
            mood_half_life: 96.0,
            mood_weight_base: 0.2,
            mood_weight_span: 0.3,
        }
    }
}

impl AffectParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.pull_rate > 0.0 && self.pull_rate <= 1.0) {
            return Err(format!("pull_rate {} outside (0, 1]", self.pull_rate));
        }
        if !(self.push_rate > 0.0 && self.push_rate <= 1.0) {
            return Err(format!("push_rate {} outside (0, 1]", self.push_rate));
        }
        if !(self.emotion_half_life > 0.0 && self.mood_half_life > 0.0) {
            return Err("half-lives must be positive".into());
        }
        Ok(())
    }

    /// Weight of mood in a new emotion, scaled by emotional reactivity.
    pub fn mood_weight(&self, profile: &PersonalityProfile) -> f64 {
        self.mood_weight_base + self.mood_weight_span * profile.neuroticism
    }
}

/// Intensity-weighted centre of a set of emotion points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionCenter {
    pub position: PadVector,
    pub total_intensity: f64,
    /// Mean event intensity. Recorded, not used by the mood update.
    pub mean_intensity: f64,
}

pub fn virtual_emotion_center(events: &[(PadVector, f64)]) -> Result<EmotionCenter, AffectError> {
    if events.is_empty() {
        return Err(AffectError::UndefinedCenter("no events"));
    }
    if events.iter().any(|(_, i)| !(*i >= 0.0) || !i.is_finite()) {
        return Err(AffectError::UndefinedCenter("negative or non-finite intensity"));
    }
    let total: f64 = events.iter().map(|(_, i)| i).sum();
    if total <= 0.0 {
        return Err(AffectError::UndefinedCenter("all intensities are zero"));
    }
    let weighted = events
        .iter()
        .fold(PadVector::ORIGIN, |acc, (v, i)| acc.add(v.scale(*i)));
    Ok(EmotionCenter {
        position: weighted.scale(1.0 / total),
        total_intensity: total,
        mean_intensity: total / events.len() as f64,
    })
}

/// Moves the mood relative to the virtual emotion center.
///
/// The current mood is projected onto the center's direction. A projection
/// shorter than the center (mood between origin and center, or of opposite
/// polarity) pulls the mood toward the center; otherwise the center lies
/// between origin and mood and the mood is pushed further out.
pub fn update_mood(current: &MoodState, center: PadVector, params: &AffectParams) -> MoodState {
    let c_norm = center.norm();
    if c_norm == 0.0 || !center.is_finite() {
        return *current;
    }
    let cur = current.position;
    let projection = cur.dot(center) / c_norm;
    let next = if projection < c_norm {
        cur.add(center.sub(cur).scale(params.pull_rate))
    } else {
        cur.add(cur.sub(center).scale(params.push_rate))
    };
    MoodState::at(next)
}

/// Intensity of an event after mood overlay. Mood aligned with the emotion
/// raises it, opposed mood lowers it.
pub fn effective_intensity(
    mood: &MoodState,
    profile: &PersonalityProfile,
    event: &EmotionEvent,
    params: &AffectParams,
) -> f64 {
    let alignment = emotion_basis(event.kind).cosine(mood.position) * mood.intensity;
    (event.base_intensity + params.mood_weight(profile) * alignment).clamp(0.0, 1.0)
}

/// Applies one event to the emotion vector; the touched component rises to
/// the effective intensity if that is higher.
pub fn apply_event(
    state: &EmotionVector,
    mood: &MoodState,
    profile: &PersonalityProfile,
    event: &EmotionEvent,
    params: &AffectParams,
) -> EmotionVector {
    let i = effective_intensity(mood, profile, event, params);
    let mut next = *state;
    next.set(event.kind, state.get(event.kind).max(i));
    next
}

fn half_life_factor(dt: f64, half_life: f64) -> f64 {
    (-(std::f64::consts::LN_2) * dt / half_life).exp()
}

/// Exponential relaxation: emotions toward 0.5, mood toward the default mood.
pub fn decay(
    state: &EmotionVector,
    mood: &MoodState,
    default_mood: PadVector,
    dt: f64,
    params: &AffectParams,
) -> (EmotionVector, MoodState) {
    if dt <= 0.0 {
        return (*state, *mood);
    }
    let ke = half_life_factor(dt, params.emotion_half_life);
    let km = half_life_factor(dt, params.mood_half_life);
    let n = EmotionVector::NEUTRAL_LEVEL;
    let emotions = EmotionVector::from_array(state.to_array().map(|v| n + (v - n) * ke));
    let pos = default_mood.add(mood.position.sub(default_mood).scale(km));
    (emotions, MoodState::at(pos))
}

/// The three affect layers of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectState {
    pub emotions: EmotionVector,
    pub mood: MoodState,
    pub default_mood: PadVector,
    /// Events since the last mood update, as (PAD point, effective intensity).
    pub pending: Vec<(PadVector, f64)>,
    /// When false the mood and personality layers are inert.
    pub layered: bool,
}

impl AffectState {
    pub fn new(profile: &PersonalityProfile, layered: bool) -> Self {
        let default_mood = map_personality_to_pad(profile);
        AffectState {
            emotions: EmotionVector::neutral(),
            mood: MoodState::at(if layered { default_mood } else { PadVector::ORIGIN }),
            default_mood: if layered { default_mood } else { PadVector::ORIGIN },
            pending: Vec::new(),
            layered,
        }
    }

    /// Applies an event and queues it for mood accumulation. Returns the
    /// effective intensity.
    pub fn feel(&mut self, profile: &PersonalityProfile, event: &EmotionEvent, params: &AffectParams) -> f64 {
        let (i, next) = if self.layered {
            let i = effective_intensity(&self.mood, profile, event, params);
            (i, apply_event(&self.emotions, &self.mood, profile, event, params))
        } else {
            let mut next = self.emotions;
            let i = event.base_intensity;
            next.set(event.kind, next.get(event.kind).max(i));
            (i, next)
        };
        self.emotions = next;
        if self.layered && i > 0.0 {
            self.pending.push((emotion_basis(event.kind), i));
        }
        i
    }

    /// Raises one emotion by `delta` relative to its current level.
    pub fn nudge(&mut self, profile: &PersonalityProfile, kind: Emotion, delta: f64, tick: u64, params: &AffectParams) -> f64 {
        let event = EmotionEvent::new(kind, self.emotions.get(kind) + delta, tick);
        self.feel(profile, &event, params)
    }

    /// Folds queued events into the mood. Returns the center used, if any.
    pub fn accumulate(&mut self, params: &AffectParams) -> Option<EmotionCenter> {
        if self.pending.is_empty() {
            return None;
        }
        let center = virtual_emotion_center(&self.pending).ok();
        self.pending.clear();
        if let Some(c) = center {
            self.mood = update_mood(&self.mood, c.position, params);
        }
        center
    }

    pub fn decay(&mut self, dt: f64, params: &AffectParams) {
        let (e, m) = decay(&self.emotions, &self.mood, self.default_mood, dt, params);
        self.emotions = e;
        if self.layered {
            self.mood = m;
        }
    }

    /// Short prose description used in prompts.
    pub fn describe(&self) -> String {
        let (neg, level) = self.emotions.max_negative();
        let mut s = format!(
            "happiness {:.2}, strongest negative emotion {} {:.2}",
            self.emotions.happiness, neg, level
        );
        if self.layered {
            s.push_str(&format!(
                "; overall mood {} (intensity {:.2})",
                self.mood.octant, self.mood.intensity
            ));
        }
        s
    }
}
