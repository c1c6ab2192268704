//! Format instructions appended to prompts, and parsing of replies.

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, ExpectedFormat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parsed {
    Choice(String),
    Scores(Vec<f64>),
    Json(Value),
}

/// Example instance per named schema. The example is what the prompt
    /// shows, what the scripted engine returns by default, and the shape
    /// replies are validated against.
fn schema_table(name: &str) -> Option<Value> {
        let v = match name {
            "day_plan" => json!({"entries": [
                {"start": "06:00", "end": "07:00", "activity": "wake up and have breakfast", "location": "home", "importance": 0.3},
                {"start": "07:00", "end": "07:30", "activity": "take a walk", "location": "park", "importance": 0.2},
                {"start": "07:30", "end": "12:00", "activity": "work", "location": "workplace", "importance": 0.8},
                {"start": "12:00", "end": "13:00", "activity": "eat lunch", "location": "restaurant", "importance": 0.5},
                {"start": "13:00", "end": "17:00", "activity": "work", "location": "workplace", "importance": 0.8},
                {"start": "17:00", "end": "18:00", "activity": "have a coffee and chat", "location": "cafe", "importance": 0.3},
                {"start": "18:00", "end": "19:00", "activity": "eat dinner", "location": "home", "importance": 0.5},
                {"start": "19:00", "end": "21:00", "activity": "read a book", "location": "library", "importance": 0.3},
                {"start": "21:00", "end": "22:00", "activity": "stroll around the central square", "location": "central square", "importance": 0.2},
                {"start": "22:00", "end": "24:00", "activity": "rest", "location": "home", "importance": 0.2}
            ]}),
            "reflection" => json!({"insight": "I have been keeping a steady routine and it suits me.", "importance": 0.5}),
            "memory_summary" => json!({"insight": "The day went mostly as planned."}),
            "conversation_summary" => json!({
                "summary": "They had a friendly chat about their day.",
                "delta_initiator": 0.05,
                "delta_partner": 0.05,
                "impression_initiator": "seems friendly",
                "impression_partner": "seems friendly",
                "commitments": []
            }),
            "emotion_rating" => json!({"emotion": "happiness", "intensity": 0.55}),
            "scenario" => json!({"scenario": "I picture it going reasonably well and feel prepared.", "emotion": "happiness", "intensity": 0.5}),
            "self_judgement" => json!({"self_view": "I am a dependable person who cares about others.", "impression": "They seem considerate."}),
            "action_sequence" => json!({"actions": [
                "call for help", "notify the experimenter", "continue the discussion",
                "wait and listen", "leave the room", "do nothing"
            ]}),
            _ => return None,
        };
        Some(v)
}

/// Example instance for a named schema.
pub fn schema_example(name: &str) -> Option<Value> {
    schema_table(name)
}

/// Text appended to a rendered template.
pub fn instruction(format: &ExpectedFormat) -> String {
    match format {
        ExpectedFormat::Freetext => String::new(),
        ExpectedFormat::Choice(opts) => format!(
            "\n\nAnswer with exactly one of these options: {}",
            opts.join(" | ")
        ),
        ExpectedFormat::Scores(n) => {
            format!("\n\nAnswer with {n} number(s), separated by commas.")
        }
        ExpectedFormat::JsonSchema(name) => {
            let example = schema_table(name).unwrap_or_else(|| json!({}));
            format!(
                "\n\nAnswer with one JSON object shaped like this example:\n{}",
                serde_json::to_string(&example).expect("json")
            )
        }
    }
}

pub(crate) fn known_schema(name: &str) -> bool {
    schema_table(name).is_some()
}

fn format_err(format: &ExpectedFormat, raw: &str) -> BackendError {
    BackendError::Format {
        expected: format.describe(),
        raw: raw.to_string(),
    }
}

/// Parses raw text against the expected format.
pub fn parse_response(text: &str, format: &ExpectedFormat) -> Result<Option<Parsed>, BackendError> {
    match format {
        ExpectedFormat::Freetext => Ok(None),
        ExpectedFormat::Choice(opts) => parse_choice(text, opts)
            .map(|c| Some(Parsed::Choice(c)))
            .ok_or_else(|| format_err(format, text)),
        ExpectedFormat::Scores(n) => {
            let nums = parse_numbers(text);
            if nums.len() < *n {
                Err(format_err(format, text))
            } else {
                Ok(Some(Parsed::Scores(nums[..*n].to_vec())))
            }
        }
        ExpectedFormat::JsonSchema(name) => {
            let v = extract_json(text).ok_or_else(|| format_err(format, text))?;
            let example = schema_table(name).ok_or_else(|| {
                BackendError::Template(format!("unknown schema `{name}`"))
            })?;
            if conforms(&v, &example) {
                Ok(Some(Parsed::Json(v)))
            } else {
                Err(format_err(format, text))
            }
        }
    }
}

fn normalize(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c == '!' || c == '`')
        .trim()
        .to_lowercase()
}

/// Exact (case-insensitive) match first, then the option whose whole-word
/// occurrence starts earliest; longer options win ties.
pub fn parse_choice(text: &str, options: &[String]) -> Option<String> {
    let norm = normalize(text);
    if let Some(o) = options.iter().find(|o| normalize(o) == norm) {
        return Some(o.clone());
    }
    let mut best: Option<(usize, usize, &String)> = None;
    for o in options {
        let pat = format!(r"(?i)\b{}\b", regex::escape(o.trim()));
        let re = Regex::new(&pat).ok()?;
        if let Some(m) = re.find(text) {
            let key = (m.start(), usize::MAX - o.len());
            if best.map_or(true, |(s, l, _)| key < (s, l)) {
                best = Some((key.0, key.1, o));
            }
        }
    }
    best.map(|(_, _, o)| o.clone())
}

pub fn parse_numbers(text: &str) -> Vec<f64> {
    let re = Regex::new(r"[-+]?\d+(?:\.\d+)?").expect("regex");
    re.find_iter(text)
        .filter_map(|m| m.as_str().parse::<f64>().ok())
        .collect()
}

/// First `{` to last `}`, so fenced or chatty replies still parse.
pub fn extract_json(text: &str) -> Option<Value> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    if end < start {
        return None;
    }
    serde_json::from_str(&text[start..=end]).ok()
}

fn same_kind(v: &Value, example: &Value) -> bool {
    matches!(
        (v, example),
        (_, Value::Null)
            | (Value::Bool(_), Value::Bool(_))
            | (Value::Number(_), Value::Number(_))
            | (Value::String(_), Value::String(_))
            | (Value::Array(_), Value::Array(_))
            | (Value::Object(_), Value::Object(_))
    )
}

/// Structural check: every key of the example is present with the same JSON
/// kind; array elements are checked against the example's first element.
pub fn conforms(v: &Value, example: &Value) -> bool {
    if !same_kind(v, example) {
        return false;
    }
    match (v, example) {
        (Value::Object(o), Value::Object(e)) => e
            .iter()
            .all(|(k, ev)| o.get(k).is_some_and(|ov| conforms(ov, ev))),
        (Value::Array(items), Value::Array(e)) => match e.first() {
            Some(first) => items.iter().all(|it| conforms(it, first)),
            None => true,
        },
        _ => true,
    }
}
