use regex::Regex;
use serde::{Deserialize, Serialize};

use super::format::schema_example;
use super::{Backend, BackendError, BackendRequest, ExpectedFormat};

/// One ordered rule. `pattern` is a regular expression matched against the
/// rendered prompt; `template`, when set, restricts the rule to one template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default)]
    pub template: Option<String>,
    pub pattern: String,
    pub response: String,
}

impl ScriptRule {
    pub fn new(template: Option<&str>, pattern: &str, response: &str) -> Self {
        ScriptRule {
            template: template.map(str::to_string),
            pattern: pattern.to_string(),
            response: response.to_string(),
        }
    }
}

/// Rule-based engine. The first matching rule answers; otherwise a default
/// derived from the expected format is returned (first option for choices,
/// 0.5 for every score, the schema example for JSON).
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    rules: Vec<(ScriptRule, Regex)>,
    default_text: String,
}

pub const DEFAULT_FREETEXT: &str = "Okay.";

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Result<Self, BackendError> {
        let compiled = rules
            .into_iter()
            .map(|r| {
                Regex::new(&r.pattern)
                    .map(|re| (r.clone(), re))
                    .map_err(|e| BackendError::Config(format!("bad rule pattern `{}`: {e}", r.pattern)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScriptedBackend {
            rules: compiled,
            default_text: DEFAULT_FREETEXT.to_string(),
        })
    }

    /// No rules: every answer is the format default.
    pub fn defaults_only() -> Self {
        Self::new(Vec::new()).expect("no rules to compile")
    }

    /// Rules giving the daily-life scenario short two-turn conversations.
    pub fn daily_life() -> Self {
        Self::new(Self::daily_life_rules()).expect("built-in rules compile")
    }

    pub fn daily_life_rules() -> Vec<ScriptRule> {
        vec![
            ScriptRule::new(
                Some("conversation_turn"),
                r"Turn 1\b",
                "Hi! Nice to run into you. How has your day been?",
            ),
            ScriptRule::new(
                Some("conversation_turn"),
                r"Turn 2\b",
                "Pretty good, thanks for asking. Talk soon! [END]",
            ),
            ScriptRule::new(
                Some("mind_wandering"),
                r"(?i)book",
                "That book reminds me of animals that need a home; maybe I could visit the animal shelter.",
            ),
            ScriptRule::new(
                Some("mind_wandering"),
                r".",
                "I wonder what this town will look like in a year.",
            ),
            ScriptRule::new(Some("decide_need"), r"your fullness is low", "eat a sandwich at the restaurant"),
            ScriptRule::new(Some("decide_need"), r"your fun is low", "have some fun with a board game at the park"),
            ScriptRule::new(Some("decide_need"), r"your social is low", "chat with a neighbour at the central square"),
            ScriptRule::new(Some("decide_need"), r"your energy is low", "take a short rest at home"),
            ScriptRule::new(Some("decide_need"), r"your health is low", "see the doctor at the clinic"),
            ScriptRule::new(Some("decide_emotion"), r".", "take a walk in the park to clear my head"),
        ]
    }

    pub fn rules(&self) -> impl Iterator<Item = &ScriptRule> {
        self.rules.iter().map(|(r, _)| r)
    }

    pub fn push_rule(&mut self, rule: ScriptRule) -> Result<(), BackendError> {
        let re = Regex::new(&rule.pattern)
            .map_err(|e| BackendError::Config(format!("bad rule pattern `{}`: {e}", rule.pattern)))?;
        self.rules.push((rule, re));
        Ok(())
    }

    pub fn default_for(&self, format: &ExpectedFormat) -> String {
        match format {
            ExpectedFormat::Freetext => self.default_text.clone(),
            ExpectedFormat::Choice(opts) => opts.first().cloned().unwrap_or_default(),
            ExpectedFormat::Scores(n) => vec!["0.5"; *n].join(", "),
            ExpectedFormat::JsonSchema(name) => schema_example(name)
                .map(|v| serde_json::to_string(&v).expect("json"))
                .unwrap_or_else(|| "{}".into()),
        }
    }
}

impl Backend for ScriptedBackend {
    fn engine_name(&self) -> &'static str {
        "scripted"
    }

    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        let hit = self.rules.iter().find(|(rule, re)| {
            rule.template
                .as_deref()
                .map_or(true, |t| t == req.template_name)
                && re.is_match(&req.rendered_prompt)
        });
        Ok(match hit {
            Some((rule, _)) => rule.response.clone(),
            None => self.default_for(&req.constraints.expected_format),
        })
    }
}
