use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use regex::Regex;

use super::BackendError;

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../templates/", $name, ".txt")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin!(
    "day_plan",
    "replan",
    "reflection",
    "memory_summary",
    "decide_need",
    "decide_emotion",
    "surface_judgement",
    "conversation_turn",
    "conversation_summary",
    "emotion_rating",
    "dmn_priority",
    "scenario_simulation",
    "self_judgement",
    "mind_wandering",
);

/// Named prompt templates with `{{var}}` placeholders.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateSet {
    templates: BTreeMap<String, String>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let mut t = TemplateSet::default();
        for (name, body) in BUILTIN {
            t.insert(name, body);
        }
        t
    }

    pub fn insert(&mut self, name: &str, body: &str) {
        self.templates.insert(name.to_string(), body.to_string());
    }

    pub fn extend(&mut self, entries: &[(&str, &str)]) {
        for (n, b) in entries {
            self.insert(n, b);
        }
    }

    /// Every `*.txt` in `dir` replaces (or adds) the template of the same
    /// stem.
    pub fn override_from_dir(&mut self, dir: &Path) -> Result<usize, BackendError> {
        let err = |e: std::io::Error| BackendError::Template(format!("{}: {e}", dir.display()));
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(err)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        entries.sort();
        for p in &entries {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let body = fs::read_to_string(p).map_err(err)?;
            self.insert(name, &body);
        }
        Ok(entries.len())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.templates.get(name).map(String::as_str)
    }

    pub fn render(&self, name: &str, vars: &[(&str, String)]) -> Result<String, BackendError> {
        let body = self
            .get(name)
            .ok_or_else(|| BackendError::Template(format!("unknown template `{name}`")))?;
        let mut out = body.trim_end().to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        let leftover = Regex::new(r"\{\{\s*([A-Za-z0-9_]+)\s*\}\}").expect("regex");
        if let Some(c) = leftover.captures(&out) {
            return Err(BackendError::Template(format!(
                "template `{name}` is missing variable `{}`",
                &c[1]
            )));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_and_reports_missing_vars() {
        let mut t = TemplateSet::default();
        t.insert("g", "Hello {{name}}, it is {{time}}.");
        let ok = t
            .render("g", &[("name", "Ada".into()), ("time", "noon".into())])
            .unwrap();
        assert_eq!(ok, "Hello Ada, it is noon.");
        let err = t.render("g", &[("name", "Ada".into())]).unwrap_err();
        assert!(err.to_string().contains("time"));
        assert!(t.render("nope", &[]).is_err());
    }

    #[test]
    fn builtins_present_and_overridable() {
        let mut t = TemplateSet::builtin();
        assert!(t.get("day_plan").is_some());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("day_plan.txt"), "pinned {{persona}}").unwrap();
        assert_eq!(t.override_from_dir(dir.path()).unwrap(), 1);
        assert_eq!(t.render("day_plan", &[("persona", "P".into())]).unwrap(), "pinned P");
    }
}
