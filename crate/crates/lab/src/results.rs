//! Per-repetition observations, their average over repetitions, and the
//! planned comparisons.

use cogtown_core::cognition::Ablation;
use serde::{Deserialize, Serialize};

use crate::protocol::{ComparisonSpec, ExperimentKind, Variant};
use crate::stats::{compare_means, compare_proportions, Significance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// A share in [0, 1].
    Proportion,
    /// A questionnaire score.
    Score,
    /// A trial index.
    Trials,
    /// A plain count.
    Count,
}

/// Observations for one (condition, metric) within one repetition. Values
/// are per subject in subject order; `None` is a missing observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub condition: String,
    pub metric: String,
    pub unit: Unit,
    /// Trials behind each subject's value (a rate over 18 trials counts as
    /// 18 observations in proportion tests).
    pub trials_per_subject: u64,
    pub values: Vec<Option<f64>>,
}

impl Cell {
    fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    fn mean(&self) -> Option<f64> {
        let n = self.present().count();
        (n > 0).then(|| self.present().sum::<f64>() / n as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub cells: Vec<Cell>,
}

impl Sheet {
    fn cell_mut(&mut self, condition: &str, metric: &str, unit: Unit, tps: u64) -> &mut Cell {
        let i = match self.cells.iter().position(|c| c.condition == condition && c.metric == metric) {
            Some(i) => i,
            None => {
                self.cells.push(Cell {
                    condition: condition.to_string(),
                    metric: metric.to_string(),
                    unit,
                    trials_per_subject: tps,
                    values: Vec::new(),
                });
                self.cells.len() - 1
            }
        };
        &mut self.cells[i]
    }

    pub fn record(&mut self, condition: &str, metric: &str, unit: Unit, value: Option<f64>) {
        self.cell_mut(condition, metric, unit, 1).values.push(value);
    }

    /// A per-subject rate over `trials` trials.
    pub fn record_rate(&mut self, condition: &str, metric: &str, value: Option<f64>, trials: u64) {
        self.cell_mut(condition, metric, Unit::Proportion, trials).values.push(value);
    }

    pub fn flag(&mut self, condition: &str, metric: &str, v: bool) {
        self.record(condition, metric, Unit::Proportion, Some(if v { 1.0 } else { 0.0 }));
    }

    pub fn get(&self, condition: &str, metric: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.condition == condition && c.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// `agents` for measured rows, otherwise the reference population.
    pub source: String,
    pub condition: String,
    pub metric: String,
    pub unit: Unit,
    pub value: Option<f64>,
    /// Subjects with an observation, averaged over repetitions.
    pub n: Option<f64>,
}

pub const AGENTS: &str = "agents";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub experiment: ExperimentKind,
    pub variant: Variant,
    pub ablation: Ablation,
    pub engine: String,
    pub repetitions: usize,
    pub seed: u64,
    pub rows: Vec<ResultRow>,
    pub significance: Vec<Significance>,
    /// Clamped ratings, invalid trials and similar notes.
    pub flags: Vec<String>,
    pub invalid_trials: usize,
}

impl ResultTable {
    pub fn agent_rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.source == AGENTS)
    }

    pub fn row(&self, source: &str, condition: &str, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.source == source && r.condition == condition && r.metric == metric)
    }

    /// Measured value for a condition and metric.
    pub fn value(&self, condition: &str, metric: &str) -> Option<f64> {
        self.row(AGENTS, condition, metric).and_then(|r| r.value)
    }

    /// Proportions within [0, 1] and p-values within [0, 1].
    pub fn check(&self) -> Result<(), String> {
        for r in &self.rows {
            if let (Unit::Proportion, Some(v)) = (r.unit, r.value) {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("{} {} {} = {v} outside [0, 1]", r.source, r.condition, r.metric));
                }
            }
        }
        for s in &self.significance {
            if let Some(p) = s.p {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("{}: p = {p}", s.comparison));
                }
            }
        }
        Ok(())
    }
}

/// Cell keys in first-seen order across sheets.
fn keys(sheets: &[Sheet]) -> Vec<(String, String, Unit)> {
    let mut out: Vec<(String, String, Unit)> = Vec::new();
    for s in sheets {
        for c in &s.cells {
            if !out.iter().any(|(a, b, _)| *a == c.condition && *b == c.metric) {
                out.push((c.condition.clone(), c.metric.clone(), c.unit));
            }
        }
    }
    out
}

/// Rows for one repetition.
pub fn summarize(sheet: &Sheet) -> Vec<ResultRow> {
    sheet
        .cells
        .iter()
        .map(|c| ResultRow {
            source: AGENTS.into(),
            condition: c.condition.clone(),
            metric: c.metric.clone(),
            unit: c.unit,
            value: c.mean(),
            n: Some(c.present().count() as f64),
        })
        .collect()
}

/// Each value is the mean of the per-repetition means, over repetitions
/// that observed the cell at all.
pub fn aggregate(sheets: &[Sheet]) -> Vec<ResultRow> {
    keys(sheets)
        .into_iter()
        .map(|(cond, metric, unit)| {
            let cells: Vec<Option<&Cell>> = sheets.iter().map(|s| s.get(&cond, &metric)).collect();
            let means: Vec<f64> = cells.iter().filter_map(|c| c.and_then(Cell::mean)).collect();
            let value = (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
            let n = cells
                .iter()
                .map(|c| c.map_or(0, |c| c.present().count()) as f64)
                .sum::<f64>()
                / sheets.len().max(1) as f64;
            ResultRow {
                source: AGENTS.into(),
                condition: cond,
                metric,
                unit,
                value,
                n: Some(n),
            }
        })
        .collect()
}

/// Per-subject values averaged over repetitions, by subject position.
fn slot_means(cells: &[&Cell]) -> Vec<f64> {
    let len = cells.iter().map(|c| c.values.len()).max().unwrap_or(0);
    (0..len)
        .filter_map(|i| {
            let v: Vec<f64> = cells.iter().filter_map(|c| c.values.get(i).copied().flatten()).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// (successes, trials) averaged over repetitions and rounded.
fn mean_counts(cells: &[&Cell]) -> (u64, u64) {
    let reps = cells.len().max(1) as f64;
    let succ: f64 = cells
        .iter()
        .map(|c| c.present().sum::<f64>() * c.trials_per_subject as f64)
        .sum::<f64>()
        / reps;
    let n: f64 = cells
        .iter()
        .map(|c| (c.present().count() as u64 * c.trials_per_subject) as f64)
        .sum::<f64>()
        / reps;
    (succ.round() as u64, n.round() as u64)
}

/// Runs the planned comparisons. Proportions are tested on counts averaged
/// over repetitions at the protocol's group size; other metrics with Welch t
/// on per-subject values averaged over repetitions.
pub fn compare(sheets: &[Sheet], specs: &[ComparisonSpec]) -> Vec<Significance> {
    let mut out = Vec::new();
    for spec in specs {
        let label = format!("{} vs {}", spec.a, spec.b);
        let get = |cond: &str| -> Vec<&Cell> { sheets.iter().filter_map(|s| s.get(cond, &spec.metric)).collect() };
        let (a, b) = (get(&spec.a), get(&spec.b));
        if a.is_empty() || b.is_empty() {
            let missing = if a.is_empty() { &spec.a } else { &spec.b };
            out.push(Significance {
                comparison: label,
                metric: spec.metric.clone(),
                test: "none".into(),
                statistic: None,
                p: None,
                note: Some(format!("no observations of `{}` for `{missing}`", spec.metric)),
            });
            continue;
        }
        if a[0].unit == Unit::Proportion {
            out.extend(compare_proportions(&label, &spec.metric, mean_counts(&a), mean_counts(&b)));
        } else {
            out.push(compare_means(&label, &spec.metric, &slot_means(&a), &slot_means(&b)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sheet(vals: &[(&str, &[f64])]) -> Sheet {
        let mut s = Sheet::default();
        for (cond, vs) in vals {
            for v in *vs {
                s.record(cond, "m", Unit::Proportion, Some(*v));
            }
        }
        s
    }

    #[test]
    fn aggregate_is_mean_of_repetition_means() {
        let s1 = sheet(&[("a", &[1.0, 0.0, 0.0, 0.0])]);
        let s2 = sheet(&[("a", &[1.0, 1.0])]);
        let rows = aggregate(&[s1, s2]);
        assert!((rows[0].value.unwrap() - (0.25 + 1.0) / 2.0).abs() < 1e-12);
        assert_eq!(rows[0].n, Some(3.0));
    }

    #[test]
    fn missing_values_are_skipped() {
        let mut s = Sheet::default();
        s.record("a", "q", Unit::Score, Some(2.0));
        s.record("a", "q", Unit::Score, None);
        let rows = summarize(&s);
        assert_eq!(rows[0].value, Some(2.0));
        assert_eq!(rows[0].n, Some(1.0));
    }

    #[test]
    fn proportion_comparison_uses_mean_counts() {
        let s1 = sheet(&[("a", &[1.0; 10]), ("b", &[0.0; 10])]);
        let s2 = s1.clone();
        let sig = compare(
            &[s1, s2],
            &[ComparisonSpec {
                a: "a".into(),
                b: "b".into(),
                metric: "m".into(),
            }],
        );
        let fisher = sig.iter().find(|s| s.test == "fisher").unwrap();
        assert!((fisher.p.unwrap() - 2.0 / 184_756.0).abs() < 1e-12);
    }

    #[test]
    fn missing_condition_is_skipped_with_reason() {
        let s = sheet(&[("a", &[1.0])]);
        let sig = compare(
            &[s],
            &[ComparisonSpec {
                a: "a".into(),
                b: "zz".into(),
                metric: "m".into(),
            }],
        );
        assert!(sig[0].note.as_deref().unwrap().contains("zz"));
    }
}
