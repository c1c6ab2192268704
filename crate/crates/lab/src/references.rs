//! Published human and agent results, printed next to measured rows.

use crate::protocol::{ExperimentKind, Variant};
use crate::results::{ResultRow, Unit};

const MODELS: [&str; 6] = ["Human", "PSYA-Based", "PSYA-Affection", "PSYA-Sim", "PSYA-Self", "PSYA-Full"];

fn rows(source: &str, unit: Unit, cells: &[(&str, &str)], values: &[f64]) -> Vec<ResultRow> {
    cells
        .iter()
        .zip(values)
        .map(|((cond, metric), v)| ResultRow {
            source: source.to_string(),
            condition: cond.to_string(),
            metric: metric.to_string(),
            unit,
            value: Some(*v),
            n: None,
        })
        .collect()
}

fn pct(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x / 100.0).collect()
}

const HELPLESSNESS_CELLS: [(&str, &str); 10] = [
    ("E", "failure"),
    ("NE", "failure"),
    ("NP", "failure"),
    ("E", "avoidance"),
    ("NE", "avoidance"),
    ("NP", "avoidance"),
    ("NE internal", "avoidance"),
    ("NE external", "avoidance"),
    ("NE skill", "avoidance"),
    ("NE chance", "avoidance"),
];

const HELPLESSNESS: [[f64; 10]; 6] = [
    [50.0, 13.0, 11.0, 30.0, 8.0, 8.0, 34.0, 18.0, 34.0, 18.0],
    [5.0, 8.0, 5.0, 0.0, 0.0, 0.0, 83.0, 78.0, 72.0, 58.0],
    [55.0, 7.0, 4.0, 25.0, 0.0, 0.0, 39.0, 16.0, 44.0, 22.0],
    [11.0, 4.0, 14.0, 0.0, 0.0, 0.0, 86.0, 80.0, 89.0, 69.0],
    [61.0, 5.0, 7.0, 20.0, 0.0, 0.0, 36.0, 14.0, 22.0, 8.0],
    [53.0, 11.0, 7.0, 22.0, 0.0, 0.0, 40.0, 17.0, 38.0, 14.0],
];

const DISSONANCE_CONDITIONS: [&str; 3] = ["Control", "One Dollar", "Twenty Dollars"];

/// Base runs, per model and condition: Q1..Q4. The PSYA-Based control row
/// is reproduced as published even though Q2 and Q3 fall outside 0..10.
const DISSONANCE_BASE: [(&str, [[f64; 4]; 3]); 5] = [
    ("Human", [[-0.45, 3.08, 5.6, -0.62], [1.35, 2.8, 6.45, 1.2], [-0.05, 3.15, 5.18, -0.25]]),
    ("PSYA-Based", [[-4.3, -3.7, -3.8, -3.6], [-3.7, 1.9, 1.9, -3.9], [-3.8, 2.2, 2.4, -3.5]]),
    ("PSYA-Affection", [[-3.6, 2.4, 3.2, -4.1], [-3.7, 2.6, 2.9, -3.8], [-4.0, 1.7, 2.8, -3.7]]),
    ("PSYA-Sim", [[-4.2, 2.4, 3.1, -3.7], [-4.1, 2.5, 3.0, -3.2], [-3.7, 1.8, 2.0, -3.4]]),
    ("PSYA-Self", [[-3.9, 2.2, 2.8, -4.0], [-3.6, 1.8, 2.3, -3.8], [-4.1, 2.1, 2.4, -3.8]]),
];

/// Runs with the value-system sentence.
const DISSONANCE_EXTENDED: [(&str, [[f64; 4]; 3]); 6] = [
    ("Human", [[-0.45, 3.08, 5.6, -0.62], [1.35, 2.8, 6.45, 1.2], [-0.05, 3.15, 5.18, -0.25]]),
    ("PSYA-Based", [[-4.3, 1.3, 2.0, -3.6], [-3.7, 1.9, 1.9, -3.9], [-3.8, 2.2, 2.4, -3.5]]),
    ("PSYA-Affection", [[-3.6, 2.4, 3.2, -4.1], [-3.7, 2.6, 2.9, -3.8], [-4.0, 1.7, 2.8, -3.7]]),
    ("PSYA-Sim", [[-4.2, 2.4, 3.1, -3.7], [-4.1, 2.5, 3.0, -3.2], [-3.7, 1.8, 2.0, -3.4]]),
    ("PSYA-Self", [[-3.9, 2.2, 2.8, -4.0], [-0.6, 5.2, 6.2, 0.5], [-3.0, 3.3, 3.6, -3.0]]),
    ("PSYA-Full", [[-3.8, 2.4, 3.2, -3.6], [-0.4, 5.0, 6.7, 0.0], [-2.4, 3.2, 4.3, -3.2]]),
];

const FITD_CELLS: [(&str, &str); 4] = [
    ("Performance", "compliance"),
    ("Agree-Only", "compliance"),
    ("Familiarization", "compliance"),
    ("One-Contact", "compliance"),
];

const FITD: [[f64; 4]; 6] = [
    [52.8, 33.3, 27.8, 22.2],
    [8.3, 5.6, 5.6, 2.8],
    [5.6, 5.6, 2.8, 2.8],
    [27.8, 25.0, 19.4, 5.6],
    [33.3, 33.3, 13.9, 8.8],
    [55.6, 41.7, 16.7, 5.6],
];

const DIFFUSION_CELLS: [(&str, &str); 3] = [("2", "helped"), ("3", "helped"), ("6", "helped")];

const DIFFUSION: [[f64; 3]; 6] = [
    [85.0, 62.0, 31.0],
    [100.0, 96.0, 100.0],
    [92.0, 88.0, 88.0],
    [100.0, 62.0, 38.0],
    [92.0, 85.0, 77.0],
    [92.0, 69.0, 31.0],
];

fn dissonance(table: &[(&str, [[f64; 4]; 3])]) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for (model, conds) in table {
        for (cond, qs) in DISSONANCE_CONDITIONS.iter().zip(conds) {
            for (i, q) in qs.iter().enumerate() {
                out.extend(rows(model, Unit::Score, &[(cond, &format!("Q{}", i + 1))], &[*q]));
            }
        }
    }
    out
}

/// Published rows for an experiment and variant.
pub fn reference_rows(kind: ExperimentKind, variant: Variant) -> Vec<ResultRow> {
    use ExperimentKind::*;
    match (kind, variant) {
        (Helplessness, Variant::Base) => MODELS
            .iter()
            .zip(HELPLESSNESS)
            .flat_map(|(m, v)| rows(m, Unit::Proportion, &HELPLESSNESS_CELLS, &pct(&v)))
            .collect(),
        (Helplessness, Variant::Extended) => {
            rows("PSYA-Full", Unit::Proportion, &[("uncontrollable", "failure")], &[0.606])
        }
        (Dissonance, Variant::Base) => dissonance(&DISSONANCE_BASE),
        (Dissonance, Variant::Extended) => dissonance(&DISSONANCE_EXTENDED),
        (Fitd, Variant::Base) => MODELS
            .iter()
            .zip(FITD)
            .flat_map(|(m, v)| rows(m, Unit::Proportion, &FITD_CELLS, &pct(&v)))
            .collect(),
        (Fitd, Variant::Extended) => rows("PSYA-Full", Unit::Proportion, &[("refusers", "accepted_small")], &[17.0 / 29.0]),
        (Diffusion, Variant::Base) => MODELS
            .iter()
            .zip(DIFFUSION)
            .flat_map(|(m, v)| rows(m, Unit::Proportion, &DIFFUSION_CELLS, &pct(&v)))
            .collect(),
        (Diffusion, Variant::Extended) => rows(
            "PSYA-Full",
            Unit::Proportion,
            &[
                ("leader", "recognized_role"),
                ("leader", "delegated"),
                ("leader", "commanded_and_acted"),
                ("member", "immediate"),
                ("member", "only_followed"),
                ("member", "complied"),
            ],
            &[0.923, 0.667, 0.333, 0.077, 0.231, 0.692],
        ),
        (Ostracism, Variant::Base) => vec![],
        (Ostracism, Variant::Extended) => rows(
            "PSYA-Full",
            Unit::Proportion,
            &[("stage 2", "to_ostracizers"), ("stage 3", "to_ostracizers")],
            &[0.1, 0.8],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_anchors() {
        let h = reference_rows(ExperimentKind::Helplessness, Variant::Base);
        let get = |src: &str, c: &str, m: &str| {
            h.iter()
                .find(|r| r.source == src && r.condition == c && r.metric == m)
                .and_then(|r| r.value)
                .unwrap()
        };
        assert!((get("Human", "E", "failure") - 0.50).abs() < 1e-12);
        assert!((get("Human", "NE", "failure") - 0.13).abs() < 1e-12);
        assert!((get("Human", "NP", "failure") - 0.11).abs() < 1e-12);

        let f = reference_rows(ExperimentKind::Fitd, Variant::Base);
        let full: Vec<f64> = f.iter().filter(|r| r.source == "PSYA-Full").map(|r| r.value.unwrap()).collect();
        for (a, b) in full.iter().zip([0.556, 0.417, 0.167, 0.056]) {
            assert!((a - b).abs() < 1e-12);
        }

        let d = reference_rows(ExperimentKind::Dissonance, Variant::Extended);
        let q1: Vec<f64> = d
            .iter()
            .filter(|r| r.source == "Human" && r.metric == "Q1")
            .map(|r| r.value.unwrap())
            .collect();
        assert_eq!(q1, vec![-0.45, 1.35, -0.05]);

        let s = reference_rows(ExperimentKind::Diffusion, Variant::Base);
        let human: Vec<f64> = s.iter().filter(|r| r.source == "Human").map(|r| r.value.unwrap()).collect();
        for (a, b) in human.iter().zip([0.85, 0.62, 0.31]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
