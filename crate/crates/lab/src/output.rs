//! Files written for a run and the `report` rendering of a run directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cogtown_core::sim::log::{read_summary_csv, SummaryRow};

use crate::experiments::TrialOutcome;
use crate::protocol::ExperimentKind;
use crate::results::{ResultRow, ResultTable};
use crate::runner::ExperimentRun;
use crate::LabError;

pub const TRIALS: &str = "trials.jsonl";
pub const RESULTS: &str = "results.csv";
pub const TABLE: &str = "table.csv";
pub const SIGNIFICANCE: &str = "significance.csv";
pub const TABLE_JSON: &str = "table.json";
pub const PER_REPETITION: &str = "per_repetition.csv";

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// How the wide table is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One row per source; one column per (condition, metric).
    BySource,
    /// One row per (source, condition); one column per metric.
    BySourceCondition,
    /// One row per condition; one column per (source, metric).
    ByCondition,
}

pub fn layout(kind: ExperimentKind) -> Layout {
    match kind {
        ExperimentKind::Helplessness | ExperimentKind::Fitd => Layout::BySource,
        ExperimentKind::Dissonance | ExperimentKind::Ostracism => Layout::BySourceCondition,
        ExperimentKind::Diffusion => Layout::ByCondition,
    }
}

fn push_unique(v: &mut Vec<String>, s: String) {
    if !v.contains(&s) {
        v.push(s);
    }
}

/// Wide table: header plus rows, values formatted to four decimals.
pub fn wide(table: &ResultTable) -> Vec<Vec<String>> {
    let lay = layout(table.experiment);
    let key = |r: &ResultRow| -> (String, String) {
        match lay {
            Layout::BySource => (r.source.clone(), format!("{} {}", r.condition, r.metric)),
            Layout::BySourceCondition => (format!("{}\u{1f}{}", r.source, r.condition), r.metric.clone()),
            Layout::ByCondition => (r.condition.clone(), format!("{} {}", r.source, r.metric)),
        }
    };
    let (mut rows, mut cols) = (Vec::new(), Vec::new());
    let mut cells = BTreeMap::new();
    for r in &table.rows {
        let (row, col) = key(r);
        push_unique(&mut rows, row.clone());
        push_unique(&mut cols, col.clone());
        cells.insert((row, col), r.value);
    }
    let mut header: Vec<String> = match lay {
        Layout::BySource => vec!["source".into()],
        Layout::BySourceCondition => vec!["source".into(), "condition".into()],
        Layout::ByCondition => vec!["condition".into()],
    };
    header.extend(cols.iter().cloned());
    let mut out = vec![header];
    for row in &rows {
        let mut line: Vec<String> = row.split('\u{1f}').map(str::to_string).collect();
        for col in &cols {
            let v = cells.get(&(row.clone(), col.clone())).copied().flatten();
            line.push(v.map(|x| format!("{x:.4}")).unwrap_or_default());
        }
        out.push(line);
    }
    out
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_long(path: &Path, rows: &[(Option<usize>, &ResultRow)]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    let with_rep = rows.first().is_some_and(|(r, _)| r.is_some());
    let mut header = vec!["source", "condition", "metric", "unit", "value", "n"];
    if with_rep {
        header.insert(0, "repetition");
    }
    w.write_record(&header)?;
    for (rep, r) in rows {
        let unit = serde_json::to_value(r.unit)?.as_str().unwrap_or_default().to_string();
        let mut rec = vec![
            r.source.clone(),
            r.condition.clone(),
            r.metric.clone(),
            unit,
            fmt_value(r.value),
            fmt_value(r.n),
        ];
        if let Some(rep) = rep {
            rec.insert(0, rep.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_significance(path: &Path, table: &ResultTable) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["comparison", "metric", "test", "statistic", "p", "note"])?;
    for s in &table.significance {
        w.write_record([
            s.comparison.clone(),
            s.metric.clone(),
            s.test.clone(),
            fmt_value(s.statistic),
            fmt_value(s.p),
            s.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output of a run under `dir` and returns the paths.
pub fn write_run(run: &ExperimentRun, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();

    let p = dir.join(TRIALS);
    let mut f = std::io::BufWriter::new(fs::File::create(&p)?);
    for rep in &run.repetitions {
        for t in &rep.trials {
            serde_json::to_writer(&mut f, t)?;
            f.write_all(b"\n")?;
        }
    }
    f.flush()?;
    paths.push(p);

    let p = dir.join(RESULTS);
    let rows: Vec<(Option<usize>, &ResultRow)> = run.table.rows.iter().map(|r| (None, r)).collect();
    write_long(&p, &rows)?;
    paths.push(p);

    let p = dir.join(PER_REPETITION);
    let per = run.per_repetition();
    let rows: Vec<(Option<usize>, &ResultRow)> = per
        .iter()
        .flat_map(|(rep, rows)| rows.iter().map(move |r| (Some(*rep), r)))
        .collect();
    write_long(&p, &rows)?;
    paths.push(p);

    let p = dir.join(TABLE);
    write_csv(&p, &wide(&run.table))?;
    paths.push(p);

    let p = dir.join(SIGNIFICANCE);
    write_significance(&p, &run.table)?;
    paths.push(p);

    let p = dir.join(TABLE_JSON);
    fs::write(&p, serde_json::to_string_pretty(&run.table)? + "\n")?;
    paths.push(p);
    Ok(paths)
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialOutcome>, LabError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(LabError::from))
        .collect()
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

const DAT_HEADER: &str = "happiness sadness anger fear disgust surprise mood_p mood_a mood_d";

/// Mean emotions and mood per group at each logged step of a subject.
/// Step `i` is the subject's `i`-th logged trial, averaged over subjects and
/// repetitions.
pub fn affect_series(trials: &[TrialOutcome]) -> BTreeMap<String, Vec<(usize, [f64; 9])>> {
    let mut step: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    let mut sums: BTreeMap<String, BTreeMap<usize, ([f64; 9], usize)>> = BTreeMap::new();
    for t in trials {
        let i = step.entry((t.repetition, t.agent)).or_insert(0);
        let e = sums.entry(t.group.clone()).or_default().entry(*i).or_insert(([0.0; 9], 0));
        for (k, v) in t.affect.emotions.iter().chain(&t.affect.mood).enumerate() {
            e.0[k] += v;
        }
        e.1 += 1;
        *i += 1;
    }
    sums.into_iter()
        .map(|(g, steps)| {
            let series = steps
                .into_iter()
                .map(|(i, (s, n))| (i + 1, s.map(|x| x / n as f64)))
                .collect();
            (g, series)
        })
        .collect()
}

fn write_dat(path: &Path, title: &str, xname: &str, series: &[(usize, [f64; 9])]) -> Result<(), LabError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# {title}")?;
    writeln!(f, "# {xname} {DAT_HEADER}")?;
    for (x, v) in series {
        let cols: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        writeln!(f, "{x} {}", cols.join(" "))?;
    }
    f.flush()?;
    Ok(())
}

fn write_plot_script(path: &Path, files: &[(String, PathBuf)], xname: &str) -> Result<(), LabError> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "set xlabel '{xname}'")?;
    writeln!(f, "set ylabel 'intensity'")?;
    writeln!(f, "set key outside")?;
    for (col, name) in [(2, "happiness"), (3, "sadness"), (8, "mood_p")] {
        let parts: Vec<String> = files
            .iter()
            .map(|(label, p)| {
                let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
                format!("'{file}' using 1:{col} with lines title '{label} {name}'")
            })
            .collect();
        writeln!(f, "plot {}", parts.join(", "))?;
        writeln!(f, "pause -1")?;
    }
    Ok(())
}

/// Renders `dir` into `dir/report`. Experiment directories get the wide
/// table, the comparisons and per-group affect series; simulation
/// directories get per-agent affect series. Returns the written paths.
pub fn report(dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    let out = dir.join("report");
    let table_json = dir.join(TABLE_JSON);
    let summary = dir.join("summary.csv");
    let mut paths = Vec::new();
    let mut dats = Vec::new();
    let xname;
    if table_json.exists() {
        fs::create_dir_all(&out)?;
        let table: ResultTable = serde_json::from_str(&fs::read_to_string(&table_json)?)?;
        let p = out.join(TABLE);
        write_csv(&p, &wide(&table))?;
        paths.push(p);
        let p = out.join(SIGNIFICANCE);
        write_significance(&p, &table)?;
        paths.push(p);
        xname = "step";
        let trials_path = dir.join(TRIALS);
        if trials_path.exists() {
            for (group, series) in affect_series(&read_trials(&trials_path)?) {
                let p = out.join(format!("affect_{}.dat", file_stem(&group)));
                write_dat(&p, &format!("{} {} group {group}", table.experiment, table.variant), xname, &series)?;
                dats.push((group, p));
            }
        }
    } else if summary.exists() {
        fs::create_dir_all(&out)?;
        xname = "tick";
        let rows = read_summary_csv(&summary)?;
        let mut by_agent: BTreeMap<(u32, String), Vec<&SummaryRow>> = BTreeMap::new();
        for r in &rows {
            by_agent.entry((r.agent, r.name.clone())).or_default().push(r);
        }
        for ((id, name), rs) in by_agent {
            let series: Vec<(usize, [f64; 9])> = rs
                .iter()
                .map(|r| {
                    (
                        r.tick as usize,
                        [
                            r.happiness,
                            r.sadness,
                            r.anger,
                            r.fear,
                            r.disgust,
                            r.surprise,
                            r.mood_p,
                            r.mood_a,
                            r.mood_d,
                        ],
                    )
                })
                .collect();
            let p = out.join(format!("affect_agent_{id}.dat"));
            write_dat(&p, &format!("agent {id} {name}"), xname, &series)?;
            dats.push((name, p));
        }
    } else {
        return Err(LabError::Config(format!(
            "{} holds neither an experiment run ({TABLE_JSON}) nor a simulation (summary.csv)",
            dir.display()
        )));
    }
    paths.extend(dats.iter().map(|(_, p)| p.clone()));
    let p = out.join("plot.gp");
    write_plot_script(&p, &dats, xname)?;
    paths.push(p);
    Ok(paths)
}
