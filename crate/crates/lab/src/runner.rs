//! Runs every repetition of a protocol in parallel and assembles the table.

use cogtown_core::backend::Gateway;
use rayon::prelude::*;

use crate::experiments::{run_repetition, RepOutcome};
use crate::protocol::ExperimentProtocol;
use crate::references::reference_rows;
use crate::results::{aggregate, compare, summarize, ResultRow, ResultTable, Sheet};
use crate::templates::lab_gateway;
use crate::LabError;

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub protocol: ExperimentProtocol,
    pub table: ResultTable,
    /// In repetition order.
    pub repetitions: Vec<RepOutcome>,
}

impl ExperimentRun {
    pub fn sheets(&self) -> Vec<Sheet> {
        self.repetitions.iter().map(|r| r.sheet.clone()).collect()
    }

    /// Measured rows of each repetition.
    pub fn per_repetition(&self) -> Vec<(usize, Vec<ResultRow>)> {
        self.repetitions
            .iter()
            .map(|r| (r.repetition, summarize(&r.sheet)))
            .collect()
    }
}

/// Validates `protocol` and runs its repetitions on at most `jobs` threads
/// (all cores when `None`). Results do not depend on `jobs`.
pub fn run_experiment(
    protocol: &ExperimentProtocol,
    gw: &Gateway,
    jobs: Option<usize>,
) -> Result<ExperimentRun, LabError> {
    protocol.validate()?;
    if jobs == Some(0) {
        return Err(LabError::Config("--jobs must be at least 1".into()));
    }
    let gw = lab_gateway(gw);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let reps: Vec<RepOutcome> = pool.install(|| {
        (0..protocol.repetitions)
            .into_par_iter()
            .map(|rep| run_repetition(protocol, &gw, rep))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let sheets: Vec<Sheet> = reps.iter().map(|r| r.sheet.clone()).collect();
    let mut rows = aggregate(&sheets);
    rows.extend(reference_rows(protocol.name, protocol.variant));
    let table = ResultTable {
        experiment: protocol.name,
        variant: protocol.variant,
        ablation: protocol.ablation,
        engine: gw.engine_name().to_string(),
        repetitions: protocol.repetitions,
        seed: protocol.seed,
        rows,
        significance: compare(&sheets, &protocol.comparisons),
        flags: reps.iter().flat_map(|r| r.flags.iter().cloned()).collect(),
        invalid_trials: reps.iter().map(|r| r.invalid).sum(),
    };
    table.check().map_err(LabError::Table)?;
    Ok(ExperimentRun {
        protocol: protocol.clone(),
        table,
        repetitions: reps,
    })
}
