use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{auc, MetricSummary};
use crate::envs::TaskId;
use crate::Result;

/// One evaluation point of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLogRow {
    pub run_id: String,
    pub task: TaskId,
    pub algorithm: String,
    pub seed: u64,
    pub env_step: u64,
    pub eval_return_iqm: f64,
    pub eval_return_ci_lo: f64,
    pub eval_return_ci_hi: f64,
    pub wallclock_s: f64,
}

/// Evaluation history of one run, in step order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<RunLogRow>,
}

impl RunLog {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn curve(&self) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.env_step, r.eval_return_iqm))
            .collect()
    }

    pub fn last(&self) -> Option<&RunLogRow> {
        self.rows.last()
    }

    /// Equality of everything except wall-clock time.
    pub fn same_results(&self, other: &RunLog) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                RunLogRow {
                    wallclock_s: 0.0,
                    ..a.clone()
                } == RunLogRow {
                    wallclock_s: 0.0,
                    ..b.clone()
                }
            })
    }

    pub fn write_csv_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wr.write_record([
                "run_id",
                "task",
                "algorithm",
                "seed",
                "env_step",
                "eval_return_iqm",
                "eval_return_ci_lo",
                "eval_return_ci_hi",
                "wallclock_s",
            ])?;
        }
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn read_csv_from<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let rows = rd
            .deserialize()
            .collect::<std::result::Result<Vec<RunLogRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::read_csv_from(std::fs::File::open(path)?)
    }
}

/// Roll-up of several seeds of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSetSummary {
    pub task: TaskId,
    pub algorithm: String,
    pub run_ids: Vec<String>,
    /// Final evaluation IQM of each run.
    pub final_returns: Vec<f64>,
    /// Across-run IQM of the final evaluations, runs as strata.
    pub final_summary: MetricSummary,
    /// Mean evaluation return over each run's curve.
    pub auc: Vec<f64>,
    pub mean_auc: f64,
}

impl RunSetSummary {
    /// Summarize non-empty logs sharing one task and algorithm.
    pub fn from_logs(logs: &[RunLog], resamples: usize, seed: u64) -> Result<Self> {
        let logs: Vec<&RunLog> = logs.iter().filter(|l| !l.is_empty()).collect();
        let first = logs
            .first()
            .and_then(|l| l.last())
            .ok_or_else(|| crate::Error::contract("no evaluation rows to summarize"))?;
        let final_returns: Vec<f64> = logs
            .iter()
            .map(|l| l.last().expect("non-empty").eval_return_iqm)
            .collect();
        let strata: Vec<Vec<f64>> = final_returns.iter().map(|&r| vec![r]).collect();
        let auc = logs
            .iter()
            .map(|l| auc(&l.curve()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            task: first.task,
            algorithm: first.algorithm.clone(),
            run_ids: logs.iter().map(|l| l.rows[0].run_id.clone()).collect(),
            final_summary: MetricSummary::from_runs(&strata, resamples, seed)?,
            mean_auc: auc.iter().sum::<f64>() / auc.len() as f64,
            final_returns,
            auc,
        })
    }
}
