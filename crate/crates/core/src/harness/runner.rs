//! Experiment execution, aggregation, and file emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{prepare, ExperimentConfig, LearnerKind, ResolvedSchedule};
use super::powerlaw::{fit_power_law, PowerLawFit};
use super::HarnessError;
use crate::conversion::RunRecord;
use crate::stationarity::{epoch_witness, witness_stationarity, WitnessNorm};

/// Schema identifier of the summary JSON.
pub const SUMMARY_SCHEMA: &str = "o2nc-summary/v1";

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub seed: u64,
    /// Mean over epochs of the per-epoch gradient-average norm.
    pub metric: f64,
    pub initial_f: f64,
    pub final_f: f64,
    pub epoch_spread_l2: f64,
    pub epoch_spread_linf: f64,
    pub oracle_calls: usize,
    pub hint_grad_evals: usize,
    pub diagnostic_grad_evals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub schema: &'static str,
    pub resolved: ResolvedSchedule,
    pub n: usize,
    pub trials: Vec<TrialSummary>,
    pub metric_mean: f64,
    pub metric_stderr: f64,
}

/// Write bytes to `path` atomically: temp file in the same directory, then
/// rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summarize(record: &RunRecord, seed: u64) -> TrialSummary {
    TrialSummary {
        seed,
        metric: record.mean_epoch_metric(),
        initial_f: record.fvals[0],
        final_f: record.fvals[record.rounds()],
        epoch_spread_l2: record.max_epoch_spread_l2(),
        epoch_spread_linf: record.max_epoch_spread_linf(),
        oracle_calls: record.oracle_calls,
        hint_grad_evals: record.hint_grad_evals,
        diagnostic_grad_evals: record.diagnostic_grad_evals,
    }
}

/// Witness-set rows for one record: `k, radius, value, center_0..`.
fn write_witness_csv<W: Write>(
    out: &mut W,
    record: &RunRecord,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    norm_kind: WitnessNorm,
) -> Result<(), HarnessError> {
    let d = record.xs[0].len();
    write!(out, "k,radius,value")?;
    for i in 0..d {
        write!(out, ",center_{i}")?;
    }
    writeln!(out)?;
    for k in 1..=record.epochs() {
        let witness = epoch_witness(record, k, norm_kind).map_err(|e| {
            HarnessError::Invalid(format!("witness construction failed for epoch {k}: {e}"))
        })?;
        let (value, radius) = witness_stationarity(&grad, &witness);
        write!(out, "{k},{radius:.17e},{value:.17e}")?;
        for c in witness.center() {
            write!(out, ",{c:.17e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn write_outputs(
    dir: &Path,
    summary: &ExperimentSummary,
    records: &[(u64, RunRecord)],
    grad: impl Fn(&[f64]) -> Vec<f64>,
    norm_kind: WitnessNorm,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    for (seed, record) in records {
        let mut rounds = Vec::new();
        record.write_rounds_csv(&mut rounds)?;
        write_atomic(&dir.join(format!("trial_{seed}_rounds.csv")), &rounds)?;
        let mut epochs = Vec::new();
        record.write_epochs_csv(&mut epochs)?;
        write_atomic(&dir.join(format!("trial_{seed}_epochs.csv")), &epochs)?;
        let mut witness = Vec::new();
        write_witness_csv(&mut witness, record, &grad, norm_kind)?;
        write_atomic(&dir.join(format!("trial_{seed}_witness.csv")), &witness)?;
    }
    let json = serde_json::to_string_pretty(summary)?;
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    Ok(())
}

/// Run every trial seed of a config (concurrently; each trial is fully
/// determined by its seed), aggregate the metric, and write record CSVs plus
/// a summary JSON when an output directory is configured.
pub fn run_experiment(
    config: &ExperimentConfig,
) -> Result<(ExperimentSummary, Vec<RunRecord>), HarnessError> {
    let prepared = prepare(config)?;
    let results: Vec<(u64, Result<RunRecord, HarnessError>)> = prepared
        .trial_seeds
        .par_iter()
        .map(|seed| (*seed, prepared.run_trial(*seed)))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    for (seed, result) in results {
        records.push((seed, result?));
    }
    let trials: Vec<TrialSummary> = records
        .iter()
        .map(|(seed, record)| summarize(record, *seed))
        .collect();
    let metrics: Vec<f64> = trials.iter().map(|t| t.metric).collect();
    let (metric_mean, metric_stderr) = mean_and_stderr(&metrics);
    let summary = ExperimentSummary {
        schema: SUMMARY_SCHEMA,
        resolved: prepared.resolved.clone(),
        n: prepared.n,
        trials,
        metric_mean,
        metric_stderr,
    };
    if let Some(dir) = &prepared.output_dir {
        let norm_kind = match prepared.learner_kind {
            LearnerKind::Percoord => WitnessNorm::L1,
            _ => WitnessNorm::L2,
        };
        let obj = &prepared.objective;
        write_outputs(dir, &summary, &records, |y| obj.grad(y), norm_kind)?;
    }
    Ok((summary, records.into_iter().map(|(_, r)| r).collect()))
}

/// Which scalar a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepParam {
    N,
    Delta,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::N => "N",
            SweepParam::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub param: &'static str,
    pub values: Vec<f64>,
    pub metric_means: Vec<f64>,
    pub metric_stderrs: Vec<f64>,
    pub n_trials: usize,
    /// Log-log fit; absent when the values span less than one decade.
    pub fit: Option<PowerLawFit>,
    pub fit_note: String,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "param_value,metric_mean,metric_stderr,n_trials")?;
        for ((v, m), s) in self
            .values
            .iter()
            .zip(&self.metric_means)
            .zip(&self.metric_stderrs)
        {
            writeln!(out, "{v:.17e},{m:.17e},{s:.17e},{}", self.n_trials)?;
        }
        Ok(())
    }
}

/// Run the experiment once per sweep value and fit a log-log line to the
/// metric. Requires at least 4 values; the slope is reported only when the
/// values span at least one decade.
pub fn sweep(
    config: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepResult, HarnessError> {
    if values.len() < 4 {
        return Err(HarnessError::Invalid(format!(
            "sweep needs at least 4 values, got {}",
            values.len()
        )));
    }
    let mut metric_means = Vec::with_capacity(values.len());
    let mut metric_stderrs = Vec::with_capacity(values.len());
    let base_dir = config.output_dir.clone();
    for value in values {
        let mut point = config.clone();
        match param {
            SweepParam::N => point.n = *value as usize,
            SweepParam::Delta => point.delta = Some(*value),
        }
        point.output_dir = base_dir
            .as_ref()
            .map(|dir: &PathBuf| dir.join(format!("sweep_{}_{}", param.name(), value)));
        let (summary, _) = run_experiment(&point)?;
        metric_means.push(summary.metric_mean);
        metric_stderrs.push(summary.metric_stderr);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(0.0f64, f64::max);
    let spans_decade = hi / lo >= 10.0;
    let (fit, fit_note) = if spans_decade {
        let points: Vec<(f64, f64)> = values
            .iter()
            .cloned()
            .zip(metric_means.iter().cloned())
            .collect();
        match fit_power_law(&points) {
            Ok(fit) => (Some(fit), "ok".to_string()),
            Err(e) => (None, format!("fit failed: {e}")),
        }
    } else {
        (
            None,
            format!("values span {:.2}x < one decade; slope not fitted", hi / lo),
        )
    };
    let result = SweepResult {
        param: param.name(),
        values: values.to_vec(),
        metric_means,
        metric_stderrs,
        n_trials: config.trial_seeds.len(),
        fit,
        fit_note,
    };
    if let Some(dir) = &base_dir {
        fs::create_dir_all(dir)?;
        let mut csv = Vec::new();
        result.write_csv(&mut csv)?;
        write_atomic(&dir.join(format!("sweep_{}.csv", param.name())), &csv)?;
        let json = serde_json::to_string_pretty(&result)?;
        write_atomic(
            &dir.join(format!("sweep_{}.json", param.name())),
            json.as_bytes(),
        )?;
    }
    Ok(result)
}
