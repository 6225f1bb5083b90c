//! Sweep execution, the JSON-lines record log and aggregation.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::probes::{evaluate_group, TaskResult};
use super::{SweepPlan, Task, TaskPoint};
use crate::error::{Error, Result};
use crate::exec::{self, Workers};
use crate::localization::Estimate;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Done,
    Failed,
}

/// One line of the record log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: String,
    pub status: TaskStatus,
    pub point: TaskPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<TaskResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall time of the realization group the task was computed in.
    pub wall_time_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stat {
    fn of(xs: &[f64]) -> Self {
        let e = Estimate::from_samples(xs);
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Stat { mean: e.mean, stderr: e.stderr, min, max, n: e.n }
    }
}

/// Statistics over the seeds of one ensemble point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateGroup {
    pub label: String,
    pub seeds: Vec<u64>,
    pub stats: BTreeMap<String, Stat>,
    /// Values in the order of `seeds`.
    pub per_seed: BTreeMap<String, Vec<f64>>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub fingerprint: String,
    pub tasks_total: usize,
    pub tasks_done: usize,
    pub tasks_failed: usize,
    pub groups: Vec<AggregateGroup>,
    /// `(key, diagnostic)` of failed tasks.
    pub failures: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub report: AggregateReport,
    /// Tasks computed by this call (zero when resuming a finished sweep).
    pub computed: usize,
}

/// Reads a record log, ignoring a truncated last line.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) if e.is_eof() => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Runs all tasks of `plan` that are not already `done` in the record log,
/// appends their records and writes the aggregated report.
pub fn execute_sweep(plan: &SweepPlan, workers: Workers) -> Result<SweepOutcome> {
    plan.validate()?;
    fs::create_dir_all(&plan.output_dir)?;
    let records_path = plan.output_dir.join(RECORDS_FILE);

    let mut latest: BTreeMap<String, RunRecord> = BTreeMap::new();
    for r in read_records(&records_path)? {
        // A completed record is never replaced.
        if latest.get(&r.key).map_or(true, |old| old.status != TaskStatus::Done) {
            latest.insert(r.key.clone(), r);
        }
    }

    let tasks = plan.tasks();
    let pending: Vec<&Task> =
        tasks.iter().filter(|t| latest.get(&t.key).map_or(true, |r| r.status != TaskStatus::Done)).collect();

    // Tasks sharing a realization are computed together.
    let mut groups: Vec<Vec<&Task>> = Vec::new();
    let mut index: BTreeMap<(usize, u64, u64), usize> = BTreeMap::new();
    for t in &pending {
        let k = (t.point.size, t.point.disorder.to_bits(), t.point.seed);
        let i = *index.entry(k).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(t);
    }

    let file = OpenOptions::new().create(true).append(true).open(&records_path)?;
    let log = Mutex::new(BufWriter::new(file));
    let new_records = exec::map(workers, &groups, |group| -> Result<Vec<RunRecord>> {
        let start = Instant::now();
        let results = evaluate_group(plan, group);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let recs: Vec<RunRecord> = group
            .iter()
            .zip(results)
            .map(|(t, r)| match r {
                Ok(res) => RunRecord {
                    key: t.key.clone(),
                    status: TaskStatus::Done,
                    point: t.point.clone(),
                    result: Some(res),
                    error: None,
                    wall_time_ms: ms,
                },
                Err(e) => RunRecord {
                    key: t.key.clone(),
                    status: TaskStatus::Failed,
                    point: t.point.clone(),
                    result: None,
                    error: Some(e.to_string()),
                    wall_time_ms: ms,
                },
            })
            .collect();
        let mut w = log.lock().map_err(|_| Error::Numerical("record log lock poisoned".into()))?;
        for r in &recs {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(recs)
    });
    let mut computed = 0;
    for recs in new_records {
        for r in recs? {
            computed += 1;
            latest.insert(r.key.clone(), r);
        }
    }

    let report = aggregate(plan, &tasks, &latest);
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(plan.output_dir.join(AGGREGATE_FILE), text)?;
    Ok(SweepOutcome { report, computed })
}

/// Aggregates the latest record of every task. Ordering follows the task
/// list, and seeds are sorted, so the result does not depend on scheduling.
pub fn aggregate(plan: &SweepPlan, tasks: &[Task], latest: &BTreeMap<String, RunRecord>) -> AggregateReport {
    let mut order: Vec<String> = Vec::new();
    let mut by_label: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    let mut failures = Vec::new();
    let (mut done, mut failed) = (0, 0);
    for t in tasks {
        let Some(r) = latest.get(&t.key) else { continue };
        match r.status {
            TaskStatus::Done => done += 1,
            TaskStatus::Failed => {
                failed += 1;
                failures.push((r.key.clone(), r.error.clone().unwrap_or_default()));
                continue;
            }
            TaskStatus::Pending => continue,
        }
        let label = t.point.ensemble_label();
        if !by_label.contains_key(&label) {
            order.push(label.clone());
        }
        by_label.entry(label).or_default().push(r);
    }

    let groups = order
        .into_iter()
        .map(|label| {
            let mut recs = by_label.remove(&label).unwrap_or_default();
            recs.sort_by_key(|r| r.point.seed);
            let seeds: Vec<u64> = recs.iter().map(|r| r.point.seed).collect();
            let mut per_seed: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            let mut flags = Vec::new();
            for r in &recs {
                if let Some(res) = &r.result {
                    for (k, v) in &res.values {
                        per_seed.entry(k.clone()).or_default().push(*v);
                    }
                    flags.extend(res.flags.iter().map(|f| format!("seed {}: {f}", r.point.seed)));
                }
            }
            let stats = per_seed.iter().map(|(k, v)| (k.clone(), Stat::of(v))).collect();
            AggregateGroup { label, seeds, stats, per_seed, flags }
        })
        .collect();

    AggregateReport { fingerprint: plan.fingerprint(), tasks_total: tasks.len(), tasks_done: done, tasks_failed: failed, groups, failures }
}
