use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::MetricsReport;
use crate::pipeline::run_pipeline;
use crate::planner::Planner;
use crate::task::{TaskInstance, Tier};
use crate::tree::ProcessTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub count: usize,
    pub oc: f64,
    pub se: f64,
    pub exe: f64,
    pub gcr: f64,
    pub sr: f64,
}

impl Means {
    fn of<'a>(reports: impl Iterator<Item = &'a MetricsReport>) -> Means {
        let mut m = Means::default();
        for r in reports {
            m.count += 1;
            m.oc += r.oc;
            m.se += r.se;
            m.exe += r.exe;
            m.gcr += r.gcr;
            m.sr += f64::from(r.sr);
        }
        if m.count > 0 {
            let n = m.count as f64;
            for v in [&mut m.oc, &mut m.se, &mut m.exe, &mut m.gcr, &mut m.sr] {
                *v /= n;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub planner: String,
    pub tasks: Vec<TaskResult>,
    pub tier_means: BTreeMap<String, Means>,
    pub overall: Means,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("empty task list")]
    EmptySuite,
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

fn zero_report(note: String) -> MetricsReport {
    MetricsReport {
        oc: 0.0,
        se: 0.0,
        exe: 0.0,
        gcr: 0.0,
        sr: 0,
        executed_fully: false,
        gt_schedule_origin: None,
        notes: vec![note],
    }
}

/// Plans and scores one task. Stage failures become zero metrics with a note.
pub fn run_task(task: &TaskInstance, planner: &dyn Planner, tree: &ProcessTree) -> TaskResult {
    let metrics = match planner.plan(task) {
        Err(e) => zero_report(e.to_string()),
        Ok(output) => match run_pipeline(task, output, tree) {
            Ok(run) => run.report,
            Err(e) => zero_report(e.to_string()),
        },
    };
    TaskResult { task_id: task.id().to_string(), tier: task.tier, metrics }
}

pub fn run_benchmark(
    tasks: &[TaskInstance],
    planner: &dyn Planner,
    tree: &ProcessTree,
) -> Result<BenchReport, BenchError> {
    if tasks.is_empty() {
        return Err(BenchError::EmptySuite);
    }
    let mut results: Vec<TaskResult> = tasks.par_iter().map(|t| run_task(t, planner, tree)).collect();
    results.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    let mut by_tier: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
    for r in &results {
        let key = r.tier.map_or_else(|| "untiered".to_string(), |t| t.to_string());
        by_tier.entry(key).or_default().push(&r.metrics);
    }
    let tier_means = by_tier.into_iter().map(|(k, v)| (k, Means::of(v.into_iter()))).collect();
    let overall = Means::of(results.iter().map(|r| &r.metrics));
    Ok(BenchReport { planner: planner.name().to_string(), tasks: results, tier_means, overall })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    task_id: &'a str,
    tier: &'a str,
    oc: f64,
    se: f64,
    exe: f64,
    gcr: f64,
    sr: u8,
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.tasks {
            let m = &t.metrics;
            w.serialize(CsvRow {
                task_id: &t.task_id,
                tier: t.tier.map_or("", Tier::as_str),
                oc: m.oc,
                se: m.se,
                exe: m.exe,
                gcr: m.gcr,
                sr: m.sr,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `suite.csv`, `suite.json` and `<task_id>.metrics.json` files.
    pub fn write(&self, out_dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("suite.csv"), self.to_csv()?)?;
        std::fs::write(out_dir.join("suite.json"), self.to_json())?;
        for t in &self.tasks {
            let mut s = serde_json::to_string_pretty(&t.metrics).expect("metrics serialize");
            s.push('\n');
            std::fs::write(out_dir.join(format!("{}.metrics.json", t.task_id)), s)?;
        }
        Ok(())
    }
}
