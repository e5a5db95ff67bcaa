//! Benchmark harness: loads dataset records, runs the full pipeline per
//! record per repeat, optionally executes the emitted model, and computes
//! the two metrics — accuracy (end-to-end correct answers) and pass rate
//! (fraction of emitted models that execute).

mod executor;

pub use executor::{
    parse_objective_line, ArtifactKind, ExecutionOutcome, Executor, ExecutorError,
    NeutralExecutor, PythonExecutor,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::codegen::{emit, emit_neutral, pool_to_ir, BackendProfile};
use crate::extraction::{run_pipeline, ExtractionTranscript, ModelClient};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("dataset schema error: {0}")]
    SchemaError(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One dataset record: a natural-language question with its ground-truth
/// optimal objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub index: i64,
    pub question: String,
    pub answer: f64,
}

/// Loads a dataset file: a JSON object keyed by string indices, each entry
/// carrying `index`, `question`, and a finite `answer`. Records come back
/// sorted by index.
pub fn load_dataset(path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(e.to_string()))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let doc: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(text).map_err(|e| BenchError::SchemaError(e.to_string()))?;
    let mut records = Vec::with_capacity(doc.len());
    for (key, value) in doc {
        let record: BenchRecord = serde_json::from_value(value)
            .map_err(|e| BenchError::SchemaError(format!("record {:?}: {}", key, e)))?;
        if !record.answer.is_finite() {
            return Err(BenchError::SchemaError(format!(
                "record {:?}: answer must be finite",
                key
            )));
        }
        records.push(record);
    }
    records.sort_by_key(|r| r.index);
    Ok(records)
}

/// Per-record grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordGrade {
    pub index: i64,
    pub executed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<PathBuf>,
}

/// Numeric-match tolerance: `max(1e-4, 1e-4 · |answer|)`.
pub fn answers_match(objective: f64, answer: f64) -> bool {
    (objective - answer).abs() <= 1e-4_f64.max(1e-4 * answer.abs())
}

/// Grades one record: `executed` iff the process exited cleanly and printed
/// a parseable `OBJECTIVE:` line; `correct` additionally requires the value
/// to match the ground truth. An unavailable executor marks the record
/// not-executed with the reason and the run continues.
pub fn grade(record: &BenchRecord, source: &str, executor: &dyn Executor, timeout: Duration) -> RecordGrade {
    match executor.execute(source, timeout) {
        Ok(outcome) => {
            let objective = parse_objective_line(&outcome.stdout);
            let executed = outcome.exit_ok && objective.is_some();
            let correct = executed
                && objective
                    .map(|o| answers_match(o, record.answer))
                    .unwrap_or(false);
            let note = if executed {
                None
            } else {
                let detail = if outcome.stderr.trim().is_empty() {
                    "no OBJECTIVE line in output".to_string()
                } else {
                    outcome.stderr.trim().to_string()
                };
                Some(detail)
            };
            RecordGrade {
                index: record.index,
                executed,
                objective,
                correct,
                note,
                artifacts: None,
            }
        }
        Err(e) => RecordGrade {
            index: record.index,
            executed: false,
            objective: None,
            correct: false,
            note: Some(e.to_string()),
            artifacts: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub records: Vec<RecordGrade>,
    pub accuracy: f64,
    pub pass_rate: f64,
}

/// Aggregated bench outcome. Repeats aggregate two ways, both reported:
/// the mean over repeats and the best repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub seed: u64,
    pub repeats: usize,
    pub per_repeat: Vec<RepeatResult>,
    pub accuracy_mean: f64,
    pub accuracy_best: f64,
    pub pass_rate_mean: f64,
    pub pass_rate_best: f64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub repeats: usize,
    pub seed: u64,
    pub execute: bool,
    pub timeout: Duration,
    pub artifact_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repeats: 10,
            seed: 42,
            execute: true,
            timeout: Duration::from_secs(120),
            artifact_dir: None,
        }
    }
}

/// Everything needed to take one record end to end.
pub struct BenchPipeline<'a> {
    pub client: &'a dyn ModelClient,
    pub profile: &'a BackendProfile,
    pub executor: &'a dyn Executor,
}

/// Runs the dataset `config.repeats` times. Per-record failures (extraction,
/// decomposition, emission, execution) grade that record as not-executed and
/// never abort the run or affect other records.
pub fn run_bench(
    dataset: &[BenchRecord],
    pipeline: &BenchPipeline<'_>,
    config: &BenchConfig,
) -> BenchResult {
    let mut per_repeat = Vec::with_capacity(config.repeats);
    for repeat in 0..config.repeats {
        let mut records = Vec::with_capacity(dataset.len());
        for record in dataset {
            let mut grade_row = run_record(record, pipeline, config, repeat);
            if let Some(dir) = &config.artifact_dir {
                grade_row.artifacts = Some(dir.join(format!("record_{}", record.index)));
            }
            records.push(grade_row);
        }
        let total = records.len().max(1) as f64;
        let accuracy = records.iter().filter(|r| r.correct).count() as f64 / total;
        let pass_rate = records.iter().filter(|r| r.executed).count() as f64 / total;
        per_repeat.push(RepeatResult {
            records,
            accuracy,
            pass_rate,
        });
    }
    let mean = |f: fn(&RepeatResult) -> f64| {
        per_repeat.iter().map(f).sum::<f64>() / per_repeat.len().max(1) as f64
    };
    let best = |f: fn(&RepeatResult) -> f64| {
        per_repeat.iter().map(f).fold(0.0_f64, f64::max)
    };
    BenchResult {
        seed: config.seed,
        repeats: config.repeats,
        accuracy_mean: mean(|r| r.accuracy),
        accuracy_best: best(|r| r.accuracy),
        pass_rate_mean: mean(|r| r.pass_rate),
        pass_rate_best: best(|r| r.pass_rate),
        per_repeat,
    }
}

fn run_record(
    record: &BenchRecord,
    pipeline: &BenchPipeline<'_>,
    config: &BenchConfig,
    repeat: usize,
) -> RecordGrade {
    let not_executed = |note: String| RecordGrade {
        index: record.index,
        executed: false,
        objective: None,
        correct: false,
        note: Some(note),
        artifacts: None,
    };
    let mut transcripts: Vec<ExtractionTranscript> = Vec::new();
    let outcome = match run_pipeline(&record.question, pipeline.client, &mut transcripts) {
        Ok(outcome) => outcome,
        Err(e) => return not_executed(format!("extraction failed: {}", e)),
    };
    let ir = match pool_to_ir(&outcome.pool) {
        Ok(ir) => ir,
        Err(e) => return not_executed(format!("codegen failed: {}", e)),
    };
    let source = match pipeline.executor.artifact() {
        ArtifactKind::NeutralIr => emit_neutral(&ir),
        ArtifactKind::PythonSource => match emit(&ir, pipeline.profile) {
            Ok(src) => src,
            Err(e) => return not_executed(format!("emit failed: {}", e)),
        },
    };
    if let (Some(dir), 0) = (&config.artifact_dir, repeat) {
        let record_dir = dir.join(format!("record_{}", record.index));
        if std::fs::create_dir_all(&record_dir).is_ok() {
            let ext = match pipeline.executor.artifact() {
                ArtifactKind::NeutralIr => "json",
                ArtifactKind::PythonSource => "py",
            };
            let _ = std::fs::write(record_dir.join(format!("model.{}", ext)), &source);
            let _ = std::fs::write(
                record_dir.join("pool.json"),
                serde_json::to_string_pretty(&crate::elements::schema::pool_to_json(&outcome.pool))
                    .unwrap_or_default(),
            );
            let _ = std::fs::write(
                record_dir.join("transcripts.json"),
                serde_json::to_string_pretty(&transcripts).unwrap_or_default(),
            );
        }
    }
    if !config.execute {
        return RecordGrade {
            index: record.index,
            executed: false,
            objective: None,
            correct: false,
            note: Some("execution disabled".to_string()),
            artifacts: None,
        };
    }
    grade(record, &source, pipeline.executor, config.timeout)
}
