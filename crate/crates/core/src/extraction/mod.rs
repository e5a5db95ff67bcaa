//! Two-stage extraction orchestration: a whole-document bird's-eye pass
//! collecting parameters, then a per-sentence pass collecting variables,
//! constraints, and the objective, aggregated into the elements pool.

mod client;
pub mod prompts;

pub use client::{
    prompt_hash, HttpClient, Message, ModelClient, ModelClientConfig, Role, StubClient,
};

use serde::{Deserialize, Serialize};

use crate::elements::schema::{ParametersDoc, SentenceDoc};
use crate::elements::{
    aggregate, BirdeyeExtraction, ElementsError, ElementsPool, SentenceExtraction,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractionError {
    #[error("problem text is empty")]
    EmptyProblem,
    #[error("model endpoint unreachable: {0}")]
    ModelUnreachable(String),
    #[error("no fixture for prompt hash {hash} (last user message starts: {hint:?})")]
    FixtureMissing { hash: String, hint: String },
    #[error("unparseable model response at stage {stage} after retry: {detail}")]
    UnparseableResponse { stage: String, detail: String },
    #[error("extraction degraded: {failed}/{total} sentences failed")]
    ExtractionDegraded { failed: usize, total: usize },
    #[error("bad client configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Elements(#[from] ElementsError),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One sentence of the problem text with its byte span. Spans are
/// contiguous: each starts where the previous ended, and together they
/// cover the whole source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSplit {
    /// 1-based index.
    pub index: usize,
    pub text: String,
    pub span: (usize, usize),
}

/// Splits on sentence terminators (`.`, `!`, `?` followed by whitespace)
/// and newline-delimited list items, keeping Markdown table blocks as
/// single units. Text without terminators falls back to one sentence.
pub fn split_sentences(problem: &str) -> Result<Vec<SentenceSplit>, ExtractionError> {
    if problem.trim().is_empty() {
        return Err(ExtractionError::EmptyProblem);
    }
    // Segment boundaries as byte ranges of sentence text.
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    let mut table_start: Option<usize> = None;

    let mut line_start = 0usize;
    let bytes = problem.as_bytes();
    while line_start < bytes.len() {
        let line_end = problem[line_start..]
            .find('\n')
            .map(|p| line_start + p + 1)
            .unwrap_or(bytes.len());
        let line = &problem[line_start..line_end];
        let trimmed = line.trim();
        let is_table = trimmed.starts_with('|');
        let is_bullet = trimmed.starts_with("- ")
            || trimmed.starts_with("* ")
            || trimmed.starts_with("• ");

        if is_table {
            if let Some(start) = open.take() {
                segments.push((start, line_start));
            }
            if table_start.is_none() {
                table_start = Some(line_start);
            }
            line_start = line_end;
            continue;
        }
        if let Some(start) = table_start.take() {
            segments.push((start, line_start));
        }

        if trimmed.is_empty() {
            if let Some(start) = open.take() {
                segments.push((start, line_start));
            }
        } else if is_bullet {
            if let Some(start) = open.take() {
                segments.push((start, line_start));
            }
            segments.push((line_start, line_end));
        } else {
            // Scan the line, opening at the first non-whitespace character
            // and closing at each sentence terminator.
            for (off, c) in line.char_indices() {
                let at = line_start + off;
                if open.is_none() && !c.is_whitespace() {
                    open = Some(at);
                }
                if matches!(c, '.' | '!' | '?') {
                    let next = problem[at + c.len_utf8()..].chars().next();
                    let ends = match next {
                        None => true,
                        Some(n) => n.is_whitespace(),
                    };
                    if ends {
                        let end = at + c.len_utf8();
                        if let Some(start) = open.take() {
                            segments.push((start, end));
                        }
                    }
                }
            }
        }
        line_start = line_end;
    }
    if let Some(start) = table_start.take() {
        segments.push((start, bytes.len()));
    }
    if let Some(start) = open.take() {
        segments.push((start, bytes.len()));
    }
    // Drop whitespace-only segments.
    segments.retain(|(s, e)| !problem[*s..*e].trim().is_empty());
    if segments.is_empty() {
        return Err(ExtractionError::EmptyProblem);
    }

    // Tile the spans so they cover the source.
    let mut spans: Vec<(usize, usize)> = Vec::with_capacity(segments.len());
    for (i, (_, e)) in segments.iter().enumerate() {
        let span_start = if i == 0 { 0 } else { spans[i - 1].1 };
        let span_end = if i + 1 == segments.len() {
            problem.len()
        } else {
            *e
        };
        spans.push((span_start, span_end));
    }
    Ok(segments
        .iter()
        .zip(spans)
        .enumerate()
        .map(|(i, ((s, e), span))| SentenceSplit {
            index: i + 1,
            text: problem[*s..*e].trim().to_string(),
            span,
        })
        .collect())
}

/// Verbatim record of one model exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTranscript {
    pub stage: String,
    pub prompt: String,
    pub response: String,
    /// Parsed payload, or `{"parse_failure": ...}`.
    pub parsed: serde_json::Value,
}

fn render_prompt(messages: &[Message]) -> String {
    messages
        .iter()
        .map(|m| format!("[{}]\n{}", m.role.as_str(), m.content))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Pulls the JSON object out of a model response (with or without a fenced
/// block).
pub fn extract_json(text: &str) -> Result<serde_json::Value, String> {
    let body = if let Some(at) = text.find("```json") {
        let rest = &text[at + 7..];
        match rest.find("```") {
            Some(end) => &rest[..end],
            None => rest,
        }
    } else {
        let start = text.find('{').ok_or("no JSON object in response")?;
        let end = text.rfind('}').ok_or("no closing brace in response")?;
        if end < start {
            return Err("no JSON object in response".to_string());
        }
        &text[start..=end]
    };
    serde_json::from_str(body.trim()).map_err(|e| e.to_string())
}

/// Message transcript for the bird's-eye analysis call.
pub fn birdeye_messages(problem: &str) -> Vec<Message> {
    vec![
        Message::system(prompts::BIRDEYE_SYSTEM),
        Message::user(prompts::render_user(prompts::BIRDEYE_USER, problem)),
    ]
}

/// Message transcript for the per-sentence analysis call. The bird's-eye
/// parameters ride along as context.
pub fn sbs_messages(sentence_text: &str, birdeye: &BirdeyeExtraction) -> Vec<Message> {
    let user = format!(
        "{}\n\nContext from the whole-document pass:\n{}",
        prompts::render_user(prompts::SBS_USER, sentence_text),
        birdeye_context(birdeye)
    );
    vec![Message::system(prompts::SBS_SYSTEM), Message::user(user)]
}

/// Fixture-recording helpers for the stub client: they construct the exact
/// transcripts the pipeline will send and store responses under their
/// prompt hashes.
pub mod fixtures {
    use super::*;
    use std::path::Path;

    /// Records the two bird's-eye exchanges (analysis + format change).
    pub fn record_birdeye(
        dir: &Path,
        problem: &str,
        analysis: &str,
        format_response: &str,
    ) -> Result<(), ExtractionError> {
        let mut messages = birdeye_messages(problem);
        StubClient::record(dir, &messages, analysis)?;
        messages.push(Message::assistant(analysis));
        messages.push(Message::user(prompts::BIRDEYE_FORMAT));
        StubClient::record(dir, &messages, format_response)?;
        Ok(())
    }

    /// Records the two per-sentence exchanges for one sentence.
    pub fn record_sentence(
        dir: &Path,
        sentence_text: &str,
        birdeye: &BirdeyeExtraction,
        analysis: &str,
        format_response: &str,
    ) -> Result<(), ExtractionError> {
        let mut messages = sbs_messages(sentence_text, birdeye);
        StubClient::record(dir, &messages, analysis)?;
        messages.push(Message::assistant(analysis));
        messages.push(Message::user(prompts::SBS_FORMAT));
        StubClient::record(dir, &messages, format_response)?;
        Ok(())
    }
}

/// Issues the bird's-eye prompts (analysis, then format change), parsing
/// the parameters list. One re-ask on malformed JSON before failing.
pub fn run_birdeye(
    problem: &str,
    client: &dyn ModelClient,
    log: &mut Vec<ExtractionTranscript>,
) -> Result<BirdeyeExtraction, ExtractionError> {
    let mut messages = birdeye_messages(problem);
    let analysis = client.complete(&messages)?;
    log.push(ExtractionTranscript {
        stage: "birdeye".into(),
        prompt: render_prompt(&messages),
        response: analysis.clone(),
        parsed: serde_json::Value::Null,
    });

    messages.push(Message::assistant(analysis.clone()));
    messages.push(Message::user(prompts::BIRDEYE_FORMAT));
    let (doc, value) = ask_for_json::<ParametersDoc>(client, &mut messages, "birdeye-format", log)?;

    let mut params = Vec::with_capacity(doc.parameters.len());
    for entry in &doc.parameters {
        let decl = entry
            .to_decl()
            .map_err(|detail| ExtractionError::UnparseableResponse {
                stage: "birdeye-format".into(),
                detail,
            })?;
        params.push(decl);
    }
    Ok(BirdeyeExtraction {
        params,
        vars: Vec::new(),
        base_info: serde_json::json!({
            "analysis": analysis,
            "parameters_doc": value,
        }),
    })
}

/// Sends the format-change prompt, retrying once with the same prompt when
/// the response fails to parse.
fn ask_for_json<T: serde::de::DeserializeOwned>(
    client: &dyn ModelClient,
    messages: &mut Vec<Message>,
    stage: &str,
    log: &mut Vec<ExtractionTranscript>,
) -> Result<(T, serde_json::Value), ExtractionError> {
    let mut last_detail = String::new();
    for attempt in 0..2 {
        let response = client.complete(messages)?;
        let parsed = extract_json(&response)
            .and_then(|v| {
                serde_json::from_value::<T>(v.clone())
                    .map(|t| (t, v))
                    .map_err(|e| e.to_string())
            });
        match parsed {
            Ok((t, v)) => {
                log.push(ExtractionTranscript {
                    stage: stage.into(),
                    prompt: render_prompt(messages),
                    response,
                    parsed: v.clone(),
                });
                return Ok((t, v));
            }
            Err(detail) => {
                log.push(ExtractionTranscript {
                    stage: format!("{}-attempt-{}", stage, attempt + 1),
                    prompt: render_prompt(messages),
                    response: response.clone(),
                    parsed: serde_json::json!({ "parse_failure": detail }),
                });
                last_detail = detail;
                // Re-ask: replay the format-change instruction.
                let format_prompt = messages
                    .iter()
                    .rev()
                    .find(|m| m.role == Role::User)
                    .map(|m| m.content.clone())
                    .unwrap_or_default();
                messages.push(Message::assistant(response));
                messages.push(Message::user(format_prompt));
            }
        }
    }
    Err(ExtractionError::UnparseableResponse {
        stage: stage.to_string(),
        detail: last_detail,
    })
}

/// Per-sentence fine-grained extraction. Individual sentence failures are
/// recorded and skipped; the run aborts only when at least half the
/// sentences fail.
pub fn run_sbs(
    sentences: &[SentenceSplit],
    birdeye: &BirdeyeExtraction,
    client: &dyn ModelClient,
    log: &mut Vec<ExtractionTranscript>,
) -> Result<Vec<SentenceExtraction>, ExtractionError> {
    let mut out = Vec::with_capacity(sentences.len());
    let mut failed = 0usize;
    for s in sentences {
        match run_sbs_sentence(s, birdeye, client, log) {
            Ok(extraction) => out.push(extraction),
            Err(e @ ExtractionError::FixtureMissing { .. }) => return Err(e),
            Err(ExtractionError::ModelUnreachable(m)) => {
                return Err(ExtractionError::ModelUnreachable(m))
            }
            Err(_) => {
                failed += 1;
                out.push(SentenceExtraction {
                    index: s.index,
                    ..SentenceExtraction::default()
                });
            }
        }
    }
    if failed * 2 >= sentences.len() && failed > 0 {
        return Err(ExtractionError::ExtractionDegraded {
            failed,
            total: sentences.len(),
        });
    }
    Ok(out)
}

fn birdeye_context(birdeye: &BirdeyeExtraction) -> String {
    let entries: Vec<serde_json::Value> = birdeye
        .params
        .iter()
        .map(|p| {
            serde_json::json!({
                "Name": p.name,
                "Type": p.value.kind(),
                "Value": serde_json::to_value(&p.value).unwrap(),
            })
        })
        .collect();
    serde_json::to_string(&serde_json::json!({ "Parameters_List": entries })).unwrap()
}

fn run_sbs_sentence(
    sentence: &SentenceSplit,
    birdeye: &BirdeyeExtraction,
    client: &dyn ModelClient,
    log: &mut Vec<ExtractionTranscript>,
) -> Result<SentenceExtraction, ExtractionError> {
    let mut messages = sbs_messages(&sentence.text, birdeye);
    let analysis = client.complete(&messages)?;
    log.push(ExtractionTranscript {
        stage: format!("sbs-{}", sentence.index),
        prompt: render_prompt(&messages),
        response: analysis.clone(),
        parsed: serde_json::Value::Null,
    });
    messages.push(Message::assistant(analysis));
    messages.push(Message::user(prompts::SBS_FORMAT));
    let stage = format!("sbs-{}-format", sentence.index);
    let (doc, _) = ask_for_json::<SentenceDoc>(client, &mut messages, &stage, log)?;
    doc.into_extraction(sentence.index)
        .map_err(|detail| ExtractionError::UnparseableResponse { stage, detail })
}

/// Full pipeline output: the validated pool plus sentence splits.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub pool: ElementsPool,
    pub sentences: Vec<SentenceSplit>,
}

/// split → birdeye → sentence-by-sentence → aggregate → validate.
/// Transcripts accumulate into `log` even when a later stage fails.
pub fn run_pipeline(
    problem: &str,
    client: &dyn ModelClient,
    log: &mut Vec<ExtractionTranscript>,
) -> Result<PipelineOutcome, ExtractionError> {
    let sentences = split_sentences(problem)?;
    let birdeye = run_birdeye(problem, client, log)?;
    let extractions = run_sbs(&sentences, &birdeye, client, log)?;
    let pool = aggregate(&extractions, &birdeye)?;
    pool.validate()?;
    Ok(PipelineOutcome { pool, sentences })
}
