//! Subcommand implementations.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use nedtree_core::bench::{
    load_dataset, run_bench, BenchConfig, BenchPipeline, Executor, NeutralExecutor, PythonExecutor,
};
use nedtree_core::codegen::{emit, emit_neutral, load_neutral, pool_to_ir, BackendProfile};
use nedtree_core::elements::schema::{load_pool_json, pool_to_json};
use nedtree_core::extraction::{
    run_pipeline, ExtractionTranscript, HttpClient, ModelClient, ModelClientConfig, StubClient,
};
use nedtree_core::nedtree::{decompose, decompose_relation};
use nedtree_core::oracle::check_equivalence;
use nedtree_core::registry::{SymbolRegistry, VarType, VariableDecl};

use crate::args::{Cli, ClientKind, Command, Format, OnOff};
use crate::config::FileConfig;

#[derive(Debug)]
pub enum ErrorKind {
    Usage,
    Pipeline,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// Emit the error as a JSON object on stdout (for --format json paths).
    pub json: bool,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError {
            kind: ErrorKind::Usage,
            message: message.into(),
            json: false,
        }
    }

    fn pipeline(message: impl Into<String>) -> CliError {
        CliError {
            kind: ErrorKind::Pipeline,
            message: message.into(),
            json: false,
        }
    }

    fn with_json(mut self, json: bool) -> CliError {
        self.json = json;
        self
    }

    pub fn render(&self) {
        if self.json {
            let obj = serde_json::json!({
                "error": {
                    "kind": match self.kind {
                        ErrorKind::Usage => "usage",
                        ErrorKind::Pipeline => "pipeline",
                    },
                    "message": self.message,
                }
            });
            println!("{}", obj);
        } else {
            eprintln!("error: {}", self.message);
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self.kind {
            ErrorKind::Usage => ExitCode::from(2),
            ErrorKind::Pipeline => ExitCode::from(4),
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    let config = FileConfig::load(cli.config.as_deref()).map_err(CliError::usage)?;
    let artifacts = cli.artifacts.clone().or(config.artifacts.clone());
    match cli.command {
        Command::Parse {
            expr,
            relation,
            format,
        } => cmd_parse(expr, relation, format),
        Command::Decompose {
            expr,
            params,
            vars,
            format,
        } => cmd_decompose(expr, &params, &vars, format),
        Command::Check {
            expr,
            params,
            vars,
            samples,
            seed,
            tol,
        } => cmd_check(
            expr,
            &params,
            &vars,
            samples.or(config.samples).unwrap_or(1000),
            seed.or(config.seed).unwrap_or(42),
            tol.or(config.tol).unwrap_or(1e-8),
        ),
        Command::Emit {
            backend,
            r#in,
            out,
            profile,
        } => cmd_emit(
            backend.or(config.backend.clone()),
            r#in,
            out,
            profile,
        ),
        Command::Extract {
            problem,
            client,
            fixtures,
            out,
        } => cmd_extract(
            problem,
            resolve_client(client, &config)?,
            fixtures.or(config.fixtures.clone()),
            out,
            artifacts,
        ),
        Command::Bench {
            dataset,
            client,
            fixtures,
            backend,
            profile,
            execute,
            repeats,
            seed,
            out,
        } => cmd_bench(BenchArgs {
            dataset,
            client: resolve_client(client, &config)?,
            fixtures: fixtures.or(config.fixtures.clone()),
            backend: backend.or(config.backend.clone()),
            profile,
            execute: match execute {
                Some(OnOff::On) => true,
                Some(OnOff::Off) => false,
                None => config.execute.unwrap_or(true),
            },
            repeats: repeats.or(config.repeats).unwrap_or(10),
            seed: seed.or(config.seed).unwrap_or(42),
            timeout_secs: config.timeout_secs.unwrap_or(120),
            out,
            artifacts,
        }),
    }
}

fn resolve_client(flag: Option<ClientKind>, config: &FileConfig) -> Result<ClientKind, CliError> {
    match flag {
        Some(kind) => Ok(kind),
        None => match config.client.as_deref() {
            Some("stub") | None => Ok(ClientKind::Stub),
            Some("http") => Ok(ClientKind::Http),
            Some(other) => Err(CliError::usage(format!("unknown client '{}'", other))),
        },
    }
}

fn read_input(path: Option<&PathBuf>, what: &str) -> Result<String, CliError> {
    match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::pipeline(format!("cannot read {} {}: {}", what, p.display(), e))),
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::pipeline(format!("cannot read {} from stdin: {}", what, e)))?;
            Ok(buf)
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            std::fs::write(p, text)
                .map_err(|e| CliError::pipeline(format!("cannot write {}: {}", p.display(), e)))
        }
        None => {
            println!("{}", text.trim_end_matches('\n'));
            Ok(())
        }
    }
}

// --- parse -------------------------------------------------------------------

fn cmd_parse(expr: Option<String>, relation: bool, format: Format) -> Result<ExitCode, CliError> {
    let json = format == Format::Json;
    let src = match expr {
        Some(e) => e,
        None => read_input(None, "expression").map_err(|e| e.with_json(json))?,
    };
    let rendered = if relation {
        let rel = nedtree_core::expr::parse_relation(&src)
            .map_err(|e| CliError::usage(e.to_string()).with_json(json))?;
        match format {
            Format::Json => serde_json::json!({
                "lhs": rel.lhs.to_json(),
                "relation": rel.relation.to_string(),
                "rhs": rel.rhs.to_json(),
            })
            .to_string(),
            Format::Text => rel.to_text(),
        }
    } else {
        let ast = nedtree_core::expr::parse_source(&src)
            .map_err(|e| CliError::usage(e.to_string()).with_json(json))?;
        match format {
            Format::Json => ast.to_json().to_string(),
            Format::Text => ast.to_text(),
        }
    };
    println!("{}", rendered);
    Ok(ExitCode::SUCCESS)
}

// --- decompose / check ----------------------------------------------------------

fn parse_params_flags(flags: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    let mut out = Vec::new();
    for flag in flags {
        for piece in flag.split(',').filter(|p| !p.trim().is_empty()) {
            let (name, value) = piece
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("bad parameter '{}', want name=value", piece)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad parameter value in '{}'", piece)))?;
            out.push((name.trim().to_string(), value));
        }
    }
    Ok(out)
}

fn parse_vars_flags(flags: &[String]) -> Result<Vec<VariableDecl>, CliError> {
    let mut out = Vec::new();
    for flag in flags {
        for piece in flag.split(',').filter(|p| !p.trim().is_empty()) {
            let mut parts = piece.split(':');
            let name = parts.next().unwrap().trim().to_string();
            let vartype = match parts.next().map(str::trim) {
                None | Some("") | Some("continuous") => VarType::Continuous,
                Some("integer") => VarType::Integer,
                Some("binary") => VarType::Binary,
                Some(other) => {
                    return Err(CliError::usage(format!("unknown variable type '{}'", other)))
                }
            };
            let (lower, upper) = match parts.next() {
                None => (f64::NEG_INFINITY, f64::INFINITY),
                Some(range) => {
                    let (lo, hi) = range
                        .split_once("..")
                        .ok_or_else(|| CliError::usage(format!("bad range in '{}', want lo..hi", piece)))?;
                    let lo = if lo.trim().is_empty() {
                        f64::NEG_INFINITY
                    } else {
                        lo.trim()
                            .parse()
                            .map_err(|_| CliError::usage(format!("bad lower bound in '{}'", piece)))?
                    };
                    let hi = if hi.trim().is_empty() {
                        f64::INFINITY
                    } else {
                        hi.trim()
                            .parse()
                            .map_err(|_| CliError::usage(format!("bad upper bound in '{}'", piece)))?
                    };
                    (lo, hi)
                }
            };
            out.push(
                VariableDecl::new(name, vartype, lower, upper)
                    .map_err(|e| CliError::usage(e.to_string()))?,
            );
        }
    }
    Ok(out)
}

fn build_registry(
    params: &[String],
    vars: &[String],
) -> Result<SymbolRegistry, CliError> {
    let mut reg = SymbolRegistry::new();
    for (name, value) in parse_params_flags(params)? {
        reg.add_scalar_param(name, value)
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    for decl in parse_vars_flags(vars)? {
        reg.add_var(decl).map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(reg)
}

fn cmd_decompose(
    expr: String,
    params: &[String],
    vars: &[String],
    format: Format,
) -> Result<ExitCode, CliError> {
    let json = format == Format::Json;
    let mut reg = build_registry(params, vars).map_err(|e| e.with_json(json))?;
    // A relation decomposes against zero; a bare expression directly.
    let rendered = match nedtree_core::expr::parse_relation(&expr) {
        Ok(rel) => {
            let dec = decompose_relation(&rel, &mut reg)
                .map_err(|e| CliError::pipeline(e.to_string()).with_json(json))?;
            match format {
                Format::Json => serde_json::to_string(&dec).unwrap(),
                Format::Text => format!(
                    "{}\n{} {} 0",
                    render_defs(&dec.defs),
                    dec.linear.to_text(),
                    dec.relation
                ),
            }
        }
        Err(nedtree_core::expr::ExprError::MissingRelation) => {
            let ast = nedtree_core::expr::parse_source(&expr)
                .map_err(|e| CliError::usage(e.to_string()).with_json(json))?;
            let result = decompose(&ast, &mut reg)
                .map_err(|e| CliError::pipeline(e.to_string()).with_json(json))?;
            match format {
                Format::Json => serde_json::to_string(&result).unwrap(),
                Format::Text => format!("{}\n{}", render_defs(&result.defs), result.linear.to_text()),
            }
        }
        Err(e) => return Err(CliError::usage(e.to_string()).with_json(json)),
    };
    println!("{}", rendered);
    Ok(ExitCode::SUCCESS)
}

fn render_defs(defs: &[nedtree_core::nedtree::AtomDef]) -> String {
    defs.iter()
        .map(|d| format!("{} = {}", d.aux, serde_json::to_string(&d.atom).unwrap()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmd_check(
    expr: String,
    params: &[String],
    vars: &[String],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ExitCode, CliError> {
    let mut reg = build_registry(params, vars).map_err(|e| e.with_json(true))?;
    let ast = nedtree_core::expr::parse_source(&expr)
        .map_err(|e| CliError::usage(e.to_string()).with_json(true))?;
    let result = decompose(&ast, &mut reg)
        .map_err(|e| CliError::pipeline(e.to_string()).with_json(true))?;
    let report = check_equivalence(&ast, &result, &reg, samples, seed, tol)
        .map_err(|e| CliError::pipeline(e.to_string()).with_json(true))?;
    println!("{}", serde_json::to_string(&report).unwrap());
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

// --- emit ---------------------------------------------------------------------

fn cmd_emit(
    backend: Option<String>,
    input: PathBuf,
    out: Option<PathBuf>,
    profile_path: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let text = read_input(Some(&input), "input document")?;
    let ir = if looks_like_ir(&text) {
        load_neutral(&text).map_err(|e| CliError::pipeline(e.to_string()))?
    } else {
        let doc: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::pipeline(format!("input is not JSON: {}", e)))?;
        let pool = load_pool_json(&doc).map_err(|e| CliError::pipeline(e.to_string()))?;
        pool.validate().map_err(|e| CliError::pipeline(e.to_string()))?;
        pool_to_ir(&pool).map_err(|e| CliError::pipeline(e.to_string()))?
    };
    let backend = backend.unwrap_or_else(|| "gurobi-python".to_string());
    let rendered = match backend.as_str() {
        "neutral-json" => emit_neutral(&ir),
        "gurobi-python" => {
            let profile = load_profile(profile_path, BackendProfile::gurobi_python())?;
            emit(&ir, &profile).map_err(|e| CliError::pipeline(e.to_string()))?
        }
        other => {
            // Any other backend needs an explicit profile file.
            let Some(path) = profile_path else {
                return Err(CliError::usage(format!(
                    "backend '{}' needs --profile <file>",
                    other
                )));
            };
            let profile = load_profile(Some(path), BackendProfile::gurobi_python())?;
            emit(&ir, &profile).map_err(|e| CliError::pipeline(e.to_string()))?
        }
    };
    write_output(out.as_ref(), &rendered)?;
    Ok(ExitCode::SUCCESS)
}

fn looks_like_ir(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .map(|v| v.get("ir_version").is_some())
        .unwrap_or(false)
}

fn load_profile(
    path: Option<PathBuf>,
    default: BackendProfile,
) -> Result<BackendProfile, CliError> {
    match path {
        None => Ok(default),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| CliError::usage(format!("cannot read profile {}: {}", p.display(), e)))?;
            BackendProfile::from_text(&text).map_err(|e| CliError::usage(e.to_string()))
        }
    }
}

// --- extract -------------------------------------------------------------------

fn make_client(
    kind: ClientKind,
    fixtures: Option<PathBuf>,
) -> Result<Box<dyn ModelClient>, CliError> {
    match kind {
        ClientKind::Stub => {
            let dir = fixtures
                .ok_or_else(|| CliError::usage("stub client needs --fixtures <dir>"))?;
            Ok(Box::new(StubClient::new(dir)))
        }
        ClientKind::Http => {
            let config = ModelClientConfig::from_env()
                .map_err(|e| CliError::usage(e.to_string()))?;
            Ok(Box::new(
                HttpClient::new(config).map_err(|e| CliError::usage(e.to_string()))?,
            ))
        }
    }
}

fn persist_transcripts(artifacts: Option<&PathBuf>, log: &[ExtractionTranscript]) {
    if let Some(dir) = artifacts {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(
                dir.join("transcripts.json"),
                serde_json::to_string_pretty(log).unwrap_or_default(),
            );
        }
    }
}

fn cmd_extract(
    problem: Option<PathBuf>,
    client_kind: ClientKind,
    fixtures: Option<PathBuf>,
    out: Option<PathBuf>,
    artifacts: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let problem_text = read_input(problem.as_ref(), "problem")?;
    let client = make_client(client_kind, fixtures)?;
    let mut log = Vec::new();
    let outcome = run_pipeline(&problem_text, client.as_ref(), &mut log);
    // Partial transcripts persist even when a stage fails.
    persist_transcripts(artifacts.as_ref(), &log);
    let outcome = outcome.map_err(|e| CliError::pipeline(e.to_string()))?;
    let pool_json = serde_json::to_string_pretty(&pool_to_json(&outcome.pool)).unwrap();
    write_output(out.as_ref(), &pool_json)?;
    for w in &outcome.pool.warnings {
        log::warn!("{}", w);
    }
    Ok(ExitCode::SUCCESS)
}

// --- bench ---------------------------------------------------------------------

struct BenchArgs {
    dataset: PathBuf,
    client: ClientKind,
    fixtures: Option<PathBuf>,
    backend: Option<String>,
    profile: Option<PathBuf>,
    execute: bool,
    repeats: usize,
    seed: u64,
    timeout_secs: u64,
    out: Option<PathBuf>,
    artifacts: Option<PathBuf>,
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    let dataset = load_dataset(&args.dataset).map_err(|e| CliError::pipeline(e.to_string()))?;
    let client = make_client(args.client, args.fixtures)?;
    let backend = args.backend.unwrap_or_else(|| "neutral-json".to_string());
    let executor: Box<dyn Executor> = match backend.as_str() {
        "neutral-json" => Box::new(NeutralExecutor),
        "gurobi-python" => Box::new(PythonExecutor::default()),
        other => {
            return Err(CliError::usage(format!(
                "unknown bench backend '{}' (use gurobi-python or neutral-json)",
                other
            )))
        }
    };
    let profile = load_profile(args.profile, BackendProfile::gurobi_python())?;
    let pipeline = BenchPipeline {
        client: client.as_ref(),
        profile: &profile,
        executor: executor.as_ref(),
    };
    let config = BenchConfig {
        repeats: args.repeats,
        seed: args.seed,
        execute: args.execute,
        timeout: Duration::from_secs(args.timeout_secs),
        artifact_dir: args.artifacts,
    };
    let result = run_bench(&dataset, &pipeline, &config);
    let rendered = serde_json::to_string_pretty(&result).unwrap();
    write_output(args.out.as_ref(), &rendered)?;
    log::info!(
        "accuracy mean {:.4} best {:.4}; pass rate mean {:.4} best {:.4}",
        result.accuracy_mean,
        result.accuracy_best,
        result.pass_rate_mean,
        result.pass_rate_best
    );
    Ok(ExitCode::SUCCESS)
}
