//! Pluggable execution of emitted model artifacts. Two executors ship: a
//! sandboxed Python subprocess for solver-backed source, and a native
//! reference solver that executes neutral IR documents for purely linear
//! models (simplex with branching for integer variables).

use std::io::Read;
use std::time::{Duration, Instant};

use crate::codegen::{load_neutral, SolverIR};
use crate::elements::Sense;
use crate::expr::RelOp;
use crate::registry::VarType;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecutorError {
    #[error("executor unavailable: {0}")]
    Unavailable(String),
    #[error("execution i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionOutcome {
    pub exit_ok: bool,
    pub stdout: String,
    pub stderr: String,
}

/// Which emitted artifact an executor consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    PythonSource,
    NeutralIr,
}

pub trait Executor: Send + Sync {
    fn name(&self) -> &str;
    fn artifact(&self) -> ArtifactKind;
    /// `Err(reason)` when the executor cannot run at all (e.g. solver not
    /// installed).
    fn availability(&self) -> Result<(), String>;
    fn execute(&self, source: &str, timeout: Duration)
        -> Result<ExecutionOutcome, ExecutorError>;
}

/// Runs emitted Python source through `python3` in a subprocess with a
/// timeout, requiring `gurobipy` to be importable.
pub struct PythonExecutor {
    pub interpreter: String,
    pub required_module: String,
}

impl Default for PythonExecutor {
    fn default() -> Self {
        PythonExecutor {
            interpreter: "python3".to_string(),
            required_module: "gurobipy".to_string(),
        }
    }
}

impl Executor for PythonExecutor {
    fn name(&self) -> &str {
        "python-subprocess"
    }

    fn artifact(&self) -> ArtifactKind {
        ArtifactKind::PythonSource
    }

    fn availability(&self) -> Result<(), String> {
        let status = std::process::Command::new(&self.interpreter)
            .arg("-c")
            .arg(format!("import {}", self.required_module))
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status();
        match status {
            Ok(s) if s.success() => Ok(()),
            Ok(_) => Err(format!("module '{}' not importable", self.required_module)),
            Err(e) => Err(format!("interpreter '{}' not runnable: {}", self.interpreter, e)),
        }
    }

    fn execute(
        &self,
        source: &str,
        timeout: Duration,
    ) -> Result<ExecutionOutcome, ExecutorError> {
        self.availability().map_err(ExecutorError::Unavailable)?;
        let dir = std::env::temp_dir();
        let path = dir.join(format!(
            "nedtree_model_{}_{}.py",
            std::process::id(),
            Instant::now().elapsed().as_nanos()
        ));
        std::fs::write(&path, source).map_err(|e| ExecutorError::Io(e.to_string()))?;
        let result = run_with_timeout(&self.interpreter, &path, timeout);
        let _ = std::fs::remove_file(&path);
        result
    }
}

fn run_with_timeout(
    interpreter: &str,
    path: &std::path::Path,
    timeout: Duration,
) -> Result<ExecutionOutcome, ExecutorError> {
    let mut child = std::process::Command::new(interpreter)
        .arg(path)
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .map_err(|e| ExecutorError::Io(e.to_string()))?;

    let mut stdout_pipe = child.stdout.take().expect("stdout piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let out_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let err_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let exit_ok = loop {
        match child.try_wait().map_err(|e| ExecutorError::Io(e.to_string()))? {
            Some(status) => break status.success(),
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break false;
            }
            None => std::thread::sleep(Duration::from_millis(20)),
        }
    };
    let stdout = out_thread.join().unwrap_or_default();
    let stderr = err_thread.join().unwrap_or_default();
    Ok(ExecutionOutcome {
        exit_ok,
        stdout,
        stderr,
    })
}

/// Reference executor for neutral IR documents: solves purely linear models
/// (bounds, linear constraints, indicator-free) natively. Strict relations
/// are closed by a 1e-6 shift, matching the default backend epsilon.
#[derive(Debug, Default, Clone)]
pub struct NeutralExecutor;

const STRICT_EPS: f64 = 1e-6;

impl Executor for NeutralExecutor {
    fn name(&self) -> &str {
        "neutral-reference"
    }

    fn artifact(&self) -> ArtifactKind {
        ArtifactKind::NeutralIr
    }

    fn availability(&self) -> Result<(), String> {
        Ok(())
    }

    fn execute(
        &self,
        source: &str,
        _timeout: Duration,
    ) -> Result<ExecutionOutcome, ExecutorError> {
        let ir = match load_neutral(source) {
            Ok(ir) => ir,
            Err(e) => {
                return Ok(ExecutionOutcome {
                    exit_ok: false,
                    stdout: String::new(),
                    stderr: format!("not a neutral IR document: {}", e),
                })
            }
        };
        match solve_linear_ir(&ir) {
            Ok(Some(objective)) => Ok(ExecutionOutcome {
                exit_ok: true,
                stdout: format!("OBJECTIVE: {}\n", objective),
                stderr: String::new(),
            }),
            Ok(None) => Ok(ExecutionOutcome {
                exit_ok: true,
                stdout: "STATUS: infeasible-or-unbounded\n".to_string(),
                stderr: String::new(),
            }),
            Err(reason) => Ok(ExecutionOutcome {
                exit_ok: false,
                stdout: String::new(),
                stderr: reason,
            }),
        }
    }
}

/// Builds and solves the model when it is purely linear; `Err` for
/// unsupported structure, `Ok(None)` for infeasible/unbounded.
fn solve_linear_ir(ir: &SolverIR) -> Result<Option<f64>, String> {
    if !ir.general_atoms.is_empty()
        || !ir.quadratic_equalities.is_empty()
        || !ir.div_equalities.is_empty()
        || !ir.indicators.is_empty()
    {
        return Err("reference executor only solves purely linear models".to_string());
    }
    let direction = match ir.objective.sense {
        Sense::Min => microlp::OptimizationDirection::Minimize,
        Sense::Max => microlp::OptimizationDirection::Maximize,
    };
    let mut problem = microlp::Problem::new(direction);
    let mut vars: std::collections::BTreeMap<&str, microlp::Variable> =
        std::collections::BTreeMap::new();
    for decl in &ir.variables {
        let obj = ir
            .objective
            .linear
            .terms
            .get(&decl.name)
            .copied()
            .unwrap_or(0.0);
        let var = match decl.vartype {
            VarType::Continuous => problem.add_var(obj, (decl.lower, decl.upper)),
            VarType::Binary => problem.add_integer_var(obj, (0, 1)),
            VarType::Integer => {
                let lo = clamp_int(decl.lower);
                let hi = clamp_int(decl.upper);
                problem.add_integer_var(obj, (lo, hi))
            }
        };
        vars.insert(decl.name.as_str(), var);
    }
    for c in &ir.linear_constraints {
        let mut expr = microlp::LinearExpr::empty();
        for (name, coeff) in &c.linear.terms {
            let var = vars
                .get(name.as_str())
                .ok_or_else(|| format!("constraint references undeclared '{}'", name))?;
            expr.add(*var, *coeff);
        }
        // form + const <rel> 0  ⇒  Σ coeff·x <rel> -const (strict shifted).
        let mut rhs = -c.linear.constant;
        let op = match c.relation.op {
            RelOp::Le => {
                if c.relation.strict {
                    rhs -= STRICT_EPS;
                }
                microlp::ComparisonOp::Le
            }
            RelOp::Ge => {
                if c.relation.strict {
                    rhs += STRICT_EPS;
                }
                microlp::ComparisonOp::Ge
            }
            RelOp::Eq => microlp::ComparisonOp::Eq,
        };
        problem.add_constraint(expr, op, rhs);
    }
    match problem.solve() {
        Ok(solution) => Ok(Some(solution.objective() + ir.objective.linear.constant)),
        Err(microlp::Error::Infeasible) | Err(microlp::Error::Unbounded) => Ok(None),
        Err(e) => Err(format!("reference solve failed: {}", e)),
    }
}

fn clamp_int(v: f64) -> i32 {
    if v <= i32::MIN as f64 {
        i32::MIN / 2
    } else if v >= i32::MAX as f64 {
        i32::MAX / 2
    } else {
        v as i32
    }
}

/// Extracts the `OBJECTIVE: <value>` line from captured stdout.
pub fn parse_objective_line(stdout: &str) -> Option<f64> {
    for line in stdout.lines() {
        if let Some(rest) = line.trim().strip_prefix("OBJECTIVE:") {
            if let Ok(v) = rest.trim().parse::<f64>() {
                if v.is_finite() {
                    return Some(v);
                }
            }
        }
    }
    None
}
