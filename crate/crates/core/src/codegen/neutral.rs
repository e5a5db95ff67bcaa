//! Backend-neutral JSON emission of the IR: canonical, schema-versioned,
//! byte-stable for identical input. Loading the emitted document restores
//! an equal IR.

use super::{CodegenError, SolverIR};

/// Canonical JSON document of the full IR (pretty-printed, stable key
/// order).
pub fn emit_neutral(ir: &SolverIR) -> String {
    let mut text = serde_json::to_string_pretty(ir).expect("IR serialization cannot fail");
    text.push('\n');
    text
}

/// Parses a neutral IR document.
pub fn load_neutral(text: &str) -> Result<SolverIR, CodegenError> {
    let ir: SolverIR =
        serde_json::from_str(text).map_err(|e| CodegenError::BadProfile(format!(
            "not a neutral IR document: {}",
            e
        )))?;
    if ir.ir_version != super::IR_VERSION {
        return Err(CodegenError::BadProfile(format!(
            "unsupported ir_version {}",
            ir.ir_version
        )));
    }
    Ok(ir)
}
