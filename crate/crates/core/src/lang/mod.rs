//! The block language: program model, canonical file format, storage and the
//! interpreter.

mod interp;
mod program;
mod store;

pub use interp::{
    ExecEvent, ExecStatus, Execution, ExecutionState, RunError, RuntimeParams, SwarmPort, CONFIRM_BLOCK_ID,
    MAX_CALL_DEPTH,
};
pub use program::{
    is_identifier, parse, parse_value, serialize, Block, BlockKind, BlockProgram, CompareOp, Condition, Operand, Param,
    PROGRAM_VERSION,
};
pub use store::{is_valid_name, ProgramStore, PROGRAM_EXTENSION};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error at {path}{}: {message}", block_id.as_ref().map(|id| format!(" (block `{id}`)")).unwrap_or_default())]
    Schema {
        block_id: Option<String>,
        path: String,
        message: String,
    },
    #[error("invalid program name `{0}` (expected [A-Za-z0-9_-]{{1,64}})")]
    InvalidName(String),
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("program `{0}` not found")]
    NotFound(String),
}

impl LangError {
    pub(crate) fn schema(block_id: Option<&str>, path: &str, message: impl Into<String>) -> Self {
        LangError::Schema {
            block_id: block_id.map(str::to_string),
            path: path.to_string(),
            message: message.into(),
        }
    }
}
