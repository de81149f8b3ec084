use thiserror::Error;

/// Errors produced while parsing an agent program.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("semantic error at line {line}: {message}")]
    Semantic { line: u32, message: String },
}

impl ParseError {
    pub fn line(&self) -> u32 {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Semantic { line, .. } => *line,
        }
    }

    pub fn is_semantic(&self) -> bool {
        matches!(self, ParseError::Semantic { .. })
    }
}

/// Errors raised while evaluating context conditions or arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("comparison operand `{term}` is not a number")]
    NonNumericOperand { term: String },
    #[error("unbound variable `{name}` in arithmetic expression")]
    UnboundVariable { name: String },
}
