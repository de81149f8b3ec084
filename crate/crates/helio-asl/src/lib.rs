//! Agent-language frontend for the helio runtime.
//!
//! Parses an AgentSpeak-style language into a validated [`AgentProgram`]:
//! ground initial beliefs with `persist`/`impact` annotations, and plans
//! made of a triggering event, a context condition, and a body of actions,
//! subgoals, internal actions, and belief updates. Also provides first-order
//! matching ([`unify_literals`]) and context evaluation ([`eval_context`]),
//! the two primitives plan selection is built from.
//!
//! Everything here is a pure function over immutable values; nothing is
//! mutated after parse.

pub mod ast;
pub mod context;
pub mod error;
mod lexer;
pub mod parser;
pub mod pretty;
pub mod term;

pub use ast::{
    AgentProgram, BeliefOp, BodyStep, CmpOp, ContextAtom, ContextExpr, InternalActionKind, Plan,
    Trigger, TriggerKind,
};
pub use context::eval_context;
pub use error::{EvalError, ParseError};
pub use parser::{parse_literal, parse_program};
pub use pretty::{literal_to_string, program_to_string, term_to_string};
pub use term::{
    eval_number, resolve_arith, resolve_literal_arith, unify_literals, unify_terms, Annotation,
    Bindings, Literal, Term,
};
