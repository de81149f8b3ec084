//! Context-condition evaluation against an ordered belief enumeration.

use crate::ast::{ContextAtom, ContextExpr};
use crate::error::EvalError;
use crate::term::{eval_number, unify_literals, Bindings, Literal};

/// Evaluates a context condition left to right against `beliefs`.
///
/// Literal patterns enumerate matching beliefs in the given order, with
/// backtracking across alternatives; comparisons evaluate under the current
/// bindings and offer no choice points. Returns the first satisfying
/// substitution, or `None` when the conjunction cannot be satisfied.
///
/// The belief order is the caller's enumeration order, so evaluation is
/// deterministic for a fixed belief base.
pub fn eval_context(
    ctx: &ContextExpr,
    beliefs: &[&Literal],
    initial: &Bindings,
) -> Result<Option<Bindings>, EvalError> {
    solve(&ctx.0, beliefs, initial.clone())
}

fn solve(
    atoms: &[ContextAtom],
    beliefs: &[&Literal],
    bindings: Bindings,
) -> Result<Option<Bindings>, EvalError> {
    let Some((first, rest)) = atoms.split_first() else {
        return Ok(Some(bindings));
    };
    match first {
        ContextAtom::Pattern(pattern) => {
            for belief in beliefs {
                if let Some(extended) = unify_literals(pattern, belief, &bindings) {
                    if let Some(solution) = solve(rest, beliefs, extended)? {
                        return Ok(Some(solution));
                    }
                }
            }
            Ok(None)
        }
        ContextAtom::Compare(lhs, op, rhs) => {
            let l = eval_number(lhs, &bindings)?;
            let r = eval_number(rhs, &bindings)?;
            if op.holds(l, r) {
                solve(rest, beliefs, bindings)
            } else {
                Ok(None)
            }
        }
    }
}
