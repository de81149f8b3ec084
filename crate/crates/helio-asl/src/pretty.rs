//! Canonical pretty-printer. Output reparses to a structurally identical AST.

use std::fmt::Write;

use crate::ast::{AgentProgram, BodyStep, ContextAtom, ContextExpr, Plan, TriggerKind};
use crate::term::{Annotation, Literal, Term};

pub fn term_to_string(term: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, term, false);
    out
}

pub fn literal_to_string(lit: &Literal) -> String {
    let mut out = String::new();
    write_literal(&mut out, lit);
    out
}

pub fn program_to_string(program: &AgentProgram) -> String {
    let mut out = String::new();
    for belief in &program.initial_beliefs {
        write_literal(&mut out, belief);
        out.push_str(".\n");
    }
    if !program.initial_beliefs.is_empty() && !program.plans.is_empty() {
        out.push('\n');
    }
    for plan in &program.plans {
        write_plan(&mut out, plan);
        out.push('\n');
    }
    out
}

fn write_plan(out: &mut String, plan: &Plan) {
    let prefix = match plan.trigger.kind {
        TriggerKind::GoalAdd => "+!",
        TriggerKind::GoalDel => "-!",
        TriggerKind::BeliefAdd => "+",
        TriggerKind::BeliefDel => "-",
    };
    out.push_str(prefix);
    write_literal(out, &plan.trigger.pattern);
    if !plan.context.is_empty() {
        out.push_str(" : ");
        write_context(out, &plan.context);
    }
    if !plan.body.is_empty() {
        out.push_str(" <- ");
        for (i, step) in plan.body.iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            write_step(out, step);
        }
    }
    out.push('.');
}

fn write_context(out: &mut String, ctx: &ContextExpr) {
    for (i, atom) in ctx.0.iter().enumerate() {
        if i > 0 {
            out.push_str(" & ");
        }
        match atom {
            ContextAtom::Pattern(lit) => write_literal(out, lit),
            ContextAtom::Compare(lhs, op, rhs) => {
                write_term(out, lhs, false);
                let _ = write!(out, " {} ", op.symbol());
                write_term(out, rhs, false);
            }
        }
    }
}

fn write_step(out: &mut String, step: &BodyStep) {
    match step {
        BodyStep::Action { name, args } => {
            out.push_str(name);
            write_args(out, args);
        }
        BodyStep::SubGoal(goal) => {
            out.push('!');
            write_literal(out, goal);
        }
        BodyStep::Internal { kind, args } => {
            out.push_str(kind.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, arg, false);
            }
            out.push(')');
        }
        BodyStep::BeliefUpdate { op, literal } => {
            out.push(match op {
                crate::ast::BeliefOp::Add => '+',
                crate::ast::BeliefOp::Del => '-',
            });
            write_literal(out, literal);
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    if lit.negated {
        out.push('~');
    }
    out.push_str(&lit.functor);
    write_args(out, &lit.args);
    if !lit.annotations.is_empty() {
        out.push('[');
        for (i, ann) in lit.annotations.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_annotation(out, ann);
        }
        out.push(']');
    }
}

fn write_annotation(out: &mut String, ann: &Annotation) {
    out.push_str(&ann.functor);
    write_args(out, &ann.args);
}

fn write_args(out: &mut String, args: &[Term]) {
    if args.is_empty() {
        return;
    }
    out.push('(');
    for (i, arg) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_term(out, arg, false);
    }
    out.push(')');
}

// `nested` marks a right operand of +/-, which needs parentheses to keep
// left associativity through a reparse.
fn write_term(out: &mut String, term: &Term, nested: bool) {
    match term {
        Term::Atom(name) => out.push_str(name),
        Term::Number(v) => write_number(out, *v),
        Term::Str(s) => {
            out.push('"');
            for c in s.chars() {
                if c == '"' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
        Term::Var(name) => out.push_str(name),
        Term::Structure(op, args) if args.len() == 2 && (op == "+" || op == "-") => {
            if nested {
                out.push('(');
            }
            write_term(out, &args[0], false);
            let _ = write!(out, " {op} ");
            write_term(out, &args[1], true);
            if nested {
                out.push(')');
            }
        }
        Term::Structure(functor, args) => {
            out.push_str(functor);
            write_args(out, args);
        }
    }
}

fn write_number(out: &mut String, v: f64) {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        let _ = write!(out, "{}", v as i64);
    } else {
        let _ = write!(out, "{v}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    #[test]
    fn print_reparse_is_identity_on_sample() {
        let src = "e_meas_temperature(30)[persist(\"fram\")].\n\
                   transmit_power(8)[impact(101)].\n\
                   +!broadcast(A) : transmit_power(P)[impact(E)] & A > E <- start_ble_adv(P).\n\
                   +!t : e_available(A) & e_tendency(I) & I > 50 <- !broadcast(A - 50).\n\
                   +!t <- store_for_later_tx().";
        let first = parse_program(src).unwrap();
        let printed = program_to_string(&first);
        let second = parse_program(&printed).unwrap();
        assert_eq!(first, second, "printed form:\n{printed}");
    }

    #[test]
    fn integers_print_without_decimal_point() {
        let program = parse_program("x(30).").unwrap();
        assert_eq!(program_to_string(&program), "x(30).\n");
    }

    #[test]
    fn nested_arithmetic_keeps_associativity() {
        let src = "+!g : x(A) & A - (1 + 2) > 0 <- act().";
        let first = parse_program(src).unwrap();
        let printed = program_to_string(&first);
        let second = parse_program(&printed).unwrap();
        assert_eq!(first, second, "printed form:\n{printed}");
    }
}
