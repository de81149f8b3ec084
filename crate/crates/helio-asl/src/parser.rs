//! Recursive-descent parser for the agent-program language.
//!
//! Grammar (comments stripped by the lexer):
//!
//! ```text
//! program    := (belief | plan)*
//! belief     := literal "."
//! plan       := trigger (":" context)? ("<-" body)? "."
//! trigger    := ("+" | "-") "!"? literal
//! context    := ctx_atom ("&" ctx_atom)*
//! ctx_atom   := literal | arith cmp arith
//! cmp        := ">" | "<" | ">=" | "<=" | "==" | "\=="
//! body       := step (";" step)*
//! step       := "!" literal | "+" literal | "-" literal | ident ("(" args ")")?
//! literal    := "~"? ident ("(" args ")")? ("[" annot ("," annot)* "]")?
//! annot      := ident ("(" args ")")?
//! args       := arith ("," arith)*
//! arith      := prim (("+" | "-") prim)*
//! prim       := number | "-" number | var | string | ident ("(" args ")")? | "(" arith ")"
//! ```

use crate::ast::{
    AgentProgram, BeliefOp, BodyStep, CmpOp, ContextAtom, ContextExpr, InternalActionKind, Plan,
    Trigger, TriggerKind,
};
use crate::error::ParseError;
use crate::lexer::{tokenize, Token, TokenKind};
use crate::term::{Annotation, Literal, Term};

/// Parses an agent program from source text.
pub fn parse_program(source: &str) -> Result<AgentProgram, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    parser.program()
}

/// Parses a single literal, e.g. `transmit_power(P)[impact(E)]`.
pub fn parse_literal(source: &str) -> Result<Literal, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let lit = parser.literal()?;
    parser.expect_eof()?;
    Ok(lit)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn check(&self, kind: &TokenKind) -> bool {
        std::mem::discriminant(&self.current().kind) == std::mem::discriminant(kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let tok = self.current();
        ParseError::Syntax { line: tok.line, col: tok.col, message: message.into() }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Token, ParseError> {
        if self.check(kind) {
            Ok(self.advance())
        } else {
            Err(self.error(format!("expected {what}, found {}", self.current().kind.describe())))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.check(&TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {}", self.current().kind.describe())))
        }
    }

    fn program(&mut self) -> Result<AgentProgram, ParseError> {
        let mut program = AgentProgram::default();
        while !self.check(&TokenKind::Eof) {
            match &self.current().kind {
                TokenKind::Plus | TokenKind::Minus => {
                    let plan = self.plan(program.plans.len())?;
                    program.plans.push(plan);
                }
                TokenKind::Ident(_) | TokenKind::Tilde => {
                    let line = self.current().line;
                    let lit = self.literal()?;
                    self.expect(&TokenKind::Dot, "`.` after belief")?;
                    validate_initial_belief(&lit, line)?;
                    program.initial_beliefs.push(lit);
                }
                other => {
                    return Err(self.error(format!(
                        "expected belief or plan, found {}",
                        other.describe()
                    )));
                }
            }
        }
        Ok(program)
    }

    fn plan(&mut self, declaration_index: usize) -> Result<Plan, ParseError> {
        let source_line = self.current().line;
        let positive = match &self.advance().kind {
            TokenKind::Plus => true,
            TokenKind::Minus => false,
            _ => unreachable!("plan() called on non-trigger token"),
        };
        let goal = self.eat(&TokenKind::Bang);
        let kind = match (positive, goal) {
            (true, true) => TriggerKind::GoalAdd,
            (false, true) => TriggerKind::GoalDel,
            (true, false) => TriggerKind::BeliefAdd,
            (false, false) => TriggerKind::BeliefDel,
        };
        let pattern = self.literal()?;
        let trigger = Trigger { kind, pattern };

        let context = if self.eat(&TokenKind::Colon) {
            self.context()?
        } else {
            ContextExpr::default()
        };

        let body = if self.eat(&TokenKind::Arrow) {
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(&TokenKind::Dot, "`.` after plan")?;

        let plan = Plan { trigger, context, body, declaration_index, source_line };
        validate_plan(&plan)?;
        Ok(plan)
    }

    fn context(&mut self) -> Result<ContextExpr, ParseError> {
        let mut atoms = vec![self.context_atom()?];
        while self.eat(&TokenKind::Amp) {
            atoms.push(self.context_atom()?);
        }
        Ok(ContextExpr(atoms))
    }

    fn context_atom(&mut self) -> Result<ContextAtom, ParseError> {
        match &self.current().kind {
            TokenKind::Ident(_) | TokenKind::Tilde => {
                let lit = self.literal()?;
                Ok(ContextAtom::Pattern(lit))
            }
            _ => {
                let lhs = self.arith()?;
                let op = self.cmp_op()?;
                let rhs = self.arith()?;
                Ok(ContextAtom::Compare(lhs, op, rhs))
            }
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp, ParseError> {
        let op = match &self.current().kind {
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::Ge => CmpOp::Ge,
            TokenKind::Le => CmpOp::Le,
            TokenKind::EqEq => CmpOp::Eq,
            TokenKind::NeqEq => CmpOp::Neq,
            other => {
                return Err(self.error(format!(
                    "expected comparison operator, found {}",
                    other.describe()
                )));
            }
        };
        self.advance();
        Ok(op)
    }

    fn body(&mut self) -> Result<Vec<BodyStep>, ParseError> {
        let mut steps = vec![self.body_step()?];
        while self.eat(&TokenKind::Semi) {
            steps.push(self.body_step()?);
        }
        Ok(steps)
    }

    fn body_step(&mut self) -> Result<BodyStep, ParseError> {
        match &self.current().kind {
            TokenKind::Bang => {
                self.advance();
                Ok(BodyStep::SubGoal(self.literal()?))
            }
            TokenKind::Plus => {
                self.advance();
                Ok(BodyStep::BeliefUpdate { op: BeliefOp::Add, literal: self.literal()? })
            }
            TokenKind::Minus => {
                self.advance();
                Ok(BodyStep::BeliefUpdate { op: BeliefOp::Del, literal: self.literal()? })
            }
            TokenKind::Ident(_) => {
                let line = self.current().line;
                let name = match self.advance().kind {
                    TokenKind::Ident(s) => s,
                    _ => unreachable!(),
                };
                let args = if self.eat(&TokenKind::LParen) {
                    self.arg_list()?
                } else {
                    Vec::new()
                };
                match InternalActionKind::from_name(&name) {
                    Some(kind) => {
                        validate_internal_action(kind, &args, line)?;
                        Ok(BodyStep::Internal { kind, args })
                    }
                    None => Ok(BodyStep::Action { name, args }),
                }
            }
            other => Err(self.error(format!("expected body step, found {}", other.describe()))),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let negated = self.eat(&TokenKind::Tilde);
        let functor = match &self.current().kind {
            TokenKind::Ident(_) => match self.advance().kind {
                TokenKind::Ident(s) => s,
                _ => unreachable!(),
            },
            other => {
                return Err(self.error(format!("expected functor, found {}", other.describe())));
            }
        };
        let args = if self.eat(&TokenKind::LParen) { self.arg_list()? } else { Vec::new() };
        let annotations = if self.eat(&TokenKind::LBracket) {
            let mut anns = vec![self.annotation()?];
            while self.eat(&TokenKind::Comma) {
                anns.push(self.annotation()?);
            }
            self.expect(&TokenKind::RBracket, "`]` after annotations")?;
            anns
        } else {
            Vec::new()
        };
        Ok(Literal { functor, args, annotations, negated })
    }

    fn annotation(&mut self) -> Result<Annotation, ParseError> {
        let functor = match &self.current().kind {
            TokenKind::Ident(_) => match self.advance().kind {
                TokenKind::Ident(s) => s,
                _ => unreachable!(),
            },
            other => {
                return Err(self.error(format!(
                    "expected annotation functor, found {}",
                    other.describe()
                )));
            }
        };
        let args = if self.eat(&TokenKind::LParen) { self.arg_list()? } else { Vec::new() };
        Ok(Annotation { functor, args })
    }

    fn arg_list(&mut self) -> Result<Vec<Term>, ParseError> {
        if self.eat(&TokenKind::RParen) {
            return Ok(Vec::new());
        }
        let mut args = vec![self.arith()?];
        while self.eat(&TokenKind::Comma) {
            args.push(self.arith()?);
        }
        self.expect(&TokenKind::RParen, "`)` after arguments")?;
        Ok(args)
    }

    fn arith(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match &self.current().kind {
                TokenKind::Plus => "+",
                TokenKind::Minus => "-",
                _ => break,
            };
            self.advance();
            let rhs = self.primary()?;
            lhs = Term::Structure(op.to_string(), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.current().kind.clone() {
            TokenKind::Number(v) => {
                self.advance();
                Ok(Term::Number(v))
            }
            TokenKind::Minus => {
                self.advance();
                match self.current().kind.clone() {
                    TokenKind::Number(v) => {
                        self.advance();
                        Ok(Term::Number(-v))
                    }
                    other => Err(self.error(format!(
                        "expected number after unary `-`, found {}",
                        other.describe()
                    ))),
                }
            }
            TokenKind::Var(name) => {
                self.advance();
                Ok(Term::Var(name))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Term::Str(s))
            }
            TokenKind::Ident(name) => {
                self.advance();
                if self.eat(&TokenKind::LParen) {
                    let args = self.arg_list()?;
                    if args.is_empty() {
                        Ok(Term::Atom(name))
                    } else {
                        Ok(Term::Structure(name, args))
                    }
                } else {
                    Ok(Term::Atom(name))
                }
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.arith()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(self.error(format!("expected term, found {}", other.describe()))),
        }
    }
}

fn semantic(line: u32, message: impl Into<String>) -> ParseError {
    ParseError::Semantic { line, message: message.into() }
}

/// Initial beliefs must be ground; recognized annotations must be well-formed.
fn validate_initial_belief(lit: &Literal, line: u32) -> Result<(), ParseError> {
    if !lit.is_ground() {
        return Err(semantic(line, format!("initial belief `{}` is not ground", lit.functor)));
    }
    for ann in &lit.annotations {
        validate_recognized_annotation(ann, line)?;
    }
    Ok(())
}

/// `persist` takes one of none/fram/flash; `impact` takes one non-negative
/// number. Unrecognized annotation functors are inert and pass through.
fn validate_recognized_annotation(ann: &Annotation, line: u32) -> Result<(), ParseError> {
    match ann.functor.as_str() {
        "persist" => {
            let arg_ok = ann.args.len() == 1
                && matches!(
                    ann.args[0].as_name(),
                    Some("none") | Some("fram") | Some("flash")
                );
            if !arg_ok {
                return Err(semantic(
                    line,
                    "persist annotation requires exactly one of none, fram, flash",
                ));
            }
        }
        "impact" => {
            let arg_ok =
                ann.args.len() == 1 && ann.args[0].as_number().is_some_and(|v| v >= 0.0);
            if !arg_ok {
                return Err(semantic(
                    line,
                    "impact annotation requires exactly one non-negative number",
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

fn validate_internal_action(
    kind: InternalActionKind,
    args: &[Term],
    line: u32,
) -> Result<(), ParseError> {
    match kind {
        InternalActionKind::UpdateEstimate => {
            let ok = args.len() == 1
                && args[0].as_name().is_some_and(|name| name.starts_with("e_"));
            if !ok {
                return Err(semantic(
                    line,
                    "update_estimate takes exactly one atom or string naming an e_-prefixed belief",
                ));
            }
        }
        InternalActionKind::EnergyCheckpoint | InternalActionKind::DeepSleep => {
            if !args.is_empty() {
                return Err(semantic(line, format!("{} takes no arguments", kind.name())));
            }
        }
    }
    Ok(())
}

/// Every variable used in a comparison must be bound earlier, either by the
/// trigger pattern or by a preceding context pattern (including annotation
/// patterns).
fn validate_plan(plan: &Plan) -> Result<(), ParseError> {
    let mut bound: Vec<String> = Vec::new();
    plan.trigger.pattern.variables(&mut bound);
    for atom in &plan.context.0 {
        match atom {
            ContextAtom::Pattern(lit) => lit.variables(&mut bound),
            ContextAtom::Compare(lhs, op, rhs) => {
                let _ = op;
                for side in [lhs, rhs] {
                    let mut vars = Vec::new();
                    collect_term_vars(side, &mut vars);
                    for v in vars {
                        if !bound.contains(&v) {
                            return Err(semantic(
                                plan.source_line,
                                format!("variable `{v}` used in comparison before being bound"),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn collect_term_vars(term: &Term, out: &mut Vec<String>) {
    match term {
        Term::Var(v) => {
            if !out.iter().any(|x| x == v) {
                out.push(v.clone());
            }
        }
        Term::Structure(_, args) => args.iter().for_each(|a| collect_term_vars(a, out)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program_parses() {
        let program = parse_program("b(1).").unwrap();
        assert_eq!(program.initial_beliefs.len(), 1);
        assert_eq!(program.plans.len(), 0);
    }

    #[test]
    fn non_ground_initial_belief_rejected() {
        let err = parse_program("b(X).").unwrap_err();
        assert!(err.is_semantic(), "{err}");
    }

    #[test]
    fn unbound_comparison_variable_rejected() {
        let err = parse_program("+!g: x(A) & B > 1 <- act().").unwrap_err();
        assert!(err.is_semantic(), "{err}");
        assert!(err.to_string().contains('B'), "{err}");
    }

    #[test]
    fn trigger_variables_bind_comparisons() {
        // A is bound by the trigger pattern, not the context.
        let program = parse_program("+!broadcast(A): transmit_power(P)[impact(E)] & A > E <- start_ble_adv(P).").unwrap();
        assert_eq!(program.plans.len(), 1);
    }

    #[test]
    fn plan_without_context_or_body() {
        let program = parse_program("+!g <- act().\n+x(1).").unwrap();
        assert_eq!(program.plans.len(), 2);
        assert!(program.plans[0].context.is_empty());
        assert!(program.plans[1].body.is_empty());
        assert_eq!(program.plans[1].trigger.kind, TriggerKind::BeliefAdd);
    }

    #[test]
    fn internal_actions_are_recognized() {
        let program =
            parse_program("+!g <- energy_checkpoint(); update_estimate(\"e_x\"); deep_sleep().")
                .unwrap();
        let body = &program.plans[0].body;
        assert!(matches!(
            body[0],
            BodyStep::Internal { kind: InternalActionKind::EnergyCheckpoint, .. }
        ));
        assert!(matches!(
            body[1],
            BodyStep::Internal { kind: InternalActionKind::UpdateEstimate, .. }
        ));
        assert!(matches!(
            body[2],
            BodyStep::Internal { kind: InternalActionKind::DeepSleep, .. }
        ));
    }

    #[test]
    fn update_estimate_arg_must_name_estimate_belief() {
        let err = parse_program("+!g <- update_estimate(\"meas\").").unwrap_err();
        assert!(err.is_semantic(), "{err}");
        let err = parse_program("+!g <- update_estimate().").unwrap_err();
        assert!(err.is_semantic(), "{err}");
    }

    #[test]
    fn persist_annotation_arg_checked() {
        assert!(parse_program("x(1)[persist(\"fram\")].").is_ok());
        assert!(parse_program("x(1)[persist(flash)].").is_ok());
        let err = parse_program("x(1)[persist(\"disk\")].").unwrap_err();
        assert!(err.is_semantic(), "{err}");
    }

    #[test]
    fn impact_annotation_arg_checked() {
        let err = parse_program("x(1)[impact(high)].").unwrap_err();
        assert!(err.is_semantic(), "{err}");
    }

    #[test]
    fn unrecognized_annotations_are_inert() {
        let program = parse_program("x(1)[source(sensor)].").unwrap();
        assert_eq!(program.initial_beliefs[0].annotations[0].functor, "source");
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_program("b(1.\nc(2).").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn subgoal_args_keep_arithmetic() {
        let program = parse_program("+!t: e_available(A) <- !broadcast(A - 50).").unwrap();
        match &program.plans[0].body[0] {
            BodyStep::SubGoal(goal) => match &goal.args[0] {
                Term::Structure(op, args) => {
                    assert_eq!(op, "-");
                    assert_eq!(args[0], Term::var("A"));
                    assert_eq!(args[1], Term::Number(50.0));
                }
                other => panic!("expected arithmetic structure, got {other:?}"),
            },
            other => panic!("expected subgoal, got {other:?}"),
        }
    }
}
