//! Terms, literals, annotations, and first-order matching.
//!
//! Terms are immutable symbolic values. Variables start with an uppercase
//! letter; atoms and functors start lowercase. Arithmetic over `+` and `-`
//! is represented as binary structures with those functors and folded to
//! numbers by [`eval_number`] / [`resolve_arith`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::EvalError;

/// A symbolic term.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Atom(String),
    Number(f64),
    Str(String),
    Var(String),
    Structure(String, Vec<Term>),
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    pub fn number(value: f64) -> Term {
        Term::Number(value)
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Structure(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Number(v) => Some(*v),
            _ => None,
        }
    }

    /// Name carried by an atom or string term, if any.
    pub fn as_name(&self) -> Option<&str> {
        match self {
            Term::Atom(s) | Term::Str(s) => Some(s),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Term::Atom(_) => 0,
            Term::Number(_) => 1,
            Term::Str(_) => 2,
            Term::Var(_) => 3,
            Term::Structure(..) => 4,
        }
    }
}

// Total order on terms, used for canonical serialization ordering.
impl Ord for Term {
    fn cmp(&self, other: &Term) -> Ordering {
        match (self, other) {
            (Term::Atom(a), Term::Atom(b)) => a.cmp(b),
            (Term::Number(a), Term::Number(b)) => a.total_cmp(b),
            (Term::Str(a), Term::Str(b)) => a.cmp(b),
            (Term::Var(a), Term::Var(b)) => a.cmp(b),
            (Term::Structure(f, a), Term::Structure(g, b)) => {
                f.cmp(g).then_with(|| a.len().cmp(&b.len())).then_with(|| a.cmp(b))
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Term) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Eq for Term {}

/// An annotation attached to a literal, e.g. `impact(101)` or `persist("fram")`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Annotation {
    pub functor: String,
    pub args: Vec<Term>,
}

impl Annotation {
    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> Annotation {
        Annotation { functor: functor.into(), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

/// An annotated literal, e.g. `transmit_power(8)[impact(101)]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    pub functor: String,
    pub args: Vec<Term>,
    pub annotations: Vec<Annotation>,
    pub negated: bool,
}

impl Literal {
    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> Literal {
        Literal { functor: functor.into(), args, annotations: Vec::new(), negated: false }
    }

    pub fn with_annotations(mut self, annotations: Vec<Annotation>) -> Literal {
        self.annotations = annotations;
        self
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground) && self.annotations.iter().all(Annotation::is_ground)
    }

    /// Functor/arity pair, the identity used for single-instance beliefs.
    pub fn indicator(&self) -> (&str, usize) {
        (&self.functor, self.args.len())
    }

    /// Looks up the first annotation with the given functor.
    pub fn annotation(&self, functor: &str) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.functor == functor)
    }

    /// Collects every variable name mentioned in args or annotations.
    pub fn variables(&self, out: &mut Vec<String>) {
        fn walk(t: &Term, out: &mut Vec<String>) {
            match t {
                Term::Var(v) => {
                    if !out.iter().any(|x| x == v) {
                        out.push(v.clone());
                    }
                }
                Term::Structure(_, args) => args.iter().for_each(|a| walk(a, out)),
                _ => {}
            }
        }
        self.args.iter().for_each(|a| walk(a, out));
        for ann in &self.annotations {
            ann.args.iter().for_each(|a| walk(a, out));
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::pretty::literal_to_string(self))
    }
}

/// A substitution from variable names to ground terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, Term>);

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.0.get(name)
    }

    pub fn bind(&mut self, name: impl Into<String>, term: Term) {
        self.0.insert(name.into(), term);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    /// Substitutes bound variables in `term`. Unbound variables stay as-is.
    pub fn resolve(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => self.get(v).cloned().unwrap_or_else(|| term.clone()),
            Term::Structure(f, args) => {
                Term::Structure(f.clone(), args.iter().map(|a| self.resolve(a)).collect())
            }
            _ => term.clone(),
        }
    }

    /// Substitutes bound variables throughout a literal.
    pub fn resolve_literal(&self, lit: &Literal) -> Literal {
        Literal {
            functor: lit.functor.clone(),
            args: lit.args.iter().map(|a| self.resolve(a)).collect(),
            annotations: lit
                .annotations
                .iter()
                .map(|ann| Annotation {
                    functor: ann.functor.clone(),
                    args: ann.args.iter().map(|a| self.resolve(a)).collect(),
                })
                .collect(),
            negated: lit.negated,
        }
    }
}

/// Unifies a (possibly variable-carrying) pattern term against a ground term.
///
/// Returns extended bindings on success. The ground side must not contain
/// variables; a variable there fails the match.
pub fn unify_terms(pattern: &Term, ground: &Term, bindings: &Bindings) -> Option<Bindings> {
    match (pattern, ground) {
        (Term::Var(v), g) => {
            if !g.is_ground() {
                return None;
            }
            match bindings.get(v) {
                Some(bound) => {
                    if bound == g {
                        Some(bindings.clone())
                    } else {
                        None
                    }
                }
                None => {
                    let mut b = bindings.clone();
                    b.bind(v.clone(), g.clone());
                    Some(b)
                }
            }
        }
        (Term::Atom(a), Term::Atom(b)) if a == b => Some(bindings.clone()),
        (Term::Number(a), Term::Number(b)) if a == b => Some(bindings.clone()),
        (Term::Str(a), Term::Str(b)) if a == b => Some(bindings.clone()),
        (Term::Structure(f, fa), Term::Structure(g, ga)) if f == g && fa.len() == ga.len() => {
            let mut b = bindings.clone();
            for (p, q) in fa.iter().zip(ga.iter()) {
                b = unify_terms(p, q, &b)?;
            }
            Some(b)
        }
        _ => None,
    }
}

/// Unifies a pattern literal against a ground literal.
///
/// Every annotation pattern must match some ground annotation; any one
/// matching annotation suffices, with backtracking across the candidates.
pub fn unify_literals(pattern: &Literal, ground: &Literal, bindings: &Bindings) -> Option<Bindings> {
    if pattern.functor != ground.functor
        || pattern.args.len() != ground.args.len()
        || pattern.negated != ground.negated
    {
        return None;
    }
    let mut b = bindings.clone();
    for (p, q) in pattern.args.iter().zip(ground.args.iter()) {
        b = unify_terms(p, q, &b)?;
    }
    match_annotations(&pattern.annotations, &ground.annotations, b)
}

fn match_annotations(
    patterns: &[Annotation],
    ground: &[Annotation],
    bindings: Bindings,
) -> Option<Bindings> {
    let Some((first, rest)) = patterns.split_first() else {
        return Some(bindings);
    };
    for candidate in ground {
        if candidate.functor != first.functor || candidate.args.len() != first.args.len() {
            continue;
        }
        let mut b = Some(bindings.clone());
        for (p, q) in first.args.iter().zip(candidate.args.iter()) {
            b = b.and_then(|b| unify_terms(p, q, &b));
        }
        if let Some(b) = b {
            if let Some(done) = match_annotations(rest, ground, b) {
                return Some(done);
            }
        }
    }
    None
}

/// Evaluates a term to a number under the given bindings.
///
/// `+` and `-` binary structures fold arithmetically; anything else that is
/// not a number is a type error.
pub fn eval_number(term: &Term, bindings: &Bindings) -> Result<f64, EvalError> {
    match term {
        Term::Number(v) => Ok(*v),
        Term::Var(v) => match bindings.get(v) {
            Some(bound) => eval_number(bound, bindings),
            None => Err(EvalError::UnboundVariable { name: v.clone() }),
        },
        Term::Structure(op, args) if args.len() == 2 && (op == "+" || op == "-") => {
            let lhs = eval_number(&args[0], bindings)?;
            let rhs = eval_number(&args[1], bindings)?;
            Ok(if op == "+" { lhs + rhs } else { lhs - rhs })
        }
        other => Err(EvalError::NonNumericOperand {
            term: crate::pretty::term_to_string(other),
        }),
    }
}

/// Resolves bindings and folds arithmetic structures to plain numbers.
///
/// Used when instantiating plan-body arguments: `broadcast(A - 50)` with
/// `A -> 200` becomes `broadcast(150)`.
pub fn resolve_arith(term: &Term, bindings: &Bindings) -> Result<Term, EvalError> {
    let resolved = bindings.resolve(term);
    match &resolved {
        Term::Structure(op, args) if args.len() == 2 && (op == "+" || op == "-") => {
            Ok(Term::Number(eval_number(&resolved, bindings)?))
        }
        Term::Structure(f, args) => {
            let folded: Result<Vec<Term>, EvalError> =
                args.iter().map(|a| resolve_arith(a, bindings)).collect();
            Ok(Term::Structure(f.clone(), folded?))
        }
        _ => Ok(resolved),
    }
}

/// Resolves and arithmetic-folds an entire literal.
pub fn resolve_literal_arith(lit: &Literal, bindings: &Bindings) -> Result<Literal, EvalError> {
    let args: Result<Vec<Term>, EvalError> =
        lit.args.iter().map(|a| resolve_arith(a, bindings)).collect();
    let annotations: Result<Vec<Annotation>, EvalError> = lit
        .annotations
        .iter()
        .map(|ann| {
            let args: Result<Vec<Term>, EvalError> =
                ann.args.iter().map(|a| resolve_arith(a, bindings)).collect();
            Ok(Annotation { functor: ann.functor.clone(), args: args? })
        })
        .collect();
    Ok(Literal {
        functor: lit.functor.clone(),
        args: args?,
        annotations: annotations?,
        negated: lit.negated,
    })
}
