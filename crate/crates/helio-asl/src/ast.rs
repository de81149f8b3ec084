//! Agent program AST: plans, triggers, context conditions, and body steps.

use crate::term::{Literal, Term};

/// What kind of event a plan reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerKind {
    GoalAdd,
    GoalDel,
    BeliefAdd,
    BeliefDel,
}

impl TriggerKind {
    pub fn is_goal(self) -> bool {
        matches!(self, TriggerKind::GoalAdd | TriggerKind::GoalDel)
    }
}

/// A plan's triggering event: kind plus a literal pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Trigger {
    pub kind: TriggerKind,
    pub pattern: Literal,
}

/// Relational operators usable in context conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Neq,
}

impl CmpOp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Gt => lhs > rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Neq => lhs != rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Neq => "\\==",
        }
    }
}

/// One conjunct of a context condition.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextAtom {
    /// A belief pattern, matched against the belief base with backtracking.
    Pattern(Literal),
    /// A relational comparison over arithmetic expressions.
    Compare(Term, CmpOp, Term),
}

/// A conjunction of context atoms. Empty means always true.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContextExpr(pub Vec<ContextAtom>);

impl ContextExpr {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Built-in internal actions understood by the runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InternalActionKind {
    EnergyCheckpoint,
    UpdateEstimate,
    DeepSleep,
}

impl InternalActionKind {
    pub fn from_name(name: &str) -> Option<InternalActionKind> {
        match name {
            "energy_checkpoint" => Some(InternalActionKind::EnergyCheckpoint),
            "update_estimate" => Some(InternalActionKind::UpdateEstimate),
            "deep_sleep" => Some(InternalActionKind::DeepSleep),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InternalActionKind::EnergyCheckpoint => "energy_checkpoint",
            InternalActionKind::UpdateEstimate => "update_estimate",
            InternalActionKind::DeepSleep => "deep_sleep",
        }
    }
}

/// Whether a body-step belief update adds or removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefOp {
    Add,
    Del,
}

/// One step of a plan body.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyStep {
    /// External action executed against the platform, e.g. `read_trh_sensor()`.
    Action { name: String, args: Vec<Term> },
    /// Subgoal posting, e.g. `!transmit_data`.
    SubGoal(Literal),
    /// Runtime-internal action, e.g. `energy_checkpoint()`.
    Internal { kind: InternalActionKind, args: Vec<Term> },
    /// Belief base update from the plan body, e.g. `+seen(5)`.
    BeliefUpdate { op: BeliefOp, literal: Literal },
}

/// A plan: trigger, context condition, and ordered body.
#[derive(Debug, Clone)]
pub struct Plan {
    pub trigger: Trigger,
    pub context: ContextExpr,
    pub body: Vec<BodyStep>,
    /// Source-order ordinal; first-applicable selection depends on it.
    pub declaration_index: usize,
    /// Line of the trigger in the source text, for diagnostics and logs.
    pub source_line: u32,
}

// Structural equality; source_line is position metadata and does not
// participate, so pretty-printed programs compare equal to their originals.
impl PartialEq for Plan {
    fn eq(&self, other: &Plan) -> bool {
        self.trigger == other.trigger
            && self.context == other.context
            && self.body == other.body
            && self.declaration_index == other.declaration_index
    }
}

/// A parsed agent program: initial beliefs and the plan library.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentProgram {
    pub initial_beliefs: Vec<Literal>,
    pub plans: Vec<Plan>,
}

impl AgentProgram {
    /// Names of external actions appearing in any plan body.
    pub fn action_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for plan in &self.plans {
            for step in &plan.body {
                if let BodyStep::Action { name, .. } = step {
                    if !names.contains(&name.as_str()) {
                        names.push(name);
                    }
                }
            }
        }
        names
    }

    /// Functors of belief-event triggers, used to filter internal belief events.
    pub fn belief_trigger_functors(&self) -> Vec<&str> {
        let mut functors: Vec<&str> = Vec::new();
        for plan in &self.plans {
            if !plan.trigger.kind.is_goal() {
                let f = plan.trigger.pattern.functor.as_str();
                if !functors.contains(&f) {
                    functors.push(f);
                }
            }
        }
        functors
    }

    /// `e_`-prefixed functors referenced by context patterns across all plans.
    pub fn estimate_guard_functors(&self) -> Vec<&str> {
        let mut functors: Vec<&str> = Vec::new();
        for plan in &self.plans {
            for atom in &plan.context.0 {
                if let ContextAtom::Pattern(lit) = atom {
                    if lit.functor.starts_with("e_") && !functors.contains(&lit.functor.as_str()) {
                        functors.push(&lit.functor);
                    }
                }
            }
        }
        functors
    }
}
