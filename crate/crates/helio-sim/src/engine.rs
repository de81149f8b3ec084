//! Reasoning-cycle building blocks: events, intentions, plan selection, and
//! the energy-learning policy.
//!
//! Plan selection is first-applicable in declaration order. A context that
//! fails to evaluate (for example, comparing an atom with a number) makes
//! that plan inapplicable rather than aborting selection, so a bad guard in
//! one plan can never mask a later applicable one.

use crate::beliefs::BeliefBase;
use crate::platform::EnergyPlatform;
use helio_asl::{eval_context, unify_literals, AgentProgram, Bindings, Literal, TriggerKind};

/// Where an event came from: outside the agent (boot goals, injections),
/// the platform bridge, or a plan body's `!goal` step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    External,
    Internal,
    Subgoal(u64),
}

impl Provenance {
    pub fn describe(self) -> String {
        match self {
            Provenance::External => "external".into(),
            Provenance::Internal => "internal".into(),
            Provenance::Subgoal(id) => format!("subgoal({id})"),
        }
    }
}

/// One queued event. The kind reuses the trigger vocabulary so matching a
/// plan trigger is a direct comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: TriggerKind,
    pub literal: Literal,
    pub provenance: Provenance,
}

impl Event {
    pub fn describe(&self) -> String {
        let symbol = match self.kind {
            TriggerKind::GoalAdd => "+!",
            TriggerKind::GoalDel => "-!",
            TriggerKind::BeliefAdd => "+",
            TriggerKind::BeliefDel => "-",
        };
        format!("{symbol}{}", self.literal)
    }
}

/// One plan instance on an intention's stack.
#[derive(Debug, Clone)]
pub struct Frame {
    pub plan_index: usize,
    pub bindings: Bindings,
    pub pc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentionStatus {
    Active,
    /// Parked until a subgoal posted by this intention completes.
    AwaitingSubgoal,
    Done,
    Failed,
}

/// A running plan stack. Frames above the bottom come from subgoals.
#[derive(Debug, Clone)]
pub struct Intention {
    pub id: u64,
    pub frames: Vec<Frame>,
    pub status: IntentionStatus,
}

impl Intention {
    pub fn new(id: u64, frame: Frame) -> Intention {
        Intention { id, frames: vec![frame], status: IntentionStatus::Active }
    }

    pub fn top(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn top_mut(&mut self) -> Option<&mut Frame> {
        self.frames.last_mut()
    }
}

/// First applicable plan for the event: scans declarations in order, unifies
/// the trigger, and evaluates the context against the current beliefs.
/// Returns the plan's index and the merged substitution.
pub fn select_plan(
    program: &AgentProgram,
    event: &Event,
    beliefs: &BeliefBase,
) -> Option<(usize, Bindings)> {
    let literals = beliefs.literals();
    let empty = Bindings::new();
    for (index, plan) in program.plans.iter().enumerate() {
        if plan.trigger.kind != event.kind {
            continue;
        }
        let Some(theta) = unify_literals(&plan.trigger.pattern, &event.literal, &empty) else {
            continue;
        };
        match eval_context(&plan.context, &literals, &theta) {
            Ok(Some(theta)) => return Some((index, theta)),
            Ok(None) | Err(_) => continue,
        }
    }
    None
}

/// Buffer state snapshot taken by `energy_checkpoint()`. The load meter is
/// what `update_estimate` measures against: the difference in cumulative
/// drawn energy is the intent's own consumption, unpolluted by harvest that
/// arrived in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheckpoint {
    pub intention: u64,
    pub level_uj: f64,
    pub load_meter_uj: f64,
    pub time_ms: u64,
}

impl EnergyCheckpoint {
    pub fn capture(intention: u64, platform: &EnergyPlatform) -> EnergyCheckpoint {
        EnergyCheckpoint {
            intention,
            level_uj: platform.level_uj(),
            load_meter_uj: platform.load_uj(),
            time_ms: platform.now_ms(),
        }
    }
}

/// The exponential-moving-average rule behind `update_estimate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatePolicy {
    pub alpha: f64,
}

impl EstimatePolicy {
    pub fn update(&self, old: f64, measured: f64) -> f64 {
        (self.alpha * measured + (1.0 - self.alpha) * old).max(0.0)
    }
}
