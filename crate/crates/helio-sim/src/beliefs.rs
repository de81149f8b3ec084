//! Belief storage with lifetime classification and origin tracking.
//!
//! Beliefs are annotated ground literals. A `persist(none|fram|flash)`
//! annotation selects the lifetime; everything else is volatile. Six functors
//! form the internal-belief vocabulary published by the platform each cycle:
//! `device_mode`, `network_role`, `network_state`, `buffer_size`,
//! `e_available`, and `e_tendency`. Exactly one instance of each exists at a
//! time, and plan bodies may not write them.

use crate::error::BeliefError;
use helio_asl::{unify_literals, Bindings, Literal, Term};

/// Functors owned by the platform bridge. Plan bodies may neither assert nor
/// retract these; the bridge replaces them by functor/arity.
pub const INTERNAL_FUNCTORS: [&str; 6] = [
    "device_mode",
    "network_role",
    "network_state",
    "buffer_size",
    "e_available",
    "e_tendency",
];

pub fn is_internal_functor(name: &str) -> bool {
    INTERNAL_FUNCTORS.contains(&name)
}

/// Where a belief survives: RAM, FRAM, or flash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Lifetime {
    Volatile,
    Fram,
    Flash,
}

impl Lifetime {
    /// Reads the `persist` annotation; a missing annotation means volatile.
    pub fn from_literal(lit: &Literal) -> Result<Lifetime, BeliefError> {
        let ann = match lit.annotation("persist") {
            Some(ann) => ann,
            None => return Ok(Lifetime::Volatile),
        };
        let name = match ann.args.first() {
            Some(Term::Atom(s)) | Some(Term::Str(s)) if ann.args.len() == 1 => s.as_str(),
            _ => return Err(BeliefError::BadLifetime(format!("{:?}", ann.args))),
        };
        match name {
            "none" => Ok(Lifetime::Volatile),
            "fram" => Ok(Lifetime::Fram),
            "flash" => Ok(Lifetime::Flash),
            other => Err(BeliefError::BadLifetime(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Lifetime::Volatile => "volatile",
            Lifetime::Fram => "fram",
            Lifetime::Flash => "flash",
        }
    }
}

/// Who asserted a belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Declared in the agent program's initial beliefs.
    Program,
    /// Published by the platform bridge.
    Internal,
    /// Written at run time (plan bodies, `update_estimate`).
    Runtime,
}

impl Origin {
    pub fn name(self) -> &'static str {
        match self {
            Origin::Program => "program",
            Origin::Internal => "internal",
            Origin::Runtime => "runtime",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Origin::Program => 0,
            Origin::Internal => 1,
            Origin::Runtime => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Origin> {
        match code {
            0 => Some(Origin::Program),
            1 => Some(Origin::Internal),
            2 => Some(Origin::Runtime),
            _ => None,
        }
    }
}

/// One stored belief.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefEntry {
    pub literal: Literal,
    pub lifetime: Lifetime,
    pub origin: Origin,
    pub last_updated_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeOp {
    Add,
    Del,
}

impl ChangeOp {
    pub fn name(self) -> &'static str {
        match self {
            ChangeOp::Add => "add",
            ChangeOp::Del => "del",
        }
    }
}

/// A belief-base mutation, reported to the event log and (selectively) to the
/// engine's event queue.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeEvent {
    pub op: ChangeOp,
    pub literal: Literal,
    pub origin: Origin,
}

/// The belief base: an insertion-ordered set of annotated ground literals.
///
/// Identity rules differ by owner. Internal beliefs replace by functor/arity
/// (they are single-valued device facts). Program and runtime beliefs use set
/// semantics on (functor, args, negation); re-asserting with different
/// annotations replaces the annotations, which is the only way a belief's
/// lifetime changes.
#[derive(Debug, Clone, Default)]
pub struct BeliefBase {
    entries: Vec<BeliefEntry>,
}

impl BeliefBase {
    pub fn new() -> BeliefBase {
        BeliefBase::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BeliefEntry] {
        &self.entries
    }

    /// All literals in insertion order, for context evaluation.
    pub fn literals(&self) -> Vec<&Literal> {
        self.entries.iter().map(|e| &e.literal).collect()
    }

    pub fn contains_functor_arity(&self, functor: &str, arity: usize) -> bool {
        self.entries.iter().any(|e| e.literal.indicator() == (functor, arity))
    }

    /// First entry with the given functor and arity.
    pub fn find(&self, functor: &str, arity: usize) -> Option<&BeliefEntry> {
        self.entries.iter().find(|e| e.literal.indicator() == (functor, arity))
    }

    /// Seeds one initial belief from the program. Internal-schema functors are
    /// allowed here (Listing-style programs declare `e_available(0)` and the
    /// like as starting values); the platform replaces them on first publish.
    pub fn seed_initial(&mut self, lit: &Literal, now_ms: u64) -> Result<Option<ChangeEvent>, BeliefError> {
        if !lit.is_ground() {
            return Err(BeliefError::NotGround(lit.to_string()));
        }
        let lifetime = Lifetime::from_literal(lit)?;
        if is_internal_functor(&lit.functor) {
            return Ok(self.upsert_by_indicator(lit.clone(), lifetime, Origin::Program, now_ms));
        }
        Ok(self.upsert_by_value(lit.clone(), lifetime, Origin::Program, now_ms).pop())
    }

    /// Inserts a restored entry verbatim (wake path). No events are queued for
    /// restores; the caller logs them.
    pub fn insert_restored(&mut self, entry: BeliefEntry) {
        self.entries.push(entry);
    }

    /// Platform bridge publish: replaces any instance of the same
    /// functor/arity. Returns one add event when the stored value changed,
    /// nothing when the publish was a no-op, which coalesces belief-change
    /// traffic to at most one event per functor per cycle.
    pub fn publish_internal(&mut self, lit: Literal, now_ms: u64) -> Option<ChangeEvent> {
        debug_assert!(lit.is_ground());
        self.upsert_by_indicator(lit, Lifetime::Volatile, Origin::Internal, now_ms)
    }

    /// Plan-body assertion. Set semantics on (functor, args, negation);
    /// re-assertion with different annotations replaces them and emits a
    /// del/add pair.
    pub fn assert_from_plan(&mut self, lit: Literal, now_ms: u64) -> Result<Vec<ChangeEvent>, BeliefError> {
        if is_internal_functor(&lit.functor) {
            return Err(BeliefError::Permission(lit.functor.clone()));
        }
        if !lit.is_ground() {
            return Err(BeliefError::NotGround(lit.to_string()));
        }
        let lifetime = Lifetime::from_literal(&lit)?;
        Ok(self.upsert_by_value(lit, lifetime, Origin::Runtime, now_ms))
    }

    /// Plan-body retraction: removes every belief the pattern matches.
    pub fn retract_from_plan(&mut self, pattern: &Literal) -> Result<Vec<ChangeEvent>, BeliefError> {
        if is_internal_functor(&pattern.functor) {
            return Err(BeliefError::Permission(pattern.functor.clone()));
        }
        Ok(self.retract_matching(pattern))
    }

    /// Removes all beliefs matching the pattern; one del event per removal.
    pub fn retract_matching(&mut self, pattern: &Literal) -> Vec<ChangeEvent> {
        let empty = Bindings::new();
        let mut events = Vec::new();
        self.entries.retain(|entry| {
            if unify_literals(pattern, &entry.literal, &empty).is_some() {
                events.push(ChangeEvent {
                    op: ChangeOp::Del,
                    literal: entry.literal.clone(),
                    origin: entry.origin,
                });
                false
            } else {
                true
            }
        });
        events
    }

    /// All matches of the pattern in insertion order.
    pub fn query(&self, pattern: &Literal) -> Vec<(&Literal, Bindings)> {
        let empty = Bindings::new();
        self.entries
            .iter()
            .filter_map(|entry| {
                unify_literals(pattern, &entry.literal, &empty).map(|b| (&entry.literal, b))
            })
            .collect()
    }

    /// Replaces the single `functor(old)` estimate belief with `functor(new)`,
    /// preserving annotations (and therefore lifetime). Origin becomes
    /// Runtime. Returns the old and new literals.
    pub fn update_estimate_value(
        &mut self,
        functor: &str,
        new_value: f64,
        now_ms: u64,
    ) -> Result<(Literal, Literal), BeliefError> {
        if is_internal_functor(functor) {
            return Err(BeliefError::Permission(functor.to_string()));
        }
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.literal.indicator() == (functor, 1))
            .ok_or_else(|| BeliefError::UnknownEstimate(functor.to_string()))?;
        let old = entry.literal.clone();
        entry.literal.args = vec![Term::Number(new_value)];
        entry.origin = Origin::Runtime;
        entry.last_updated_ms = now_ms;
        Ok((old, entry.literal.clone()))
    }

    /// Entries with the given lifetime, in insertion order.
    pub fn snapshot_lifetime(&self, lifetime: Lifetime) -> Vec<&BeliefEntry> {
        self.entries.iter().filter(|e| e.lifetime == lifetime).collect()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    fn upsert_by_indicator(
        &mut self,
        lit: Literal,
        lifetime: Lifetime,
        origin: Origin,
        now_ms: u64,
    ) -> Option<ChangeEvent> {
        let functor = lit.functor.clone();
        let arity = lit.arity();
        if let Some(existing) = self
            .entries
            .iter_mut()
            .find(|e| e.literal.indicator() == (functor.as_str(), arity))
        {
            if existing.literal == lit {
                return None;
            }
            existing.literal = lit.clone();
            existing.lifetime = lifetime;
            existing.origin = origin;
            existing.last_updated_ms = now_ms;
            return Some(ChangeEvent { op: ChangeOp::Add, literal: lit, origin });
        }
        self.entries.push(BeliefEntry {
            literal: lit.clone(),
            lifetime,
            origin,
            last_updated_ms: now_ms,
        });
        Some(ChangeEvent { op: ChangeOp::Add, literal: lit, origin })
    }

    fn upsert_by_value(
        &mut self,
        lit: Literal,
        lifetime: Lifetime,
        origin: Origin,
        now_ms: u64,
    ) -> Vec<ChangeEvent> {
        let same_value = |e: &BeliefEntry| {
            e.literal.functor == lit.functor
                && e.literal.args == lit.args
                && e.literal.negated == lit.negated
        };
        if let Some(existing) = self.entries.iter_mut().find(|e| same_value(e)) {
            if existing.literal.annotations == lit.annotations {
                return Vec::new();
            }
            let old = existing.literal.clone();
            let old_origin = existing.origin;
            existing.literal = lit.clone();
            existing.lifetime = lifetime;
            existing.origin = origin;
            existing.last_updated_ms = now_ms;
            return vec![
                ChangeEvent { op: ChangeOp::Del, literal: old, origin: old_origin },
                ChangeEvent { op: ChangeOp::Add, literal: lit, origin },
            ];
        }
        self.entries.push(BeliefEntry {
            literal: lit.clone(),
            lifetime,
            origin,
            last_updated_ms: now_ms,
        });
        vec![ChangeEvent { op: ChangeOp::Add, literal: lit, origin }]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use helio_asl::parse_program;

    fn base_from(src: &str) -> BeliefBase {
        let program = parse_program(src).unwrap();
        let mut base = BeliefBase::new();
        for lit in &program.initial_beliefs {
            base.seed_initial(lit, 0).unwrap();
        }
        base
    }

    fn lit(src: &str) -> Literal {
        helio_asl::parse_literal(src).unwrap()
    }

    const LISTING: &str = "\
        e_meas_temperature(30)[persist(\"fram\")].\n\
        e_available(0).\n\
        e_tendency(0).\n\
        transmit_power(8)[impact(101)].\n\
        transmit_power(4)[impact(30)].\n";

    #[test]
    fn publish_replaces_by_functor_with_one_add_event() {
        let mut base = base_from(LISTING);
        let ev = base.publish_internal(lit("e_available(120)"), 5).unwrap();
        assert_eq!(ev.op, ChangeOp::Add);
        assert_eq!(ev.literal, lit("e_available(120)"));
        let matches = base.query(&lit("e_available(V)"));
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].0, &lit("e_available(120)"));
    }

    #[test]
    fn publish_identical_value_is_a_no_op() {
        let mut base = base_from(LISTING);
        base.publish_internal(lit("e_available(120)"), 5);
        assert!(base.publish_internal(lit("e_available(120)"), 6).is_none());
    }

    #[test]
    fn assert_identical_belief_twice_is_a_no_op() {
        let mut base = BeliefBase::new();
        assert_eq!(base.assert_from_plan(lit("seen(1)"), 0).unwrap().len(), 1);
        assert!(base.assert_from_plan(lit("seen(1)"), 1).unwrap().is_empty());
        assert_eq!(base.len(), 1);
    }

    #[test]
    fn plan_body_may_not_write_internal_functors() {
        let mut base = BeliefBase::new();
        let err = base.assert_from_plan(lit("device_mode(active)"), 0).unwrap_err();
        assert_eq!(err, BeliefError::Permission("device_mode".into()));
        let err = base.retract_from_plan(&lit("e_available(V)")).unwrap_err();
        assert_eq!(err, BeliefError::Permission("e_available".into()));
    }

    #[test]
    fn retract_pattern_removes_all_matches() {
        let mut base = base_from(LISTING);
        let events = base.retract_from_plan(&lit("transmit_power(P)")).unwrap();
        assert_eq!(events.len(), 2);
        assert!(events.iter().all(|e| e.op == ChangeOp::Del));
        assert!(base.query(&lit("transmit_power(P)")).is_empty());
    }

    #[test]
    fn retract_without_matches_returns_nothing() {
        let mut base = base_from(LISTING);
        assert!(base.retract_from_plan(&lit("missing(X)")).unwrap().is_empty());
        assert_eq!(base.len(), 5);
    }

    #[test]
    fn retract_estimate_belief_removes_one() {
        let mut base = base_from(LISTING);
        let events = base.retract_from_plan(&lit("e_meas_temperature(R)")).unwrap();
        assert_eq!(events.len(), 1);
    }

    #[test]
    fn query_returns_matches_in_source_order() {
        let base = base_from(LISTING);
        let matches = base.query(&lit("transmit_power(P)[impact(E)]"));
        let pairs: Vec<(f64, f64)> = matches
            .iter()
            .map(|(_, b)| {
                let p = match b.get("P").unwrap() {
                    Term::Number(v) => *v,
                    other => panic!("unexpected {other:?}"),
                };
                let e = match b.get("E").unwrap() {
                    Term::Number(v) => *v,
                    other => panic!("unexpected {other:?}"),
                };
                (p, e)
            })
            .collect();
        assert_eq!(pairs, vec![(8.0, 101.0), (4.0, 30.0)]);
    }

    #[test]
    fn query_on_empty_base_is_empty() {
        let base = BeliefBase::new();
        assert!(base.query(&lit("anything(X)")).is_empty());
    }

    #[test]
    fn query_ground_literal_gives_exact_match_with_empty_bindings() {
        let base = base_from(LISTING);
        let matches = base.query(&lit("e_tendency(0)"));
        assert_eq!(matches.len(), 1);
        assert!(matches[0].1.is_empty());
    }

    #[test]
    fn snapshot_partitions_by_lifetime() {
        let base = base_from(LISTING);
        let fram = base.snapshot_lifetime(Lifetime::Fram);
        assert_eq!(fram.len(), 1);
        assert_eq!(fram[0].literal.functor, "e_meas_temperature");
        assert!(base.snapshot_lifetime(Lifetime::Flash).is_empty());
        assert_eq!(base.snapshot_lifetime(Lifetime::Volatile).len(), 4);
    }

    #[test]
    fn update_estimate_preserves_annotations_and_sets_runtime_origin() {
        let mut base = base_from(LISTING);
        let (old, new) = base.update_estimate_value("e_meas_temperature", 35.0, 9).unwrap();
        assert_eq!(old, lit("e_meas_temperature(30)[persist(\"fram\")]"));
        assert_eq!(new, lit("e_meas_temperature(35)[persist(\"fram\")]"));
        let entry = base.find("e_meas_temperature", 1).unwrap();
        assert_eq!(entry.origin, Origin::Runtime);
        assert_eq!(entry.lifetime, Lifetime::Fram);
        assert_eq!(entry.last_updated_ms, 9);
    }

    #[test]
    fn update_estimate_requires_an_existing_belief() {
        let mut base = BeliefBase::new();
        let err = base.update_estimate_value("e_ghost", 1.0, 0).unwrap_err();
        assert_eq!(err, BeliefError::UnknownEstimate("e_ghost".into()));
    }

    #[test]
    fn reassertion_with_new_annotation_changes_lifetime() {
        let mut base = BeliefBase::new();
        base.assert_from_plan(lit("cal(7)"), 0).unwrap();
        let events = base.assert_from_plan(lit("cal(7)[persist(\"fram\")]"), 1).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].op, ChangeOp::Del);
        assert_eq!(events[1].op, ChangeOp::Add);
        assert_eq!(base.find("cal", 1).unwrap().lifetime, Lifetime::Fram);
        assert_eq!(base.len(), 1);
    }

    #[test]
    fn internal_schema_stays_single_instance() {
        let mut base = base_from(LISTING);
        for v in [10.0, 20.0, 30.0] {
            base.publish_internal(Literal::new("e_available", vec![Term::Number(v)]), 1);
        }
        assert_eq!(base.query(&lit("e_available(V)")).len(), 1);
    }
}
