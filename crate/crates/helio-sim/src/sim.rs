//! The coupled simulation: reasoning cycles against the energy platform.
//!
//! A simulation steps through three phases. While `Active`, each step is one
//! reasoning cycle: refresh internal beliefs, pay the cycle overhead, pull
//! one event off the queue, and run one body step of one intention
//! (round-robin). `deep_sleep()` or an empty agenda moves to `Sleeping`,
//! where a step covers the whole sleep interval analytically. A brown-out at
//! any point wipes volatile state and moves to `Off`, which waits for the
//! buffer to reach the cold-start threshold and boots again.
//!
//! Ordering rules that tests rely on: injections are enqueued before the
//! internal-belief publish of the same cycle; `e_available` is captured at
//! cycle start, before the overhead draw; and a cycle that begins at or past
//! the horizon ends the run, so the final cycle may overshoot the horizon by
//! less than one cycle duration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use helio_asl::{
    resolve_arith, resolve_literal_arith, term_to_string, AgentProgram, BeliefOp, BodyStep,
    InternalActionKind, Literal, Term, TriggerKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beliefs::{BeliefBase, ChangeEvent, ChangeOp, Origin};
use crate::config::{OnIdle, SimConfig};
use crate::engine::{
    select_plan, EnergyCheckpoint, EstimatePolicy, Event, Frame, Intention, IntentionStatus,
    Provenance,
};
use crate::error::SimError;
use crate::log::{EventLog, LogRecord, RecordKind, Summary};
use crate::persist::{decode_image, encode_image, MediaStore, Medium, MediumProfile};
use crate::platform::{
    EnergyBuffer, EnergyPlatform, HarvestTrace, RunCondition, StepOutcome, StopCause,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Active,
    Sleeping,
    /// Browned out; waiting for the buffer to reach cold start.
    Off,
    Finished,
}

struct Deltas {
    outcome: StepOutcome,
    harvested_uj: f64,
}

pub struct Simulation {
    program: AgentProgram,
    config: SimConfig,
    platform: EnergyPlatform,
    beliefs: BeliefBase,
    media: MediaStore,
    log: EventLog,
    queue: VecDeque<Event>,
    intentions: Vec<Intention>,
    checkpoints: BTreeMap<u64, EnergyCheckpoint>,
    policy: EstimatePolicy,
    boot_goals: Vec<Literal>,
    injections: Vec<Option<(u64, Literal)>>,
    trigger_functors: BTreeSet<String>,
    next_intention_id: u64,
    cycle_count: u64,
    rr_cursor: usize,
    radio_used: bool,
    timer_deadline_ms: Option<u64>,
    clamp_watermark_uj: f64,
    phase: Phase,
}

impl Simulation {
    pub fn new(
        program: AgentProgram,
        config: SimConfig,
        trace: HarvestTrace,
    ) -> Result<Simulation, SimError> {
        config.validate()?;
        for name in program.action_names() {
            if !config.actions.contains_key(name) {
                return Err(SimError::Validation(format!(
                    "action `{name}` has no entry in the [actions] cost model"
                )));
            }
        }
        let boot_goals = config.boot_goals()?;
        let injections = config.injection_goals()?.into_iter().map(Some).collect();
        let trace = if config.trace.jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(config.sim.seed);
            trace.jittered(config.trace.jitter, &mut rng)
        } else {
            trace
        };
        let buffer = EnergyBuffer::new(
            config.buffer.capacity_uj,
            config.buffer.initial_uj,
            config.buffer.brown_out_uj,
            config.buffer.cold_start_uj,
        );
        let platform = EnergyPlatform::new(buffer, trace);
        let trigger_functors =
            program.belief_trigger_functors().into_iter().map(String::from).collect();
        let policy = EstimatePolicy { alpha: config.learning.alpha };
        let mut sim = Simulation {
            program,
            config,
            platform,
            beliefs: BeliefBase::new(),
            media: MediaStore::new(),
            log: EventLog::new(),
            queue: VecDeque::new(),
            intentions: Vec::new(),
            checkpoints: BTreeMap::new(),
            policy,
            boot_goals,
            injections,
            trigger_functors,
            next_intention_id: 0,
            cycle_count: 0,
            rr_cursor: 0,
            radio_used: false,
            timer_deadline_ms: None,
            clamp_watermark_uj: 0.0,
            phase: Phase::Active,
        };
        if sim.platform.level_uj() >= sim.config.buffer.cold_start_uj {
            sim.boot()?;
        } else {
            sim.push_now(RecordKind::BrownOut {
                cause: "never_booted".into(),
                slept_ms: 0,
                drawn_uj: 0.0,
                harvested_uj: 0.0,
            });
            sim.phase = Phase::Off;
        }
        Ok(sim)
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn now_ms(&self) -> u64 {
        self.platform.now_ms()
    }

    pub fn level_uj(&self) -> f64 {
        self.platform.level_uj()
    }

    pub fn platform(&self) -> &EnergyPlatform {
        &self.platform
    }

    pub fn beliefs(&self) -> &BeliefBase {
        &self.beliefs
    }

    pub fn records(&self) -> &[LogRecord] {
        self.log.records()
    }

    pub fn log_jsonl(&self) -> String {
        self.log.to_jsonl()
    }

    pub fn media(&self) -> &MediaStore {
        &self.media
    }

    /// Mutable media access, for fault injection in tests.
    pub fn media_mut(&mut self) -> &mut MediaStore {
        &mut self.media
    }

    /// The emitted summary, once the run has finished.
    pub fn summary(&self) -> Option<&Summary> {
        self.log.records().iter().rev().find_map(|r| match &r.kind {
            RecordKind::Summary(s) => Some(s),
            _ => None,
        })
    }

    /// Runs to the horizon (or to an unrecoverable dead state at the
    /// horizon).
    pub fn run(&mut self) {
        while self.phase != Phase::Finished {
            self.step();
        }
    }

    /// Advances one unit of simulation: a reasoning cycle, a whole sleep
    /// interval, or a whole off-recovery interval.
    pub fn step(&mut self) {
        match self.phase {
            Phase::Active => self.active_cycle(),
            Phase::Sleeping => self.sleep_interval(),
            Phase::Off => self.off_interval(),
            Phase::Finished => {}
        }
    }

    fn boot(&mut self) -> Result<(), SimError> {
        let now = self.platform.now_ms();
        let initials = self.program.initial_beliefs.clone();
        for lit in &initials {
            let event = self
                .beliefs
                .seed_initial(lit, now)
                .map_err(|e| SimError::Validation(format!("initial belief {lit}: {e}")))?;
            if let Some(event) = event {
                self.log_belief_change(&event);
            }
        }
        self.enqueue_boot_goals();
        Ok(())
    }

    fn enqueue_boot_goals(&mut self) {
        for goal in self.boot_goals.clone() {
            self.queue.push_back(Event {
                kind: TriggerKind::GoalAdd,
                literal: goal,
                provenance: Provenance::External,
            });
        }
    }

    fn active_cycle(&mut self) {
        let start_ms = self.platform.now_ms();
        if start_ms >= self.config.sim.horizon_ms {
            self.finish();
            return;
        }
        let cycle_index = self.cycle_count;
        self.cycle_count += 1;
        let level_at_start = self.platform.level_uj();
        let tendency = self.platform.tendency_uj_per_hr(self.config.tendency.window_ms);
        self.take_due_injections(start_ms);
        let d = self.advance_metered(self.config.cycle.duration_ms, self.config.cycle.overhead_uj);
        self.push_at(
            start_ms,
            RecordKind::Cycle {
                cycle: cycle_index,
                overhead_uj: d.outcome.load_drawn_uj,
                harvested_uj: d.harvested_uj,
            },
        );
        self.log_clamp_delta();
        if d.outcome.brown_out {
            self.brown_out("cycle_overhead");
            return;
        }
        self.publish_internal_beliefs(level_at_start, tendency);
        self.dispatch_one_event();
        if self.phase != Phase::Active {
            return;
        }
        self.execute_one_step();
        if self.phase != Phase::Active {
            return;
        }
        self.reap_settled_intentions();
        if self.queue.is_empty() && self.intentions.is_empty() && self.config.boot.on_idle == OnIdle::Sleep
        {
            self.enter_sleep("idle");
        }
    }

    fn take_due_injections(&mut self, now_ms: u64) {
        for slot in &mut self.injections {
            if let Some((at_ms, goal)) = slot {
                if *at_ms <= now_ms {
                    self.queue.push_back(Event {
                        kind: TriggerKind::GoalAdd,
                        literal: goal.clone(),
                        provenance: Provenance::External,
                    });
                    *slot = None;
                }
            }
        }
    }

    /// Publishes the six platform beliefs from cycle-start readings. Changed
    /// values are logged; queue events fire only for functors some plan
    /// trigger watches.
    fn publish_internal_beliefs(&mut self, level_uj: f64, tendency_uj_per_hr: f64) {
        let network_state = if self.radio_used { "initialized" } else { "uninit" };
        let published = [
            Literal::new("device_mode", vec![Term::Atom("active".into())]),
            Literal::new("network_role", vec![Term::Atom("peripheral".into())]),
            Literal::new("network_state", vec![Term::Atom(network_state.into())]),
            Literal::new("buffer_size", vec![Term::Number(self.config.buffer.capacity_uj)]),
            Literal::new("e_available", vec![Term::Number(level_uj)]),
            Literal::new("e_tendency", vec![Term::Number(tendency_uj_per_hr)]),
        ];
        let now = self.platform.now_ms();
        for lit in published {
            if let Some(event) = self.beliefs.publish_internal(lit, now) {
                self.log_belief_change(&event);
                if self.trigger_functors.contains(&event.literal.functor) {
                    self.queue.push_back(Event {
                        kind: TriggerKind::BeliefAdd,
                        literal: event.literal,
                        provenance: Provenance::Internal,
                    });
                }
            }
        }
    }

    fn dispatch_one_event(&mut self) {
        let Some(event) = self.queue.pop_front() else {
            return;
        };
        match select_plan(&self.program, &event, &self.beliefs) {
            Some((plan_index, theta)) => {
                self.log_event(&event, "selected");
                let plan_line = self.program.plans[plan_index].source_line;
                let frame = Frame { plan_index, bindings: theta, pc: 0 };
                let intention_id = match event.provenance {
                    Provenance::Subgoal(parent) if self.attach_to_parent(parent, frame.clone()) => {
                        parent
                    }
                    _ => {
                        let id = self.next_intention_id;
                        self.next_intention_id += 1;
                        self.intentions.push(Intention::new(id, frame));
                        id
                    }
                };
                self.push_now(RecordKind::PlanSelected {
                    plan_line,
                    trigger: event.describe(),
                    intention: intention_id,
                });
            }
            None => match event.kind {
                TriggerKind::GoalAdd => {
                    self.log_event(&event, "no_plan");
                    self.queue.push_back(Event {
                        kind: TriggerKind::GoalDel,
                        literal: event.literal,
                        provenance: event.provenance,
                    });
                }
                TriggerKind::GoalDel => {
                    self.log_event(&event, "dropped");
                    if let Provenance::Subgoal(parent) = event.provenance {
                        self.fail_intention_by_id(parent, format!("subgoal {} failed", event.literal));
                    }
                }
                TriggerKind::BeliefAdd | TriggerKind::BeliefDel => {
                    self.log_event(&event, "no_plan");
                }
            },
        }
    }

    fn attach_to_parent(&mut self, parent: u64, frame: Frame) -> bool {
        match self.intentions.iter_mut().find(|i| i.id == parent) {
            Some(intention)
                if intention.status == IntentionStatus::AwaitingSubgoal
                    || intention.status == IntentionStatus::Active =>
            {
                intention.frames.push(frame);
                intention.status = IntentionStatus::Active;
                true
            }
            _ => false,
        }
    }

    fn execute_one_step(&mut self) {
        let runnable: Vec<usize> = self
            .intentions
            .iter()
            .enumerate()
            .filter(|(_, i)| i.status == IntentionStatus::Active)
            .map(|(idx, _)| idx)
            .collect();
        if runnable.is_empty() {
            return;
        }
        let idx = runnable[self.rr_cursor % runnable.len()];
        self.rr_cursor = self.rr_cursor.wrapping_add(1);
        let frame = self.intentions[idx].top().expect("active intention has a frame");
        let step = self.program.plans[frame.plan_index].body[frame.pc].clone();
        match step {
            BodyStep::Action { name, args } => self.exec_action(idx, &name, &args),
            BodyStep::SubGoal(goal) => self.exec_subgoal(idx, &goal),
            BodyStep::BeliefUpdate { op, literal } => self.exec_belief_update(idx, op, &literal),
            BodyStep::Internal { kind, args } => self.exec_internal(idx, kind, &args),
        }
    }

    fn exec_action(&mut self, idx: usize, name: &str, args: &[Term]) {
        let bindings = self.intentions[idx].top().expect("frame").bindings.clone();
        let intention_id = self.intentions[idx].id;
        let mut resolved = Vec::with_capacity(args.len());
        for arg in args {
            match resolve_arith(arg, &bindings) {
                Ok(term) if term.is_ground() => resolved.push(term),
                _ => {
                    self.fail_intention(idx, format!("action {name}: unresolved argument"));
                    return;
                }
            }
        }
        let model = self.config.actions.get(name).expect("validated at construction").clone();
        let mut energy_uj = model.energy_uj;
        let mut tx_power = None;
        if let Some(source) = &model.impact_from {
            if let Some(first) = resolved.first() {
                let pattern = Literal::new(source.clone(), vec![first.clone()]);
                for (belief, _) in self.beliefs.query(&pattern) {
                    if let Some(ann) = belief.annotation("impact") {
                        if let Some(Term::Number(impact)) = ann.args.first() {
                            energy_uj = *impact;
                            break;
                        }
                    }
                }
                tx_power = Some(term_to_string(first));
            }
            self.radio_used = true;
        }
        let start_ms = self.platform.now_ms();
        let d = self.advance_metered(model.duration_ms, energy_uj);
        self.push_at(
            start_ms,
            RecordKind::Action {
                name: name.into(),
                args: resolved.iter().map(term_to_string).collect(),
                energy_uj: d.outcome.load_drawn_uj,
                duration_ms: model.duration_ms,
                harvested_uj: d.harvested_uj,
                intention: intention_id,
                tx_power,
            },
        );
        self.log_clamp_delta();
        if d.outcome.brown_out {
            self.brown_out(&format!("action:{name}"));
            return;
        }
        self.advance_pc(idx);
    }

    fn exec_subgoal(&mut self, idx: usize, goal: &Literal) {
        let bindings = self.intentions[idx].top().expect("frame").bindings.clone();
        let intention_id = self.intentions[idx].id;
        let resolved = match resolve_literal_arith(goal, &bindings) {
            Ok(lit) if lit.is_ground() => lit,
            _ => {
                self.fail_intention(idx, format!("subgoal !{goal}: unresolved argument"));
                return;
            }
        };
        let frame = self.intentions[idx].top_mut().expect("frame");
        frame.pc += 1;
        self.intentions[idx].status = IntentionStatus::AwaitingSubgoal;
        self.queue.push_back(Event {
            kind: TriggerKind::GoalAdd,
            literal: resolved,
            provenance: Provenance::Subgoal(intention_id),
        });
    }

    fn exec_belief_update(&mut self, idx: usize, op: BeliefOp, literal: &Literal) {
        let bindings = self.intentions[idx].top().expect("frame").bindings.clone();
        let now = self.platform.now_ms();
        match op {
            BeliefOp::Add => {
                let resolved = match resolve_literal_arith(literal, &bindings) {
                    Ok(lit) => lit,
                    Err(e) => {
                        self.fail_intention(idx, format!("belief +{literal}: {e}"));
                        return;
                    }
                };
                match self.beliefs.assert_from_plan(resolved, now) {
                    Ok(events) => {
                        self.record_belief_events(&events, true);
                        self.advance_pc(idx);
                    }
                    Err(e) => self.fail_intention(idx, format!("belief +{literal}: {e}")),
                }
            }
            BeliefOp::Del => {
                let substituted = bindings.resolve_literal(literal);
                let pattern = if substituted.is_ground() {
                    resolve_literal_arith(literal, &bindings).unwrap_or(substituted)
                } else {
                    substituted
                };
                match self.beliefs.retract_from_plan(&pattern) {
                    Ok(events) => {
                        self.record_belief_events(&events, true);
                        self.advance_pc(idx);
                    }
                    Err(e) => self.fail_intention(idx, format!("belief -{literal}: {e}")),
                }
            }
        }
    }

    fn exec_internal(&mut self, idx: usize, kind: InternalActionKind, args: &[Term]) {
        let intention_id = self.intentions[idx].id;
        match kind {
            InternalActionKind::EnergyCheckpoint => {
                let checkpoint = EnergyCheckpoint::capture(intention_id, &self.platform);
                self.push_now(RecordKind::InternalAction {
                    name: "energy_checkpoint".into(),
                    detail: format!("level {} uJ", checkpoint.level_uj),
                    intention: intention_id,
                });
                self.checkpoints.insert(intention_id, checkpoint);
                self.advance_pc(idx);
            }
            InternalActionKind::UpdateEstimate => {
                let bindings = self.intentions[idx].top().expect("frame").bindings.clone();
                let name = match args.first().map(|a| bindings.resolve(a)) {
                    Some(Term::Str(s)) | Some(Term::Atom(s)) => s,
                    _ => {
                        self.fail_intention(idx, "update_estimate: name argument missing".into());
                        return;
                    }
                };
                let Some(checkpoint) = self.checkpoints.remove(&intention_id) else {
                    self.fail_intention(
                        idx,
                        format!("update_estimate(\"{name}\"): no open checkpoint"),
                    );
                    return;
                };
                let measured = (self.platform.load_uj() - checkpoint.load_meter_uj).max(0.0);
                let old_value = self.beliefs.find(&name, 1).and_then(|e| match e.literal.args.first()
                {
                    Some(Term::Number(v)) => Some(*v),
                    _ => None,
                });
                let Some(old_value) = old_value else {
                    self.fail_intention(
                        idx,
                        format!("update_estimate(\"{name}\"): no numeric belief {name}/1"),
                    );
                    return;
                };
                let new_value = self.policy.update(old_value, measured);
                match self.beliefs.update_estimate_value(&name, new_value, self.platform.now_ms()) {
                    Ok((old_lit, new_lit)) => {
                        self.push_now(RecordKind::InternalAction {
                            name: "update_estimate".into(),
                            detail: format!(
                                "{name}: old {old_value} measured {measured} new {new_value}"
                            ),
                            intention: intention_id,
                        });
                        let events = [
                            ChangeEvent { op: ChangeOp::Del, literal: old_lit, origin: Origin::Runtime },
                            ChangeEvent { op: ChangeOp::Add, literal: new_lit, origin: Origin::Runtime },
                        ];
                        self.record_belief_events(&events, true);
                        self.advance_pc(idx);
                    }
                    Err(e) => self.fail_intention(idx, format!("update_estimate(\"{name}\"): {e}")),
                }
            }
            InternalActionKind::DeepSleep => {
                self.push_now(RecordKind::InternalAction {
                    name: "deep_sleep".into(),
                    detail: String::new(),
                    intention: intention_id,
                });
                self.enter_sleep("deep_sleep");
            }
        }
    }

    fn advance_pc(&mut self, idx: usize) {
        if let Some(frame) = self.intentions[idx].top_mut() {
            frame.pc += 1;
        }
        self.finish_frames(idx);
    }

    fn finish_frames(&mut self, idx: usize) {
        while let Some(frame) = self.intentions[idx].top() {
            if frame.pc < self.program.plans[frame.plan_index].body.len() {
                return;
            }
            self.intentions[idx].frames.pop();
        }
        self.intentions[idx].status = IntentionStatus::Done;
    }

    fn reap_settled_intentions(&mut self) {
        let settled: Vec<u64> = self
            .intentions
            .iter()
            .filter(|i| matches!(i.status, IntentionStatus::Done | IntentionStatus::Failed))
            .map(|i| i.id)
            .collect();
        for id in settled {
            self.checkpoints.remove(&id);
        }
        self.intentions
            .retain(|i| !matches!(i.status, IntentionStatus::Done | IntentionStatus::Failed));
    }

    fn fail_intention(&mut self, idx: usize, reason: String) {
        let id = self.intentions[idx].id;
        self.intentions[idx].status = IntentionStatus::Failed;
        self.checkpoints.remove(&id);
        self.push_now(RecordKind::Event {
            event: reason,
            provenance: "internal".into(),
            disposition: "intention_failed".into(),
        });
    }

    fn fail_intention_by_id(&mut self, id: u64, reason: String) {
        if let Some(idx) = self.intentions.iter().position(|i| i.id == id) {
            self.fail_intention(idx, reason);
        }
    }

    /// Persists non-volatile beliefs, drops everything else, and starts the
    /// sleep interval. Persist failures are logged but never block sleep.
    fn enter_sleep(&mut self, cause: &str) {
        for medium in [Medium::Fram, Medium::Flash] {
            let entries = self.beliefs.snapshot_lifetime(medium.lifetime());
            if entries.is_empty() {
                continue;
            }
            let profile = *self.medium_profile(medium);
            match encode_image(&entries, medium) {
                Ok(image) => {
                    let bytes = image.payload_len();
                    let energy_uj = profile.write_energy_uj(bytes);
                    if self.platform.level_uj() < energy_uj {
                        self.push_now(RecordKind::Persist {
                            medium: medium.name().into(),
                            bytes: bytes as u64,
                            energy_uj: 0.0,
                            harvested_uj: 0.0,
                            status: "insufficient_energy".into(),
                        });
                        continue;
                    }
                    let start_ms = self.platform.now_ms();
                    let d = self.advance_metered(profile.write_latency_ms(bytes), energy_uj);
                    if d.outcome.brown_out {
                        self.push_at(
                            start_ms,
                            RecordKind::Persist {
                                medium: medium.name().into(),
                                bytes: bytes as u64,
                                energy_uj: d.outcome.load_drawn_uj,
                                harvested_uj: d.harvested_uj,
                                status: "torn".into(),
                            },
                        );
                        self.log_clamp_delta();
                        self.brown_out("persist");
                        return;
                    }
                    self.push_at(
                        start_ms,
                        RecordKind::Persist {
                            medium: medium.name().into(),
                            bytes: bytes as u64,
                            energy_uj: d.outcome.load_drawn_uj,
                            harvested_uj: d.harvested_uj,
                            status: "ok".into(),
                        },
                    );
                    self.log_clamp_delta();
                    self.media.write(image);
                }
                Err(e) => {
                    self.push_now(RecordKind::Persist {
                        medium: medium.name().into(),
                        bytes: 0,
                        energy_uj: 0.0,
                        harvested_uj: 0.0,
                        status: format!("error: {e}"),
                    });
                }
            }
        }
        self.queue.clear();
        self.intentions.clear();
        self.checkpoints.clear();
        self.beliefs.clear();
        let now = self.platform.now_ms();
        if let Some(event) = self
            .beliefs
            .publish_internal(Literal::new("device_mode", vec![Term::Atom("deep_sleep".into())]), now)
        {
            self.log_belief_change(&event);
        }
        self.timer_deadline_ms = self.config.wake.timer_ms.map(|t| now + t);
        self.phase = Phase::Sleeping;
        self.push_now(RecordKind::Sleep { cause: cause.into() });
    }

    fn sleep_interval(&mut self) {
        let start_ms = self.platform.now_ms();
        let load_before = self.platform.load_uj();
        let harvest_before = self.platform.harvested_uj();
        let condition = RunCondition::Wake {
            timer_deadline_ms: self.timer_deadline_ms,
            threshold_uj: self.config.wake.energy_threshold_uj,
        };
        let result =
            self.platform.run_until(condition, self.config.sleep.draw_uw, self.config.sim.horizon_ms);
        let slept_ms = self.platform.now_ms() - start_ms;
        let drawn_uj = self.platform.load_uj() - load_before;
        let harvested_uj = self.platform.harvested_uj() - harvest_before;
        match result {
            Ok(stop) if stop.cause == StopCause::BrownOut => {
                self.push_now(RecordKind::BrownOut {
                    cause: "sleep_drain".into(),
                    slept_ms,
                    drawn_uj,
                    harvested_uj,
                });
                self.log_clamp_delta();
                self.wipe_volatile();
                self.phase = Phase::Off;
            }
            Ok(stop) => {
                self.push_now(RecordKind::Wake {
                    cause: stop.cause.name().into(),
                    slept_ms,
                    drawn_uj,
                    harvested_uj,
                });
                self.log_clamp_delta();
                self.wake_restore();
            }
            Err(_) => {
                self.push_now(RecordKind::Wake {
                    cause: "horizon".into(),
                    slept_ms,
                    drawn_uj,
                    harvested_uj,
                });
                self.log_clamp_delta();
                self.finish();
            }
        }
    }

    /// Waits, unpowered, for the buffer to reach the cold-start threshold.
    /// `run_until` models a powered sleep with live brown-out checks, which
    /// do not apply to a dead device, so the crossing is computed here.
    fn off_interval(&mut self) {
        let start_ms = self.platform.now_ms();
        let harvest_before = self.platform.harvested_uj();
        let threshold_uj = self.config.buffer.cold_start_uj;
        let reachable = threshold_uj <= self.config.buffer.capacity_uj;
        let horizon_ms = self.config.sim.horizon_ms;
        loop {
            let now = self.platform.now_ms();
            if reachable && self.platform.level_uj() >= threshold_uj {
                self.push_now(RecordKind::Wake {
                    cause: "cold_start".into(),
                    slept_ms: now - start_ms,
                    drawn_uj: 0.0,
                    harvested_uj: self.platform.harvested_uj() - harvest_before,
                });
                self.log_clamp_delta();
                self.wake_restore();
                return;
            }
            if now >= horizon_ms {
                self.push_now(RecordKind::Wake {
                    cause: "horizon".into(),
                    slept_ms: now - start_ms,
                    drawn_uj: 0.0,
                    harvested_uj: self.platform.harvested_uj() - harvest_before,
                });
                self.log_clamp_delta();
                self.finish();
                return;
            }
            let mut stop_ms = self
                .platform
                .trace()
                .next_boundary_after(now)
                .unwrap_or(horizon_ms)
                .min(horizon_ms);
            let power_uw = self.platform.trace().power_at(now);
            let level_uj = self.platform.level_uj();
            if reachable && power_uw > 0.0 && level_uj < threshold_uj {
                let dt = ((threshold_uj - level_uj) * 1000.0 / power_uw).ceil() as u64;
                stop_ms = stop_ms.min(now.saturating_add(dt.max(1)));
            }
            let stop_ms = stop_ms.max(now + 1);
            self.platform.advance(stop_ms - now, 0.0);
        }
    }

    /// Restores persisted media, overlays program initials for functors the
    /// restore did not supply, and posts the boot goals. Restored beliefs do
    /// not fire queue events; the next cycle's publish supplies
    /// `+device_mode(active)` for programs that watch it.
    fn wake_restore(&mut self) {
        self.phase = Phase::Active;
        self.timer_deadline_ms = None;
        self.beliefs.clear();
        let now = self.platform.now_ms();
        for medium in [Medium::Fram, Medium::Flash] {
            let Some(image) = self.media.active(medium) else {
                continue;
            };
            let image = image.clone();
            let profile = *self.medium_profile(medium);
            match decode_image(&image) {
                Ok(entries) => {
                    let outcome = self.platform.spend(profile.read_energy_uj(image.payload_len()));
                    self.push_now(RecordKind::Restore {
                        medium: medium.name().into(),
                        bytes: image.payload_len() as u64,
                        energy_uj: outcome.load_drawn_uj,
                        status: "ok".into(),
                    });
                    for mut entry in entries {
                        entry.last_updated_ms = now;
                        self.push_now(RecordKind::BeliefChange {
                            op: "add".into(),
                            literal: entry.literal.to_string(),
                            origin: entry.origin.name().into(),
                        });
                        self.beliefs.insert_restored(entry);
                    }
                    if outcome.brown_out {
                        self.brown_out("restore");
                        return;
                    }
                }
                Err(_) => {
                    self.push_now(RecordKind::Restore {
                        medium: medium.name().into(),
                        bytes: image.payload_len() as u64,
                        energy_uj: 0.0,
                        status: "corrupt_fallback".into(),
                    });
                }
            }
        }
        let restored: BTreeSet<(String, usize)> = self
            .beliefs
            .entries()
            .iter()
            .map(|e| (e.literal.functor.clone(), e.literal.arity()))
            .collect();
        let initials = self.program.initial_beliefs.clone();
        for lit in &initials {
            if restored.contains(&(lit.functor.clone(), lit.arity())) {
                continue;
            }
            if let Ok(Some(event)) = self.beliefs.seed_initial(lit, now) {
                self.log_belief_change(&event);
            }
        }
        self.enqueue_boot_goals();
    }

    fn brown_out(&mut self, cause: &str) {
        self.push_now(RecordKind::BrownOut {
            cause: cause.into(),
            slept_ms: 0,
            drawn_uj: 0.0,
            harvested_uj: 0.0,
        });
        self.wipe_volatile();
        self.phase = Phase::Off;
    }

    fn wipe_volatile(&mut self) {
        self.queue.clear();
        self.intentions.clear();
        self.checkpoints.clear();
        self.beliefs.clear();
        self.timer_deadline_ms = None;
    }

    fn finish(&mut self) {
        if self.phase == Phase::Finished {
            return;
        }
        self.phase = Phase::Finished;
        let summary = Summary::from_records(self.log.records(), self.platform.level_start_uj());
        self.push_now(RecordKind::Summary(summary));
    }

    fn record_belief_events(&mut self, events: &[ChangeEvent], enqueue: bool) {
        for event in events {
            self.log_belief_change(event);
            if enqueue {
                let kind = match event.op {
                    ChangeOp::Add => TriggerKind::BeliefAdd,
                    ChangeOp::Del => TriggerKind::BeliefDel,
                };
                self.queue.push_back(Event {
                    kind,
                    literal: event.literal.clone(),
                    provenance: Provenance::Internal,
                });
            }
        }
    }

    fn log_belief_change(&mut self, event: &ChangeEvent) {
        self.push_now(RecordKind::BeliefChange {
            op: event.op.name().into(),
            literal: event.literal.to_string(),
            origin: event.origin.name().into(),
        });
    }

    fn log_event(&mut self, event: &Event, disposition: &str) {
        self.push_now(RecordKind::Event {
            event: event.describe(),
            provenance: event.provenance.describe(),
            disposition: disposition.into(),
        });
    }

    fn advance_metered(&mut self, dt_ms: u64, load_uj: f64) -> Deltas {
        let harvest_before = self.platform.harvested_uj();
        let outcome = self.platform.advance(dt_ms, load_uj);
        Deltas { outcome, harvested_uj: self.platform.harvested_uj() - harvest_before }
    }

    fn log_clamp_delta(&mut self) {
        let total = self.platform.clamp_loss_uj();
        if total > self.clamp_watermark_uj {
            let delta = total - self.clamp_watermark_uj;
            self.clamp_watermark_uj = total;
            self.push_now(RecordKind::ClampLoss { energy_uj: delta });
        }
    }

    fn medium_profile(&self, medium: Medium) -> &MediumProfile {
        match medium {
            Medium::Fram => &self.config.media.fram,
            Medium::Flash => &self.config.media.flash,
        }
    }

    fn push_at(&mut self, time_ms: u64, kind: RecordKind) {
        self.log.push(time_ms, self.platform.level_uj(), kind);
    }

    fn push_now(&mut self, kind: RecordKind) {
        self.push_at(self.platform.now_ms(), kind);
    }
}
