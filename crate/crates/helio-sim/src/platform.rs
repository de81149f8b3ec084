//! Harvesting power path: trace in, buffer in the middle, load out.
//!
//! Everything is accounted in microjoules over integer-millisecond time.
//! Harvest traces are step-hold: each sample's power holds until the next
//! sample's timestamp, and power is zero before the first sample. The buffer
//! clamps to [0, capacity]; energy discarded at the top is metered as clamp
//! loss so the conservation ledger stays exact.

use crate::error::SimError;
use rand::{Rng, RngExt};

/// Energy store with brown-out and cold-start thresholds.
///
/// A brown-out fires when the pre-clamp level would fall below
/// `brown_out_uj`; the device can boot again only once the level has climbed
/// back to `cold_start_uj`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBuffer {
    pub capacity_uj: f64,
    pub level_uj: f64,
    pub brown_out_uj: f64,
    pub cold_start_uj: f64,
}

/// What one buffer update did: how much energy actually left the buffer, how
/// much arriving harvest was discarded at the top, and whether the pre-clamp
/// level dipped below the brown-out threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub load_drawn_uj: f64,
    pub clamp_loss_uj: f64,
    pub brown_out: bool,
}

impl EnergyBuffer {
    pub fn new(capacity_uj: f64, level_uj: f64, brown_out_uj: f64, cold_start_uj: f64) -> EnergyBuffer {
        EnergyBuffer { capacity_uj, level_uj, brown_out_uj, cold_start_uj }
    }

    /// Adds `harvest_uj`, removes `load_uj`, clamps to [0, capacity].
    ///
    /// When the buffer empties, only the available energy is drawn; when it
    /// overflows, the excess is reported as clamp loss. The returned figures
    /// satisfy `level' = level + harvest - drawn - loss` exactly.
    pub fn apply(&mut self, harvest_uj: f64, load_uj: f64) -> StepOutcome {
        let pre = self.level_uj + harvest_uj - load_uj;
        let brown_out = pre < self.brown_out_uj;
        if pre < 0.0 {
            let drawn = self.level_uj + harvest_uj;
            self.level_uj = 0.0;
            StepOutcome { load_drawn_uj: drawn, clamp_loss_uj: 0.0, brown_out }
        } else if pre > self.capacity_uj {
            let loss = pre - self.capacity_uj;
            self.level_uj = self.capacity_uj;
            StepOutcome { load_drawn_uj: load_uj, clamp_loss_uj: loss, brown_out }
        } else {
            self.level_uj = pre;
            StepOutcome { load_drawn_uj: load_uj, clamp_loss_uj: 0.0, brown_out }
        }
    }

    /// One discrete step: integrates `harvest_power_uw` over `dt_ms` and
    /// applies it together with a lump `load_uj`.
    pub fn step(&mut self, harvest_power_uw: f64, load_uj: f64, dt_ms: u64) -> StepOutcome {
        self.apply(harvest_power_uw * dt_ms as f64 / 1000.0, load_uj)
    }
}

/// Time-stamped harvest power samples with step-hold interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestTrace {
    samples: Vec<(u64, f64)>,
}

impl HarvestTrace {
    pub fn new(samples: Vec<(u64, f64)>) -> Result<HarvestTrace, SimError> {
        for (i, &(t, p)) in samples.iter().enumerate() {
            if i > 0 && t <= samples[i - 1].0 {
                return Err(SimError::Trace(format!(
                    "sample {i}: time {t} ms does not increase past {} ms",
                    samples[i - 1].0
                )));
            }
            if p < 0.0 || !p.is_finite() {
                return Err(SimError::Trace(format!("sample {i}: power {p} µW is not a finite non-negative value")));
            }
        }
        Ok(HarvestTrace { samples })
    }

    /// A single sample at t=0, holding forever.
    pub fn constant(power_uw: f64) -> HarvestTrace {
        HarvestTrace::new(vec![(0, power_uw)]).expect("constant power must be non-negative")
    }

    /// Parses the `time_ms,power_uW` CSV format.
    pub fn from_csv(text: &str) -> Result<HarvestTrace, SimError> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) if line.trim().is_empty() => continue,
                Some((n, line)) => break (n, line),
                None => return Err(SimError::Trace("empty trace file".into())),
            }
        };
        if header.1.trim() != "time_ms,power_uW" {
            return Err(SimError::Trace(format!(
                "line {}: expected header `time_ms,power_uW`, found `{}`",
                header.0 + 1,
                header.1.trim()
            )));
        }
        let mut samples = Vec::new();
        for (n, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (time, power) = match (fields.next(), fields.next(), fields.next()) {
                (Some(t), Some(p), None) => (t.trim(), p.trim()),
                _ => return Err(SimError::Trace(format!("line {}: expected two comma-separated fields", n + 1))),
            };
            let time: u64 = time
                .parse()
                .map_err(|_| SimError::Trace(format!("line {}: bad time `{time}`", n + 1)))?;
            let power: f64 = power
                .parse()
                .map_err(|_| SimError::Trace(format!("line {}: bad power `{power}`", n + 1)))?;
            samples.push((time, power));
        }
        let trace = HarvestTrace::new(samples);
        if let Err(SimError::Trace(msg)) = trace {
            return Err(SimError::Trace(format!("trace body: {msg}")));
        }
        trace
    }

    pub fn samples(&self) -> &[(u64, f64)] {
        &self.samples
    }

    /// Step-hold power at time `t_ms`; zero before the first sample.
    pub fn power_at(&self, t_ms: u64) -> f64 {
        match self.samples.partition_point(|&(s, _)| s <= t_ms) {
            0 => 0.0,
            i => self.samples[i - 1].1,
        }
    }

    /// The first sample timestamp strictly after `t_ms`, if any.
    pub fn next_boundary_after(&self, t_ms: u64) -> Option<u64> {
        let i = self.samples.partition_point(|&(s, _)| s <= t_ms);
        self.samples.get(i).map(|&(s, _)| s)
    }

    /// Exact integral of harvest power over [t0, t1), in microjoules.
    pub fn energy_between(&self, t0_ms: u64, t1_ms: u64) -> f64 {
        if t1_ms <= t0_ms {
            return 0.0;
        }
        let mut total = 0.0;
        let mut cursor = t0_ms;
        while cursor < t1_ms {
            let segment_end = self.next_boundary_after(cursor).unwrap_or(u64::MAX).min(t1_ms);
            let dt = segment_end - cursor;
            total += self.power_at(cursor) * dt as f64 / 1000.0;
            cursor = segment_end;
        }
        total
    }

    /// A copy with each sample's power scaled by a factor drawn uniformly
    /// from [1 - frac, 1 + frac], floored at zero.
    pub fn jittered<R: Rng>(&self, frac: f64, rng: &mut R) -> HarvestTrace {
        let samples = self
            .samples
            .iter()
            .map(|&(t, p)| {
                let factor: f64 = rng.random_range(-frac..=frac);
                (t, (p * (1.0 + factor)).max(0.0))
            })
            .collect();
        HarvestTrace { samples }
    }
}

/// What to wait for in [`EnergyPlatform::run_until`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunCondition {
    /// Absolute simulation time.
    TimeReached(u64),
    /// Sleep-style wake: an absolute timer deadline, a buffer-level
    /// threshold, either, or neither (sleep until brown-out or horizon).
    Wake { timer_deadline_ms: Option<u64>, threshold_uj: Option<f64> },
    /// Only a brown-out stops the run.
    BrownOut,
}

impl RunCondition {
    fn describe(&self) -> String {
        match self {
            RunCondition::TimeReached(t) => format!("time {t} ms"),
            RunCondition::Wake { timer_deadline_ms, threshold_uj } => {
                let timer = timer_deadline_ms.map_or("none".to_string(), |d| format!("{d} ms"));
                let threshold = threshold_uj.map_or("none".to_string(), |t| format!("{t} µJ"));
                format!("wake (timer {timer}, threshold {threshold})")
            }
            RunCondition::BrownOut => "brown-out".to_string(),
        }
    }

    fn deadline_ms(&self) -> Option<u64> {
        match self {
            RunCondition::TimeReached(t) => Some(*t),
            RunCondition::Wake { timer_deadline_ms, .. } => *timer_deadline_ms,
            RunCondition::BrownOut => None,
        }
    }

    fn threshold_uj(&self) -> Option<f64> {
        match self {
            RunCondition::Wake { threshold_uj, .. } => *threshold_uj,
            _ => None,
        }
    }
}

/// Why [`EnergyPlatform::run_until`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCause {
    TimeReached,
    Timer,
    Threshold,
    BrownOut,
}

impl StopCause {
    pub fn name(self) -> &'static str {
        match self {
            StopCause::TimeReached => "time_reached",
            StopCause::Timer => "timer",
            StopCause::Threshold => "threshold",
            StopCause::BrownOut => "brown_out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStop {
    pub cause: StopCause,
    pub elapsed_ms: u64,
}

/// The coupled trace + buffer with a simulation clock and running meters.
///
/// Meters satisfy the conservation ledger
/// `level = level_start + harvested - load - clamp_loss` to accumulator
/// precision, because every exchange goes through [`EnergyBuffer::apply`].
#[derive(Debug, Clone)]
pub struct EnergyPlatform {
    pub buffer: EnergyBuffer,
    trace: HarvestTrace,
    now_ms: u64,
    level_start_uj: f64,
    harvested_uj: f64,
    load_uj: f64,
    clamp_loss_uj: f64,
}

impl EnergyPlatform {
    pub fn new(buffer: EnergyBuffer, trace: HarvestTrace) -> EnergyPlatform {
        let level_start_uj = buffer.level_uj;
        EnergyPlatform {
            buffer,
            trace,
            now_ms: 0,
            level_start_uj,
            harvested_uj: 0.0,
            load_uj: 0.0,
            clamp_loss_uj: 0.0,
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn level_uj(&self) -> f64 {
        self.buffer.level_uj
    }

    pub fn level_start_uj(&self) -> f64 {
        self.level_start_uj
    }

    pub fn harvested_uj(&self) -> f64 {
        self.harvested_uj
    }

    pub fn load_uj(&self) -> f64 {
        self.load_uj
    }

    pub fn clamp_loss_uj(&self) -> f64 {
        self.clamp_loss_uj
    }

    pub fn trace(&self) -> &HarvestTrace {
        &self.trace
    }

    /// `level - (level_start + harvested - load - clamp_loss)`; zero up to
    /// float accumulation error.
    pub fn conservation_residual_uj(&self) -> f64 {
        self.buffer.level_uj - (self.level_start_uj + self.harvested_uj - self.load_uj - self.clamp_loss_uj)
    }

    /// Advances the clock by `dt_ms`, integrating trace harvest over the
    /// span and drawing `load_uj` as one lump.
    pub fn advance(&mut self, dt_ms: u64, load_uj: f64) -> StepOutcome {
        let harvest = self.trace.energy_between(self.now_ms, self.now_ms + dt_ms);
        self.now_ms += dt_ms;
        let outcome = self.buffer.apply(harvest, load_uj);
        self.account(outcome, harvest)
    }

    /// Draws `load_uj` instantaneously at the current time.
    pub fn spend(&mut self, load_uj: f64) -> StepOutcome {
        let outcome = self.buffer.apply(0.0, load_uj);
        self.account(outcome, 0.0)
    }

    fn account(&mut self, outcome: StepOutcome, harvest_uj: f64) -> StepOutcome {
        self.harvested_uj += harvest_uj;
        self.load_uj += outcome.load_drawn_uj;
        self.clamp_loss_uj += outcome.clamp_loss_uj;
        outcome
    }

    /// Trailing-window mean harvest rate, scaled to µJ/hr. The denominator
    /// is the full window even when less history exists, so the estimate
    /// ramps up from zero after boot rather than spiking.
    pub fn tendency_uj_per_hr(&self, window_ms: u64) -> f64 {
        if window_ms == 0 {
            return 0.0;
        }
        let from = self.now_ms.saturating_sub(window_ms);
        self.trace.energy_between(from, self.now_ms) * 3_600_000.0 / window_ms as f64
    }

    /// Integrates the trace against a constant `draw_uw` until the condition
    /// fires, stepping analytically from one trace segment to the next.
    ///
    /// A brown-out always stops the run, whatever the condition. When several
    /// stops land on the same millisecond the priority is brown-out, then
    /// time, then timer, then threshold. If the condition cannot fire by
    /// `horizon_ms` (absolute), the platform is left advanced to the horizon
    /// and an error is returned.
    pub fn run_until(
        &mut self,
        condition: RunCondition,
        draw_uw: f64,
        horizon_ms: u64,
    ) -> Result<RunStop, SimError> {
        let start = self.now_ms;
        if self.buffer.level_uj < self.buffer.brown_out_uj {
            return Ok(RunStop { cause: StopCause::BrownOut, elapsed_ms: 0 });
        }
        loop {
            if let Some(cause) = self.condition_met(&condition) {
                return Ok(RunStop { cause, elapsed_ms: self.now_ms - start });
            }
            if self.now_ms >= horizon_ms {
                return Err(SimError::HorizonExceeded {
                    elapsed_ms: self.now_ms,
                    waiting_for: condition.describe(),
                });
            }
            let segment_end = self
                .trace
                .next_boundary_after(self.now_ms)
                .unwrap_or(u64::MAX)
                .min(horizon_ms);
            let net_uw = self.trace.power_at(self.now_ms) - draw_uw;
            let level = self.buffer.level_uj;
            let mut stop = segment_end;
            if let Some(threshold) = condition.threshold_uj() {
                if threshold <= self.buffer.capacity_uj && net_uw > 0.0 && level < threshold {
                    let dt = ((threshold - level) * 1000.0 / net_uw).ceil() as u64;
                    stop = stop.min(self.now_ms + dt.max(1));
                }
            }
            if let Some(deadline) = condition.deadline_ms() {
                stop = stop.min(deadline);
            }
            if net_uw < 0.0 && level >= self.buffer.brown_out_uj {
                let dt = ((level - self.buffer.brown_out_uj) * 1000.0 / -net_uw).floor() as u64 + 1;
                stop = stop.min(self.now_ms + dt);
            }
            let stop = stop.max(self.now_ms + 1);
            let dt = stop - self.now_ms;
            let outcome = self.advance(dt, draw_uw * dt as f64 / 1000.0);
            if outcome.brown_out {
                return Ok(RunStop { cause: StopCause::BrownOut, elapsed_ms: self.now_ms - start });
            }
        }
    }

    fn condition_met(&self, condition: &RunCondition) -> Option<StopCause> {
        match condition {
            RunCondition::TimeReached(t) if self.now_ms >= *t => Some(StopCause::TimeReached),
            RunCondition::Wake { timer_deadline_ms, threshold_uj } => {
                if timer_deadline_ms.is_some_and(|d| self.now_ms >= d) {
                    Some(StopCause::Timer)
                } else if threshold_uj.is_some_and(|t| self.buffer.level_uj >= t) {
                    Some(StopCause::Threshold)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}
