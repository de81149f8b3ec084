//! Simulation configuration: a versioned TOML document.
//!
//! Only the buffer, the horizon, and the format version are mandatory; every
//! other section has conservative defaults. Unknown keys are rejected so a
//! typo cannot silently disable a section.

use crate::error::SimError;
use crate::persist::MediumProfile;
use helio_asl::Literal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub version: u32,
    pub buffer: BufferConfig,
    pub sim: SimSection,
    #[serde(default)]
    pub cycle: CycleConfig,
    #[serde(default)]
    pub sleep: SleepConfig,
    #[serde(default)]
    pub wake: WakeConfig,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub tendency: TendencyConfig,
    #[serde(default)]
    pub boot: BootConfig,
    #[serde(default, rename = "inject")]
    pub injections: Vec<Injection>,
    #[serde(default)]
    pub actions: BTreeMap<String, ActionCost>,
    #[serde(default)]
    pub media: MediaConfig,
    #[serde(default)]
    pub trace: TraceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferConfig {
    pub capacity_uj: f64,
    pub initial_uj: f64,
    #[serde(default)]
    pub brown_out_uj: f64,
    #[serde(default)]
    pub cold_start_uj: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon_ms: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleConfig {
    pub overhead_uj: f64,
    pub duration_ms: u64,
}

impl Default for CycleConfig {
    fn default() -> CycleConfig {
        CycleConfig { overhead_uj: 1.0, duration_ms: 1 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SleepConfig {
    pub draw_uw: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WakeConfig {
    pub timer_ms: Option<u64>,
    pub energy_threshold_uj: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub alpha: f64,
}

impl Default for LearningConfig {
    fn default() -> LearningConfig {
        LearningConfig { alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TendencyConfig {
    pub window_ms: u64,
}

impl Default for TendencyConfig {
    fn default() -> TendencyConfig {
        TendencyConfig { window_ms: 60_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnIdle {
    /// Enter deep sleep when nothing is runnable.
    Sleep,
    /// Keep cycling (and paying overhead) while idle.
    Spin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootConfig {
    /// Goals posted as external achievement events at every boot and wake.
    pub goals: Vec<String>,
    pub on_idle: OnIdle,
}

impl Default for BootConfig {
    fn default() -> BootConfig {
        BootConfig { goals: Vec::new(), on_idle: OnIdle::Sleep }
    }
}

/// A goal posted once, at the first cycle at or after `at_ms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub at_ms: u64,
    pub goal: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionCost {
    pub energy_uj: f64,
    #[serde(default)]
    pub duration_ms: u64,
    /// Belief functor whose `impact` annotation overrides `energy_uj`,
    /// matched on the action's first argument.
    #[serde(default)]
    pub impact_from: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediaConfig {
    pub fram: MediumProfile,
    pub flash: MediumProfile,
}

impl Default for MediaConfig {
    fn default() -> MediaConfig {
        MediaConfig { fram: MediumProfile::fram_default(), flash: MediumProfile::flash_default() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    /// Relative harvest jitter in [0, 1); 0 disables the seeded RNG.
    pub jitter: f64,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<SimConfig, SimError> {
        let config: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.version != CONFIG_VERSION {
            return Err(SimError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let b = &self.buffer;
        if !b.capacity_uj.is_finite() || b.capacity_uj <= 0.0 {
            return Err(SimError::Validation("buffer.capacity_uj must be > 0".into()));
        }
        if !(0.0..=b.capacity_uj).contains(&b.initial_uj) {
            return Err(SimError::Validation("buffer.initial_uj must lie in [0, capacity]".into()));
        }
        if b.brown_out_uj < 0.0 || b.cold_start_uj < b.brown_out_uj {
            return Err(SimError::Validation(
                "buffer thresholds must satisfy 0 <= brown_out_uj <= cold_start_uj".into(),
            ));
        }
        if self.sim.horizon_ms == 0 {
            return Err(SimError::Validation("sim.horizon_ms must be > 0".into()));
        }
        if !(self.learning.alpha > 0.0 && self.learning.alpha <= 1.0) {
            return Err(SimError::Validation("learning.alpha must lie in (0, 1]".into()));
        }
        if !self.cycle.overhead_uj.is_finite() || self.cycle.overhead_uj <= 0.0 {
            return Err(SimError::Validation("cycle.overhead_uj must be > 0".into()));
        }
        if self.cycle.duration_ms == 0 {
            return Err(SimError::Validation("cycle.duration_ms must be >= 1".into()));
        }
        if self.sleep.draw_uw < 0.0 {
            return Err(SimError::Validation("sleep.draw_uw must be >= 0".into()));
        }
        if self.tendency.window_ms == 0 {
            return Err(SimError::Validation("tendency.window_ms must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.trace.jitter) {
            return Err(SimError::Validation("trace.jitter must lie in [0, 1)".into()));
        }
        for (name, cost) in &self.actions {
            if cost.energy_uj < 0.0 {
                return Err(SimError::Validation(format!("actions.{name}.energy_uj must be >= 0")));
            }
        }
        for profile in [&self.media.fram, &self.media.flash] {
            if profile.write_cost_uj_per_byte < 0.0
                || profile.read_cost_uj_per_byte < 0.0
                || profile.write_latency_ms_per_byte < 0.0
            {
                return Err(SimError::Validation("media costs must be >= 0".into()));
            }
        }
        self.boot_goals()?;
        self.injection_goals()?;
        Ok(())
    }

    /// Boot goals parsed into ground literals.
    pub fn boot_goals(&self) -> Result<Vec<Literal>, SimError> {
        self.boot.goals.iter().map(|g| parse_goal(g, "boot.goals")).collect()
    }

    /// Injection goals parsed into ground literals, paired with their times.
    pub fn injection_goals(&self) -> Result<Vec<(u64, Literal)>, SimError> {
        self.injections
            .iter()
            .map(|inj| Ok((inj.at_ms, parse_goal(&inj.goal, "inject.goal")?)))
            .collect()
    }
}

fn parse_goal(text: &str, place: &str) -> Result<Literal, SimError> {
    let lit = helio_asl::parse_literal(text)
        .map_err(|e| SimError::Validation(format!("{place}: `{text}`: {e}")))?;
    if !lit.is_ground() {
        return Err(SimError::Validation(format!("{place}: `{text}` must be ground")));
    }
    Ok(lit)
}
