//! Scenario files: grammar, resolution against the default RAT data, and the
//! canonical emitter.
//!
//! A scenario is an INI-like text file. Sections are `[mission]`,
//! `[rat <id>]`, `[survival <component>]`, `[event]` (repeatable),
//! `[portability]`, `[flows]`, `[trajectory]` and `[reference]`. Vectors are
//! five whitespace-separated numbers in `id dev ctx net pol` order.

mod build;
mod diagnostic;
mod emit;
mod syntax;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;

pub use build::{parse_scenario, parse_scenario_with, Parsed};
pub use diagnostic::{Diagnostic, Severity};
pub use emit::{emit_scenario, emit_survival};

use crate::adversary::AdversaryAction;
use crate::composition::FlowAssignment;
use crate::error::{Error, Result};
use crate::portability::PortabilityConfig;
use crate::transition::{SurvivalMatrixSet, TransitionKind};
use crate::trust::{RatId, RatProfile, TrustState, WeightVector};

/// Environment variable naming a directory that replaces the bundled data.
pub const DATA_DIR_ENV: &str = "ZT_RATSIM_DATA";

const DEFAULTS_SCN: &str = include_str!("../../data/defaults.scn");

/// Scenarios bundled with the crate, addressable by name.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("worked-example", include_str!("../../data/scenarios/worked-example.scn")),
    ("case-study", include_str!("../../data/scenarios/case-study.scn")),
    ("figure-2", include_str!("../../data/scenarios/figure-2.scn")),
    ("portability-ladder-none", include_str!("../../data/scenarios/portability-ladder-none.scn")),
    ("portability-ladder-id", include_str!("../../data/scenarios/portability-ladder-id.scn")),
    ("portability-ladder-full", include_str!("../../data/scenarios/portability-ladder-full.scn")),
    ("jam-two-rat", include_str!("../../data/scenarios/jam-two-rat.scn")),
    ("parallel-c2", include_str!("../../data/scenarios/parallel-c2.scn")),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub p_max_mw: f64,
    pub p_flight_mw: f64,
    pub p_payload_mw: f64,
    pub p_comms_mw: f64,
}

impl PowerBudget {
    /// `P_auth = P_max − P_flight − P_payload − P_comms`.
    pub fn p_auth_mw(&self) -> f64 {
        self.p_max_mw - self.p_flight_mw - self.p_payload_mw - self.p_comms_mw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Transition {
        to: RatId,
        from: Option<RatId>,
        kind: TransitionKind,
        cost_mj: Option<f64>,
        portable_cost_mj: Option<f64>,
        label: Option<String>,
    },
    Adversary(AdversaryAction),
    Trigger { name: String },
    LinkUp { rat: RatId, state: Option<TrustState> },
    LinkDown { rat: RatId },
    Revoke { artefact: String },
    RemoteId { consistent: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEvent {
    pub at_ms: u64,
    pub kind: EventKind,
}

/// A breakpoint of a prescribed composite-score trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub minute: f64,
    pub score: f64,
    pub rat: Option<RatId>,
}

/// An expected value to compare a run against. The literal keeps its source
/// spelling so the comparison tolerance follows the printed precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    pub key: String,
    pub literal: String,
}

impl ReferenceValue {
    pub fn value(&self) -> f64 {
        self.literal.parse().unwrap_or(f64::NAN)
    }

    pub fn decimals(&self) -> u32 {
        self.literal
            .split_once('.')
            .map_or(0, |(_, frac)| frac.len() as u32)
    }

    /// Half a unit in the last printed place.
    pub fn tolerance(&self) -> f64 {
        0.5 * 10f64.powi(-(self.decimals() as i32))
    }
}

/// Keys accepted in `[reference]`.
pub const REFERENCE_KEYS: &[&str] = &[
    "composite.pre",
    "composite.post",
    "composite.recovered",
    "crossing_cost_mJ",
    "crossing_portable_cost_mJ",
    "crossing_latency_ms",
    "crossing_portable_latency_ms",
    "ledger.naive_total_mJ",
    "ledger.portable_total_mJ",
    "ledger.saving_pct",
    "exposure_min",
    "exposure_pct",
    "verification_count",
];

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionScenario {
    pub name: String,
    pub duration_ms: u64,
    pub weights: WeightVector,
    pub t_min: f64,
    pub verify_interval_ms: u64,
    pub seed: u64,
    pub initial_rat: RatId,
    /// `None` starts from the initial RAT's re-auth attainment.
    pub initial_state: Option<TrustState>,
    pub initial_auth_mj: f64,
    pub initial_auth_portable_mj: Option<f64>,
    /// Links active alongside the initial RAT from t = 0.
    pub parallel: Vec<RatId>,
    /// RATs reachable during the mission; empty means every declared RAT.
    pub available: Vec<RatId>,
    pub exploit_gaps: bool,
    pub power: Option<PowerBudget>,
    /// Context contributed by silo links; `None` uses their own value.
    pub silo_context: Option<f64>,
    pub remote_id_weight: f64,
    pub rats: BTreeMap<RatId, RatProfile>,
    pub matrices: SurvivalMatrixSet,
    pub portability: Option<PortabilityConfig>,
    pub flows: Vec<FlowAssignment>,
    pub events: Vec<ScheduledEvent>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub reference: Vec<ReferenceValue>,
}

impl MissionScenario {
    /// A scenario on the default RATs with no events.
    pub fn new(name: &str, initial_rat: &str, duration_ms: u64, defaults: &Defaults) -> Self {
        MissionScenario {
            name: name.to_string(),
            duration_ms,
            weights: WeightVector::commercial(),
            t_min: 0.6,
            verify_interval_ms: 30_000,
            seed: 42,
            initial_rat: RatId::new(initial_rat),
            initial_state: None,
            initial_auth_mj: 0.0,
            initial_auth_portable_mj: None,
            parallel: Vec::new(),
            available: Vec::new(),
            exploit_gaps: true,
            power: None,
            silo_context: Some(crate::composition::DEFAULT_SILO_CONTEXT),
            remote_id_weight: 0.05,
            rats: defaults.rats.clone(),
            matrices: defaults.matrices.clone(),
            portability: None,
            flows: Vec::new(),
            events: Vec::new(),
            trajectory: Vec::new(),
            reference: Vec::new(),
        }
    }

    pub fn profile(&self, rat: &str) -> Result<&RatProfile> {
        self.rats.get(rat).ok_or_else(|| Error::UnknownRat(rat.to_string()))
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ms as f64 / 1000.0
    }

    /// Reachable RATs, always including the links active at t = 0.
    pub fn reachable(&self) -> std::collections::BTreeSet<RatId> {
        let mut out: std::collections::BTreeSet<RatId> = if self.available.is_empty() {
            self.rats.keys().cloned().collect()
        } else {
            self.available.iter().cloned().collect()
        };
        out.insert(self.initial_rat.clone());
        out.extend(self.parallel.iter().cloned());
        out
    }

    pub fn is_trajectory(&self) -> bool {
        !self.trajectory.is_empty()
    }
}

/// Default RAT profiles and survival matrices that scenarios build on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Defaults {
    pub rats: BTreeMap<RatId, RatProfile>,
    pub matrices: SurvivalMatrixSet,
}

impl Defaults {
    pub fn empty() -> Self {
        Defaults::default()
    }

    /// Parses a defaults file: only `[rat]` and `[survival]` sections.
    pub fn parse(text: &str) -> std::result::Result<Self, Vec<Diagnostic>> {
        build::parse_defaults(text.as_bytes())
    }

    /// The bundled defaults.
    pub fn builtin() -> &'static Defaults {
        static CELL: OnceLock<Defaults> = OnceLock::new();
        CELL.get_or_init(|| Defaults::parse(DEFAULTS_SCN).expect("bundled defaults parse"))
    }

    /// Bundled defaults, or `$ZT_RATSIM_DATA/defaults.scn` when set.
    pub fn load() -> Result<Defaults> {
        match data_dir() {
            Some(dir) => {
                let text = std::fs::read_to_string(dir.join("defaults.scn"))?;
                Defaults::parse(&text).map_err(Error::Scenario)
            }
            None => Ok(Defaults::builtin().clone()),
        }
    }
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Source text of a bundled scenario, preferring an override in the data
/// directory.
pub fn builtin_source(name: &str) -> Option<String> {
    if let Some(dir) = data_dir() {
        if let Ok(text) = std::fs::read_to_string(dir.join("scenarios").join(format!("{name}.scn"))) {
            return Some(text);
        }
    }
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text.to_string())
}

/// Parses a bundled scenario against the bundled defaults.
pub fn builtin(name: &str) -> Result<MissionScenario> {
    let text = BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("no built-in scenario named `{name}`")))?;
    parse_scenario(text.as_bytes())
        .map(|p| p.scenario)
        .map_err(Error::Scenario)
}
