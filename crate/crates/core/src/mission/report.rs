use serde::Serialize;

use crate::adversary::TrustGap;
use crate::composition::Sensitivity;
use crate::portability::ArtefactDecision;
use crate::scenario::ReferenceValue;
use crate::transition::{CostSource, CrossingRecord};
use crate::trust::{RatId, TrustComponent, TrustState};

/// One sample of the mission timeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineRow {
    pub t_ms: u64,
    pub event: String,
    pub active_rats: Vec<RatId>,
    pub links: Vec<(RatId, TrustState)>,
    pub aggregate: TrustState,
    pub composite: f64,
    pub energy_cum_mj: f64,
    pub below_threshold: bool,
}

impl TimelineRow {
    pub fn t_s(&self) -> f64 {
        self.t_ms as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timeline {
    pub rows: Vec<TimelineRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub label: String,
    pub naive_mj: f64,
    pub portable_mj: Option<f64>,
    pub source: CostSource,
}

impl LedgerRow {
    /// Percentage saved by the portable path, when there is one.
    pub fn saving_pct(&self) -> Option<f64> {
        let p = self.portable_mj?;
        (self.naive_mj > 0.0 && p != self.naive_mj).then(|| 100.0 * (1.0 - p / self.naive_mj))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
    pub naive_total_mj: f64,
    pub portable_total_mj: Option<f64>,
}

impl EnergyLedger {
    pub fn saving_pct(&self) -> Option<f64> {
        let p = self.portable_total_mj?;
        (self.naive_total_mj > 0.0).then(|| 100.0 * (1.0 - p / self.naive_total_mj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationSummary {
    pub count: u64,
    pub interval_s: f64,
    pub energy_mj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exposure {
    pub minutes: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum BudgetVerdict {
    Feasible { budget_mj: f64 },
    Infeasible { budget_mj: f64, deficit_mj: f64 },
    NotConfigured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtefactEvent {
    pub time_s: f64,
    pub label: String,
    pub issuer: String,
    pub component: TrustComponent,
    pub decision: ArtefactDecision,
    pub replay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub flow_id: String,
    pub carried_on: RatId,
    pub sensitivity: Sensitivity,
    pub threshold: f64,
    pub min_s_net: Option<f64>,
    pub samples_active: usize,
    pub samples_below: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceCheck {
    pub key: String,
    pub expected: String,
    pub computed: Option<f64>,
    pub delta: Option<f64>,
    pub tolerance: f64,
    pub mismatch: bool,
}

impl ReferenceCheck {
    pub fn new(reference: &ReferenceValue, computed: Option<f64>) -> Self {
        let expected = reference.value();
        let tolerance = reference.tolerance();
        let delta = computed.map(|c| c - expected);
        ReferenceCheck {
            key: reference.key.clone(),
            expected: reference.literal.clone(),
            computed,
            delta,
            tolerance,
            mismatch: delta.is_none_or(|d| d.abs() > tolerance + 1e-12),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_min: f64,
    pub t_min: f64,
    pub weights: [f64; 5],
    pub crossings: Vec<CrossingRecord>,
    pub ledger: EnergyLedger,
    pub verification: VerificationSummary,
    pub total_energy_mj: f64,
    pub exposure: Exposure,
    pub budget: BudgetVerdict,
    pub artefacts: Vec<ArtefactEvent>,
    pub gaps: Vec<TrustGap>,
    pub flows: Vec<FlowSummary>,
    pub warnings: Vec<String>,
    pub reference_checks: Vec<ReferenceCheck>,
}

impl MissionReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &ReferenceCheck> {
        self.reference_checks.iter().filter(|c| c.mismatch)
    }

    pub fn exploited_gaps(&self) -> usize {
        self.gaps.iter().filter(|g| g.exploited).count()
    }
}
