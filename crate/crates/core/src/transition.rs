//! Transition taxonomy, survival matrices, recovery cost and post-crossing
//! recovery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trust::{PerComponent, RatId, RatProfile, TrustComponent, TrustState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    Planned,
    CoverageDriven,
    Opportunistic,
    AdversaryForced,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 4] = [
        TransitionKind::Planned,
        TransitionKind::CoverageDriven,
        TransitionKind::Opportunistic,
        TransitionKind::AdversaryForced,
    ];

    /// Scenario-file keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            TransitionKind::Planned => "planned",
            TransitionKind::CoverageDriven => "coverage",
            TransitionKind::Opportunistic => "opportunistic",
            TransitionKind::AdversaryForced => "adversary",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Cost multiplier `α(β)`.
pub fn cost_multiplier(kind: TransitionKind) -> f64 {
    match kind {
        TransitionKind::Planned => 1.0,
        TransitionKind::CoverageDriven => 1.3,
        TransitionKind::Opportunistic => 0.8,
        TransitionKind::AdversaryForced => 2.0,
    }
}

/// Survival matrices `σ_j(from, to)`, one per trust component.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurvivalMatrixSet {
    rats: BTreeSet<RatId>,
    entries: [BTreeMap<(RatId, RatId), f64>; 5],
}

impl SurvivalMatrixSet {
    pub fn new(rats: impl IntoIterator<Item = RatId>) -> Self {
        SurvivalMatrixSet {
            rats: rats.into_iter().collect(),
            entries: Default::default(),
        }
    }

    pub fn register(&mut self, rat: RatId) {
        self.rats.insert(rat);
    }

    pub fn rats(&self) -> impl Iterator<Item = &RatId> {
        self.rats.iter()
    }

    pub fn contains(&self, rat: &str) -> bool {
        self.rats.contains(rat)
    }

    fn known(&self, rat: &str) -> Result<RatId> {
        self.rats
            .get(rat)
            .cloned()
            .ok_or_else(|| Error::UnknownRat(rat.to_string()))
    }

    pub fn set(&mut self, c: TrustComponent, from: &str, to: &str, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitRange {
                what: format!("sigma_{c}({from}, {to})"),
                value,
            });
        }
        let key = (self.known(from)?, self.known(to)?);
        self.entries[c.index()].insert(key, value);
        Ok(())
    }

    pub fn get(&self, c: TrustComponent, from: &str, to: &str) -> Result<f64> {
        let key = (self.known(from)?, self.known(to)?);
        self.entries[c.index()]
            .get(&key)
            .copied()
            .ok_or_else(|| Error::MissingSurvival {
                component: c.short(),
                from: from.to_string(),
                to: to.to_string(),
            })
    }

    /// The survival vector `σ(from, to)` across all five components.
    pub fn vector(&self, from: &str, to: &str) -> Result<PerComponent<f64>> {
        let mut out = PerComponent::splat(0.0);
        for c in TrustComponent::ALL {
            out[c] = self.get(c, from, to)?;
        }
        Ok(out)
    }

    /// Every registered pair must have an entry in every matrix.
    pub fn validate_complete(&self) -> Result<()> {
        for c in TrustComponent::ALL {
            for from in &self.rats {
                for to in &self.rats {
                    self.get(c, from.as_str(), to.as_str())?;
                }
            }
        }
        Ok(())
    }

    /// Explicit entries of one matrix, ordered by `(from, to)`.
    pub fn entries(&self, c: TrustComponent) -> impl Iterator<Item = (&RatId, &RatId, f64)> {
        self.entries[c.index()].iter().map(|((f, t), v)| (f, t, *v))
    }
}

/// Full record of one boundary crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub time_s: f64,
    pub from_rat: RatId,
    pub to_rat: RatId,
    pub kind: TransitionKind,
    pub alpha: f64,
    pub pre_state: TrustState,
    pub post_state: TrustState,
    pub recovered_state: TrustState,
    /// Naive (full re-establishment) cost.
    pub cost_mj: f64,
    /// Cost with portable evidence, when portability is configured.
    pub portable_cost_mj: Option<f64>,
    pub latency_ms: f64,
    pub portable_latency_ms: Option<f64>,
    /// `table` when the cost came from a scenario override, `formula` otherwise.
    pub cost_source: CostSource,
    pub trust_gap_s: f64,
    pub gap_exploited: bool,
    pub accepted_components: Vec<TrustComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostSource {
    Formula,
    Table,
}

impl fmt::Display for CostSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostSource::Formula => "formula",
            CostSource::Table => "table",
        })
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// `s_j ← σ_j · s_j` for an explicit survival vector.
pub fn apply_survival(state: &TrustState, sigma: &PerComponent<f64>) -> TrustState {
    state.map_clamped(|c, s| sigma[c] * s)
}

pub fn apply_crossing(
    state: &TrustState,
    from: &str,
    to: &str,
    matrices: &SurvivalMatrixSet,
) -> Result<TrustState> {
    Ok(apply_survival(state, &matrices.vector(from, to)?))
}

/// `α · Σ_j c_j · (1 − σ_j)` for an explicit survival vector.
pub fn recovery_cost_with(
    sigma: &PerComponent<f64>,
    costs: &PerComponent<f64>,
    kind: TransitionKind,
) -> f64 {
    let deficit: f64 = TrustComponent::ALL
        .iter()
        .map(|&c| costs[c] * (1.0 - sigma[c]))
        .sum();
    cost_multiplier(kind) * deficit
}

pub fn recovery_cost(
    from: &str,
    to: &RatProfile,
    kind: TransitionKind,
    matrices: &SurvivalMatrixSet,
) -> Result<f64> {
    let sigma = matrices.vector(from, to.id.as_str())?;
    Ok(recovery_cost_with(&sigma, &to.cost_mj, kind))
}

/// Re-establishment latency `Σ_j L_j · (1 − σ_j)`; the transition multiplier
/// is an energy overhead and is not applied here.
pub fn recovery_latency_with(sigma: &PerComponent<f64>, latency: &PerComponent<f64>) -> f64 {
    TrustComponent::ALL
        .iter()
        .map(|&c| latency[c] * (1.0 - sigma[c]))
        .sum()
}

/// Full re-authentication on the target: `min(ŝ_j, max(s_j, r_j))`.
pub fn recover(post_state: &TrustState, to: &RatProfile) -> TrustState {
    post_state.map_clamped(|c, s| s.max(to.reauth.get(c)).min(to.ceiling.get(c)))
}
