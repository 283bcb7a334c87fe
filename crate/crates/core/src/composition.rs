//! Composite trust over simultaneously active links, plus the per-flow view
//! of network trust.
//!
//! Aggregators per component: identity and device take the strongest link
//! (`max`), network and policy the weakest (`min`), context the arithmetic
//! mean. Links are kept in a `BTreeMap`, so reductions always run in the
//! same order and the result never depends on insertion order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trust::{composite_score, RatId, TrustComponent, TrustState, WeightVector};

/// Context value assumed for an opaque silo link.
pub const DEFAULT_SILO_CONTEXT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveLink {
    pub state: TrustState,
    pub activated_at_ms: u64,
    /// Silo links expose no measurable context.
    pub silo: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParallelLinkSet {
    links: BTreeMap<RatId, ActiveLink>,
    silo_context: Option<f64>,
}

impl ParallelLinkSet {
    pub fn new() -> Self {
        ParallelLinkSet {
            links: BTreeMap::new(),
            silo_context: Some(DEFAULT_SILO_CONTEXT),
        }
    }

    /// `None` makes silo links contribute their own `s_ctx`.
    pub fn with_silo_context(mut self, value: Option<f64>) -> Self {
        self.silo_context = value;
        self
    }

    pub fn insert(&mut self, rat: RatId, state: TrustState, activated_at_ms: u64, silo: bool) {
        self.links.insert(
            rat,
            ActiveLink {
                state,
                activated_at_ms,
                silo,
            },
        );
    }

    pub fn single(rat: impl Into<RatId>, state: TrustState) -> Self {
        let mut set = Self::new();
        set.insert(rat.into(), state, 0, false);
        set
    }

    pub fn get(&self, rat: &str) -> Option<&ActiveLink> {
        self.links.get(rat)
    }

    pub fn contains(&self, rat: &str) -> bool {
        self.links.contains_key(rat)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn rats(&self) -> impl Iterator<Item = &RatId> {
        self.links.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RatId, &ActiveLink)> {
        self.links.iter()
    }

    fn context_of(&self, link: &ActiveLink) -> f64 {
        match (link.silo, self.silo_context) {
            (true, Some(v)) => v,
            _ => link.state.get(TrustComponent::Context),
        }
    }

    /// Component-wise aggregate `f_j(s_j(R_1), …, s_j(R_m))`.
    pub fn aggregate(&self) -> Result<TrustState> {
        if self.links.is_empty() {
            return Err(Error::EmptyLinkSet);
        }
        let n = self.links.len() as f64;
        let mut out = [0.0; 5];
        for c in TrustComponent::ALL {
            let values = self.links.values().map(|l| match c {
                TrustComponent::Context => self.context_of(l),
                _ => l.state.get(c),
            });
            out[c.index()] = match c {
                TrustComponent::Identity | TrustComponent::Device => {
                    values.fold(f64::NEG_INFINITY, f64::max)
                }
                TrustComponent::Network | TrustComponent::Policy => {
                    values.fold(f64::INFINITY, f64::min)
                }
                TrustComponent::Context => values.sum::<f64>() / n,
            };
        }
        TrustState::new(out.map(|v| v.clamp(0.0, 1.0)))
    }
}

/// `T_∥ = Σ_j w_j · f_j(…)`.
pub fn parallel_compose(links: &ParallelLinkSet, weights: &WeightVector) -> Result<f64> {
    Ok(composite_score(&links.aggregate()?, weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensitivity {
    Low,
    Medium,
    High,
}

impl Sensitivity {
    /// Minimum carrier `s_net` before a flow is flagged.
    pub fn threshold(self) -> f64 {
        match self {
            Sensitivity::High => 0.6,
            Sensitivity::Medium => 0.4,
            Sensitivity::Low => 0.0,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Sensitivity::Low => "low",
            Sensitivity::Medium => "medium",
            Sensitivity::High => "high",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Sensitivity::Low),
            "medium" => Some(Sensitivity::Medium),
            "high" => Some(Sensitivity::High),
            _ => None,
        }
    }
}

impl fmt::Display for Sensitivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowAssignment {
    pub flow_id: String,
    pub carried_on: RatId,
    pub sensitivity: Sensitivity,
}

/// Each flow's network trust is the `s_net` of its own carrier.
pub fn per_flow_network_trust(
    flows: &[FlowAssignment],
    links: &ParallelLinkSet,
) -> Result<BTreeMap<String, f64>> {
    flows
        .iter()
        .map(|f| {
            let link = links.get(f.carried_on.as_str()).ok_or_else(|| Error::FlowOnInactiveLink {
                flow: f.flow_id.clone(),
                rat: f.carried_on.to_string(),
            })?;
            Ok((f.flow_id.clone(), link.state.get(TrustComponent::Network)))
        })
        .collect()
}
