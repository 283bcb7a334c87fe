//! Portable trust evidence: artefact issuance and validation, and the effect
//! of accepted evidence on survival and recovery cost.
//!
//! An artefact carries only the asserted level of one component (never the
//! underlying evidence), is bound to a device identity, and is tagged with
//! HMAC-SHA256 over its canonical encoding:
//!
//! ```text
//! u16 len | issuer utf-8 | u16 len | device utf-8 | u8 component index |
//! u64 level (IEEE-754 bits) | i64 issued_at (ms) | u128 nonce
//! ```
//!
//! All integers are big-endian and there is no padding.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::transition::{cost_multiplier, SurvivalMatrixSet, TransitionKind};
use crate::trust::{PerComponent, RatProfile, TrustComponent};

type HmacSha256 = Hmac<Sha256>;

pub const TAG_LEN: usize = 32;

/// Deterministic key used when a scenario does not configure one.
pub const TEST_MASTER_KEY: [u8; 32] = *b"zt-ratsim deterministic test key";

#[derive(Clone, PartialEq, Eq)]
pub struct ArtefactKey([u8; 32]);

impl ArtefactKey {
    pub fn new(bytes: [u8; 32]) -> Self {
        ArtefactKey(bytes)
    }

    pub fn test_key() -> Self {
        ArtefactKey(TEST_MASTER_KEY)
    }

    pub fn bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Per-issuer key derived from a master key shared by all trust domains.
    pub fn derive_issuer(&self, issuer_id: &str) -> ArtefactKey {
        let mut mac = HmacSha256::new_from_slice(&self.0).expect("any key length");
        mac.update(b"issuer:");
        mac.update(issuer_id.as_bytes());
        ArtefactKey(mac.finalize().into_bytes().into())
    }
}

impl fmt::Debug for ArtefactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ArtefactKey(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustArtefact {
    pub issuer_id: String,
    pub device_id: String,
    pub component: TrustComponent,
    pub asserted_level: f64,
    pub issued_at_ms: i64,
    pub nonce: u128,
    #[serde(with = "hex_tag")]
    pub tag: [u8; TAG_LEN],
}

mod hex_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(tag: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(tag))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(text, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

fn push_str(buf: &mut Vec<u8>, s: &str) {
    let bytes = s.as_bytes();
    let len = u16::try_from(bytes.len()).unwrap_or(u16::MAX);
    buf.extend_from_slice(&len.to_be_bytes());
    buf.extend_from_slice(&bytes[..len as usize]);
}

impl TrustArtefact {
    /// Canonical encoding of every field except the tag.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64 + self.issuer_id.len() + self.device_id.len());
        push_str(&mut buf, &self.issuer_id);
        push_str(&mut buf, &self.device_id);
        buf.push(self.component.index() as u8);
        buf.extend_from_slice(&self.asserted_level.to_bits().to_be_bytes());
        buf.extend_from_slice(&self.issued_at_ms.to_be_bytes());
        buf.extend_from_slice(&self.nonce.to_be_bytes());
        buf
    }

    fn compute_tag(&self, key: &ArtefactKey) -> [u8; TAG_LEN] {
        let mut mac = HmacSha256::new_from_slice(key.bytes()).expect("any key length");
        mac.update(&self.canonical_bytes());
        mac.finalize().into_bytes().into()
    }

    pub fn verify_tag(&self, key: &ArtefactKey) -> bool {
        let mut mac = HmacSha256::new_from_slice(key.bytes()).expect("any key length");
        mac.update(&self.canonical_bytes());
        mac.verify_slice(&self.tag).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArtefactDecision {
    Accepted,
    RejectedStale,
    RejectedReplay,
    RejectedBinding,
    RejectedIntegrity,
    RejectedRevoked,
}

impl ArtefactDecision {
    pub fn is_accepted(self) -> bool {
        self == ArtefactDecision::Accepted
    }
}

impl fmt::Display for ArtefactDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ArtefactDecision::Accepted => "accepted",
            ArtefactDecision::RejectedStale => "rejected-stale",
            ArtefactDecision::RejectedReplay => "rejected-replay",
            ArtefactDecision::RejectedBinding => "rejected-binding",
            ArtefactDecision::RejectedIntegrity => "rejected-integrity",
            ArtefactDecision::RejectedRevoked => "rejected-revoked",
        };
        f.write_str(s)
    }
}

/// Bounded set of `(issuer, nonce)` pairs already accepted; evicts oldest first.
#[derive(Debug, Clone)]
pub struct ReplayCache {
    capacity: usize,
    order: VecDeque<(String, u128)>,
    seen: HashSet<(String, u128)>,
}

impl ReplayCache {
    pub fn new(capacity: usize) -> Self {
        ReplayCache {
            capacity: capacity.max(1),
            order: VecDeque::new(),
            seen: HashSet::new(),
        }
    }

    pub fn contains(&self, issuer: &str, nonce: u128) -> bool {
        self.seen.contains(&(issuer.to_string(), nonce))
    }

    pub fn insert(&mut self, issuer: &str, nonce: u128) {
        let key = (issuer.to_string(), nonce);
        if !self.seen.insert(key.clone()) {
            return;
        }
        self.order.push_back(key);
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.seen.remove(&old);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RevocationList {
    revoked: HashSet<(String, u128)>,
}

impl RevocationList {
    pub fn revoke(&mut self, issuer: &str, nonce: u128) {
        self.revoked.insert((issuer.to_string(), nonce));
    }

    pub fn is_revoked(&self, issuer: &str, nonce: u128) -> bool {
        self.revoked.contains(&(issuer.to_string(), nonce))
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

pub fn issue_artefact(
    issuer_id: &str,
    device_id: &str,
    component: TrustComponent,
    level: f64,
    now_ms: i64,
    key: &ArtefactKey,
    rng: &mut SimRng,
) -> Result<TrustArtefact> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::OutOfUnitRange {
            what: format!("asserted {component} level"),
            value: level,
        });
    }
    let mut artefact = TrustArtefact {
        issuer_id: issuer_id.to_string(),
        device_id: device_id.to_string(),
        component,
        asserted_level: level,
        issued_at_ms: now_ms,
        nonce: rng.nonce(),
        tag: [0; TAG_LEN],
    };
    artefact.tag = artefact.compute_tag(key);
    Ok(artefact)
}

/// Checks run in order: integrity, binding, replay, revocation, freshness.
/// `revocations` is `None` when the validating domain is disconnected.
pub fn validate_artefact(
    artefact: &TrustArtefact,
    presenting_device_id: &str,
    now_ms: i64,
    freshness_window_ms: i64,
    cache: &mut ReplayCache,
    revocations: Option<&RevocationList>,
    key: &ArtefactKey,
) -> ArtefactDecision {
    if !artefact.verify_tag(key) {
        return ArtefactDecision::RejectedIntegrity;
    }
    if presenting_device_id != artefact.device_id {
        return ArtefactDecision::RejectedBinding;
    }
    if cache.contains(&artefact.issuer_id, artefact.nonce) {
        return ArtefactDecision::RejectedReplay;
    }
    if revocations.is_some_and(|r| r.is_revoked(&artefact.issuer_id, artefact.nonce)) {
        return ArtefactDecision::RejectedRevoked;
    }
    let age = now_ms - artefact.issued_at_ms;
    if !(0..=freshness_window_ms).contains(&age) {
        return ArtefactDecision::RejectedStale;
    }
    cache.insert(&artefact.issuer_id, artefact.nonce);
    ArtefactDecision::Accepted
}

/// `σ_j(· | ε)` when the artefact was accepted, else the base survival.
pub fn effective_survival(base: f64, decision: ArtefactDecision, improved: f64) -> Result<f64> {
    if improved < base {
        return Err(Error::Config(format!(
            "improved survival {improved} is below base survival {base}"
        )));
    }
    Ok(if decision.is_accepted() { improved } else { base })
}

fn check_verify_costs(
    accepted: &BTreeSet<TrustComponent>,
    verify: &PerComponent<f64>,
    full: &PerComponent<f64>,
    what: &str,
) -> Result<()> {
    for &c in accepted {
        if !(verify[c] >= 0.0 && verify[c] < full[c]) {
            return Err(Error::Config(format!(
                "verification {what} for {c} ({}) must be below full re-establishment {what} ({})",
                verify[c], full[c]
            )));
        }
    }
    Ok(())
}

/// Recovery cost with accepted artefacts: an accepted component's deficit is
/// rebuilt at verification cost instead of full re-establishment cost,
/// `α · [Σ_{j∉A} c_j (1 − σ_j) + Σ_{j∈A} v_j (1 − σ_j)]`.
pub fn portable_recovery_cost_with(
    sigma: &PerComponent<f64>,
    to: &RatProfile,
    kind: TransitionKind,
    accepted: &BTreeSet<TrustComponent>,
    verify_costs: &PerComponent<f64>,
) -> Result<f64> {
    check_verify_costs(accepted, verify_costs, &to.cost_mj, "cost")?;
    let total: f64 = TrustComponent::ALL
        .iter()
        .map(|&c| {
            let unit = if accepted.contains(&c) { verify_costs[c] } else { to.cost_mj[c] };
            unit * (1.0 - sigma[c])
        })
        .sum();
    Ok(cost_multiplier(kind) * total)
}

pub fn portable_recovery_cost(
    from: &str,
    to: &RatProfile,
    kind: TransitionKind,
    matrices: &SurvivalMatrixSet,
    accepted: &BTreeSet<TrustComponent>,
    verify_costs: &PerComponent<f64>,
) -> Result<f64> {
    let sigma = matrices.vector(from, to.id.as_str())?;
    portable_recovery_cost_with(&sigma, to, kind, accepted, verify_costs)
}

/// Latency counterpart of [`portable_recovery_cost_with`], without the
/// multiplier. A verification slower than full re-establishment is capped at it.
pub fn portable_recovery_latency_with(
    sigma: &PerComponent<f64>,
    to: &RatProfile,
    accepted: &BTreeSet<TrustComponent>,
    verify_latency: &PerComponent<f64>,
) -> f64 {
    TrustComponent::ALL
        .iter()
        .map(|&c| {
            let full = to.latency_ms[c];
            let unit = if accepted.contains(&c) { verify_latency[c].min(full) } else { full };
            unit * (1.0 - sigma[c])
        })
        .sum()
}

/// Scenario-level portability settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PortabilityConfig {
    pub device_id: String,
    /// Components for which the device carries artefacts across crossings.
    pub components: BTreeSet<TrustComponent>,
    /// Survival floor applied when an artefact is accepted; the effective
    /// improved value is `max(base, floor)`.
    pub improved: PerComponent<f64>,
    pub verify_cost_mj: PerComponent<f64>,
    pub verify_latency_ms: PerComponent<f64>,
    pub freshness_window_ms: i64,
    pub replay_capacity: usize,
    pub master_key: ArtefactKey,
}

impl Default for PortabilityConfig {
    fn default() -> Self {
        PortabilityConfig {
            device_id: "uav-1".into(),
            components: BTreeSet::new(),
            improved: PerComponent([0.6, 0.9, 0.9, 0.0, 0.0]),
            verify_cost_mj: PerComponent::splat(0.0),
            verify_latency_ms: PerComponent::splat(0.0),
            freshness_window_ms: 300_000,
            replay_capacity: 4096,
            master_key: ArtefactKey::test_key(),
        }
    }
}

impl PortabilityConfig {
    pub fn validate(&self) -> Result<()> {
        for (c, v) in self.improved.iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfUnitRange {
                    what: format!("improved survival for {c}"),
                    value: v,
                });
            }
        }
        if self.components.contains(&TrustComponent::Network) {
            return Err(Error::Config("network trust cannot be carried by an artefact".into()));
        }
        if self.freshness_window_ms < 0 {
            return Err(Error::Config("freshness window must be non-negative".into()));
        }
        Ok(())
    }
}
