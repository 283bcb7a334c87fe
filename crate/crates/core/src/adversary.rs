//! Dolev-Yao adversary augmented with spectrum capabilities: jamming, rogue
//! infrastructure, forced downgrades and artefact replay, plus trust-gap
//! sampling at every crossing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::transition::TransitionKind;
use crate::trust::{RatId, TrustComponent, TrustState};

/// Trust cap applied to every component while connected to a decoy.
pub const ROGUE_TRUST_CAP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum AdversaryAction {
    JamRat { rat: RatId, duration_ms: u64 },
    RogueRat { fake: RatId, mimics: RatId },
    ReplayArtefact { artefact: String },
    ForceTransition { target: RatId },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustGap {
    pub start_ms: u64,
    pub duration_ms: u64,
    pub kind: TransitionKind,
    pub exploit_probability: f64,
    pub exploited: bool,
}

impl TrustGap {
    pub fn duration_s(&self) -> f64 {
        self.duration_ms as f64 / 1000.0
    }
}

/// Uniform sampling ranges for one transition kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRange {
    pub duration_s: (f64, f64),
    pub probability: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapModel {
    pub planned: GapRange,
    pub coverage: GapRange,
    pub opportunistic: GapRange,
    pub adversary: GapRange,
}

impl Default for GapModel {
    fn default() -> Self {
        GapModel {
            planned: GapRange {
                duration_s: (0.05, 0.2),
                probability: (0.02, 0.05),
            },
            coverage: GapRange {
                duration_s: (0.5, 3.0),
                probability: (0.04, 0.08),
            },
            opportunistic: GapRange {
                duration_s: (0.05, 0.3),
                probability: (0.02, 0.05),
            },
            adversary: GapRange {
                duration_s: (2.0, 15.0),
                probability: (0.10, 0.25),
            },
        }
    }
}

impl GapModel {
    pub fn range(&self, kind: TransitionKind) -> GapRange {
        match kind {
            TransitionKind::Planned => self.planned,
            TransitionKind::CoverageDriven => self.coverage,
            TransitionKind::Opportunistic => self.opportunistic,
            TransitionKind::AdversaryForced => self.adversary,
        }
    }
}

/// Draws duration, probability and the Bernoulli outcome, in that order.
/// Exactly three draws are consumed per call.
pub fn sample_trust_gap(
    kind: TransitionKind,
    start_ms: u64,
    model: &GapModel,
    rng: &mut SimRng,
) -> TrustGap {
    let range = model.range(kind);
    let duration_s = rng.uniform(range.duration_s.0, range.duration_s.1);
    let p = rng.uniform(range.probability.0, range.probability.1);
    let exploited = rng.bernoulli(p);
    let lo = (range.duration_s.0 * 1000.0).ceil() as u64;
    let hi = (range.duration_s.1 * 1000.0).floor() as u64;
    TrustGap {
        start_ms,
        duration_ms: ((duration_s * 1000.0).round() as u64).clamp(lo, hi.max(lo)),
        kind,
        exploit_probability: p,
        exploited,
    }
}

/// Engine-defined consequence of an exploited gap: contextual and policy
/// trust are zeroed, identity and device are untouched.
pub fn exploitation_effect(gap: &TrustGap, state: &TrustState) -> TrustState {
    if !gap.exploited {
        return *state;
    }
    state
        .with(TrustComponent::Context, 0.0)
        .with(TrustComponent::Policy, 0.0)
}

/// Side effects of an adversary action that the mission loop must carry out.
#[derive(Debug, Clone, PartialEq)]
pub enum Induced {
    /// The active link was jammed; move it to the best remaining RAT.
    ForcedTransition { from: RatId, to: RatId },
    /// A parallel link was jammed and drops.
    LinkLost { rat: RatId },
    /// The active link was jammed and nothing else is available.
    NoFallback { rat: RatId },
    JamExpires { rat: RatId, at_ms: u64 },
    Replay { artefact: String },
    RogueArmed { fake: RatId, mimics: RatId },
    ForceArmed { target: RatId },
}

/// What the adversary can see of the device when it acts.
pub struct DeviceView<'a> {
    pub primary: &'a RatId,
    pub active: &'a BTreeSet<RatId>,
    /// Composite ceiling of every registered RAT, used to pick fallbacks.
    pub ceilings: &'a BTreeMap<RatId, f64>,
}

/// Radio environment as shaped by the adversary.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    registered: BTreeSet<RatId>,
    jammed_until: BTreeMap<RatId, u64>,
    rogues: BTreeMap<RatId, RatId>,
    force_pending: Option<RatId>,
}

impl Environment {
    pub fn new(registered: impl IntoIterator<Item = RatId>) -> Self {
        Environment {
            registered: registered.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn is_available(&self, rat: &str, now_ms: u64) -> bool {
        self.registered.contains(rat) && self.jammed_until.get(rat).is_none_or(|&t| t <= now_ms)
    }

    pub fn available(&self, now_ms: u64) -> impl Iterator<Item = &RatId> {
        self.registered.iter().filter(move |r| self.is_available(r.as_str(), now_ms))
    }

    /// Highest-ceiling RAT that is available and not already in use.
    /// Ties go to the lexicographically smallest id.
    pub fn best_fallback(&self, view: &DeviceView<'_>, now_ms: u64) -> Option<RatId> {
        let mut best: Option<(&RatId, f64)> = None;
        for rat in self.available(now_ms) {
            if view.active.contains(rat) {
                continue;
            }
            let ceiling = view.ceilings.get(rat).copied().unwrap_or(0.0);
            if best.is_none_or(|(_, b)| ceiling > b) {
                best = Some((rat, ceiling));
            }
        }
        best.map(|(r, _)| r.clone())
    }

    /// Consumes a pending forced-transition marker.
    pub fn take_force(&mut self) -> Option<RatId> {
        self.force_pending.take()
    }

    /// Consumes a decoy waiting on `mimics`, returning the decoy id.
    pub fn take_rogue(&mut self, mimics: &str) -> Option<RatId> {
        self.rogues.remove(mimics)
    }

    pub fn apply_action(
        &mut self,
        action: &AdversaryAction,
        now_ms: u64,
        view: &DeviceView<'_>,
    ) -> Result<Vec<Induced>> {
        match action {
            AdversaryAction::JamRat { rat, duration_ms } => {
                if !self.registered.contains(rat) {
                    return Err(Error::UnknownRat(rat.to_string()));
                }
                if *duration_ms == 0 {
                    return Err(Error::Config(format!("jam of {rat} needs a positive duration")));
                }
                let until = now_ms + duration_ms;
                let slot = self.jammed_until.entry(rat.clone()).or_insert(0);
                *slot = (*slot).max(until);
                let mut out = vec![Induced::JamExpires {
                    rat: rat.clone(),
                    at_ms: *slot,
                }];
                if rat == view.primary {
                    match self.best_fallback(view, now_ms) {
                        Some(to) => out.push(Induced::ForcedTransition {
                            from: rat.clone(),
                            to,
                        }),
                        None => out.push(Induced::NoFallback { rat: rat.clone() }),
                    }
                } else if view.active.contains(rat) {
                    out.push(Induced::LinkLost { rat: rat.clone() });
                }
                Ok(out)
            }
            AdversaryAction::RogueRat { fake, mimics } => {
                if !self.registered.contains(mimics) {
                    return Err(Error::UnknownRat(mimics.to_string()));
                }
                if self.registered.contains(fake) {
                    return Err(Error::Config(format!(
                        "decoy id {fake} collides with a registered RAT"
                    )));
                }
                self.rogues.insert(mimics.clone(), fake.clone());
                Ok(vec![Induced::RogueArmed {
                    fake: fake.clone(),
                    mimics: mimics.clone(),
                }])
            }
            AdversaryAction::ReplayArtefact { artefact } => Ok(vec![Induced::Replay {
                artefact: artefact.clone(),
            }]),
            AdversaryAction::ForceTransition { target } => {
                if !self.registered.contains(target) {
                    return Err(Error::UnknownRat(target.to_string()));
                }
                self.force_pending = Some(target.clone());
                Ok(vec![Induced::ForceArmed {
                    target: target.clone(),
                }])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> (Environment, BTreeMap<RatId, f64>) {
        let rats: Vec<RatId> = vec!["5G".into(), "LoRaWAN".into(), "Meshtastic".into()];
        let ceilings = [("5G", 0.93), ("LoRaWAN", 0.585), ("Meshtastic", 0.365)]
            .into_iter()
            .map(|(r, c)| (RatId::from(r), c))
            .collect();
        (Environment::new(rats), ceilings)
    }

    #[test]
    fn jam_active_forces_to_best_fallback() {
        let (mut e, ceilings) = env();
        let primary = RatId::from("5G");
        let active: BTreeSet<RatId> = [primary.clone()].into();
        let view = DeviceView {
            primary: &primary,
            active: &active,
            ceilings: &ceilings,
        };
        let jam = AdversaryAction::JamRat {
            rat: "5G".into(),
            duration_ms: 60_000,
        };
        let out = e.apply_action(&jam, 1_000, &view).unwrap();
        assert!(out.contains(&Induced::ForcedTransition {
            from: "5G".into(),
            to: "LoRaWAN".into()
        }));
        assert!(!e.is_available("5G", 30_000));
        assert!(e.is_available("5G", 61_000));
    }

    #[test]
    fn jam_idle_rat_only_shrinks_availability() {
        let (mut e, ceilings) = env();
        let primary = RatId::from("5G");
        let active: BTreeSet<RatId> = [primary.clone()].into();
        let view = DeviceView {
            primary: &primary,
            active: &active,
            ceilings: &ceilings,
        };
        let jam = AdversaryAction::JamRat {
            rat: "LoRaWAN".into(),
            duration_ms: 5_000,
        };
        let out = e.apply_action(&jam, 0, &view).unwrap();
        assert_eq!(out.len(), 1);
        assert!(matches!(out[0], Induced::JamExpires { at_ms: 5_000, .. }));
        assert_eq!(e.available(1).count(), 2);
    }

    #[test]
    fn jam_unknown_rat_errors() {
        let (mut e, ceilings) = env();
        let primary = RatId::from("5G");
        let active = BTreeSet::new();
        let view = DeviceView {
            primary: &primary,
            active: &active,
            ceilings: &ceilings,
        };
        let jam = AdversaryAction::JamRat {
            rat: "Starlink".into(),
            duration_ms: 5_000,
        };
        assert!(matches!(e.apply_action(&jam, 0, &view), Err(Error::UnknownRat(_))));
    }

    #[test]
    fn gap_ranges() {
        let model = GapModel::default();
        let mut rng = SimRng::new(42, 0);
        for _ in 0..2_000 {
            let g = sample_trust_gap(TransitionKind::Planned, 0, &model, &mut rng);
            assert!((50..=200).contains(&g.duration_ms));
            assert!((0.02..=0.05).contains(&g.exploit_probability));
            let g = sample_trust_gap(TransitionKind::AdversaryForced, 0, &model, &mut rng);
            assert!((2_000..=15_000).contains(&g.duration_ms));
            assert!((0.10..=0.25).contains(&g.exploit_probability));
        }
    }

    #[test]
    fn gap_sampling_is_deterministic() {
        let model = GapModel::default();
        let a = sample_trust_gap(TransitionKind::CoverageDriven, 9, &model, &mut SimRng::new(42, 0));
        let b = sample_trust_gap(TransitionKind::CoverageDriven, 9, &model, &mut SimRng::new(42, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn exploitation_zeroes_ctx_and_pol() {
        let st = TrustState::uniform(0.6).unwrap();
        let mut gap = TrustGap {
            start_ms: 0,
            duration_ms: 3_000,
            kind: TransitionKind::AdversaryForced,
            exploit_probability: 0.2,
            exploited: true,
        };
        assert_eq!(exploitation_effect(&gap, &st).values(), [0.6, 0.6, 0.0, 0.6, 0.0]);
        gap.exploited = false;
        assert_eq!(exploitation_effect(&gap, &st), st);
    }
}
