//! Discrete-event mission loop: decay between events, crossings, recovery
//! after each trust gap, continuous-verification ticks and the energy ledger.

mod report;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

pub use report::{
    ArtefactEvent, BudgetVerdict, EnergyLedger, Exposure, FlowSummary, LedgerRow, MissionReport,
    ReferenceCheck, TimelineRow, Timeline, VerificationSummary,
};

use crate::adversary::{
    exploitation_effect, sample_trust_gap, AdversaryAction, DeviceView, Environment, GapModel,
    Induced, TrustGap, ROGUE_TRUST_CAP,
};
use crate::composition::ParallelLinkSet;
use crate::error::{Error, Result};
use crate::portability::{
    issue_artefact, portable_recovery_cost_with, portable_recovery_latency_with, validate_artefact,
    ArtefactDecision, ArtefactKey, ReplayCache, RevocationList, TrustArtefact,
};
use crate::rng::{SimRng, ADVERSARY_STREAM, NONCE_STREAM};
use crate::scenario::{EventKind, MissionScenario, PowerBudget};
use crate::transition::{
    apply_survival, cost_multiplier, recover, recovery_cost_with, recovery_latency_with,
    CostSource, CrossingRecord, TransitionKind,
};
use crate::trust::{
    apply_event_decay, clamp_to_ceiling, composite_score, corroborate_remote_id, decay,
    trust_ceiling, PerComponent, RatId, RatProfile, TrustComponent, TrustState,
};

const SAMPLE_CADENCE_MS: u64 = 1_000;

/// Which path a ledger total follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostBasis {
    Naive,
    Portable,
}

/// Initial authentication plus every crossing cost plus verification energy.
pub fn mission_energy(
    records: &[CrossingRecord],
    basis: CostBasis,
    initial_auth_mj: f64,
    verification_mj: f64,
) -> f64 {
    let crossings: f64 = records
        .iter()
        .map(|r| match basis {
            CostBasis::Naive => r.cost_mj,
            CostBasis::Portable => r.portable_cost_mj.unwrap_or(r.cost_mj),
        })
        .sum();
    initial_auth_mj + crossings + verification_mj
}

/// Energy available for authentication over `duration_s`, in millijoules.
pub fn auth_budget_mj(power: &PowerBudget, duration_s: f64) -> f64 {
    power.p_auth_mw() * duration_s
}

/// Feasible iff the total stays within `P_auth · Δt` (inclusive).
pub fn budget_check(sc: &MissionScenario, total_auth_mj: f64) -> BudgetVerdict {
    let Some(power) = &sc.power else {
        return BudgetVerdict::NotConfigured;
    };
    let budget_mj = auth_budget_mj(power, sc.duration_s());
    if power.p_auth_mw() < 0.0 {
        log::warn!("non-positive authentication power: P_auth = {} mW", power.p_auth_mw());
        return BudgetVerdict::Infeasible {
            budget_mj,
            deficit_mj: total_auth_mj - budget_mj,
        };
    }
    if total_auth_mj <= budget_mj {
        BudgetVerdict::Feasible { budget_mj }
    } else {
        BudgetVerdict::Infeasible {
            budget_mj,
            deficit_mj: total_auth_mj - budget_mj,
        }
    }
}

/// Time spent with the composite strictly below `t_min`, interpolating
/// linearly between samples.
pub fn sub_threshold_exposure(timeline: &Timeline, t_min: f64) -> Exposure {
    let rows = &timeline.rows;
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Exposure {
            minutes: 0.0,
            fraction: 0.0,
        };
    };
    let mut below_ms = 0.0;
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = (b.t_ms - a.t_ms) as f64;
        let (va, vb) = (a.composite, b.composite);
        below_ms += match (va < t_min, vb < t_min) {
            (true, true) => dt,
            (false, false) => 0.0,
            (true, false) => dt * (t_min - va) / (vb - va),
            (false, true) => dt * (va - t_min) / (va - vb),
        };
    }
    let span = (last.t_ms - first.t_ms) as f64;
    let fraction = if span > 0.0 {
        (below_ms / span).clamp(0.0, 1.0)
    } else if first.composite < t_min {
        1.0
    } else {
        0.0
    };
    Exposure {
        minutes: below_ms / 60_000.0,
        fraction,
    }
}

/// Checks that a scenario is runnable.
pub fn validate(sc: &MissionScenario) -> Result<()> {
    if sc.duration_ms == 0 {
        return Err(Error::Config("mission duration must be positive".into()));
    }
    if sc.verify_interval_ms == 0 {
        return Err(Error::Config("verification interval must be positive".into()));
    }
    sc.profile(sc.initial_rat.as_str())?;
    for r in sc.parallel.iter().chain(&sc.available) {
        sc.profile(r.as_str())?;
    }
    for p in sc.rats.values() {
        p.validate()?;
    }
    sc.matrices.validate_complete()?;
    if let Some(cfg) = &sc.portability {
        cfg.validate()?;
    }
    for ev in &sc.events {
        let rat = match &ev.kind {
            EventKind::Transition { to, from, .. } => {
                if let Some(f) = from {
                    sc.profile(f.as_str())?;
                }
                Some(to)
            }
            EventKind::LinkUp { rat, .. } | EventKind::LinkDown { rat } => Some(rat),
            EventKind::Adversary(AdversaryAction::JamRat { rat, .. }) => Some(rat),
            EventKind::Adversary(AdversaryAction::ForceTransition { target }) => Some(target),
            EventKind::Adversary(AdversaryAction::RogueRat { mimics, .. }) => Some(mimics),
            _ => None,
        };
        if let Some(r) = rat {
            sc.profile(r.as_str())?;
        }
    }
    Ok(())
}

/// Runs a scenario to completion.
pub fn run(sc: &MissionScenario) -> Result<(Timeline, MissionReport)> {
    validate(sc)?;
    if sc.is_trajectory() {
        return Ok(run_trajectory(sc));
    }
    Engine::new(sc)?.run()
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Link {
    /// Identity shown in the timeline; differs from `profile` for decoys.
    id: RatId,
    profile: RatId,
    anchor: TrustState,
    anchor_ms: u64,
    pending: Option<u64>,
    cap: Option<f64>,
    decoy: bool,
}

#[derive(Debug, Clone)]
enum Payload {
    Recovery { link: RatId, token: u64, record: usize, gap: TrustGap },
    JamEnd { rat: RatId },
    Scripted(usize),
    Induced { from: RatId, to: RatId },
    Verify,
    Sample,
}

impl Payload {
    fn class(&self) -> u8 {
        match self {
            Payload::Recovery { .. } => 0,
            Payload::JamEnd { .. } => 1,
            Payload::Scripted(_) => 2,
            Payload::Induced { .. } => 3,
            Payload::Verify => 4,
            Payload::Sample => 5,
        }
    }
}

struct TransitionRequest {
    from: Option<RatId>,
    to: RatId,
    kind: TransitionKind,
    cost_mj: Option<f64>,
    portable_cost_mj: Option<f64>,
    label: Option<String>,
    scripted: bool,
}

struct Engine<'a> {
    sc: &'a MissionScenario,
    now: u64,
    links: BTreeMap<RatId, Link>,
    primary: RatId,
    env: Environment,
    ceilings: BTreeMap<RatId, f64>,
    gap_model: GapModel,
    adversary_rng: SimRng,
    nonce_rng: SimRng,
    queue: BinaryHeap<Reverse<(u64, u8, u64)>>,
    payloads: Vec<Option<Payload>>,
    next_token: u64,
    records: Vec<CrossingRecord>,
    ledger: Vec<LedgerRow>,
    path_energy: f64,
    verify_energy: f64,
    verify_count: u64,
    artefacts: BTreeMap<String, TrustArtefact>,
    artefact_log: Vec<ArtefactEvent>,
    cache: ReplayCache,
    revocations: RevocationList,
    gaps: Vec<TrustGap>,
    warnings: Vec<String>,
    tags: Vec<String>,
    rows: Vec<TimelineRow>,
    flows: Vec<FlowSummary>,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a MissionScenario) -> Result<Self> {
        let ceilings = sc
            .rats
            .values()
            .map(|p| (p.id.clone(), trust_ceiling(p, &sc.weights)))
            .collect();
        let capacity = sc.portability.as_ref().map_or(1, |p| p.replay_capacity);
        let mut e = Engine {
            sc,
            now: 0,
            links: BTreeMap::new(),
            primary: sc.initial_rat.clone(),
            env: Environment::new(sc.reachable()),
            ceilings,
            gap_model: GapModel::default(),
            adversary_rng: SimRng::new(sc.seed, ADVERSARY_STREAM),
            nonce_rng: SimRng::new(sc.seed, NONCE_STREAM),
            queue: BinaryHeap::new(),
            payloads: Vec::new(),
            next_token: 0,
            records: Vec::new(),
            ledger: Vec::new(),
            path_energy: 0.0,
            verify_energy: 0.0,
            verify_count: 0,
            artefacts: BTreeMap::new(),
            artefact_log: Vec::new(),
            cache: ReplayCache::new(capacity),
            revocations: RevocationList::default(),
            gaps: Vec::new(),
            warnings: Vec::new(),
            tags: Vec::new(),
            rows: Vec::new(),
            flows: sc
                .flows
                .iter()
                .map(|f| FlowSummary {
                    flow_id: f.flow_id.clone(),
                    carried_on: f.carried_on.clone(),
                    sensitivity: f.sensitivity,
                    threshold: f.sensitivity.threshold(),
                    min_s_net: None,
                    samples_active: 0,
                    samples_below: 0,
                })
                .collect(),
        };

        let initial = sc.profile(sc.initial_rat.as_str())?;
        let start = clamp_to_ceiling(&sc.initial_state.unwrap_or(initial.reauth), initial);
        e.add_link(sc.initial_rat.clone(), sc.initial_rat.clone(), start);
        for r in &sc.parallel {
            let p = sc.profile(r.as_str())?;
            e.add_link(r.clone(), r.clone(), p.reauth);
        }

        if sc.initial_auth_mj > 0.0 || sc.initial_auth_portable_mj.is_some() {
            let portable = sc
                .portability
                .as_ref()
                .map(|_| sc.initial_auth_portable_mj.unwrap_or(sc.initial_auth_mj));
            e.path_energy += portable.unwrap_or(sc.initial_auth_mj);
            e.ledger.push(LedgerRow {
                label: format!("{} initial auth", sc.initial_rat),
                naive_mj: sc.initial_auth_mj,
                portable_mj: portable,
                source: CostSource::Table,
            });
        }

        let mut t = 0;
        while t <= sc.duration_ms {
            e.push(t, Payload::Sample);
            t += SAMPLE_CADENCE_MS;
        }
        if !sc.duration_ms.is_multiple_of(SAMPLE_CADENCE_MS) {
            e.push(sc.duration_ms, Payload::Sample);
        }
        let mut k = 1;
        while k * sc.verify_interval_ms <= sc.duration_ms {
            e.push(k * sc.verify_interval_ms, Payload::Verify);
            k += 1;
        }
        for (i, ev) in sc.events.iter().enumerate() {
            if ev.at_ms <= sc.duration_ms {
                e.push(ev.at_ms, Payload::Scripted(i));
            } else {
                e.warn(format!("event at {} s is after the mission end; ignored", ev.at_ms as f64 / 1000.0));
            }
        }
        e.tags.push("start".into());
        Ok(e)
    }

    fn push(&mut self, at: u64, payload: Payload) {
        let idx = self.payloads.len() as u64;
        self.queue.push(Reverse((at, payload.class(), idx)));
        self.payloads.push(Some(payload));
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{}: {msg}", self.sc.name);
        self.warnings.push(msg);
    }

    fn tag(&mut self, t: String) {
        self.tags.push(t);
    }

    fn profile(&self, rat: &RatId) -> &'a RatProfile {
        &self.sc.rats[rat]
    }

    fn add_link(&mut self, id: RatId, profile: RatId, state: TrustState) {
        let p = self.profile(&profile);
        self.links.insert(
            id.clone(),
            Link {
                id,
                profile,
                anchor: clamp_to_ceiling(&state, p),
                anchor_ms: self.now,
                pending: None,
                cap: None,
                decoy: false,
            },
        );
    }

    fn link_state(&self, l: &Link) -> TrustState {
        let p = self.profile(&l.profile);
        let dt_min = (self.now - l.anchor_ms) as f64 / 60_000.0;
        let s = decay(&l.anchor, dt_min, &p.decay).unwrap_or(l.anchor);
        cap(&s, l.cap)
    }

    fn set_anchor(&mut self, id: &RatId, state: TrustState) {
        let now = self.now;
        if let Some(l) = self.links.get_mut(id) {
            l.anchor = cap(&state, l.cap);
            l.anchor_ms = now;
        }
    }

    fn run(mut self) -> Result<(Timeline, MissionReport)> {
        while let Some(&Reverse((t, _, _))) = self.queue.peek() {
            if t > self.sc.duration_ms {
                break;
            }
            self.now = t;
            while let Some(&Reverse((t2, _, idx))) = self.queue.peek() {
                if t2 != t {
                    break;
                }
                self.queue.pop();
                if let Some(p) = self.payloads[idx as usize].take() {
                    self.dispatch(p)?;
                }
            }
            self.emit_row();
        }
        Ok(self.finish())
    }

    fn dispatch(&mut self, p: Payload) -> Result<()> {
        match p {
            Payload::Sample => self.tag("sample".into()),
            Payload::Verify => self.verify_tick(),
            Payload::Recovery { link, token, record, gap } => self.recovery(link, token, record, gap),
            Payload::JamEnd { rat } => self.tag(format!("jam-end:{rat}")),
            Payload::Induced { from, to } => {
                self.transition(TransitionRequest {
                    from: Some(from),
                    to,
                    kind: TransitionKind::AdversaryForced,
                    cost_mj: None,
                    portable_cost_mj: None,
                    label: None,
                    scripted: false,
                })?;
            }
            Payload::Scripted(i) => self.scripted(i)?,
        }
        Ok(())
    }

    fn scripted(&mut self, i: usize) -> Result<()> {
        let ev = &self.sc.events[i];
        match &ev.kind {
            EventKind::Transition {
                to,
                from,
                kind,
                cost_mj,
                portable_cost_mj,
                label,
            } => self.transition(TransitionRequest {
                from: from.clone(),
                to: to.clone(),
                kind: *kind,
                cost_mj: *cost_mj,
                portable_cost_mj: *portable_cost_mj,
                label: label.clone(),
                scripted: true,
            }),
            EventKind::Adversary(action) => self.adversary(action),
            EventKind::Trigger { name } => {
                self.tag(format!("trigger:{name}"));
                let ids: Vec<RatId> = self.links.keys().cloned().collect();
                let mut known = false;
                for id in ids {
                    let l = &self.links[&id];
                    let decay_params = &self.profile(&l.profile).decay;
                    known |= decay_params.triggers.contains_key(name);
                    let next = apply_event_decay(&self.link_state(l), name, decay_params);
                    self.set_anchor(&id, next);
                }
                if !known {
                    self.warn(format!("trigger `{name}` is not registered on any active link"));
                }
                Ok(())
            }
            EventKind::LinkUp { rat, state } => {
                if self.links.contains_key(rat) {
                    self.warn(format!("link-up of {rat}: already active"));
                } else if !self.env.is_available(rat.as_str(), self.now) {
                    self.warn(format!("link-up of {rat}: RAT is jammed; skipped"));
                } else {
                    let p = self.profile(rat);
                    self.add_link(rat.clone(), rat.clone(), state.unwrap_or(p.reauth));
                    self.tag(format!("link-up:{rat}"));
                }
                Ok(())
            }
            EventKind::LinkDown { rat } => {
                self.drop_link(rat, "link-down");
                Ok(())
            }
            EventKind::Revoke { artefact } => {
                match self.artefacts.get(artefact) {
                    Some(a) => {
                        self.revocations.revoke(&a.issuer_id, a.nonce);
                        self.tag(format!("revoke:{artefact}"));
                    }
                    None => self.warn(format!("revoke: no artefact labelled `{artefact}`")),
                }
                Ok(())
            }
            EventKind::RemoteId { consistent } => {
                let id = self.primary.clone();
                let l = &self.links[&id];
                let p = self.profile(&l.profile);
                let next = corroborate_remote_id(&self.link_state(l), *consistent, self.sc.remote_id_weight, p);
                self.set_anchor(&id, next);
                self.tag(format!("remote-id:{}", if *consistent { "consistent" } else { "inconsistent" }));
                Ok(())
            }
        }
    }

    fn drop_link(&mut self, rat: &RatId, tag: &str) {
        if !self.links.contains_key(rat) {
            self.warn(format!("{tag} of {rat}: link is not active"));
            return;
        }
        if self.links.len() == 1 {
            self.warn(format!("{tag} of {rat}: it is the only active link; kept"));
            return;
        }
        self.links.remove(rat);
        if *rat == self.primary {
            let next = self
                .links
                .values()
                .max_by(|a, b| {
                    let ca = self.ceilings.get(&a.profile).copied().unwrap_or(0.0);
                    let cb = self.ceilings.get(&b.profile).copied().unwrap_or(0.0);
                    ca.total_cmp(&cb).then_with(|| b.id.cmp(&a.id))
                })
                .map(|l| l.id.clone());
            if let Some(n) = next {
                self.primary = n;
            }
        }
        self.tag(format!("{tag}:{rat}"));
    }

    fn adversary(&mut self, action: &AdversaryAction) -> Result<()> {
        let active: BTreeSet<RatId> = self.links.values().map(|l| l.profile.clone()).collect();
        let primary_profile = self.links[&self.primary].profile.clone();
        let view = DeviceView {
            primary: &primary_profile,
            active: &active,
            ceilings: &self.ceilings,
        };
        let induced = self.env.apply_action(action, self.now, &view)?;
        let primary_id = self.primary.clone();
        for ind in induced {
            match ind {
                Induced::JamExpires { rat, at_ms } => {
                    self.tag(format!("jam:{rat}"));
                    if at_ms <= self.sc.duration_ms {
                        self.push(at_ms, Payload::JamEnd { rat });
                    }
                }
                Induced::ForcedTransition { to, .. } => {
                    let now = self.now;
                    self.push(now, Payload::Induced { from: primary_id.clone(), to });
                }
                Induced::LinkLost { rat } => {
                    let ids: Vec<RatId> = self
                        .links
                        .values()
                        .filter(|l| l.profile == rat)
                        .map(|l| l.id.clone())
                        .collect();
                    for id in ids {
                        self.drop_link(&id, "link-lost");
                    }
                }
                Induced::NoFallback { rat } => {
                    self.warn(format!("{rat} jammed with no other RAT available; the link is held"));
                }
                Induced::Replay { artefact } => self.replay(&artefact),
                Induced::RogueArmed { fake, .. } => self.tag(format!("rogue-armed:{fake}")),
                Induced::ForceArmed { target } => self.tag(format!("force-armed:{target}")),
            }
        }
        Ok(())
    }

    fn domain_key(&self, cfg_key: &ArtefactKey, issuer: &str, decoy: Option<&RatId>) -> ArtefactKey {
        match decoy {
            Some(fake) => cfg_key.derive_issuer(&format!("decoy:{fake}")),
            None => cfg_key.derive_issuer(issuer),
        }
    }

    fn replay(&mut self, label: &str) {
        let Some(cfg) = &self.sc.portability else {
            self.warn(format!("replay of `{label}`: portability is not configured"));
            return;
        };
        let Some(artefact) = self.artefacts.get(label).cloned() else {
            self.warn(format!("replay: no artefact labelled `{label}`"));
            return;
        };
        let link = &self.links[&self.primary];
        let decoy = link.decoy.then(|| link.id.clone());
        let p = self.profile(&link.profile);
        let key = self.domain_key(&cfg.master_key, &artefact.issuer_id, decoy.as_ref());
        let revocations = p.connected.then_some(&self.revocations);
        let decision = validate_artefact(
            &artefact,
            &cfg.device_id,
            self.now as i64,
            cfg.freshness_window_ms,
            &mut self.cache,
            revocations,
            &key,
        );
        self.artefact_log.push(ArtefactEvent {
            time_s: self.now as f64 / 1000.0,
            label: label.to_string(),
            issuer: artefact.issuer_id.clone(),
            component: artefact.component,
            decision,
            replay: true,
        });
        self.tag(format!("replay:{label}={decision}"));
    }

    fn transition(&mut self, mut req: TransitionRequest) -> Result<()> {
        if req.scripted {
            if let Some(target) = self.env.take_force() {
                req.kind = TransitionKind::AdversaryForced;
                if target != req.to {
                    self.warn(format!(
                        "transition to {} redirected to {target} by the adversary",
                        req.to
                    ));
                    req.to = target;
                    req.label = None;
                    req.cost_mj = None;
                    req.portable_cost_mj = None;
                }
            }
        }
        let from_id = req.from.clone().unwrap_or_else(|| self.primary.clone());
        let Some(from_link) = self.links.get(&from_id).cloned() else {
            self.warn(format!("transition from {from_id}: link is not active; skipped"));
            self.tag(format!("skipped:{}", req.to));
            return Ok(());
        };
        if from_link.profile == req.to {
            self.warn(format!("transition {from_id} -> {}: already on that RAT; skipped", req.to));
            self.tag(format!("skipped:{}", req.to));
            return Ok(());
        }
        if !self.env.is_available(req.to.as_str(), self.now) {
            self.warn(format!("transition to {}: RAT is jammed; skipped", req.to));
            self.tag(format!("skipped:{}", req.to));
            return Ok(());
        }

        let to_profile = self.profile(&req.to);
        let from_profile = self.profile(&from_link.profile);
        let mut decoy: Option<RatId> = None;
        if let Some(fake) = self.env.take_rogue(req.to.as_str()) {
            if to_profile.mutual_auth {
                self.warn(format!("decoy {fake} rejected by mutual authentication on {}", req.to));
                self.tag(format!("rogue-detected:{fake}"));
            } else {
                self.warn(format!("device attached to decoy {fake} posing as {}", req.to));
                self.tag(format!("rogue-connected:{fake}"));
                decoy = Some(fake);
            }
        }
        let new_id = decoy.clone().unwrap_or_else(|| req.to.clone());

        let pre = self.link_state(&from_link);
        let sigma = self.sc.matrices.vector(from_link.profile.as_str(), req.to.as_str())?;
        let index = self.records.len() + 1;

        // Portable evidence
        let mut accepted: BTreeSet<TrustComponent> = BTreeSet::new();
        let mut sigma_eff = sigma;
        let carries_evidence = !from_profile.trust_silo && !to_profile.trust_silo && !from_link.decoy;
        if let (Some(cfg), true) = (&self.sc.portability, carries_evidence) {
            let issuer = from_link.profile.as_str();
            let issue_key = cfg.master_key.derive_issuer(issuer);
            let check_key = self.domain_key(&cfg.master_key, issuer, decoy.as_ref());
            for &c in &cfg.components {
                let artefact = issue_artefact(
                    issuer,
                    &cfg.device_id,
                    c,
                    pre.get(c),
                    self.now as i64,
                    &issue_key,
                    &mut self.nonce_rng,
                )?;
                let revocations = to_profile.connected.then_some(&self.revocations);
                let decision = validate_artefact(
                    &artefact,
                    &cfg.device_id,
                    self.now as i64,
                    cfg.freshness_window_ms,
                    &mut self.cache,
                    revocations,
                    &check_key,
                );
                let label = format!("c{index}.{}", c.short());
                self.artefact_log.push(ArtefactEvent {
                    time_s: self.now as f64 / 1000.0,
                    label: label.clone(),
                    issuer: issuer.to_string(),
                    component: c,
                    decision,
                    replay: false,
                });
                self.artefacts.insert(label, artefact);
                if decision == ArtefactDecision::Accepted {
                    accepted.insert(c);
                    sigma_eff[c] = sigma[c].max(cfg.improved[c]);
                }
            }
        }

        let post = apply_survival(&pre, &sigma_eff);
        let mut gap = sample_trust_gap(req.kind, self.now, &self.gap_model, &mut self.adversary_rng);
        gap.exploited &= self.sc.exploit_gaps;
        self.gaps.push(gap);

        let naive = match req.cost_mj {
            Some(v) => v,
            None => recovery_cost_with(&sigma, &to_profile.cost_mj, req.kind),
        };
        let latency = recovery_latency_with(&sigma, &to_profile.latency_ms);
        let (portable, portable_latency) = match &self.sc.portability {
            None => (None, None),
            Some(cfg) => {
                let cost = match req.portable_cost_mj {
                    Some(v) => v,
                    None if accepted.is_empty() => naive,
                    None => match portable_recovery_cost_with(&sigma, to_profile, req.kind, &accepted, &cfg.verify_cost_mj) {
                        Ok(v) => v,
                        Err(e) => {
                            self.warn(format!("portable cost at crossing {index}: {e}; using full cost"));
                            naive
                        }
                    },
                };
                let lat = portable_recovery_latency_with(&sigma, to_profile, &accepted, &cfg.verify_latency_ms);
                (Some(cost), Some(lat))
            }
        };
        let source = if req.cost_mj.is_some() || req.portable_cost_mj.is_some() {
            CostSource::Table
        } else {
            CostSource::Formula
        };
        self.path_energy += portable.unwrap_or(naive);
        self.ledger.push(LedgerRow {
            label: req.label.clone().unwrap_or_else(|| format!("{from_id} -> {new_id}")),
            naive_mj: naive,
            portable_mj: portable,
            source,
        });

        let cap_value = decoy.as_ref().map(|_| ROGUE_TRUST_CAP);
        let estimate = {
            let dt_min = gap.duration_ms as f64 / 60_000.0;
            let decayed = decay(&post, dt_min, &to_profile.decay).unwrap_or(post);
            let mut s = clamp_to_ceiling(&recover(&decayed, to_profile), to_profile);
            s = cap(&s, cap_value);
            exploitation_effect(&gap, &s)
        };
        self.records.push(CrossingRecord {
            time_s: self.now as f64 / 1000.0,
            from_rat: from_id.clone(),
            to_rat: new_id.clone(),
            kind: req.kind,
            alpha: cost_multiplier(req.kind),
            pre_state: pre,
            post_state: post,
            recovered_state: estimate,
            cost_mj: naive,
            portable_cost_mj: portable,
            latency_ms: latency,
            portable_latency_ms: portable_latency,
            cost_source: source,
            trust_gap_s: gap.duration_s(),
            gap_exploited: gap.exploited,
            accepted_components: accepted.into_iter().collect(),
        });

        let was_primary = from_id == self.primary;
        self.links.remove(&from_id);
        let token = self.next_token;
        self.next_token += 1;
        self.links.insert(
            new_id.clone(),
            Link {
                id: new_id.clone(),
                profile: req.to.clone(),
                anchor: cap(&post, cap_value),
                anchor_ms: self.now,
                pending: Some(token),
                cap: cap_value,
                decoy: decoy.is_some(),
            },
        );
        if was_primary || !self.links.contains_key(&self.primary) {
            self.primary = new_id.clone();
        }
        self.tag(format!("crossing:{from_id}->{new_id}"));
        let at = self.now + gap.duration_ms;
        self.push(
            at,
            Payload::Recovery {
                link: new_id,
                token,
                record: self.records.len() - 1,
                gap,
            },
        );
        Ok(())
    }

    fn recovery(&mut self, id: RatId, token: u64, record: usize, gap: TrustGap) {
        let Some(link) = self.links.get(&id).cloned() else { return };
        if link.pending != Some(token) {
            return;
        }
        let p = self.profile(&link.profile);
        let cur = self.link_state(&link);
        let recovered = cap(&clamp_to_ceiling(&recover(&cur, p), p), link.cap);
        let recovered = exploitation_effect(&gap, &recovered);
        if gap.exploited {
            self.warn(format!(
                "trust gap of {:.3} s before {id} was exploited; context and policy trust zeroed",
                gap.duration_s()
            ));
            self.tag(format!("exploited:{id}"));
        }
        self.set_anchor(&id, recovered);
        if let Some(l) = self.links.get_mut(&id) {
            l.pending = None;
        }
        self.records[record].recovered_state = recovered;
        self.tag(format!("recovered:{id}"));
    }

    fn verify_tick(&mut self) {
        self.verify_count += 1;
        let ids: Vec<RatId> = self.links.keys().cloned().collect();
        for id in ids {
            let l = self.links[&id].clone();
            let p = self.profile(&l.profile);
            self.verify_energy += p.verify_energy_mj;
            if l.pending.is_some() {
                continue;
            }
            let cur = self.link_state(&l);
            let refreshed = cur.map_clamped(|c, s| s.max(p.reauth.get(c).min(l.anchor.get(c))));
            self.set_anchor(&id, clamp_to_ceiling(&refreshed, p));
        }
        self.tag("verify".into());
    }

    fn aggregate(&self) -> (Vec<(RatId, TrustState)>, TrustState) {
        let mut set = ParallelLinkSet::new().with_silo_context(self.sc.silo_context);
        let mut states = Vec::new();
        for l in self.links.values() {
            let s = self.link_state(l);
            set.insert(l.id.clone(), s, l.anchor_ms, self.profile(&l.profile).trust_silo);
            states.push((l.id.clone(), s));
        }
        let agg = set.aggregate().unwrap_or(TrustState::ZERO);
        (states, agg)
    }

    fn emit_row(&mut self) {
        let (links, aggregate) = self.aggregate();
        let composite = composite_score(&aggregate, &self.sc.weights);
        for f in &mut self.flows {
            if let Some((_, s)) = links.iter().find(|(id, _)| *id == f.carried_on) {
                let net = s.get(TrustComponent::Network);
                f.samples_active += 1;
                if net < f.threshold {
                    f.samples_below += 1;
                }
                f.min_s_net = Some(f.min_s_net.map_or(net, |m: f64| m.min(net)));
            }
        }
        let mut tags = std::mem::take(&mut self.tags);
        if tags.len() > 1 {
            tags.retain(|t| t != "sample");
        }
        self.rows.push(TimelineRow {
            t_ms: self.now,
            event: tags.join("+"),
            active_rats: links.iter().map(|(id, _)| id.clone()).collect(),
            links,
            aggregate,
            composite,
            energy_cum_mj: self.path_energy + self.verify_energy,
            below_threshold: composite < self.sc.t_min,
        });
    }

    fn finish(mut self) -> (Timeline, MissionReport) {
        let timeline = Timeline {
            rows: std::mem::take(&mut self.rows),
        };
        let naive_total: f64 = self.ledger.iter().map(|r| r.naive_mj).sum();
        let portable_total = self
            .sc
            .portability
            .as_ref()
            .map(|_| self.ledger.iter().map(|r| r.portable_mj.unwrap_or(r.naive_mj)).sum());
        let ledger = EnergyLedger {
            rows: std::mem::take(&mut self.ledger),
            naive_total_mj: naive_total,
            portable_total_mj: portable_total,
        };
        let total = self.path_energy + self.verify_energy;
        let report = build_report(
            self.sc,
            &timeline,
            self.records,
            ledger,
            VerificationSummary {
                count: self.verify_count,
                interval_s: self.sc.verify_interval_ms as f64 / 1000.0,
                energy_mj: self.verify_energy,
            },
            total,
            self.artefact_log,
            self.gaps,
            self.flows,
            self.warnings,
        );
        (timeline, report)
    }
}

fn cap(s: &TrustState, cap: Option<f64>) -> TrustState {
    match cap {
        Some(c) => s.map_clamped(|_, v| v.min(c)),
        None => *s,
    }
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    sc: &MissionScenario,
    timeline: &Timeline,
    crossings: Vec<CrossingRecord>,
    ledger: EnergyLedger,
    verification: VerificationSummary,
    total_energy_mj: f64,
    artefacts: Vec<ArtefactEvent>,
    gaps: Vec<TrustGap>,
    flows: Vec<FlowSummary>,
    mut warnings: Vec<String>,
) -> MissionReport {
    let exposure = sub_threshold_exposure(timeline, sc.t_min);
    let budget = budget_check(sc, total_energy_mj);
    if let Some(p) = &sc.power {
        if p.p_auth_mw() < 0.0 {
            warnings.push(format!("authentication power P_auth = {} mW is negative", p.p_auth_mw()));
        }
    }
    let mut report = MissionReport {
        scenario: sc.name.clone(),
        seed: sc.seed,
        duration_min: sc.duration_ms as f64 / 60_000.0,
        t_min: sc.t_min,
        weights: sc.weights.values(),
        crossings,
        ledger,
        verification,
        total_energy_mj,
        exposure,
        budget,
        artefacts,
        gaps,
        flows,
        warnings,
        reference_checks: Vec::new(),
    };
    report.reference_checks = sc
        .reference
        .iter()
        .map(|r| ReferenceCheck::new(r, reference_value(&report, sc, &r.key)))
        .collect();
    report
}

fn reference_value(report: &MissionReport, sc: &MissionScenario, key: &str) -> Option<f64> {
    let first = report.crossings.first();
    let w = &sc.weights;
    match key {
        "composite.pre" => first.map(|c| composite_score(&c.pre_state, w)),
        "composite.post" => first.map(|c| composite_score(&c.post_state, w)),
        "composite.recovered" => first.map(|c| composite_score(&c.recovered_state, w)),
        "crossing_cost_mJ" => first.map(|c| c.cost_mj),
        "crossing_portable_cost_mJ" => first.and_then(|c| c.portable_cost_mj),
        "crossing_latency_ms" => first.map(|c| c.latency_ms),
        "crossing_portable_latency_ms" => first.and_then(|c| c.portable_latency_ms),
        "ledger.naive_total_mJ" => Some(report.ledger.naive_total_mj),
        "ledger.portable_total_mJ" => report.ledger.portable_total_mj,
        "ledger.saving_pct" => report.ledger.saving_pct(),
        "exposure_min" => Some(report.exposure.minutes),
        "exposure_pct" => Some(report.exposure.fraction * 100.0),
        "verification_count" => Some(report.verification.count as f64),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Prescribed trajectories
// ---------------------------------------------------------------------------

fn run_trajectory(sc: &MissionScenario) -> (Timeline, MissionReport) {
    let pts: Vec<(u64, f64, Option<RatId>)> = sc
        .trajectory
        .iter()
        .map(|p| ((p.minute * 60_000.0).round() as u64, p.score, p.rat.clone()))
        .collect();

    // Times: 1 s cadence, every breakpoint, and the instant before each jump.
    let mut times: BTreeMap<u64, &'static str> = BTreeMap::new();
    let mut t = 0;
    while t <= sc.duration_ms {
        times.insert(t, "sample");
        t += SAMPLE_CADENCE_MS;
    }
    times.insert(sc.duration_ms, "sample");
    for pair in pts.windows(2) {
        if pair[0].0 == pair[1].0 && pair[0].0 > 0 {
            times.insert(pair[0].0 - 1, "sample");
        }
    }
    for p in &pts {
        times.insert(p.0, "breakpoint");
    }
    times.insert(0, "start");

    let value_at = |t: u64| -> (f64, Option<RatId>) {
        let Some(first) = pts.first() else { return (0.0, None) };
        if t < first.0 {
            return (first.1, first.2.clone());
        }
        // Right-continuous: the last point at or before t governs.
        let i = pts.iter().rposition(|p| p.0 <= t).unwrap_or(0);
        let a = &pts[i];
        match pts.get(i + 1) {
            Some(b) if b.0 > a.0 => {
                let f = (t - a.0) as f64 / (b.0 - a.0) as f64;
                (a.1 + (b.1 - a.1) * f, a.2.clone())
            }
            _ => (a.1, a.2.clone()),
        }
    };

    let rows: Vec<TimelineRow> = times
        .into_iter()
        .filter(|(t, _)| *t <= sc.duration_ms)
        .map(|(t, tag)| {
            let (v, rat) = value_at(t);
            let rat = rat.unwrap_or_else(|| sc.initial_rat.clone());
            let state = TrustState::uniform(v.clamp(0.0, 1.0)).unwrap_or(TrustState::ZERO);
            let composite = composite_score(&state, &sc.weights);
            TimelineRow {
                t_ms: t,
                event: tag.to_string(),
                active_rats: vec![rat.clone()],
                links: vec![(rat, state)],
                aggregate: state,
                composite,
                energy_cum_mj: 0.0,
                below_threshold: composite < sc.t_min,
            }
        })
        .collect();
    let timeline = Timeline { rows };
    let count = sc.duration_ms / sc.verify_interval_ms;
    let report = build_report(
        sc,
        &timeline,
        Vec::new(),
        EnergyLedger {
            rows: Vec::new(),
            naive_total_mj: 0.0,
            portable_total_mj: None,
        },
        VerificationSummary {
            count,
            interval_s: sc.verify_interval_ms as f64 / 1000.0,
            energy_mj: 0.0,
        },
        0.0,
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
    );
    (timeline, report)
}

/// Survival vector after evidence: `max(base, floor)` on accepted components.
pub fn effective_sigma(
    base: &PerComponent<f64>,
    floor: &PerComponent<f64>,
    accepted: &BTreeSet<TrustComponent>,
) -> PerComponent<f64> {
    let mut out = *base;
    for &c in accepted {
        out[c] = base[c].max(floor[c]);
    }
    out
}
