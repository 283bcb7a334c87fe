//! Resolution of parsed sections into a [`MissionScenario`].

use std::collections::{BTreeMap, HashSet};

use super::diagnostic::Diagnostic;
use super::syntax::{parse_sections, Entry, Section};
use super::{
    Defaults, EventKind, MissionScenario, PowerBudget, ReferenceValue, ScheduledEvent,
    TrajectoryPoint, REFERENCE_KEYS,
};
use crate::adversary::AdversaryAction;
use crate::composition::{FlowAssignment, Sensitivity};
use crate::error::Error;
use crate::portability::{ArtefactKey, PortabilityConfig};
use crate::transition::{SurvivalMatrixSet, TransitionKind};
use crate::trust::{
    PerComponent, RatFamily, RatId, RatProfile, TrustComponent, TrustState, WeightVector,
    WEIGHT_SUM_TOLERANCE,
};

/// A successfully resolved scenario plus any warnings raised on the way.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub scenario: MissionScenario,
    pub warnings: Vec<Diagnostic>,
}

/// Parses scenario text against the bundled defaults.
pub fn parse_scenario(input: &[u8]) -> Result<Parsed, Vec<Diagnostic>> {
    parse_scenario_with(input, Defaults::builtin())
}

pub fn parse_scenario_with(input: &[u8], defaults: &Defaults) -> Result<Parsed, Vec<Diagnostic>> {
    let (sections, diags) = parse_sections(input);
    let mut b = Builder::new(defaults, diags);
    let scenario = b.scenario(&sections);
    b.finish(scenario)
        .map(|(scenario, warnings)| Parsed { scenario, warnings })
}

pub(super) fn parse_defaults(input: &[u8]) -> Result<Defaults, Vec<Diagnostic>> {
    let (sections, diags) = parse_sections(input);
    let mut b = Builder::new(&Defaults::empty(), diags);
    for s in &sections {
        if s.name != "rat" && s.name != "survival" {
            b.error_at(s.line, s.col, "defaults may only contain [rat] and [survival] sections", &s.header());
        }
    }
    b.rat_sections(&sections);
    b.survival_sections(&sections);
    b.check_matrices();
    let defaults = Defaults {
        rats: std::mem::take(&mut b.rats),
        matrices: std::mem::take(&mut b.matrices),
    };
    b.finish(Some(defaults)).map(|(d, _)| d)
}

struct Builder {
    diags: Vec<Diagnostic>,
    rats: BTreeMap<RatId, RatProfile>,
    matrices: SurvivalMatrixSet,
    rat_lines: BTreeMap<RatId, usize>,
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn valid_text(s: &str) -> bool {
    !s.is_empty() && !s.contains('#') && !s.contains(['\n', '\r'])
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

impl Builder {
    fn new(defaults: &Defaults, diags: Vec<Diagnostic>) -> Self {
        Builder {
            diags,
            rats: defaults.rats.clone(),
            matrices: defaults.matrices.clone(),
            rat_lines: BTreeMap::new(),
        }
    }

    fn finish<T>(mut self, value: Option<T>) -> Result<(T, Vec<Diagnostic>), Vec<Diagnostic>> {
        self.diags.sort_by_key(|d| (d.line, d.column));
        match value {
            Some(v) if !self.diags.iter().any(Diagnostic::is_error) => Ok((v, self.diags)),
            _ => {
                if !self.diags.iter().any(Diagnostic::is_error) {
                    self.diags.push(Diagnostic::error(1, 1, "scenario could not be resolved", ""));
                }
                Err(self.diags)
            }
        }
    }

    // -- diagnostics -------------------------------------------------------

    fn error_at(&mut self, line: usize, col: usize, msg: impl Into<String>, token: &str) {
        self.diags.push(Diagnostic::error(line, col, msg, token));
    }

    fn warn_at(&mut self, line: usize, col: usize, msg: impl Into<String>, token: &str) {
        self.diags.push(Diagnostic::warning(line, col, msg, token));
    }

    fn bad_value(&mut self, e: &Entry, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(e.line, e.value_col, msg, &e.value));
    }

    fn bad_key(&mut self, e: &Entry, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(e.line, e.key_col, msg, &e.key));
    }

    fn unknown_key(&mut self, e: &Entry, section: &Section) {
        let msg = format!("unknown key `{}` in {}", e.key, section.header());
        self.bad_key(e, msg);
    }

    /// Entries keyed by name; duplicates are reported and dropped.
    fn fields<'a>(&mut self, section: &'a Section) -> BTreeMap<&'a str, &'a Entry> {
        let mut out = BTreeMap::new();
        for e in &section.entries {
            if out.contains_key(e.key.as_str()) {
                let msg = format!("duplicate key `{}` in {}", e.key, section.header());
                self.bad_key(e, msg);
            } else {
                out.insert(e.key.as_str(), e);
            }
        }
        out
    }

    fn missing(&mut self, section: &Section, key: &str) {
        let msg = format!("{} is missing required key `{key}`", section.header());
        self.error_at(section.line, section.col, msg, &section.header());
    }

    // -- value parsers -----------------------------------------------------

    fn number(&mut self, e: &Entry) -> Option<f64> {
        let v = parse_number(&e.value);
        if v.is_none() {
            self.bad_value(e, format!("`{}` expects a number", e.key));
        }
        v
    }

    fn non_negative(&mut self, e: &Entry) -> Option<f64> {
        let v = self.number(e)?;
        if v < 0.0 {
            self.bad_value(e, format!("`{}` must be non-negative", e.key));
            return None;
        }
        Some(v)
    }

    fn unit(&mut self, e: &Entry) -> Option<f64> {
        let v = self.number(e)?;
        if !(0.0..=1.0).contains(&v) {
            self.bad_value(e, format!("`{}` = {v} is outside [0, 1]", e.key));
            return None;
        }
        Some(v)
    }

    fn vector(&mut self, e: &Entry) -> Option<[f64; 5]> {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        if parts.len() != 5 {
            self.bad_value(
                e,
                format!("`{}` expects 5 numbers (id dev ctx net pol), found {}", e.key, parts.len()),
            );
            return None;
        }
        let mut out = [0.0; 5];
        for (slot, p) in out.iter_mut().zip(&parts) {
            match parse_number(p) {
                Some(v) => *slot = v,
                None => {
                    self.bad_value(e, format!("`{p}` is not a number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn unit_vector(&mut self, e: &Entry) -> Option<[f64; 5]> {
        let v = self.vector(e)?;
        if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            self.bad_value(e, format!("`{}` component {bad} is outside [0, 1]", e.key));
            return None;
        }
        Some(v)
    }

    fn non_negative_vector(&mut self, e: &Entry) -> Option<[f64; 5]> {
        let v = self.vector(e)?;
        if let Some(bad) = v.iter().find(|x| **x < 0.0) {
            self.bad_value(e, format!("`{}` component {bad} is negative", e.key));
            return None;
        }
        Some(v)
    }

    fn state(&mut self, e: &Entry) -> Option<TrustState> {
        self.unit_vector(e).and_then(|v| TrustState::new(v).ok())
    }

    fn boolean(&mut self, e: &Entry) -> Option<bool> {
        match e.value.as_str() {
            "true" => Some(true),
            "false" => Some(false),
            _ => {
                self.bad_value(e, format!("`{}` expects true or false", e.key));
                None
            }
        }
    }

    fn integer(&mut self, e: &Entry) -> Option<u64> {
        let v = e.value.parse::<u64>().ok();
        if v.is_none() {
            self.bad_value(e, format!("`{}` expects a non-negative integer", e.key));
        }
        v
    }

    /// Seconds as a non-negative number, stored in whole milliseconds.
    fn seconds_ms(&mut self, e: &Entry) -> Option<u64> {
        let v = self.non_negative(e)?;
        if v > 1e9 {
            self.bad_value(e, format!("`{}` is too large", e.key));
            return None;
        }
        Some((v * 1000.0).round() as u64)
    }

    fn text(&mut self, e: &Entry) -> Option<String> {
        if valid_text(&e.value) {
            Some(e.value.clone())
        } else {
            self.bad_value(e, format!("`{}` needs a non-empty value", e.key));
            None
        }
    }

    fn rat_ref_str(&mut self, e: &Entry, token: &str) -> Option<RatId> {
        if self.rats.contains_key(token) {
            Some(RatId::new(token))
        } else {
            let col = e.value_col + e.value.find(token).unwrap_or(0);
            self.error_at(e.line, col, format!("undeclared RAT `{token}`"), token);
            None
        }
    }

    fn rat_ref(&mut self, e: &Entry) -> Option<RatId> {
        let token = e.value.clone();
        self.rat_ref_str(e, &token)
    }

    fn rat_list(&mut self, e: &Entry) -> Option<Vec<RatId>> {
        let tokens: Vec<String> = e.value.split_whitespace().map(str::to_string).collect();
        let mut out = Vec::new();
        let mut ok = true;
        for t in tokens.iter().filter(|t| *t != "none") {
            match self.rat_ref_str(e, t) {
                Some(r) if out.contains(&r) => {
                    self.bad_value(e, format!("`{t}` is listed twice"));
                    ok = false;
                }
                Some(r) => out.push(r),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn kind(&mut self, e: &Entry) -> Option<TransitionKind> {
        let k = TransitionKind::from_keyword(&e.value);
        if k.is_none() {
            self.bad_value(e, "transition kind must be planned, coverage, opportunistic or adversary");
        }
        k
    }

    // -- top level ---------------------------------------------------------

    fn scenario(&mut self, sections: &[Section]) -> Option<MissionScenario> {
        const KNOWN: &[&str] = &[
            "mission", "rat", "survival", "event", "portability", "flows", "trajectory", "reference",
        ];
        let mut singles: HashSet<&str> = HashSet::new();
        for s in sections {
            if !KNOWN.contains(&s.name.as_str()) {
                self.error_at(s.line, s.col, format!("unknown section `{}`", s.header()), &s.header());
                continue;
            }
            let needs_arg = matches!(s.name.as_str(), "rat" | "survival");
            if needs_arg && s.arg.is_none() {
                self.error_at(s.line, s.col, format!("[{}] needs an argument", s.name), &s.header());
            } else if !needs_arg && s.arg.is_some() {
                self.error_at(s.line, s.col, format!("[{}] takes no argument", s.name), &s.header());
            }
            if !needs_arg && s.name != "event" && !singles.insert(s.name.as_str()) {
                self.error_at(s.line, s.col, format!("duplicate {} section", s.header()), &s.header());
            }
        }

        self.rat_sections(sections);
        self.survival_sections(sections);
        self.check_matrices();

        let Some(mission) = sections.iter().find(|s| s.name == "mission") else {
            self.error_at(1, 1, "missing [mission] section", "");
            return None;
        };
        let mut sc = self.mission(mission)?;
        sc.rats = self.rats.clone();
        sc.matrices = self.matrices.clone();

        for s in sections {
            match s.name.as_str() {
                "portability" => sc.portability = self.portability(s),
                "flows" => sc.flows = self.flows(s),
                "trajectory" => sc.trajectory = self.trajectory(s),
                "reference" => sc.reference = self.reference(s),
                _ => {}
            }
        }
        self.check_portability(&sc, sections);

        let reachable = sc.reachable();
        let mut events: Vec<(ScheduledEvent, usize)> = Vec::new();
        for s in sections.iter().filter(|s| s.name == "event") {
            if let Some(ev) = self.event(s) {
                let target = match &ev.kind {
                    EventKind::Transition { to, .. } => Some(to),
                    EventKind::LinkUp { rat, .. } => Some(rat),
                    EventKind::Adversary(AdversaryAction::JamRat { rat, .. }) => Some(rat),
                    EventKind::Adversary(AdversaryAction::ForceTransition { target }) => Some(target),
                    EventKind::Adversary(AdversaryAction::RogueRat { mimics, .. }) => Some(mimics),
                    _ => None,
                };
                if let Some(t) = target.filter(|t| !reachable.contains(*t)) {
                    let msg = format!("`{t}` is not in the mission's available RATs");
                    let (line, col) = s
                        .entries
                        .iter()
                        .find(|e| e.value == t.as_str())
                        .map_or((s.line, s.col), |e| (e.line, e.value_col));
                    self.error_at(line, col, msg, t.as_str());
                    continue;
                }
                events.push((ev, s.line));
            }
        }
        let mut latest = 0;
        let mut warned = false;
        for (ev, line) in &events {
            if ev.at_ms < latest && !warned {
                self.warn_at(*line, 1, "events are not in time order; they were sorted", "[event]");
                warned = true;
            }
            latest = latest.max(ev.at_ms);
            if ev.at_ms > sc.duration_ms {
                self.warn_at(*line, 1, "event is scheduled after the mission ends and never runs", "[event]");
            }
        }
        events.sort_by_key(|(ev, _)| ev.at_ms);
        sc.events = events.into_iter().map(|(ev, _)| ev).collect();
        Some(sc)
    }

    // -- [rat] -------------------------------------------------------------

    fn rat_sections(&mut self, sections: &[Section]) {
        for s in sections.iter().filter(|s| s.name == "rat") {
            let Some(id) = s.arg.as_deref() else { continue };
            if !RatId::is_valid(id) {
                self.error_at(s.line, s.col, "RAT ids use letters, digits, `-` and `_`", id);
                continue;
            }
            if self.rat_lines.contains_key(id) {
                self.error_at(s.line, s.col, format!("duplicate rat_id `{id}`"), id);
                continue;
            }
            self.rat_lines.insert(RatId::new(id), s.line);
            self.rat(s, id);
        }
    }

    fn rat(&mut self, s: &Section, id: &str) {
        let fields = self.fields(s);
        let rat = RatId::new(id);
        let base = match fields.get("base") {
            Some(e) => {
                let Some(b) = self.rat_ref(e) else { return };
                if b.as_str() == id {
                    self.bad_value(e, "a RAT cannot be based on itself");
                    return;
                }
                Some(b)
            }
            None => None,
        };
        let family = match fields.get("family") {
            Some(e) => match RatFamily::from_name(&e.value) {
                Some(f) => Some(f),
                None => {
                    self.bad_value(e, "unknown RAT family");
                    return;
                }
            },
            None => None,
        };

        let mut profile = if let Some(b) = &base {
            let mut p = self.rats[b].clone();
            p.id = rat.clone();
            self.copy_matrix_entries(b, &rat);
            p
        } else if let Some(p) = self.rats.get(id) {
            p.clone()
        } else if let Some(f) = family {
            self.matrices.register(rat.clone());
            RatProfile::open(id, f)
        } else {
            self.error_at(s.line, s.col, format!("new RAT `{id}` needs `family` or `base`"), id);
            return;
        };
        if let Some(f) = family {
            profile.family = f;
        }

        for (key, e) in &fields {
            match *key {
                "base" | "family" => {}
                "ceiling" => {
                    if let Some(v) = self.state(e) {
                        profile.ceiling = v;
                    }
                }
                "reauth" => {
                    if let Some(v) = self.state(e) {
                        profile.reauth = v;
                    }
                }
                "cost_mJ" => {
                    if let Some(v) = self.non_negative_vector(e) {
                        profile.cost_mj = PerComponent(v);
                    }
                }
                "latency_ms" => {
                    if let Some(v) = self.non_negative_vector(e) {
                        profile.latency_ms = PerComponent(v);
                    }
                }
                "verify_energy_mJ" => {
                    if let Some(v) = self.non_negative(e) {
                        profile.verify_energy_mj = v;
                    }
                }
                "decay_rate" => {
                    if let Some(v) = self.non_negative_vector(e) {
                        profile.decay.rate_per_min = PerComponent(v);
                    }
                }
                "decay_shape" => {
                    if let Some(v) = self.vector(e) {
                        if v.iter().all(|k| *k > 0.0) {
                            profile.decay.shape = PerComponent(v);
                        } else {
                            self.bad_value(e, "decay shapes must be positive");
                        }
                    }
                }
                "mutual_auth" => {
                    if let Some(v) = self.boolean(e) {
                        profile.mutual_auth = v;
                    }
                }
                "trust_silo" => {
                    if let Some(v) = self.boolean(e) {
                        profile.trust_silo = v;
                    }
                }
                "connected" => {
                    if let Some(v) = self.boolean(e) {
                        profile.connected = v;
                    }
                }
                k if k.starts_with("trigger.") => {
                    let name = &k["trigger.".len()..];
                    if !valid_name(name) {
                        self.bad_key(e, "trigger names use letters, digits, `-`, `_` and `.`");
                    } else if let Some(v) = self.unit_vector(e) {
                        profile.decay.triggers.insert(name.to_string(), PerComponent(v));
                    }
                }
                _ => self.unknown_key(e, s),
            }
        }
        if let Err(err) = profile.validate() {
            self.error_at(s.line, s.col, err.to_string(), &s.header());
        }
        self.rats.insert(rat, profile);
    }

    fn copy_matrix_entries(&mut self, base: &RatId, new: &RatId) {
        self.matrices.register(new.clone());
        let others: Vec<RatId> = self.matrices.rats().filter(|r| *r != new).cloned().collect();
        let (b, n) = (base.as_str(), new.as_str());
        for c in TrustComponent::ALL {
            if let Ok(v) = self.matrices.get(c, b, b) {
                let _ = self.matrices.set(c, n, n, v);
            }
            for other in &others {
                let o = other.as_str();
                if let Ok(v) = self.matrices.get(c, b, o) {
                    let _ = self.matrices.set(c, n, o, v);
                }
                if let Ok(v) = self.matrices.get(c, o, b) {
                    let _ = self.matrices.set(c, o, n, v);
                }
            }
        }
    }

    // -- [survival] --------------------------------------------------------

    fn survival_sections(&mut self, sections: &[Section]) {
        for s in sections.iter().filter(|s| s.name == "survival") {
            let Some(arg) = s.arg.as_deref() else { continue };
            let Some(c) = TrustComponent::from_short(arg) else {
                self.error_at(s.line, s.col, "survival component must be id, dev, ctx, net or pol", arg);
                continue;
            };
            let fields = self.fields(s);
            for e in fields.values() {
                let Some((from, to)) = e.key.split_once('.') else {
                    self.bad_key(e, "survival entries are written `from.to = value`");
                    continue;
                };
                let mut ok = true;
                for rat in [from, to] {
                    if !self.rats.contains_key(rat) {
                        let col = e.key_col + if rat == to && from != to { from.len() + 1 } else { 0 };
                        self.error_at(e.line, col, format!("undeclared RAT `{rat}`"), rat);
                        ok = false;
                    }
                }
                match parse_number(&e.value) {
                    Some(v) if (0.0..=1.0).contains(&v) => {
                        if ok {
                            let _ = self.matrices.set(c, from, to, v);
                        }
                    }
                    Some(v) => self.bad_value(e, format!("survival value {v} is outside [0, 1]")),
                    None => self.bad_value(e, "survival value must be a number"),
                }
            }
        }
    }

    fn check_matrices(&mut self) {
        for c in TrustComponent::ALL {
            let rats: Vec<RatId> = self.matrices.rats().cloned().collect();
            for from in &rats {
                for to in &rats {
                    if self.matrices.get(c, from.as_str(), to.as_str()).is_err() {
                        let line = self.rat_lines.get(from).or(self.rat_lines.get(to)).copied().unwrap_or(1);
                        let msg = format!("no survival entry for {c} {from} -> {to}");
                        self.error_at(line, 1, msg, &format!("{from}.{to}"));
                        return;
                    }
                }
            }
        }
    }

    // -- [mission] ---------------------------------------------------------

    fn mission(&mut self, s: &Section) -> Option<MissionScenario> {
        let fields = self.fields(s);
        let mut sc = MissionScenario::new("unnamed", "", 0, &Defaults::empty());
        let mut power: [Option<f64>; 4] = [None; 4];
        let mut ok = true;

        for (key, e) in &fields {
            match *key {
                "name" => match self.text(e) {
                    Some(v) => sc.name = v,
                    None => ok = false,
                },
                "duration_min" => match self.number(e) {
                    Some(v) if v > 0.0 && v <= 1e7 => sc.duration_ms = (v * 60_000.0).round() as u64,
                    Some(_) => {
                        self.bad_value(e, "mission duration must be positive");
                        ok = false;
                    }
                    None => ok = false,
                },
                "weights" => match self.weights(e) {
                    Some(w) => sc.weights = w,
                    None => ok = false,
                },
                "t_min" => match self.unit(e) {
                    Some(v) => sc.t_min = v,
                    None => ok = false,
                },
                "verify_interval_s" => match self.seconds_ms(e) {
                    Some(v) if v > 0 => sc.verify_interval_ms = v,
                    Some(_) => {
                        self.bad_value(e, "verification interval must be positive");
                        ok = false;
                    }
                    None => ok = false,
                },
                "seed" => match self.integer(e) {
                    Some(v) => sc.seed = v,
                    None => ok = false,
                },
                "initial_rat" => match self.rat_ref(e) {
                    Some(r) => sc.initial_rat = r,
                    None => ok = false,
                },
                "initial_state" => match self.state(e) {
                    Some(v) => sc.initial_state = Some(v),
                    None => ok = false,
                },
                "initial_auth_mJ" => match self.non_negative(e) {
                    Some(v) => sc.initial_auth_mj = v,
                    None => ok = false,
                },
                "initial_auth_portable_mJ" => match self.non_negative(e) {
                    Some(v) => sc.initial_auth_portable_mj = Some(v),
                    None => ok = false,
                },
                "parallel" => match self.rat_list(e) {
                    Some(v) => sc.parallel = v,
                    None => ok = false,
                },
                "available" => match self.rat_list(e) {
                    Some(v) => sc.available = v,
                    None => ok = false,
                },
                "exploit_gaps" => match self.boolean(e) {
                    Some(v) => sc.exploit_gaps = v,
                    None => ok = false,
                },
                "p_max_mW" | "p_flight_mW" | "p_payload_mW" | "p_comms_mW" => {
                    let idx = ["p_max_mW", "p_flight_mW", "p_payload_mW", "p_comms_mW"]
                        .iter()
                        .position(|k| k == key)
                        .unwrap_or(0);
                    match self.non_negative(e) {
                        Some(v) => power[idx] = Some(v),
                        None => ok = false,
                    }
                }
                "silo_context" => {
                    if e.value == "measured" {
                        sc.silo_context = None;
                    } else {
                        match self.unit(e) {
                            Some(v) => sc.silo_context = Some(v),
                            None => ok = false,
                        }
                    }
                }
                "remote_id_weight" => match self.unit(e) {
                    Some(v) => sc.remote_id_weight = v,
                    None => ok = false,
                },
                _ => self.unknown_key(e, s),
            }
        }

        if !fields.contains_key("duration_min") {
            self.missing(s, "duration_min");
            ok = false;
        }
        if !fields.contains_key("initial_rat") {
            self.missing(s, "initial_rat");
            ok = false;
        }
        if power.iter().any(Option::is_some) {
            if power[0].is_none() {
                self.missing(s, "p_max_mW");
                ok = false;
            }
            sc.power = Some(PowerBudget {
                p_max_mw: power[0].unwrap_or(0.0),
                p_flight_mw: power[1].unwrap_or(0.0),
                p_payload_mw: power[2].unwrap_or(0.0),
                p_comms_mw: power[3].unwrap_or(0.0),
            });
        }
        if !ok {
            return None;
        }

        if let Some(e) = fields.get("parallel") {
            if sc.parallel.contains(&sc.initial_rat) {
                self.bad_value(e, "the initial RAT is already active");
            }
        }
        if let (Some(state), Some(e)) = (sc.initial_state, fields.get("initial_state")) {
            let ceiling = self.rats[&sc.initial_rat].ceiling;
            if !state.le(&ceiling) {
                self.diags.push(Diagnostic::warning(
                    e.line,
                    e.value_col,
                    format!("initial state exceeds the {} ceiling and is clamped", sc.initial_rat),
                    &e.value,
                ));
            }
        }
        Some(sc)
    }

    fn weights(&mut self, e: &Entry) -> Option<WeightVector> {
        match e.value.as_str() {
            "commercial" => return Some(WeightVector::commercial()),
            "defence" => return Some(WeightVector::defence()),
            "uniform" => return Some(WeightVector::uniform()),
            _ => {}
        }
        let v = self.vector(e)?;
        let sum: f64 = v.iter().sum();
        if v.iter().any(|w| *w <= 0.0) {
            self.bad_value(e, "weights must all be positive");
            return None;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            self.bad_value(e, format!("weights sum {sum} ≠ 1"));
            return None;
        }
        WeightVector::new(v).ok()
    }

    // -- [portability] -----------------------------------------------------

    fn portability(&mut self, s: &Section) -> Option<PortabilityConfig> {
        let fields = self.fields(s);
        let mut cfg = PortabilityConfig::default();
        for (key, e) in &fields {
            match *key {
                "device" => {
                    if valid_name(&e.value) {
                        cfg.device_id = e.value.clone();
                    } else {
                        self.bad_value(e, "device ids use letters, digits, `-`, `_` and `.`");
                    }
                }
                "components" => {
                    cfg.components.clear();
                    for t in e.value.split_whitespace().filter(|t| *t != "none") {
                        match TrustComponent::from_short(t) {
                            Some(c) => {
                                cfg.components.insert(c);
                            }
                            None => self.bad_value(e, format!("unknown trust component `{t}`")),
                        }
                    }
                }
                "improved" => {
                    if let Some(v) = self.unit_vector(e) {
                        cfg.improved = PerComponent(v);
                    }
                }
                "verify_cost_mJ" => {
                    if let Some(v) = self.non_negative_vector(e) {
                        cfg.verify_cost_mj = PerComponent(v);
                    }
                }
                "verify_latency_ms" => {
                    if let Some(v) = self.non_negative_vector(e) {
                        cfg.verify_latency_ms = PerComponent(v);
                    }
                }
                "freshness_window_s" => {
                    if let Some(v) = self.seconds_ms(e) {
                        cfg.freshness_window_ms = v as i64;
                    }
                }
                "replay_capacity" => match self.integer(e) {
                    Some(v) if v > 0 => cfg.replay_capacity = v as usize,
                    Some(_) => self.bad_value(e, "replay capacity must be positive"),
                    None => {}
                },
                "key" => match hex::decode(&e.value) {
                    Ok(bytes) if bytes.len() == 32 => {
                        let mut k = [0u8; 32];
                        k.copy_from_slice(&bytes);
                        cfg.master_key = ArtefactKey::new(k);
                    }
                    _ => self.bad_value(e, "key must be 64 hexadecimal digits"),
                },
                _ => self.unknown_key(e, s),
            }
        }
        if let Err(err) = cfg.validate() {
            let e = fields.get("components").copied();
            match e {
                Some(e) => self.bad_value(e, err.to_string()),
                None => self.error_at(s.line, s.col, err.to_string(), &s.header()),
            }
        }
        Some(cfg)
    }

    fn check_portability(&mut self, sc: &MissionScenario, sections: &[Section]) {
        let Some(cfg) = &sc.portability else { return };
        let Some(s) = sections.iter().find(|s| s.name == "portability") else { return };
        let reachable = sc.reachable();
        for p in sc.rats.values().filter(|p| !p.trust_silo && reachable.contains(&p.id)) {
            for &c in &cfg.components {
                if cfg.verify_cost_mj[c] >= p.cost_mj[c] && p.cost_mj[c] > 0.0 {
                    let msg = format!(
                        "verification cost for {c} ({}) must be below the {} re-establishment cost ({})",
                        cfg.verify_cost_mj[c], p.id, p.cost_mj[c]
                    );
                    self.error_at(s.line, s.col, msg, &s.header());
                    return;
                }
            }
        }
    }

    // -- [flows], [trajectory], [reference] --------------------------------

    fn flows(&mut self, s: &Section) -> Vec<FlowAssignment> {
        let mut fields: Vec<_> = self.fields(s).into_iter().collect();
        fields.sort_by_key(|(_, e)| e.line);
        let mut out = Vec::new();
        for (key, e) in fields {
            if !valid_name(key) {
                self.bad_key(e, "flow ids use letters, digits, `-`, `_` and `.`");
                continue;
            }
            let parts: Vec<String> = e.value.split_whitespace().map(str::to_string).collect();
            if parts.len() != 2 {
                self.bad_value(e, "flows are written `name = <rat> <low|medium|high>`");
                continue;
            }
            let Some(rat) = self.rat_ref_str(e, &parts[0]) else { continue };
            let Some(sensitivity) = Sensitivity::from_keyword(&parts[1]) else {
                self.bad_value(e, "sensitivity must be low, medium or high");
                continue;
            };
            out.push(FlowAssignment {
                flow_id: key.to_string(),
                carried_on: rat,
                sensitivity,
            });
        }
        out
    }

    fn trajectory(&mut self, s: &Section) -> Vec<TrajectoryPoint> {
        let mut out: Vec<TrajectoryPoint> = Vec::new();
        for e in &s.entries {
            if e.key != "point" {
                self.unknown_key(e, s);
                continue;
            }
            let parts: Vec<String> = e.value.split_whitespace().map(str::to_string).collect();
            if !(2..=3).contains(&parts.len()) {
                self.bad_value(e, "points are written `point = <minute> <score> [rat]`");
                continue;
            }
            let (Some(minute), Some(score)) = (parse_number(&parts[0]), parse_number(&parts[1])) else {
                self.bad_value(e, "point minute and score must be numbers");
                continue;
            };
            if minute < 0.0 || !(0.0..=1.0).contains(&score) {
                self.bad_value(e, "point minute must be non-negative and score within [0, 1]");
                continue;
            }
            if out.last().is_some_and(|p| p.minute > minute) {
                self.bad_value(e, "trajectory points must be in time order");
                continue;
            }
            if out.iter().filter(|p| p.minute == minute).count() >= 2 {
                self.bad_value(e, "at most two points may share a minute");
                continue;
            }
            let rat = match parts.get(2) {
                Some(r) => match self.rat_ref_str(e, r) {
                    Some(r) => Some(r),
                    None => continue,
                },
                None => None,
            };
            out.push(TrajectoryPoint { minute, score, rat });
        }
        out
    }

    fn reference(&mut self, s: &Section) -> Vec<ReferenceValue> {
        let mut fields: Vec<_> = self.fields(s).into_iter().collect();
        fields.sort_by_key(|(_, e)| e.line);
        let mut out = Vec::new();
        for (key, e) in fields {
            if !REFERENCE_KEYS.contains(&key) {
                self.unknown_key(e, s);
                continue;
            }
            let plain = e.value.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-');
            if parse_number(&e.value).is_none() || !plain {
                self.bad_value(e, "reference values are plain decimal numbers");
                continue;
            }
            out.push(ReferenceValue {
                key: key.to_string(),
                literal: e.value.clone(),
            });
        }
        out
    }

    // -- [event] -----------------------------------------------------------

    fn event(&mut self, s: &Section) -> Option<ScheduledEvent> {
        let mut fields = self.fields(s);
        let at = fields.remove("at_s");
        let ty = fields.remove("type");
        let (Some(at), Some(ty)) = (at, ty) else {
            if at.is_none() {
                self.missing(s, "at_s");
            }
            if ty.is_none() {
                self.missing(s, "type");
            }
            return None;
        };
        let at_ms = self.seconds_ms(at)?;

        let mut ok = true;
        let mut req = |b: &mut Self, fields: &mut BTreeMap<&str, &Entry>, key: &str| -> Option<Entry> {
            let e = fields.remove(key).cloned();
            if e.is_none() {
                b.missing(s, key);
                ok = false;
            }
            e
        };

        let kind = match ty.value.as_str() {
            "transition" => {
                let to = req(self, &mut fields, "to");
                let kind = req(self, &mut fields, "kind");
                let from = fields.remove("from").cloned();
                let cost = fields.remove("cost_mJ").cloned();
                let pcost = fields.remove("portable_cost_mJ").cloned();
                let label = fields.remove("label").cloned();
                let to = to.and_then(|e| self.rat_ref(&e));
                let kind = kind.and_then(|e| self.kind(&e));
                let from_id = match &from {
                    Some(e) => Some(self.rat_ref(e)?),
                    None => None,
                };
                let cost_mj = match &cost {
                    Some(e) => Some(self.non_negative(e)?),
                    None => None,
                };
                let portable_cost_mj = match &pcost {
                    Some(e) => Some(self.non_negative(e)?),
                    None => None,
                };
                let label = match &label {
                    Some(e) => Some(self.text(e)?),
                    None => None,
                };
                let (to, kind) = (to?, kind?);
                if let (Some(f), Some(e)) = (&from_id, &from) {
                    if *f == to {
                        self.bad_value(e, "a transition needs two different RATs");
                        return None;
                    }
                }
                EventKind::Transition {
                    to,
                    from: from_id,
                    kind,
                    cost_mj,
                    portable_cost_mj,
                    label,
                }
            }
            "jam" => {
                let rat = req(self, &mut fields, "rat");
                let dur = req(self, &mut fields, "duration_s");
                let rat = rat.and_then(|e| self.rat_ref(&e));
                let dur = dur.and_then(|e| match self.seconds_ms(&e) {
                    Some(0) => {
                        self.bad_value(&e, "jam duration must be positive");
                        None
                    }
                    v => v,
                });
                EventKind::Adversary(AdversaryAction::JamRat {
                    rat: rat?,
                    duration_ms: dur?,
                })
            }
            "rogue" => {
                let fake = req(self, &mut fields, "fake");
                let mimics = req(self, &mut fields, "mimics");
                let mimics = mimics.and_then(|e| self.rat_ref(&e));
                let fake = fake.and_then(|e| {
                    if !RatId::is_valid(&e.value) {
                        self.bad_value(&e, "RAT ids use letters, digits, `-` and `_`");
                        None
                    } else if self.rats.contains_key(e.value.as_str()) {
                        self.bad_value(&e, "a decoy id must not match a declared RAT");
                        None
                    } else {
                        Some(RatId::new(e.value.as_str()))
                    }
                });
                EventKind::Adversary(AdversaryAction::RogueRat {
                    fake: fake?,
                    mimics: mimics?,
                })
            }
            "replay" => {
                let a = req(self, &mut fields, "artefact");
                EventKind::Adversary(AdversaryAction::ReplayArtefact {
                    artefact: a.and_then(|e| self.artefact_label(&e))?,
                })
            }
            "revoke" => {
                let a = req(self, &mut fields, "artefact");
                EventKind::Revoke {
                    artefact: a.and_then(|e| self.artefact_label(&e))?,
                }
            }
            "force" => {
                let t = req(self, &mut fields, "target");
                EventKind::Adversary(AdversaryAction::ForceTransition {
                    target: t.and_then(|e| self.rat_ref(&e))?,
                })
            }
            "trigger" => {
                let n = req(self, &mut fields, "name");
                let name = n.and_then(|e| {
                    if valid_name(&e.value) {
                        Some(e.value.clone())
                    } else {
                        self.bad_value(&e, "trigger names use letters, digits, `-`, `_` and `.`");
                        None
                    }
                });
                EventKind::Trigger { name: name? }
            }
            "link-up" => {
                let r = req(self, &mut fields, "rat");
                let st = fields.remove("state").cloned();
                let rat = r.and_then(|e| self.rat_ref(&e));
                let state = match &st {
                    Some(e) => Some(self.state(e)?),
                    None => None,
                };
                EventKind::LinkUp { rat: rat?, state }
            }
            "link-down" => {
                let r = req(self, &mut fields, "rat");
                EventKind::LinkDown {
                    rat: r.and_then(|e| self.rat_ref(&e))?,
                }
            }
            "remote-id" => {
                let c = req(self, &mut fields, "consistent");
                EventKind::RemoteId {
                    consistent: c.and_then(|e| self.boolean(&e))?,
                }
            }
            _ => {
                self.bad_value(ty, "unknown event type");
                return None;
            }
        };
        for e in fields.values() {
            let msg = format!("unknown key `{}` for a `{}` event", e.key, ty.value);
            self.bad_key(e, msg);
            ok = false;
        }
        ok.then_some(ScheduledEvent { at_ms, kind })
    }

    fn artefact_label(&mut self, e: &Entry) -> Option<String> {
        if valid_name(&e.value) {
            Some(e.value.clone())
        } else {
            self.bad_value(e, "artefact labels look like `c1.id`");
            None
        }
    }
}

impl From<Vec<Diagnostic>> for Error {
    fn from(d: Vec<Diagnostic>) -> Self {
        Error::Scenario(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[mission]\nduration_min = 1\ninitial_rat = 5G\n";

    fn errors(src: &str) -> Vec<Diagnostic> {
        parse_scenario(src.as_bytes()).unwrap_err()
    }

    #[test]
    fn minimal_scenario() {
        let p = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!(p.scenario.duration_ms, 60_000);
        assert_eq!(p.scenario.rats.len(), 9);
        assert_eq!(p.scenario.silo_context, Some(crate::composition::DEFAULT_SILO_CONTEXT));
        p.scenario.matrices.validate_complete().unwrap();
    }

    #[test]
    fn commercial_weights_accepted() {
        let src = format!("{MINIMAL}weights = 0.20 0.15 0.20 0.25 0.20\n");
        let p = parse_scenario(src.as_bytes()).unwrap();
        assert_eq!(p.scenario.weights, WeightVector::commercial());
    }

    #[test]
    fn weight_sum_error() {
        let d = errors(&format!("{MINIMAL}weights = 0.5 0.5 0.5 0.5 0.5\n"));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, 4);
        assert_eq!(d[0].column, 11);
        assert!(d[0].message.contains("weights sum 2.5 ≠ 1"), "{}", d[0].message);
    }

    #[test]
    fn empty_file() {
        let d = errors("");
        assert!(d[0].message.contains("missing [mission] section"));
    }

    #[test]
    fn duplicate_rat_and_bad_sigma() {
        let src = format!("{MINIMAL}[rat X]\nbase = LoRaWAN\n[rat X]\nbase = 5G\n[survival id]\n5G.X = 1.5\n");
        let d = errors(&src);
        let lines: Vec<usize> = d.iter().map(|d| d.line).collect();
        assert_eq!(lines, [6, 9]);
        assert!(d[0].message.contains("duplicate rat_id"));
    }

    #[test]
    fn undeclared_rat_in_event() {
        let src = format!("{MINIMAL}[event]\nat_s = 10\ntype = transition\nto = Starlink\nkind = planned\n");
        let d = errors(&src);
        assert_eq!((d[0].line, d[0].column), (7, 6));
        assert_eq!(d[0].token, "Starlink");
    }

    #[test]
    fn based_rat_copies_matrix_entries() {
        let src = format!("{MINIMAL}[rat LoRa2]\nbase = LoRaWAN\n");
        let sc = parse_scenario(src.as_bytes()).unwrap().scenario;
        let m = &sc.matrices;
        assert_eq!(
            m.vector("4G", "LoRa2").unwrap(),
            m.vector("4G", "LoRaWAN").unwrap()
        );
        assert_eq!(
            m.vector("LoRa2", "LoRa2").unwrap(),
            m.vector("LoRaWAN", "LoRaWAN").unwrap()
        );
    }

    #[test]
    fn unordered_events_sorted_with_warning() {
        let src = format!(
            "{MINIMAL}[event]\nat_s = 20\ntype = trigger\nname = a\n[event]\nat_s = 5\ntype = trigger\nname = b\n"
        );
        let p = parse_scenario(src.as_bytes()).unwrap();
        assert_eq!(p.scenario.events[0].at_ms, 5_000);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].line, 8);
    }

    #[test]
    fn unknown_key_is_error() {
        let d = errors(&format!("{MINIMAL}colour = blue\n"));
        assert_eq!((d[0].line, d[0].column), (4, 1));
    }

    #[test]
    fn new_rat_without_matrix_rows_is_error() {
        let d = errors(&format!("{MINIMAL}[rat Zigbee]\nfamily = ble\n"));
        assert!(d[0].message.contains("no survival entry"));
        assert_eq!(d[0].line, 4);
    }
}
