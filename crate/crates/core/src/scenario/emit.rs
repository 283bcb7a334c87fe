//! Canonical scenario text. Every value is written out in full, so parsing
//! the output reproduces the resolved scenario whatever the defaults are.

use std::fmt::Write;

use super::{EventKind, MissionScenario};
use crate::adversary::AdversaryAction;
use crate::transition::SurvivalMatrixSet;
use crate::trust::{TrustComponent, TrustState};

fn vec5(v: &[f64; 5]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

fn state(s: &TrustState) -> String {
    vec5(&s.values())
}

fn secs(ms: u64) -> String {
    format!("{}", ms as f64 / 1000.0)
}

/// One `[survival <c>]` section with every registered pair.
pub fn emit_survival(matrices: &SurvivalMatrixSet, c: TrustComponent) -> String {
    let mut out = format!("[survival {}]\n", c.short());
    for (from, to, v) in matrices.entries(c) {
        let _ = writeln!(out, "{from}.{to} = {v}");
    }
    out
}

pub fn emit_scenario(sc: &MissionScenario) -> String {
    let mut o = String::new();
    let w = &mut o;

    let _ = writeln!(w, "[mission]");
    let _ = writeln!(w, "name = {}", sc.name);
    let _ = writeln!(w, "duration_min = {}", sc.duration_ms as f64 / 60_000.0);
    let _ = writeln!(w, "weights = {}", vec5(&sc.weights.values()));
    let _ = writeln!(w, "t_min = {}", sc.t_min);
    let _ = writeln!(w, "verify_interval_s = {}", secs(sc.verify_interval_ms));
    let _ = writeln!(w, "seed = {}", sc.seed);
    let _ = writeln!(w, "initial_rat = {}", sc.initial_rat);
    if let Some(s) = &sc.initial_state {
        let _ = writeln!(w, "initial_state = {}", state(s));
    }
    let _ = writeln!(w, "initial_auth_mJ = {}", sc.initial_auth_mj);
    if let Some(v) = sc.initial_auth_portable_mj {
        let _ = writeln!(w, "initial_auth_portable_mJ = {v}");
    }
    if !sc.parallel.is_empty() {
        let list: Vec<&str> = sc.parallel.iter().map(|r| r.as_str()).collect();
        let _ = writeln!(w, "parallel = {}", list.join(" "));
    }
    if !sc.available.is_empty() {
        let list: Vec<&str> = sc.available.iter().map(|r| r.as_str()).collect();
        let _ = writeln!(w, "available = {}", list.join(" "));
    }
    let _ = writeln!(w, "exploit_gaps = {}", sc.exploit_gaps);
    if let Some(p) = &sc.power {
        let _ = writeln!(w, "p_max_mW = {}", p.p_max_mw);
        let _ = writeln!(w, "p_flight_mW = {}", p.p_flight_mw);
        let _ = writeln!(w, "p_payload_mW = {}", p.p_payload_mw);
        let _ = writeln!(w, "p_comms_mW = {}", p.p_comms_mw);
    }
    match sc.silo_context {
        Some(v) => {
            let _ = writeln!(w, "silo_context = {v}");
        }
        None => {
            let _ = writeln!(w, "silo_context = measured");
        }
    }
    let _ = writeln!(w, "remote_id_weight = {}", sc.remote_id_weight);

    if let Some(p) = &sc.portability {
        let comps: Vec<&str> = p.components.iter().map(|c| c.short()).collect();
        let _ = writeln!(w, "\n[portability]");
        let _ = writeln!(w, "device = {}", p.device_id);
        let _ = writeln!(w, "components = {}", if comps.is_empty() { "none".into() } else { comps.join(" ") });
        let _ = writeln!(w, "improved = {}", vec5(&p.improved.0));
        let _ = writeln!(w, "verify_cost_mJ = {}", vec5(&p.verify_cost_mj.0));
        let _ = writeln!(w, "verify_latency_ms = {}", vec5(&p.verify_latency_ms.0));
        let _ = writeln!(w, "freshness_window_s = {}", secs(p.freshness_window_ms.max(0) as u64));
        let _ = writeln!(w, "replay_capacity = {}", p.replay_capacity);
        let _ = writeln!(w, "key = {}", hex::encode(p.master_key.bytes()));
    }

    if !sc.flows.is_empty() {
        let _ = writeln!(w, "\n[flows]");
        for f in &sc.flows {
            let _ = writeln!(w, "{} = {} {}", f.flow_id, f.carried_on, f.sensitivity);
        }
    }

    if !sc.trajectory.is_empty() {
        let _ = writeln!(w, "\n[trajectory]");
        for p in &sc.trajectory {
            match &p.rat {
                Some(r) => {
                    let _ = writeln!(w, "point = {} {} {r}", p.minute, p.score);
                }
                None => {
                    let _ = writeln!(w, "point = {} {}", p.minute, p.score);
                }
            }
        }
    }

    if !sc.reference.is_empty() {
        let _ = writeln!(w, "\n[reference]");
        for r in &sc.reference {
            let _ = writeln!(w, "{} = {}", r.key, r.literal);
        }
    }

    for p in sc.rats.values() {
        let _ = writeln!(w, "\n[rat {}]", p.id);
        let _ = writeln!(w, "family = {}", p.family.name());
        let _ = writeln!(w, "ceiling = {}", state(&p.ceiling));
        let _ = writeln!(w, "reauth = {}", state(&p.reauth));
        let _ = writeln!(w, "cost_mJ = {}", vec5(&p.cost_mj.0));
        let _ = writeln!(w, "latency_ms = {}", vec5(&p.latency_ms.0));
        let _ = writeln!(w, "verify_energy_mJ = {}", p.verify_energy_mj);
        let _ = writeln!(w, "decay_rate = {}", vec5(&p.decay.rate_per_min.0));
        let _ = writeln!(w, "decay_shape = {}", vec5(&p.decay.shape.0));
        for (name, f) in &p.decay.triggers {
            let _ = writeln!(w, "trigger.{name} = {}", vec5(&f.0));
        }
        let _ = writeln!(w, "mutual_auth = {}", p.mutual_auth);
        let _ = writeln!(w, "trust_silo = {}", p.trust_silo);
        let _ = writeln!(w, "connected = {}", p.connected);
    }

    for c in TrustComponent::ALL {
        let _ = write!(w, "\n{}", emit_survival(&sc.matrices, c));
    }

    for ev in &sc.events {
        let _ = writeln!(w, "\n[event]");
        let _ = writeln!(w, "at_s = {}", secs(ev.at_ms));
        match &ev.kind {
            EventKind::Transition {
                to,
                from,
                kind,
                cost_mj,
                portable_cost_mj,
                label,
            } => {
                let _ = writeln!(w, "type = transition");
                if let Some(f) = from {
                    let _ = writeln!(w, "from = {f}");
                }
                let _ = writeln!(w, "to = {to}");
                let _ = writeln!(w, "kind = {kind}");
                if let Some(v) = cost_mj {
                    let _ = writeln!(w, "cost_mJ = {v}");
                }
                if let Some(v) = portable_cost_mj {
                    let _ = writeln!(w, "portable_cost_mJ = {v}");
                }
                if let Some(l) = label {
                    let _ = writeln!(w, "label = {l}");
                }
            }
            EventKind::Adversary(AdversaryAction::JamRat { rat, duration_ms }) => {
                let _ = writeln!(w, "type = jam\nrat = {rat}\nduration_s = {}", secs(*duration_ms));
            }
            EventKind::Adversary(AdversaryAction::RogueRat { fake, mimics }) => {
                let _ = writeln!(w, "type = rogue\nfake = {fake}\nmimics = {mimics}");
            }
            EventKind::Adversary(AdversaryAction::ReplayArtefact { artefact }) => {
                let _ = writeln!(w, "type = replay\nartefact = {artefact}");
            }
            EventKind::Adversary(AdversaryAction::ForceTransition { target }) => {
                let _ = writeln!(w, "type = force\ntarget = {target}");
            }
            EventKind::Trigger { name } => {
                let _ = writeln!(w, "type = trigger\nname = {name}");
            }
            EventKind::LinkUp { rat, state: st } => {
                let _ = writeln!(w, "type = link-up\nrat = {rat}");
                if let Some(s) = st {
                    let _ = writeln!(w, "state = {}", state(s));
                }
            }
            EventKind::LinkDown { rat } => {
                let _ = writeln!(w, "type = link-down\nrat = {rat}");
            }
            EventKind::Revoke { artefact } => {
                let _ = writeln!(w, "type = revoke\nartefact = {artefact}");
            }
            EventKind::RemoteId { consistent } => {
                let _ = writeln!(w, "type = remote-id\nconsistent = {consistent}");
            }
        }
    }
    o
}
