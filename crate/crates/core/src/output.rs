//! Timeline CSV, human-readable report text and JSON.

use std::fmt::Write;

use crate::mission::{BudgetVerdict, MissionReport, Timeline};
use crate::transition::CostSource;

pub const TIMELINE_HEADER: &str =
    "t_s,event,active_rats,s_id,s_dev,s_ctx,s_net,s_pol,composite,energy_cum_mJ,below_threshold";

/// The timeline as CSV: aggregate state per row, fixed 6-decimal floats.
pub fn timeline_csv(timeline: &Timeline) -> String {
    let mut out = String::with_capacity(timeline.rows.len() * 96);
    out.push_str(TIMELINE_HEADER);
    out.push('\n');
    for r in &timeline.rows {
        let rats: Vec<&str> = r.active_rats.iter().map(|x| x.as_str()).collect();
        let s = r.aggregate.values();
        let _ = writeln!(
            out,
            "{:.3},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.t_s(),
            csv_field(&r.event),
            csv_field(&rats.join(";")),
            s[0],
            s[1],
            s[2],
            s[3],
            s[4],
            r.composite,
            r.energy_cum_mj,
            u8::from(r.below_threshold)
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rounds half away from zero to an integer percentage.
pub fn whole_percent(p: f64) -> i64 {
    p.round() as i64
}

pub fn report_text(rep: &MissionReport) -> String {
    let mut o = String::new();
    let w = &mut o;
    let _ = writeln!(w, "scenario {}  (seed {}, {} min, T_min {})", rep.scenario, rep.seed, rep.duration_min, rep.t_min);

    if !rep.ledger.rows.is_empty() {
        let _ = writeln!(w, "\nenergy ledger (mJ)");
        let has_portable = rep.ledger.portable_total_mj.is_some();
        if has_portable {
            let _ = writeln!(w, "  {:<28} {:>10} {:>10} {:>7}  source", "transition", "naive", "portable", "saving");
        } else {
            let _ = writeln!(w, "  {:<28} {:>10}  source", "transition", "naive");
        }
        for r in &rep.ledger.rows {
            let src = match r.source {
                CostSource::Table => "table",
                CostSource::Formula => "formula",
            };
            match r.portable_mj {
                Some(p) => {
                    let saving = r.saving_pct().map_or("-".to_string(), |s| format!("{}%", whole_percent(s)));
                    let _ = writeln!(w, "  {:<28} {:>10.1} {:>10.1} {:>7}  {src}", r.label, r.naive_mj, p, saving);
                }
                None => {
                    let _ = writeln!(w, "  {:<28} {:>10.1}  {src}", r.label, r.naive_mj);
                }
            }
        }
        match rep.ledger.portable_total_mj {
            Some(p) => {
                let saving = rep.ledger.saving_pct();
                let s = saving.map_or("-".to_string(), |s| format!("{}%", whole_percent(s)));
                let _ = writeln!(w, "  {:<28} {:>10.1} {:>10.1} {:>7}", "total", rep.ledger.naive_total_mj, p, s);
                if let Some(s) = saving {
                    let _ = writeln!(w, "  exact saving {s:.2}%");
                }
            }
            None => {
                let _ = writeln!(w, "  {:<28} {:>10.1}", "total", rep.ledger.naive_total_mj);
            }
        }
    }

    if !rep.crossings.is_empty() {
        let _ = writeln!(w, "\ncrossings");
        for c in &rep.crossings {
            let _ = write!(
                w,
                "  {:>8.1} s  {} -> {}  {} (α {})  cost {:.1} mJ  latency {:.0} ms  gap {:.3} s",
                c.time_s,
                c.from_rat,
                c.to_rat,
                c.kind,
                c.alpha,
                c.cost_mj,
                c.latency_ms,
                c.trust_gap_s
            );
            if let Some(p) = c.portable_cost_mj {
                let _ = write!(w, "  portable {p:.1} mJ");
            }
            if let Some(p) = c.portable_latency_ms {
                let _ = write!(w, " / {p:.0} ms");
            }
            if c.gap_exploited {
                let _ = write!(w, "  EXPLOITED");
            }
            let _ = writeln!(w);
        }
    }

    let v = &rep.verification;
    let _ = writeln!(w, "\nverification: {} checks every {} s, {:.1} mJ", v.count, v.interval_s, v.energy_mj);
    let _ = writeln!(w, "total authentication energy: {:.1} mJ", rep.total_energy_mj);
    let _ = writeln!(
        w,
        "sub-threshold exposure: {:.2} min ({:.1}%)",
        rep.exposure.minutes,
        rep.exposure.fraction * 100.0
    );
    match rep.budget {
        BudgetVerdict::Feasible { budget_mj } => {
            let _ = writeln!(w, "budget: feasible ({budget_mj:.1} mJ available)");
        }
        BudgetVerdict::Infeasible { budget_mj, deficit_mj } => {
            let _ = writeln!(w, "budget: INFEASIBLE ({budget_mj:.1} mJ available, short by {deficit_mj:.1} mJ)");
        }
        BudgetVerdict::NotConfigured => {}
    }

    if !rep.artefacts.is_empty() {
        let _ = writeln!(w, "\nartefacts");
        for a in &rep.artefacts {
            let _ = writeln!(
                w,
                "  {:>8.1} s  {:<10} {:<4} {} {}{}",
                a.time_s,
                a.label,
                a.component.short(),
                a.issuer,
                a.decision,
                if a.replay { " (replay)" } else { "" }
            );
        }
    }

    if !rep.flows.is_empty() {
        let _ = writeln!(w, "\nflows");
        for f in &rep.flows {
            let min = f.min_s_net.map_or("-".to_string(), |m| format!("{m:.3}"));
            let _ = writeln!(
                w,
                "  {:<14} on {:<10} {:<6} threshold {:.1}  min s_net {min}  below {}/{}",
                f.flow_id, f.carried_on, f.sensitivity, f.threshold, f.samples_below, f.samples_active
            );
        }
    }

    if !rep.warnings.is_empty() {
        let _ = writeln!(w, "\nwarnings");
        for msg in &rep.warnings {
            let _ = writeln!(w, "  {msg}");
        }
    }
    o
}

/// Published-versus-computed lines for the scenario's `[reference]` values.
pub fn reference_text(rep: &MissionReport) -> String {
    let mut o = String::new();
    let w = &mut o;
    if !rep.reference_checks.is_empty() {
        let _ = writeln!(w, "\nreference check");
        for c in &rep.reference_checks {
            let computed = c.computed.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                w,
                "  {:<30} expected {:>8}  computed {:>12}  {}",
                c.key,
                c.expected,
                computed,
                if c.mismatch { "MISMATCH" } else { "ok" }
            );
        }
    }
    o
}

pub fn report_json(rep: &MissionReport) -> String {
    serde_json::to_string_pretty(rep).expect("report serialises")
}
