//! One pass/fail line per acceptance criterion. Exits non-zero if any fails.

#[allow(dead_code)]
mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{oracle, props};
use zt_ratsim::mission::{self, MissionReport};
use zt_ratsim::output::timeline_csv;
use zt_ratsim::portability::portable_recovery_cost;
use zt_ratsim::scenario::{builtin, BUILTIN_SCENARIOS};
use zt_ratsim::transition::cost_multiplier;
use zt_ratsim::{TransitionKind, TrustComponent};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, format!("{what}: got {a}, want {b} ± {tol}"))
}

fn cli(args: &[&str]) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_zt-ratsim"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("ZT_RATSIM_DATA")
        .output()
        .map_err(|e| format!("cannot start binary: {e}"))?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), format!("`{}` exited with {}", args.join(" "), out.status))?;
    Ok((String::from_utf8_lossy(&out.stdout).into_owned(), elapsed))
}

fn run(name: &str) -> Result<MissionReport, String> {
    let sc = builtin(name).map_err(|e| e.to_string())?;
    mission::run(&sc).map(|(_, r)| r).map_err(|e| e.to_string())
}

const WE_PRE: [f64; 5] = [0.88, 0.82, 0.75, 0.85, 0.78];
const WE_SIGMA: [f64; 5] = [0.0, 0.7, 0.5, 0.0, 0.2];
const LORA_COST: [f64; 5] = [350.0, 180.0, 120.0, 200.0, 80.0];

fn c1_worked_example_cost() -> Outcome {
    let (text, elapsed) = cli(&["reproduce", "worked-example"])?;
    ensure(text.contains("cost 946.4 mJ"), "report does not show a 946.4 mJ crossing")?;
    let rep = run("worked-example")?;
    let c = rep.crossings.first().ok_or("no crossing")?;
    let expected = oracle::cost(1.3, &WE_SIGMA, &LORA_COST, &[0.0; 5], &[false; 5]);
    close(expected, 946.4, 1e-9, "oracle")?;
    close(c.cost_mj, 946.4, 0.05, "crossing cost")?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("{:.1} mJ in {:.0} ms", c.cost_mj, elapsed.as_secs_f64() * 1e3))
}

fn c2_worked_example_vectors() -> Outcome {
    let rep = run("worked-example")?;
    let c = rep.crossings.first().ok_or("no crossing")?;
    let post = oracle::survive(&WE_PRE, &WE_SIGMA);
    let recovered = oracle::recovered(&post, &[0.65, 0.0, 0.55, 0.45, 0.35], &[1.0; 5]);
    let want_post = [0.0, 0.574, 0.375, 0.0, 0.156];
    let want_rec = [0.65, 0.574, 0.55, 0.45, 0.35];
    for i in 0..5 {
        close(post[i], want_post[i], 1e-9, "oracle post")?;
        close(recovered[i], want_rec[i], 1e-9, "oracle recovered")?;
        close(c.post_state.values()[i], want_post[i], 1e-9, "post")?;
        close(c.recovered_state.values()[i], want_rec[i], 1e-9, "recovered")?;
    }
    Ok(format!("post {:?}, recovered {:?}", c.post_state.values(), c.recovered_state.values()))
}

fn c3_discrepancy_ledger() -> Outcome {
    let (text, _) = cli(&["simulate", "data/scenarios/worked-example.scn", "--paper-check"])?;
    let flagged: Vec<&str> = text
        .lines()
        .filter(|l| l.contains("MISMATCH") && l.trim_start().starts_with("composite."))
        .collect();
    ensure(flagged.len() == 3, format!("{} composite mismatches flagged", flagged.len()))?;
    let rep = run("worked-example")?;
    let post = oracle::survive(&WE_PRE, &WE_SIGMA);
    let rec = [0.65, 0.574, 0.55, 0.45, 0.35];
    let want = [
        ("composite.pre", oracle::weighted_sum(&oracle::W_COM, &WE_PRE), 0.8175),
        ("composite.post", oracle::weighted_sum(&oracle::W_COM, &post), 0.1923),
        ("composite.recovered", oracle::weighted_sum(&oracle::W_COM, &rec), 0.5086),
    ];
    for (key, from_oracle, printed_value) in want {
        close(from_oracle, printed_value, 1e-9, key)?;
        let chk = rep
            .reference_checks
            .iter()
            .find(|r| r.key == key)
            .ok_or(format!("{key} not checked"))?;
        let computed = chk.computed.ok_or(format!("{key} not computed"))?;
        close(computed, from_oracle, 1e-9, key)?;
        ensure(chk.mismatch, format!("{key} not flagged"))?;
        let d = chk.delta.unwrap_or(f64::INFINITY).abs();
        ensure(d < 0.06, format!("{key}: |Δ| = {d}"))?;
    }
    let mismatches = rep.mismatches().count();
    ensure(mismatches == 3, format!("{mismatches} mismatches in total"))?;
    Ok("0.821/0.242/0.499 printed vs 0.8175/0.1923/0.5086 computed".into())
}

fn c4_case_study_ledger() -> Outcome {
    let (text, _) = cli(&["reproduce", "case-study"])?;
    ensure(text.contains("2980.0") && text.contains("1120.0") && text.contains("62%"), "totals row missing")?;
    let rep = run("case-study")?;
    let table = [
        (420.0, 420.0),
        (280.0, 95.0),
        (850.0, 180.0),
        (120.0, 45.0),
        (850.0, 210.0),
        (280.0, 110.0),
        (180.0, 60.0),
    ];
    let savings = [None, Some(66), Some(79), Some(63), Some(75), Some(61), Some(67)];
    ensure(rep.ledger.rows.len() == table.len(), format!("{} ledger rows", rep.ledger.rows.len()))?;
    for ((row, (naive, portable)), saving) in rep.ledger.rows.iter().zip(table).zip(savings) {
        ensure(row.naive_mj == naive, format!("{}: naive {}", row.label, row.naive_mj))?;
        ensure(row.portable_mj == Some(portable), format!("{}: portable {:?}", row.label, row.portable_mj))?;
        let got = row.saving_pct().map(zt_ratsim::output::whole_percent);
        ensure(got == saving, format!("{}: saving {got:?}", row.label))?;
    }
    close(rep.ledger.naive_total_mj, 2980.0, 0.0, "naive total")?;
    close(rep.ledger.portable_total_mj.unwrap_or(0.0), 1120.0, 0.0, "portable total")?;
    let s = rep.ledger.saving_pct().unwrap_or(0.0);
    close(s, 62.4, 0.5, "saving")?;
    Ok(format!("2980 / 1120 mJ, saving {s:.2}%"))
}

fn c5_portability_ladder() -> Outcome {
    let configs = [
        ("portability-ladder-none", vec![], 850.0, 6200.0),
        ("portability-ladder-id", vec![TrustComponent::Identity], 320.0, 3800.0),
        (
            "portability-ladder-full",
            vec![TrustComponent::Identity, TrustComponent::Device, TrustComponent::Context],
            180.0,
            2100.0,
        ),
    ];
    let mut costs = Vec::new();
    let mut lats = Vec::new();
    for (name, comps, want_cost, want_lat) in configs {
        let sc = builtin(name).map_err(|e| e.to_string())?;
        let cfg = sc.portability.as_ref().ok_or("no portability section")?;
        let accepted: BTreeSet<TrustComponent> = comps.into_iter().collect();
        let lora = sc.profile("LoRaWAN").map_err(|e| e.to_string())?;
        let direct = portable_recovery_cost(
            "5G",
            lora,
            TransitionKind::Planned,
            &sc.matrices,
            &accepted,
            &cfg.verify_cost_mj,
        )
        .map_err(|e| e.to_string())?;
        let sigma = sc.matrices.vector("5G", "LoRaWAN").map_err(|e| e.to_string())?;
        let mask: [bool; 5] = std::array::from_fn(|i| accepted.contains(&TrustComponent::ALL[i]));
        let from_oracle = oracle::cost(1.0, &sigma.0, &lora.cost_mj.0, &cfg.verify_cost_mj.0, &mask);
        close(direct, want_cost, 1e-9, name)?;
        close(from_oracle, want_cost, 1e-9, name)?;
        let rep = mission::run(&sc).map_err(|e| e.to_string())?.1;
        let c = rep.crossings.first().ok_or("no crossing")?;
        close(c.portable_cost_mj.unwrap_or(f64::NAN), want_cost, 1e-9, name)?;
        close(c.portable_latency_ms.unwrap_or(f64::NAN), want_lat, 1e-9, name)?;
        costs.push(direct);
        lats.push(c.portable_latency_ms.unwrap_or(f64::NAN));
    }
    let saving = 100.0 * (1.0 - costs[2] / costs[0]);
    let lat_saving = 100.0 * (1.0 - lats[2] / lats[0]);
    close(saving, 79.0, 1.0, "energy saving")?;
    close(lat_saving, 66.0, 1.0, "latency saving")?;
    Ok(format!(
        "{:.0} / {:.0} / {:.0} mJ, saving {saving:.1}%, latency saving {lat_saving:.1}%",
        costs[0], costs[1], costs[2]
    ))
}

fn c6_verification_count() -> Outcome {
    let rep = run("case-study")?;
    ensure(rep.duration_min == 90.0, "case study is not 90 minutes")?;
    ensure(rep.verification.interval_s == 30.0, "interval is not 30 s")?;
    ensure(rep.verification.count == 180, format!("{} verifications", rep.verification.count))?;
    Ok("180 verification events".into())
}

fn c7_figure_2_exposure() -> Outcome {
    let from_oracle = oracle::minutes_below(oracle::FIGURE_2, 0.6);
    close(from_oracle, 54.0, 1e-9, "oracle exposure")?;
    let rep = run("figure-2")?;
    close(rep.exposure.minutes, 54.0, 0.1, "exposure")?;
    let noted = rep
        .reference_checks
        .iter()
        .any(|c| c.key == "exposure_min" && c.expected == "48" && c.mismatch);
    ensure(noted, "expected 48 min not reported as a discrepancy")?;
    Ok(format!("{:.2} min below threshold; expected 48 min flagged", rep.exposure.minutes))
}

fn c8_property_suites() -> Outcome {
    let start = Instant::now();
    for (name, suite) in props::SUITES {
        suite().map_err(|e| format!("{name}: {e}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} suites × {} cases in {:.1} s",
        props::SUITES.len(),
        props::CASES,
        elapsed.as_secs_f64()
    ))
}

fn c9_determinism() -> Outcome {
    for (name, _) in BUILTIN_SCENARIOS {
        let sc = builtin(name).map_err(|e| e.to_string())?;
        let a = timeline_csv(&mission::run(&sc).map_err(|e| e.to_string())?.0);
        let b = timeline_csv(&mission::run(&sc).map_err(|e| e.to_string())?.0);
        ensure(a == b, format!("{name}: timelines differ"))?;
    }
    let (a, _) = cli(&["simulate", "data/scenarios/parallel-c2.scn", "--seed", "9"])?;
    let (b, _) = cli(&["simulate", "data/scenarios/parallel-c2.scn", "--seed", "9"])?;
    ensure(a == b, "CLI reports differ")?;
    Ok(format!("{} built-in scenarios byte-identical", BUILTIN_SCENARIOS.len()))
}

fn c10_adversary_sweep() -> Outcome {
    let base = builtin("jam-two-rat").map_err(|e| e.to_string())?;
    let (lo, hi) = oracle::ADVERSARY_GAP_S;
    let mut shortest = f64::INFINITY;
    let mut longest: f64 = 0.0;
    for seed in 0..100u64 {
        let mut sc = base.clone();
        sc.seed = seed;
        let rep = mission::run(&sc).map_err(|e| e.to_string())?.1;
        let forced: Vec<_> = rep
            .crossings
            .iter()
            .filter(|c| c.kind == TransitionKind::AdversaryForced)
            .collect();
        ensure(forced.len() == 1, format!("seed {seed}: {} forced crossings", forced.len()))?;
        let c = forced[0];
        ensure(c.alpha == 2.0 && cost_multiplier(c.kind) == 2.0, format!("seed {seed}: α = {}", c.alpha))?;
        ensure(
            (lo..=hi).contains(&c.trust_gap_s),
            format!("seed {seed}: gap {} s", c.trust_gap_s),
        )?;
        shortest = shortest.min(c.trust_gap_s);
        longest = longest.max(c.trust_gap_s);
    }
    Ok(format!("100 seeds, gaps {shortest:.3} to {longest:.3} s"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("worked-example recovery cost", c1_worked_example_cost),
        ("worked-example survival application", c2_worked_example_vectors),
        ("reference discrepancy ledger", c3_discrepancy_ledger),
        ("case-study energy ledger", c4_case_study_ledger),
        ("portability ladder", c5_portability_ladder),
        ("continuous verification count", c6_verification_count),
        ("figure-2 exposure", c7_figure_2_exposure),
        ("property suites", c8_property_suites),
        ("determinism", c9_determinism),
        ("adversary semantics", c10_adversary_sweep),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
