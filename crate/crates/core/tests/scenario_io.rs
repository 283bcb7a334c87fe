use std::fs;
use std::path::Path;
use std::process::Command;

use zt_ratsim::mission::{self, Timeline};
use zt_ratsim::output::{report_json, report_text, timeline_csv, TIMELINE_HEADER};
use zt_ratsim::scenario::{builtin, emit_scenario, parse_scenario, BUILTIN_SCENARIOS};

const MARK: &str = "# !error";

/// Each malformed fixture marks its offending lines; the parser must report
/// errors on exactly those lines.
#[test]
fn malformed_corpus_reports_marked_lines() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/malformed");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let mut want: Vec<usize> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| l.contains(MARK))
            .map(|(i, _)| i + 1)
            .collect();
        want.sort();
        let diags = parse_scenario(text.as_bytes())
            .err()
            .unwrap_or_else(|| panic!("{} parsed without errors", path.display()));
        let mut got: Vec<usize> = diags.iter().filter(|d| d.is_error()).map(|d| d.line).collect();
        got.sort();
        got.dedup();
        assert_eq!(got, want, "{}: {:?}", path.display(), diags);
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn emit_parse_round_trip_is_fixed_point() {
    for (name, text) in BUILTIN_SCENARIOS {
        let first = parse_scenario(text.as_bytes()).unwrap().scenario;
        let emitted = emit_scenario(&first);
        let second = parse_scenario(emitted.as_bytes())
            .unwrap_or_else(|d| panic!("{name}: {d:?}"))
            .scenario;
        assert_eq!(first, second, "{name}");
        assert_eq!(emit_scenario(&second), emitted, "{name}");
    }
}

#[test]
fn worked_example_matches_golden_timeline() {
    let sc = builtin("worked-example").unwrap();
    let (tl, _) = mission::run(&sc).unwrap();
    let golden = include_str!("golden/worked-example.csv");
    assert_eq!(timeline_csv(&tl), golden);
    let tagged: Vec<&str> = golden
        .lines()
        .filter(|l| l.contains("crossing:") || l.contains("recovered:"))
        .collect();
    assert_eq!(tagged.len(), 2);
    let composite = |l: &str| l.split(',').nth(8).unwrap().parse::<f64>().unwrap();
    assert!(composite(tagged[0]) < 0.2);
    assert!(composite(tagged[1]) > composite(tagged[0]));
}

#[test]
fn empty_timeline_is_header_only() {
    assert_eq!(timeline_csv(&Timeline::default()), format!("{TIMELINE_HEADER}\n"));
}

#[test]
fn below_threshold_column_tracks_composite() {
    for (name, _) in BUILTIN_SCENARIOS {
        let sc = builtin(name).unwrap();
        let (tl, _) = mission::run(&sc).unwrap();
        let csv = timeline_csv(&tl);
        let lines: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(lines.len(), tl.rows.len());
        for (line, row) in lines.iter().zip(&tl.rows) {
            assert_eq!(row.below_threshold, row.composite < sc.t_min, "{name}: {line}");
            assert_eq!(line.ends_with(",1"), row.below_threshold, "{name}: {line}");
        }
    }
}

#[test]
fn json_report_has_every_field() {
    let sc = builtin("case-study").unwrap();
    let (_, rep) = mission::run(&sc).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report_json(&rep)).unwrap();
    for key in [
        "scenario",
        "seed",
        "duration_min",
        "t_min",
        "weights",
        "crossings",
        "ledger",
        "verification",
        "total_energy_mj",
        "exposure",
        "budget",
        "artefacts",
        "gaps",
        "flows",
        "warnings",
        "reference_checks",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["ledger"]["naive_total_mj"], 2980.0);
}

#[test]
fn report_text_has_ledger_columns() {
    let sc = builtin("case-study").unwrap();
    let text = report_text(&mission::run(&sc).unwrap().1);
    assert!(text.contains("naive"));
    assert!(text.contains("portable"));
    assert!(text.contains("saving"));
    let total = text.lines().find(|l| l.trim_start().starts_with("total ")).unwrap();
    assert!(total.contains("2980.0") && total.contains("1120.0") && total.contains("62%"));
}

#[test]
fn zero_crossing_totals_equal_initial_auth() {
    let text = "[mission]\nname = idle\nduration_min = 1\ninitial_rat = 5G\ninitial_auth_mJ = 420\n";
    let sc = parse_scenario(text.as_bytes()).unwrap().scenario;
    let (_, rep) = mission::run(&sc).unwrap();
    assert!(rep.crossings.is_empty());
    assert_eq!(rep.ledger.naive_total_mj, 420.0);
}

#[test]
fn empty_file_is_rejected() {
    let d = parse_scenario(b"").unwrap_err();
    assert!(d[0].message.contains("missing [mission] section"));
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_zt-ratsim"));
    c.current_dir(env!("CARGO_MANIFEST_DIR")).env_remove("ZT_RATSIM_DATA");
    c
}

#[test]
fn cli_exit_codes() {
    let ok = bin().args(["validate", "data/scenarios/case-study.scn"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = bin().args(["validate", "tests/malformed/weights-sum.scn"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains(":4:"), "{stderr}");

    let dir = tempfile::tempdir().unwrap();
    let tight = dir.path().join("tight.scn");
    fs::write(
        &tight,
        "[mission]\nname = tight\nduration_min = 1\ninitial_rat = 5G\ninitial_auth_mJ = 500\n\
         p_max_mW = 10\np_flight_mW = 9\np_payload_mW = 0\np_comms_mW = 0\n",
    )
    .unwrap();
    let loose = bin().args(["simulate"]).arg(&tight).output().unwrap();
    assert_eq!(loose.status.code(), Some(0));
    let strict = bin().args(["simulate", "--strict-budget"]).arg(&tight).output().unwrap();
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn cli_batch_writes_per_file_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["simulate", "data/scenarios/jam-two-rat.scn", "data/scenarios/parallel-c2.scn", "--timeline"])
        .arg(dir.path())
        .arg("--report")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    for f in ["jam-two-rat.csv", "parallel-c2.csv", "jam-two-rat.json", "parallel-c2.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn cli_matrix_dump_parses_as_survival_section() {
    let out = bin().args(["matrices", "--component", "id"]).output().unwrap();
    assert!(out.status.success());
    let dump = String::from_utf8(out.stdout).unwrap();
    assert!(dump.starts_with("[survival id]\n"));
    assert!(dump.contains("4G.LoRaWAN = 0\n"));
    let text = format!("[mission]\nname = m\nduration_min = 1\ninitial_rat = 5G\n\n{dump}");
    assert!(parse_scenario(text.as_bytes()).is_ok());
}

#[test]
fn data_dir_override_replaces_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let defaults = "[rat Only]\nfamily = cellular\n\n[survival id]\nOnly.Only = 1\n[survival dev]\nOnly.Only = 1\n\
                    [survival ctx]\nOnly.Only = 1\n[survival net]\nOnly.Only = 1\n[survival pol]\nOnly.Only = 1\n";
    fs::write(dir.path().join("defaults.scn"), defaults).unwrap();
    let out = bin().env("ZT_RATSIM_DATA", dir.path()).args(["matrices", "--component", "net"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "[survival net]\nOnly.Only = 1\n");
}
