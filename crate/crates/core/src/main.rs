use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use zt_ratsim::mission::{self, BudgetVerdict, MissionReport, Timeline};
use zt_ratsim::output::{reference_text, report_json, report_text, timeline_csv};
use zt_ratsim::scenario::{self, emit_survival, parse_scenario_with, Defaults, MissionScenario};
use zt_ratsim::trust::TrustComponent;

#[derive(Parser)]
#[command(name = "zt-ratsim", version, about = "Zero Trust multi-RAT trust-state simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Simulate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the timeline CSV here (a directory when several files are given).
        #[arg(long)]
        timeline: Option<PathBuf>,
        /// Write the JSON report here (a directory when several files are given).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Compare computed values against the scenario's [reference] section.
        #[arg(long = "paper-check", alias = "reference-check")]
        reference_check: bool,
        /// Exit with status 2 when the energy budget is infeasible.
        #[arg(long)]
        strict_budget: bool,
    },
    /// Run a bundled reference scenario and print its report.
    Reproduce {
        which: Reproduction,
        #[arg(long)]
        timeline: Option<PathBuf>,
    },
    /// Print survival matrices.
    Matrices {
        #[arg(long)]
        component: Option<String>,
        /// Use the matrices resolved by this scenario instead of the defaults.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Parse a scenario and report diagnostics without running it.
    Validate { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Reproduction {
    WorkedExample,
    CaseStudy,
    #[value(name = "figure-2")]
    Figure2,
    PortabilityLadder,
}

impl Reproduction {
    fn scenarios(self) -> &'static [&'static str] {
        match self {
            Reproduction::WorkedExample => &["worked-example"],
            Reproduction::CaseStudy => &["case-study"],
            Reproduction::Figure2 => &["figure-2"],
            Reproduction::PortabilityLadder => &[
                "portability-ladder-none",
                "portability-ladder-id",
                "portability-ladder-full",
            ],
        }
    }
}

enum Failure {
    Diagnostics,
    Budget,
}

fn load(path: &Path, defaults: &Defaults) -> Result<MissionScenario, Failure> {
    let bytes = fs::read(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        Failure::Diagnostics
    })?;
    parse_reporting(&bytes, &path.display().to_string(), defaults)
}

fn parse_reporting(bytes: &[u8], name: &str, defaults: &Defaults) -> Result<MissionScenario, Failure> {
    match parse_scenario_with(bytes, defaults) {
        Ok(parsed) => {
            for d in &parsed.warnings {
                eprintln!("{name}:{d}");
            }
            Ok(parsed.scenario)
        }
        Err(diags) => {
            for d in &diags {
                eprintln!("{name}:{d}");
            }
            Err(Failure::Diagnostics)
        }
    }
}

fn execute(sc: &MissionScenario, name: &str) -> Result<(Timeline, MissionReport), Failure> {
    mission::run(sc).map_err(|e| {
        eprintln!("{name}: {e}");
        Failure::Diagnostics
    })
}

fn output_path(base: &Path, many: bool, stem: &str, ext: &str) -> PathBuf {
    if many {
        base.join(format!("{stem}.{ext}"))
    } else {
        base.to_path_buf()
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        let _ = fs::create_dir_all(parent);
    }
    fs::write(path, text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        Failure::Diagnostics
    })
}

fn simulate_one(
    path: &Path,
    defaults: &Defaults,
    many: bool,
    seed: Option<u64>,
    timeline: Option<&Path>,
    report: Option<&Path>,
) -> Result<(String, MissionReport), Failure> {
    let mut sc = load(path, defaults)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    let name = path.display().to_string();
    let (tl, rep) = execute(&sc, &name)?;
    let stem = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    if let Some(p) = timeline {
        write(&output_path(p, many, &stem, "csv"), &timeline_csv(&tl))?;
    }
    if let Some(p) = report {
        write(&output_path(p, many, &stem, "json"), &report_json(&rep))?;
    }
    Ok((report_text(&rep), rep))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let defaults = Defaults::load().map_err(|e| {
        eprintln!("defaults: {e}");
        Failure::Diagnostics
    })?;
    match cli.command {
        Command::Simulate {
            files,
            seed,
            timeline,
            report,
            reference_check,
            strict_budget,
        } => {
            let many = files.len() > 1;
            let results: Vec<_> = files
                .par_iter()
                .map(|f| simulate_one(f, &defaults, many, seed, timeline.as_deref(), report.as_deref()))
                .collect();
            let mut failure = None;
            for r in results {
                match r {
                    Ok((text, rep)) => {
                        print!("{text}");
                        if reference_check {
                            print!("{}", reference_text(&rep));
                        }
                        if strict_budget && matches!(rep.budget, BudgetVerdict::Infeasible { .. }) {
                            failure.get_or_insert(Failure::Budget);
                        }
                    }
                    Err(Failure::Diagnostics) => failure = Some(Failure::Diagnostics),
                    Err(Failure::Budget) => {
                        failure.get_or_insert(Failure::Budget);
                    }
                }
            }
            failure.map_or(Ok(()), Err)
        }
        Command::Reproduce { which, timeline } => {
            let names = which.scenarios();
            for name in names {
                let text = scenario::builtin_source(name).ok_or(Failure::Diagnostics)?;
                let sc = parse_reporting(text.as_bytes(), name, &defaults)?;
                let (tl, rep) = execute(&sc, name)?;
                print!("{}{}", report_text(&rep), reference_text(&rep));
                if let Some(p) = &timeline {
                    write(&output_path(p, names.len() > 1, name, "csv"), &timeline_csv(&tl))?;
                }
            }
            Ok(())
        }
        Command::Matrices { component, scenario } => {
            let matrices = match scenario {
                Some(p) => load(&p, &defaults)?.matrices,
                None => defaults.matrices.clone(),
            };
            let comps: Vec<TrustComponent> = match component.as_deref() {
                None => TrustComponent::ALL.to_vec(),
                Some(c) => match TrustComponent::from_short(c) {
                    Some(c) => vec![c],
                    None => {
                        eprintln!("unknown component `{c}` (expected id, dev, ctx, net or pol)");
                        return Err(Failure::Diagnostics);
                    }
                },
            };
            for (i, c) in comps.into_iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", emit_survival(&matrices, c));
            }
            Ok(())
        }
        Command::Validate { file } => {
            let sc = load(&file, &defaults)?;
            mission::validate(&sc).map_err(|e| {
                eprintln!("{}: {e}", file.display());
                Failure::Diagnostics
            })?;
            println!("{}: ok", file.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics) => ExitCode::from(1),
        Err(Failure::Budget) => ExitCode::from(2),
    }
}
