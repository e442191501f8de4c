use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moyal_cli::report::SuiteReport;
use moyal_cli::{bundled, run_scenario, Registry, RunOptions, BUNDLED, VERSION};

#[derive(Parser)]
#[command(name = "moyal", version = VERSION, about = "Phase-space quantum mechanics workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        /// Output directory [default: moyal-out/<scenario name>]
        #[arg(long, env = "MOYAL_OUT")]
        out: Option<PathBuf>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_plots: bool,
        /// Multiply every numerical tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Run a named check suite and print a JSON report.
    Check {
        suite: String,
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// List bundled scenarios, analyses, suites and velocity fields.
    ListScenarios,
    Version,
}

fn code(c: u8) -> ExitCode {
    ExitCode::from(c)
}

fn valid_scale(s: f64) -> Result<(), String> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(format!("--tolerance-scale must be positive, got {s}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let registry = Registry::builtin();
    match cli.command {
        Command::Version => {
            println!("moyal {VERSION}");
            code(0)
        }
        Command::ListScenarios => {
            println!("scenarios:");
            for (name, text) in BUNDLED {
                let desc = moyal_cli::scenario::Scenario::parse(text).map(|s| s.description).unwrap_or_default();
                println!("  {name:<18} {desc}");
            }
            println!("analyses:");
            for name in registry.analysis_names() {
                println!("  {name:<18} {}", registry.analysis(name).map(|a| a.summary()).unwrap_or(""));
            }
            println!("suites:");
            for s in registry.suites() {
                println!("  {:<18} {}", s.name(), s.summary());
            }
            println!("fields: {}", registry.field_names().join(", "));
            code(0)
        }
        Command::Check { suite, tolerance_scale } => {
            if let Err(e) = valid_scale(tolerance_scale) {
                eprintln!("{e}");
                return code(2);
            }
            let Some(s) = registry.suite(&suite) else {
                eprintln!("unknown suite `{suite}`; known: {}", registry.suite_names().join(", "));
                return code(2);
            };
            match s.run(tolerance_scale) {
                Ok(items) => {
                    for i in &items {
                        eprintln!("{}", i.line());
                    }
                    let report = SuiteReport::new(&suite, tolerance_scale, items);
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    code(if report.passed { 0 } else { 1 })
                }
                Err(e) => {
                    eprintln!("suite {suite}: {e}");
                    code(3)
                }
            }
        }
        Command::Run {
            scenario,
            out,
            seed,
            no_plots,
            tolerance_scale,
        } => {
            if let Err(e) = valid_scale(tolerance_scale) {
                eprintln!("{e}");
                return code(2);
            }
            let text = match std::fs::read_to_string(&scenario) {
                Ok(t) => t,
                Err(e) => match bundled(&scenario) {
                    Some(t) => t.to_string(),
                    None => {
                        eprintln!("cannot read `{scenario}` ({e}) and no bundled scenario has that name");
                        return code(2);
                    }
                },
            };
            let out = out.unwrap_or_else(|| {
                let name = moyal_cli::scenario::Scenario::parse(&text).map(|s| s.name).unwrap_or_else(|_| "scenario".into());
                PathBuf::from("moyal-out").join(name)
            });
            let opts = RunOptions {
                out: out.clone(),
                seed,
                plots: !no_plots,
                tolerance_scale,
            };
            match run_scenario(&text, &registry, &opts) {
                Ok(summary) => {
                    for a in &summary.analyses {
                        println!("[{}] {}", a.index, a.kind);
                        for c in &a.outcome.checks {
                            println!("  {}", c.line());
                        }
                    }
                    println!("{} -> {}", if summary.passed { "PASS" } else { "FAIL" }, out.display());
                    code(if summary.passed { 0 } else { 1 })
                }
                Err(e) => {
                    eprintln!("{e}");
                    code(e.exit_code() as u8)
                }
            }
        }
    }
}
