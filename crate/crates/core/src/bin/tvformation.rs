use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};

use tvformation::config::{check_scenario, load_scenario, Diagnostic};
use tvformation::sim::{compare, run, ControllerKind, RunSummary, Scenario, Trace};
use tvformation::trace_csv::write_trace;

#[derive(Parser)]
#[command(
    name = "tvformation",
    version,
    about = "Time-varying leader-follower formation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and its rate profiles.
    Validate { config: PathBuf },
    /// Run one scenario and write its trace as CSV.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the controller of every follower.
        #[arg(long, value_enum)]
        controller: Option<Kind>,
    },
    /// Run the scenario under both controllers and report the differences.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bc,
    Fabc,
}

impl From<Kind> for ControllerKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Bc => ControllerKind::Backstepping,
            Kind::Fabc => ControllerKind::FuzzyAdaptive,
        }
    }
}

type CliResult = Result<(), String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Simulate {
            config,
            out,
            controller,
        } => simulate(&config, &out, controller.map(Into::into)),
        Command::Compare { config, out } => compare_cmd(&config, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::FAILURE
        }
    }
}

/// Load and check a scenario. Warnings go to stderr; any error fails.
fn load(path: &Path) -> Result<(Scenario, Vec<Diagnostic>), String> {
    let scenario = load_scenario(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let diags = check_scenario(&scenario);
    let mut failed = false;
    for d in &diags {
        eprintln!("{}: {d}", path.display());
        failed |= d.is_error();
    }
    if failed {
        return Err(String::new());
    }
    Ok((scenario, diags))
}

fn validate(path: &Path) -> CliResult {
    let (_, diags) = load(path)?;
    if diags.is_empty() {
        println!("{}: ok", path.display());
    } else {
        println!("{}: ok with {} warning(s)", path.display(), diags.len());
    }
    Ok(())
}

fn write_csv(trace: &Trace, path: &Path) -> CliResult {
    let file = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    write_trace(trace, file).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn simulate(path: &Path, out: &Path, kind: Option<ControllerKind>) -> CliResult {
    let (mut scenario, _) = load(path)?;
    if let Some(k) = kind {
        scenario = scenario.with_controller(k);
    }
    let trace = run(&scenario).map_err(|e| format!("simulation aborted: {e}"))?;
    write_csv(&trace, out)?;
    print!("{}", RunSummary::from_trace(&trace));
    println!("trace written to {}", out.display());
    Ok(())
}

fn compare_cmd(path: &Path, out: &Path) -> CliResult {
    let (scenario, _) = load(path)?;
    let bc = scenario.with_controller(ControllerKind::Backstepping);
    let fabc = scenario.with_controller(ControllerKind::FuzzyAdaptive);
    let (bc_trace, fabc_trace) = thread::scope(|s| {
        let a = s.spawn(|| run(&bc));
        let b = s.spawn(|| run(&fabc));
        (a.join().expect("bc run panicked"), b.join().expect("fabc run panicked"))
    });
    let bc_trace = bc_trace.map_err(|e| format!("bc simulation aborted: {e}"))?;
    let fabc_trace = fabc_trace.map_err(|e| format!("fabc simulation aborted: {e}"))?;
    let report = compare(&bc_trace, &fabc_trace).map_err(|e| e.to_string())?;

    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    write_csv(&bc_trace, &out.join("trace_bc.csv"))?;
    write_csv(&fabc_trace, &out.join("trace_fabc.csv"))?;
    let text = report.to_string();
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    for (name, body) in [("report.txt", text.as_str()), ("report.json", json.as_str())] {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
    }
    print!("{text}");
    println!("outputs written to {}", out.display());
    Ok(())
}
