use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use wfs::dsl::parse_scenario;
use wfs::hardy::{hardy_search, schmidt_state};
use wfs::report::{
    render_contradictions, render_header, render_statements, render_text, HardyReport, RunReport,
};
use wfs::scenario::{builtin, BUILTIN_NAMES};
use wfs::{CollapsePolicy, Scenario, StateVector};

#[derive(Parser)]
#[command(
    name = "wfs",
    version,
    about = "Extended Wigner's-friend scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Built-in name (fr, epr, epr-dressed) or path to a .wfs file
    source: String,
    /// H, universal, none, or table=<file>
    #[arg(long, default_value = "H")]
    policy: String,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate branches and print views, statements and contradictions
    Run(RunArgs),
    /// Print the derived certainty statements only
    Derive(RunArgs),
    /// Exit 0 without contradictions, 2 with
    Check(RunArgs),
    /// Search for a Hardy witness in a two-qubit state
    Hardy {
        /// Built-in, .wfs file, or theta=<deg> for cos(theta)|uu> + sin(theta)|dd>
        source: String,
        #[arg(long, default_value_t = 1.0)]
        grid: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn load_scenario(source: &str) -> Result<Scenario> {
    if let Some(s) = builtin(source) {
        return Ok(s);
    }
    let path = Path::new(source);
    if !path.exists() && path.extension().is_none() {
        bail!(
            "unknown built-in `{source}` (expected one of {}, or a file)",
            BUILTIN_NAMES.join(", ")
        );
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read `{source}`"))?;
    parse_scenario(&text).map_err(|d| anyhow!("{source}:{d}"))
}

fn load_policy(arg: &str) -> Result<CollapsePolicy> {
    Ok(match arg {
        "H" | "h" => CollapsePolicy::PolicyH,
        "universal" => CollapsePolicy::UniversalCollapse,
        "none" => CollapsePolicy::NoCollapse,
        other => match other.strip_prefix("table=") {
            Some(file) => {
                let text = std::fs::read_to_string(file)
                    .with_context(|| format!("cannot read policy table `{file}`"))?;
                CollapsePolicy::parse_table(&text)?
            }
            None => bail!("unknown policy `{other}` (expected H, universal, none or table=<file>)"),
        },
    })
}

fn hardy_state(source: &str) -> Result<StateVector> {
    if let Some(deg) = source.strip_prefix("theta=") {
        let deg: f64 = deg.parse().with_context(|| format!("bad angle `{deg}`"))?;
        return Ok(schmidt_state(deg.to_radians()));
    }
    Ok(load_scenario(source)?.unitary_state()?)
}

fn json_string(value: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn execute(cli: Cli) -> Result<(String, u8)> {
    match cli.command {
        Command::Hardy {
            source,
            grid,
            format,
        } => {
            let result = hardy_search(&hardy_state(&source)?, grid)?;
            let report = HardyReport::new(&source, grid, &result);
            let out = match format {
                Format::Text => report.render_text(),
                Format::Json => json_string(serde_json::to_value(&report)?)?,
            };
            Ok((out, 0))
        }
        Command::Run(args) => report_command("run", args),
        Command::Derive(args) => report_command("derive", args),
        Command::Check(args) => report_command("check", args),
    }
}

fn report_command(kind: &str, args: RunArgs) -> Result<(String, u8)> {
    let scenario = load_scenario(&args.source)?;
    let policy = load_policy(&args.policy)?;
    let report = RunReport::build(&args.source, &scenario, &policy)?;
    let out = match (kind, args.format) {
        ("run", Format::Text) => render_text(&report),
        ("run", Format::Json) => json_string(serde_json::to_value(&report)?)?,
        ("derive", Format::Text) => render_header(&report) + &render_statements(&report),
        ("derive", Format::Json) => json_string(json!({
            "scenario": report.scenario,
            "policy": report.policy,
            "statements": report.statements,
        }))?,
        (_, Format::Text) => render_header(&report) + &render_contradictions(&report),
        (_, Format::Json) => json_string(json!({
            "scenario": report.scenario,
            "policy": report.policy,
            "contradictions": report.contradictions,
        }))?,
    };
    let code = if kind == "check" && report.has_contradictions() {
        2
    } else {
        0
    };
    Ok((out, code))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
