use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use morrey_core::classifier::{classify_any, Tri, Verdict};
use morrey_core::grammar::parse_any;
use morrey_core::region;
use morrey_core::verify::{run_suite, Plan, Status, SuiteOptions, DEFAULT_BUDGET};
use serde::Serialize;

mod table;

#[derive(Parser)]
#[command(
    name = "morrey",
    version,
    about = "Compactness and nuclearity of Morrey-type embeddings"
)]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for sampled oracles.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest block size 2^{jd} a verification case may use.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Write the main output to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 3 when a verdict is not characterized.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide compactness and nuclearity of `source -> target`.
    Classify { source: String, target: String },
    /// Sweep two template parameters and emit the verdict grid as CSV.
    Region { source: String, target: String },
    /// Run a verification plan and write a JSON report.
    Verify {
        #[arg(default_value = "all", value_parser = parse_plan)]
        plan: Plan,
    },
    /// Print the special-target and same-tau tables.
    Table {
        #[arg(value_enum, default_value_t = table::Kind::All)]
        which: table::Kind,
    },
}

fn parse_plan(s: &str) -> Result<Plan, String> {
    s.parse()
}

enum Failure {
    Input(String),
    Violation(String),
    NotCharacterized,
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) | Failure::Io(_) => 2,
            Failure::NotCharacterized => 3,
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    source: String,
    target: String,
    #[serde(flatten)]
    verdict: &'a Verdict,
}

fn threshold_text(t: &Option<morrey_core::ExtScalar>) -> String {
    t.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn classify_text(source: &str, target: &str, v: &Verdict) -> String {
    format!(
        "source: {source}\ntarget: {target}\nlhs: {}\ncompact={} threshold={} boundary={}\nnuclear={} threshold={} boundary={}\ncitation: {}\n",
        v.lhs,
        v.compact.as_str(),
        threshold_text(&v.threshold_compact),
        v.boundary_compact,
        v.nuclear.as_str(),
        threshold_text(&v.threshold_nuclear),
        v.boundary_nuclear,
        v.citation,
    )
}

fn cmd_classify(cli: &Cli, source: &str, target: &str) -> Result<(), Failure> {
    let parse = |t: &str| parse_any(t).map_err(|e| Failure::Input(e.to_string()));
    let (a, b) = (parse(source)?, parse(target)?);
    let v = classify_any(&a, &b).map_err(|e| Failure::Input(e.to_string()))?;
    let (a, b) = (a.to_string(), b.to_string());
    let text = if cli.json {
        let out = ClassifyOutput {
            source: a,
            target: b,
            verdict: &v,
        };
        serde_json::to_string_pretty(&out).expect("verdict is plain data") + "\n"
    } else {
        classify_text(&a, &b, &v)
    };
    emit(&text, cli.out.as_deref())?;
    if cli.strict && (v.compact == Tri::NotCharacterized || v.nuclear == Tri::NotCharacterized) {
        return Err(Failure::NotCharacterized);
    }
    Ok(())
}

fn cmd_region(cli: &Cli, source: &str, target: &str) -> Result<(), Failure> {
    let rows = region::sweep(source, target).map_err(Failure::Input)?;
    emit(&region::to_csv(&rows), cli.out.as_deref())?;
    let open = rows.iter().any(|r| {
        r.verdict.compact == Tri::NotCharacterized || r.verdict.nuclear == Tri::NotCharacterized
    });
    if cli.strict && open {
        return Err(Failure::NotCharacterized);
    }
    Ok(())
}

fn cmd_verify(cli: &Cli, plan: Plan) -> Result<(), Failure> {
    let opts = SuiteOptions {
        seed: cli.seed,
        budget: cli.budget,
        ..SuiteOptions::default()
    };
    let report = run_suite(plan, &opts);
    let json = report.to_json() + "\n";
    if let Some(path) = &cli.out {
        emit(&json, Some(path))?;
    }
    if cli.json {
        print!("{json}");
    }
    let summary = format!("{plan}: {}", report.summary());
    if cli.json {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    if report.count(Status::Skipped) == report.cases.len() && !report.cases.is_empty() {
        eprintln!("warning: every case was skipped (budget {})", cli.budget);
    }
    if report.violated() {
        let ids: Vec<&str> = report
            .cases
            .iter()
            .filter(|c| c.status == Status::Violated)
            .map(|c| c.id.as_str())
            .collect();
        return Err(Failure::Violation(ids.join(", ")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Classify { source, target } => cmd_classify(cli, source, target),
        Command::Region { source, target } => cmd_region(cli, source, target),
        Command::Verify { plan } => cmd_verify(cli, *plan),
        Command::Table { which } => emit(&table::render(*which), cli.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Io(m) => eprintln!("error: {m}"),
                Failure::Violation(ids) => eprintln!("violated: {ids}"),
                Failure::NotCharacterized => eprintln!("not characterized"),
            }
            ExitCode::from(f.code())
        }
    }
}
