use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spatial_brs::bigraph::Bigraph;
use spatial_brs::dot::to_dot;
use spatial_brs::dsl::{compile, Program};
use spatial_brs::matching::find_occurrences;
use spatial_brs::rewrite::run;
use spatial_brs::sim::{load_scenario, run_sim, verify_chain, SimError};
use spatial_brs::spatial::{all_names, ingest_scan, ScanDocument};

#[derive(Parser)]
#[command(name = "sbrs", about = "Bigraphical reactive systems for spatial coordination", disable_version_flag = true)]
struct Cli {
    /// Suppress diagnostics on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print the version banner on standard error and exit.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and elaborate a model; print rule and bigraph counts.
    Check { model: PathBuf },
    /// Count occurrences of a rule's redex in a named bigraph.
    Match {
        model: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        redex: String,
    },
    /// Execute the model's brs block and write a step trace.
    Run {
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        /// Trace file; standard output when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// List the spatial names of a building scan.
    Names { scan: PathBuf },
    /// Run a scenario bundle; write trace.jsonl and audit.jsonl.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a model, scan or canonical bigraph as Graphviz DOT.
    ExportDot {
        input: PathBuf,
        /// Bigraph to render from a model; defaults to the brs init.
        #[arg(long)]
        big: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    /// Bad invocation or unreadable input.
    Usage(String),
    /// Input read fine but is invalid or the operation failed.
    Domain(String),
}

type Outcome = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Domain(format!("cannot write {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Program, Failure> {
    compile(&read(path)?).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 { format!("1 {word}") } else { format!("{n} {word}s") }
}

fn check(model: &Path) -> Outcome {
    let p = load_model(model)?;
    Ok(format!("{}, {}\n", plural(p.rules.len(), "rule"), plural(p.bigraphs.len(), "bigraph")))
}

fn do_match(model: &Path, agent: &str, redex: &str) -> Outcome {
    let p = load_model(model)?;
    let rule = p.rule(redex).ok_or_else(|| Failure::Usage(format!("unknown rule `{redex}`")))?;
    let target = p.bigraph(agent).ok_or_else(|| Failure::Usage(format!("unknown bigraph `{agent}`")))?;
    let occs = find_occurrences(&target.bigraph, &rule.redex).map_err(|e| Failure::Domain(e.to_string()))?;
    let mut out = format!("{}\n", occs.len());
    for o in &occs {
        out += &o.summary();
        out.push('\n');
    }
    Ok(out)
}

fn do_run(model: &Path, max_steps: usize, trace: Option<&Path>) -> Outcome {
    let p = load_model(model)?;
    let spec = p.brs_spec().ok_or_else(|| Failure::Domain("model has no brs block".into()))?;
    let t = run(&spec, max_steps).map_err(|e| Failure::Domain(e.to_string()))?;
    let text = t.to_jsonl();
    match trace {
        Some(path) => {
            write(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn scan_bigraph(text: &str) -> Result<Bigraph, Failure> {
    let doc = ScanDocument::from_json(text).map_err(|e| Failure::Domain(e.to_string()))?;
    let sig = doc.signature().map_err(|e| Failure::Domain(e.to_string()))?;
    ingest_scan(&doc, &sig).map_err(|e| Failure::Domain(e.to_string()))
}

fn names(scan: &Path) -> Outcome {
    let b = scan_bigraph(&read(scan)?)?;
    Ok(all_names(&b).iter().map(|(n, _)| format!("{n}\n")).collect())
}

fn simulate(dir: &Path, out: &Path) -> Outcome {
    let scenario = load_scenario(dir).map_err(|e| match e {
        SimError::Io { .. } => Failure::Usage(e.to_string()),
        _ => Failure::Domain(e.to_string()),
    })?;
    let trace = run_sim(&scenario);
    std::fs::create_dir_all(out).map_err(|e| Failure::Domain(format!("cannot create {}: {e}", out.display())))?;
    write(&out.join("trace.jsonl"), &trace.to_jsonl())?;
    write(&out.join("audit.jsonl"), &trace.audit_jsonl())?;
    Ok(format!(
        "{{\"audit_ok\":{},\"final_hash\":\"{}\",\"messages\":{}}}\n",
        verify_chain(&trace.audit),
        trace.final_hash,
        trace.messages.len()
    ))
}

fn export_dot(input: &Path, big: Option<&str>, out: Option<&Path>) -> Outcome {
    let text = read(input)?;
    let b = if input.extension().is_some_and(|e| e == "json") {
        match scan_bigraph(&text) {
            Ok(b) => b,
            Err(_) => Bigraph::from_canonical_json(&text).map_err(|e| Failure::Domain(format!("{}: {e}", input.display())))?,
        }
    } else {
        let p = compile(&text).map_err(|e| Failure::Domain(format!("{}: {e}", input.display())))?;
        match big {
            Some(name) => p.bigraph(name).map(|n| n.bigraph.clone()).ok_or_else(|| Failure::Usage(format!("unknown bigraph `{name}`")))?,
            None => p
                .init_state()
                .or_else(|| p.bigraphs.first().map(|n| &n.bigraph))
                .cloned()
                .ok_or_else(|| Failure::Domain("model defines no bigraph".into()))?,
        }
    };
    let dot = to_dot(&b);
    match out {
        Some(path) => {
            write(path, &dot)?;
            Ok(String::new())
        }
        None => Ok(dot),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        eprintln!("sbrs {}", env!("CARGO_PKG_VERSION"));
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("sbrs: no subcommand given (try --help)");
        return ExitCode::from(2);
    };
    let result = match &command {
        Command::Check { model } => check(model),
        Command::Match { model, agent, redex } => do_match(model, agent, redex),
        Command::Run { model, max_steps, trace } => do_run(model, *max_steps, trace.as_deref()),
        Command::Names { scan } => names(scan),
        Command::Simulate { scenario, out } => simulate(scenario, out),
        Command::ExportDot { input, big, out } => export_dot(input, big.as_deref(), out.as_deref()),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            if !cli.quiet {
                eprintln!("sbrs: {msg}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            if !cli.quiet {
                eprintln!("sbrs: {msg}");
            }
            ExitCode::from(1)
        }
    }
}
