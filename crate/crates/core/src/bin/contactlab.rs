use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use contactlab::scenario::{export_plotdata, filter_by_anchor, list_scenarios, run_scenario, Overrides, Report, SCENARIOS};
use contactlab::Error;

#[derive(Parser)]
#[command(name = "contactlab", version, about = "Run contact-geometry verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered scenarios.
    List {
        /// Only scenarios whose anchor contains this text.
        #[arg(long)]
        anchor: Option<String>,
    },
    /// Run one scenario.
    Run {
        name: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run every registered scenario.
    RunAll {
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunOpts {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// RK4 step size on the unit path interval.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long = "tol-scale")]
    tol_scale: Option<f64>,
    /// JSON override document; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Directory for plot-data CSV files.
    #[arg(long = "plot-dir")]
    plot_dir: Option<PathBuf>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EVAL: u8 = 3;

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::UnknownScenario(_) | Error::InvalidOverride { .. } => EXIT_USAGE,
        _ => EXIT_EVAL,
    }
}

fn overrides(opts: &RunOpts) -> Result<Overrides, Error> {
    let base = match &opts.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::InvalidOverride {
                key: format!("--config {}: {e}", p.display()),
                valid: "a readable JSON file".into(),
            })?;
            Overrides::from_json(&text)?
        }
        None => Overrides::default(),
    };
    let flags = Overrides {
        samples: opts.samples,
        seed: opts.seed,
        step: opts.step,
        tol_scale: opts.tol_scale,
    };
    let o = base.merged(&flags);
    o.validate()?;
    Ok(o)
}

fn render(reports: &[Report], format: Format) -> String {
    match format {
        Format::Json if reports.len() == 1 => reports[0].to_json() + "\n",
        Format::Json => serde_json::to_string_pretty(reports).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                let csv = r.checks_csv();
                // one header for the whole table
                out.push_str(if i == 0 { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
            }
            out
        }
    }
}

fn emit(reports: &[Report], opts: &RunOpts) -> Result<(), Error> {
    let text = render(reports, opts.format);
    match &opts.out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    if let Some(dir) = &opts.plot_dir {
        for r in reports {
            write_plots(r, dir)?;
        }
    }
    Ok(())
}

fn write_plots(r: &Report, dir: &Path) -> Result<(), Error> {
    let files = export_plotdata(r, dir)?;
    if files.is_empty() {
        eprintln!("warning: scenario `{}` has no plot data", r.scenario);
    }
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn summarize(r: &Report) {
    let failed: Vec<&str> = r.failed_checks().map(|c| c.id.as_str()).collect();
    let status = if r.ok { "ok" } else { "FAIL" };
    eprintln!(
        "{:<28} {:<5} {:>3} checks  {:>8.2}s{}",
        r.scenario,
        status,
        r.checks.len(),
        r.wall_time_s,
        if failed.is_empty() { String::new() } else { format!("  failed: {}", failed.join(", ")) }
    );
}

fn run(names: &[&str], opts: &RunOpts) -> Result<u8, Error> {
    let o = overrides(opts)?;
    let mut reports = Vec::new();
    let mut eval_error = false;
    for name in names {
        match run_scenario(name, &o) {
            Ok(r) => {
                summarize(&r);
                reports.push(r);
            }
            Err(e) if exit_code_for(&e) == EXIT_USAGE => return Err(e),
            Err(e) => {
                eprintln!("{name:<28} ERROR {e}");
                eval_error = true;
            }
        }
    }
    emit(&reports, opts)?;
    Ok(if eval_error {
        EXIT_EVAL
    } else if reports.iter().all(|r| r.ok) {
        0
    } else {
        EXIT_FAIL
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List { anchor } => {
            let rows = match anchor {
                Some(a) => filter_by_anchor(a),
                None => list_scenarios(),
            };
            for r in rows {
                println!("{:<28} {:<30} {:<13} {}", r.name, r.anchor, r.expectation.to_string(), r.description);
            }
            Ok(0)
        }
        Command::Run { name, opts } => run(&[name.as_str()], opts),
        Command::RunAll { opts } => {
            let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
            run(&names, opts)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
