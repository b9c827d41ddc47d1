//! `lieq`: run property suites, export kernels, apply operators.
//!
//! Exit codes: 0 success, 1 a selected check failed, 2 usage, parse or
//! input error.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lieq_core::config::RunConfig;
use lieq_core::expmap::{default_cutoff_radius, make_cutoff};
use lieq_core::quantize::{assemble_kernel, DenseOperator};
use lieq_core::symbols::symbol_from_name;
use lieq_core::verify::{run_suite, write_reports};
use lieq_core::{make_model, GridFunction, C64};

#[derive(Debug, Parser)]
#[command(name = "lieq", version, about = "Quantization on model manifolds with a Lie structure at infinity")]
struct Cli {
    /// Run configuration (TOML, or JSON by extension). Defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `out_dir` from the config.
    #[arg(long = "out", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the selected checks; write report.csv, summary.json, data CSVs and SVG plots.
    Check {
        /// Output directory, same as the global `--out`.
        #[arg(long = "out", value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Assemble a kernel and write it as CSV plus a binary snapshot (`.liek`).
    Kernel {
        /// Registry name; defaults to the config's `symbol.name`.
        #[arg(long)]
        symbol: Option<String>,
        /// CSV path; defaults to `<out>/kernel_<symbol>.csv`.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Apply an operator to grid data read from CSV (`re[,im]` per row, optional header).
    Apply {
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Defaults to `<out>/apply_<symbol>.csv`.
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
}

enum Failure {
    /// Exit 2.
    Input(String),
    /// Exit 1: this many checks failed.
    Checks(usize),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(n)) => {
            eprintln!("lieq: {n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("lieq: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Command::Check { out_dir: Some(dir) } = &cli.command {
        cfg.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Check { .. } => check(&cfg, cli.quiet),
        Command::Kernel { symbol, out } => kernel(&cfg, symbol.as_deref(), out.as_deref(), cli.quiet),
        Command::Apply { symbol, input, out } => apply(&cfg, symbol.as_deref(), input, out.as_deref(), cli.quiet),
    }
}

fn check(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let mut reports = run_suite(cfg)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    for r in reports.iter_mut() {
        let file = format!("{}.svg", r.name);
        if plot::write_svg(r, &cfg.out_dir.join(&file))? {
            r.artifacts.push(PathBuf::from(file));
        }
    }
    write_reports(&cfg.out_dir, &mut reports)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    if !quiet {
        for r in &reports {
            println!(
                "{} {:<20} {} N={} measured={:.3e} tol={:.1e}",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.geometry,
                r.n,
                r.measured,
                r.tolerance
            );
        }
        println!("reports written to {}", cfg.out_dir.display());
    }
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

fn file_stem(symbol: &str) -> String {
    symbol.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn build_operator(cfg: &RunConfig, symbol: Option<&str>) -> Result<(DenseOperator, String), Failure> {
    let name = symbol.unwrap_or(&cfg.symbol.name).to_string();
    let sym = symbol_from_name(&name)?;
    let geom = make_model(cfg.geometry.kind, cfg.geometry.params())?;
    let r = cfg.cutoff.r.unwrap_or_else(|| default_cutoff_radius(&geom));
    let cutoff = make_cutoff(&geom, r, cfg.cutoff.profile)?;
    Ok((assemble_kernel(&geom, &sym, &cutoff)?, name))
}

fn kernel(cfg: &RunConfig, symbol: Option<&str>, out: Option<&Path>, quiet: bool) -> Result<(), Failure> {
    let (op, name) = build_operator(cfg, symbol)?;
    let csv = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.out_dir.join(format!("kernel_{}.csv", file_stem(&name))),
    };
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let bin = csv.with_extension("liek");
    op.write_csv(&csv)?;
    op.write_binary(&bin)?;
    if !quiet {
        println!("{} N={} {}", cfg.geometry.kind, op.n(), op.provenance());
        println!("wrote {} and {}", csv.display(), bin.display());
    }
    Ok(())
}

/// Reads `re[,im]` rows; a first row that does not parse is taken as a header.
fn read_values(path: &Path) -> Result<Vec<C64>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match (parsed, record.len()) {
            (Ok(v), 1) => values.push(C64::new(v[0], 0.0)),
            (Ok(v), 2) => values.push(C64::new(v[0], v[1])),
            (Err(_), _) if row == 0 => continue,
            _ => return Err(Failure::Input(format!("{}: bad row {}", path.display(), row + 1))),
        }
    }
    if values.is_empty() {
        return Err(Failure::Input(format!("{}: no data", path.display())));
    }
    Ok(values)
}

fn apply(cfg: &RunConfig, symbol: Option<&str>, input: &Path, out: Option<&Path>, quiet: bool) -> Result<(), Failure> {
    let values = read_values(input)?;
    let (op, name) = build_operator(cfg, symbol)?;
    let u = GridFunction::new(op.geometry().clone(), values)?;
    let pu = op.apply(&u)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.out_dir.join(format!("apply_{}.csv", file_stem(&name))),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record(["re", "im"])?;
    for v in pu.values() {
        writer.write_record([v.re.to_string(), v.im.to_string()])?;
    }
    writer.flush()?;
    if !quiet {
        println!("{} N={} {}", cfg.geometry.kind, op.n(), op.provenance());
        println!("wrote {}", path.display());
    }
    Ok(())
}
