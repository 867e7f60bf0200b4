//! `ptfprg`: derive generator parameters, emit samples and run experiment suites.
//!
//! Exit codes: 0 success (all verdicts pass), 1 a verdict failed, 2 usage or
//! input error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, GeneratorSpec};
use ptfprg_core::generator::{default_seed_sweep, seed_table, SeedRow};
use ptfprg_core::harness::experiments::{run_suite, SuiteName, SuiteParams};
use ptfprg_core::harness::output::{
    generate_samples, json_sha256, render_csv, render_json, write_samples, SampleFormat, TOOL_NAME, TOOL_VERSION,
};
use ptfprg_core::harness::suite::{standard_suite, suite_hash};
use ptfprg_core::GeneratorConfig;

const THREADS_ENV: &str = "PTFPRG_THREADS";

#[derive(Parser)]
#[command(name = "ptfprg", version, about = "Pseudorandom generator for degree-2 Gaussian PTFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived configuration and a seed-length table.
    Params(ParamsArgs),
    /// Emit generator samples.
    Gen(GenArgs),
    /// Run an experiment suite and write CSV and JSON reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Dimensions for the seed table (default: 1, 4, 16, …, 2^20, plus n).
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
    /// Print one JSON document instead of text.
    #[arg(long)]
    json: bool,
}

/// Generator selection. With `--epsilon` the theorem parameters are derived;
/// otherwise empirical mode is used, defaulting to the desk configuration.
#[derive(Args)]
struct GeneratorArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    /// ROBP memory bits.
    #[arg(long = "M")]
    memory_bits: Option<u32>,
}

impl GeneratorArgs {
    fn spec(&self) -> anyhow::Result<GeneratorSpec> {
        let empirical = self.delta.is_some()
            || self.ell.is_some()
            || self.delta1.is_some()
            || self.delta2.is_some()
            || self.memory_bits.is_some();
        match self.epsilon {
            Some(_) if empirical => bail!("--epsilon cannot be combined with --delta/--ell/--delta1/--delta2/--M"),
            Some(epsilon) => Ok(GeneratorSpec::Theorem {
                n: self.n,
                epsilon,
                c: self.c.unwrap_or(1.0),
            }),
            None if self.c.is_some() => bail!("--C requires --epsilon"),
            None => Ok(GeneratorSpec::Empirical {
                n: self.n,
                delta: self.delta.unwrap_or(0.25),
                ell: self.ell.unwrap_or(64),
                delta1: self.delta1.unwrap_or(2f64.powi(-20)),
                delta2: self.delta2.unwrap_or(2f64.powi(-20)),
                memory_bits: self.memory_bits.unwrap_or(24),
            }),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, default_value = "1", value_parser = parse_count)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit master seed (hex) for a single sample.
    #[arg(long)]
    seed_hex: Option<String>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: SampleFormat,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replay a saved configuration; other flags are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    save_config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: SuiteName,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Trials per side (total restrictions for `decomposition`); accepts `1e6`.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `onestep` δ sweep.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    save_config: Option<PathBuf>,
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(format!("not a non-negative integer: {s:?}"))
    }
}

fn parse_format(s: &str) -> Result<SampleFormat, String> {
    s.parse().map_err(|e: ptfprg_core::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse().map_err(|e: ptfprg_core::Error| e.to_string())
}

enum Outcome {
    Pass,
    VerdictFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Params(a) => cmd_params(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Report(a) => cmd_report(a),
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| anyhow!("{THREADS_ENV} must be a non-negative integer, got {value:?}"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn cmd_params(args: ParamsArgs) -> anyhow::Result<Outcome> {
    let cfg = GeneratorConfig::derive(args.n, args.epsilon, args.c)?;
    let mut ns = args.sweep.unwrap_or_else(default_seed_sweep);
    ns.push(args.n);
    ns.sort_unstable();
    ns.dedup();
    let table = seed_table(&ns, args.epsilon, args.c)?;
    let mut out = std::io::stdout().lock();
    if args.json {
        let doc = serde_json::json!({
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "config": cfg,
            "seed_length_bits": cfg.seed_length(),
            "seed_table": table,
        });
        out.write_all(render_json(&doc).as_bytes())?;
    } else {
        let rows: Vec<String> = table.iter().map(SeedRow::csv_row).collect();
        writeln!(out, "# configuration")?;
        out.write_all(render_json(&cfg).as_bytes())?;
        writeln!(out, "# seed_length_bits {}", cfg.seed_length())?;
        writeln!(out, "# seed_length_bytes {}", cfg.seed_bytes())?;
        writeln!(out, "# seed table: exact bits vs ln(1/eps)^6 * log2(n) * log2(log2(n/eps))")?;
        out.write_all(render_csv(&json_sha256(&cfg), &[], SeedRow::CSV_HEADER, &rows).as_bytes())?;
    }
    Ok(Outcome::Pass)
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<Outcome> {
    let experiment = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::Gen {
            generator: args.generator.spec()?,
            count: args.count,
            seed: args.seed,
            seed_hex: args.seed_hex.clone(),
            format: args.format,
            output: args.out.clone(),
        },
    };
    experiment.expect_command("gen")?;
    if let Some(path) = &args.save_config {
        experiment.save(path)?;
    }
    let ExperimentConfig::Gen {
        generator,
        count,
        seed,
        seed_hex,
        format,
        output,
    } = experiment
    else {
        unreachable!("checked above");
    };
    let cfg = generator.build()?;
    let mut meta = vec![("mode", format!("{:?}", cfg.mode).to_lowercase())];
    let samples = match &seed_hex {
        Some(h) => {
            if count != 1 {
                bail!("--seed-hex produces exactly one sample; drop --count or set it to 1");
            }
            let bytes = decode_hex(h)?;
            meta.push(("seed_hex", h.clone()));
            vec![cfg.sample(&bytes)?]
        }
        None => {
            meta.push(("seed", seed.to_string()));
            generate_samples(&cfg, seed, count)?
        }
    };
    meta.push(("count", count.to_string()));
    meta.push(("seed_length_bits", cfg.seed_length().to_string()));
    let mut buf = Vec::new();
    write_samples(&mut buf, &cfg, &samples, format, &json_sha256(&cfg), &meta)?;
    match output {
        Some(path) => std::fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(Outcome::Pass)
}

fn decode_hex(h: &str) -> anyhow::Result<Vec<u8>> {
    let h = h.trim();
    hex::decode(h.strip_prefix("0x").unwrap_or(h)).context("--seed-hex must be an even number of hex digits")
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<Outcome> {
    let experiment = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut params = SuiteParams::new(args.trials, args.seed);
            if let Some(d) = &args.deltas {
                params.deltas = d.clone();
            }
            ExperimentConfig::Report {
                generator: args.generator.spec()?,
                suite: args.suite,
                params,
                out_dir: args.out_dir.clone(),
            }
        }
    };
    experiment.expect_command("report")?;
    if let Some(path) = &args.save_config {
        experiment.save(path)?;
    }
    let ExperimentConfig::Report {
        generator,
        suite,
        params,
        out_dir,
    } = experiment
    else {
        unreachable!("checked above");
    };
    let cfg = generator.build()?;
    let run = run_suite(suite, &cfg, &params)?;
    let hash = json_sha256(&(suite, &generator, &params));
    let mut meta = vec![
        ("suite", suite.as_str().to_string()),
        ("seed", params.seed.to_string()),
        ("trials", params.trials.to_string()),
    ];
    let cases_hash = matches!(suite, SuiteName::Standard | SuiteName::Onestep)
        .then(|| standard_suite(cfg.n).map(|c| suite_hash(&c)))
        .transpose()?;
    if let Some(h) = &cases_hash {
        meta.push(("suite_sha256", h.clone()));
    }

    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for table in &run.tables {
        let path = out_dir.join(format!("{}_{}.csv", suite.as_str(), table.name));
        write_file(&path, &render_csv(&hash, &meta, &table.columns, &table.rows))?;
        written.push(path);
    }
    let doc = serde_json::json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config_sha256": hash,
        "suite_sha256": cases_hash,
        "suite": suite,
        "params": params,
        "generator": cfg,
        "tables": run.tables.iter().map(|t| serde_json::json!({
            "name": t.name,
            "pass": t.pass,
            "rows": t.records,
        })).collect::<Vec<_>>(),
        "pass": run.pass,
    });
    let json_path = out_dir.join(format!("{}.json", suite.as_str()));
    write_file(&json_path, &render_json(&doc))?;
    written.push(json_path);

    let mut out = std::io::stdout().lock();
    for t in &run.tables {
        writeln!(out, "{} {}: {}", suite.as_str(), t.name, verdict(t.pass))?;
    }
    for p in &written {
        writeln!(out, "wrote {}", p.display())?;
    }
    writeln!(out, "{}: {}", suite.as_str(), verdict(run.pass))?;
    Ok(if run.pass { Outcome::Pass } else { Outcome::VerdictFailed })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
