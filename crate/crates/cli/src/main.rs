use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oa_monitor::pipeline::{Pipeline, PipelineError, RunConfig};
use tracing::Level;

/// Open-access monitoring over OpenAlex.
#[derive(Debug, Parser)]
#[command(name = "oa-monitor", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// `key = value` config file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Roster CSV (id, given_names, surnames, area, declared_articles[, discipline]).
    #[arg(long, global = true, value_name = "CSV")]
    roster: Option<PathBuf>,
    /// Replay recorded API responses from DIR.
    #[arg(long, global = true, value_name = "DIR", conflicts_with = "live")]
    fixtures: Option<PathBuf>,
    /// Query the live API.
    #[arg(long, global = true)]
    live: bool,
    /// Response cache for live runs (default OUT/http_cache).
    #[arg(long, global = true, value_name = "DIR", requires = "live")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "EMAIL")]
    mailto: Option<String>,
    #[arg(long, global = true, value_name = "CC")]
    country: Option<String>,
    #[arg(long, global = true, value_name = "FRACTION")]
    match_percentage: Option<String>,
    #[arg(long, global = true, value_name = "FRACTION")]
    discrepancy_threshold: Option<String>,
    /// symmetric | under_only
    #[arg(long, global = true, value_name = "RULE")]
    discrepancy_rule: Option<String>,
    #[arg(long, global = true, value_name = "DATE")]
    law_date: Option<String>,
    #[arg(long, global = true, value_name = "DATE")]
    window_start: Option<String>,
    #[arg(long, global = true, value_name = "DATE")]
    cutoff: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// on | off
    #[arg(long, global = true, value_name = "SWITCH")]
    month_effects: Option<String>,
    /// Heteroskedasticity-robust standard errors.
    #[arg(long, global = true)]
    robust_se: bool,
    /// Accent lexicon CSV (folded,accented).
    #[arg(long, global = true, value_name = "CSV")]
    lexicon: Option<PathBuf>,
    /// Repository host list CSV (host,scope).
    #[arg(long, global = true, value_name = "CSV")]
    repositories: Option<PathBuf>,
    /// Comma-separated national domain suffixes.
    #[arg(long, global = true, value_name = "LIST")]
    national_domains: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    concurrency: Option<String>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Search author variants and fetch works into out/harvest.
    Harvest,
    /// Disambiguate and depurate into out/corpus.
    Build,
    /// Write coverage and access reports into out/reports.
    Report,
    /// Fit the segmented regression into out/impact.
    Impact,
    /// Run every stage.
    All,
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn resolve(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let overrides: Vec<(&str, Option<String>)> = vec![
        ("roster", cli.roster.as_deref().map(path_str)),
        ("fixtures", cli.fixtures.as_deref().map(path_str)),
        ("live", cli.live.then(|| "on".to_string())),
        ("cache_dir", cli.cache_dir.as_deref().map(path_str)),
        ("mailto", cli.mailto.clone()),
        ("country", cli.country.clone()),
        ("match_percentage", cli.match_percentage.clone()),
        ("discrepancy_threshold", cli.discrepancy_threshold.clone()),
        ("discrepancy_rule", cli.discrepancy_rule.clone()),
        ("law_date", cli.law_date.clone()),
        ("window_start", cli.window_start.clone()),
        ("cutoff", cli.cutoff.clone()),
        ("out", cli.out.as_deref().map(path_str)),
        ("month_effects", cli.month_effects.clone()),
        ("robust_se", cli.robust_se.then(|| "on".to_string())),
        ("lexicon", cli.lexicon.as_deref().map(path_str)),
        ("repo_allowlist", cli.repositories.as_deref().map(path_str)),
        ("national_domains", cli.national_domains.clone()),
        ("concurrency", cli.concurrency.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v, Path::new(""))?;
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = resolve(cli)?;
    cfg.validate()?;
    let p = Pipeline::new(cfg);
    match cli.command {
        Command::Harvest => p.harvest().map(drop),
        Command::Build => p.build().map(drop),
        Command::Report => p.report(),
        Command::Impact => p.impact().map(drop),
        Command::All => p.all(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => Level::WARN,
        (false, 0) => Level::INFO,
        (false, 1) => Level::DEBUG,
        _ => Level::TRACE,
    };
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).with_target(false).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {:#}", anyhow::Error::new(e));
            ExitCode::from(code as u8)
        }
    }
}
