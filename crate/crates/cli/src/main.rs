//! `refagent` command-line entry point.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use refagent_core::config::{EngineConfig, DEFAULT_JOURNAL};
use refagent_core::evaluation::{
    compare_quality, emit_analysis, emit_reports, load_miner_records, load_records, match_scenario1, match_scenario2,
    wilcoxon_signed_rank, RangeRule, ReportOptions,
};
use refagent_core::llm::{backend_from_config, BackendKind};
use refagent_core::orchestrator::{analyze_project, run_project, run_single_agent, RunOptions};

#[derive(Parser, Debug)]
#[command(
    name = "refagent",
    version,
    about = "LLM-driven refactoring engine for Java projects"
)]
struct Cli {
    /// Journal directory (default `<workspace>/.refagent/journal`).
    #[arg(long, global = true)]
    journal: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metrics, smells and QMOOD attributes of a project.
    Analyze {
        path: PathBuf,
        /// Output directory (default `<path>/.refagent/analysis`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Class dependency graph as JSON.
    Graph {
        path: PathBuf,
        #[arg(long)]
        target: Option<String>,
    },
    /// Refactor every class of a project, or one with `--class`.
    Refactor {
        path: PathBuf,
        #[arg(long)]
        class: Option<String>,
        /// Plan only; the workspace is not modified.
        #[arg(long)]
        dry_run: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Single-agent baseline: k independent candidates for one class.
    Baseline {
        path: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Effective configuration after file and flag overrides.
    Config {
        path: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    #[command(subcommand)]
    Evaluate(Evaluate),
    /// Report files for a finished journal.
    Report {
        journal: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// RefactoringMiner output to align against.
        #[arg(long)]
        theirs: Option<PathBuf>,
        #[arg(long, value_parser = parse_range_rule)]
        range_rule: Option<RangeRule>,
    },
}

#[derive(Subcommand, Debug)]
enum Evaluate {
    /// Precision, recall and F1 of engine records against miner records.
    Align {
        /// Journal directory or JSON record file.
        #[arg(long)]
        ours: PathBuf,
        /// RefactoringMiner JSON output.
        #[arg(long)]
        theirs: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        scenario: u8,
        #[arg(long, value_parser = parse_range_rule)]
        range_rule: Option<RangeRule>,
    },
    /// QMOOD and smell comparison of two project versions.
    Quality {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
    },
    /// Wilcoxon signed-rank test on a two-column CSV of paired values.
    Wilcoxon { pairs: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Scripted,
    Replay,
    Http,
}

/// Flags that override `refagent.toml`.
#[derive(Args, Debug, Default, Clone)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Playbook or cassette for the scripted and replay backends.
    #[arg(long)]
    playbook: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    token_budget: Option<usize>,
    #[arg(long)]
    max_compile_iters: Option<u32>,
    #[arg(long)]
    max_test_iters: Option<u32>,
    #[arg(long)]
    coefficients: Option<String>,
    #[arg(long)]
    no_context: bool,
    #[arg(long)]
    no_depgraph: bool,
    #[arg(long)]
    no_codesearch: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut EngineConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(b) = self.backend {
            cfg.backend.kind = match b {
                BackendArg::Scripted => BackendKind::Scripted,
                BackendArg::Replay => BackendKind::Replay,
                BackendArg::Http => BackendKind::HttpChat,
            };
        }
        if let Some(p) = &self.playbook {
            cfg.backend.playbook_path = Some(std::path::absolute(p).unwrap_or_else(|_| p.clone()));
        }
        if let Some(v) = &self.endpoint {
            cfg.backend.endpoint = v.clone();
        }
        if let Some(v) = &self.model {
            cfg.backend.model = v.clone();
        }
        if let Some(v) = self.temperature {
            cfg.backend.temperature = v;
        }
        if let Some(v) = self.token_budget {
            cfg.token_budget = v;
        }
        if let Some(v) = self.max_compile_iters {
            cfg.max_compile_iters = v;
        }
        if let Some(v) = self.max_test_iters {
            cfg.max_test_iters = v;
        }
        if let Some(v) = &self.coefficients {
            cfg.coefficient_table = v.clone();
        }
        cfg.ablation.context &= !self.no_context;
        cfg.ablation.depgraph &= !self.no_depgraph;
        cfg.ablation.codesearch &= !self.no_codesearch;
    }
}

fn parse_range_rule(s: &str) -> Result<RangeRule, String> {
    match s {
        "intersect" => Ok(RangeRule::Intersect),
        "exact" => Ok(RangeRule::Exact),
        _ => s
            .strip_prefix("jaccard:")
            .and_then(|t| t.parse::<f64>().ok())
            .filter(|t| (0.0..=1.0).contains(t))
            .map(RangeRule::Jaccard)
            .ok_or_else(|| format!("expected intersect, exact or jaccard:<0..1>, got `{s}`")),
    }
}

fn load_config(ws: &Path, overrides: &Overrides) -> Result<EngineConfig> {
    let mut cfg = EngineConfig::load(ws)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn journal_dir(cli_journal: &Option<PathBuf>, ws: &Path) -> PathBuf {
    cli_journal.clone().unwrap_or_else(|| ws.join(DEFAULT_JOURNAL))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { path, out, overrides } => {
            let cfg = load_config(&path, &overrides)?;
            let analysis = analyze_project(&path, &cfg, &cfg.coefficients()?)?;
            for e in &analysis.parse_errors {
                log::warn!("{e}");
            }
            let out = out.unwrap_or_else(|| path.join(".refagent/analysis"));
            for p in emit_analysis(&analysis, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Graph { path, target } => {
            let cfg = EngineConfig::load(&path)?;
            let analysis = analyze_project(&path, &cfg, &cfg.coefficients()?)?;
            print_json(&analysis.graph.to_json(target.as_deref())?)?;
        }
        Command::Refactor {
            path,
            class,
            dry_run,
            overrides,
        } => {
            let cfg = load_config(&path, &overrides)?;
            let backend = backend_from_config(&cfg.backend)?;
            let journal = journal_dir(&cli.journal, &path);
            let report = run_project(
                &path,
                &cfg,
                backend.as_ref(),
                &journal,
                class.as_deref(),
                RunOptions { dry_run },
            )?;
            for s in &report.sessions {
                println!(
                    "{}\t{}\tcompile={}\ttest={}\t{}",
                    s.fqn,
                    s.verdict.name(),
                    s.compile_attempts,
                    s.test_attempts,
                    s.reason
                );
            }
            let tallies: BTreeMap<&str, u32> = report.tallies.iter().map(|(k, v)| (k.name(), *v)).collect();
            println!("verdicts: {tallies:?}");
            println!("journal: {}", journal.display());
        }
        Command::Baseline {
            path,
            class,
            k,
            overrides,
        } => {
            let cfg = load_config(&path, &overrides)?;
            let backend = backend_from_config(&cfg.backend)?;
            let journal = journal_dir(&cli.journal, &path);
            let r = run_single_agent(&path, &class, &cfg, backend.as_ref(), k, &journal)?;
            println!(
                "{}\tpass@1={}\tpass@{}={}",
                r.fqn,
                r.verdicts.first().copied().unwrap_or(false),
                k,
                r.verdicts.iter().any(|v| *v)
            );
        }
        Command::Config { path, overrides } => {
            let cfg = load_config(&path, &overrides)?;
            print_json(&cfg)?;
        }
        Command::Evaluate(Evaluate::Align {
            ours,
            theirs,
            scenario,
            range_rule,
        }) => {
            let ours = load_records(&ours)?;
            let theirs = load_miner_records(&theirs)?;
            let report = match scenario {
                1 => match_scenario1(&ours, &theirs, range_rule.unwrap_or(RangeRule::Intersect))?,
                _ => match_scenario2(&ours, &theirs),
            };
            print_json(&report)?;
        }
        Command::Evaluate(Evaluate::Quality { before, after }) => {
            let cfg = EngineConfig::load(&before)?;
            print_json(&compare_quality(&before, &after, &cfg)?)?;
        }
        Command::Evaluate(Evaluate::Wilcoxon { pairs }) => {
            let text = std::fs::read_to_string(&pairs).with_context(|| pairs.display().to_string())?;
            let mut values = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                match (
                    cols.first().map(|c| c.parse::<f64>()),
                    cols.get(1).map(|c| c.parse::<f64>()),
                ) {
                    (Some(Ok(a)), Some(Ok(b))) => values.push((a, b)),
                    _ if i == 0 => continue,
                    _ => bail!("{}:{}: expected two numbers", pairs.display(), i + 1),
                }
            }
            print_json(&wilcoxon_signed_rank(&values)?)?;
        }
        Command::Report {
            journal,
            out,
            theirs,
            range_rule,
        } => {
            let theirs = theirs.map(|p| load_miner_records(&p)).transpose()?;
            for p in emit_reports(&journal, &out, &ReportOptions { theirs, range_rule })? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
