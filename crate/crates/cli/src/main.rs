//! `magnonlab` command line: validate, run and re-analyse experiments.

mod artifact;
mod config;
mod pipeline;
mod quantity;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use magnonlab::SweepDataset;

use artifact::{manifest_hash, manifest_text, write_file_atomic, ArtifactWriter, LoadedArtifact, MANIFEST};
use config::ExperimentConfig;
use pipeline::{AnalysisOptions, Datasets};
use quantity::Time;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Bundled configs, selectable by name.
const BUNDLED: &[(&str, &str)] = &[
    ("paper-fig1ef", include_str!("../configs/paper-fig1ef.toml")),
    ("paper-fig2", include_str!("../configs/paper-fig2.toml")),
    ("paper-fig2e", include_str!("../configs/paper-fig2e.toml")),
    ("paper-fig3", include_str!("../configs/paper-fig3.toml")),
    ("paper-fig4", include_str!("../configs/paper-fig4.toml")),
    ("ideal-fig2e", include_str!("../configs/ideal-fig2e.toml")),
    ("ideal-fig3", include_str!("../configs/ideal-fig3.toml")),
];

#[derive(Parser)]
#[command(name = "magnonlab", version, about = "Qubit-based magnon sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config (file path or bundled name) without running it.
    Validate { config: String },
    /// Run an experiment and write its artifact directory.
    Run {
        config: String,
        /// Artifact directory (default: the config's `output` or `runs/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace an existing artifact directory.
        #[arg(long)]
        force: bool,
    },
    /// Re-analyse a stored artifact, or a single imported dataset.
    Report {
        /// Artifact directory.
        #[arg(required_unless_present = "import")]
        dir: Option<PathBuf>,
        /// Time budget for lifetime subsampling, e.g. "1 s".
        #[arg(long)]
        subsample_budget: Option<String>,
        /// Number of subsample draws.
        #[arg(long)]
        draws: Option<usize>,
        /// Dataset CSV to analyse on its own.
        #[arg(long, conflicts_with = "dir", requires = "analysis")]
        import: Option<PathBuf>,
        /// Analysis for --import.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(pipeline::IMPORT_ANALYSES))]
        analysis: Option<String>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled configs.
    ListConfigs,
}

fn load_config(arg: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(arg);
    let text = if path.exists() {
        fs::read_to_string(path).with_context(|| format!("reading {arg}"))?
    } else if let Some((_, t)) = BUNDLED.iter().find(|(n, _)| *n == arg) {
        t.to_string()
    } else {
        return Err(CliError::Validation(format!("`{arg}` is neither a file nor a bundled config")));
    };
    config::parse(&text).map_err(|e| CliError::Validation(e.to_string()))
}

fn validate(arg: &str) -> Result<(), CliError> {
    let cfg = load_config(arg)?;
    let plan = cfg.plan().map_err(|e| CliError::Validation(e.to_string()))?;
    println!("ok: {} ({:?})", cfg.experiment.name, plan.protocol);
    println!("manifest_hash = {}", manifest_hash(&cfg));
    println!("datasets = {}", pipeline::dataset_names(&plan).join(", "));
    Ok(())
}

fn run(arg: &str, out: Option<PathBuf>, seed: Option<u64>, force: bool) -> Result<(), CliError> {
    let mut cfg = load_config(arg)?;
    if let Some(s) = seed {
        cfg.experiment.seed = s;
    }
    let plan = cfg.plan().map_err(|e| CliError::Validation(e.to_string()))?;
    let target = out.unwrap_or_else(|| PathBuf::from(cfg.output_dir()));
    if target.exists() && !force {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} already exists (use --force to replace it)",
            target.display()
        )));
    }
    let hash = manifest_hash(&cfg);
    let datasets = pipeline::simulate(&plan)?;
    let report = pipeline::analyze(&plan, &datasets, &AnalysisOptions::default())?;

    let w = ArtifactWriter::create(&target)?;
    w.write(MANIFEST, &manifest_text(&cfg, &hash))?;
    for (name, ds) in &datasets {
        w.write(&format!("datasets/{name}.csv"), &ds.to_csv(&hash))?;
        if let Some(shots) = ds.shots_to_csv(&hash) {
            w.write(&format!("datasets/{name}.shots.csv"), &shots)?;
        }
    }
    for t in &report.tables {
        w.write(&format!("tables/{}.csv", t.name), &t.to_csv(&hash))?;
    }
    let mut rendered = report.clone();
    rendered.entries.insert(0, ("manifest_hash".into(), hash.clone()));
    let text = rendered.render();
    w.write("report.txt", &text)?;
    let dir = w.commit(force)?;
    print!("{text}");
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn report(
    dir: Option<PathBuf>,
    budget: Option<String>,
    draws: Option<usize>,
    import: Option<PathBuf>,
    analysis: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = if let Some(file) = import {
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let (ds, hash) =
            SweepDataset::from_csv(&text).map_err(|e| CliError::Validation(format!("{}: {e}", file.display())))?;
        let mut r = pipeline::analyze_import(analysis.as_deref().expect("clap requires it"), &ds)?;
        r.entries.insert(0, ("source_hash".into(), hash));
        r
    } else {
        let dir = dir.expect("clap requires it");
        let art = LoadedArtifact::open(&dir)?;
        let plan = art.config.plan().map_err(|e| CliError::Validation(e.to_string()))?;
        let mut ds = Datasets::new();
        for name in pipeline::dataset_names(&plan) {
            let d = art.dataset(&name)?;
            ds.insert(name, d);
        }
        let mut opts = AnalysisOptions::default();
        if budget.is_some() || draws.is_some() {
            let l = plan.lifetime.as_ref().ok_or_else(|| {
                CliError::Validation("--subsample-budget and --draws apply to lifetime runs only".into())
            })?;
            let b = match &budget {
                Some(text) => Time::parse(text).map_err(|e| CliError::Validation(format!("--subsample-budget: {e}")))?.si(),
                None => l.budget,
            };
            let n = draws.unwrap_or(if l.draws > 0 { l.draws } else { 20 });
            opts.subsample = Some((b, n));
        }
        let mut r = pipeline::analyze(&plan, &ds, &opts)?;
        r.entries.insert(0, ("manifest_hash".into(), art.hash.clone()));
        r
    };
    r.entries.insert(0, ("version".into(), artifact::VERSION.into()));
    let text = r.render();
    if let Some(path) = out {
        write_file_atomic(&path, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn list_configs() -> Result<(), CliError> {
    for (name, text) in BUNDLED {
        let cfg = config::parse(text).map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
        println!("{name:<14} {:?}", cfg.experiment.protocol);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { config, out, seed, force } => run(&config, out, seed, force),
        Command::Report { dir, subsample_budget, draws, import, analysis, out } => {
            report(dir, subsample_budget, draws, import, analysis, out)
        }
        Command::ListConfigs => list_configs(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
