//! Command-line front end: experiment configs, commands and report rendering.

pub mod config;
pub mod render;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use emoxfer::audio::{load_samples, synth::synth_generate, Manifest};
use emoxfer::experiments::{Approach, Corpus, Runner, Scenario};
use emoxfer::gradcheck::suite;
use emoxfer::network::{evaluate, load_weights, Example};
use emoxfer::{Error, Result};

use crate::config::LoadedConfig;
use crate::render::{fmt3, render, Style};
use crate::report::{Provenance, ReportBody, ReportDocument};

/// Environment variable consulted when `--out` is absent.
pub const OUT_ENV: &str = "EMOXFER_OUT";

#[derive(Debug, Parser)]
#[command(name = "emoxfer", version, about = "Cross-domain emotion transfer experiments")]
pub struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for cell-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output root; results go to `<out>/<experiment name>/`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Style::Markdown)]
    pub style: Style,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic corpus described by the config.
    Synth,
    /// Train-on-target baselines for every target.
    Tt,
    /// One scenario/approach cell for every target.
    Transfer {
        #[arg(long)]
        scenario: Scenario,
        #[arg(long)]
        approach: Approach,
    },
    /// All configured scenario/approach cells plus baselines.
    Matrix,
    /// Leave-one-source-out ablation.
    Ablate,
    /// Finite-difference gradient checks of every layer and the network.
    Gradcheck,
    /// UAR of a weight file on a manifest.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render a report JSON as tables.
    Render { report: PathBuf },
}

/// Exit status for an error: 2 for bad input, 1 for failures while running.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::UnknownLayer(_) => 2,
        _ => 1,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Command::Render { report } = &cli.command {
        let doc = ReportDocument::load(report)?;
        print!("{}", render(&doc, cli.style));
        return Ok(0);
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut lc = LoadedConfig::load(path)?;
    if let Some(seed) = cli.seed {
        lc.config.train.seed = seed;
    }
    match &cli.command {
        Command::Synth => cmd_synth(&lc, cli.out.as_deref()),
        Command::Gradcheck => cmd_gradcheck(&lc),
        Command::Eval { weights, manifest } => cmd_eval(&lc, weights, manifest),
        Command::Render { .. } => unreachable!("handled above"),
        cmd => cmd_experiment(&lc, cli, cmd),
    }
}

fn cmd_synth(lc: &LoadedConfig, out: Option<&Path>) -> Result<i32> {
    let specs = lc.synth_specs()?;
    for s in &specs {
        s.validate()?;
    }
    let dir = lc.synth_dir(out)?;
    for m in synth_generate(&specs, &dir)? {
        println!("{}", m.display());
    }
    Ok(0)
}

fn cmd_gradcheck(lc: &LoadedConfig) -> Result<i32> {
    let network = &lc.config.network;
    network.validate()?;
    let seeds: Vec<u64> = (0..5).map(|k| lc.config.train.seed.wrapping_add(k)).collect();
    let mut outcomes = suite::layers(&seeds)?;
    for (i, cfg) in suite::network_shapes(network).iter().enumerate() {
        for &seed in &seeds {
            let report = suite::network(cfg, seed, Some(40))?;
            outcomes.push(suite::CheckOutcome {
                label: format!("network shape {i} (input {}) seed {seed}", cfg.input_length),
                report,
            });
        }
    }
    let mut failed = 0;
    for o in &outcomes {
        let r = &o.report;
        let status = if r.passed() { "PASS" } else { "FAIL" };
        if !r.passed() {
            failed += 1;
        }
        println!(
            "{status} {}: max rel error {:.2e} over {} coordinates, {} skipped at kinks",
            o.label,
            r.max_rel_error(),
            r.checked(),
            r.skipped()
        );
    }
    println!("{} checks, {failed} failed", outcomes.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_eval(lc: &LoadedConfig, weights: &Path, manifest: &Path) -> Result<i32> {
    let network = &lc.config.network;
    network.validate()?;
    let pre = lc.preprocess();
    pre.validate()?;
    if !manifest.is_file() {
        return Err(Error::Config(format!("manifest not found: {}", manifest.display())));
    }
    let bytes = std::fs::read(weights)
        .map_err(|e| Error::Config(format!("cannot read weights {}: {e}", weights.display())))?;
    let model = load_weights(&bytes, network)?;
    let samples = load_samples(&Manifest::load(manifest)?, &pre)?;
    let examples: Vec<Example> = samples
        .iter()
        .map(|s| Example {
            input: &s.waveform,
            label: s.label.index(),
        })
        .collect();
    let uar = evaluate(&model, &examples)?.uar()?;
    println!("UAR {}", fmt3(uar));
    Ok(0)
}

fn output_root(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn cmd_experiment(lc: &LoadedConfig, cli: &Cli, cmd: &Command) -> Result<i32> {
    lc.validate_for_run(true)?;
    let manifests: Vec<PathBuf> = lc.manifests()?.into_values().collect();
    let corpus = Corpus::from_manifests(&manifests, &lc.preprocess())?;
    for t in &lc.config.experiment.targets {
        if !corpus.contains(t) {
            return Err(Error::Config(format!("target `{t}` has no samples in the manifests")));
        }
    }
    let dir = output_root(cli).join(&lc.config.experiment.name);
    let runner = Runner::new(lc.setup(), &corpus, Some(dir.clone()), cli.jobs)?;
    let provenance = Provenance::new(runner.config_hash(), &lc.file_sha256, lc.config.train.seed);
    let targets = &lc.config.experiment.targets;
    let (file, body) = match cmd {
        Command::Tt => {
            let records = targets.iter().map(|t| runner.run_tt(t)).collect::<Result<_>>()?;
            ("tt.json", ReportBody::Tt(records))
        }
        Command::Transfer { scenario, approach } => {
            let mut reports = Vec::new();
            for t in targets {
                let tt = runner.run_tt(t)?;
                let sources = runner.sources_for(t)?;
                let plan = runner.plan(*scenario, *approach, t, &sources);
                reports.push(runner.run_transfer(&plan, &tt)?);
            }
            ("transfer.json", ReportBody::Transfer(reports))
        }
        Command::Matrix => {
            let m = runner.matrix()?;
            let timings: std::collections::BTreeMap<String, f64> = runner
                .timings()
                .into_iter()
                .map(|(k, d)| (k, d.as_secs_f64()))
                .collect();
            let tpath = dir.join("timings.json");
            std::fs::create_dir_all(&dir).map_err(|e| Error::Experiment(format!("{}: {e}", dir.display())))?;
            std::fs::write(&tpath, serde_json::to_vec_pretty(&timings)?)
                .map_err(|e| Error::Experiment(format!("{}: {e}", tpath.display())))?;
            ("matrix.json", ReportBody::Matrix(m))
        }
        Command::Ablate => ("ablation.json", ReportBody::Ablation(runner.ablation()?)),
        _ => unreachable!("not an experiment command"),
    };
    let doc = ReportDocument { provenance, body };
    let path = dir.join(file);
    doc.write(&path)?;
    print!("{}", render(&doc, cli.style));
    println!("wrote {}", path.display());
    Ok(0)
}
