use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use fovbench::commands::{self, PairingSelection, RunConfig};
use fovbench::factor_model::FactorClassTable;
use fovbench::metrics::MetricsReport;
use fovbench::probe::{Architecture, ProbeConfig, ProbeModel};
use fovbench::study::{Split, StudyKind};

#[derive(Parser)]
#[command(
    name = "fovbench",
    version,
    about = "Factor-of-variation benchmark generator and evaluator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render datasets for a study.
    Generate(RunArgs),
    /// Generate, train the probe, predict and score.
    RunStudy {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        /// ZSO report (report.json) to compute shortcut drops against.
        #[arg(long)]
        zso: Option<PathBuf>,
    },
    /// Score prediction files against manifests.
    Evaluate {
        #[arg(long = "manifest", required = true, num_args = 1..)]
        manifests: Vec<PathBuf>,
        #[arg(long = "predictions", required = true, num_args = 1..)]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        zso: Option<PathBuf>,
        /// Write the JSON report here (the text table goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the probe on one manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Probe settings as TOML (flags override).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write predictions of a trained probe.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default class table as TOML.
    DefaultTable,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    study: Option<StudyKind>,
    /// `target:correlate`, repeatable.
    #[arg(long = "pair")]
    pairs: Vec<String>,
    /// ZSO target factor, repeatable.
    #[arg(long = "factor")]
    factors: Vec<String>,
    /// `all` for every pairing (every factor for ZSO).
    #[arg(long)]
    pairings: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Divide the default split sizes by this.
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Custom class table (TOML).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Asset directory.
    #[arg(long)]
    assets: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ProbeArgs {
    /// `linear` or `mlp`.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    probe_seed: Option<u64>,
}

impl ProbeArgs {
    fn apply(&self, p: &mut ProbeConfig) -> anyhow::Result<()> {
        if let Some(a) = &self.arch {
            p.architecture = match a.as_str() {
                "linear" => Architecture::Linear,
                "mlp" => Architecture::Mlp {
                    hidden: self.hidden.unwrap_or(64),
                },
                other => bail!("unknown architecture `{other}` (linear or mlp)"),
            };
        } else if let (Some(h), Architecture::Mlp { .. }) = (self.hidden, p.architecture) {
            p.architecture = Architecture::Mlp { hidden: h };
        }
        p.learning_rate = self.lr.unwrap_or(p.learning_rate);
        p.batch_size = self.batch.unwrap_or(p.batch_size);
        p.epochs = self.epochs.unwrap_or(p.epochs);
        p.patience = self.patience.unwrap_or(p.patience);
        p.side = self.side.unwrap_or(p.side);
        p.seed = self.probe_seed.unwrap_or(p.seed);
        p.validate()?;
        Ok(())
    }
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        c.study = self.study.unwrap_or(c.study);
        let named: Vec<String> = self.pairs.iter().chain(&self.factors).cloned().collect();
        if let Some(all) = &self.pairings {
            if !named.is_empty() {
                bail!("--pairings cannot be combined with --pair/--factor");
            }
            c.pairings = PairingSelection::All(all.clone());
        } else if !named.is_empty() {
            c.pairings = PairingSelection::List(named);
        }
        c.seed = self.seed.unwrap_or(c.seed);
        c.scale = self.scale.unwrap_or(c.scale);
        c.samples = self.samples.unwrap_or(c.samples);
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if self.table.is_some() {
            c.table = self.table.clone();
        }
        if self.assets.is_some() {
            c.assets = self.assets.clone();
        }
        c.resolved_pairings()?;
        c.counts()?;
        Ok(c)
    }
}

fn echo(config: &RunConfig) {
    eprintln!("# config\n{}", config.echo());
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => {
            let config = args.resolve()?;
            echo(&config);
            let start = Instant::now();
            let table = config.load_table()?;
            let assets = config.load_assets().context("loading assets")?;
            let manifests = commands::generate(&config, &table, &assets)?;
            for m in &manifests {
                println!("{}", m.display());
            }
            eprintln!("{} datasets in {:.1}s", manifests.len(), start.elapsed().as_secs_f64());
        }
        Command::RunStudy { run, probe, zso } => {
            let mut config = run.resolve()?;
            probe.apply(&mut config.probe)?;
            echo(&config);
            let zso = zso.map(|p| commands::load_metrics(&p)).transpose()?;
            let report = commands::run_study(&config, zso.as_ref(), &mut |line| eprintln!("{line}"))?;
            print!("{}", report.metrics.to_text());
            eprintln!(
                "report: {}",
                config.out.join(config.study.to_string()).join("report.json").display()
            );
        }
        Command::Evaluate {
            manifests,
            predictions,
            zso,
            out,
        } => {
            let zso = zso.map(|p| commands::load_metrics(&p)).transpose()?;
            let report: MetricsReport = commands::evaluate(&manifests, &predictions, zso.as_ref())?;
            if let Some(out) = out {
                fs::write(&out, report.to_json()?).with_context(|| format!("writing {}", out.display()))?;
            }
            print!("{}", report.to_text());
        }
        Command::Train {
            manifest,
            out,
            probe,
            config,
        } => {
            let mut p = match config {
                Some(path) => toml::from_str(&fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => ProbeConfig::default(),
            };
            probe.apply(&mut p)?;
            eprintln!("# probe\n{}", toml::to_string(&p)?);
            let (_, model) = commands::train_probe(&manifest, &p)?;
            for s in &model.history {
                eprintln!(
                    "epoch {:>3}: train loss {:.4}  val loss {:.4}  val acc {:.3}",
                    s.epoch, s.train_loss, s.val_loss, s.val_accuracy
                );
            }
            eprintln!("kept epoch {}", model.best_epoch);
            model.save(&out)?;
        }
        Command::Predict {
            model,
            manifest,
            split,
            out,
        } => {
            let split: Split = split.parse()?;
            let model = ProbeModel::load(&model)?;
            let records = commands::predict(&model, &manifest, split, &out)?;
            eprintln!("{} predictions written to {}", records.len(), out.display());
        }
        Command::DefaultTable => print!("{}", FactorClassTable::default_table().to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
