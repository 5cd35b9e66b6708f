use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use robust_mean::harness::{
    read_csv, run_experiment, scenarios, sweep, verify_bounds, AlgorithmKind, BoundReport,
    ExperimentConfig, GraphFamily, GraphInfo, GraphSpec,
};
use robust_mean::network::PerronMatrix;
use robust_mean::Error;

/// Robust mean estimation experiments.
#[derive(Parser)]
#[command(name = "robust-mean", version)]
struct Cli {
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of trials (overrides the config).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Source),
    /// Run an experiment over a grid of K, eta and t0.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        eta: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        t0: Vec<usize>,
    },
    /// Check bound coverage on stored trial CSVs.
    Verify {
        #[command(flatten)]
        source: Source,
        /// Directory holding trial_NNNN.csv files; defaults to the output directory.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Print the averaging matrix and its spectrum.
    GraphInfo {
        /// Edge-list file.
        path: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "path")]
        family: Option<FamilyArg>,
        #[arg(long, requires = "family")]
        m: Option<usize>,
    },
}

#[derive(Args)]
struct Source {
    /// JSON experiment config.
    #[arg(
        long,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    config: Option<PathBuf>,
    /// Built-in reference experiment.
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    SingleFixed,
    SingleAdaptive,
    NetworkK0,
    NetworkK1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Complete,
    Path,
    Cycle,
    Star,
    Random,
}

impl From<FamilyArg> for GraphFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Complete => GraphFamily::Complete,
            FamilyArg::Path => GraphFamily::Path,
            FamilyArg::Cycle => GraphFamily::Cycle,
            FamilyArg::Star => GraphFamily::Star,
            FamilyArg::Random => GraphFamily::Random,
        }
    }
}

impl Cli {
    fn config(&self, source: &Source) -> anyhow::Result<ExperimentConfig> {
        let mut config = match (&source.config, source.scenario) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(s)) => {
                let mut c = match s {
                    Scenario::SingleFixed => {
                        scenarios::reference_single_agent(AlgorithmKind::Fixed)
                    }
                    Scenario::SingleAdaptive => {
                        scenarios::reference_single_agent(AlgorithmKind::Adaptive)
                    }
                    Scenario::NetworkK0 => scenarios::reference_network(0),
                    Scenario::NetworkK1 => scenarios::reference_network(1),
                };
                c.trials = 100;
                c.output_dir = PathBuf::from("out").join(&c.scenario);
                c
            }
            (None, None) => bail!(Error::Config("need --config or --scenario".into())),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_report(report: &BoundReport) {
    for c in &report.checks {
        println!(
            "{} {}: {}/{} = {:.4} (target {:.4}, 95% CI [{:.4}, {:.4}], worst |err|/bound {:.4})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.covered,
            c.total,
            c.coverage,
            c.target,
            c.wilson_low,
            c.wilson_high,
            c.worst_ratio
        );
    }
    for n in &report.notes {
        println!("note: {n}");
    }
}

fn trial_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trial_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn graph_info(
    path: Option<&Path>,
    family: Option<FamilyArg>,
    m: Option<usize>,
    seed: u64,
) -> anyhow::Result<()> {
    let spec = match (path, family) {
        (Some(p), None) => GraphSpec::file(p),
        (None, Some(f)) => GraphSpec::family(f.into(), m.context("--family needs --m")?),
        _ => bail!(Error::Config(
            "give an edge-list file or --family with --m".into()
        )),
    };
    let graph = spec.build(seed)?;
    let p = PerronMatrix::new(&graph)?;
    let info = GraphInfo::measure(&graph, seed)?;
    println!("agents: {}", graph.m());
    println!("edges: {}", graph.edges().len());
    println!("diameter: {}", graph.diameter());
    println!("P:");
    for i in 0..graph.m() {
        let row: Vec<String> = p.row(i).iter().map(|v| format!("{v:.6}")).collect();
        println!("  {}", row.join(" "));
    }
    let spectrum: Vec<String> = info.spectrum.iter().map(|v| format!("{v:.12}")).collect();
    println!("spectrum: {}", spectrum.join(" "));
    println!("lambda: {:.12}", info.lambda);
    println!("contraction rate: {:.12}", info.contraction_rate);
    println!("measured c: {:.6}", info.c);
    let weights: Vec<String> = p
        .stationary_weights()
        .iter()
        .map(|w| format!("{w:.6}"))
        .collect();
    println!("stationary weights: {}", weights.join(" "));
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Run(source) => {
            let config = cli.config(source)?;
            let s = run_experiment(&config, cli.threads)?;
            println!(
                "{}: {} trials, median max-agent |err| {:.6}, max {:.6}, median naive |err| {:.6}",
                s.scenario,
                config.trials,
                s.median_final_error,
                s.max_final_error,
                s.median_naive_error
            );
            print_report(&s.report);
            for n in &s.notes {
                println!("note: {n}");
            }
            println!("wrote {}", config.output_dir.display());
        }
        Command::Sweep { source, k, eta, t0 } => {
            let config = cli.config(source)?;
            let points = sweep(&config, k, eta, t0, cli.threads)?;
            for p in &points {
                println!(
                    "{}: median |err| {:.6}, max {:.6}, bounds {}",
                    p.label,
                    p.median_final_error,
                    p.max_final_error,
                    if p.pass { "pass" } else { "FAIL" }
                );
            }
        }
        Command::Verify { source, records } => {
            let config = cli.config(source)?;
            let dir = records.clone().unwrap_or_else(|| config.output_dir.clone());
            let files = trial_files(&dir)?;
            if files.is_empty() {
                bail!(Error::Config(format!("no trial CSVs in {}", dir.display())));
            }
            let trials = files
                .iter()
                .map(|f| read_csv(f))
                .collect::<Result<Vec<_>, _>>()?;
            let report = verify_bounds(&trials, &config);
            print_report(&report);
            println!("{}", serde_json::to_string(&report)?);
            if !report.pass() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::GraphInfo { path, family, m } => {
            graph_info(path.as_deref(), *family, *m, cli.seed.unwrap_or(0))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            // core errors already fold their cause into the message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
