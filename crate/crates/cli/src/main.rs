use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use semrob_core::graphgen::{ingest_real_graph, sample_graph};
use semrob_core::harness::{
    bayes_accuracy_table, check_bundle, degree_robustness_profile, emit_results, graph_seed,
    over_robustness_sweep, semantic_violation_table, Format, GraphSpec, Profile, ResultBundle,
};
use semrob_core::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "semrob", version, about = "Semantics-aware robustness experiments on synthetic graphs")]
struct Cli {
    /// Experiment config (JSON); built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Overrides the base seed of the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    /// Comma-separated subset of csv,json,svg
    #[arg(long, global = true, value_delimiter = ',', value_enum)]
    formats: Option<Vec<FormatArg>>,
    /// Compare results with the reference values; exit 3 on any miss
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample (or ingest) the configured graphs and save them as JSON
    Gen,
    /// Bayes accuracy per K and evidence type
    BayesTable,
    /// Fraction of Bayes decisions changed by each attack and budget
    ViolationTable,
    /// Over-robustness of trained classifiers against the Bayes decision
    Sweep,
    /// Per-class attack robustness grouped by node degree
    DegreeProfile,
    /// Re-emit a saved bundle.json
    Emit {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Full,
    Quick,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

enum Failure {
    Error(Error),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    if let Some(p) = cli.profile {
        cfg = cfg.with_profile(match p {
            ProfileArg::Full => Profile::Full,
            ProfileArg::Quick => Profile::Quick,
        });
    }
    if let Some(f) = &cli.formats {
        cfg.formats = f.iter().map(|&x| x.into()).collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn gen(cfg: &ExperimentConfig, out: &Path) -> Result<(), Error> {
    let dir = out.join(&cfg.name).join("graphs");
    match &cfg.graph {
        GraphSpec::Synthetic { .. } => {
            for &k in &cfg.k_values {
                let model = cfg.gen_model(k)?;
                for s in 0..cfg.seeds {
                    let g = sample_graph(&model, graph_seed(cfg.base_seed, k, s))?;
                    let path = dir.join(format!("K{k}_seed{s}.json"));
                    g.save(&path)?;
                    println!("{}: n={} edges={}", path.display(), g.n(), g.num_edges());
                }
            }
        }
        GraphSpec::Real { edges, features, labels, mask } => {
            let g = ingest_real_graph(edges, features, labels, mask.as_deref())?;
            let path = dir.join("graph.json");
            g.save(&path)?;
            println!("{}: n={} edges={}", path.display(), g.n(), g.num_edges());
        }
    }
    Ok(())
}

fn finish(bundle: &ResultBundle, out: &Path, formats: &[Format], check: bool) -> Result<(), Failure> {
    let written = emit_results(bundle, out, formats)?;
    println!("wrote {} files under {}", written.len(), out.join(&bundle.experiment).display());
    if check {
        let outcomes = check_bundle(bundle);
        for o in &outcomes {
            let value = o.value.map_or("-".to_string(), |v| format!("{v:.2}"));
            println!("{} {}: {} (expected {})", if o.pass { "PASS" } else { "FAIL" }, o.name, value, o.expected);
        }
        if outcomes.iter().any(|o| !o.pass) {
            return Err(Failure::Check);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Command::Emit { input } = &cli.command {
        let text = std::fs::read_to_string(input).map_err(Error::from)?;
        let bundle: ResultBundle = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let formats = match &cli.formats {
            Some(f) => f.iter().map(|&x| x.into()).collect(),
            None => bundle.provenance.config.formats.clone(),
        };
        return finish(&bundle, &cli.out, &formats, cli.check);
    }
    let cfg = load_config(cli)?;
    let mut bundle = ResultBundle::new(&cfg);
    match cli.command {
        Command::Gen => return Ok(gen(&cfg, &cli.out)?),
        Command::BayesTable => bundle.bayes = Some(bayes_accuracy_table(&cfg)?),
        Command::ViolationTable => bundle.violations = Some(semantic_violation_table(&cfg)?),
        Command::Sweep => bundle.sweep = Some(over_robustness_sweep(&cfg)?),
        Command::DegreeProfile => bundle.profile = Some(degree_robustness_profile(&cfg)?),
        Command::Emit { .. } => unreachable!(),
    }
    finish(&bundle, &cli.out, &cfg.formats, cli.check)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(3),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
        }
    }
}
