//! Thin command-line front end over the library pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aamcbr::backends::TruthTable;
use aamcbr::config::{BackendKind, RunConfig};
use aamcbr::datagen::{
    build_generated_pool, build_template_pool, generate_test_sets, load_pool, load_test_sets, save_pool,
    save_test_sets,
};
use aamcbr::experiments::{
    emit_report, load_coverage_csv, load_extraction_csv, load_metrics, load_predictions_csv, render_tables,
    run_coverage_experiment, run_extraction_experiment, run_prediction_experiment, BaselineInput,
    CoverageMetrics, CoverageRun, ExtractionMetrics, ExtractionRun, MetricsReport, PredictionMetrics,
    PredictionRun, RunArtifacts,
};
use aamcbr::prompts::PromptSet;
use aamcbr::AgentConfig;

#[derive(Parser)]
#[command(name = "aamcbr", version, about = "Case-based reasoning over abstract argumentation, with agentic factorization of text case bases")]
struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Backend: oracle, noisy, or http
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Coverage flip probability for the noisy backend
    #[arg(long, global = true)]
    noise_flip: Option<f64>,
    /// Per-factor omission probability for the noisy backend
    #[arg(long, global = true)]
    noise_omit: Option<f64>,
    /// Per-candidate spurious-addition probability for the noisy backend
    #[arg(long, global = true)]
    noise_add: Option<f64>,
    /// Master seed; pool, test-set and noise seeds derive from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of test sets to generate or run over
    #[arg(long, global = true)]
    testsets: Option<usize>,
    /// Default outcomes to evaluate: 0, 1, or both
    #[arg(long, global = true)]
    defaults: Option<String>,
    /// Concurrent backend calls
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    /// Output directory for pools, test sets, records and reports
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Response-cache directory
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Factor-domain JSON file (defaults to the built-in credit domain)
    #[arg(long, global = true)]
    domain_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the scenario pool (template composer, or verified generation on http)
    GenScenarios {
        /// Generation attempts per subset before skipping it
        #[arg(long)]
        max_attempts: Option<u32>,
    },
    /// Draw test sets from an existing scenario pool
    GenTestsets {
        /// Allow drawing the same scenario twice within a test set
        #[arg(long)]
        with_replacement: bool,
    },
    /// Case-coverage determination over every (previous, new) pair
    RunCoverage,
    /// Factor extraction over pairs predicted relevant by run-coverage
    RunExtraction,
    /// Outcome prediction: agentic pipeline vs single-prompt baselines
    RunPredict {
        /// Strategies to run (aam-cbr, single-not-instructed, single-instructed)
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<String>>,
        /// Feed factorized previous cases to the baselines instead of raw text
        #[arg(long)]
        factorized_baseline: bool,
    },
    /// Recompute metrics and tables from the record files in the output directory
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(backend) = &o.backend {
        config.backend = BackendKind::parse(backend)?;
    }
    if let Some(v) = o.noise_flip {
        config.noise_flip = v;
    }
    if let Some(v) = o.noise_omit {
        config.noise_omit = v;
    }
    if let Some(v) = o.noise_add {
        config.noise_add = v;
    }
    if let Some(v) = o.seed {
        config.seed = v;
    }
    if let Some(v) = o.testsets {
        config.testsets = v;
    }
    if let Some(v) = &o.defaults {
        config.defaults = v.clone();
    }
    if let Some(v) = o.concurrency {
        config.concurrency = v;
    }
    if let Some(v) = &o.out {
        config.out = v.clone();
    }
    if let Some(v) = &o.cache {
        config.cache = Some(v.clone());
    }
    if let Some(v) = &o.domain_file {
        config.domain_file = Some(v.clone());
    }
    Ok(config)
}

fn agent_config(config: &RunConfig) -> AgentConfig {
    AgentConfig {
        parse_retries: config.parse_retries,
        concurrency: config.concurrency,
        prompts: PromptSet::default(),
    }
}

struct Inputs {
    domain: aamcbr::FactorDomain,
    table: TruthTable,
    pool: aamcbr::datagen::ScenarioPool,
    test_sets: Vec<aamcbr::datagen::TestSet>,
}

/// Loads the pool (registering truth) and the test sets from the out dir.
fn load_inputs(config: &RunConfig) -> Result<Inputs, Box<dyn std::error::Error>> {
    let domain = config.domain()?;
    let table = TruthTable::new();
    let pool = load_pool(&config.out.join("scenarios.jsonl"), &domain, Some(&table))?;
    let test_sets = load_test_sets(&config.out.join("testsets"))?;
    Ok(Inputs {
        domain,
        table,
        pool,
        test_sets,
    })
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let config = effective_config(&cli)?;
    std::fs::create_dir_all(&config.out)?;

    match &cli.command {
        Command::GenScenarios { max_attempts } => {
            let domain = config.domain()?;
            let table = TruthTable::new();
            let pool = match config.backend {
                BackendKind::Http => {
                    let backend = config.build_backend(&domain, &table)?;
                    let attempts = max_attempts.unwrap_or(config.max_attempts);
                    build_generated_pool(&backend, &domain, &PromptSet::default(), attempts)?
                }
                // offline backends use the template composer directly
                _ => build_template_pool(&domain, config.pool_seed(), &table),
            };
            let path = config.out.join("scenarios.jsonl");
            save_pool(&pool, &domain, &path)?;
            println!(
                "wrote {} scenarios ({} skipped) to {}",
                pool.len(),
                pool.skipped.len(),
                path.display()
            );
        }

        Command::GenTestsets { with_replacement } => {
            let domain = config.domain()?;
            let pool = load_pool(&config.out.join("scenarios.jsonl"), &domain, None)?;
            let sets = generate_test_sets(
                &pool,
                &domain,
                config.testsets,
                config.testset_seed(),
                *with_replacement || config.with_replacement,
            )?;
            let dir = config.out.join("testsets");
            save_test_sets(&sets, &dir)?;
            println!("wrote {} test sets to {}", sets.len(), dir.display());
        }

        Command::RunCoverage => {
            let Inputs { domain, table, pool, test_sets } = load_inputs(&config)?;
            let backend = config.build_backend(&domain, &table)?;
            let run = run_coverage_experiment(&backend, &domain, &pool, &test_sets, &agent_config(&config))?;
            println!("coverage: {} records", run.records.len());
            print_coverage(&run.metrics);
            emit_report(
                &config.out,
                &RunArtifacts {
                    coverage: Some(run),
                    ..Default::default()
                },
            )?;
        }

        Command::RunExtraction => {
            let Inputs { domain, table, pool, test_sets } = load_inputs(&config)?;
            let backend = config.build_backend(&domain, &table)?;
            let coverage = load_coverage_csv(&config.out.join("coverage.csv"))?;
            let run = run_extraction_experiment(
                &backend,
                &domain,
                &pool,
                &test_sets,
                &coverage,
                &agent_config(&config),
            )?;
            println!("extraction: {} records", run.records.len());
            print_extraction(&run.metrics);
            emit_report(
                &config.out,
                &RunArtifacts {
                    extraction: Some(run),
                    ..Default::default()
                },
            )?;
        }

        Command::RunPredict {
            strategies,
            factorized_baseline,
        } => {
            let Inputs { domain, table, pool, test_sets } = load_inputs(&config)?;
            let backend = config.build_backend(&domain, &table)?;
            let strategy_list = match strategies {
                Some(names) => names
                    .iter()
                    .map(|s| {
                        aamcbr::experiments::Strategy::parse(s)
                            .ok_or_else(|| format!("unknown strategy `{s}`"))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => config.strategy_list()?,
            };
            let baseline = if *factorized_baseline || config.factorized_baseline {
                BaselineInput::Factorized
            } else {
                BaselineInput::RawText
            };
            let run = run_prediction_experiment(
                &backend,
                &domain,
                &pool,
                &test_sets,
                &config.defaults_list()?,
                &strategy_list,
                &agent_config(&config),
                baseline,
            )?;
            println!("prediction: {} records", run.records.len());
            print_prediction(&run.metrics);
            emit_report(
                &config.out,
                &RunArtifacts {
                    prediction: Some(run),
                    ..Default::default()
                },
            )?;
        }

        Command::Report => {
            let mut artifacts = RunArtifacts::default();
            let coverage_path = config.out.join("coverage.csv");
            if coverage_path.exists() {
                let records = load_coverage_csv(&coverage_path)?;
                let metrics = CoverageMetrics::from_records(&records);
                artifacts.coverage = Some(CoverageRun { records, metrics });
            }
            let extraction_path = config.out.join("extraction.csv");
            if extraction_path.exists() {
                let records = load_extraction_csv(&extraction_path)?;
                let metrics = ExtractionMetrics::from_records(&records);
                artifacts.extraction = Some(ExtractionRun { records, metrics });
            }
            let predictions_path = config.out.join("predictions.csv");
            if predictions_path.exists() {
                let records = load_predictions_csv(&predictions_path)?;
                let metrics = PredictionMetrics::from_records(&records);
                artifacts.prediction = Some(PredictionRun { records, metrics });
            }
            emit_report(&config.out, &artifacts)?;
            let report = load_metrics(&config.out.join("metrics.json"))?;
            print!("{}", render_tables(&report));
        }
    }
    Ok(())
}

fn print_coverage(metrics: &CoverageMetrics) {
    let report = MetricsReport {
        coverage: Some(metrics.clone()),
        ..Default::default()
    };
    print!("{}", render_tables(&report));
}

fn print_extraction(metrics: &ExtractionMetrics) {
    let report = MetricsReport {
        extraction: Some(metrics.clone()),
        ..Default::default()
    };
    print!("{}", render_tables(&report));
}

fn print_prediction(metrics: &PredictionMetrics) {
    let report = MetricsReport {
        prediction: Some(metrics.clone()),
        ..Default::default()
    };
    print!("{}", render_tables(&report));
}
