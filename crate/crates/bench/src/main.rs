use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use locoml_bench::chain::{ChainBench, Scenario};
use locoml_bench::mock::{self, MockSpec};
use locoml_bench::{fit_linear_overhead, report, rules_check};
use locoml_core::{bhashini_ruleset, bhashini_ruleset_with_catalog, ExecutorConfig, ModelHub, PipelineGraph};

#[derive(Parser)]
#[command(name = "bench", about = "Orchestration-overhead benchmarks and mock model servers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run chains of increasing length and write mean timings as CSV.
    Run {
        #[arg(long, default_value = "mt")]
        task: Scenario,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        latency_ms: u64,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Use an already running all-task mock server instead of an in-process one.
        #[arg(long)]
        mock_url: Option<String>,
    },
    /// Fit overhead against model count from a results CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Start mock model servers from a JSON list of specs until interrupted.
    Mocks {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Pipeline rule checks.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
}

#[derive(Subcommand)]
enum RulesCommand {
    /// Print PASS or FAIL for every edge of a pipeline JSON document.
    Check {
        pipeline: PathBuf,
        /// Model hub directory; enables model-support checks.
        #[arg(long)]
        hub_dir: Option<PathBuf>,
    },
}

#[tokio::main]
async fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            task,
            counts,
            latency_ms,
            trials,
            out,
            mock_url,
        } => {
            let _server;
            let url = match mock_url {
                Some(url) => url,
                None => {
                    let server = mock::spawn_all_tasks(Duration::from_millis(latency_ms), 0).await?;
                    let url = server.base_url();
                    _server = server;
                    url
                }
            };
            let bench = ChainBench::new(&url, ExecutorConfig::default());
            let rows = bench.run(task, &counts, trials).await?;
            println!("n_models  total_ms  model_ms  overhead_ms  overhead_%");
            for r in &rows {
                println!(
                    "{:>8}  {:>8.2}  {:>8.2}  {:>11.3}  {:>10.3}",
                    r.n_models,
                    r.total_ms,
                    r.model_ms,
                    r.overhead_ms,
                    100.0 * r.overhead_fraction()
                );
            }
            report::write_csv(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
        }
        Command::Fit { input } => {
            let rows = report::read_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let fit = fit_linear_overhead(&rows)?;
            println!("slope_ms_per_model = {:.4}", fit.slope_ms_per_model);
            println!("intercept_ms       = {:.4}", fit.intercept_ms);
            println!("r2                 = {:.4}", fit.r2);
        }
        Command::Mocks { spec } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let specs: Vec<MockSpec> = serde_json::from_str(&text).context("parsing mock specs")?;
            if specs.is_empty() {
                bail!("no mock specs in {}", spec.display());
            }
            let mut servers = Vec::new();
            for s in &specs {
                let server = mock::spawn_mock(s).await?;
                println!("{} mock on {} ({} ms)", s.task, server.base_url(), s.latency_ms);
                servers.push(server);
            }
            tokio::signal::ctrl_c().await?;
        }
        Command::Rules {
            command: RulesCommand::Check { pipeline, hub_dir },
        } => {
            let text = std::fs::read_to_string(&pipeline).with_context(|| format!("reading {}", pipeline.display()))?;
            let graph: PipelineGraph = serde_json::from_str(&text).context("parsing pipeline")?;
            let rules = match hub_dir {
                Some(dir) => bhashini_ruleset_with_catalog(Arc::new(ModelHub::open(&dir)?)),
                None => bhashini_ruleset(),
            };
            let checks = rules_check::check_edges(&graph, &rules);
            for c in &checks {
                if c.passed() {
                    println!("PASS {} -> {}", c.source, c.target);
                } else {
                    println!("FAIL {} -> {}: {}", c.source, c.target, c.failed.join(", "));
                }
            }
            if checks.iter().any(|c| !c.passed()) {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
