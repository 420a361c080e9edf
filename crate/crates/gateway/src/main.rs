use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Parser;
use locoml_core::ExecutorConfig;
use locoml_gateway::{router, AppState};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "locoml-gateway", about = "Pipeline orchestrator REST gateway")]
struct Args {
    #[arg(long, env = "LOCOML_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Directory holding saved pipelines.
    #[arg(long, env = "LOCOML_STORE_DIR", default_value = "data/pipelines")]
    store_dir: PathBuf,
    /// Directory holding model hub entries.
    #[arg(long, env = "LOCOML_HUB_DIR", default_value = "data/hub")]
    hub_dir: PathBuf,
    /// Per-call model timeout in seconds.
    #[arg(long, env = "LOCOML_MODEL_TIMEOUT_SECS", default_value_t = 120)]
    model_timeout_secs: u64,
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let config = ExecutorConfig {
        model_timeout: Duration::from_secs(args.model_timeout_secs),
        ..ExecutorConfig::default()
    };
    let state = AppState::open(&args.hub_dir, &args.store_dir, config).context("opening stores")?;
    tracing::info!(
        models = state.hub.len(),
        pipelines = state.repo.list_pipelines().len(),
        "stores loaded"
    );

    let listener = tokio::net::TcpListener::bind(args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
