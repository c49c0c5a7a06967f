use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Parser;
use cvel_service::{router, spawn_sweeper, Store};

#[derive(Debug, Parser)]
#[command(name = "cvel-service", version, about = "Session service for the landmark studio")]
struct Args {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory of static assets (the web UI) served at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Idle sessions are evicted after this many seconds.
    #[arg(long, default_value_t = 3600)]
    ttl_secs: u64,
}

#[tokio::main]
async fn main() -> Result<()> {
    let args = Args::parse();
    let ttl = Duration::from_secs(args.ttl_secs);
    let store = Arc::new(Store::new(ttl));
    spawn_sweeper(store.clone(), (ttl / 10).max(Duration::from_secs(1)));

    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .with_context(|| format!("bad address {}:{}", args.host, args.port))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, args.static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
