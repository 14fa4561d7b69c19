use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use learnsim_server::{router, Hub};
use log::info;

#[derive(Debug, Parser)]
#[command(name = "learnsim-server", version, about = "Serve live classroom simulation sessions")]
struct Args {
    /// Address to bind.
    #[arg(long, env = "LEARNSIM_BIND", default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, env = "LEARNSIM_PORT", default_value_t = 8750)]
    port: u16,
    /// Ticks per second driving running sessions.
    #[arg(long, env = "LEARNSIM_TICK_HZ", default_value_t = 10.0)]
    tick_hz: f64,
    /// Save sessions here periodically and restore them at startup.
    #[arg(long, env = "LEARNSIM_SNAPSHOT_DIR")]
    snapshot_dir: Option<PathBuf>,
    /// Seconds between snapshots.
    #[arg(long, default_value_t = 30)]
    snapshot_every: u64,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if !(args.tick_hz.is_finite() && args.tick_hz > 0.0) {
        eprintln!("error: --tick-hz must be positive");
        std::process::exit(1);
    }
    let hub = Arc::new(Hub::new(args.tick_hz));
    if let Some(dir) = &args.snapshot_dir {
        let n = hub.load_all(dir)?;
        info!("restored {n} session(s) from {}", dir.display());
        hub.spawn_snapshots(dir.clone(), Duration::from_secs(args.snapshot_every.max(1)));
    }
    hub.spawn_ticker();

    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on http://{}", listener.local_addr()?);
    let app = router(Arc::clone(&hub));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(dir) = &args.snapshot_dir {
        let n = hub.save_all(dir).await?;
        info!("saved {n} session(s) to {}", dir.display());
    }
    Ok(())
}
