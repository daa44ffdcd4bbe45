use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use coexplorer_core::config::StartMode;
use coexplorer_core::session::SessionLog;
use coexplorer_core::{Config, Session};
use coexplorer_gateway::{Gateway, GatewayOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Stepwise,
}

/// Serve a co-exploration session over OSC (UDP) and a JSON line bridge (TCP).
#[derive(Debug, Parser)]
#[command(name = "coexplorer", version)]
struct Args {
    /// TOML configuration file; unset keys keep their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// UDP port for OSC peers.
    #[arg(long, value_name = "N")]
    port_osc: Option<u16>,
    /// TCP port for the UI bridge.
    #[arg(long, value_name = "N")]
    port_ui: Option<u16>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Append session records (JSON lines) to this file.
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
    /// Interaction mode to start in.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Address to bind both endpoints on.
    #[arg(long, default_value_t = Ipv4Addr::LOCALHOST.into())]
    bind: std::net::IpAddr,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    let mut config = match &args.config {
        Some(path) => Config::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => Config::default(),
    };
    if let Some(p) = args.port_osc {
        config.port_osc = p;
    }
    if let Some(p) = args.port_ui {
        config.port_ui = p;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(path) = args.log {
        config.log_path = Some(path);
    }
    if let Some(m) = args.mode {
        config.mode = match m {
            ModeArg::Auto => StartMode::Auto,
            ModeArg::Stepwise => StartMode::Stepwise,
        };
    }
    config.validate().context("invalid configuration")?;

    let mut session = Session::new(config.clone()).context("creating session")?.with_wall_clock();
    if let Some(path) = &config.log_path {
        let log = SessionLog::open(path).with_context(|| format!("opening log {}", path.display()))?;
        session = session.with_log(log);
    }
    let options = GatewayOptions::new(
        SocketAddr::new(args.bind, config.port_osc),
        SocketAddr::new(args.bind, config.port_ui),
    );
    let gateway = Gateway::start(session, options)?;
    gateway.wait();
    Ok(())
}
