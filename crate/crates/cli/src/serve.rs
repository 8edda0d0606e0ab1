use std::net::SocketAddr;
use std::sync::Arc;

use clap::Args;
use hmmtrack_service::{SessionConfig, SessionManager};

use crate::{load_map, CliError, Result};

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Extra map as NAME=PATH. Repeatable.
    #[arg(long = "map", value_name = "NAME=PATH")]
    maps: Vec<String>,
}

pub fn run(args: ServeArgs) -> Result<()> {
    let mut manager = SessionManager::new(SessionConfig::default());
    for spec in &args.maps {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--map expects NAME=PATH, got {spec:?}")))?;
        manager.add_map(name, load_map(path)?);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: "runtime".into(),
        source,
    })?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .map_err(|source| CliError::Io {
                path: args.bind.to_string(),
                source,
            })?;
        let addr = listener.local_addr().map_err(|source| CliError::Io {
            path: args.bind.to_string(),
            source,
        })?;
        println!("listening on ws://{addr}/ws");
        hmmtrack_service::serve(listener, Arc::new(manager))
            .await
            .map_err(|source| CliError::Io {
                path: addr.to_string(),
                source,
            })
    })
}
