//! HTTP/JSON service for interactive clustering and merge sessions.

mod error;
mod openapi;
mod routes;
mod session;
mod state;

use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;

use forge_core::doc::DocOptions;

pub use error::{ApiError, ApiResult};
pub use openapi::spec;
pub use routes::router;
pub use session::{AuditEntry, CutState, RunRecord, RunRequest, RunStatus, Session};
pub use state::AppState;

/// Binds `addr` and serves sessions stored under `data_dir` until the
/// process stops. Runs left unfinished by a previous process are restarted.
pub async fn serve(addr: SocketAddr, data_dir: impl Into<PathBuf>, options: DocOptions) -> io::Result<()> {
    let state = AppState::open(data_dir, options)?;
    state.resume_pending();
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
