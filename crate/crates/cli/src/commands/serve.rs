use std::io::Write;
use std::sync::Arc;

use vcrobust_evalsvc::{http, random_token, EvalService, Rubric, ServiceConfig};

use crate::config::{pick, pick_path};
use crate::error::io_error;
use crate::{CliError, Globals, ServeArgs};

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutdown requested; draining connections");
}

/// Runs the service until SIGINT or SIGTERM.
///
/// Prints `listening http://ADDR:PORT` to stdout once bound, and the admin
/// token when it was generated rather than supplied.
pub fn run(g: &Globals, a: ServeArgs) -> Result<(), CliError> {
    let f = &g.file;
    let host = pick("host", a.host, f.host.clone(), "127.0.0.1".to_string());
    let port = pick("port", a.port, f.port, 8080);
    let store = pick_path("store", a.store, f.store.clone())
        .unwrap_or_else(|| a.suite.join("ratings.ndjson"));
    let rubric = match pick_path("rubric", a.rubric, f.rubric.clone()) {
        Some(p) => Rubric::load(p)?,
        None => Rubric::default(),
    };
    let generated = a.admin_token.is_none();
    let config = ServiceConfig {
        admin_token: a.admin_token.unwrap_or_else(random_token),
        rubric,
        with_reference: a.with_reference || f.with_reference.unwrap_or(false),
    };
    let admin_token = config.admin_token.clone();

    let svc = EvalService::open(&a.suite, &store, config)?;
    let rec = svc.recovery();
    log::info!(
        sessions = rec.sessions, completed_sessions = rec.completed_sessions, ratings = rec.ratings,
        torn_bytes = rec.torn_bytes, store:% = store.display();
        "store replayed"
    );
    let svc = Arc::new(svc);
    let app = match &a.webui {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(CliError::Data(format!("web client directory {} not found", dir.display())));
            }
            http::router_with_static(svc, dir)
        }
        None => http::router(svc),
    };

    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Io(format!("cannot start runtime: {e}")))?;
    rt.block_on(async move {
        let addr = format!("{host}:{port}");
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Io(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| io_error(std::path::Path::new(&addr), e))?;
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "listening http://{local}");
        if generated {
            let _ = writeln!(out, "admin token {admin_token}");
        }
        let _ = out.flush();
        drop(out);
        log::info!(addr:% = local; "serving");
        http::serve_app(listener, app, shutdown_signal())
            .await
            .map_err(|e| CliError::Io(format!("server failed: {e}")))
    })?;
    log::info!("stopped");
    Ok(())
}
