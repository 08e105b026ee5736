//! `fgrid`: run the calculation service, load data, manage grids, and
//! evaluate attributes from a terminal.
//!
//! Commands work on a local store (`--data`) or, with `--server`, on a
//! running service. Exit codes: 0 ok, 1 environment or I/O failure,
//! 2 invalid definition or request, 3 the evaluated value is an error.

mod backend;
mod render;

use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use backend::{Backend, CliError, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fgrid_core::{AttributeDef, Catalog, CellAddress, FormulaGrid, ValueDoc};

#[derive(Parser)]
#[command(name = "fgrid", version, about = "Formula grid store, service and evaluator")]
struct Cli {
    /// Store directory for local mode and for `serve`.
    #[arg(long, global = true, env = "FGRID_DATA_DIR", value_name = "DIR")]
    data: Option<PathBuf>,

    /// Service base URL; commands go to the service instead of a local store.
    #[arg(long, global = true, env = "FGRID_SERVER", value_name = "URL")]
    server: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080", value_name = "ADDR:PORT")]
        listen: String,
    },
    /// Load observations from a CSV file.
    Ingest { file: PathBuf },
    /// Define an instrument class.
    Class { name: String },
    /// Add a stored attribute to a class.
    Attr {
        class: String,
        name: String,
        #[arg(long, value_enum, default_value_t = StoredKind::Series)]
        kind: StoredKind,
    },
    /// List instruments, optionally of one class.
    Instruments {
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Grid(GridCommand),
    /// Evaluate an attribute for one instrument.
    Eval {
        instrument: String,
        attribute: String,
        /// Print the JSON value document.
        #[arg(long)]
        json: bool,
    },
    /// Show every cell of a grid attribute evaluated for one instrument.
    Preview {
        instrument: String,
        attribute: String,
        /// Expand this series cell into a timestamp/value table.
        #[arg(long, value_name = "ADDR")]
        unfold: Option<CellAddress>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum GridCommand {
    /// Store a grid, creating the attribute when absent.
    Put { class: String, attribute: String, file: PathBuf },
    /// Print the stored grid document.
    Get { class: String, attribute: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum StoredKind {
    Series,
    Scalar,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Serve { listen } => serve(cli.data.as_deref(), &listen),
        command => backend(&cli.data, &cli.server).and_then(|b| run(&b, command)),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Compile(issues)) => {
            eprint!("{}", render::compile_issues(&issues));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn backend(data: &Option<PathBuf>, server: &Option<String>) -> Result<Backend> {
    match (data, server) {
        (_, Some(url)) => Ok(Backend::remote(url)),
        (Some(dir), None) => Backend::local(dir),
        (None, None) => Err(CliError::Io("no store: pass --data DIR or --server URL".into())),
    }
}

fn out(text: &str) -> Result<u8> {
    let mut stdout = io::stdout().lock();
    stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(0)
}

fn run(b: &Backend, command: Command) -> Result<u8> {
    match command {
        Command::Serve { .. } => unreachable!("handled in main"),
        Command::Ingest { file } => {
            let report = b.ingest(&file)?;
            let mut text = format!("{} points, {} rejected\n", report.points_written, report.rows_rejected.len());
            for r in &report.rows_rejected {
                text.push_str(&format!("line {}: {}\n", r.line, r.reason));
            }
            out(&text)?;
            Ok(if report.rows_rejected.is_empty() { 0 } else { 2 })
        }
        Command::Class { name } => {
            b.define_class(&name)?;
            out(&format!("defined class {name}\n"))
        }
        Command::Attr { class, name, kind } => {
            let def = match kind {
                StoredKind::Series => AttributeDef::stored_series(&name),
                StoredKind::Scalar => AttributeDef::stored_scalar(&name),
            };
            let kind = def.kind;
            b.define_attribute(&class, def)?;
            out(&format!("defined {class}.{name} ({kind})\n"))
        }
        Command::Instruments { class, json } => {
            let list = b.instruments(class.as_deref())?;
            if json {
                return out(&format!("{}\n", list.json));
            }
            let text: String = list.doc.iter().map(|i| format!("{}\t{}\t{}\n", i.id, i.class, i.display_name)).collect();
            out(&text)
        }
        Command::Grid(GridCommand::Put { class, attribute, file }) => {
            let text = std::fs::read_to_string(&file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
            let grid = FormulaGrid::from_json(&text)
                .map_err(|e| CliError::Invalid(format!("{}: invalid grid document: {e}", file.display())))?;
            let summary = format!("compiled: {} cells, result {}\n", grid.cells.len(), grid.result);
            b.put_grid(&class, &attribute, grid)?;
            out(&summary)
        }
        Command::Grid(GridCommand::Get { class, attribute }) => {
            let grid = b.get_grid(&class, &attribute)?;
            out(&format!("{}\n", grid.to_json_pretty()))
        }
        Command::Eval { instrument, attribute, json } => {
            let v = b.value(&instrument, &attribute)?;
            out(&if json { format!("{}\n", v.json) } else { render::value(&v.doc) })?;
            Ok(if matches!(v.doc, ValueDoc::Error { .. }) { 3 } else { 0 })
        }
        Command::Preview { instrument, attribute, unfold, json } => {
            let p = b.preview(&instrument, &attribute, unfold)?;
            out(&if json { format!("{}\n", p.json) } else { render::preview(&p.doc) })?;
            let result = p.doc.cells.iter().find(|c| c.address == p.doc.result);
            let failed = result.is_some_and(|c| matches!(c.value, fgrid_core::wire::FoldedValue::Error { .. }));
            Ok(if failed { 3 } else { 0 })
        }
    }
}

/// Always serves a local store; `--server` is ignored here.
fn serve(data: Option<&Path>, listen: &str) -> Result<u8> {
    let dir = data.ok_or_else(|| CliError::Io("serve needs --data DIR".into()))?;
    let addr: SocketAddr =
        listen.parse().map_err(|_| CliError::Io(format!("invalid listen address '{listen}' (expected ADDR:PORT)")))?;
    let catalog = Catalog::open(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    rt.block_on(async move {
        let listener =
            tokio::net::TcpListener::bind(addr).await.map_err(|e| CliError::Io(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
        out(&format!("listening on http://{local}\n"))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        fgrid_service::serve(listener, Arc::new(catalog), shutdown).await.map_err(|e| CliError::Io(e.to_string()))?;
        Ok(0)
    })
}
