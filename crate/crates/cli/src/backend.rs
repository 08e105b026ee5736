//! The same operations against a local store directory or a running service.

use std::fs;
use std::path::Path;

use fgrid_core::catalog::IngestReport;
use fgrid_core::grid::CompileIssue;
use fgrid_core::wire::build_preview;
use fgrid_core::{
    AttributeDef, AttributeKind, Catalog, CatalogError, CellAddress, FormulaGrid, Instrument, PreviewPayload, ValueDoc,
};
use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Environment and I/O problems: unreadable files, unreachable server.
    #[error("{0}")]
    Io(String),
    /// Bad definitions or requests: unknown names, invalid documents.
    #[error("{0}")]
    Invalid(String),
    #[error("grid does not compile")]
    Compile(Vec<CompileIssue>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) | CliError::Compile(_) => 2,
        }
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Io(io) => CliError::Io(format!("storage: {io}")),
            CatalogError::Compile(c) => CliError::Compile(c.issues),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// A document together with its exact JSON text. Remote text is the
/// response body as received, so `--json` output matches the service.
pub struct Doc<T> {
    pub doc: T,
    pub json: String,
}

impl<T: serde::Serialize> Doc<T> {
    fn local(doc: T) -> Self {
        let json = serde_json::to_string(&doc).expect("documents serialize");
        Doc { doc, json }
    }
}

pub enum Backend {
    Local(Catalog),
    Remote(Remote),
}

impl Backend {
    pub fn local(dir: &Path) -> Result<Self> {
        Catalog::open(dir).map(Backend::Local).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
    }

    pub fn remote(base: &str) -> Self {
        Backend::Remote(Remote { base: base.trim_end_matches('/').to_string(), http: Client::new() })
    }

    pub fn ingest(&self, file: &Path) -> Result<IngestReport> {
        let bytes = fs::read(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
        match self {
            Backend::Local(c) => Ok(c.ingest_csv(&bytes[..])?),
            Backend::Remote(r) => {
                r.call(r.http.post(r.url("/ingest")).header("content-type", "text/csv").body(bytes)).map(|d| d.doc)
            }
        }
    }

    pub fn define_class(&self, name: &str) -> Result<()> {
        match self {
            Backend::Local(c) => Ok(c.define_class(name)?),
            Backend::Remote(r) => {
                r.call::<serde_json::Value>(r.http.post(r.url("/classes")).json(&serde_json::json!({ "name": name })))?;
                Ok(())
            }
        }
    }

    pub fn define_attribute(&self, class: &str, def: AttributeDef) -> Result<()> {
        match self {
            Backend::Local(c) => Ok(c.define_attribute(class, def)?),
            Backend::Remote(r) => {
                r.call::<serde_json::Value>(r.http.post(r.url(&format!("/classes/{class}/attributes"))).json(&def))?;
                Ok(())
            }
        }
    }

    /// Replaces the grid, or creates the attribute when the class lacks it.
    pub fn put_grid(&self, class: &str, attr: &str, grid: FormulaGrid) -> Result<()> {
        match self {
            Backend::Local(c) => {
                let exists = c.snapshot().class(class)?.attribute(attr).is_some();
                if exists {
                    c.replace_grid(class, attr, grid)?;
                } else {
                    c.define_attribute(class, AttributeDef::formula_grid(attr, grid))?;
                }
                Ok(())
            }
            Backend::Remote(r) => {
                let put = r.http.put(r.url(&format!("/classes/{class}/attributes/{attr}/grid"))).json(&grid);
                match r.send(put)? {
                    Ok(_) => Ok(()),
                    Err(e) if e.code == "unknown-attribute" => {
                        self.define_attribute(class, AttributeDef::formula_grid(attr, grid))
                    }
                    Err(e) => Err(e.into()),
                }
            }
        }
    }

    pub fn get_grid(&self, class: &str, attr: &str) -> Result<FormulaGrid> {
        match self {
            Backend::Local(c) => Ok(c.snapshot().grid(class, attr)?.clone()),
            Backend::Remote(r) => r.call(r.http.get(r.url(&format!("/classes/{class}/attributes/{attr}/grid")))).map(|d| d.doc),
        }
    }

    pub fn instruments(&self, class: Option<&str>) -> Result<Doc<Vec<Instrument>>> {
        match self {
            Backend::Local(c) => Ok(Doc::local(c.snapshot().list_instruments(class)?)),
            Backend::Remote(r) => {
                let mut req = r.http.get(r.url("/instruments"));
                if let Some(class) = class {
                    req = req.query(&[("class", class)]);
                }
                r.call(req)
            }
        }
    }

    pub fn value(&self, id: &str, attr: &str) -> Result<Doc<ValueDoc>> {
        match self {
            Backend::Local(c) => Ok(Doc::local(ValueDoc::from(&c.evaluate_attribute(id, attr)?))),
            Backend::Remote(r) => r.call(r.http.get(r.url(&format!("/instruments/{id}/attributes/{attr}")))),
        }
    }

    pub fn preview(&self, id: &str, attr: &str, unfold: Option<CellAddress>) -> Result<Doc<PreviewPayload>> {
        match self {
            Backend::Local(c) => {
                let snap = c.snapshot();
                let def = snap.attribute(id, attr)?;
                if def.kind != AttributeKind::FormulaGrid {
                    return Err(CliError::Invalid(format!("attribute '{}' is {}, not formula-grid", def.name, def.kind)));
                }
                let (compiled, result) = snap.evaluate_grid(id, attr)?;
                let p = build_preview(id, &def.name, compiled.grid(), &result, unfold)
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
                Ok(Doc::local(p))
            }
            Backend::Remote(r) => {
                let mut req = r.http.get(r.url(&format!("/instruments/{id}/attributes/{attr}/preview")));
                if let Some(a) = unfold {
                    req = req.query(&[("unfold", a.to_string())]);
                }
                r.call(req)
            }
        }
    }
}

pub struct Remote {
    base: String,
    http: Client,
}

#[derive(Debug, Deserialize)]
struct ServiceError {
    code: String,
    message: String,
    #[serde(default)]
    errors: Vec<CompileIssue>,
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        if e.errors.is_empty() {
            CliError::Invalid(e.message)
        } else {
            CliError::Compile(e.errors)
        }
    }
}

impl Remote {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Transport failures and 5xx are `Err`; 4xx bodies come back inside.
    fn send(&self, req: RequestBuilder) -> Result<std::result::Result<String, ServiceError>> {
        let resp = req.send().map_err(|e| CliError::Io(format!("{}: {e}", self.base)))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| CliError::Io(format!("{}: {e}", self.base)))?;
        if status.is_success() {
            return Ok(Ok(text));
        }
        let err: ServiceError = serde_json::from_str(&text)
            .unwrap_or_else(|_| ServiceError { code: status.to_string(), message: text, errors: Vec::new() });
        if status.is_server_error() || status == StatusCode::PAYLOAD_TOO_LARGE {
            return Err(CliError::Io(format!("server error {status}: {}", err.message)));
        }
        Ok(Err(err))
    }

    fn call<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<Doc<T>> {
        let json = self.send(req)??;
        let doc = serde_json::from_str(&json).map_err(|e| CliError::Io(format!("unexpected response: {e}")))?;
        Ok(Doc { doc, json })
    }
}
