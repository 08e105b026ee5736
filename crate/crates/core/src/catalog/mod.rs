//! The central store: instrument classes and their attribute schemas,
//! instruments, stored series and scalars, and formula-grid attributes.
//!
//! State is held as an immutable snapshot behind an `Arc`. Readers grab the
//! current snapshot and never block writers; writers are serialized, build a
//! new snapshot, persist it, then publish it. A read that started before a
//! write completes keeps seeing the old state.
//!
//! On disk, `<data_dir>/catalog.json` holds the schema, instruments and
//! scalars, and each stored series lives in
//! `<data_dir>/<class>/<instrument>/<attribute>.fgs` (see [`fgs`]).

pub mod fgs;
mod ingest;
mod schema;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

pub use ingest::{IngestReport, RejectedRow, CSV_HEADER};
pub use schema::{AttributeDef, AttributeKind, Instrument, InstrumentClass};

use crate::grid::{compile, evaluate, CompileError, CompiledGrid, FormulaGrid, GridResult};
use crate::value::{ErrorCode, ObservationSeries, Timestamp, Value};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("{0}")]
    Validation(String),
    #[error("class '{0}' already exists")]
    DuplicateClass(String),
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("attribute '{attribute}' already exists on class '{class}'")]
    DuplicateAttribute { class: String, attribute: String },
    #[error("unknown attribute '{attribute}' on class '{class}'")]
    UnknownAttribute { class: String, attribute: String },
    #[error("instrument '{0}' already exists")]
    DuplicateInstrument(String),
    #[error("unknown instrument '{0}'")]
    UnknownInstrument(String),
    #[error("attribute '{attribute}' is {actual}, expected {expected}")]
    WrongKind { attribute: String, expected: AttributeKind, actual: AttributeKind },
    #[error("grid does not compile: {0}")]
    Compile(#[from] CompileError),
    #[error("attribute '{attribute}' references '{missing}', which is not defined on class '{class}'")]
    UnresolvedDependency { class: String, attribute: String, missing: String },
    #[error("formula-grid attributes reference each other in a cycle: {}", .0.join(","))]
    AttributeCycle(Vec<String>),
    #[error("timestamp {timestamp} already stored for {instrument}/{attribute}")]
    DuplicateTimestamp { instrument: String, attribute: String, timestamp: Timestamp },
    #[error("CSV: {0}")]
    Csv(String),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
}

impl CatalogError {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            CatalogError::Validation(_) => "validation",
            CatalogError::DuplicateClass(_) => "duplicate-class",
            CatalogError::UnknownClass(_) => "unknown-class",
            CatalogError::DuplicateAttribute { .. } => "duplicate-attribute",
            CatalogError::UnknownAttribute { .. } => "unknown-attribute",
            CatalogError::DuplicateInstrument(_) => "duplicate-instrument",
            CatalogError::UnknownInstrument(_) => "unknown-instrument",
            CatalogError::WrongKind { .. } => "wrong-kind",
            CatalogError::Compile(e) if e.has_code(ErrorCode::Cycle) => "#CYCLE",
            CatalogError::Compile(e) if e.has_code(ErrorCode::Parse) => "#PARSE",
            CatalogError::Compile(_) => "#REF",
            CatalogError::UnresolvedDependency { .. } => "unresolved-dependency",
            CatalogError::AttributeCycle(_) => "#CYCLE",
            CatalogError::DuplicateTimestamp { .. } => "duplicate-timestamp",
            CatalogError::Csv(_) => "csv",
            CatalogError::Io(_) => "io",
        }
    }
}

pub type Result<T, E = CatalogError> = std::result::Result<T, E>;

/// New observations for one stored series.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub instrument_id: String,
    pub attribute: String,
    pub points: Vec<(Timestamp, f64)>,
}

impl ObservationBatch {
    pub fn new(instrument_id: &str, attribute: &str, points: Vec<(Timestamp, f64)>) -> Self {
        ObservationBatch { instrument_id: instrument_id.into(), attribute: attribute.into(), points }
    }
}

type SeriesKey = (String, String);

fn key(instrument: &str, attribute: &str) -> SeriesKey {
    (instrument.to_string(), attribute.to_ascii_lowercase())
}

#[derive(Debug, Clone, Default)]
struct State {
    classes: BTreeMap<String, InstrumentClass>,
    compiled: HashMap<SeriesKey, Arc<CompiledGrid>>,
    instruments: BTreeMap<String, Instrument>,
    series: HashMap<SeriesKey, Arc<ObservationSeries>>,
    scalars: BTreeMap<SeriesKey, f64>,
}

#[derive(Serialize, Deserialize)]
struct CatalogDoc {
    classes: Vec<InstrumentClass>,
    instruments: Vec<Instrument>,
    #[serde(default)]
    scalars: Vec<ScalarEntry>,
}

#[derive(Serialize, Deserialize)]
struct ScalarEntry {
    instrument: String,
    attribute: String,
    value: f64,
}

/// Disk writes collected during a mutation, applied before publishing.
#[derive(Default)]
struct Pending {
    catalog: bool,
    series: Vec<(PathBuf, Arc<ObservationSeries>)>,
}

pub struct Catalog {
    data_dir: Option<PathBuf>,
    state: RwLock<Arc<State>>,
    writer: Mutex<()>,
}

impl Catalog {
    /// A store with no persistence.
    pub fn in_memory() -> Self {
        Catalog { data_dir: None, state: RwLock::new(Arc::default()), writer: Mutex::new(()) }
    }

    /// Opens (or creates) a store rooted at `dir`. The directory itself is
    /// created when missing, but not its parents.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            fs::create_dir(&dir)?;
        }
        let mut state = State::default();
        let catalog_path = dir.join("catalog.json");
        if catalog_path.exists() {
            let text = fs::read_to_string(&catalog_path)?;
            let doc: CatalogDoc = serde_json::from_str(&text)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("catalog.json: {e}")))?;
            for class in doc.classes {
                for attr in &class.attributes {
                    if let Some(grid) = &attr.grid {
                        let compiled = compile(grid).map_err(|e| {
                            io::Error::new(io::ErrorKind::InvalidData, format!("stored grid {}: {e}", attr.name))
                        })?;
                        state.compiled.insert(key(&class.name, &attr.name), Arc::new(compiled));
                    }
                }
                state.classes.insert(class.name.clone(), class);
            }
            for inst in doc.instruments {
                let class = state.classes.get(&inst.class).ok_or_else(|| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("instrument {} has unknown class", inst.id))
                })?;
                for attr in class.attributes.iter().filter(|a| a.kind == AttributeKind::StoredSeries) {
                    let path = series_path(&dir, &inst.class, &inst.id, &attr.name);
                    if path.exists() {
                        let s = fgs::read_file(&path)?;
                        state.series.insert(key(&inst.id, &attr.name), Arc::new(s));
                    }
                }
                state.instruments.insert(inst.id.clone(), inst);
            }
            for s in doc.scalars {
                state.scalars.insert(key(&s.instrument, &s.attribute), s.value);
            }
        }
        Ok(Catalog { data_dir: Some(dir), state: RwLock::new(Arc::new(state)), writer: Mutex::new(()) })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    /// The current consistent view. Later writes do not affect it.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot { state: self.state.read().clone() }
    }

    fn mutate<R>(&self, f: impl FnOnce(&mut State, &mut Pending) -> Result<R>) -> Result<R> {
        let _guard = self.writer.lock();
        let mut next = State::clone(&self.state.read());
        let mut pending = Pending::default();
        let out = f(&mut next, &mut pending)?;
        if let Some(dir) = &self.data_dir {
            for (path, series) in &pending.series {
                fgs::write_file(&dir.join(path), series)?;
            }
            if pending.catalog {
                let doc = CatalogDoc {
                    classes: next.classes.values().cloned().collect(),
                    instruments: next.instruments.values().cloned().collect(),
                    scalars: next
                        .scalars
                        .iter()
                        .map(|((instrument, attr), &value)| ScalarEntry {
                            instrument: instrument.clone(),
                            attribute: attribute_name(&next, instrument, attr).unwrap_or_else(|| attr.clone()),
                            value,
                        })
                        .collect(),
                };
                let text = serde_json::to_string_pretty(&doc).expect("catalog serializes");
                fgs::write_atomic(&dir.join("catalog.json"), text.as_bytes())?;
            }
        }
        *self.state.write() = Arc::new(next);
        Ok(out)
    }

    pub fn define_class(&self, name: &str) -> Result<()> {
        schema::check_path_name("class name", name).map_err(CatalogError::Validation)?;
        self.mutate(|state, pending| {
            if state.classes.contains_key(name) {
                return Err(CatalogError::DuplicateClass(name.into()));
            }
            state.classes.insert(name.into(), InstrumentClass { name: name.into(), attributes: Vec::new() });
            pending.catalog = true;
            Ok(())
        })
    }

    pub fn define_attribute(&self, class: &str, def: AttributeDef) -> Result<()> {
        schema::check_attribute_name(&def.name).map_err(CatalogError::Validation)?;
        match (def.kind, &def.grid) {
            (AttributeKind::FormulaGrid, None) => {
                return Err(CatalogError::Validation("formula-grid attribute requires a grid".into()))
            }
            (AttributeKind::StoredSeries | AttributeKind::StoredScalar, Some(_)) => {
                return Err(CatalogError::Validation(format!("{} attribute cannot carry a grid", def.kind)))
            }
            _ => {}
        }
        let compiled = def.grid.as_ref().map(compile).transpose()?;
        self.mutate(|state, pending| {
            let existing = state.classes.get(class).ok_or_else(|| CatalogError::UnknownClass(class.into()))?;
            if existing.attribute(&def.name).is_some() {
                return Err(CatalogError::DuplicateAttribute { class: class.into(), attribute: def.name.clone() });
            }
            let mut candidate = existing.clone();
            candidate.attributes.push(def.clone());
            if let Some(compiled) = compiled {
                check_grid_dependencies(&candidate, &state.compiled, (&def.name, &compiled))?;
                state.compiled.insert(key(class, &def.name), Arc::new(compiled));
            }
            state.classes.insert(class.into(), candidate);
            pending.catalog = true;
            Ok(())
        })
    }

    /// Swaps the grid of an existing formula-grid attribute. The old grid
    /// stays active if the new one is rejected.
    pub fn replace_grid(&self, class: &str, attribute: &str, grid: FormulaGrid) -> Result<()> {
        let compiled = compile(&grid)?;
        self.mutate(|state, pending| {
            let existing = state.classes.get(class).ok_or_else(|| CatalogError::UnknownClass(class.into()))?;
            let attr = existing.attribute(attribute).ok_or_else(|| CatalogError::UnknownAttribute {
                class: class.into(),
                attribute: attribute.into(),
            })?;
            if attr.kind != AttributeKind::FormulaGrid {
                return Err(CatalogError::WrongKind {
                    attribute: attr.name.clone(),
                    expected: AttributeKind::FormulaGrid,
                    actual: attr.kind,
                });
            }
            let name = attr.name.clone();
            let mut candidate = existing.clone();
            for a in candidate.attributes.iter_mut().filter(|a| a.is_named(&name)) {
                a.grid = Some(grid.clone());
            }
            check_grid_dependencies(&candidate, &state.compiled, (&name, &compiled))?;
            state.compiled.insert(key(class, &name), Arc::new(compiled));
            state.classes.insert(class.into(), candidate);
            pending.catalog = true;
            Ok(())
        })
    }

    pub fn register_instrument(&self, instrument: Instrument) -> Result<()> {
        schema::check_path_name("instrument id", &instrument.id).map_err(CatalogError::Validation)?;
        self.mutate(|state, pending| {
            register(state, instrument)?;
            pending.catalog = true;
            Ok(())
        })
    }

    /// Merges a batch into the stored series. Any timestamp already stored
    /// rejects the whole batch and leaves the store unchanged.
    pub fn write_observations(&self, batch: ObservationBatch) -> Result<usize> {
        let incoming = ObservationSeries::new(batch.points.iter().copied())
            .map_err(|e| CatalogError::Validation(format!("invalid batch: {e}")))?;
        self.mutate(|state, pending| {
            let n = incoming.len();
            merge_into(state, pending, &batch.instrument_id, &batch.attribute, &incoming)?;
            Ok(n)
        })
    }

    pub fn write_scalar(&self, instrument_id: &str, attribute: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(CatalogError::Validation("scalar value must be finite".into()));
        }
        self.mutate(|state, pending| {
            let attr = stored_attribute(state, instrument_id, attribute, AttributeKind::StoredScalar)?;
            state.scalars.insert(key(instrument_id, &attr), value);
            pending.catalog = true;
            Ok(())
        })
    }

    pub fn read_series(&self, instrument_id: &str, attribute: &str, range: Option<(Timestamp, Timestamp)>) -> Result<ObservationSeries> {
        self.snapshot().read_series(instrument_id, attribute, range)
    }

    pub fn evaluate_attribute(&self, instrument_id: &str, attribute: &str) -> Result<Value> {
        self.snapshot().evaluate_attribute(instrument_id, attribute)
    }

    pub fn list_instruments(&self, class: &str) -> Result<Vec<Instrument>> {
        self.snapshot().list_instruments(Some(class))
    }
}

fn series_path(dir: &Path, class: &str, instrument: &str, attribute: &str) -> PathBuf {
    dir.join(relative_series_path(class, instrument, attribute))
}

fn relative_series_path(class: &str, instrument: &str, attribute: &str) -> PathBuf {
    Path::new(class).join(instrument).join(format!("{attribute}.fgs"))
}

/// Declared spelling of an attribute on an instrument's class.
fn attribute_name(state: &State, instrument: &str, attribute: &str) -> Option<String> {
    let inst = state.instruments.get(instrument)?;
    let class = state.classes.get(&inst.class)?;
    class.attribute(attribute).map(|a| a.name.clone())
}

fn register(state: &mut State, instrument: Instrument) -> Result<()> {
    if !state.classes.contains_key(&instrument.class) {
        return Err(CatalogError::UnknownClass(instrument.class));
    }
    if state.instruments.contains_key(&instrument.id) {
        return Err(CatalogError::DuplicateInstrument(instrument.id));
    }
    state.instruments.insert(instrument.id.clone(), instrument);
    Ok(())
}

/// Checks that the attribute exists with `kind` and returns its declared name.
fn stored_attribute(state: &State, instrument_id: &str, attribute: &str, kind: AttributeKind) -> Result<String> {
    let inst = state
        .instruments
        .get(instrument_id)
        .ok_or_else(|| CatalogError::UnknownInstrument(instrument_id.into()))?;
    let class = &state.classes[&inst.class];
    let attr = class.attribute(attribute).ok_or_else(|| CatalogError::UnknownAttribute {
        class: class.name.clone(),
        attribute: attribute.into(),
    })?;
    if attr.kind != kind {
        return Err(CatalogError::WrongKind { attribute: attr.name.clone(), expected: kind, actual: attr.kind });
    }
    Ok(attr.name.clone())
}

fn merge_into(
    state: &mut State,
    pending: &mut Pending,
    instrument_id: &str,
    attribute: &str,
    incoming: &ObservationSeries,
) -> Result<()> {
    let attr = stored_attribute(state, instrument_id, attribute, AttributeKind::StoredSeries)?;
    if incoming.is_empty() {
        return Ok(());
    }
    let k = key(instrument_id, &attr);
    let empty = Arc::new(ObservationSeries::empty());
    let existing = state.series.get(&k).unwrap_or(&empty);
    let merged = merge_series(existing, incoming).map_err(|timestamp| CatalogError::DuplicateTimestamp {
        instrument: instrument_id.into(),
        attribute: attr.clone(),
        timestamp,
    })?;
    let merged = Arc::new(merged);
    let class = &state.instruments[instrument_id].class;
    pending.series.retain(|(p, _)| *p != relative_series_path(class, instrument_id, &attr));
    pending.series.push((relative_series_path(class, instrument_id, &attr), merged.clone()));
    state.series.insert(k, merged);
    Ok(())
}

/// Sort-merge of two ordered series; a shared timestamp is an error.
fn merge_series(a: &ObservationSeries, b: &ObservationSeries) -> std::result::Result<ObservationSeries, Timestamp> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (a.iter().peekable(), b.iter().peekable());
    loop {
        match (x.peek(), y.peek()) {
            (Some(&p), Some(&q)) => {
                if p.0 == q.0 {
                    return Err(p.0);
                }
                out.push(if p.0 < q.0 { x.next() } else { y.next() }.expect("peeked"));
            }
            (Some(_), None) => out.extend(x.by_ref()),
            (None, Some(_)) => out.extend(y.by_ref()),
            (None, None) => break,
        }
    }
    Ok(ObservationSeries::new(out).expect("merge of valid series is valid"))
}

/// Every attribute a grid references must exist on the class, and
/// formula-grid attributes must not reach themselves through references.
fn check_grid_dependencies(
    class: &InstrumentClass,
    compiled: &HashMap<SeriesKey, Arc<CompiledGrid>>,
    (name, grid): (&str, &CompiledGrid),
) -> Result<()> {
    let grid_deps = |attr: &AttributeDef| -> BTreeSet<String> {
        let attrs = if attr.is_named(name) {
            grid.attributes().clone()
        } else {
            compiled.get(&key(&class.name, &attr.name)).map(|c| c.attributes().clone()).unwrap_or_default()
        };
        attrs.iter().map(|a| a.to_ascii_lowercase()).collect()
    };
    for dep in grid.attributes() {
        if class.attribute(dep).is_none() {
            return Err(CatalogError::UnresolvedDependency {
                class: class.name.clone(),
                attribute: name.into(),
                missing: dep.clone(),
            });
        }
    }
    let graph: BTreeMap<String, BTreeSet<String>> = class
        .attributes
        .iter()
        .filter(|a| a.kind == AttributeKind::FormulaGrid)
        .map(|a| {
            let deps = grid_deps(a)
                .into_iter()
                .filter(|d| class.attribute(d).is_some_and(|x| x.kind == AttributeKind::FormulaGrid))
                .collect();
            (a.name.to_ascii_lowercase(), deps)
        })
        .collect();
    let graph: BTreeMap<&str, BTreeSet<&str>> =
        graph.iter().map(|(k, v)| (k.as_str(), v.iter().map(String::as_str).collect())).collect();
    crate::grid::topological_order(&graph).map(|_| ()).map_err(|cycle| {
        let names = cycle
            .into_iter()
            .map(|n| class.attribute(n).map_or_else(|| n.to_string(), |a| a.name.clone()))
            .collect();
        CatalogError::AttributeCycle(names)
    })
}

/// A consistent read-only view of the store.
#[derive(Clone)]
pub struct Snapshot {
    state: Arc<State>,
}

impl Snapshot {
    pub fn classes(&self) -> Vec<InstrumentClass> {
        self.state.classes.values().cloned().collect()
    }

    pub fn class(&self, name: &str) -> Result<&InstrumentClass> {
        self.state.classes.get(name).ok_or_else(|| CatalogError::UnknownClass(name.into()))
    }

    pub fn instrument(&self, id: &str) -> Result<&Instrument> {
        self.state.instruments.get(id).ok_or_else(|| CatalogError::UnknownInstrument(id.into()))
    }

    /// Instruments ordered by id, optionally restricted to one class.
    pub fn list_instruments(&self, class: Option<&str>) -> Result<Vec<Instrument>> {
        if let Some(c) = class {
            self.class(c)?;
        }
        Ok(self
            .state
            .instruments
            .values()
            .filter(|i| class.is_none_or(|c| i.class == c))
            .cloned()
            .collect())
    }

    pub fn attribute(&self, instrument_id: &str, attribute: &str) -> Result<&AttributeDef> {
        let inst = self.instrument(instrument_id)?;
        let class = self.class(&inst.class)?;
        class.attribute(attribute).ok_or_else(|| CatalogError::UnknownAttribute {
            class: class.name.clone(),
            attribute: attribute.into(),
        })
    }

    pub fn grid(&self, class: &str, attribute: &str) -> Result<&FormulaGrid> {
        let c = self.class(class)?;
        let a = c.attribute(attribute).ok_or_else(|| CatalogError::UnknownAttribute {
            class: class.into(),
            attribute: attribute.into(),
        })?;
        a.grid.as_ref().ok_or(CatalogError::WrongKind {
            attribute: a.name.clone(),
            expected: AttributeKind::FormulaGrid,
            actual: a.kind,
        })
    }

    /// Points with `from <= t < to`, or the whole series. A series that was
    /// never written reads as empty.
    pub fn read_series(
        &self,
        instrument_id: &str,
        attribute: &str,
        range: Option<(Timestamp, Timestamp)>,
    ) -> Result<ObservationSeries> {
        let attr = stored_attribute(&self.state, instrument_id, attribute, AttributeKind::StoredSeries)?;
        let series = self.state.series.get(&key(instrument_id, &attr));
        Ok(match (series, range) {
            (None, _) => ObservationSeries::empty(),
            (Some(s), None) => ObservationSeries::clone(s),
            (Some(s), Some((from, to))) => s.range(from, to),
        })
    }

    /// The attribute's value for one instrument. Evaluation problems come
    /// back as error values; only unknown names are `Err`.
    pub fn evaluate_attribute(&self, instrument_id: &str, attribute: &str) -> Result<Value> {
        let attr = self.attribute(instrument_id, attribute)?;
        match attr.kind {
            AttributeKind::StoredSeries => Ok(Value::Series(self.read_series(instrument_id, attribute, None)?)),
            AttributeKind::StoredScalar => Ok(match self.state.scalars.get(&key(instrument_id, &attr.name)) {
                Some(&x) => Value::Scalar(x),
                None => Value::error(ErrorCode::Ref, format!("no value stored for {}", attr.name)),
            }),
            AttributeKind::FormulaGrid => Ok(self.evaluate_grid(instrument_id, attribute)?.1.result_value),
        }
    }

    /// Full grid evaluation, every cell included.
    pub fn evaluate_grid(&self, instrument_id: &str, attribute: &str) -> Result<(Arc<CompiledGrid>, GridResult)> {
        let attr = self.attribute(instrument_id, attribute)?;
        if attr.kind != AttributeKind::FormulaGrid {
            return Err(CatalogError::WrongKind {
                attribute: attr.name.clone(),
                expected: AttributeKind::FormulaGrid,
                actual: attr.kind,
            });
        }
        let class = &self.instrument(instrument_id)?.class;
        let compiled = self.state.compiled[&key(class, &attr.name)].clone();
        let ctx = |name: &str| match self.evaluate_attribute(instrument_id, name) {
            Ok(v) => v,
            Err(e) => Value::error(ErrorCode::Ref, e.to_string()),
        };
        let result = evaluate(&compiled, &ctx);
        Ok((compiled, result))
    }
}
