use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::CompiledGrid;
use crate::formula::{CellAddress, Expr};
use crate::value::{aggregate, elementwise, negate, AlignmentPolicy, ErrorCode, Value};

/// Supplies attribute values for one instrument.
///
/// Names arrive as written in the formula; implementations match them
/// case-insensitively. Unknown names should resolve to a `#REF` error.
pub trait EvaluationContext {
    fn resolve(&self, name: &str) -> Value;
}

impl<F: Fn(&str) -> Value> EvaluationContext for F {
    fn resolve(&self, name: &str) -> Value {
        self(name)
    }
}

/// A fixed name → value table.
#[derive(Debug, Clone, Default)]
pub struct StaticContext {
    values: HashMap<String, Value>,
}

impl StaticContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: &str, value: impl Into<Value>) {
        self.values.insert(name.to_ascii_lowercase(), value.into());
    }
}

impl EvaluationContext for StaticContext {
    fn resolve(&self, name: &str) -> Value {
        self.values
            .get(&name.to_ascii_lowercase())
            .cloned()
            .unwrap_or_else(|| Value::error(ErrorCode::Ref, format!("unknown attribute '{name}'")))
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub cell_values: BTreeMap<CellAddress, Value>,
    pub result_address: CellAddress,
    pub result_value: Value,
    hidden: BTreeMap<CellAddress, bool>,
}

impl GridResult {
    /// Values of the cells not marked hidden.
    pub fn visible_values(&self) -> BTreeMap<CellAddress, &Value> {
        self.cell_values
            .iter()
            .filter(|(a, _)| !self.hidden.get(a).copied().unwrap_or(false))
            .map(|(&a, v)| (a, v))
            .collect()
    }

    pub fn is_hidden(&self, address: CellAddress) -> bool {
        self.hidden.get(&address).copied().unwrap_or(false)
    }

    /// Same cell values and result, compared bit for bit.
    pub fn values_bit_eq(&self, other: &GridResult) -> bool {
        self.result_address == other.result_address
            && self.result_value.bit_eq(&other.result_value)
            && self.cell_values.len() == other.cell_values.len()
            && self.cell_values.iter().zip(&other.cell_values).all(|((a, x), (b, y))| a == b && x.bit_eq(y))
    }
}

struct Evaluator<'a> {
    ctx: &'a dyn EvaluationContext,
    policy: AlignmentPolicy,
    // Shared so cell and attribute references never copy a series.
    cells: BTreeMap<CellAddress, Rc<Value>>,
    // One resolve per attribute name per evaluation.
    attributes: HashMap<String, Rc<Value>>,
}

impl Evaluator<'_> {
    fn eval(&mut self, e: &Expr) -> Rc<Value> {
        match e {
            Expr::Number(x) => Rc::new(Value::Scalar(*x)),
            Expr::Cell(a) => self
                .cells
                .get(a)
                .cloned()
                .unwrap_or_else(|| Rc::new(Value::error(ErrorCode::Ref, format!("cell {a} not evaluated")))),
            Expr::Attr(name) => {
                let key = name.to_ascii_lowercase();
                if let Some(v) = self.attributes.get(&key) {
                    return v.clone();
                }
                let v = Rc::new(self.ctx.resolve(name));
                self.attributes.insert(key, v.clone());
                v
            }
            Expr::Binary { op, left, right } => {
                let l = self.eval(left);
                let r = self.eval(right);
                Rc::new(elementwise(*op, &l, &r, self.policy))
            }
            Expr::Neg(inner) => Rc::new(negate(&self.eval(inner))),
            Expr::Call { func, args } => match args.as_slice() {
                [arg] => {
                    let v = self.eval(arg);
                    Rc::new(aggregate(*func, &v))
                }
                _ => Rc::new(Value::error(ErrorCode::Type, format!("{func} takes exactly one argument"))),
            },
        }
    }
}

/// Evaluates every cell in dependency order. Failures become error values
/// in the affected cells; independent cells still evaluate.
pub fn evaluate(compiled: &CompiledGrid, ctx: &dyn EvaluationContext) -> GridResult {
    let grid = compiled.grid();
    let mut ev = Evaluator { ctx, policy: grid.alignment, cells: BTreeMap::new(), attributes: HashMap::new() };
    for &address in compiled.order() {
        let expr = compiled.expr(address).expect("compiled cell");
        let v = ev.eval(expr);
        ev.cells.insert(address, v);
    }
    let result_value = Value::clone(&ev.cells[&grid.result]);
    drop(ev.attributes);
    // Cells still sharing a value (`A2 = A1`) pay one copy here.
    let cell_values = ev.cells.into_iter().map(|(a, v)| (a, Rc::unwrap_or_clone(v))).collect();
    GridResult {
        cell_values,
        result_address: grid.result,
        result_value,
        hidden: grid.cells.iter().map(|(&a, c)| (a, c.hidden)).collect(),
    }
}
