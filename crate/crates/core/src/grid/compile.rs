use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FormulaGrid;
use crate::formula::{parse, CellAddress, Expr};
use crate::value::ErrorCode;

/// One problem found while compiling a grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileIssue {
    pub address: Option<CellAddress>,
    pub code: ErrorCode,
    pub message: String,
    /// 1-based character position inside the cell formula, for `#PARSE`.
    #[serde(default)]
    pub position: Option<usize>,
}

impl fmt::Display for CompileIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = self.address {
            write!(f, "{a}: ")?;
        }
        write!(f, "{}", self.code)?;
        if let Some(p) = self.position {
            write!(f, " at {p}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct CompileError {
    pub issues: Vec<CompileIssue>,
}

impl CompileError {
    /// Addresses of every cell reported with `code`, in row-major order.
    pub fn addresses(&self, code: ErrorCode) -> Vec<CellAddress> {
        let set: BTreeSet<_> = self.issues.iter().filter(|i| i.code == code).filter_map(|i| i.address).collect();
        set.into_iter().collect()
    }

    pub fn has_code(&self, code: ErrorCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycle = self.addresses(ErrorCode::Cycle);
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            let r = if first { Ok(()) } else { f.write_str("; ") };
            first = false;
            r
        };
        if !cycle.is_empty() {
            sep(f)?;
            let names: Vec<_> = cycle.iter().map(ToString::to_string).collect();
            write!(f, "{}: {}", ErrorCode::Cycle, names.join(","))?;
        }
        for issue in self.issues.iter().filter(|i| i.code != ErrorCode::Cycle) {
            sep(f)?;
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// A grid whose formulas parsed, whose references resolve inside the grid,
/// and whose reference graph is acyclic.
#[derive(Debug, Clone)]
pub struct CompiledGrid {
    grid: FormulaGrid,
    exprs: BTreeMap<CellAddress, Expr>,
    attributes: BTreeSet<String>,
    order: Vec<CellAddress>,
}

impl CompiledGrid {
    pub fn grid(&self) -> &FormulaGrid {
        &self.grid
    }

    pub fn expr(&self, address: CellAddress) -> Option<&Expr> {
        self.exprs.get(&address)
    }

    /// Attribute names referenced anywhere in the grid, as written.
    pub fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }

    /// Every cell once, each after all the cells it references.
    pub fn order(&self) -> &[CellAddress] {
        &self.order
    }
}

pub fn compile(grid: &FormulaGrid) -> Result<CompiledGrid, CompileError> {
    let mut issues = Vec::new();
    if grid.cells.is_empty() {
        issues.push(CompileIssue {
            address: None,
            code: ErrorCode::Ref,
            message: "grid has no cells".into(),
            position: None,
        });
    } else if !grid.cells.contains_key(&grid.result) {
        issues.push(CompileIssue {
            address: Some(grid.result),
            code: ErrorCode::Ref,
            message: format!("result cell {} is not defined", grid.result),
            position: None,
        });
    }

    let mut exprs = BTreeMap::new();
    for (&address, cell) in &grid.cells {
        match parse(&cell.formula) {
            Ok(e) => {
                exprs.insert(address, e);
            }
            Err(e) => issues.push(CompileIssue {
                address: Some(address),
                code: ErrorCode::Parse,
                message: e.message,
                position: Some(e.position),
            }),
        }
    }
    if !issues.is_empty() {
        return Err(CompileError { issues });
    }

    let mut deps: BTreeMap<CellAddress, BTreeSet<CellAddress>> = BTreeMap::new();
    let mut attributes = BTreeSet::new();
    for (&address, e) in &exprs {
        let d = e.dependencies();
        for missing in d.cells.iter().filter(|c| !exprs.contains_key(c)) {
            issues.push(CompileIssue {
                address: Some(address),
                code: ErrorCode::Ref,
                message: format!("references undefined cell {missing}"),
                position: None,
            });
        }
        attributes.extend(d.attributes);
        deps.insert(address, d.cells);
    }
    if !issues.is_empty() {
        return Err(CompileError { issues });
    }

    match topological_order(&deps) {
        Ok(order) => Ok(CompiledGrid { grid: grid.clone(), exprs, attributes, order }),
        Err(cyclic) => {
            let names: Vec<_> = cyclic.iter().map(ToString::to_string).collect();
            let message = format!("part of a reference cycle among {}", names.join(","));
            let issues = cyclic
                .into_iter()
                .map(|address| CompileIssue {
                    address: Some(address),
                    code: ErrorCode::Cycle,
                    message: message.clone(),
                    position: None,
                })
                .collect();
            Err(CompileError { issues })
        }
    }
}

/// Kahn's algorithm; among ready cells the row-major smallest goes first.
/// On failure returns every cell that lies on at least one cycle.
pub(crate) fn topological_order<K: Ord + Copy>(deps: &BTreeMap<K, BTreeSet<K>>) -> Result<Vec<K>, Vec<K>> {
    let mut pending: BTreeMap<K, usize> = deps.iter().map(|(&k, d)| (k, d.len())).collect();
    let mut dependents: BTreeMap<K, Vec<K>> = BTreeMap::new();
    for (&k, d) in deps {
        for &dep in d {
            dependents.entry(dep).or_default().push(k);
        }
    }
    let mut ready: BTreeSet<K> = pending.iter().filter(|(_, &n)| n == 0).map(|(&k, _)| k).collect();
    let mut order = Vec::with_capacity(deps.len());
    while let Some(k) = ready.pop_first() {
        order.push(k);
        for &d in dependents.get(&k).into_iter().flatten() {
            let n = pending.get_mut(&d).expect("dependent is a node");
            *n -= 1;
            if *n == 0 {
                ready.insert(d);
            }
        }
    }
    if order.len() == deps.len() {
        Ok(order)
    } else {
        let done: BTreeSet<K> = order.into_iter().collect();
        let rest: BTreeMap<K, BTreeSet<K>> = deps
            .iter()
            .filter(|(k, _)| !done.contains(k))
            .map(|(&k, d)| (k, d.iter().copied().filter(|x| !done.contains(x)).collect()))
            .collect();
        Err(nodes_on_cycles(&rest))
    }
}

/// Kosaraju's strongly connected components, iteratively. A node is on a
/// cycle if its component has more than one member or it references itself.
fn nodes_on_cycles<K: Ord + Copy>(graph: &BTreeMap<K, BTreeSet<K>>) -> Vec<K> {
    let mut visited = BTreeSet::new();
    let mut finish = Vec::with_capacity(graph.len());
    for &start in graph.keys() {
        if !visited.insert(start) {
            continue;
        }
        let mut stack = vec![(start, graph[&start].iter())];
        while let Some((node, iter)) = stack.last_mut() {
            let node = *node;
            match iter.find(|n| graph.contains_key(n) && !visited.contains(*n)).copied() {
                Some(next) => {
                    visited.insert(next);
                    stack.push((next, graph[&next].iter()));
                }
                None => {
                    finish.push(node);
                    stack.pop();
                }
            }
        }
    }

    let mut reverse: BTreeMap<K, Vec<K>> = BTreeMap::new();
    for (&k, d) in graph {
        for &dep in d {
            reverse.entry(dep).or_default().push(k);
        }
    }
    let mut assigned = BTreeSet::new();
    let mut on_cycle = Vec::new();
    for &root in finish.iter().rev() {
        if !assigned.insert(root) {
            continue;
        }
        let mut component = vec![root];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            for &m in reverse.get(&n).into_iter().flatten() {
                if assigned.insert(m) {
                    component.push(m);
                    stack.push(m);
                }
            }
        }
        if component.len() > 1 || graph[&root].contains(&root) {
            on_cycle.extend(component);
        }
    }
    on_cycle.sort();
    on_cycle
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> CellAddress {
        s.parse().unwrap()
    }

    fn names(v: &[CellAddress]) -> Vec<String> {
        v.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn vwap_order_and_attributes() {
        let c = compile(&FormulaGrid::vwap()).unwrap();
        assert_eq!(names(c.order()), ["A1", "A2", "A3", "A4", "A5", "A6"]);
        let attrs: Vec<_> = c.attributes().iter().cloned().collect();
        assert_eq!(attrs, ["TradePrice", "TradeSize"]);
    }

    #[test]
    fn ties_break_row_major() {
        let g = FormulaGrid::new(addr("A3"))
            .with_cell("A3", "=B1+A2", false)
            .with_cell("B1", "=1", false)
            .with_cell("A2", "=2", false)
            .with_cell("C1", "=A3", false);
        let c = compile(&g).unwrap();
        assert_eq!(names(c.order()), ["B1", "A2", "A3", "C1"]);
    }

    #[test]
    fn two_cell_cycle() {
        let g = FormulaGrid::new(addr("A1")).with_cell("A1", "=B1", false).with_cell("B1", "=A1", false);
        let err = compile(&g).unwrap_err();
        assert_eq!(names(&err.addresses(ErrorCode::Cycle)), ["A1", "B1"]);
        assert_eq!(err.to_string(), "#CYCLE: A1,B1");
    }

    #[test]
    fn cycle_report_excludes_downstream_cells() {
        let g = FormulaGrid::new(addr("A1"))
            .with_cell("A1", "=B1", false)
            .with_cell("B1", "=A1+C1", false)
            .with_cell("C1", "=1", false)
            .with_cell("D1", "=A1", false)
            .with_cell("E1", "=E1", false);
        let err = compile(&g).unwrap_err();
        assert_eq!(names(&err.addresses(ErrorCode::Cycle)), ["A1", "B1", "E1"]);
    }

    #[test]
    fn dangling_reference() {
        let g = FormulaGrid::new(addr("A1")).with_cell("A1", "=Z9", false);
        let err = compile(&g).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].code, ErrorCode::Ref);
        assert_eq!(err.issues[0].address, Some(addr("A1")));
        assert!(err.issues[0].message.contains("Z9"));
    }

    #[test]
    fn parse_errors_report_every_bad_cell() {
        let g = FormulaGrid::new(addr("A1"))
            .with_cell("A1", "=SUMM(A2)", false)
            .with_cell("A2", "=1", false)
            .with_cell("A3", "=A4/", false);
        let err = compile(&g).unwrap_err();
        let parse: Vec<_> = err.issues.iter().map(|i| (i.address.unwrap().to_string(), i.position)).collect();
        assert_eq!(parse, [("A1".to_string(), Some(2)), ("A3".to_string(), Some(5))]);
    }

    #[test]
    fn missing_result_and_empty_grid() {
        let err = compile(&FormulaGrid::new(addr("A1"))).unwrap_err();
        assert_eq!(err.issues[0].code, ErrorCode::Ref);
        let err = compile(&FormulaGrid::new(addr("B2")).with_cell("A1", "=1", false)).unwrap_err();
        assert_eq!(err.issues[0].address, Some(addr("B2")));
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let mut g = FormulaGrid::new(addr("A1")).with_cell("A1", "=1", false);
        for r in 2..=5000u32 {
            let a = CellAddress::new(1, r).unwrap();
            g.cells.insert(a, super::super::CellDef::new(format!("=A{}", r - 1), false));
        }
        assert_eq!(compile(&g).unwrap().order().len(), 5000);
        g.cells.insert(addr("A1"), super::super::CellDef::new("=A5000", false));
        assert_eq!(compile(&g).unwrap_err().addresses(ErrorCode::Cycle).len(), 5000);
    }
}
