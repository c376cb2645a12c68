//! Per-agent replica of the shared variables.
//!
//! Every cell carries the version of the write that produced it. A write
//! from a later round wins; within one round the lowest sender pid wins.
//! The declared initial value is older than any write.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use koord::lower::{ExecutableEventTable, VarId};
use koord::{BaseType, Value};

/// `(round, sender)` of the write a cell holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Version {
    pub round: u32,
    pub sender: u16,
}

impl Version {
    /// Ordering where greater means "supersedes".
    pub fn precedence(&self, other: &Version) -> Ordering {
        self.round.cmp(&other.round).then(other.sender.cmp(&self.sender))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    value: Value,
    version: Option<Version>,
}

#[derive(Debug, Clone, PartialEq)]
struct Var {
    ty: BaseType,
    indexed: bool,
    cells: Vec<Cell>,
}

/// Outcome of applying one write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Updated,
    /// Same version already present.
    Duplicate,
    /// An equal-round write from a lower pid, or a later write, is kept.
    Superseded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedStore {
    vars: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("no shared variable with id {0}")]
    UnknownVar(VarId),
    #[error("cell {index} out of range for `{var}`")]
    BadIndex { var: VarId, index: usize },
    #[error("value of type {found} written to {ty} variable")]
    Type { found: &'static str, ty: BaseType },
}

impl SharedStore {
    /// Store holding the declared initial values. `init` overrides them by
    /// name; for a pid-indexed variable an `Array` sets each cell and any
    /// other value sets every cell.
    pub fn new(table: &ExecutableEventTable, num_agents: usize, init: &BTreeMap<String, Value>) -> Self {
        let vars = table
            .shared
            .iter()
            .map(|v| {
                let width = if v.indexed { num_agents } else { 1 };
                let start = init.get(&v.name).unwrap_or(&v.init);
                let cells = (0..width)
                    .map(|i| {
                        let value = match start {
                            Value::Array(vs) => vs.get(i).cloned().unwrap_or_else(|| v.init.clone()),
                            other => other.clone(),
                        };
                        let value = value.coerce(v.ty).unwrap_or_else(|| v.ty.default_value());
                        Cell { value, version: None }
                    })
                    .collect();
                Var { ty: v.ty, indexed: v.indexed, cells }
            })
            .collect();
        Self { vars }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn ty(&self, var: VarId) -> Option<BaseType> {
        self.vars.get(usize::from(var)).map(|v| v.ty)
    }

    pub fn is_indexed(&self, var: VarId) -> bool {
        self.vars.get(usize::from(var)).is_some_and(|v| v.indexed)
    }

    fn slot(&self, var: VarId, cell: Option<usize>) -> Result<(usize, usize), StoreError> {
        let v = self.vars.get(usize::from(var)).ok_or(StoreError::UnknownVar(var))?;
        let i = cell.unwrap_or(0);
        if i >= v.cells.len() || cell.is_some() != v.indexed {
            return Err(StoreError::BadIndex { var, index: i });
        }
        Ok((usize::from(var), i))
    }

    pub fn get(&self, var: VarId, cell: Option<usize>) -> Option<&Value> {
        let (v, i) = self.slot(var, cell).ok()?;
        Some(&self.vars[v].cells[i].value)
    }

    pub fn version(&self, var: VarId, cell: Option<usize>) -> Option<Version> {
        let (v, i) = self.slot(var, cell).ok()?;
        self.vars[v].cells[i].version
    }

    /// Last-writer-wins merge of one write.
    pub fn apply(&mut self, var: VarId, cell: Option<usize>, value: Value, version: Version) -> Result<Applied, StoreError> {
        let (v, i) = self.slot(var, cell)?;
        let ty = self.vars[v].ty;
        let found = value.type_name();
        let value = value.coerce(ty).ok_or(StoreError::Type { found, ty })?;
        let c = &mut self.vars[v].cells[i];
        let outcome = match c.version {
            Some(old) if old == version => Applied::Duplicate,
            Some(old) if version.precedence(&old) == Ordering::Less => Applied::Superseded,
            _ => Applied::Updated,
        };
        if outcome == Applied::Updated {
            *c = Cell { value, version: Some(version) };
        }
        Ok(outcome)
    }

    /// Every cell of `var` in pid order.
    pub fn cells(&self, var: VarId) -> impl Iterator<Item = &Value> {
        self.vars.get(usize::from(var)).into_iter().flat_map(|v| v.cells.iter().map(|c| &c.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ExecutableEventTable {
        koord::compile("allwrite:\n  int x[pid]\n  int g = 5\nevent E {\n  pre: true\n  eff: { x[pid] = 1 }\n}\n", 3).unwrap().0
    }

    #[test]
    fn initial_values_and_overrides() {
        let t = table();
        let mut init = BTreeMap::new();
        init.insert("x".to_string(), Value::Array(vec![Value::Int(7), Value::Int(8), Value::Int(9)]));
        let s = SharedStore::new(&t, 3, &init);
        assert_eq!(s.get(0, Some(2)), Some(&Value::Int(9)));
        assert_eq!(s.get(1, None), Some(&Value::Int(5)));
        assert_eq!(s.get(1, Some(0)), None);
        assert_eq!(s.get(0, None), None);
    }

    #[test]
    fn last_writer_wins_with_lowest_pid_tiebreak() {
        let mut s = SharedStore::new(&table(), 3, &BTreeMap::new());
        let v = |round, sender| Version { round, sender };
        assert_eq!(s.apply(1, None, Value::Int(1), v(3, 2)).unwrap(), Applied::Updated);
        assert_eq!(s.apply(1, None, Value::Int(1), v(3, 2)).unwrap(), Applied::Duplicate);
        assert_eq!(s.apply(1, None, Value::Int(0), v(3, 1)).unwrap(), Applied::Updated);
        assert_eq!(s.apply(1, None, Value::Int(2), v(3, 2)).unwrap(), Applied::Superseded);
        assert_eq!(s.apply(1, None, Value::Int(9), v(2, 0)).unwrap(), Applied::Superseded);
        assert_eq!(s.get(1, None), Some(&Value::Int(0)));
        assert_eq!(s.apply(1, None, Value::Int(4), v(4, 2)).unwrap(), Applied::Updated);
        assert_eq!(s.get(1, None), Some(&Value::Int(4)));
        assert!(s.apply(1, None, Value::Bool(true), v(5, 0)).is_err());
    }
}
