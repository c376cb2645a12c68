//! The standard library visible to Koord programs.

use crate::eval::Fault;
use crate::value::{Entry, Value, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectClass {
    Pure,
    SharedWrite,
    Actuator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `assign(list, i, owner)`: mark entry `i` of a shared list as taken.
    Assign,
    AllAssigned,
    IsAssigned,
    Len,
    Pos,
    /// Conflict-aware planning, provided by the host runtime.
    FindPath,
    /// Route-tube clearance test, provided by the host runtime.
    PathIsClear,
}

pub struct StdlibBinding {
    pub builtin: Builtin,
    pub name: &'static str,
    pub signature: &'static str,
    pub effect: EffectClass,
}

pub const STDLIB: &[StdlibBinding] = &[
    StdlibBinding {
        builtin: Builtin::Assign,
        name: "assign",
        signature: "assign(list<pos> var, int index, int owner)",
        effect: EffectClass::SharedWrite,
    },
    StdlibBinding {
        builtin: Builtin::AllAssigned,
        name: "allAssigned",
        signature: "allAssigned(list<pos>) -> bool",
        effect: EffectClass::Pure,
    },
    StdlibBinding {
        builtin: Builtin::IsAssigned,
        name: "isAssigned",
        signature: "isAssigned(list<pos>, int) -> bool",
        effect: EffectClass::Pure,
    },
    StdlibBinding { builtin: Builtin::Len, name: "len", signature: "len(list<pos>) -> int", effect: EffectClass::Pure },
    StdlibBinding {
        builtin: Builtin::Pos,
        name: "pos",
        signature: "pos(float, float, float) -> pos",
        effect: EffectClass::Pure,
    },
    StdlibBinding {
        builtin: Builtin::FindPath,
        name: "findPath",
        signature: "findPath(pos goal, list<pos>[pid] routes) -> list<pos>",
        effect: EffectClass::Pure,
    },
    StdlibBinding {
        builtin: Builtin::PathIsClear,
        name: "pathIsClear",
        signature: "pathIsClear(list<pos> path, list<pos>[pid] routes) -> bool",
        effect: EffectClass::Pure,
    },
];

impl Builtin {
    pub fn lookup(name: &str) -> Option<Builtin> {
        STDLIB.iter().find(|b| b.name == name).map(|b| b.builtin)
    }

    pub fn binding(self) -> &'static StdlibBinding {
        STDLIB.iter().find(|b| b.builtin == self).expect("every builtin has a binding")
    }

    pub fn name(self) -> &'static str {
        self.binding().name
    }

    /// Builtins whose implementation lives in the host (planner) rather than
    /// in the interpreter.
    pub fn is_external(self) -> bool {
        matches!(self, Builtin::FindPath | Builtin::PathIsClear)
    }
}

fn list_arg(args: &[Value], i: usize) -> Result<&[Entry], Fault> {
    args.get(i).and_then(Value::as_list).ok_or_else(|| Fault::Type(format!("argument {i} must be a list")))
}

fn int_arg(args: &[Value], i: usize) -> Result<i64, Fault> {
    args.get(i).and_then(Value::as_int).ok_or_else(|| Fault::Type(format!("argument {i} must be an int")))
}

pub(crate) fn entry_index(list: &[Entry], i: i64) -> Result<usize, Fault> {
    usize::try_from(i)
        .ok()
        .filter(|&u| u < list.len())
        .ok_or(Fault::IndexOutOfRange { index: i, len: list.len() })
}

/// Evaluate one of the interpreter-side pure builtins.
pub(crate) fn call_pure(b: Builtin, args: &[Value]) -> Result<Value, Fault> {
    match b {
        Builtin::AllAssigned => Ok(Value::Bool(list_arg(args, 0)?.iter().all(|e| e.owner.is_some()))),
        Builtin::IsAssigned => {
            let list = list_arg(args, 0)?;
            let i = entry_index(list, int_arg(args, 1)?)?;
            Ok(Value::Bool(list[i].owner.is_some()))
        }
        Builtin::Len => Ok(Value::Int(list_arg(args, 0)?.len() as i64)),
        Builtin::Pos => {
            let c = |i: usize| {
                args.get(i).and_then(Value::as_f64).ok_or_else(|| Fault::Type("pos() takes numbers".into()))
            };
            Ok(Value::Pos(Vec3::new(c(0)?, c(1)?, c(2)?)))
        }
        Builtin::Assign | Builtin::FindPath | Builtin::PathIsClear => {
            Err(Fault::Type(format!("`{}` is not an interpreter builtin", b.name())))
        }
    }
}

/// Mark entry `index` of `list` as owned by `owner`.
pub(crate) fn assign_entry(list: &mut [Entry], index: i64, owner: i64) -> Result<(), Fault> {
    let i = entry_index(list, index)?;
    let owner = u16::try_from(owner).map_err(|_| Fault::Type(format!("owner {owner} is not a pid")))?;
    list[i].owner = Some(owner);
    Ok(())
}
