//! Runtime values and the declared types they inhabit.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A point or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// One element of a `list<pos>`.
///
/// Lists double as task lists: `assign` stamps an owner pid onto an entry and
/// `isAssigned`/`allAssigned` read it back. Paths never carry owners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub at: Vec3,
    pub owner: Option<u16>,
}

impl Entry {
    pub const fn new(at: Vec3) -> Self {
        Self { at, owner: None }
    }
}

/// Declared variable types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int,
    Float,
    Bool,
    Pos,
    PosList,
}

impl BaseType {
    pub fn default_value(self) -> Value {
        match self {
            BaseType::Int => Value::Int(0),
            BaseType::Float => Value::Float(0.0),
            BaseType::Bool => Value::Bool(false),
            BaseType::Pos => Value::Pos(Vec3::ZERO),
            BaseType::PosList => Value::List(Vec::new()),
        }
    }

    /// Whether a value of this type may be stored in a slot of type `self`.
    pub fn admits(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (BaseType::Int, Value::Int(_))
                | (BaseType::Float, Value::Float(_))
                | (BaseType::Bool, Value::Bool(_))
                | (BaseType::Pos, Value::Pos(_))
                | (BaseType::PosList, Value::List(_))
        )
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseType::Int => "int",
            BaseType::Float => "float",
            BaseType::Bool => "bool",
            BaseType::Pos => "pos",
            BaseType::PosList => "list<pos>",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Pos(Vec3),
    List(Vec<Entry>),
    /// Every cell of a pid-indexed array, in pid order. Only ever produced as
    /// a builtin argument.
    Array(Vec<Value>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Pos(_) => "pos",
            Value::List(_) => "list<pos>",
            Value::Array(_) => "array",
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Numeric view with int-to-float promotion.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_pos(&self) -> Option<Vec3> {
        match self {
            Value::Pos(p) => Some(*p),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Entry]> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    /// Convert to `ty`, promoting ints where a float is expected.
    pub fn coerce(self, ty: BaseType) -> Option<Value> {
        match (ty, self) {
            (BaseType::Float, Value::Int(i)) => Some(Value::Float(i as f64)),
            (ty, v) if ty.admits(&v) => Some(v),
            _ => None,
        }
    }

    pub fn path(points: impl IntoIterator<Item = Vec3>) -> Value {
        Value::List(points.into_iter().map(Entry::new).collect())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Pos(p) => write!(f, "{p}"),
            Value::List(l) => {
                f.write_str("[")?;
                for (i, e) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", e.at)?;
                    if let Some(o) = e.owner {
                        write!(f, "@{o}")?;
                    }
                }
                f.write_str("]")
            }
            Value::Array(cells) => {
                f.write_str("{")?;
                for (i, c) in cells.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("}")
            }
        }
    }
}
