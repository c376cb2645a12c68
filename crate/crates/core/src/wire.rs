//! Datagram layout of DSM update messages.
//!
//! ```text
//! offset size  field (big-endian)
//!      0    2  magic 0x4B52
//!      2    1  version 0x01
//!      3    1  kind: 0 write, 1 atomic_intent, 2 atomic_grant
//!      4    2  sender pid
//!      6    4  round
//!     10    2  var_id
//!     12    2  index (0xFFFF for scalars)
//!     14    2  payload length
//!     16    n  payload, little-endian, laid out by the variable's type
//! ```
//!
//! Payloads: int i64, float f64, bool u8, pos 3 x f64, list = u16 count then
//! per entry 3 x f64 and an i16 owner (-1 when unassigned).

use koord::{BaseType, Entry, Value, Vec3};
use thiserror::Error;

pub const MAGIC: u16 = 0x4B52;
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 16;
pub const SCALAR_INDEX: u16 = 0xFFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgKind {
    Write = 0,
    AtomicIntent = 1,
    AtomicGrant = 2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: MsgKind,
    pub sender: u16,
    pub round: u32,
    pub var_id: u16,
    pub index: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("datagram of {0} bytes is shorter than the header")]
    Truncated(usize),
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message kind {0}")]
    BadKind(u8),
    #[error("payload length {declared} does not match the {actual} bytes present")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("payload of {0} bytes does not fit a datagram")]
    TooLong(usize),
    #[error("malformed {ty} payload")]
    BadPayload { ty: BaseType },
    #[error("value {value} does not have type {ty}")]
    TypeMismatch { value: String, ty: BaseType },
}

impl Frame {
    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let len = u16::try_from(self.payload.len()).map_err(|_| WireError::TooLong(self.payload.len()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC.to_be_bytes());
        out.push(VERSION);
        out.push(self.kind as u8);
        out.extend_from_slice(&self.sender.to_be_bytes());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&self.var_id.to_be_bytes());
        out.extend_from_slice(&self.index.to_be_bytes());
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<Frame, WireError> {
        if buf.len() < HEADER_LEN {
            return Err(WireError::Truncated(buf.len()));
        }
        let be16 = |i: usize| u16::from_be_bytes([buf[i], buf[i + 1]]);
        let magic = be16(0);
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        if buf[2] != VERSION {
            return Err(WireError::BadVersion(buf[2]));
        }
        let kind = match buf[3] {
            0 => MsgKind::Write,
            1 => MsgKind::AtomicIntent,
            2 => MsgKind::AtomicGrant,
            k => return Err(WireError::BadKind(k)),
        };
        let declared = usize::from(be16(14));
        let actual = buf.len() - HEADER_LEN;
        if declared != actual {
            return Err(WireError::LengthMismatch { declared, actual });
        }
        Ok(Frame {
            kind,
            sender: be16(4),
            round: u32::from_be_bytes([buf[6], buf[7], buf[8], buf[9]]),
            var_id: be16(10),
            index: be16(12),
            payload: buf[HEADER_LEN..].to_vec(),
        })
    }
}

fn put_vec3(out: &mut Vec<u8>, p: Vec3) {
    for c in [p.x, p.y, p.z] {
        out.extend_from_slice(&c.to_le_bytes());
    }
}

/// Serialize `value` as a payload of type `ty`.
pub fn encode_value(value: &Value, ty: BaseType) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::new();
    match (ty, value) {
        (BaseType::Int, Value::Int(i)) => out.extend_from_slice(&i.to_le_bytes()),
        (BaseType::Float, Value::Float(x)) => out.extend_from_slice(&x.to_le_bytes()),
        (BaseType::Bool, Value::Bool(b)) => out.push(u8::from(*b)),
        (BaseType::Pos, Value::Pos(p)) => put_vec3(&mut out, *p),
        (BaseType::PosList, Value::List(entries)) => {
            let n = u16::try_from(entries.len()).map_err(|_| WireError::TooLong(entries.len()))?;
            out.extend_from_slice(&n.to_le_bytes());
            for e in entries {
                put_vec3(&mut out, e.at);
                let owner = e.owner.map_or(Ok(-1), i16::try_from).map_err(|_| WireError::TooLong(entries.len()))?;
                out.extend_from_slice(&owner.to_le_bytes());
            }
        }
        _ => return Err(WireError::TypeMismatch { value: value.to_string(), ty }),
    }
    if out.len() > usize::from(u16::MAX) {
        return Err(WireError::TooLong(out.len()));
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    ty: BaseType,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        if self.buf.len() < N {
            return Err(WireError::BadPayload { ty: self.ty });
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn f64(&mut self) -> Result<f64, WireError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn vec3(&mut self) -> Result<Vec3, WireError> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
}

/// Parse a payload of type `ty`; the whole buffer must be consumed.
pub fn decode_value(buf: &[u8], ty: BaseType) -> Result<Value, WireError> {
    let mut r = Reader { buf, ty };
    let v = match ty {
        BaseType::Int => Value::Int(i64::from_le_bytes(r.take()?)),
        BaseType::Float => Value::Float(r.f64()?),
        BaseType::Bool => match r.take::<1>()?[0] {
            0 => Value::Bool(false),
            1 => Value::Bool(true),
            _ => return Err(WireError::BadPayload { ty }),
        },
        BaseType::Pos => Value::Pos(r.vec3()?),
        BaseType::PosList => {
            let n = u16::from_le_bytes(r.take()?);
            let mut entries = Vec::with_capacity(usize::from(n).min(buf.len() / 26 + 1));
            for _ in 0..n {
                let at = r.vec3()?;
                let owner = match i16::from_le_bytes(r.take()?) {
                    -1 => None,
                    o if o >= 0 => Some(o as u16),
                    _ => return Err(WireError::BadPayload { ty }),
                };
                entries.push(Entry { at, owner });
            }
            Value::List(entries)
        }
    };
    if !r.buf.is_empty() {
        return Err(WireError::BadPayload { ty });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_big_endian() {
        let f = Frame { kind: MsgKind::Write, sender: 2, round: 7, var_id: 1, index: SCALAR_INDEX, payload: vec![0xAA] };
        let bytes = f.encode().unwrap();
        assert_eq!(bytes, [0x4B, 0x52, 0x01, 0x00, 0x00, 0x02, 0, 0, 0, 7, 0x00, 0x01, 0xFF, 0xFF, 0x00, 0x01, 0xAA]);
        assert_eq!(Frame::decode(&bytes).unwrap(), f);
    }

    #[test]
    fn payloads_are_little_endian() {
        assert_eq!(encode_value(&Value::Int(1), BaseType::Int).unwrap(), [1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(encode_value(&Value::Bool(true), BaseType::Bool).unwrap(), [1]);
        let list = Value::List(vec![Entry { at: Vec3::ZERO, owner: Some(3) }]);
        let bytes = encode_value(&list, BaseType::PosList).unwrap();
        assert_eq!(bytes.len(), 2 + 26);
        assert_eq!(&bytes[..2], [1, 0]);
        assert_eq!(&bytes[26..], [3, 0]);
        assert_eq!(decode_value(&bytes, BaseType::PosList).unwrap(), list);
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(Frame::decode(&[0; 4]), Err(WireError::Truncated(4)));
        let mut bytes = Frame { kind: MsgKind::AtomicIntent, sender: 0, round: 0, var_id: 0, index: 0, payload: vec![] }
            .encode()
            .unwrap();
        bytes[3] = 9;
        assert_eq!(Frame::decode(&bytes), Err(WireError::BadKind(9)));
        bytes.push(0);
        bytes[3] = 1;
        assert!(matches!(Frame::decode(&bytes), Err(WireError::LengthMismatch { declared: 0, actual: 1 })));
        assert!(decode_value(&[2], BaseType::Bool).is_err());
        assert!(decode_value(&[0; 9], BaseType::Int).is_err());
        assert!(encode_value(&Value::Int(1), BaseType::Float).is_err());
    }
}
