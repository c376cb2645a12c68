//! Run traces: `# ` header lines, then one record per line with four
//! tab-separated columns, `time pid kind payload`:
//!
//! ```text
//! # koordsim trace 1
//! # num_robots: 2
//! ...
//! 0.000000 <TAB> 0 <TAB> event <TAB> Plan
//! 0.000000 <TAB> 0 <TAB> pose <TAB> 0.5 3.2 0 0 1
//! 0.050000 <TAB> 0 <TAB> msg <TAB> write route[0] bytes=44 copies=1
//! ```
//!
//! Records are sorted by time, then pid, then kind in the order event,
//! pose, msg, grant, monitor. Times are whole microseconds.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use koord::Vec3;
use thiserror::Error;

pub const MAGIC: &str = "koordsim trace 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecordKind {
    Event,
    Pose,
    Msg,
    Grant,
    Monitor,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Event => "event",
            Self::Pose => "pose",
            Self::Msg => "msg",
            Self::Grant => "grant",
            Self::Monitor => "monitor",
        }
    }
}

impl FromStr for RecordKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "event" => Self::Event,
            "pose" => Self::Pose,
            "msg" => Self::Msg,
            "grant" => Self::Grant,
            "monitor" => Self::Monitor,
            _ => return Err(()),
        })
    }
}

/// Simulated time in microseconds.
pub type Micros = u64;

pub fn to_micros(t: f64) -> Micros {
    (t * 1e6).round().max(0.0) as Micros
}

pub fn seconds(t: Micros) -> f64 {
    t as f64 / 1e6
}

pub fn fmt_time(t: Micros) -> String {
    format!("{}.{:06}", t / 1_000_000, t % 1_000_000)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub time: Micros,
    pub pid: u16,
    pub kind: RecordKind,
    pub payload: String,
}

impl Record {
    pub fn key(&self) -> (Micros, u16, RecordKind) {
        (self.time, self.pid, self.kind)
    }
}

/// Parsed payload of a pose record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    pub at: Vec3,
    pub yaw: f64,
    pub reached: bool,
}

pub fn pose_payload(at: Vec3, yaw: f64, reached: bool) -> String {
    format!("{} {} {} {} {}", at.x, at.y, at.z, yaw, u8::from(reached))
}

pub fn parse_pose(payload: &str) -> Option<PoseSample> {
    let mut it = payload.split(' ');
    let mut f = || it.next()?.parse::<f64>().ok().filter(|x| x.is_finite());
    let (x, y, z, yaw) = (f()?, f()?, f()?, f()?);
    let reached = match it.next()? {
        "0" => false,
        "1" => true,
        _ => return None,
    };
    it.next().is_none().then_some(PoseSample { at: Vec3::new(x, y, z), yaw, reached })
}

/// `(var, entry)` claims listed in an event payload.
pub fn event_claims(payload: &str) -> impl Iterator<Item = (&str, usize)> {
    payload.split(' ').filter_map(|w| {
        let (var, ix) = w.strip_prefix("claim=")?.split_once(':')?;
        Some((var, ix.parse().ok()?))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// Header lines without the `# ` prefix, magic line excluded.
    pub header: Vec<String>,
    pub records: Vec<Record>,
}

impl Trace {
    pub fn new(header: impl IntoIterator<Item = String>) -> Self {
        Self { header: header.into_iter().collect(), records: Vec::new() }
    }

    pub fn push(&mut self, time: Micros, pid: u16, kind: RecordKind, payload: impl Into<String>) {
        self.records.push(Record { time, pid, kind, payload: payload.into() });
    }

    /// Stable sort into canonical order.
    pub fn sort(&mut self) {
        self.records.sort_by_key(Record::key);
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut t = Trace::default();
        let mut saw_magic = false;
        let mut last = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |message: String| TraceError { line: line_no, message };
            if let Some(h) = line.strip_prefix('#') {
                let h = h.strip_prefix(' ').unwrap_or(h);
                if !t.records.is_empty() {
                    return Err(bad("header line after records".into()));
                }
                if !saw_magic {
                    if h != MAGIC {
                        return Err(bad(format!("expected `# {MAGIC}`")));
                    }
                    saw_magic = true;
                } else {
                    t.header.push(h.to_string());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !saw_magic {
                return Err(bad(format!("expected `# {MAGIC}`")));
            }
            let mut cols = line.splitn(4, '\t');
            let (Some(time), Some(pid), Some(kind), Some(payload)) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected 4 tab-separated columns".into()));
            };
            let time = parse_time(time).ok_or_else(|| bad(format!("bad time `{time}`")))?;
            let pid = pid.parse::<u16>().map_err(|_| bad(format!("bad pid `{pid}`")))?;
            let kind = kind.parse::<RecordKind>().map_err(|_| bad(format!("unknown record kind `{kind}`")))?;
            if kind == RecordKind::Pose && parse_pose(payload).is_none() {
                return Err(bad(format!("bad pose `{payload}`")));
            }
            let r = Record { time, pid, kind, payload: payload.to_string() };
            if last.is_some_and(|k| k > r.key()) {
                return Err(bad("records out of order".into()));
            }
            last = Some(r.key());
            t.records.push(r);
        }
        if !saw_magic {
            return Err(TraceError { line: 0, message: "empty trace".into() });
        }
        Ok(t)
    }

    /// Value of a top-level `key: value` header line.
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find_map(|h| {
            let (k, v) = h.split_once(':')?;
            (!h.starts_with(' ') && k == key).then(|| v.trim())
        })
    }

    pub fn header_f64(&self, key: &str) -> Option<f64> {
        self.header_value(key)?.parse().ok()
    }

    /// Task positions echoed in the header.
    pub fn header_tasks(&self) -> Vec<Vec3> {
        let mut out = Vec::new();
        let mut inside = false;
        for h in &self.header {
            if !h.starts_with(' ') {
                inside = h.trim_end() == "tasks:";
                continue;
            }
            if let (true, Some(item)) = (inside, h.trim().strip_prefix('-')) {
                let xs: Vec<f64> = item.split_whitespace().filter_map(|x| x.parse().ok()).collect();
                if let [x, y, z] = xs[..] {
                    out.push(Vec3::new(x, y, z));
                }
            }
        }
        out
    }

    pub fn poses(&self) -> impl Iterator<Item = (Micros, u16, PoseSample)> + '_ {
        self.records
            .iter()
            .filter(|r| r.kind == RecordKind::Pose)
            .filter_map(|r| Some((r.time, r.pid, parse_pose(&r.payload)?)))
    }

    pub fn num_pids(&self) -> usize {
        self.records.iter().map(|r| usize::from(r.pid) + 1).max().unwrap_or(0)
    }
}

fn parse_time(s: &str) -> Option<Micros> {
    let (whole, frac) = s.split_once('.')?;
    if frac.len() != 6 || !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    whole.parse::<Micros>().ok()?.checked_mul(1_000_000)?.checked_add(frac.parse().ok()?)
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::with_capacity(64 * self.records.len() + 1024);
        let _ = writeln!(s, "# {MAGIC}");
        for h in &self.header {
            let _ = writeln!(s, "# {h}");
        }
        for r in &self.records {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", fmt_time(r.time), r.pid, r.kind.as_str(), r.payload);
        }
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut t = Trace::new(["num_robots: 1".to_string(), "tasks:".into(), "  - 1 2 0".into(), "dt: 0.01".into()]);
        t.push(10_000, 0, RecordKind::Pose, pose_payload(Vec3::new(0.1, 0.2, 0.0), 0.5, true));
        t.push(0, 0, RecordKind::Pose, pose_payload(Vec3::ZERO, 0.0, false));
        t.push(0, 0, RecordKind::Event, "Assign claim=taskList:0");
        t.sort();
        let text = t.to_string();
        assert!(text.starts_with("# koordsim trace 1\n# num_robots: 1\n"));
        assert!(text.contains("0.000000\t0\tevent\tAssign claim=taskList:0\n0.000000\t0\tpose\t"));
        assert_eq!(Trace::parse(&text).unwrap(), t);
        assert_eq!(t.header_tasks(), [Vec3::new(1.0, 2.0, 0.0)]);
        assert_eq!(t.header_f64("dt"), Some(0.01));
        assert_eq!(event_claims("Assign claim=taskList:7").collect::<Vec<_>>(), [("taskList", 7)]);
    }

    #[test]
    fn malformed_traces() {
        assert!(Trace::parse("").is_err());
        assert!(Trace::parse("0.000000\t0\tpose\t0 0 0 0 1\n").is_err());
        let head = "# koordsim trace 1\n";
        assert!(Trace::parse(&format!("{head}0.0\t0\tpose\t0 0 0 0 1\n")).is_err());
        assert!(Trace::parse(&format!("{head}0.000000\t0\tpose\t0 0 0 1\n")).is_err());
        assert!(Trace::parse(&format!("{head}0.000000\t0\tdance\tx\n")).is_err());
        assert!(Trace::parse(&format!("{head}0.010000\t0\tevent\tA\n0.000000\t0\tevent\tB\n")).is_err());
        assert!(Trace::parse(head).unwrap().records.is_empty());
    }
}
