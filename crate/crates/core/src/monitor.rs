//! Safety and visit checks, evaluated over a trace.

use std::collections::BTreeMap;

use koord::Vec3;

use crate::trace::{self, Micros, RecordKind, Trace};

/// Closest pair among `positions`: `(distance, i, j)` with `i < j`, or
/// infinity when there are fewer than two.
pub fn min_pairwise(positions: &[Vec3]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = positions[i].dist(positions[j]);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub time: Micros,
    pub pids: (u16, u16),
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyReport {
    /// Minimum pairwise distance at every pose sample time.
    pub series: Vec<(Micros, f64)>,
    pub min: f64,
    pub min_at: Option<Violation>,
    pub first_violation: Option<Violation>,
    pub pass: bool,
}

pub fn safety(trace: &Trace, d_s: f64) -> SafetyReport {
    let mut series = Vec::new();
    let mut min = f64::INFINITY;
    let mut min_at = None;
    let mut first_violation = None;
    let mut flush = |time: Micros, batch: &mut Vec<(u16, Vec3)>| {
        if batch.is_empty() {
            return;
        }
        let pts: Vec<Vec3> = batch.iter().map(|b| b.1).collect();
        let (d, i, j) = min_pairwise(&pts);
        series.push((time, d));
        let v = Violation { time, pids: (batch[i].0, batch[j].0), distance: d };
        if d < min {
            min = d;
            min_at = Some(v);
        }
        if d < d_s && first_violation.is_none() {
            first_violation = Some(v);
        }
        batch.clear();
    };
    let mut batch = Vec::new();
    let mut at = None;
    for (time, pid, p) in trace.poses() {
        if at != Some(time) {
            if let Some(t) = at {
                flush(t, &mut batch);
            }
            at = Some(time);
        }
        batch.push((pid, p.at));
    }
    if let Some(t) = at {
        flush(t, &mut batch);
    }
    SafetyReport { series, min, min_at, pass: first_violation.is_none(), first_violation }
}

/// An uninterrupted stay of at least `delta_v` inside a task's ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub pid: u16,
    pub start: Micros,
    pub end: Micros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskVisits {
    pub at: Vec3,
    /// `(pid, time)` of every claim on this task.
    pub claims: Vec<(u16, Micros)>,
    pub visits: Vec<Visit>,
}

impl TaskVisits {
    /// The claimant's first visit, if the task has a single claimant.
    pub fn completion(&self) -> Option<Visit> {
        match self.claims[..] {
            [(pid, _)] => self.visits.iter().find(|v| v.pid == pid).copied(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitReport {
    pub tasks: Vec<TaskVisits>,
    pub problems: Vec<String>,
    pub pass: bool,
}

impl VisitReport {
    pub fn completed(&self) -> usize {
        self.tasks.iter().filter(|t| t.completion().is_some()).count()
    }
}

/// Claims come from `assign` records on `taskList`. The verdict passes iff
/// every task has exactly one claimant, the claimant visited it, and no
/// other robot did.
pub fn visits(trace: &Trace, tasks: &[Vec3], eps_v: f64, delta_v: f64) -> VisitReport {
    let need = trace::to_micros(delta_v);
    let mut report: Vec<TaskVisits> = tasks.iter().map(|&at| TaskVisits { at, claims: Vec::new(), visits: Vec::new() }).collect();
    let mut problems = Vec::new();
    for r in trace.records.iter().filter(|r| r.kind == RecordKind::Event) {
        for (var, ix) in trace::event_claims(&r.payload) {
            if var != "taskList" {
                continue;
            }
            match report.get_mut(ix) {
                Some(t) => t.claims.push((r.pid, r.time)),
                None => problems.push(format!("pid {} claimed task {ix}, which does not exist", r.pid)),
            }
        }
    }
    // per (pid, task): start of the current stay and the last sample time
    let mut inside: BTreeMap<(u16, usize), (Micros, Micros)> = BTreeMap::new();
    let mut last_seen: BTreeMap<u16, Micros> = BTreeMap::new();
    let close = |report: &mut Vec<TaskVisits>, pid: u16, task: usize, (start, end): (Micros, Micros)| {
        if end - start >= need {
            report[task].visits.push(Visit { pid, start, end });
        }
    };
    for (time, pid, p) in trace.poses() {
        last_seen.insert(pid, time);
        for (task, at) in tasks.iter().enumerate() {
            let key = (pid, task);
            if p.at.dist(*at) <= eps_v {
                inside.entry(key).and_modify(|s| s.1 = time).or_insert((time, time));
            } else if let Some(stay) = inside.remove(&key) {
                close(&mut report, pid, task, stay);
            }
        }
    }
    for ((pid, task), stay) in std::mem::take(&mut inside) {
        close(&mut report, pid, task, stay);
    }
    for t in &mut report {
        t.visits.sort_by_key(|v| (v.start, v.pid));
    }
    for (i, t) in report.iter().enumerate() {
        let mut claimants: Vec<u16> = t.claims.iter().map(|c| c.0).collect();
        claimants.sort_unstable();
        match claimants[..] {
            [] => problems.push(format!("task {i}: never claimed")),
            [pid] => {
                if !t.visits.iter().any(|v| v.pid == pid) {
                    problems.push(format!("task {i}: claimant {pid} never visited"));
                }
            }
            _ => {
                let list: Vec<String> = claimants.iter().map(u16::to_string).collect();
                problems.push(format!("task {i}: claimed {} times, by pids {}", claimants.len(), list.join(" and ")));
            }
        }
        for v in &t.visits {
            if !claimants.contains(&v.pid) {
                problems.push(format!("task {i}: visited by pid {} without a claim", v.pid));
            }
        }
    }
    VisitReport { pass: problems.is_empty(), tasks: report, problems }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::pose_payload;

    fn trace_of(tracks: &[&[(f64, f64)]], dt: Micros) -> Trace {
        let mut t = Trace::default();
        for (pid, track) in tracks.iter().enumerate() {
            for (k, &(x, y)) in track.iter().enumerate() {
                t.push(k as Micros * dt, pid as u16, RecordKind::Pose, pose_payload(Vec3::new(x, y, 0.0), 0.0, true));
            }
        }
        t.sort();
        t
    }

    #[test]
    fn stationary_pair_at_twice_d_s() {
        let t = trace_of(&[&[(0.0, 0.0); 5], &[(1.0, 0.0); 5]], 10_000);
        let r = safety(&t, 0.5);
        assert!(r.pass);
        assert_eq!(r.min, 1.0);
        assert_eq!(r.series.len(), 5);
    }

    #[test]
    fn crossing_tracks_fail_at_the_crossing() {
        let a: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64 * 0.2 - 1.0, 0.0)).collect();
        let b: Vec<(f64, f64)> = (0..=10).map(|k| (0.0, k as f64 * 0.2 - 1.0)).collect();
        let r = safety(&trace_of(&[&a, &b], 100_000), 0.5);
        assert!(!r.pass);
        assert_eq!(r.min, 0.0);
        assert_eq!(r.min_at.unwrap().time, 500_000);
        assert_eq!(r.first_violation.unwrap().time, 400_000);
    }

    fn claim(t: &mut Trace, pid: u16, ix: usize) {
        t.push(0, pid, RecordKind::Event, format!("Assign claim=taskList:{ix}"));
        t.sort();
    }

    #[test]
    fn holding_for_two_dwell_times_is_one_visit() {
        // 0.1 s samples, 2 s at the task
        let mut t = trace_of(&[&[(1.0, 1.0); 21]], 100_000);
        claim(&mut t, 0, 0);
        let r = visits(&t, &[Vec3::new(1.0, 1.0, 0.0)], 0.2, 1.0);
        assert!(r.pass, "{:?}", r.problems);
        assert_eq!(r.tasks[0].visits, [Visit { pid: 0, start: 0, end: 2_000_000 }]);
        assert_eq!(r.completed(), 1);
    }

    #[test]
    fn passing_through_is_not_a_visit() {
        let track: Vec<(f64, f64)> = (0..=20).map(|k| (k as f64 * 0.1, 1.0)).collect();
        let mut t = trace_of(&[&track], 100_000);
        claim(&mut t, 0, 0);
        let r = visits(&t, &[Vec3::new(1.0, 1.0, 0.0)], 0.2, 1.0);
        assert!(r.tasks[0].visits.is_empty());
        assert!(!r.pass);
    }

    #[test]
    fn double_claims_name_both_pids() {
        let mut t = trace_of(&[&[(1.0, 1.0); 21], &[(3.0, 3.0); 21]], 100_000);
        claim(&mut t, 0, 0);
        claim(&mut t, 1, 0);
        let r = visits(&t, &[Vec3::new(1.0, 1.0, 0.0)], 0.2, 1.0);
        assert!(!r.pass);
        assert!(r.problems.iter().any(|p| p.contains("by pids 0 and 1")), "{:?}", r.problems);
    }
}
