//! Message-rate scaling: run an app at several fleet sizes for a fixed
//! simulated duration and fit the growth exponent of fleet traffic.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::apps;
use crate::config::ConfigError;
use crate::harness::{self, RunError, RunOptions};

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("app `{0}` has no scaling scenario (try shapeform or lineform)")]
    UnknownApp(String),
    #[error("robot counts must be positive")]
    BadCount,
    #[error("{n} robots: {source}")]
    Config { n: usize, source: ConfigError },
    #[error("{n} robots: {source}")]
    Run { n: usize, source: RunError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub rounds: u64,
    pub sim_time: f64,
    pub packets: u64,
    pub bytes: u64,
    pub packets_per_s: f64,
    pub bytes_per_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub app: String,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log packets/s against log N.
    pub exponent: Option<f64>,
}

impl ScalingReport {
    pub fn csv(&self) -> String {
        let exp = self.exponent.map_or("N/A".to_string(), |e| format!("{e:.4}"));
        let mut s = String::from("app,n,rounds,sim_time,packets,bytes,packets_per_s,bytes_per_s,fitted_exponent\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.3},{},{},{:.3},{:.3},{exp}",
                self.app, r.n, r.rounds, r.sim_time, r.packets, r.bytes, r.packets_per_s, r.bytes_per_s
            );
        }
        s
    }
}

/// Least-squares slope of `ln y` on `ln x`. `None` without two distinct
/// positive x values or with a non-positive y.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 1e-12).then(|| sxy / sxx)
}

/// Runs are independent and execute in parallel; rows follow `counts`.
pub fn run(app: &str, counts: &[usize], duration: f64, seed: u64) -> Result<ScalingReport, ScalingError> {
    if apps::scaling_config(app, 1, seed, duration).is_none() {
        return Err(ScalingError::UnknownApp(app.to_string()));
    }
    if counts.contains(&0) {
        return Err(ScalingError::BadCount);
    }
    let rows = counts
        .par_iter()
        .map(|&n| {
            let cfg = apps::scaling_config(app, n, seed, duration)
                .expect("known app")
                .map_err(|source| ScalingError::Config { n, source })?;
            let opts = RunOptions { stop_when_complete: false, ..RunOptions::default() };
            let out = harness::run(&cfg, opts).map_err(|source| ScalingError::Run { n, source })?;
            let m = out.metrics;
            Ok(ScalingRow {
                n,
                rounds: m.rounds,
                sim_time: m.sim_time,
                packets: m.packets_received.iter().sum(),
                bytes: m.bytes_received.iter().sum(),
                packets_per_s: m.total_packets_per_s(),
                bytes_per_s: m.total_bytes_per_s(),
            })
        })
        .collect::<Result<Vec<_>, ScalingError>>()?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.packets_per_s)).collect();
    Ok(ScalingReport { app: app.to_ascii_lowercase(), exponent: loglog_slope(&points), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_powers() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&n: &f64| (n, 3.0 * n.powi(2))).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(4.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(4.0, 1.0), (4.0, 2.0)]), None);
        assert_eq!(loglog_slope(&[(2.0, 0.0), (4.0, 2.0)]), None);
    }

    #[test]
    fn unknown_app_is_rejected() {
        assert!(matches!(run("task", &[2], 1.0, 0), Err(ScalingError::UnknownApp(_))));
    }
}
