//! Broadcast transports. Both modes sit behind [`Transport`] so the runtime
//! cannot tell them apart.

mod inproc;
mod udp;

pub use inproc::InProcess;
pub use udp::Udp;

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetMode {
    InProcess,
    Udp,
}

impl NetMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in_process" => Some(Self::InProcess),
            "udp" => Some(Self::Udp),
            _ => None,
        }
    }
}

impl fmt::Display for NetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::InProcess => "in_process",
            Self::Udp => "udp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Fixed(f64),
    Uniform(f64, f64),
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Fixed(d) => write!(f, "{d}"),
            Delay::Uniform(lo, hi) => write!(f, "uniform {lo} {hi}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub mode: NetMode,
    pub loss_prob: f64,
    pub delay: Delay,
    pub seed: u64,
    /// UDP port per pid; 0 asks the OS for an ephemeral port.
    pub ports: Vec<u16>,
    /// How long a UDP poll waits for in-flight datagrams, in seconds.
    pub settle: f64,
}

impl NetConfig {
    pub fn lossless(n: usize) -> Self {
        Self { mode: NetMode::InProcess, loss_prob: 0.0, delay: Delay::Fixed(0.0), seed: 0, ports: vec![0; n], settle: 0.1 }
    }
}

/// Traffic counters. Monotone over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PacketStats {
    /// Broadcasts issued per pid.
    pub broadcasts: Vec<u64>,
    /// Datagrams handed to the network per sender (after loss).
    pub packets_sent: Vec<u64>,
    pub packets_received: Vec<u64>,
    pub bytes_received: Vec<u64>,
    pub dropped: u64,
    pub send_errors: u64,
    /// Receptions across the fleet, by the round in which they were polled.
    pub received_per_round: Vec<u64>,
    round: usize,
}

impl PacketStats {
    pub fn new(n: usize) -> Self {
        Self {
            broadcasts: vec![0; n],
            packets_sent: vec![0; n],
            packets_received: vec![0; n],
            bytes_received: vec![0; n],
            received_per_round: vec![0],
            ..Default::default()
        }
    }

    pub fn enter_round(&mut self, round: u32) {
        self.round = round as usize;
        if self.received_per_round.len() <= self.round {
            self.received_per_round.resize(self.round + 1, 0);
        }
    }

    fn record_receive(&mut self, receiver: usize, bytes: usize) {
        self.packets_received[receiver] += 1;
        self.bytes_received[receiver] += bytes as u64;
        self.received_per_round[self.round] += 1;
    }

    pub fn total_received(&self) -> u64 {
        self.packets_received.iter().sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes_received.iter().sum()
    }
}

pub trait Transport: Send {
    fn num_agents(&self) -> usize;
    /// Send `payload` to every other pid; returns how many copies were put
    /// on the network.
    fn broadcast(&mut self, sender: u16, payload: &[u8], now: f64) -> usize;
    /// Everything deliverable to `receiver` by `now`, ordered by delivery
    /// time then sender.
    fn poll(&mut self, receiver: u16, now: f64) -> Vec<(Vec<u8>, u16)>;
    fn stats(&self) -> &PacketStats;
    fn stats_mut(&mut self) -> &mut PacketStats;
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("udp setup failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("ports must be distinct, {0} repeats")]
    DuplicatePort(u16),
}

pub fn open(cfg: &NetConfig, n: usize) -> Result<Box<dyn Transport>, TransportError> {
    Ok(match cfg.mode {
        NetMode::InProcess => Box::new(InProcess::new(n, cfg)),
        NetMode::Udp => Box::new(Udp::bind(n, cfg)?),
    })
}
