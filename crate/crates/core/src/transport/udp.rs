use std::collections::HashMap;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetConfig, PacketStats, Transport, TransportError};

const MAX_DATAGRAM: usize = 65_535;

struct Endpoint {
    socket: UdpSocket,
    port: u16,
    inbox: Receiver<(Vec<u8>, u16)>,
    /// Datagrams picked up by the receive loop so far.
    arrived: Arc<AtomicU64>,
    /// Datagrams addressed to this endpoint so far.
    expected: u64,
    taken: u64,
}

/// Loopback unicast to every peer's port. One receive thread per agent
/// feeds that agent's queue.
pub struct Udp {
    endpoints: Vec<Endpoint>,
    threads: Vec<JoinHandle<()>>,
    stop: Arc<AtomicBool>,
    loss_prob: f64,
    rng: ChaCha8Rng,
    settle: Duration,
    stats: PacketStats,
}

impl Udp {
    pub fn bind(n: usize, cfg: &NetConfig) -> Result<Self, TransportError> {
        let mut seen = HashMap::new();
        for &p in cfg.ports.iter().filter(|&&p| p != 0) {
            if seen.insert(p, ()).is_some() {
                return Err(TransportError::DuplicatePort(p));
            }
        }
        let mut sockets = Vec::with_capacity(n);
        for pid in 0..n {
            let port = cfg.ports.get(pid).copied().unwrap_or(0);
            let s = UdpSocket::bind((Ipv4Addr::LOCALHOST, port))?;
            s.set_read_timeout(Some(Duration::from_millis(20)))?;
            sockets.push(s);
        }
        let ports: Vec<u16> = sockets.iter().map(|s| s.local_addr().map(|a| a.port())).collect::<Result<_, _>>()?;
        let by_port: Arc<HashMap<u16, u16>> = Arc::new(ports.iter().enumerate().map(|(i, &p)| (p, i as u16)).collect());
        let stop = Arc::new(AtomicBool::new(false));
        let mut endpoints = Vec::with_capacity(n);
        let mut threads = Vec::with_capacity(n);
        for (socket, &port) in sockets.into_iter().zip(&ports) {
            let (tx, rx) = mpsc::channel();
            let arrived = Arc::new(AtomicU64::new(0));
            let recv = socket.try_clone()?;
            let (stop, by_port, count) = (stop.clone(), by_port.clone(), arrived.clone());
            threads.push(std::thread::spawn(move || {
                let mut buf = vec![0u8; MAX_DATAGRAM];
                while !stop.load(Ordering::Relaxed) {
                    match recv.recv_from(&mut buf) {
                        Ok((len, from)) => {
                            let Some(&sender) = by_port.get(&from.port()) else { continue };
                            if tx.send((buf[..len].to_vec(), sender)).is_err() {
                                break;
                            }
                            count.fetch_add(1, Ordering::Release);
                        }
                        Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                        Err(_) => {}
                    }
                }
            }));
            endpoints.push(Endpoint { socket, port, inbox: rx, arrived, expected: 0, taken: 0 });
        }
        Ok(Self {
            endpoints,
            threads,
            stop,
            loss_prob: cfg.loss_prob,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            settle: Duration::from_secs_f64(cfg.settle.max(0.001)),
            stats: PacketStats::new(n),
        })
    }

    pub fn ports(&self) -> Vec<u16> {
        self.endpoints.iter().map(|e| e.port).collect()
    }
}

impl Transport for Udp {
    fn num_agents(&self) -> usize {
        self.endpoints.len()
    }

    fn broadcast(&mut self, sender: u16, payload: &[u8], _now: f64) -> usize {
        let s = usize::from(sender);
        self.stats.broadcasts[s] += 1;
        let mut sent = 0;
        for r in 0..self.endpoints.len() {
            if r == s {
                continue;
            }
            if self.loss_prob > 0.0 && self.rng.gen::<f64>() < self.loss_prob {
                self.stats.dropped += 1;
                continue;
            }
            let to = SocketAddr::from((Ipv4Addr::LOCALHOST, self.endpoints[r].port));
            match self.endpoints[s].socket.send_to(payload, to) {
                Ok(_) => {
                    self.endpoints[r].expected += 1;
                    sent += 1;
                }
                Err(_) => self.stats.send_errors += 1,
            }
        }
        self.stats.packets_sent[s] += sent as u64;
        sent
    }

    /// Waits up to the settle time for datagrams already sent to
    /// `receiver`, then drains its queue.
    fn poll(&mut self, receiver: u16, _now: f64) -> Vec<(Vec<u8>, u16)> {
        let r = usize::from(receiver);
        let ep = &mut self.endpoints[r];
        let deadline = Instant::now() + self.settle;
        while ep.arrived.load(Ordering::Acquire) < ep.expected && Instant::now() < deadline {
            std::thread::sleep(Duration::from_micros(50));
        }
        let mut out: Vec<(Vec<u8>, u16)> = ep.inbox.try_iter().collect();
        ep.taken += out.len() as u64;
        // datagrams that never showed up are not waited for again
        ep.expected = ep.expected.min(ep.arrived.load(Ordering::Acquire).max(ep.taken));
        out.sort_by_key(|(_, s)| *s);
        for (p, _) in &out {
            self.stats.record_receive(r, p.len());
        }
        out
    }

    fn stats(&self) -> &PacketStats {
        &self.stats
    }

    fn stats_mut(&mut self) -> &mut PacketStats {
        &mut self.stats
    }
}

impl Drop for Udp {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loopback_broadcast_reaches_every_peer() {
        let cfg = NetConfig { mode: super::super::NetMode::Udp, settle: 1.0, ..NetConfig::lossless(3) };
        let mut t = Udp::bind(3, &cfg).unwrap();
        let ports = t.ports();
        assert!(ports.iter().all(|&p| p != 0));
        assert_eq!(t.broadcast(2, b"hi", 0.0), 2);
        t.broadcast(0, b"yo", 0.0);
        assert_eq!(t.poll(1, 0.0), vec![(b"yo".to_vec(), 0), (b"hi".to_vec(), 2)]);
        assert_eq!(t.poll(2, 0.0), vec![(b"yo".to_vec(), 0)]);
        assert!(t.poll(2, 0.0).is_empty());
        assert_eq!(t.stats().total_received(), 3);
        assert_eq!(t.poll(0, 0.0), vec![(b"hi".to_vec(), 2)]);
    }
}
