use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Delay, NetConfig, PacketStats, Transport};

struct Pending {
    at: f64,
    sender: u16,
    seq: u64,
    payload: Vec<u8>,
}

impl Pending {
    fn key(&self) -> (f64, u16, u64) {
        (self.at, self.sender, self.seq)
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed so the max-heap pops the earliest delivery
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2))
    }
}

/// Simulated broadcast network driven by the harness clock.
pub struct InProcess {
    loss_prob: f64,
    delay: Delay,
    rng: ChaCha8Rng,
    queues: Vec<BinaryHeap<Pending>>,
    seq: u64,
    stats: PacketStats,
}

impl InProcess {
    pub fn new(n: usize, cfg: &NetConfig) -> Self {
        Self {
            loss_prob: cfg.loss_prob,
            delay: cfg.delay,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            queues: (0..n).map(|_| BinaryHeap::new()).collect(),
            seq: 0,
            stats: PacketStats::new(n),
        }
    }
}

impl Transport for InProcess {
    fn num_agents(&self) -> usize {
        self.queues.len()
    }

    fn broadcast(&mut self, sender: u16, payload: &[u8], now: f64) -> usize {
        let s = usize::from(sender);
        self.stats.broadcasts[s] += 1;
        let mut sent = 0;
        for r in 0..self.queues.len() {
            if r == s {
                continue;
            }
            if self.loss_prob > 0.0 && self.rng.gen::<f64>() < self.loss_prob {
                self.stats.dropped += 1;
                continue;
            }
            let d = match self.delay {
                Delay::Fixed(d) => d,
                Delay::Uniform(lo, hi) if hi > lo => self.rng.gen_range(lo..hi),
                Delay::Uniform(lo, _) => lo,
            };
            self.seq += 1;
            self.queues[r].push(Pending { at: now + d, sender, seq: self.seq, payload: payload.to_vec() });
            sent += 1;
        }
        self.stats.packets_sent[s] += sent as u64;
        sent
    }

    fn poll(&mut self, receiver: u16, now: f64) -> Vec<(Vec<u8>, u16)> {
        let r = usize::from(receiver);
        let mut out = Vec::new();
        while self.queues[r].peek().is_some_and(|p| p.at <= now) {
            let p = self.queues[r].pop().expect("peeked");
            self.stats.record_receive(r, p.payload.len());
            out.push((p.payload, p.sender));
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
