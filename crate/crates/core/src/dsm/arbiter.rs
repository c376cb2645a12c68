//! Who wins an atomic event when several agents intend it in one round.

pub trait Arbiter: Send + Sync {
    /// `rivals` are the other pids whose intents for the same scope and
    /// round arrived in time.
    fn grant(&self, pid: u16, rivals: &[u16]) -> bool;
}

/// The lowest intending pid wins. An agent that heard no rivals grants
/// itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct LowestPid;

impl Arbiter for LowestPid {
    fn grant(&self, pid: u16, rivals: &[u16]) -> bool {
        rivals.iter().all(|&r| r > pid)
    }
}

/// Grants everyone. Only useful to exercise the visit monitor's
/// double-claim detection.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysGrant;

impl Arbiter for AlwaysGrant {
    fn grant(&self, _: u16, _: &[u16]) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_pid_rule() {
        assert!(LowestPid.grant(2, &[5]));
        assert!(!LowestPid.grant(5, &[2]));
        assert!(LowestPid.grant(3, &[]));
        assert!(AlwaysGrant.grant(5, &[2]));
    }
}
