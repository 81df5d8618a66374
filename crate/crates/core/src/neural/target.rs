//! Frozen copy of the online network, refreshed every `period` updates.

use super::mlp::Mlp;

#[derive(Debug, Clone)]
pub struct TargetNetworkHandle {
    net: Mlp,
    period: u64,
    since_sync: u64,
    syncs: u64,
}

impl TargetNetworkHandle {
    pub fn new(online: &Mlp, period: u64) -> Self {
        assert!(period > 0, "sync period must be positive");
        Self {
            net: online.clone(),
            period,
            since_sync: 0,
            syncs: 0,
        }
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    /// Counts one gradient update on the online network and copies it over
    /// when the period elapses. Returns whether a sync happened.
    pub fn tick(&mut self, online: &Mlp) -> bool {
        self.since_sync += 1;
        if self.since_sync >= self.period {
            self.net.clone_from(online);
            self.since_sync = 0;
            self.syncs += 1;
            true
        } else {
            false
        }
    }
}
