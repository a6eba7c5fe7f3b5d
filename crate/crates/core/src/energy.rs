//! Integer energy bookkeeping for every battery mutation in a run.

use crate::model::Device;

/// Per-device totals. The identity
/// `initial + harvested - clamp_loss - spent == battery` holds at all times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Account {
    pub initial: u64,
    pub harvested: u64,
    /// Harvested units discarded because the battery was full.
    pub clamp_loss: u64,
    pub spent: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyLedger {
    accounts: Vec<Account>,
    tti_spent: u64,
}

impl EnergyLedger {
    pub fn new(devices: &[Device]) -> Self {
        Self {
            accounts: devices
                .iter()
                .map(|d| Account {
                    initial: u64::from(d.battery),
                    ..Account::default()
                })
                .collect(),
            tti_spent: 0,
        }
    }

    pub fn harvest(&mut self, device: &mut Device, amount: u32, e_max: u32) {
        let acc = &mut self.accounts[device.id];
        let room = e_max - device.battery;
        let stored = amount.min(room);
        device.battery += stored;
        acc.harvested += u64::from(amount);
        acc.clamp_loss += u64::from(amount - stored);
    }

    /// Charges `cost`. Returns false when the battery could not cover it, in
    /// which case whatever was left is drained.
    pub fn spend(&mut self, device: &mut Device, cost: u32) -> bool {
        let paid = cost.min(device.battery);
        device.battery -= paid;
        self.accounts[device.id].spent += u64::from(paid);
        self.tti_spent += u64::from(paid);
        paid == cost
    }

    /// Units spent since the last call, network-wide.
    pub fn take_tti_spent(&mut self) -> u64 {
        std::mem::take(&mut self.tti_spent)
    }

    pub fn account(&self, device_id: usize) -> &Account {
        &self.accounts[device_id]
    }

    pub fn total_spent(&self) -> u64 {
        self.accounts.iter().map(|a| a.spent).sum()
    }

    /// Checks the conservation identity for every device.
    pub fn balanced(&self, devices: &[Device]) -> bool {
        devices.iter().all(|d| {
            let a = &self.accounts[d.id];
            a.initial + a.harvested == a.clamp_loss + a.spent + u64::from(d.battery)
        })
    }
}
