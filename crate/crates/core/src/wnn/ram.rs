use std::collections::BTreeMap;

use crate::encoding::Label;

/// RAM neuron with sparse storage: address -> number of training writes.
///
/// Absent addresses hold zero. Counts generalize the classic one-bit word so
/// that a bleach level can be applied at read time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RamNeuron {
    contents: BTreeMap<u64, u32>,
}

impl RamNeuron {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, address: u64) {
        *self.contents.entry(address).or_insert(0) += 1;
    }

    pub fn count(&self, address: u64) -> u32 {
        self.contents.get(&address).copied().unwrap_or(0)
    }

    /// A RAM fires when the addressed count exceeds the bleach level.
    #[inline]
    pub fn fires(&self, address: u64, bleach: u32) -> bool {
        self.count(address) > bleach
    }

    /// Stored `(address, count)` pairs in ascending address order.
    pub fn entries(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.contents.iter().map(|(&a, &c)| (a, c))
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub(crate) fn insert_raw(&mut self, address: u64, count: u32) {
        self.contents.insert(address, count);
    }
}

/// Bank of K RAM neurons trained on one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discriminator {
    class_label: Label,
    rams: Vec<RamNeuron>,
}

impl Discriminator {
    pub fn new(class_label: Label, k: usize) -> Self {
        Self {
            class_label,
            rams: vec![RamNeuron::new(); k],
        }
    }

    pub(crate) fn from_rams(class_label: Label, rams: Vec<RamNeuron>) -> Self {
        Self { class_label, rams }
    }

    pub fn class_label(&self) -> Label {
        self.class_label
    }

    pub fn rams(&self) -> &[RamNeuron] {
        &self.rams
    }

    /// Writes one address per RAM; `addresses.len()` must equal K.
    pub fn train(&mut self, addresses: &[u64]) {
        debug_assert_eq!(addresses.len(), self.rams.len());
        for (ram, &address) in self.rams.iter_mut().zip(addresses) {
            ram.write(address);
        }
    }

    /// Number of RAMs that fire for the given per-RAM addresses.
    pub fn fired(&self, addresses: &[u64], bleach: u32) -> usize {
        self.rams
            .iter()
            .zip(addresses)
            .filter(|(ram, &address)| ram.fires(address, bleach))
            .count()
    }
}
