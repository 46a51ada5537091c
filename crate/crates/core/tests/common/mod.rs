//! Test-only helpers, including a dense brute-force WiSARD reference.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wisard_tl::encoding::{Label, NEGATIVE, POSITIVE};
use wisard_tl::wnn::{DecisionMode, TupleMapping};
use wisard_tl::BitPattern;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pattern(rng: &mut impl Rng, len: usize) -> BitPattern {
    (0..len).map(|_| rng.random::<bool>()).collect()
}

/// Every pattern of `len` bits, in counting order (bit 0 is the MSB).
pub fn all_patterns(len: usize) -> impl Iterator<Item = BitPattern> {
    (0u64..1 << len).map(move |v| (0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect())
}

/// Dense table of 2^n one-bit words per RAM, rebuilt from the full training
/// list on every query.
pub struct DenseReference {
    pub tuples: Vec<Vec<usize>>,
    pub n: usize,
    pub training: Vec<(BitPattern, Label)>,
}

impl DenseReference {
    pub fn new(mapping: &TupleMapping) -> Self {
        Self {
            tuples: mapping.tuples().map(<[usize]>::to_vec).collect(),
            n: mapping.n(),
            training: Vec::new(),
        }
    }

    fn address(&self, tuple: &[usize], p: &BitPattern) -> usize {
        let mut address = 0usize;
        for (j, &i) in tuple.iter().enumerate() {
            if p.get(i) {
                address += 1 << (self.n - 1 - j);
            }
        }
        address
    }

    fn tables(&self) -> BTreeMap<Label, Vec<Vec<bool>>> {
        let mut tables = BTreeMap::new();
        for (p, class) in &self.training {
            let t = tables
                .entry(*class)
                .or_insert_with(|| vec![vec![false; 1 << self.n]; self.tuples.len()]);
            for (k, tuple) in self.tuples.iter().enumerate() {
                t[k][self.address(tuple, p)] = true;
            }
        }
        tables
    }

    pub fn fired(&self, p: &BitPattern) -> BTreeMap<Label, usize> {
        self.tables()
            .into_iter()
            .map(|(class, t)| {
                let fired = self
                    .tuples
                    .iter()
                    .enumerate()
                    .filter(|(k, tuple)| t[*k][self.address(tuple, p)])
                    .count();
                (class, fired)
            })
            .collect()
    }

    pub fn classify(&self, p: &BitPattern, mode: DecisionMode, fraction: f64) -> Label {
        let fired = self.fired(p);
        let k = self.tuples.len();
        match mode {
            DecisionMode::Threshold => {
                let cutoff = ((fraction * k as f64).ceil() as usize).min(k - 1);
                if fired.get(&POSITIVE).copied().unwrap_or(0) > cutoff {
                    POSITIVE
                } else {
                    NEGATIVE
                }
            }
            DecisionMode::Argmax => {
                let max = fired.values().copied().max().unwrap();
                *fired.iter().find(|(_, &f)| f == max).unwrap().0
            }
        }
    }
}
