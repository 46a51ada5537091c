use std::collections::BTreeMap;

use crate::encoding::{
    binarize_values, pad_to_multiple, padded_len, BitPattern, FeatureVector, Label, NEGATIVE,
    POSITIVE,
};
use crate::exec::Execution;

use super::mapping::{build_mapping, MappingKind, TupleMapping};
use super::ram::Discriminator;
use super::WnnError;

/// Largest tuple size whose address space fits a `u64`.
pub const MAX_TUPLE_SIZE: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionMode {
    /// Positive iff the positive-class discriminator fires on more than a
    /// fraction of its RAMs.
    Threshold,
    /// Class whose discriminator fires most; ties go to the lowest label.
    Argmax,
}

impl DecisionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionMode::Threshold => "threshold",
            DecisionMode::Argmax => "argmax",
        }
    }
}

impl std::str::FromStr for DecisionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threshold" => Ok(DecisionMode::Threshold),
            "argmax" => Ok(DecisionMode::Argmax),
            other => Err(format!("unknown decision mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WisardConfig {
    /// Bits per RAM (tuple size).
    pub n: usize,
    /// Seed for the random mapping. Kept for provenance; the mapping itself
    /// is what gets persisted.
    pub seed: u64,
    pub mapping_kind: MappingKind,
    pub decision_mode: DecisionMode,
    /// Fraction of K that must be exceeded for a positive decision.
    pub threshold_fraction: f64,
    /// A RAM fires only when its addressed count is above this level.
    pub bleach: u32,
}

impl Default for WisardConfig {
    fn default() -> Self {
        Self {
            n: 12,
            seed: 0,
            mapping_kind: MappingKind::Random,
            decision_mode: DecisionMode::Threshold,
            threshold_fraction: 0.5,
            bleach: 0,
        }
    }
}

impl WisardConfig {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<(), WnnError> {
        if self.n == 0 {
            return Err(WnnError::ZeroTupleSize);
        }
        if self.n > MAX_TUPLE_SIZE {
            return Err(WnnError::TupleTooLarge(self.n));
        }
        if !(0.0..=1.0).contains(&self.threshold_fraction) {
            return Err(WnnError::BadThreshold(self.threshold_fraction));
        }
        Ok(())
    }
}

/// Per-class fired-RAM counts for one pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub fired: BTreeMap<Label, usize>,
    pub k_total: usize,
}

impl Response {
    /// Fired count for `class`; zero when no discriminator exists for it.
    pub fn fired_for(&self, class: Label) -> usize {
        self.fired.get(&class).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: Label,
    pub response: Response,
}

impl Classification {
    /// Fired count of the discriminator for the predicted label.
    pub fn fired(&self) -> usize {
        self.response.fired_for(self.label)
    }
}

/// A WiSARD: one discriminator per trained class over a shared mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct WisardModel {
    pub(crate) config: WisardConfig,
    pub(crate) input_dim: usize,
    pub(crate) mapping: TupleMapping,
    pub(crate) discriminators: BTreeMap<Label, Discriminator>,
    pub(crate) trained_counts: BTreeMap<Label, u64>,
}

impl WisardModel {
    /// Creates an untrained model for feature vectors of `input_dim`
    /// components. The retina is `input_dim` padded up to a multiple of `n`.
    pub fn new(config: WisardConfig, input_dim: usize) -> Result<Self, WnnError> {
        config.validate()?;
        if input_dim == 0 {
            return Err(WnnError::EmptyRetina);
        }
        let length = padded_len(input_dim, config.n);
        let mapping = build_mapping(length, config.n, config.seed, config.mapping_kind)?;
        Self::with_mapping(config, input_dim, mapping)
    }

    /// Creates an untrained model over an explicit mapping.
    pub fn with_mapping(
        config: WisardConfig,
        input_dim: usize,
        mapping: TupleMapping,
    ) -> Result<Self, WnnError> {
        config.validate()?;
        if mapping.n() != config.n {
            return Err(WnnError::InvalidMapping(format!(
                "mapping tuple size {} differs from configured n = {}",
                mapping.n(),
                config.n
            )));
        }
        if input_dim == 0 || padded_len(input_dim, config.n) != mapping.length() {
            return Err(WnnError::InvalidMapping(format!(
                "input dimension {input_dim} does not pad to retina length {}",
                mapping.length()
            )));
        }
        Ok(Self {
            config,
            input_dim,
            mapping,
            discriminators: BTreeMap::new(),
            trained_counts: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &WisardConfig {
        &self.config
    }

    pub fn mapping(&self) -> &TupleMapping {
        &self.mapping
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// RAMs per discriminator.
    pub fn k(&self) -> usize {
        self.mapping.k()
    }

    pub fn discriminator(&self, class: Label) -> Option<&Discriminator> {
        self.discriminators.get(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = Label> + '_ {
        self.discriminators.keys().copied()
    }

    pub fn trained_counts(&self) -> &BTreeMap<Label, u64> {
        &self.trained_counts
    }

    /// Binarizes and pads a feature vector into this model's retina.
    pub fn encode(&self, v: &FeatureVector) -> Result<BitPattern, WnnError> {
        if v.dim() != self.input_dim {
            return Err(WnnError::DimensionMismatch {
                expected: self.input_dim,
                found: v.dim(),
            });
        }
        let bits = binarize_values(&v.values)?;
        Ok(pad_to_multiple(&bits, self.config.n)?)
    }

    /// Reads each tuple of `pattern` as an address, first index most
    /// significant.
    pub fn addresses(&self, pattern: &BitPattern) -> Result<Vec<u64>, WnnError> {
        if pattern.len() != self.mapping.length() {
            return Err(WnnError::LengthMismatch {
                expected: self.mapping.length(),
                found: pattern.len(),
            });
        }
        Ok(self
            .mapping
            .tuples()
            .map(|tuple| {
                tuple
                    .iter()
                    .fold(0u64, |acc, &i| (acc << 1) | u64::from(pattern.get(i)))
            })
            .collect())
    }

    pub fn train(&mut self, pattern: &BitPattern, class: Label) -> Result<(), WnnError> {
        let addresses = self.addresses(pattern)?;
        let k = self.k();
        self.discriminators
            .entry(class)
            .or_insert_with(|| Discriminator::new(class, k))
            .train(&addresses);
        *self.trained_counts.entry(class).or_insert(0) += 1;
        Ok(())
    }

    pub fn response(&self, pattern: &BitPattern) -> Result<Response, WnnError> {
        let addresses = self.addresses(pattern)?;
        let fired = self
            .discriminators
            .iter()
            .map(|(&class, d)| (class, d.fired(&addresses, self.config.bleach)))
            .collect();
        Ok(Response {
            fired,
            k_total: self.k(),
        })
    }

    /// Integer cutoff the positive fired count must strictly exceed in
    /// threshold mode: `ceil(fraction * K)`, capped at `K - 1` so that a
    /// fraction of 1.0 still accepts a fully firing discriminator.
    pub fn threshold_cutoff(&self) -> usize {
        let k = self.k();
        let cutoff = (self.config.threshold_fraction * k as f64).ceil() as usize;
        cutoff.min(k.saturating_sub(1))
    }

    pub fn decide(&self, response: &Response) -> Result<Label, WnnError> {
        match self.config.decision_mode {
            DecisionMode::Threshold => {
                if !self.discriminators.contains_key(&POSITIVE) {
                    return Err(WnnError::NoPositiveDiscriminator);
                }
                Ok(if response.fired_for(POSITIVE) > self.threshold_cutoff() {
                    POSITIVE
                } else {
                    NEGATIVE
                })
            }
            DecisionMode::Argmax => {
                // Ascending label order with a strict comparison makes the
                // lowest label (the negative class) win ties.
                let mut best: Option<(Label, usize)> = None;
                for (&class, &fired) in &response.fired {
                    if best.is_none_or(|(_, f)| fired > f) {
                        best = Some((class, fired));
                    }
                }
                best.map(|(class, _)| class).ok_or(WnnError::Untrained)
            }
        }
    }

    pub fn classify(&self, pattern: &BitPattern) -> Result<Classification, WnnError> {
        let response = self.response(pattern)?;
        let label = self.decide(&response)?;
        Ok(Classification { label, response })
    }

    /// Classifies many patterns, in parallel when `exec` allows it. Output
    /// order follows input order.
    pub fn classify_batch(
        &self,
        patterns: &[BitPattern],
        exec: Execution,
    ) -> Result<Vec<Classification>, WnnError> {
        exec.map(patterns, |p| self.classify(p)).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(n: usize) -> WisardConfig {
        WisardConfig {
            n,
            mapping_kind: MappingKind::Linear,
            ..WisardConfig::default()
        }
    }

    fn pattern(bits: &[u8]) -> BitPattern {
        BitPattern::from_bits(bits).unwrap()
    }

    #[test]
    fn msb_first_addressing() {
        let mut m = WisardModel::new(linear(3), 3).unwrap();
        m.train(&pattern(&[1, 0, 1]), 1).unwrap();
        let ram = &m.discriminator(1).unwrap().rams()[0];
        assert_eq!(ram.entries().collect::<Vec<_>>(), vec![(5, 1)]);
    }

    #[test]
    fn saturation_after_training() {
        let mut m = WisardModel::new(WisardConfig::default().with_n(4), 16).unwrap();
        let p = pattern(&[1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0]);
        assert_eq!(m.response(&p).unwrap().fired_for(1), 0);
        m.train(&p, 1).unwrap();
        assert_eq!(m.response(&p).unwrap().fired_for(1), 4);
        m.train(&p, 1).unwrap();
        assert_eq!(m.response(&p).unwrap().fired_for(1), 4);
    }

    #[test]
    fn untrained_model_fires_nothing() {
        let m = WisardModel::new(linear(2), 8).unwrap();
        let r = m.response(&BitPattern::zeros(8)).unwrap();
        assert!(r.fired.is_empty());
        assert_eq!(r.fired_for(0), 0);
        assert_eq!(r.fired_for(1), 0);
        assert!(matches!(
            m.classify(&BitPattern::zeros(8)),
            Err(WnnError::NoPositiveDiscriminator)
        ));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut m = WisardModel::new(linear(3), 6).unwrap();
        assert!(matches!(
            m.train(&BitPattern::zeros(5), 1),
            Err(WnnError::LengthMismatch { expected: 6, found: 5 })
        ));
        assert!(m.response(&BitPattern::zeros(7)).is_err());
    }

    #[test]
    fn threshold_decisions() {
        let mut m = WisardModel::new(linear(2), 8).unwrap();
        let p = pattern(&[1, 1, 0, 0, 1, 0, 0, 1]);
        m.train(&p, POSITIVE).unwrap();
        assert_eq!(m.threshold_cutoff(), 2);
        assert_eq!(m.classify(&p).unwrap().label, POSITIVE);

        let mut anti = p.clone();
        (0..8).for_each(|i| anti.flip(i));
        let c = m.classify(&anti).unwrap();
        assert_eq!(c.response.fired_for(POSITIVE), 0);
        assert_eq!(c.label, NEGATIVE);

        // 3 of 4 RAMs fire: 3 > ceil(0.5 * 4) = 2
        let mut near = p.clone();
        near.flip(0);
        assert_eq!(m.classify(&near).unwrap().label, POSITIVE);
        // 2 of 4 RAMs fire: not strictly above the cutoff
        near.flip(2);
        assert_eq!(m.classify(&near).unwrap().response.fired_for(POSITIVE), 2);
        assert_eq!(m.classify(&near).unwrap().label, NEGATIVE);
    }

    #[test]
    fn full_fraction_accepts_only_saturated_response() {
        let cfg = WisardConfig {
            threshold_fraction: 1.0,
            ..linear(2)
        };
        let mut m = WisardModel::new(cfg, 8).unwrap();
        let p = pattern(&[1, 1, 0, 0, 1, 0, 0, 1]);
        m.train(&p, POSITIVE).unwrap();
        assert_eq!(m.classify(&p).unwrap().label, POSITIVE);
        let mut near = p.clone();
        near.flip(7);
        assert_eq!(m.classify(&near).unwrap().label, NEGATIVE);
    }

    #[test]
    fn zero_fired_is_always_negative() {
        for fraction in [0.0, 0.25, 0.5, 1.0] {
            let cfg = WisardConfig {
                threshold_fraction: fraction,
                ..linear(2)
            };
            let mut m = WisardModel::new(cfg, 4).unwrap();
            m.train(&pattern(&[1, 1, 1, 1]), POSITIVE).unwrap();
            let c = m.classify(&pattern(&[0, 0, 0, 0])).unwrap();
            assert_eq!(c.response.fired_for(POSITIVE), 0);
            assert_eq!(c.label, NEGATIVE, "fraction {fraction}");
        }
    }

    #[test]
    fn argmax_ties_go_negative() {
        let cfg = WisardConfig {
            decision_mode: DecisionMode::Argmax,
            ..linear(2)
        };
        let m = WisardModel::new(cfg, 4).unwrap();
        let response = Response {
            fired: BTreeMap::from([(NEGATIVE, 7), (POSITIVE, 7)]),
            k_total: 10,
        };
        assert_eq!(m.decide(&response).unwrap(), NEGATIVE);
        let response = Response {
            fired: BTreeMap::from([(NEGATIVE, 6), (POSITIVE, 7)]),
            k_total: 10,
        };
        assert_eq!(m.decide(&response).unwrap(), POSITIVE);
        assert!(matches!(
            m.classify(&BitPattern::zeros(4)),
            Err(WnnError::Untrained)
        ));
    }

    #[test]
    fn config_validation() {
        assert!(WisardConfig::default().with_n(0).validate().is_err());
        assert!(WisardConfig::default().with_n(64).validate().is_err());
        let bad = WisardConfig {
            threshold_fraction: 1.5,
            ..WisardConfig::default()
        };
        assert!(matches!(bad.validate(), Err(WnnError::BadThreshold(_))));
    }

    #[test]
    fn encode_pads_features() {
        let m = WisardModel::new(WisardConfig::default().with_n(12), 2048).unwrap();
        assert_eq!(m.k(), 171);
        let v = FeatureVector::new("a", None, (0..2048).map(f64::from).collect());
        let p = m.encode(&v).unwrap();
        assert_eq!(p.len(), 2052);
        assert_eq!(p.count_ones(), 1024);
        let short = FeatureVector::new("b", None, vec![1.0; 10]);
        assert!(matches!(
            m.encode(&short),
            Err(WnnError::DimensionMismatch { expected: 2048, found: 10 })
        ));
    }
}
