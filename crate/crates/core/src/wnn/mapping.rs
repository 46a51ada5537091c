use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::WnnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingKind {
    /// Seeded uniform shuffle of the retina, chunked into tuples.
    Random,
    /// Consecutive runs of `n` bits.
    Linear,
}

impl MappingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingKind::Random => "random",
            MappingKind::Linear => "linear",
        }
    }
}

impl std::str::FromStr for MappingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(MappingKind::Random),
            "linear" => Ok(MappingKind::Linear),
            other => Err(format!("unknown mapping kind `{other}`")),
        }
    }
}

/// Assignment of retina bit positions to RAM address lines.
///
/// Stored as a flat index table of `K * n` entries; tuple `k` owns
/// `indices[k*n .. (k+1)*n]` and its first index is the address MSB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleMapping {
    length: usize,
    n: usize,
    indices: Vec<usize>,
}

impl TupleMapping {
    /// Wraps an explicit index table, checking the permutation invariant.
    pub fn from_indices(length: usize, n: usize, indices: Vec<usize>) -> Result<Self, WnnError> {
        if n == 0 {
            return Err(WnnError::ZeroTupleSize);
        }
        if length == 0 || !length.is_multiple_of(n) {
            return Err(WnnError::NotDivisible { length, n });
        }
        if indices.len() != length {
            return Err(WnnError::InvalidMapping(format!(
                "{} indices listed for a retina of {length} bits",
                indices.len()
            )));
        }
        let mut seen = vec![false; length];
        for &i in &indices {
            if i >= length {
                return Err(WnnError::InvalidMapping(format!(
                    "index {i} out of range for retina of {length} bits"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(WnnError::InvalidMapping(format!("index {i} listed twice")));
            }
        }
        Ok(Self { length, n, indices })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of tuples, i.e. RAMs per discriminator.
    pub fn k(&self) -> usize {
        self.length / self.n
    }

    pub fn tuple(&self, k: usize) -> &[usize] {
        &self.indices[k * self.n..(k + 1) * self.n]
    }

    pub fn tuples(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.indices.chunks_exact(self.n)
    }
}

/// Builds the retina-to-RAM wiring for a retina of `length` bits.
pub fn build_mapping(
    length: usize,
    n: usize,
    seed: u64,
    kind: MappingKind,
) -> Result<TupleMapping, WnnError> {
    if n == 0 {
        return Err(WnnError::ZeroTupleSize);
    }
    if length == 0 || !length.is_multiple_of(n) {
        return Err(WnnError::NotDivisible { length, n });
    }
    let mut indices: Vec<usize> = (0..length).collect();
    if kind == MappingKind::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
    }
    Ok(TupleMapping { length, n, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_chunks_consecutive_bits() {
        let m = build_mapping(6, 3, 0, MappingKind::Linear).unwrap();
        let tuples: Vec<_> = m.tuples().collect();
        assert_eq!(tuples, vec![&[0, 1, 2][..], &[3, 4, 5][..]]);
    }

    #[test]
    fn random_is_a_seeded_permutation() {
        let a = build_mapping(6, 3, 42, MappingKind::Random).unwrap();
        assert_eq!(a.k(), 2);
        let mut all: Vec<usize> = a.tuples().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
        assert_eq!(a, build_mapping(6, 3, 42, MappingKind::Random).unwrap());
    }

    #[test]
    fn rejects_indivisible_length() {
        assert!(matches!(
            build_mapping(2048, 12, 0, MappingKind::Linear),
            Err(WnnError::NotDivisible { length: 2048, n: 12 })
        ));
        assert!(matches!(
            build_mapping(12, 0, 0, MappingKind::Linear),
            Err(WnnError::ZeroTupleSize)
        ));
    }

    #[test]
    fn from_indices_checks_permutation() {
        assert!(TupleMapping::from_indices(4, 2, vec![0, 1, 2, 3]).is_ok());
        assert!(TupleMapping::from_indices(4, 2, vec![0, 1, 1, 3]).is_err());
        assert!(TupleMapping::from_indices(4, 2, vec![0, 1, 2, 4]).is_err());
        assert!(TupleMapping::from_indices(4, 2, vec![0, 1, 2]).is_err());
    }

    proptest! {
        #[test]
        fn every_index_used_exactly_once(k in 1usize..40, n in 1usize..15, seed: u64) {
            let m = build_mapping(k * n, n, seed, MappingKind::Random).unwrap();
            prop_assert_eq!(m.k(), k);
            let mut seen = vec![0u8; k * n];
            for t in m.tuples() {
                prop_assert_eq!(t.len(), n);
                for &i in t {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
