//! Logarithmic purity and many-body negativity of stabilizer states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{words_for, BitMatrix, WORD_BITS};
use crate::stabilizer::StabilizerState;

/// Subsystem `A` for the partial transpose: a nonempty proper subset of sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cut {
    sites: usize,
    members: Vec<usize>,
    mask: Vec<u64>,
}

impl Cut {
    pub fn new(sites: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&s| s >= sites) {
            return Err(Error::SiteOutOfRange { site: bad, sites });
        }
        if members.is_empty() || members.len() == sites {
            return Err(Error::InvalidConfig(format!("cut must be a nonempty proper subset of {sites} sites")));
        }
        let mut mask = vec![0u64; words_for(sites)];
        for &s in &members {
            mask[s / WORD_BITS] |= 1 << (s % WORD_BITS);
        }
        Ok(Self { sites, members, mask })
    }

    /// `len` consecutive sites starting at `start`, wrapping around the ring.
    pub fn contiguous(sites: usize, start: usize, len: usize) -> Result<Self> {
        Self::new(sites, (0..len).map(|i| (start + i) % sites.max(1)))
    }

    /// Sites `0 .. L/2`.
    pub fn half_chain(sites: usize) -> Result<Self> {
        Self::contiguous(sites, 0, sites / 2)
    }

    pub fn complement(&self) -> Self {
        Self::new(self.sites, (0..self.sites).filter(|s| !self.members.contains(s))).expect("complement of a proper subset is proper")
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, site: usize) -> bool {
        site < self.sites && self.mask[site / WORD_BITS] >> (site % WORD_BITS) & 1 == 1
    }

    pub fn mask(&self) -> &[u64] {
        &self.mask
    }
}

/// How a trajectory chooses its negativity cut.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutPolicy {
    /// Contiguous sites `0 .. L/2`.
    #[default]
    HalfChain,
    /// Explicit 0-based site list.
    Sites(Vec<usize>),
}

impl CutPolicy {
    pub fn resolve(&self, sites: usize) -> Result<Cut> {
        match self {
            CutPolicy::HalfChain => Cut::half_chain(sites),
            CutPolicy::Sites(list) => Cut::new(sites, list.iter().copied()),
        }
    }
}

/// `S_p = −log₂ tr ρ² = L − k`, exact.
pub fn log_purity(state: &StabilizerState) -> usize {
    state.sites() - state.rank()
}

/// `K_{l,l'} = 1` iff generators `l` and `l'` anticommute once restricted to
/// the cut.
pub fn build_k(state: &StabilizerState, cut: &Cut) -> Result<BitMatrix> {
    if cut.sites() != state.sites() {
        return Err(Error::LengthMismatch { left: cut.sites(), right: state.sites() });
    }
    let k = state.rank();
    let mut m = BitMatrix::zeros(k, k);
    let mut row = vec![0u64; words_for(state.sites().max(1))];
    for l in 0..k {
        state.gram_row(l, cut.members().iter().copied(), &mut row);
        m.set_row_words(l, &row[..words_for(k)]);
    }
    Ok(m)
}

/// `E_N = ½ rank_{GF(2)} K`. The matrix is alternating, so the rank is even
/// and the negativity is an integer number of bits.
pub fn negativity(state: &StabilizerState, cut: &Cut) -> Result<usize> {
    let rank = build_k(state, cut)?.rank();
    debug_assert!(rank % 2 == 0, "alternating matrix with odd rank");
    Ok(rank / 2)
}
