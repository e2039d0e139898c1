//! Occupation-number basis states and fixed particle-number sectors.
//!
//! Orbitals are numbered from 1. Orbital `i` lives in bit `i - 1` of the
//! occupation word, so orbital 1 is the least significant bit. Sector states
//! are ordered by ascending integer value of that word.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::combin::binomial;
use crate::error::{Error, Result};

/// Largest orbital count supported anywhere in the crate.
pub const MAX_ORBITALS: usize = 28;

/// Bit mask of a single 1-based orbital.
#[inline]
pub fn orbital_bit(orbital: usize) -> u32 {
    1u32 << (orbital - 1)
}

/// Mask of the orbitals strictly between `lo` and `hi` (1-based, `lo < hi`).
#[inline]
pub fn open_interval_mask(lo: usize, hi: usize) -> u32 {
    if hi <= lo + 1 {
        return 0;
    }
    let upto_hi = (1u32 << (hi - 1)) - 1;
    let upto_lo = (1u32 << lo) - 1;
    upto_hi & !upto_lo
}

/// Occupation bit string of `n` spin-orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub bits: u32,
    pub n: usize,
}

impl BasisState {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ORBITALS {
            return Err(Error::Domain(format!("orbital count {n} outside 1..={MAX_ORBITALS}")));
        }
        if n < 32 && bits >> n != 0 {
            return Err(Error::Domain(format!("bits {bits:#b} exceed {n} orbitals")));
        }
        Ok(Self { bits, n })
    }

    /// Build from a list of occupied 1-based orbitals.
    pub fn from_orbitals(n: usize, occupied: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &o in occupied {
            if o == 0 || o > n {
                return Err(Error::IndexRange(format!("orbital {o} not in 1..={n}")));
            }
            bits |= orbital_bit(o);
        }
        Self::new(bits, n)
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_occupied(&self, orbital: usize) -> bool {
        self.bits & orbital_bit(orbital) != 0
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for i in 1..=self.n {
            write!(f, "{}", if self.is_occupied(i) { '1' } else { '0' })?;
        }
        write!(f, "⟩")
    }
}

/// Hartree-Fock reference: orbitals 1..=eta occupied.
pub fn hartree_fock_state(n: usize, eta: usize) -> Result<BasisState> {
    if eta > n {
        return Err(Error::Domain(format!("eta={eta} exceeds n={n}")));
    }
    BasisState::new(low_mask(eta), n)
}

#[inline]
pub fn low_mask(count: usize) -> u32 {
    if count >= 32 {
        u32::MAX
    } else {
        (1u32 << count) - 1
    }
}

/// Product of (-1)^{bit_a} over the listed orbitals.
pub fn jw_phase(state: &BasisState, orbitals: &[usize]) -> i32 {
    let mut mask = 0u32;
    for &a in orbitals {
        mask ^= orbital_bit(a);
    }
    parity_sign(state.bits & mask)
}

#[inline]
pub fn parity_sign(word: u32) -> i32 {
    if word.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Fixed particle-number sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub n: usize,
    pub eta: usize,
}

impl Sector {
    pub fn new(n: usize, eta: usize) -> Result<Self> {
        if n == 0 || n > MAX_ORBITALS {
            return Err(Error::Domain(format!("orbital count {n} outside 1..={MAX_ORBITALS}")));
        }
        if eta > n {
            return Err(Error::Domain(format!("eta={eta} exceeds n={n}")));
        }
        Ok(Self { n, eta })
    }

    pub fn dim(&self) -> usize {
        binomial(self.n as u64, self.eta as u64) as usize
    }
}

/// All sector states in ascending integer order.
pub fn enumerate_sector(sector: &Sector) -> Vec<BasisState> {
    enumerate_words(sector.n, sector.eta)
        .into_iter()
        .map(|bits| BasisState { bits, n: sector.n })
        .collect()
}

/// All `n`-bit words of weight `eta`, ascending (Gosper's hack).
pub fn enumerate_words(n: usize, eta: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n as u64, eta as u64) as usize);
    if eta == 0 {
        out.push(0);
        return out;
    }
    if eta > n {
        return out;
    }
    let limit: u64 = 1u64 << n;
    let mut x: u64 = (1u64 << eta) - 1;
    while x < limit {
        out.push(x as u32);
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// Colex ranking of fixed-weight words; coincides with ascending integer order.
#[derive(Debug, Clone)]
pub struct Ranker {
    table: Vec<[u32; MAX_ORBITALS + 1]>,
}

impl Ranker {
    pub fn new(n: usize) -> Self {
        let mut table = vec![[0u32; MAX_ORBITALS + 1]; n + 1];
        for (pos, row) in table.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = binomial(pos as u64, k as u64) as u32;
            }
        }
        Self { table }
    }

    #[inline]
    pub fn rank(&self, mut word: u32) -> usize {
        let mut r = 0u32;
        let mut i = 1usize;
        while word != 0 {
            let pos = word.trailing_zeros() as usize;
            r += self.table[pos][i];
            i += 1;
            word &= word - 1;
        }
        r as usize
    }
}

/// Position of `state` in the canonical order of its sector.
pub fn index_of(state: &BasisState) -> usize {
    Ranker::new(state.n).rank(state.bits)
}

/// Dense real amplitudes over one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorVector {
    pub sector: Sector,
    pub words: std::sync::Arc<Vec<u32>>,
    pub amplitudes: Vec<f64>,
}

impl SectorVector {
    /// Basis vector on `state`.
    pub fn basis(sector: Sector, state: &BasisState) -> Result<Self> {
        if state.n != sector.n || state.weight() != sector.eta {
            return Err(Error::Domain(format!("{state} not in sector ({}, {})", sector.n, sector.eta)));
        }
        let words = std::sync::Arc::new(enumerate_words(sector.n, sector.eta));
        let mut amplitudes = vec![0.0; words.len()];
        amplitudes[index_of(state)] = 1.0;
        Ok(Self { sector, words, amplitudes })
    }

    pub fn hartree_fock(n: usize, eta: usize) -> Result<Self> {
        let sector = Sector::new(n, eta)?;
        Self::basis(sector, &hartree_fock_state(n, eta)?)
    }

    pub fn from_amplitudes(sector: Sector, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::Domain(format!(
                "amplitude length {} != sector dim {}",
                amplitudes.len(),
                sector.dim()
            )));
        }
        let words = std::sync::Arc::new(enumerate_words(sector.n, sector.eta));
        Ok(Self { sector, words, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn amplitude(&self, state: &BasisState) -> f64 {
        self.amplitudes[index_of(state)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hartree_fock_examples() {
        assert_eq!(hartree_fock_state(4, 2).unwrap().to_string(), "|1100⟩");
        assert_eq!(hartree_fock_state(3, 0).unwrap().to_string(), "|000⟩");
        assert_eq!(hartree_fock_state(1, 1).unwrap().to_string(), "|1⟩");
        assert!(hartree_fock_state(2, 3).is_err());
    }

    #[test]
    fn sector_enumeration_examples() {
        let s = Sector::new(4, 2).unwrap();
        assert_eq!(enumerate_sector(&s).len(), 6);
        let s = Sector::new(2, 1).unwrap();
        let names: Vec<String> = enumerate_sector(&s).iter().map(|b| b.to_string()).collect();
        assert_eq!(names, vec!["|10⟩", "|01⟩"]);
        let s = Sector::new(5, 5).unwrap();
        let all = enumerate_sector(&s);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].to_string(), "|11111⟩");
    }

    #[test]
    fn rank_inverts_enumeration() {
        for n in 1..=12 {
            for eta in 0..=n {
                let s = Sector::new(n, eta).unwrap();
                let states = enumerate_sector(&s);
                assert_eq!(states.len(), s.dim());
                for (i, b) in states.iter().enumerate() {
                    assert_eq!(index_of(b), i);
                    assert_eq!(b.weight(), eta);
                }
                assert!(states.windows(2).all(|w| w[0].bits < w[1].bits));
                let hf = hartree_fock_state(n, eta).unwrap();
                assert!(states.contains(&hf));
            }
        }
    }

    #[test]
    fn jw_phase_examples() {
        let b = BasisState::from_orbitals(4, &[1, 2]).unwrap();
        assert_eq!(jw_phase(&b, &[1]), -1);
        let vac = BasisState::new(0, 4).unwrap();
        assert_eq!(jw_phase(&vac, &[1, 2, 3, 4]), 1);
        let b = BasisState::from_orbitals(4, &[1, 3]).unwrap();
        assert_eq!(jw_phase(&b, &[1, 2, 3]), 1);
    }

    #[test]
    fn interval_mask() {
        assert_eq!(open_interval_mask(1, 2), 0);
        assert_eq!(open_interval_mask(1, 4), 0b0110);
        assert_eq!(open_interval_mask(2, 5), 0b01100);
    }
}
