//! Exact t-th moments (t = 1, 2) of the cost over uniform random parameters.
//!
//! A moment vector lives on the 2t-fold replicated register. After the site
//! decomposition every orbital carries 2t replica bits. Site strings are stored
//! as 2t replica bit-planes packed into one `u64`: plane `j` is the occupation
//! word of replica `j`. The symbol of site `i` is the column of plane bits at
//! position `i`.
//!
//! In this layout an in-site replica permutation acts on a whole string by
//! permuting the planes. Evenness means the XOR of all planes vanishes. A t=2
//! string is paired exactly when, in addition, every plane has weight η.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::combin::double_factorial;
use crate::error::{Error, Result};
use crate::hamiltonian::{ElectronicHamiltonian, ObservableTerm};
use crate::rotations::{AnsatzSpec, Rotation, RotationMasks};
use crate::sector::{enumerate_words, low_mask, parity_sign};

/// Amplitudes below this magnitude are dropped after each projector.
pub const PRUNE: f64 = 1e-15;

/// Largest orbital count accepted by the t=2 engine.
pub const MAX_T2_ORBITALS: usize = 10;

// ============================================================================
// Site symbols and packed strings
// ============================================================================

/// Even-weight symbol of one site; `E**` for t=1, `I**`/`X**` for t=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SiteSymbol {
    E00,
    E11,
    I00,
    I11,
    I01,
    I10,
    X00,
    X11,
    X01,
    X10,
}

/// Colour classes used by crossing numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Colour {
    Red,
    Green,
    Blue,
}

impl SiteSymbol {
    pub const T2: [SiteSymbol; 8] = [
        Self::I00,
        Self::I11,
        Self::I01,
        Self::I10,
        Self::X00,
        Self::X11,
        Self::X01,
        Self::X10,
    ];

    pub fn t(self) -> u32 {
        match self {
            Self::E00 | Self::E11 => 1,
            _ => 2,
        }
    }

    /// Replica bits with bit `j-1` holding replica `j` (ket |b1 b2 b3 b4⟩).
    pub fn pattern(self) -> u8 {
        match self {
            Self::E00 => 0b00,
            Self::E11 => 0b11,
            Self::I00 => 0b0000,
            Self::I11 => 0b1111,
            Self::I01 => 0b1100,
            Self::I10 => 0b0011,
            Self::X00 => 0b1010,
            Self::X11 => 0b0101,
            Self::X01 => 0b0110,
            Self::X10 => 0b1001,
        }
    }

    pub fn from_pattern(t: u32, pattern: u8) -> Option<Self> {
        match t {
            1 => [Self::E00, Self::E11].into_iter().find(|s| s.pattern() == pattern),
            2 => Self::T2.into_iter().find(|s| s.pattern() == pattern),
            _ => None,
        }
    }

    pub fn colour(self) -> Option<Colour> {
        match self {
            Self::I01 | Self::I10 => Some(Colour::Red),
            Self::X00 | Self::X11 => Some(Colour::Green),
            Self::X01 | Self::X10 => Some(Colour::Blue),
            _ => None,
        }
    }
}

impl fmt::Display for SiteSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[inline]
fn stride(t: u32) -> u32 {
    64 / (2 * t)
}

/// Split a packed key into its replica planes.
#[inline]
pub fn unpack(t: u32, key: u64) -> [u32; 4] {
    let st = stride(t);
    let m = if st == 32 { u32::MAX as u64 } else { (1u64 << st) - 1 };
    let mut p = [0u32; 4];
    for (j, slot) in p.iter_mut().enumerate().take(2 * t as usize) {
        *slot = ((key >> (st * j as u32)) & m) as u32;
    }
    p
}

#[inline]
pub fn pack(t: u32, planes: &[u32; 4]) -> u64 {
    let st = stride(t);
    let mut key = 0u64;
    for (j, &p) in planes.iter().enumerate().take(2 * t as usize) {
        key |= (p as u64) << (st * j as u32);
    }
    key
}

/// Symbol of 1-based `site`.
pub fn symbol_at(t: u32, key: u64, site: usize) -> SiteSymbol {
    let planes = unpack(t, key);
    let mut pat = 0u8;
    for (j, &p) in planes.iter().enumerate().take(2 * t as usize) {
        pat |= (((p >> (site - 1)) & 1) as u8) << j;
    }
    SiteSymbol::from_pattern(t, pat).expect("odd site pattern in packed key")
}

/// Pack a symbol list (site 1 first).
pub fn key_from_symbols(t: u32, symbols: &[SiteSymbol]) -> Result<u64> {
    let mut planes = [0u32; 4];
    for (i, s) in symbols.iter().enumerate() {
        if s.t() != t {
            return Err(Error::Domain(format!("symbol {s} is not a t={t} symbol")));
        }
        let pat = s.pattern();
        for (j, plane) in planes.iter_mut().enumerate().take(2 * t as usize) {
            *plane |= (((pat >> j) & 1) as u32) << i;
        }
    }
    Ok(pack(t, &planes))
}

pub fn symbols_of(t: u32, n: usize, key: u64) -> Vec<SiteSymbol> {
    (1..=n).map(|i| symbol_at(t, key, i)).collect()
}

/// Every site has even replica weight.
pub fn is_even(t: u32, key: u64) -> bool {
    let p = unpack(t, key);
    p[..2 * t as usize].iter().fold(0, |a, &x| a ^ x) == 0
}

/// Paired predicate: even and every replica plane has weight η.
pub fn is_paired(t: u32, key: u64, eta: usize) -> bool {
    let p = unpack(t, key);
    is_even(t, key) && p[..2 * t as usize].iter().all(|x| x.count_ones() as usize == eta)
}

fn check_t(t: u32) -> Result<()> {
    if t == 1 || t == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedT(t))
    }
}

// ============================================================================
// Sparse site vectors
// ============================================================================

/// Sparse real vector over packed site strings.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteVector {
    pub t: u32,
    pub n: usize,
    pub entries: BTreeMap<u64, f64>,
}

impl SiteVector {
    pub fn new(t: u32, n: usize) -> Result<Self> {
        check_t(t)?;
        if n == 0 || n > stride(t) as usize {
            return Err(Error::Domain(format!("n={n} does not fit t={t} packing")));
        }
        Ok(Self { t, n, entries: BTreeMap::new() })
    }

    pub fn insert(&mut self, key: u64, amp: f64) {
        if amp.abs() >= PRUNE {
            self.entries.insert(key, amp);
        } else {
            self.entries.remove(&key);
        }
    }

    pub fn get(&self, key: u64) -> f64 {
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entrywise difference norms (ℓ1, ℓ2, ℓ∞) against `other`.
    pub fn distance(&self, other: &SiteVector) -> Distances {
        let mut d = DistanceAcc::default();
        let mut a = self.entries.iter().peekable();
        let mut b = other.entries.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(&(ka, va)), Some(&(kb, vb))) => {
                    if ka == kb {
                        d.add(va - vb, 1.0);
                        a.next();
                        b.next();
                    } else if ka < kb {
                        d.add(*va, 1.0);
                        a.next();
                    } else {
                        d.add(*vb, 1.0);
                        b.next();
                    }
                }
                (Some(&(_, va)), None) => {
                    d.add(*va, 1.0);
                    a.next();
                }
                (None, Some(&(_, vb))) => {
                    d.add(*vb, 1.0);
                    b.next();
                }
            }
        }
        d.finish()
    }

    /// ⟨u|v⟩.
    pub fn dot(&self, other: &SiteVector) -> f64 {
        self.entries.iter().map(|(k, v)| v * other.get(*k)).sum()
    }
}

/// ⟨ψ0|^{⊗2t}: η sites all-ones, the rest all-zeros.
pub fn initial_moment_vector(n: usize, eta: usize, t: u32) -> Result<SiteVector> {
    if eta > n {
        return Err(Error::Domain(format!("eta={eta} exceeds n={n}")));
    }
    let mut v = SiteVector::new(t, n)?;
    let hf = low_mask(eta);
    v.insert(pack(t, &[hf; 4]), 1.0);
    Ok(v)
}

/// Covector ⟨1^{⊗t}|: replica pairs (2l-1, 2l) must agree.
#[inline]
pub fn identity_factor(t: u32, planes: &[u32; 4]) -> f64 {
    if (0..t as usize).all(|l| planes[2 * l] == planes[2 * l + 1]) {
        1.0
    } else {
        0.0
    }
}

/// ⟨x|T + T†|y⟩ for the generator masks of a term.
#[inline]
fn pair_factor(m: &RotationMasks, x: u32, y: u32) -> f64 {
    if x ^ y != m.register {
        return 0.0;
    }
    let py = y & m.register;
    if py == m.b0 || py == m.b1 {
        m.sign_of(y)
    } else {
        0.0
    }
}

/// Per-site product ⟨O|^{⊗t} on one string (site factors already folded into planes).
#[inline]
pub fn observable_factor(t: u32, m: &RotationMasks, planes: &[u32; 4]) -> f64 {
    let mut f = 1.0;
    for l in 0..t as usize {
        f *= pair_factor(m, planes[2 * l], planes[2 * l + 1]);
        if f == 0.0 {
            return 0.0;
        }
    }
    f
}

pub fn normalization(v: &SiteVector) -> f64 {
    v.entries.iter().map(|(&k, &a)| a * identity_factor(v.t, &unpack(v.t, k))).sum()
}

/// ⟨T + T†|^{⊗t} v (the unit-coefficient term).
pub fn observable_overlap(v: &SiteVector, term: &ObservableTerm) -> Result<f64> {
    check_t(v.t)?;
    let m = term.masks();
    Ok(v.entries.iter().map(|(&k, &a)| a * observable_factor(v.t, &m, &unpack(v.t, k))).sum())
}

// ============================================================================
// Closed-form projector entries
// ============================================================================

/// E[cos^K sin^F] for K, F even: (K-1)!!(F-1)!!/(K+F)!!.
fn trig_moment(k: u32, f: u32) -> f64 {
    if k % 2 == 1 || f % 2 == 1 {
        return 0.0;
    }
    let num = double_factorial(k as i64 - 1) * double_factorial(f as i64 - 1);
    num as f64 / double_factorial((k + f) as i64) as f64
}

/// Table indexed by [active][flipped].
fn weight_table() -> [[f64; 5]; 5] {
    let mut w = [[0.0; 5]; 5];
    for (a, row) in w.iter_mut().enumerate() {
        for (f, cell) in row.iter_mut().enumerate().take(a + 1) {
            *cell = trig_moment((a - f) as u32, f as u32);
        }
    }
    w
}

/// Emit the column of E[R^{⊗2t}] at `planes`.
///
/// Replica `j` is active when its register bits read b0 or b1. Flipping an
/// even subset of the active replicas gives the nonzero entries. The sign
/// collects (-1) for each flipped replica that starts in b1 (qubit rule), and
/// (-1)^{z_j} for its Z-string parity (fermionic conversion rule).
#[inline]
pub fn project_entry(t: u32, m: &RotationMasks, planes: &[u32; 4], weights: &[[f64; 5]; 5], mut emit: impl FnMut(&[u32; 4], f64)) {
    let reps = 2 * t as usize;
    let mut active = [0usize; 4];
    let mut flip_sign = [false; 4];
    let mut na = 0usize;
    for j in 0..reps {
        let pat = planes[j] & m.register;
        let in_b1 = if pat == m.b0 {
            false
        } else if pat == m.b1 {
            true
        } else {
            continue;
        };
        let zodd = (planes[j] & m.z).count_ones() % 2 == 1;
        active[na] = j;
        flip_sign[na] = in_b1 ^ zodd;
        na += 1;
    }
    if na == 0 {
        emit(planes, 1.0);
        return;
    }
    for subset in 0u32..(1 << na) {
        let f = subset.count_ones() as usize;
        let w = weights[na][f];
        if w == 0.0 {
            continue;
        }
        let mut out = *planes;
        let mut neg = false;
        for (a, &j) in active.iter().enumerate().take(na) {
            if subset >> a & 1 == 1 {
                out[j] ^= m.register;
                neg ^= flip_sign[a];
            }
        }
        emit(&out, if neg { -w } else { w });
    }
}

/// Closed-form application of E[R^{⊗2t}] to a sparse vector.
pub fn apply_moment(v: &SiteVector, r: &Rotation) -> Result<SiteVector> {
    check_t(v.t)?;
    if !r.fits(v.n) {
        return Err(Error::Domain(format!("{r} does not fit n={}", v.n)));
    }
    let m = r.masks();
    let weights = weight_table();
    let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
    for (&key, &amp) in &v.entries {
        project_entry(v.t, &m, &unpack(v.t, key), &weights, |out, c| {
            *acc.entry(pack(v.t, out)).or_insert(0.0) += c * amp;
        });
    }
    acc.retain(|_, a| a.abs() >= PRUNE);
    Ok(SiteVector { t: v.t, n: v.n, entries: acc })
}

// ============================================================================
// Symmetry-reduced propagation
// ============================================================================

/// Entrywise difference norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Default)]
struct DistanceAcc {
    l1: f64,
    l2: f64,
    linf: f64,
}

impl DistanceAcc {
    fn add(&mut self, d: f64, mult: f64) {
        let a = d.abs();
        self.l1 += mult * a;
        self.l2 += mult * a * a;
        self.linf = self.linf.max(a);
    }

    fn finish(self) -> Distances {
        Distances { l1: self.l1, l2: self.l2.sqrt(), linf: self.linf }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Distances {
    pub fn get(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.l1,
            Norm::L2 => self.l2,
            Norm::Linf => self.linf,
        }
    }
}

/// One row-compressed projector over the orbit basis.
#[derive(Debug)]
struct CompiledProjector {
    start: Vec<u32>,
    cols: Vec<u32>,
    coefs: Vec<f32>,
}

/// Cap on cached projector storage (bytes).
const CACHE_BUDGET: usize = 1 << 30;

/// All permutations of `m` items (m ≤ 4).
fn permutations(m: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    let mut cur = [0usize; 4];
    fn rec(m: usize, depth: usize, used: &mut [bool; 4], cur: &mut [usize; 4], out: &mut Vec<[usize; 4]>) {
        if depth == m {
            out.push(*cur);
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                cur[depth] = i;
                rec(m, depth + 1, used, cur, out);
                used[i] = false;
            }
        }
    }
    rec(m, 0, &mut [false; 4], &mut cur, &mut out);
    out
}

#[inline]
fn sort_planes(t: u32, p: &mut [u32; 4]) {
    if t == 1 {
        if p[0] > p[1] {
            p.swap(0, 1);
        }
        return;
    }
    if p[0] > p[1] {
        p.swap(0, 1);
    }
    if p[2] > p[3] {
        p.swap(2, 3);
    }
    if p[0] > p[2] {
        p.swap(0, 2);
    }
    if p[1] > p[3] {
        p.swap(1, 3);
    }
    if p[1] > p[2] {
        p.swap(1, 2);
    }
}

/// Canonical orbit representative under replica permutations.
#[inline]
pub fn canonical_key(t: u32, key: u64) -> u64 {
    let mut p = unpack(t, key);
    sort_planes(t, &mut p);
    pack(t, &p)
}

fn orbit_size(t: u32, planes: &[u32; 4]) -> u32 {
    let reps = 2 * t as usize;
    let total: u32 = (1..=reps as u32).product();
    let mut denom = 1u32;
    let mut i = 0;
    while i < reps {
        let mut j = i;
        while j < reps && planes[j] == planes[i] {
            j += 1;
        }
        denom *= (1..=(j - i) as u32).product::<u32>();
        i = j;
    }
    total / denom
}

/// Moment vector restricted to replica-symmetric vectors.
///
/// Coordinates are indexed by canonical orbit representatives; the stored
/// value is the common amplitude of every string in the orbit.
#[derive(Debug)]
pub struct MomentEngine {
    pub t: u32,
    pub n: usize,
    pub eta: usize,
    reps: Vec<u64>,
    mult: Vec<u32>,
    index: FxHashMap<u64, u32>,
    perms: Vec<[usize; 4]>,
    weights: [[f64; 5]; 5],
    cache: FxHashMap<Rotation, Arc<CompiledProjector>>,
    cached_bytes: usize,
}

impl MomentEngine {
    pub fn new(n: usize, eta: usize, t: u32) -> Result<Self> {
        check_t(t)?;
        crate::sector::Sector::new(n, eta)?;
        if t == 2 && n > MAX_T2_ORBITALS {
            return Err(Error::ResourceBound(format!(
                "t=2 propagation is limited to n <= {MAX_T2_ORBITALS} (requested n={n})"
            )));
        }
        let words = enumerate_words(n, eta);
        let mut reps = Vec::new();
        if t == 1 {
            reps.extend(words.iter().map(|&w| pack(1, &[w, w, 0, 0])));
        } else {
            for (a, &p1) in words.iter().enumerate() {
                for (b, &p2) in words.iter().enumerate().skip(a) {
                    for &p3 in &words[b..] {
                        let p4 = p1 ^ p2 ^ p3;
                        if p4 >= p3 && p4.count_ones() as usize == eta {
                            reps.push(pack(2, &[p1, p2, p3, p4]));
                        }
                    }
                }
            }
        }
        reps.sort_unstable();
        let mult = reps.iter().map(|&k| orbit_size(t, &unpack(t, k))).collect();
        let index = reps.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        Ok(Self {
            t,
            n,
            eta,
            reps,
            mult,
            index,
            perms: permutations(2 * t as usize),
            weights: weight_table(),
            cache: FxHashMap::default(),
            cached_bytes: 0,
        })
    }

    /// Number of orbit coordinates.
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Number of strings in the full space covered by the coordinates.
    pub fn full_dim(&self) -> u64 {
        self.mult.iter().map(|&m| m as u64).sum()
    }

    pub fn representatives(&self) -> &[u64] {
        &self.reps
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.mult
    }

    pub fn initial(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.reps.len()];
        let key = pack(self.t, &[low_mask(self.eta); 4]);
        w[self.index[&key] as usize] = 1.0;
        w
    }

    fn row(&self, m: &RotationMasks, i: usize, buf: &mut Vec<(u32, f64)>) -> Result<()> {
        buf.clear();
        let planes = unpack(self.t, self.reps[i]);
        let mut missing = None;
        project_entry(self.t, m, &planes, &self.weights, |out, c| {
            let mut p = *out;
            sort_planes(self.t, &mut p);
            match self.index.get(&pack(self.t, &p)) {
                Some(&col) => buf.push((col, c)),
                None => missing = Some(pack(self.t, out)),
            }
        });
        if let Some(k) = missing {
            return Err(Error::SupportViolation(format!("{:?}", symbols_of(self.t, self.n, k))));
        }
        buf.sort_unstable_by_key(|e| e.0);
        buf.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        buf.retain(|e| e.1 != 0.0);
        Ok(())
    }

    fn compile(&self, r: &Rotation) -> Result<CompiledProjector> {
        let m = r.masks();
        let mut start = Vec::with_capacity(self.reps.len() + 1);
        let mut cols = Vec::new();
        let mut coefs = Vec::new();
        let mut buf = Vec::new();
        start.push(0u32);
        for i in 0..self.reps.len() {
            self.row(&m, i, &mut buf)?;
            for &(c, v) in &buf {
                cols.push(c);
                coefs.push(v as f32);
            }
            start.push(cols.len() as u32);
        }
        Ok(CompiledProjector { start, cols, coefs })
    }

    /// One projector application; rows are cached while the budget allows.
    pub fn apply(&mut self, w: &[f64], r: &Rotation) -> Result<Vec<f64>> {
        if !r.fits(self.n) {
            return Err(Error::Domain(format!("{r} does not fit n={}", self.n)));
        }
        if !self.cache.contains_key(r) && self.cached_bytes < CACHE_BUDGET {
            let p = self.compile(r)?;
            self.cached_bytes += p.cols.len() * 8 + p.start.len() * 4;
            self.cache.insert(r.clone(), Arc::new(p));
        }
        let mut out = vec![0.0; w.len()];
        if let Some(p) = self.cache.get(r) {
            for (i, o) in out.iter_mut().enumerate() {
                let (a, b) = (p.start[i] as usize, p.start[i + 1] as usize);
                let mut s = 0.0;
                for e in a..b {
                    s += p.coefs[e] as f64 * w[p.cols[e] as usize];
                }
                *o = s;
            }
        } else {
            let m = r.masks();
            let mut buf = Vec::new();
            for (i, o) in out.iter_mut().enumerate() {
                self.row(&m, i, &mut buf)?;
                *o = buf.iter().map(|&(c, v)| v * w[c as usize]).sum();
            }
        }
        Ok(out)
    }

    /// One alternation (the whole block, in order).
    pub fn apply_block(&mut self, w: &[f64], block: &[Rotation]) -> Result<Vec<f64>> {
        let mut cur = w.to_vec();
        for r in block {
            cur = self.apply(&cur, r)?;
        }
        Ok(cur)
    }

    /// Full-space sum Σ_Φ v(Φ) f(Φ) of a replica-covariant functional.
    fn full_sum(&self, w: &[f64], f: impl Fn(&[u32; 4]) -> f64) -> f64 {
        let norm = self.perms.len() as f64;
        let mut total = 0.0;
        for (i, &a) in w.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let planes = unpack(self.t, self.reps[i]);
            let mut s = 0.0;
            for perm in &self.perms {
                let mut q = [0u32; 4];
                for (j, &src) in perm.iter().enumerate() {
                    q[j] = planes[src];
                }
                s += f(&q);
            }
            total += a * self.mult[i] as f64 * s / norm;
        }
        total
    }

    pub fn normalization(&self, w: &[f64]) -> f64 {
        self.full_sum(w, |p| identity_factor(self.t, p))
    }

    /// ⟨T + T†|^{⊗t} Ψ for the unit-coefficient term.
    pub fn overlap(&self, w: &[f64], term: &ObservableTerm) -> f64 {
        let m = term.masks();
        self.full_sum(w, |p| observable_factor(self.t, &m, p))
    }

    /// Σ_T c_T^t ⟨T|^{⊗t}Ψ.
    pub fn moment(&self, w: &[f64], h: &ElectronicHamiltonian) -> f64 {
        h.terms.iter().map(|term| term.coefficient.powi(self.t as i32) * self.overlap(w, term)).sum()
    }

    pub fn support_size(&self, w: &[f64]) -> u64 {
        w.iter().zip(&self.mult).filter(|(a, _)| a.abs() >= PRUNE).map(|(_, &m)| m as u64).sum()
    }

    pub fn distance(&self, w: &[f64], reference: &[f64]) -> Distances {
        let mut d = DistanceAcc::default();
        for i in 0..w.len() {
            d.add(w[i] - reference[i], self.mult[i] as f64);
        }
        d.finish()
    }

    /// Evaluate a replica-symmetric amplitude function on every coordinate.
    pub fn coordinates_of(&self, f: impl Fn(u64) -> f64) -> Vec<f64> {
        self.reps.iter().map(|&k| f(k)).collect()
    }

    /// Expand to the full sparse vector.
    pub fn to_site_vector(&self, w: &[f64]) -> SiteVector {
        let mut v = SiteVector { t: self.t, n: self.n, entries: BTreeMap::new() };
        for (i, &a) in w.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let planes = unpack(self.t, self.reps[i]);
            for perm in &self.perms {
                let mut q = [0u32; 4];
                for (j, &src) in perm.iter().enumerate() {
                    q[j] = planes[src];
                }
                v.entries.insert(pack(self.t, &q), a);
            }
        }
        v
    }

    /// Propagate `k` alternations, calling `visit(k, w)` after each (k = 0 first).
    pub fn propagate(
        &mut self,
        spec: &AnsatzSpec,
        k: usize,
        mut visit: impl FnMut(&Self, usize, &[f64]) -> Result<()>,
    ) -> Result<Vec<f64>> {
        self.check_spec(spec)?;
        let mut w = self.initial();
        visit(self, 0, &w)?;
        for step in 1..=k {
            w = self.apply_block(&w, &spec.block)?;
            visit(self, step, &w)?;
        }
        Ok(w)
    }

    fn check_spec(&self, spec: &AnsatzSpec) -> Result<()> {
        spec.validate()?;
        if spec.n != self.n || spec.eta != self.eta {
            return Err(Error::Domain(format!(
                "spec sector ({}, {}) differs from engine ({}, {})",
                spec.n, spec.eta, self.n, self.eta
            )));
        }
        Ok(())
    }
}

/// Summary of one moment evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub k: usize,
    pub value: f64,
    pub normalization: f64,
    pub support_size: u64,
}

/// Ψ_{t,k} as a sparse vector over the full site-string space.
pub fn moment_vector(spec: &AnsatzSpec, t: u32, k: usize) -> Result<SiteVector> {
    let mut e = MomentEngine::new(spec.n, spec.eta, t)?;
    let w = e.propagate(spec, k, |_, _, _| Ok(()))?;
    Ok(e.to_site_vector(&w))
}

/// E[C] at alternation count `k` (spec.k is ignored).
pub fn first_moment(spec: &AnsatzSpec, h: &ElectronicHamiltonian, k: usize) -> Result<f64> {
    moment_report(spec, h, 1, k).map(|r| r.value)
}

/// Σ_T c_T² ⟨T|^{⊗2}Ψ_{2,k}, equal to Var[C] since the mean vanishes.
pub fn second_moment(spec: &AnsatzSpec, h: &ElectronicHamiltonian, k: usize) -> Result<f64> {
    moment_report(spec, h, 2, k).map(|r| r.value)
}

pub fn moment_report(spec: &AnsatzSpec, h: &ElectronicHamiltonian, t: u32, k: usize) -> Result<MomentReport> {
    let mut e = MomentEngine::new(spec.n, spec.eta, t)?;
    let w = e.propagate(spec, k, |_, _, _| Ok(()))?;
    Ok(MomentReport { k, value: e.moment(&w, h), normalization: e.normalization(&w), support_size: e.support_size(&w) })
}

/// Distance between Ψ_{t,k} and its k → ∞ limit.
pub fn distance_to_limit(spec: &AnsatzSpec, t: u32, k: usize, norm: Norm) -> Result<f64> {
    let mut e = MomentEngine::new(spec.n, spec.eta, t)?;
    let limit = crate::asymptotics::limit_coordinates(&e, spec)?;
    let w = e.propagate(spec, k, |_, _, _| Ok(()))?;
    Ok(e.distance(&w, &limit).get(norm))
}

/// Expected value of a parity sign, used by tests and the quadrature oracle.
#[inline]
pub fn parity(word: u32) -> f64 {
    parity_sign(word) as f64
}
