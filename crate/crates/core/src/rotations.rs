//! Excitation rotations, their statevector action, and the named ansatz families.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sector::{open_interval_mask, orbital_bit, parity_sign, Ranker, SectorVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationKind {
    FermionicSingle,
    FermionicDouble,
    QubitSingle,
    QubitDouble,
}

impl RotationKind {
    pub fn is_double(self) -> bool {
        matches!(self, Self::FermionicDouble | Self::QubitDouble)
    }

    pub fn is_fermionic(self) -> bool {
        matches!(self, Self::FermionicSingle | Self::FermionicDouble)
    }

    pub fn arity(self) -> usize {
        if self.is_double() {
            4
        } else {
            2
        }
    }

    pub const ALL: [RotationKind; 4] =
        [Self::FermionicSingle, Self::FermionicDouble, Self::QubitSingle, Self::QubitDouble];
}

/// One excitation rotation exp(θ(τ − τ†)).
///
/// `indices` are strictly descending: (p, q) for singles, (p, q, r, s) for doubles.
/// The creation side is the first half, the annihilation side the second half.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rotation {
    pub kind: RotationKind,
    pub indices: Vec<usize>,
}

/// Bit masks describing how a rotation acts on an occupation word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationMasks {
    /// All touched orbitals.
    pub register: u32,
    /// Pattern of the touched orbitals in b0 (annihilation side occupied).
    pub b0: u32,
    /// Pattern of the touched orbitals in b1 (creation side occupied).
    pub b1: u32,
    /// Jordan-Wigner Z-string support (empty for qubit kinds).
    pub z: u32,
    /// Overall sign of the Q-monomial in τ.
    pub sign: i32,
}

impl RotationMasks {
    /// Sign s(x) with τ|x⟩ = s(x)|x ⊕ register⟩ for a b0-type word x.
    #[inline]
    pub fn sign_of(&self, x: u32) -> f64 {
        (self.sign * parity_sign(x & self.z)) as f64
    }

    /// τ|x⟩ as (word, sign), or None when x is not of b0 type.
    #[inline]
    pub fn excite(&self, x: u32) -> Option<(u32, f64)> {
        if x & self.register == self.b0 {
            Some((x ^ self.register, self.sign_of(x)))
        } else {
            None
        }
    }
}

impl Rotation {
    pub fn new(kind: RotationKind, indices: &[usize]) -> Result<Self> {
        let r = Self { kind, indices: indices.to_vec() };
        r.validate()?;
        Ok(r)
    }

    pub fn single(kind: RotationKind, p: usize, q: usize) -> Result<Self> {
        Self::new(kind, &[p, q])
    }

    pub fn validate(&self) -> Result<()> {
        if self.indices.len() != self.kind.arity() {
            return Err(Error::Domain(format!(
                "{:?} needs {} indices, got {:?}",
                self.kind,
                self.kind.arity(),
                self.indices
            )));
        }
        if self.indices.iter().any(|&i| i == 0) {
            return Err(Error::IndexRange(format!("{:?}: indices are 1-based", self.indices)));
        }
        if !self.indices.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::IndexOrder(format!("{:?} is not strictly descending", self.indices)));
        }
        Ok(())
    }

    pub fn fits(&self, n: usize) -> bool {
        self.indices[0] <= n
    }

    pub fn masks(&self) -> RotationMasks {
        let ix = &self.indices;
        let r = ix.len() / 2;
        let b1 = ix[..r].iter().fold(0, |m, &o| m | orbital_bit(o));
        let b0 = ix[r..].iter().fold(0, |m, &o| m | orbital_bit(o));
        let (z, sign) = match self.kind {
            RotationKind::FermionicSingle => (open_interval_mask(ix[1], ix[0]), 1),
            RotationKind::FermionicDouble => {
                (open_interval_mask(ix[3], ix[2]) | open_interval_mask(ix[1], ix[0]), -1)
            }
            RotationKind::QubitSingle | RotationKind::QubitDouble => (0, 1),
        };
        RotationMasks { register: b0 | b1, b0, b1, z, sign }
    }

    /// R(θ)|x⟩ on an arbitrary occupation word, as at most two (word, amplitude) terms.
    pub fn basis_action(&self, x: u32, theta: f64) -> [(u32, f64); 2] {
        basis_action(&self.masks(), x, theta)
    }
}

/// R(θ)|x⟩ for precomputed masks. A second term with amplitude 0 marks "no partner".
#[inline]
pub fn basis_action(m: &RotationMasks, x: u32, theta: f64) -> [(u32, f64); 2] {
    let (sn, cs) = theta.sin_cos();
    let pat = x & m.register;
    if pat == m.b0 {
        [(x, cs), (x ^ m.register, m.sign_of(x) * sn)]
    } else if pat == m.b1 {
        [(x, cs), (x ^ m.register, -m.sign_of(x) * sn)]
    } else {
        [(x, 1.0), (x, 0.0)]
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            RotationKind::FermionicSingle => "A",
            RotationKind::FermionicDouble => "B",
            RotationKind::QubitSingle => "Aq",
            RotationKind::QubitDouble => "Bq",
        };
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{name}({})", idx.join(","))
    }
}

/// Named ansatz families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnsatzClass {
    #[serde(rename = "UCCS")]
    Uccs,
    #[serde(rename = "UCCGS")]
    Uccgs,
    #[serde(rename = "UCCSD")]
    Uccsd,
    #[serde(rename = "UCCGSD")]
    Uccgsd,
    #[serde(rename = "qUCCS")]
    QUccs,
    #[serde(rename = "qUCCGS")]
    QUccgs,
    #[serde(rename = "qUCCSD")]
    QUccsd,
    #[serde(rename = "qUCCGSD")]
    QUccgsd,
    #[serde(rename = "BRA")]
    Bra,
    #[serde(rename = "UpCCGSD")]
    UpCcgsd,
}

impl AnsatzClass {
    pub const ALL: [AnsatzClass; 10] = [
        Self::Uccs,
        Self::Uccgs,
        Self::Uccsd,
        Self::Uccgsd,
        Self::QUccs,
        Self::QUccgs,
        Self::QUccsd,
        Self::QUccgsd,
        Self::Bra,
        Self::UpCcgsd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uccs => "UCCS",
            Self::Uccgs => "UCCGS",
            Self::Uccsd => "UCCSD",
            Self::Uccgsd => "UCCGSD",
            Self::QUccs => "qUCCS",
            Self::QUccgs => "qUCCGS",
            Self::QUccsd => "qUCCSD",
            Self::QUccgsd => "qUCCGSD",
            Self::Bra => "BRA",
            Self::UpCcgsd => "UpCCGSD",
        }
    }
}

impl fmt::Display for AnsatzClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().trim_start_matches("k-").to_ascii_lowercase().replace("qubit-", "q");
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// One alternation block repeated `k` times with independent parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub class: Option<AnsatzClass>,
    pub n: usize,
    pub eta: usize,
    pub k: usize,
    pub block: Vec<Rotation>,
}

impl AnsatzSpec {
    pub fn custom(n: usize, eta: usize, k: usize, block: Vec<Rotation>) -> Result<Self> {
        let s = Self { class: None, n, eta, k, block };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        crate::sector::Sector::new(self.n, self.eta)?;
        for r in &self.block {
            r.validate()?;
            if !r.fits(self.n) {
                return Err(Error::IndexRange(format!("{r} does not fit n={}", self.n)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ansatz spec serializes")
    }

    pub fn num_params(&self) -> usize {
        self.k * self.block.len()
    }

    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn label(&self) -> String {
        self.class.map(|c| c.name().to_string()).unwrap_or_else(|| "custom".to_string())
    }
}

/// Parameters θ^{(i)}_j flattened alternation-major, each reduced into [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values: values.into_iter().map(reduce_angle).collect() }
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn set(&mut self, j: usize, value: f64) {
        self.values[j] = reduce_angle(value);
    }
}

pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Apply one rotation to a sector vector.
pub fn apply_rotation(state: &SectorVector, r: &Rotation, theta: f64) -> Result<SectorVector> {
    if !r.fits(state.sector.n) {
        return Err(Error::Domain(format!("{r} does not fit n={}", state.sector.n)));
    }
    let mut out = state.clone();
    let ranker = Ranker::new(state.sector.n);
    rotate_in_place(&mut out.amplitudes, &state.words, &ranker, &r.masks(), theta);
    Ok(out)
}

/// In-place rotation over the sector words; only b0-type words are visited.
pub fn rotate_in_place(amps: &mut [f64], words: &[u32], ranker: &Ranker, m: &RotationMasks, theta: f64) {
    let (sn, cs) = theta.sin_cos();
    for (i, &w) in words.iter().enumerate() {
        if w & m.register != m.b0 {
            continue;
        }
        let j = ranker.rank(w ^ m.register);
        let s = m.sign_of(w) * sn;
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = cs * a0 - s * a1;
        amps[j] = s * a0 + cs * a1;
    }
}

/// Apply all alternations, alternation 1 first and block order within each.
pub fn apply_ansatz(state: &SectorVector, spec: &AnsatzSpec, params: &ParameterVector) -> Result<SectorVector> {
    check_dims(state, spec, params)?;
    let circuit = Circuit::compile(spec)?;
    let mut out = state.clone();
    circuit.run(&mut out.amplitudes, params.values());
    Ok(out)
}

/// U(θ)|HF⟩.
pub fn prepare_state(spec: &AnsatzSpec, params: &ParameterVector) -> Result<SectorVector> {
    let hf = SectorVector::hartree_fock(spec.n, spec.eta)?;
    apply_ansatz(&hf, spec, params)
}

fn check_dims(state: &SectorVector, spec: &AnsatzSpec, params: &ParameterVector) -> Result<()> {
    if state.sector.n != spec.n || state.sector.eta != spec.eta {
        return Err(Error::Domain(format!(
            "state sector ({}, {}) does not match spec ({}, {})",
            state.sector.n, state.sector.eta, spec.n, spec.eta
        )));
    }
    if params.len() != spec.num_params() {
        return Err(Error::Domain(format!(
            "parameter count {} != k·|block| = {}",
            params.len(),
            spec.num_params()
        )));
    }
    Ok(())
}

/// Matched index pairs of one rotation inside a sector.
#[derive(Debug, Clone)]
struct PairList {
    lo: Vec<u32>,
    hi: Vec<u32>,
    sign: Vec<f64>,
}

/// Rotation block compiled against the sector of a spec.
#[derive(Debug, Clone)]
pub struct Circuit {
    k: usize,
    pairs: Vec<PairList>,
    dim: usize,
}

impl Circuit {
    pub fn compile(spec: &AnsatzSpec) -> Result<Self> {
        spec.validate()?;
        let words = crate::sector::enumerate_words(spec.n, spec.eta);
        let ranker = Ranker::new(spec.n);
        let pairs = spec
            .block
            .iter()
            .map(|r| {
                let m = r.masks();
                let mut pl = PairList { lo: Vec::new(), hi: Vec::new(), sign: Vec::new() };
                for (i, &w) in words.iter().enumerate() {
                    if w & m.register == m.b0 {
                        pl.lo.push(i as u32);
                        pl.hi.push(ranker.rank(w ^ m.register) as u32);
                        pl.sign.push(m.sign_of(w));
                    }
                }
                pl
            })
            .collect();
        Ok(Self { k: spec.k, pairs, dim: words.len() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_params(&self) -> usize {
        self.k * self.pairs.len()
    }

    /// Apply rotation `j` of the flattened parameter list.
    #[inline]
    pub fn apply_one(&self, amps: &mut [f64], j: usize, theta: f64) {
        let pl = &self.pairs[j % self.pairs.len()];
        let (sn, cs) = theta.sin_cos();
        for t in 0..pl.lo.len() {
            let (i, k) = (pl.lo[t] as usize, pl.hi[t] as usize);
            let s = pl.sign[t] * sn;
            let (a0, a1) = (amps[i], amps[k]);
            amps[i] = cs * a0 - s * a1;
            amps[k] = s * a0 + cs * a1;
        }
    }

    pub fn run(&self, amps: &mut [f64], thetas: &[f64]) {
        debug_assert_eq!(thetas.len(), self.num_params());
        for (j, &th) in thetas.iter().enumerate() {
            self.apply_one(amps, j, th);
        }
    }

    /// Run rotations `[from, to)` of the flattened parameter list.
    pub fn run_range(&self, amps: &mut [f64], thetas: &[f64], from: usize, to: usize) {
        for (j, &th) in thetas.iter().enumerate().take(to).skip(from) {
            self.apply_one(amps, j, th);
        }
    }
}

/// Build a named ansatz family.
pub fn build_ansatz(class: AnsatzClass, n: usize, eta: usize, k: usize) -> Result<AnsatzSpec> {
    use RotationKind::*;
    crate::sector::Sector::new(n, eta)?;
    let occ = 1..=eta;
    let vir = eta + 1..=n;

    let ordered_pairs = |gen: bool| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for p in 1..=n {
            for q in 1..p {
                if gen || (vir.contains(&p) && occ.contains(&q)) {
                    v.push((p, q));
                }
            }
        }
        v
    };
    let ordered_quads = |gen: bool| -> Vec<[usize; 4]> {
        let mut v = Vec::new();
        for p in 1..=n {
            for q in 1..p {
                for r in 1..q {
                    for s in 1..r {
                        if gen || (vir.contains(&q) && occ.contains(&r)) {
                            v.push([p, q, r, s]);
                        }
                    }
                }
            }
        }
        v
    };

    let singles = |kind: RotationKind, gen: bool| -> Vec<Rotation> {
        ordered_pairs(gen).into_iter().map(|(p, q)| Rotation { kind, indices: vec![p, q] }).collect()
    };
    let doubles = |kind: RotationKind, gen: bool| -> Vec<Rotation> {
        ordered_quads(gen).into_iter().map(|ix| Rotation { kind, indices: ix.to_vec() }).collect()
    };

    let block: Vec<Rotation> = match class {
        AnsatzClass::Uccs => singles(FermionicSingle, false),
        AnsatzClass::Uccgs => singles(FermionicSingle, true),
        AnsatzClass::Uccsd => [singles(FermionicSingle, false), doubles(FermionicDouble, false)].concat(),
        AnsatzClass::Uccgsd => [singles(FermionicSingle, true), doubles(FermionicDouble, true)].concat(),
        AnsatzClass::QUccs => singles(QubitSingle, false),
        AnsatzClass::QUccgs => singles(QubitSingle, true),
        AnsatzClass::QUccsd => [singles(QubitSingle, false), doubles(QubitDouble, false)].concat(),
        AnsatzClass::QUccgsd => [singles(QubitSingle, true), doubles(QubitDouble, true)].concat(),
        AnsatzClass::Bra => (1..n).map(|p| Rotation { kind: FermionicSingle, indices: vec![p + 1, p] }).collect(),
        AnsatzClass::UpCcgsd => {
            if n % 2 != 0 {
                return Err(Error::Domain(format!("UpCCGSD needs an even orbital count, got n={n}")));
            }
            let mut v = singles(FermionicSingle, true);
            for a in 1..=n / 2 {
                for b in 1..a {
                    v.push(Rotation { kind: FermionicDouble, indices: vec![2 * a, 2 * a - 1, 2 * b, 2 * b - 1] });
                }
            }
            v
        }
    };
    Ok(AnsatzSpec { class: Some(class), n, eta, k, block })
}
