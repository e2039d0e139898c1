//! Restricted electronic-structure observables and the cost function.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotations::{prepare_state, AnsatzSpec, ParameterVector, Rotation, RotationKind, RotationMasks};
use crate::sector::{Ranker, SectorVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    SingleBody,
    DoubleBody,
}

/// c·(T + T†) with T = a†_p a_q or a†_p a†_q a_r a_s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableTerm {
    pub kind: TermKind,
    pub indices: Vec<usize>,
    pub coefficient: f64,
}

impl ObservableTerm {
    pub fn single(p: usize, q: usize, h: f64) -> Result<Self> {
        let t = Self { kind: TermKind::SingleBody, indices: vec![p, q], coefficient: h };
        t.validate(None)?;
        Ok(t)
    }

    pub fn double(p: usize, q: usize, r: usize, s: usize, g: f64) -> Result<Self> {
        let t = Self { kind: TermKind::DoubleBody, indices: vec![p, q, r, s], coefficient: g };
        t.validate(None)?;
        Ok(t)
    }

    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        let want = match self.kind {
            TermKind::SingleBody => 2,
            TermKind::DoubleBody => 4,
        };
        if self.indices.len() != want {
            return Err(Error::Malformed(format!("term {:?} needs {want} indices", self.indices)));
        }
        if !self.coefficient.is_finite() {
            return Err(Error::Malformed(format!("term {:?} has non-finite coefficient", self.indices)));
        }
        if !self.indices.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::IndexOrder(format!("{:?}", self.indices)));
        }
        let lo = *self.indices.last().unwrap();
        if lo == 0 || n.is_some_and(|n| self.indices[0] > n) {
            return Err(Error::IndexRange(format!("{:?} not in 1..={}", self.indices, n.unwrap_or(0))));
        }
        Ok(())
    }

    /// The excitation rotation sharing this term's generator T.
    pub fn generator(&self) -> Rotation {
        let kind = match self.kind {
            TermKind::SingleBody => RotationKind::FermionicSingle,
            TermKind::DoubleBody => RotationKind::FermionicDouble,
        };
        Rotation { kind, indices: self.indices.clone() }
    }

    pub fn masks(&self) -> RotationMasks {
        self.generator().masks()
    }

    /// Label such as `h:2,1` or `g:4,3,2,1`.
    pub fn label(&self) -> String {
        let tag = match self.kind {
            TermKind::SingleBody => 'h',
            TermKind::DoubleBody => 'g',
        };
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        format!("{tag}:{}", idx.join(","))
    }

    pub fn with_coefficient(&self, c: f64) -> Self {
        Self { coefficient: c, ..self.clone() }
    }
}

impl fmt::Display for ObservableTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `h:p,q[=coef]` or `g:p,q,r,s[=coef]`; the coefficient defaults to 1.
impl FromStr for ObservableTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("term '{s}' (expected h:p,q or g:p,q,r,s, optional =coef)"));
        let (tag, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let (idx, coef) = match rest.split_once('=') {
            Some((i, c)) => (i, c.trim().parse::<f64>().map_err(|_| bad())?),
            None => (rest, 1.0),
        };
        let ix: Vec<usize> =
            idx.split(',').map(|x| x.trim().parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let kind = match (tag.trim(), ix.len()) {
            ("h", 2) => TermKind::SingleBody,
            ("g", 4) => TermKind::DoubleBody,
            _ => return Err(bad()),
        };
        let t = Self { kind, indices: ix, coefficient: coef };
        t.validate(None)?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SingleEntry {
    p: usize,
    q: usize,
    h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DoubleEntry {
    p: usize,
    q: usize,
    r: usize,
    s: usize,
    g: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HamiltonianDoc {
    n: usize,
    #[serde(default)]
    eta: Option<usize>,
    #[serde(default)]
    singles: Vec<SingleEntry>,
    #[serde(default)]
    doubles: Vec<DoubleEntry>,
}

/// H = Σ h_pq (a†_p a_q + h.c.) + Σ g_pqrs (a†_p a†_q a_r a_s + h.c.).
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronicHamiltonian {
    pub n: usize,
    pub eta: Option<usize>,
    pub terms: Vec<ObservableTerm>,
    pub h_norm2: f64,
    pub g_norm2: f64,
}

impl ElectronicHamiltonian {
    pub fn new(n: usize, eta: Option<usize>, terms: Vec<ObservableTerm>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &terms {
            t.validate(Some(n))?;
            if !seen.insert(t.indices.clone()) {
                return Err(Error::Duplicate(format!("{:?}", t.indices)));
            }
        }
        let norm = |kind| terms.iter().filter(|t| t.kind == kind).map(|t| t.coefficient * t.coefficient).sum();
        Ok(Self { n, eta, h_norm2: norm(TermKind::SingleBody), g_norm2: norm(TermKind::DoubleBody), terms })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, eta: None, terms: Vec::new(), h_norm2: 0.0, g_norm2: 0.0 }
    }

    pub fn to_json(&self) -> String {
        let doc = HamiltonianDoc {
            n: self.n,
            eta: self.eta,
            singles: self
                .terms
                .iter()
                .filter(|t| t.kind == TermKind::SingleBody)
                .map(|t| SingleEntry { p: t.indices[0], q: t.indices[1], h: t.coefficient })
                .collect(),
            doubles: self
                .terms
                .iter()
                .filter(|t| t.kind == TermKind::DoubleBody)
                .map(|t| DoubleEntry { p: t.indices[0], q: t.indices[1], r: t.indices[2], s: t.indices[3], g: t.coefficient })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("hamiltonian serializes")
    }
}

/// Parse and validate a Hamiltonian JSON document.
pub fn load_hamiltonian(document: &str) -> Result<ElectronicHamiltonian> {
    let doc: HamiltonianDoc = serde_json::from_str(document).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut terms = Vec::with_capacity(doc.singles.len() + doc.doubles.len());
    for e in doc.singles {
        terms.push(ObservableTerm { kind: TermKind::SingleBody, indices: vec![e.p, e.q], coefficient: e.h });
    }
    for e in doc.doubles {
        terms.push(ObservableTerm { kind: TermKind::DoubleBody, indices: vec![e.p, e.q, e.r, e.s], coefficient: e.g });
    }
    ElectronicHamiltonian::new(doc.n, doc.eta, terms)
}

/// ⟨ψ|H|ψ⟩ for a real sector vector.
pub fn expectation(state: &SectorVector, h: &ElectronicHamiltonian) -> Result<f64> {
    if state.sector.n != h.n {
        return Err(Error::Domain(format!("state has n={}, Hamiltonian n={}", state.sector.n, h.n)));
    }
    let ranker = Ranker::new(h.n);
    Ok(h.terms.iter().map(|t| t.coefficient * term_expectation(&state.amplitudes, &state.words, &ranker, &t.masks())).sum())
}

/// ⟨ψ|T + T†|ψ⟩ = 2 Σ_x ψ(x') s(x) ψ(x) over b0-type words x.
pub fn term_expectation(amps: &[f64], words: &[u32], ranker: &Ranker, m: &RotationMasks) -> f64 {
    let mut acc = 0.0;
    for (i, &w) in words.iter().enumerate() {
        if let Some((x, s)) = m.excite(w) {
            let a = amps[i];
            if a != 0.0 {
                acc += s * a * amps[ranker.rank(x)];
            }
        }
    }
    2.0 * acc
}

/// Cost C(θ) = ⟨HF|U(θ)† H U(θ)|HF⟩.
pub fn cost(spec: &AnsatzSpec, params: &ParameterVector, h: &ElectronicHamiltonian) -> Result<f64> {
    let psi = prepare_state(spec, params)?;
    expectation(&psi, h)
}
