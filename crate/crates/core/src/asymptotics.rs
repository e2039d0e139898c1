//! Closed-form k → ∞ quantities for the t=2 moment vector.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::combin::{binomial, binomial_i, factorial, multinomial, ratio};
use crate::error::{Error, Result};
use crate::hamiltonian::{ElectronicHamiltonian, ObservableTerm, TermKind};
use crate::moment::{key_from_symbols, observable_factor, symbol_at, unpack, Colour, MomentEngine, SiteSymbol, SiteVector};
use crate::rotations::{build_ansatz, AnsatzClass, AnsatzSpec, RotationKind};
use crate::sector::{open_interval_mask, orbital_bit};

// ============================================================================
// Configurations and crossing numbers
// ============================================================================

/// Symbol counts (n^I_01, n^X_00, n^X_01) of a paired string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Configuration {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        Self { a, b, c }
    }

    pub fn total(&self) -> usize {
        self.a + self.b + self.c
    }

    pub fn nonzero(&self) -> usize {
        [self.a, self.b, self.c].iter().filter(|&&x| x > 0).count()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

/// Configuration of a packed t=2 string.
pub fn configuration(key: u64, n: usize) -> Configuration {
    let mut cfg = Configuration::new(0, 0, 0);
    for site in 1..=n {
        match symbol_at(2, key, site) {
            SiteSymbol::I01 => cfg.a += 1,
            SiteSymbol::X00 => cfg.b += 1,
            SiteSymbol::X01 => cfg.c += 1,
            _ => {}
        }
    }
    cfg
}

/// Number of paired strings with configuration `cfg`.
pub fn config_count(n: usize, eta: usize, cfg: Configuration) -> u128 {
    let k = cfg.total();
    if eta > n || k > eta || k > n - eta {
        return 0;
    }
    let den = factorial((n - eta - k) as u64)
        * factorial((eta - k) as u64)
        * (factorial(cfg.a as u64) * factorial(cfg.b as u64) * factorial(cfg.c as u64)).pow(2);
    factorial(n as u64) / den
}

/// Crossing number of a packed t=2 string.
///
/// Counts i1 < i2 < i3 < i4 whose colours satisfy c1 = c3 ≠ c2 = c4.
pub fn crossing_number(key: u64, n: usize) -> u64 {
    let colours: Vec<Option<Colour>> = (1..=n).map(|i| symbol_at(2, key, i).colour()).collect();
    crossing_number_of(&colours)
}

pub fn crossing_number_of(colours: &[Option<Colour>]) -> u64 {
    const ALL: [Colour; 3] = [Colour::Red, Colour::Green, Colour::Blue];
    let mut total = 0u64;
    for x in ALL {
        for y in ALL {
            if x == y {
                continue;
            }
            // Subsequence counts of the prefixes x, xy, xyx, xyxy.
            let mut dp = [0u64; 4];
            for c in colours.iter().flatten() {
                if *c == y {
                    dp[3] += dp[2];
                    dp[1] += dp[0];
                } else if *c == x {
                    dp[2] += dp[1];
                    dp[0] += 1;
                }
            }
            total += dp[3];
        }
    }
    total
}

/// S_uv: exchange the contents of sites `u` and `v`.
pub fn swap_sites(key: u64, u: usize, v: usize) -> u64 {
    let mut p = unpack(2, key);
    let (bu, bv) = (orbital_bit(u), orbital_bit(v));
    for plane in p.iter_mut() {
        let (xu, xv) = (*plane & bu != 0, *plane & bv != 0);
        if xu != xv {
            *plane ^= bu | bv;
        }
    }
    crate::moment::pack(2, &p)
}

/// F^{ab}_{uv}: flip replica bits `a` and `b` (1-based) at sites `u` and `v`.
pub fn double_flip(key: u64, a: usize, b: usize, u: usize, v: usize) -> u64 {
    let mut p = unpack(2, key);
    let m = orbital_bit(u) | orbital_bit(v);
    p[a - 1] ^= m;
    p[b - 1] ^= m;
    crate::moment::pack(2, &p)
}

/// ⊕ of the site patterns strictly between `u` and `v`, as a 4-bit pattern.
pub fn interval_pattern(key: u64, u: usize, v: usize) -> u8 {
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    let m = open_interval_mask(lo, hi);
    let p = unpack(2, key);
    (0..4).fold(0u8, |acc, j| acc | (((p[j] & m).count_ones() & 1) as u8) << j)
}

/// Four-bit pattern at `site`.
pub fn site_pattern(key: u64, site: usize) -> u8 {
    symbol_at(2, key, site).pattern()
}

/// Bitwise dot product mod 2.
pub fn dot2(x: u8, y: u8) -> u32 {
    (x & y).count_ones() & 1
}

// ============================================================================
// Ansatz descriptors
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExcitationContent {
    FermionicSingles,
    QubitSingles,
    FermionicWithDoubles,
    QubitWithDoubles,
}

/// Excitation content and single-excitation graph of an ansatz block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzClassDescriptor {
    pub n: usize,
    pub content: ExcitationContent,
    /// Distinct single-excitation pairs (p, q), p > q.
    pub edges: Vec<(usize, usize)>,
    /// Distinct double-excitation index tuples (p, q, r, s).
    pub doubles: Vec<[usize; 4]>,
}

/// Which closed form describes the limit vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitCase {
    /// Fermionic singles on a connected graph.
    Case1,
    /// Qubit singles on a path or ring; `order` lists vertices along it.
    Case2Path { order: Vec<usize> },
    /// Qubit singles on a bipartite graph with two even parts, n = 2η.
    Case2Bipartite { v1: u32 },
    /// Qubit singles, any other connected graph.
    Case2Other,
    /// Fermionic singles and doubles.
    Case3,
    /// Qubit singles and doubles meeting the placement hypothesis.
    Case4,
}

impl LimitCase {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Case1 => "case-1",
            Self::Case2Path { .. } => "case-2-path",
            Self::Case2Bipartite { .. } => "case-2-bipartite-even",
            Self::Case2Other => "case-2-other",
            Self::Case3 => "case-3",
            Self::Case4 => "case-4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concentration {
    Polynomial,
    Exponential,
}

impl fmt::Display for Concentration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Polynomial => "polynomial",
            Self::Exponential => "exponential",
        })
    }
}

impl AnsatzClassDescriptor {
    pub fn from_spec(spec: &AnsatzSpec) -> Result<Self> {
        spec.validate()?;
        let fermionic = spec.block.iter().any(|r| r.kind.is_fermionic());
        let qubit = spec.block.iter().any(|r| !r.kind.is_fermionic());
        if fermionic && qubit {
            return Err(Error::Unsupported("block mixes fermionic and qubit rotations".into()));
        }
        let mut edges = Vec::new();
        let mut doubles = Vec::new();
        for r in &spec.block {
            match r.kind {
                RotationKind::FermionicSingle | RotationKind::QubitSingle => {
                    let e = (r.indices[0], r.indices[1]);
                    if !edges.contains(&e) {
                        edges.push(e);
                    }
                }
                _ => {
                    let d = [r.indices[0], r.indices[1], r.indices[2], r.indices[3]];
                    if !doubles.contains(&d) {
                        doubles.push(d);
                    }
                }
            }
        }
        let content = match (fermionic, doubles.is_empty()) {
            (true, true) => ExcitationContent::FermionicSingles,
            (false, true) => ExcitationContent::QubitSingles,
            (true, false) => ExcitationContent::FermionicWithDoubles,
            (false, false) => ExcitationContent::QubitWithDoubles,
        };
        let d = Self { n: spec.n, content, edges, doubles };
        if !d.is_connected() {
            return Err(Error::Unsupported(format!("single-excitation graph of {} is disconnected", spec.label())));
        }
        Ok(d)
    }

    pub fn from_class(class: AnsatzClass, n: usize, eta: usize) -> Result<Self> {
        Self::from_spec(&build_ansatz(class, n, eta, 1)?)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(p, q) in &self.edges {
            adj[p].push(q);
            adj[q].push(p);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(p, q)| p == v || q == v).count()
    }

    pub fn max_degree(&self) -> usize {
        (1..=self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n + 1];
        let mut queue = VecDeque::from([1usize]);
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Two-colouring with orbital 1 in the first part, as a bit mask of V1.
    pub fn bipartition(&self) -> Option<u32> {
        let adj = self.adjacency();
        let mut side = vec![None; self.n + 1];
        side[1] = Some(false);
        let mut queue = VecDeque::from([1usize]);
        while let Some(v) = queue.pop_front() {
            let s = side[v].unwrap();
            for &w in &adj[v] {
                match side[w] {
                    None => {
                        side[w] = Some(!s);
                        queue.push_back(w);
                    }
                    Some(t) if t == s => return None,
                    _ => {}
                }
            }
        }
        Some((1..=self.n).filter(|&v| side[v] == Some(false)).fold(0, |m, v| m | orbital_bit(v)))
    }

    /// Vertex order along a path or ring, if G is one.
    pub fn path_order(&self) -> Option<Vec<usize>> {
        if self.n == 1 {
            return Some(vec![1]);
        }
        if self.max_degree() > 2 {
            return None;
        }
        let adj = self.adjacency();
        let is_ring = self.edges.len() == self.n;
        let start = if is_ring { 1 } else { (1..=self.n).find(|&v| adj[v].len() == 1)? };
        let mut order = vec![start];
        let mut prev = 0;
        let mut cur = start;
        // Rings are entered through the larger-numbered neighbour of vertex 1.
        let mut first = if is_ring { *adj[start].last()? } else { adj[start][0] };
        while order.len() < self.n {
            let next = if prev == 0 { first } else { *adj[cur].iter().find(|&&w| w != prev)? };
            prev = cur;
            cur = next;
            order.push(cur);
            first = 0;
        }
        let _ = first;
        Some(order)
    }

    /// Select the closed form describing the limit vector in sector (n, η).
    pub fn limit_case(&self, eta: usize) -> Result<LimitCase> {
        let n = self.n;
        let bipartite_even = if n == 2 * eta {
            self.bipartition().filter(|v1| {
                let k = v1.count_ones() as usize;
                k % 2 == 0 && (n - k) % 2 == 0 && k > 0 && k < n
            })
        } else {
            None
        };
        Ok(match self.content {
            ExcitationContent::FermionicSingles => LimitCase::Case1,
            ExcitationContent::FermionicWithDoubles => LimitCase::Case3,
            ExcitationContent::QubitSingles => {
                if let Some(v1) = bipartite_even {
                    LimitCase::Case2Bipartite { v1 }
                } else if let Some(order) = self.path_order() {
                    LimitCase::Case2Path { order }
                } else {
                    LimitCase::Case2Other
                }
            }
            ExcitationContent::QubitWithDoubles => {
                if self.max_degree() < 3 {
                    return Err(Error::ConditionUnmet(format!(
                        "qubit doubles need a single-excitation graph of maximum degree >= 3 (found {})",
                        self.max_degree()
                    )));
                }
                if let Some(v1) = bipartite_even {
                    for d in &self.doubles {
                        let inside = d.iter().filter(|&&i| v1 & orbital_bit(i) != 0).count();
                        if inside != 2 {
                            return Err(Error::ConditionUnmet(format!(
                                "qubit double ({},{},{},{}) has {inside} indices in the part containing orbital 1; 2 required",
                                d[0], d[1], d[2], d[3]
                            )));
                        }
                    }
                }
                LimitCase::Case4
            }
        })
    }
}

pub fn concentration_classification(d: &AnsatzClassDescriptor, _n: usize, _eta: usize) -> Result<Concentration> {
    if !d.is_connected() {
        return Err(Error::Unsupported("disconnected single-excitation graph".into()));
    }
    Ok(match d.content {
        ExcitationContent::FermionicSingles => Concentration::Polynomial,
        ExcitationContent::QubitSingles if d.max_degree() <= 2 => Concentration::Polynomial,
        _ => Concentration::Exponential,
    })
}

// ============================================================================
// Limit vectors
// ============================================================================

/// Exact rational amplitude as (sign, numerator, denominator).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Amplitude {
    pub negative: bool,
    pub num: u128,
    pub den: u128,
}

impl Amplitude {
    const ZERO: Self = Self { negative: false, num: 0, den: 1 };

    pub fn value(&self) -> f64 {
        let v = ratio(self.num, self.den);
        if self.negative {
            -v
        } else {
            v
        }
    }
}

fn case1_amplitude(n: usize, eta: usize, key: u64) -> Amplitude {
    let cfg = configuration(key, n);
    let k = cfg.total() as u64;
    let nn = n as u64;
    let num = binomial(nn + 4, 2);
    let den = binomial(nn, eta as u64)
        * binomial(nn + 4, eta as u64 + 2)
        * binomial(k + 2, 2)
        * multinomial(&[cfg.a as u64, cfg.b as u64, cfg.c as u64]);
    Amplitude { negative: crossing_number(key, n) % 2 == 1, num, den }
}

fn case2_bipartite_amplitude(n: usize, eta: usize, v1: u32, key: u64) -> Amplitude {
    let cfg = configuration(key, n);
    let big = binomial(n as u64, eta as u64);
    let den = big * big * big + 4 * big * big;
    let (num, sign_rule) = match (cfg.nonzero(), cfg.total() == eta) {
        (0, _) => (3 * big + 6, false),
        (1, false) => (big + 2, false),
        (1, true) => (big - 2, false),
        (2, true) => (2, true),
        _ => return Amplitude::ZERO,
    };
    let mut negative = false;
    if sign_rule {
        // Σ_{p<q∈V1} Φ_p ⊙ Φ_q = Σ_j C(w_j, 2) with w_j the V1-weight of plane j.
        let p = unpack(2, key);
        let s: u32 = p.iter().map(|plane| {
            let w = (plane & v1).count_ones();
            w * w.saturating_sub(1) / 2
        }).sum();
        negative = s % 2 == 0;
    }
    Amplitude { negative, num, den }
}

fn uniform_amplitude(n: usize, eta: usize, key: u64) -> Amplitude {
    let cfg = configuration(key, n);
    let big = binomial(n as u64, eta as u64);
    let den = big * big + 2 * big;
    match cfg.nonzero() {
        0 => Amplitude { negative: false, num: 3, den },
        1 => Amplitude { negative: false, num: 1, den },
        _ => Amplitude::ZERO,
    }
}

/// Relabel sites: the returned string carries Φ_{order[i]} at site i+1.
fn pull_back(key: u64, order: &[usize]) -> u64 {
    let src = unpack(2, key);
    let mut out = [0u32; 4];
    for (i, &o) in order.iter().enumerate() {
        for j in 0..4 {
            out[j] |= ((src[j] >> (o - 1)) & 1) << i;
        }
    }
    crate::moment::pack(2, &out)
}

/// Limit amplitude on a paired string.
pub fn limit_amplitude(case: &LimitCase, n: usize, eta: usize, key: u64) -> Amplitude {
    match case {
        LimitCase::Case1 => case1_amplitude(n, eta, key),
        LimitCase::Case2Path { order } => case1_amplitude(n, eta, pull_back(key, order)),
        LimitCase::Case2Bipartite { v1 } => case2_bipartite_amplitude(n, eta, *v1, key),
        LimitCase::Case2Other | LimitCase::Case3 | LimitCase::Case4 => uniform_amplitude(n, eta, key),
    }
}

/// Limit vector on the orbit coordinates of `engine`.
pub fn limit_coordinates(engine: &MomentEngine, spec: &AnsatzSpec) -> Result<Vec<f64>> {
    if engine.t != 2 {
        return Ok(t1_limit_coordinates(engine, spec)?);
    }
    let case = AnsatzClassDescriptor::from_spec(spec)?.limit_case(spec.eta)?;
    Ok(engine.coordinates_of(|key| limit_amplitude(&case, spec.n, spec.eta, key).value()))
}

/// For t=1 the limit is uniform over the sector on connected graphs.
fn t1_limit_coordinates(engine: &MomentEngine, spec: &AnsatzSpec) -> Result<Vec<f64>> {
    AnsatzClassDescriptor::from_spec(spec)?;
    let v = 1.0 / binomial(spec.n as u64, spec.eta as u64) as f64;
    Ok(engine.coordinates_of(|_| v))
}

/// Ψ_{2,∞} as an explicit sparse vector (n ≤ 10).
pub fn asymptotic_moment_vector(d: &AnsatzClassDescriptor, n: usize, eta: usize) -> Result<SiteVector> {
    if d.n != n {
        return Err(Error::Domain(format!("descriptor has n={} but n={n} was requested", d.n)));
    }
    asymptotic_moment_vector_case(&d.limit_case(eta)?, n, eta)
}

/// Limit vector of a given case, expanded over the paired strings.
pub fn asymptotic_moment_vector_case(case: &LimitCase, n: usize, eta: usize) -> Result<SiteVector> {
    let engine = MomentEngine::new(n, eta, 2)?;
    let w = engine.coordinates_of(|key| limit_amplitude(case, n, eta, key).value());
    Ok(engine.to_site_vector(&w))
}

/// Uniformly random configuration, then a uniformly random placement of its symbols.
pub fn random_paired<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, eta: usize) -> u64 {
    use rand::seq::SliceRandom;
    let m = eta.min(n - eta);
    let mut cfgs = Vec::new();
    for a in 0..=m {
        for b in 0..=m - a {
            for c in 0..=m - a - b {
                cfgs.push(Configuration::new(a, b, c));
            }
        }
    }
    let cfg = cfgs[rng.random_range(0..cfgs.len())];
    let k = cfg.total();
    let mut symbols = Vec::with_capacity(n);
    for (count, pair) in [
        (cfg.a, [SiteSymbol::I01, SiteSymbol::I10]),
        (cfg.b, [SiteSymbol::X00, SiteSymbol::X11]),
        (cfg.c, [SiteSymbol::X01, SiteSymbol::X10]),
    ] {
        for _ in 0..count {
            symbols.extend_from_slice(&pair);
        }
    }
    symbols.extend(std::iter::repeat_n(SiteSymbol::I11, eta - k));
    symbols.extend(std::iter::repeat_n(SiteSymbol::I00, n - eta - k));
    symbols.shuffle(rng);
    key_from_symbols(2, &symbols).expect("t=2 symbols")
}

/// Paired string with symbols given site by site, for tests and examples.
pub fn paired_key(symbols: &[SiteSymbol]) -> Result<u64> {
    key_from_symbols(2, symbols)
}

// ============================================================================
// Asymptotic variances
// ============================================================================

/// Whether the case has a closed form in the given orbital labelling: paths must be
/// traversed in numeric order (either direction), bipartitions must split {1..η} from the rest.
pub fn has_closed_form(case: &LimitCase, eta: usize) -> bool {
    match case {
        LimitCase::Case2Path { order } => {
            order.windows(2).all(|w| w[0] + 1 == w[1]) || order.windows(2).all(|w| w[0] == w[1] + 1)
        }
        LimitCase::Case2Bipartite { v1 } => *v1 == (1u32 << eta) - 1,
        _ => true,
    }
}

/// ⟨T + T†|^{⊗2}Ψ_{2,∞} for a unit term, as an exact fraction. `None` when the case
/// has no closed form in this labelling (see [`has_closed_form`]) or for the double
/// term of the bipartite case at n = 4, where every orbital is touched.
pub fn term_limit_overlap(case: &LimitCase, n: usize, eta: usize, term: &ObservableTerm) -> Option<(u128, u128)> {
    if !has_closed_form(case, eta) {
        return None;
    }
    let (nn, e) = (n as i64, eta as i64);
    let big = binomial(n as u64, eta as u64);
    let single = term.kind == TermKind::SingleBody;
    Some(match case {
        LimitCase::Case1 | LimitCase::Case2Path { .. } => {
            if single {
                (4 * (eta * (n - eta)) as u128, (n * (n - 1) * (n + 2)) as u128)
            } else {
                (2 * binomial_i(e, 2) * binomial_i(nn - e, 2), 45 * binomial(n as u64 + 2, 6))
            }
        }
        LimitCase::Case2Bipartite { .. } => {
            let ix = &term.indices;
            let (count, cross, span) = if single {
                let (p, q) = (ix[0], ix[1]);
                (binomial_i(nn - 2, e - 1), q <= eta && eta < p, p - q)
            } else {
                let (p, q, r, s) = (ix[0], ix[1], ix[2], ix[3]);
                (binomial_i(nn - 4, e - 2), (q <= eta && eta < p) || (s <= eta && eta < r), p - q + r - s)
            };
            if !single && n == 4 {
                return None;
            }
            let raised = (cross as usize + span + single as usize) % 2 == 1;
            let bracket = if raised { big + 4 } else { big };
            (4 * count * bracket, big * big * big + 4 * big * big)
        }
        LimitCase::Case2Other | LimitCase::Case3 | LimitCase::Case4 => {
            let count = if single { binomial_i(nn - 2, e - 1) } else { binomial_i(nn - 4, e - 2) };
            (4 * count, big * big + 2 * big)
        }
    })
}

/// lim_{k→∞} Var[C] = Σ_T c_T² ⟨T|^{⊗2}Ψ_{2,∞}.
pub fn asymptotic_variance(d: &AnsatzClassDescriptor, n: usize, eta: usize, h: &ElectronicHamiltonian) -> Result<f64> {
    if d.n != n || h.n != n {
        return Err(Error::Domain(format!("descriptor n={}, Hamiltonian n={}, requested n={n}", d.n, h.n)));
    }
    let case = d.limit_case(eta)?;
    let mut total = 0.0;
    let mut rest = Vec::new();
    for t in &h.terms {
        match term_limit_overlap(&case, n, eta, t) {
            Some((num, den)) => total += t.coefficient * t.coefficient * ratio(num, den),
            None => rest.push(t.clone()),
        }
    }
    if !rest.is_empty() {
        let v = asymptotic_moment_vector_case(&case, n, eta)?;
        total += vector_variance(&v, &ElectronicHamiltonian::new(n, h.eta, rest)?);
    }
    Ok(total)
}

/// Σ_T c_T² ⟨T|^{⊗2}v evaluated entry by entry.
pub fn vector_variance(v: &SiteVector, h: &ElectronicHamiltonian) -> f64 {
    h.terms
        .iter()
        .map(|t| {
            let m = t.masks();
            let s: f64 = v.entries.iter().map(|(&k, &a)| a * observable_factor(2, &m, &unpack(2, k))).sum();
            t.coefficient * t.coefficient * s
        })
        .sum()
}
