//! Brute-force oracle: moment superoperators by equally spaced angle quadrature,
//! and plain Monte Carlo of C^t over parameters.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{expectation, ElectronicHamiltonian};
use crate::moment::{pack, unpack, SiteVector, PRUNE};
use crate::rotations::{apply_rotation, basis_action, AnsatzSpec, Rotation, RotationKind};
use crate::sector::SectorVector;

/// 2t+1 equally spaced angles 2πl/(2t+1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub t: u32,
    pub points: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(t: u32) -> Result<Self> {
        if t == 0 {
            return Err(Error::UnsupportedT(t));
        }
        let m = 2 * t + 1;
        Ok(Self { t, points: (0..m).map(|l| TAU * l as f64 / m as f64).collect() })
    }

    pub fn average(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().map(|&x| f(x)).sum::<f64>() / self.points.len() as f64
    }
}

/// (2t+1)^{-1} Σ_l R(θ_l)^{⊗2t} v, one statevector rotation per replica plane.
pub fn quad_apply(v: &SiteVector, r: &Rotation) -> Result<SiteVector> {
    if v.t != 1 && v.t != 2 {
        return Err(Error::UnsupportedT(v.t));
    }
    if !r.fits(v.n) {
        return Err(Error::Domain(format!("{r} does not fit n={}", v.n)));
    }
    let rule = QuadratureRule::new(v.t)?;
    let reps = 2 * v.t as usize;
    let m = r.masks();
    let weight = 1.0 / rule.points.len() as f64;
    let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
    for (&key, &amp) in &v.entries {
        let planes = unpack(v.t, key);
        for &theta in &rule.points {
            let actions: Vec<[(u32, f64); 2]> = (0..reps).map(|j| basis_action(&m, planes[j], theta)).collect();
            for choice in 0u32..(1 << reps) {
                let mut out = [0u32; 4];
                let mut c = amp * weight;
                for j in 0..reps {
                    let (word, a) = actions[j][(choice >> j & 1) as usize];
                    out[j] = word;
                    c *= a;
                }
                if c != 0.0 {
                    *acc.entry(pack(v.t, &out)).or_insert(0.0) += c;
                }
            }
        }
    }
    acc.retain(|_, a| a.abs() >= PRUNE);
    Ok(SiteVector { t: v.t, n: v.n, entries: acc })
}

/// Sample mean of C(θ)^t with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMoment {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Random sparse even-string vector on n sites and a random rotation of a random kind.
pub fn random_trial<R: Rng + ?Sized>(rng: &mut R, t: u32, n: usize) -> Result<(SiteVector, Rotation)> {
    if n < 4 || n > 16 {
        return Err(Error::Domain(format!("oracle trials need 4 <= n <= 16, got {n}")));
    }
    let mut v = SiteVector::new(t, n)?;
    let m = 1u32 << n;
    for _ in 0..rng.random_range(1..12) {
        let (a, b, c) = (rng.random_range(0..m), rng.random_range(0..m), rng.random_range(0..m));
        let planes = if t == 1 { [a, a, 0, 0] } else { [a, b, c, a ^ b ^ c] };
        v.insert(pack(t, &planes), rng.random_range(-1.0..1.0));
    }
    let kind = RotationKind::ALL[rng.random_range(0..4)];
    let mut ix: Vec<usize> = rand::seq::index::sample(rng, n, kind.arity()).into_iter().map(|i| i + 1).collect();
    ix.sort_unstable_by(|a, b| b.cmp(a));
    Ok((v, Rotation::new(kind, &ix)?))
}

/// Plain sequential Monte Carlo of E[C^t], applying rotations one at a time.
pub fn mc_reference_moment(
    spec: &AnsatzSpec,
    h: &ElectronicHamiltonian,
    t: u32,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<ReferenceMoment> {
    if samples < 2 {
        return Err(Error::Domain("at least 2 samples are required".into()));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hf = SectorVector::hartree_fock(spec.n, spec.eta)?;
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut psi = hf.clone();
        for _ in 0..k {
            for r in &spec.block {
                let theta = rng.random_range(0.0..TAU);
                psi = apply_rotation(&psi, r, theta)?;
            }
        }
        values.push(expectation(&psi, h)?.powi(t as i32));
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(ReferenceMoment { mean, stderr: (var / samples as f64).sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_to_degree_2t() {
        for t in 1..=3u32 {
            let rule = QuadratureRule::new(t).unwrap();
            for c in 1..=(2 * t) as i32 {
                assert!(rule.average(|x| (c as f64 * x).cos()).abs() < 1e-14);
                assert!(rule.average(|x| (c as f64 * x).sin()).abs() < 1e-14);
            }
            assert!((rule.average(|x| ((2 * t + 1) as f64 * x).cos()) - 1.0).abs() < 1e-12);
        }
    }
}
