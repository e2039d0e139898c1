//! Monte Carlo estimators over uniformly random parameters.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{term_expectation, ElectronicHamiltonian};
use crate::rotations::{AnsatzSpec, Circuit, ParameterVector};
use crate::sector::{enumerate_words, Ranker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
}

impl SampleConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, stream: 0 }
    }

    fn check(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Domain(format!("need at least 2 samples, got {}", self.samples)));
        }
        Ok(())
    }

    /// Parameters of sample `i`: a fixed window of the (seed, stream) keystream.
    pub fn parameters(&self, i: usize, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(2 * (i as u128) * (count as u128));
        (0..count).map(|_| rng.random::<f64>() * TAU).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mean: f64,
    pub variance: f64,
    pub stderr_of_variance: f64,
    pub samples: usize,
}

impl EstimateReport {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, variance, stderr_of_variance: (2.0 / (n - 1) as f64).sqrt() * variance, samples: n }
    }

    /// Standard error of the mean.
    pub fn stderr_of_mean(&self) -> f64 {
        (self.variance / self.samples as f64).sqrt()
    }
}

/// Cost evaluator sharing one compiled circuit across samples.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    circuit: Circuit,
    words: Vec<u32>,
    ranker: Ranker,
    terms: Vec<(f64, crate::rotations::RotationMasks)>,
    hf: usize,
}

impl CostEvaluator {
    pub fn new(spec: &AnsatzSpec, h: &ElectronicHamiltonian) -> Result<Self> {
        if h.n != spec.n {
            return Err(Error::Domain(format!("Hamiltonian n={} but ansatz n={}", h.n, spec.n)));
        }
        let circuit = Circuit::compile(spec)?;
        let words = enumerate_words(spec.n, spec.eta);
        let ranker = Ranker::new(spec.n);
        let hf = ranker.rank(crate::sector::low_mask(spec.eta));
        let terms = h.terms.iter().map(|t| (t.coefficient, t.masks())).collect();
        Ok(Self { circuit, words, ranker, terms, hf })
    }

    pub fn num_params(&self) -> usize {
        self.circuit.num_params()
    }

    fn initial(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.words.len()];
        a[self.hf] = 1.0;
        a
    }

    pub fn energy(&self, amps: &[f64]) -> f64 {
        self.terms.iter().map(|(c, m)| c * term_expectation(amps, &self.words, &self.ranker, m)).sum()
    }

    pub fn cost(&self, thetas: &[f64]) -> f64 {
        let mut a = self.initial();
        self.circuit.run(&mut a, thetas);
        self.energy(&a)
    }

    /// Every partial derivative by 5-point trigonometric differentiation.
    pub fn gradient_all(&self, thetas: &[f64]) -> Vec<f64> {
        let p = thetas.len();
        let mut prefix = self.initial();
        let mut grad = Vec::with_capacity(p);
        let mut work = vec![0.0; prefix.len()];
        for j in 0..p {
            let mut c = [0.0; 5];
            for (l, cl) in c.iter_mut().enumerate() {
                work.copy_from_slice(&prefix);
                self.circuit.apply_one(&mut work, j, thetas[j] + TAU * l as f64 / 5.0);
                self.circuit.run_range(&mut work, thetas, j + 1, p);
                *cl = self.energy(&work);
            }
            grad.push(five_point_derivative(&c));
            self.circuit.apply_one(&mut prefix, j, thetas[j]);
        }
        grad
    }
}

/// d/dφ at φ=0 of the degree-2 trigonometric interpolant through C(2πl/5).
pub fn five_point_derivative(c: &[f64; 5]) -> f64 {
    let mut d = 0.0;
    for m in 1..=2 {
        let b: f64 = c.iter().enumerate().map(|(l, v)| v * (TAU * (m * l) as f64 / 5.0).sin()).sum::<f64>() * 2.0 / 5.0;
        d += m as f64 * b;
    }
    d
}

/// Sample mean and variance of the cost.
pub fn mc_variance(spec: &AnsatzSpec, h: &ElectronicHamiltonian, cfg: &SampleConfig) -> Result<EstimateReport> {
    cfg.check()?;
    let eval = CostEvaluator::new(spec, h)?;
    let p = eval.num_params();
    let values: Vec<f64> = (0..cfg.samples).into_par_iter().map(|i| eval.cost(&cfg.parameters(i, p))).collect();
    Ok(EstimateReport::from_values(&values))
}

/// ∂C/∂θ_j at `params`.
pub fn gradient(spec: &AnsatzSpec, params: &ParameterVector, h: &ElectronicHamiltonian, j: usize) -> Result<f64> {
    let eval = CostEvaluator::new(spec, h)?;
    if params.len() != eval.num_params() {
        return Err(Error::Domain(format!("{} parameters given, {} expected", params.len(), eval.num_params())));
    }
    if j >= params.len() {
        return Err(Error::IndexRange(format!("parameter index {j} out of range 0..{}", params.len())));
    }
    let th = params.values();
    let c: Vec<f64> = (0..5)
        .map(|l| {
            let mut t = th.to_vec();
            t[j] += TAU * l as f64 / 5.0;
            eval.cost(&t)
        })
        .collect();
    Ok(five_point_derivative(&[c[0], c[1], c[2], c[3], c[4]]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub cost: EstimateReport,
    pub gradients: Vec<EstimateReport>,
    pub max_index: usize,
    pub lower_bound_holds: bool,
    pub upper_bound_holds: bool,
    /// max_j Var[∂_j C] ≤ 4·Var[C], the bound for cost frequencies up to 2.
    pub frequency_bound_holds: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_bound_holds && self.upper_bound_holds
    }

    pub fn holds_with_frequency_bound(&self) -> bool {
        self.lower_bound_holds && self.frequency_bound_holds
    }

    pub fn max_gradient_variance(&self) -> f64 {
        self.gradients.get(self.max_index).map(|g| g.variance).unwrap_or(0.0)
    }
}

/// Check (k|R|)^{-1}·Var[C] ≤ max_j Var[∂_j C] ≤ Var[C] within 5 combined standard errors.
pub fn sandwich_check(spec: &AnsatzSpec, h: &ElectronicHamiltonian, cfg: &SampleConfig) -> Result<SandwichReport> {
    cfg.check()?;
    let eval = CostEvaluator::new(spec, h)?;
    let p = eval.num_params();
    if p == 0 {
        return Err(Error::Domain("ansatz has no parameters".into()));
    }
    let rows: Vec<(f64, Vec<f64>)> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let th = cfg.parameters(i, p);
            (eval.cost(&th), eval.gradient_all(&th))
        })
        .collect();
    let costs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let cost = EstimateReport::from_values(&costs);
    let gradients: Vec<EstimateReport> = (0..p)
        .map(|j| EstimateReport::from_values(&rows.iter().map(|r| r.1[j]).collect::<Vec<_>>()))
        .collect();
    let max_index = (0..p).fold(0, |best, j| if gradients[j].variance > gradients[best].variance { j } else { best });
    let g = gradients[max_index];
    let pf = p as f64;
    let lower_se = ((cost.stderr_of_variance / pf).powi(2) + g.stderr_of_variance.powi(2)).sqrt();
    let upper_se = (cost.stderr_of_variance.powi(2) + g.stderr_of_variance.powi(2)).sqrt();
    let freq_se = ((4.0 * cost.stderr_of_variance).powi(2) + g.stderr_of_variance.powi(2)).sqrt();
    Ok(SandwichReport {
        cost,
        max_index,
        lower_bound_holds: cost.variance / pf <= g.variance + 5.0 * lower_se,
        upper_bound_holds: g.variance <= cost.variance + 5.0 * upper_se,
        frequency_bound_holds: g.variance <= 4.0 * cost.variance + 5.0 * freq_se,
        gradients,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

/// Least squares fit of ln v = ln a + b·n.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExponentialFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::Domain(format!("non-positive variance {} at n={}", p.1, p.0)));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let b = sxy / sxx;
    let ln_a = ybar - b * xbar;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - ln_a - b * x).powi(2)).sum::<f64>() / m).sqrt();
    Ok(ExponentialFit { a: ln_a.exp(), b, residual })
}
