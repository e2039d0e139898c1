//! The four subcommands.

use ducc_core::asymptotics::{
    asymptotic_variance, concentration_classification, limit_coordinates, AnsatzClassDescriptor, LimitCase,
};
use ducc_core::estimators::{fit_exponential, mc_variance, SampleConfig};
use ducc_core::hamiltonian::load_hamiltonian;
use ducc_core::moment::{apply_moment, MomentEngine, Norm};
use ducc_core::quad::{quad_apply, random_trial};
use ducc_core::{build_ansatz, AnsatzClass, AnsatzSpec, ElectronicHamiltonian, ObservableTerm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{parse_range, RunConfig};
use crate::output::Table;
use crate::CliError;

const ORACLE_TOLERANCE: f64 = 1e-12;

/// Ansatz from --spec, or from --class with n, eta and k.
fn ansatz(cfg: &RunConfig, n: Option<usize>, k: usize) -> Result<AnsatzSpec, CliError> {
    match (&cfg.spec, &cfg.class) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --spec or --class, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", path.display())))?;
            let spec = AnsatzSpec::from_json(&text)?;
            if let Some(n) = n.filter(|&n| n != spec.n) {
                return Err(CliError::Usage(format!("--n {n} disagrees with spec file n={}", spec.n)));
            }
            Ok(spec.with_k(k))
        }
        (None, Some(class)) => {
            let class: AnsatzClass = class.parse()?;
            let n = n.ok_or_else(|| CliError::Usage("missing --n".into()))?;
            Ok(build_ansatz(class, n, cfg.eta.unwrap_or(n / 2), k)?)
        }
        (None, None) => Err(CliError::Usage("missing --class or --spec".into())),
    }
}

fn observable(cfg: &RunConfig, n: usize, eta: usize) -> Result<ElectronicHamiltonian, CliError> {
    match (&cfg.hamiltonian, &cfg.terms) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --hamiltonian or --term, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read Hamiltonian {}: {e}", path.display())))?;
            let h = load_hamiltonian(&text)?;
            if h.n != n {
                return Err(CliError::Usage(format!("Hamiltonian has n={} but the ansatz has n={n}", h.n)));
            }
            Ok(h)
        }
        (None, Some(terms)) => {
            let terms = terms.iter().map(|t| t.parse::<ObservableTerm>()).collect::<Result<Vec<_>, _>>()?;
            Ok(ElectronicHamiltonian::new(n, Some(eta), terms)?)
        }
        (None, None) => Err(CliError::Usage("missing --term or --hamiltonian".into())),
    }
}

fn single(h: &ElectronicHamiltonian, t: &ObservableTerm) -> ElectronicHamiltonian {
    ElectronicHamiltonian::new(h.n, h.eta, vec![t.clone()]).expect("term already validated")
}

pub fn asymptotic(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = ansatz(cfg, cfg.n, 1)?;
    let (n, eta) = (spec.n, spec.eta);
    let h = observable(cfg, n, eta)?;
    let d = AnsatzClassDescriptor::from_spec(&spec)?;
    let case = d.limit_case(eta)?;
    if case == LimitCase::Case2Other {
        eprintln!(
            "note: qubit-single graph is neither a path/ring nor bipartite-even at n={n}, eta={eta} \
             (bipartite-even needs n = 2*eta and two even parts); using the generic case-2 value"
        );
    }
    let conc = format!("{:?}", concentration_classification(&d, n, eta)?).to_lowercase();
    let mut table = Table::new("ducc.asymptotic/1", &["observable", "coefficient", "case", "concentration", "variance"]);
    for t in &h.terms {
        let v = asymptotic_variance(&d, n, eta, &single(&h, t))?;
        table.push(vec![json!(t.label()), json!(t.coefficient), json!(case.name()), json!(conc), json!(v)]);
    }
    if h.terms.len() > 1 {
        let v = asymptotic_variance(&d, n, eta, &h)?;
        table.push(vec![json!("total"), Value::Null, json!(case.name()), json!(conc), json!(v)]);
    }
    table.emit(cfg)
}

pub fn converge(cfg: &RunConfig) -> Result<(), CliError> {
    let ks = parse_range(cfg.k_range.as_deref().unwrap_or("1..100"))?;
    let t = cfg.t.unwrap_or(2);
    let spec = ansatz(cfg, cfg.n, 1)?;
    let mut engine = MomentEngine::new(spec.n, spec.eta, t)?;
    let h = match (&cfg.terms, &cfg.hamiltonian) {
        (None, None) => ElectronicHamiltonian::new(spec.n, Some(spec.eta), Vec::new())?,
        _ => observable(cfg, spec.n, spec.eta)?,
    };
    let norms: Vec<Norm> = match &cfg.norm {
        Some(s) => vec![serde_json::from_value(json!(s.to_lowercase()))
            .map_err(|_| CliError::Usage(format!("unknown norm '{s}' (l1, l2, linf)")))?],
        None => vec![Norm::L1, Norm::L2, Norm::Linf],
    };
    let limit = limit_coordinates(&engine, &spec)?;
    let limits: Vec<f64> = if t == 2 {
        let d = AnsatzClassDescriptor::from_spec(&spec)?;
        h.terms.iter().map(|term| asymptotic_variance(&d, spec.n, spec.eta, &single(&h, term))).collect::<Result<_, _>>()?
    } else {
        vec![0.0; h.terms.len()]
    };
    let mut columns = vec!["k".to_string(), "normalization".to_string()];
    columns.extend(norms.iter().map(|m| serde_json::to_value(m).unwrap().as_str().unwrap_or_default().to_string()));
    let tag = if t == 2 { "relerr" } else { "abserr" };
    columns.extend(h.terms.iter().map(|term| format!("{tag}:{}", term.label())));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("ducc.converge/1", &cols);
    let (first, last) = (ks[0], *ks.last().unwrap());
    engine.propagate(&spec, last, |e, k, w| {
        if k < first || !ks.contains(&k) {
            return Ok(());
        }
        let dist = e.distance(w, &limit);
        let mut row = vec![json!(k), json!(e.normalization(w))];
        row.extend(norms.iter().map(|&m| json!(dist.get(m))));
        for (term, &lim) in h.terms.iter().zip(&limits) {
            let value = e.moment(w, &single(&h, term));
            let err = if t == 2 && lim != 0.0 { (value - lim).abs() / lim.abs() } else { (value - lim).abs() };
            row.push(json!(err));
        }
        table.push(row);
        Ok(())
    })?;
    table.emit(cfg)
}

pub fn mc(cfg: &RunConfig) -> Result<(), CliError> {
    let ns: Vec<Option<usize>> = match (&cfg.n_range, cfg.n) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --n or --n-range, not both".into())),
        (Some(r), None) => parse_range(r)?.into_iter().map(Some).collect(),
        (None, n) => vec![n],
    };
    if cfg.n_range.is_some() && cfg.eta.is_some() {
        return Err(CliError::Usage("--eta is fixed at n/2 over an --n-range".into()));
    }
    let k = cfg.k.unwrap_or(1);
    let sample_cfg = SampleConfig::new(cfg.samples.unwrap_or(6000), cfg.seed());
    let mut table = Table::new(
        "ducc.mc/1",
        &["kind", "n", "eta", "k", "samples", "mean", "variance", "stderr_of_variance", "fit_a", "fit_b", "fit_residual"],
    );
    let mut points = Vec::new();
    for n in ns {
        let spec = ansatz(cfg, n, k)?;
        let h = observable(cfg, spec.n, spec.eta)?;
        let r = mc_variance(&spec, &h, &sample_cfg)?;
        points.push((spec.n as f64, r.variance));
        table.push(vec![
            json!("estimate"),
            json!(spec.n),
            json!(spec.eta),
            json!(k),
            json!(r.samples),
            json!(r.mean),
            json!(r.variance),
            json!(r.stderr_of_variance),
            Value::Null,
            Value::Null,
            Value::Null,
        ]);
    }
    if cfg.fit.unwrap_or(false) {
        let fit = fit_exponential(&points)?;
        let mut row = vec![json!("fit")];
        row.extend(std::iter::repeat_n(Value::Null, 7));
        row.extend([json!(fit.a), json!(fit.b), json!(fit.residual)]);
        table.push(row);
    }
    table.emit(cfg)
}

pub fn oracle_diff(cfg: &RunConfig, perturb: bool) -> Result<(), CliError> {
    let trials = cfg.trials.unwrap_or(500);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let ts: Vec<u32> = match cfg.t {
        Some(t) if t == 1 || t == 2 => vec![t],
        Some(t) => return Err(ducc_core::Error::UnsupportedT(t).into()),
        None => vec![1, 2],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut table = Table::new("ducc.oracle-diff/1", &["t", "trials", "max_diff", "tolerance", "status"]);
    let mut failed = Vec::new();
    for &t in &ts {
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let n = rng.random_range(4..=6);
            let (v, r) = random_trial(&mut rng, t, n)?;
            let mut closed = apply_moment(&v, &r)?;
            if perturb {
                if let Some(a) = closed.entries.values_mut().next() {
                    *a += 1e-9;
                }
            }
            worst = worst.max(closed.distance(&quad_apply(&v, &r)?).linf);
        }
        let ok = worst <= ORACLE_TOLERANCE;
        if !ok {
            failed.push(format!("t={t}: max diff {worst:.3e} > {ORACLE_TOLERANCE:e}"));
        }
        table.push(vec![json!(t), json!(trials), json!(worst), json!(ORACLE_TOLERANCE), json!(if ok { "ok" } else { "fail" })]);
    }
    table.emit(cfg)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join("; ")))
    }
}
