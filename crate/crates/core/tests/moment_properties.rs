//! Projector properties of the closed-form moment superoperators, checked
//! against the quadrature oracle and the symmetry-reduced engine.

use std::collections::BTreeMap;

use ducc_core::moment::*;
use ducc_core::quad::quad_apply;
use ducc_core::*;
use proptest::prelude::*;

fn rotation_strategy(n: usize) -> impl Strategy<Value = Rotation> {
    (0..4usize, proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), 4)).prop_map(|(k, mut ix)| {
        let kind = RotationKind::ALL[k];
        ix.sort_unstable_by(|a, b| b.cmp(a));
        let chosen: Vec<usize> = if kind.is_double() { ix } else { vec![ix[0], ix[3]] };
        Rotation::new(kind, &chosen).unwrap()
    })
}

/// Random sparse vector of even strings.
fn vector_strategy(t: u32, n: usize) -> impl Strategy<Value = SiteVector> {
    let m = 1u32 << n;
    proptest::collection::vec(((0..m, 0..m, 0..m), -1.0f64..1.0), 1..12).prop_map(move |items| {
        let mut v = SiteVector::new(t, n).unwrap();
        for ((a, b, c), amp) in items {
            let planes = if t == 1 { [a, a, 0, 0] } else { [a, b, c, a ^ b ^ c] };
            v.insert(pack(t, &planes), amp);
        }
        v
    })
}

fn max_diff(a: &SiteVector, b: &SiteVector) -> f64 {
    a.distance(b).linf
}

fn case() -> impl Strategy<Value = (u32, usize)> {
    (1u32..=2, 4usize..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn closed_form_matches_quadrature((v, r) in case().prop_flat_map(|(t, n)| (vector_strategy(t, n), rotation_strategy(n)))) {
        let a = apply_moment(&v, &r).unwrap();
        let b = quad_apply(&v, &r).unwrap();
        prop_assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn projector_is_idempotent(v in vector_strategy(2, 5), r in rotation_strategy(5)) {
        let once = apply_moment(&v, &r).unwrap();
        let twice = apply_moment(&once, &r).unwrap();
        prop_assert!(max_diff(&once, &twice) < 1e-12);
    }

    #[test]
    fn projector_is_self_adjoint(u in vector_strategy(2, 5), v in vector_strategy(2, 5), r in rotation_strategy(5)) {
        let lhs = u.dot(&apply_moment(&v, &r).unwrap());
        let rhs = apply_moment(&u, &r).unwrap().dot(&v);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn quadrature_is_idempotent(v in vector_strategy(1, 5), r in rotation_strategy(5)) {
        let once = quad_apply(&v, &r).unwrap();
        let twice = quad_apply(&once, &r).unwrap();
        prop_assert!(max_diff(&once, &twice) < 1e-12);
    }

    #[test]
    fn outputs_stay_even(v in vector_strategy(2, 6), r in rotation_strategy(6)) {
        let out = apply_moment(&v, &r).unwrap();
        prop_assert!(out.entries.keys().all(|&k| is_even(2, k)));
    }

    #[test]
    fn paired_support_is_closed(eta in 1usize..=3, picks in proptest::collection::vec(any::<proptest::sample::Index>(), 1..8), r in rotation_strategy(6)) {
        let e = MomentEngine::new(6, eta, 2).unwrap();
        let mut v = SiteVector::new(2, 6).unwrap();
        for (i, p) in picks.iter().enumerate() {
            v.insert(e.representatives()[p.index(e.dim())], 1.0 + i as f64);
        }
        let out = apply_moment(&v, &r).unwrap();
        prop_assert!(out.entries.keys().all(|&k| is_paired(2, k, eta)));
    }
}

/// Sparse-map propagation with no symmetry reduction.
fn propagate_full(spec: &AnsatzSpec, t: u32, k: usize) -> SiteVector {
    let mut v = initial_moment_vector(spec.n, spec.eta, t).unwrap();
    for _ in 0..k {
        for r in &spec.block {
            v = apply_moment(&v, r).unwrap();
        }
    }
    v
}

#[test]
fn reduced_engine_matches_full_propagation() {
    for class in [AnsatzClass::Uccsd, AnsatzClass::QUccgsd, AnsatzClass::Bra, AnsatzClass::QUccs] {
        for t in [1u32, 2] {
            let spec = build_ansatz(class, 4, 2, 3).unwrap();
            let full = propagate_full(&spec, t, 3);
            let reduced = moment_vector(&spec, t, 3).unwrap();
            assert!(full.distance(&reduced).linf < 1e-14, "{class:?} t={t}");
        }
    }
    let spec = build_ansatz(AnsatzClass::Uccs, 5, 2, 2).unwrap();
    let full = propagate_full(&spec, 2, 2);
    assert!(full.distance(&moment_vector(&spec, 2, 2).unwrap()).linf < 1e-14);
}

/// Relabel replicas of every string by a permutation of the four planes.
fn permute(v: &SiteVector, perm: [usize; 4]) -> SiteVector {
    let mut out = SiteVector { t: v.t, n: v.n, entries: BTreeMap::new() };
    for (&k, &a) in &v.entries {
        let p = unpack(2, k);
        out.entries.insert(pack(2, &[p[perm[0]], p[perm[1]], p[perm[2]], p[perm[3]]]), a);
    }
    out
}

#[test]
fn moment_vectors_are_replica_symmetric() {
    let spec = build_ansatz(AnsatzClass::Uccsd, 4, 2, 2).unwrap();
    let v = propagate_full(&spec, 2, 2);
    for perm in [[1, 0, 2, 3], [0, 2, 1, 3], [3, 2, 1, 0], [1, 2, 3, 0]] {
        assert!(v.distance(&permute(&v, perm)).linf < 1e-15);
    }
}

#[test]
fn normalization_and_unbiasedness_along_propagation() {
    let spec = build_ansatz(AnsatzClass::Uccgsd, 4, 2, 1).unwrap();
    let h = ElectronicHamiltonian::new(
        4,
        Some(2),
        vec![ObservableTerm::single(3, 1, 0.4).unwrap(), ObservableTerm::double(4, 3, 2, 1, -1.3).unwrap()],
    )
    .unwrap();
    for k in [0, 1, 2, 5] {
        let r1 = moment_report(&spec, &h, 1, k).unwrap();
        assert!(r1.value.abs() < 1e-12);
        assert!((r1.normalization - 1.0).abs() < 1e-12);
        let r2 = moment_report(&spec, &h, 2, k).unwrap();
        assert!((r2.normalization - 1.0).abs() < 1e-12);
        if k == 0 {
            assert_eq!(r2.value, 0.0);
            assert_eq!(r2.support_size, 1);
        }
    }
}

#[test]
fn initial_overlaps() {
    let v = initial_moment_vector(2, 1, 2).unwrap();
    assert_eq!(observable_overlap(&v, &ObservableTerm::single(2, 1, 1.0).unwrap()).unwrap(), 0.0);
    assert_eq!(normalization(&v), 1.0);
}

#[test]
fn t1_limit_is_uniform_on_connected_singles() {
    let spec = build_ansatz(AnsatzClass::Uccgs, 5, 2, 1).unwrap();
    let v = moment_vector(&spec, 1, 60).unwrap();
    assert_eq!(v.len(), 10);
    for a in v.entries.values() {
        assert!((a - 0.1).abs() < 1e-12);
    }
}

#[test]
fn distance_examples() {
    let spec = build_ansatz(AnsatzClass::Bra, 4, 2, 1).unwrap();
    let d0 = distance_to_limit(&spec, 2, 0, Norm::L1).unwrap();
    let d5 = distance_to_limit(&spec, 2, 5, Norm::L1).unwrap();
    let d50 = distance_to_limit(&spec, 2, 50, Norm::L1).unwrap();
    assert!(d0 > 0.0 && d50 <= d5);
}
