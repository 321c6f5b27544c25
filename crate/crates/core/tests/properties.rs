use num_complex::Complex64;
use pqcprop::engine::BuildMode;
use pqcprop::noise::{amplitude_damping, compose, convex_combine, dephasing, depolarizing, validate, NormalFormChannel};
use pqcprop::oracle::kraus_operators;
use pqcprop::pauli::{CliffordGate, CliffordLayer, PauliString};
use pqcprop::surrogate::{surrogate_from_json, surrogate_to_json, SurrogateMeta};
use pqcprop::{MonomialKey, Surrogate, Trig};
use proptest::prelude::*;

fn pauli_2x2(k: usize) -> [[Complex64; 2]; 2] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [[[l, o], [o, l]], [[o, l], [l, o]], [[o, -i], [i, o]], [[l, o], [o, -l]]][k]
}

fn mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn dagger(a: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].conj()))
}

/// `R_ij = ½ tr(P_i Σ_k K P_j K†)` from a Kraus set.
fn kraus_ptm(ch: &NormalFormChannel) -> [[f64; 4]; 4] {
    let ks = kraus_operators(ch.spec()).unwrap();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in &ks {
                let m = mul(&pauli_2x2(i), &mul(&mul(k, &pauli_2x2(j)), &dagger(k)));
                acc += m[0][0] + m[1][1];
            }
            acc.re / 2.0
        })
    })
}

fn mat4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

fn assert_ptm_close(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) {
    for i in 0..4 {
        for j in 0..4 {
            assert!((a[i][j] - b[i][j]).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn normal_forms_match_kraus_transfer_matrices() {
    for ch in [
        amplitude_damping(0.27).unwrap(),
        amplitude_damping(1.0).unwrap(),
        depolarizing(0.4).unwrap(),
        dephasing(0.6).unwrap(),
    ] {
        assert_ptm_close(&ch.ptm(), &kraus_ptm(&ch));
    }
}

#[test]
fn compose_is_the_transfer_matrix_product() {
    let a = amplitude_damping(0.1).unwrap();
    let d = dephasing(0.2).unwrap();
    let p = depolarizing(0.3).unwrap();
    let g = NormalFormChannel::from_parameters([0.1, 0.0, 0.2], [0.5, 0.6, 0.7]).unwrap();
    for (first, second) in [(&a, &d), (&d, &a), (&a, &p), (&g, &a), (&a, &g)] {
        let c = compose(first, second);
        assert_ptm_close(&c.ptm(), &mat4(&second.ptm(), &first.ptm()));
        assert!(validate(&c).valid());
    }
    let c = compose(&a, &d);
    assert_ptm_close(&c.ptm(), &kraus_ptm(&c));
}

#[test]
fn mixtures_match_weighted_kraus() {
    let m = convex_combine(&[0.25, 0.75], &[amplitude_damping(0.4).unwrap(), depolarizing(0.2).unwrap()]).unwrap();
    assert_ptm_close(&m.ptm(), &kraus_ptm(&m));
}

fn key_strategy(m: u32) -> impl Strategy<Value = MonomialKey> {
    proptest::collection::btree_map(1..=m, prop_oneof![Just(Trig::Cos), Just(Trig::Sin)], 0..=m as usize)
        .prop_map(|map| MonomialKey::new(map.into_iter().collect()).unwrap())
}

fn surrogate_strategy(m: u32) -> impl Strategy<Value = Surrogate> {
    proptest::collection::vec((key_strategy(m), -1.0f64..1.0), 0..12)
        .prop_map(move |terms| Surrogate::from_terms(m as usize, terms).unwrap())
}

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    (proptest::collection::vec(0usize..4, n), any::<bool>()).prop_map(|(axes, neg)| {
        let s: String = axes.iter().map(|&a| ['I', 'X', 'Y', 'Z'][a]).collect();
        let mut p: PauliString = s.parse().unwrap();
        p.set_negative(neg);
        p
    })
}

fn gate_strategy(n: usize) -> impl Strategy<Value = CliffordGate> {
    (0usize..9, 0..n, 1..n).prop_map(move |(kind, a, off)| {
        let b = (a + off) % n;
        match kind {
            0 => CliffordGate::H(a),
            1 => CliffordGate::S(a),
            2 => CliffordGate::Sdg(a),
            3 => CliffordGate::X(a),
            4 => CliffordGate::Y(a),
            5 => CliffordGate::Z(a),
            6 => CliffordGate::CX(a, b),
            7 => CliffordGate::CZ(a, b),
            _ => CliffordGate::Swap(a, b),
        }
    })
}

proptest! {
    #[test]
    fn l2_distance_is_a_metric(a in surrogate_strategy(4), b in surrogate_strategy(4), c in surrogate_strategy(4)) {
        let ab = a.l2_distance(&b).unwrap();
        prop_assert_eq!(ab, b.l2_distance(&a).unwrap());
        prop_assert_eq!(a.l2_distance(&a).unwrap(), 0.0);
        let ac = a.l2_distance(&c).unwrap();
        let cb = c.l2_distance(&b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn evaluate_is_linear(a in surrogate_strategy(3), b in surrogate_strategy(3), x in -2.0f64..2.0, y in -2.0f64..2.0,
                          th in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 3)) {
        let lin = a.linear_combination(x, &b, y).unwrap();
        let want = x * a.evaluate(&th).unwrap() + y * b.evaluate(&th).unwrap();
        prop_assert!((lin.evaluate(&th).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn surrogate_files_round_trip(s in surrogate_strategy(5)) {
        let meta = SurrogateMeta {
            mode: BuildMode::Deterministic,
            ell: Some(3),
            trees: None,
            seed: None,
            r_certificate: Some(2),
            circuit_hash: "abc".into(),
            observable: "XZ".into(),
            m: 5,
            gamma_or_channel_summary: "AD(0.1)".into(),
        };
        let text = surrogate_to_json(&s, &meta);
        let (back, meta2) = surrogate_from_json(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(meta2, meta.clone());
        prop_assert_eq!(surrogate_to_json(&back, &meta), text);
    }

    #[test]
    fn pauli_text_round_trips(p in pauli_strategy(7)) {
        let back: PauliString = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn layer_then_inverse_is_identity(p in pauli_strategy(4), gates in proptest::collection::vec(gate_strategy(4), 0..20)) {
        let layer = CliffordLayer::new(gates);
        let mut q = p.clone();
        q.apply_layer(&layer);
        prop_assert_eq!(q.weight() > 0, p.weight() > 0);
        q.apply_layer(&layer.inverse());
        prop_assert_eq!(q, p);
    }
}
