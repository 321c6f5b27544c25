//! Clifford conjugation checked against explicit matrices.

use nalgebra::{Complex, DMatrix};
use pqcprop::pauli::{CliffordGate, CliffordLayer, PauliAxis, PauliString};

type C = Complex<f64>;

fn single(a: PauliAxis) -> DMatrix<C> {
    let o = C::new(0.0, 0.0);
    let l = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    match a {
        PauliAxis::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        PauliAxis::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        PauliAxis::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        PauliAxis::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Qubit `q` is bit `q` of the basis index, so qubit 0 is the rightmost Kronecker factor.
fn pauli_matrix(p: &PauliString) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, C::new(p.sign(), 0.0));
    for q in 0..p.num_qubits() {
        m = single(p.axis(q)).kronecker(&m);
    }
    m
}

fn embed(n: usize, qubits: &[usize], local: &DMatrix<C>) -> DMatrix<C> {
    let d = 1 << n;
    let k = qubits.len();
    let mut out = DMatrix::from_element(d, d, C::new(0.0, 0.0));
    for col in 0..d {
        let lc: usize = (0..k).map(|b| ((col >> qubits[b]) & 1) << b).sum();
        for lr in 0..1 << k {
            let mut row = col;
            for (b, &q) in qubits.iter().enumerate() {
                row = (row & !(1 << q)) | (((lr >> b) & 1) << q);
            }
            out[(row, col)] = local[(lr, lc)];
        }
    }
    out
}

fn gate_matrix(n: usize, g: &CliffordGate) -> DMatrix<C> {
    let o = C::new(0.0, 0.0);
    let l = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let m2 = |v: [C; 4]| DMatrix::from_row_slice(2, 2, &v);
    match *g {
        CliffordGate::H(q) => embed(n, &[q], &m2([h, h, h, -h])),
        CliffordGate::S(q) => embed(n, &[q], &m2([l, o, o, i])),
        CliffordGate::Sdg(q) => embed(n, &[q], &m2([l, o, o, -i])),
        CliffordGate::X(q) => embed(n, &[q], &single(PauliAxis::X)),
        CliffordGate::Y(q) => embed(n, &[q], &single(PauliAxis::Y)),
        CliffordGate::Z(q) => embed(n, &[q], &single(PauliAxis::Z)),
        CliffordGate::CX(c, t) => {
            // |c t> -> |c, t xor c>, local index c + 2t
            let mut m = DMatrix::from_element(4, 4, o);
            for c_bit in 0..2 {
                for t_bit in 0..2 {
                    m[(c_bit + 2 * (t_bit ^ c_bit), c_bit + 2 * t_bit)] = l;
                }
            }
            embed(n, &[c, t], &m)
        }
        CliffordGate::CZ(a, b) => {
            let mut m = DMatrix::identity(4, 4);
            m[(3, 3)] = -l;
            embed(n, &[a, b], &m)
        }
        CliffordGate::Swap(a, b) => {
            let mut m = DMatrix::from_element(4, 4, o);
            for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[(r, c)] = l;
            }
            embed(n, &[a, b], &m)
        }
    }
}

fn all_gates(n: usize) -> Vec<CliffordGate> {
    let mut gs = Vec::new();
    for q in 0..n {
        gs.extend([
            CliffordGate::H(q),
            CliffordGate::S(q),
            CliffordGate::Sdg(q),
            CliffordGate::X(q),
            CliffordGate::Y(q),
            CliffordGate::Z(q),
        ]);
        for r in 0..n {
            if r != q {
                gs.extend([CliffordGate::CX(q, r), CliffordGate::CZ(q, r), CliffordGate::Swap(q, r)]);
            }
        }
    }
    gs
}

fn close(a: &DMatrix<C>, b: &DMatrix<C>) -> bool {
    (a - b).norm() < 1e-12
}

#[test]
fn every_gate_on_every_three_qubit_string() {
    let n = 3;
    for g in all_gates(n) {
        let u = gate_matrix(n, &g);
        for idx in 0..64 {
            for neg in [false, true] {
                let mut p = PauliString::from_dense_index(n, idx);
                p.set_negative(neg);
                let want = u.adjoint() * pauli_matrix(&p) * &u;
                let mut got = p.clone();
                got.apply_gate(&g);
                assert!(close(&pauli_matrix(&got), &want), "{g:?} on {p}: got {got}");
            }
        }
    }
}

#[test]
fn layers_fold_in_reverse() {
    let n = 3;
    let layer = CliffordLayer::new(vec![
        CliffordGate::H(0),
        CliffordGate::CX(0, 1),
        CliffordGate::S(2),
        CliffordGate::CZ(1, 2),
        CliffordGate::Sdg(0),
        CliffordGate::Swap(0, 2),
    ]);
    // Schrödinger order: the first gate acts first, so U = g_k ... g_1.
    let u = layer
        .gates
        .iter()
        .fold(DMatrix::identity(8, 8), |acc, g| gate_matrix(n, g) * acc);
    for idx in 0..64 {
        let p = PauliString::from_dense_index(n, idx);
        let want = u.adjoint() * pauli_matrix(&p) * &u;
        let mut got = p.clone();
        got.apply_layer(&layer);
        assert!(close(&pauli_matrix(&got), &want), "{p} -> {got}");
    }
}

#[test]
fn conjugation_preserves_commutation() {
    let n = 3;
    let layer = CliffordLayer::new(all_gates(n).into_iter().step_by(5).collect());
    for a in 0..64 {
        for b in 0..64 {
            let (pa, pb) = (PauliString::from_dense_index(n, a), PauliString::from_dense_index(n, b));
            let commute = |x: &PauliString, y: &PauliString| {
                let mx = pauli_matrix(x);
                let my = pauli_matrix(y);
                close(&(&mx * &my), &(&my * &mx))
            };
            let (mut qa, mut qb) = (pa.clone(), pb.clone());
            qa.apply_layer(&layer);
            qb.apply_layer(&layer);
            assert_eq!(commute(&pa, &pb), commute(&qa, &qb));
        }
    }
}
