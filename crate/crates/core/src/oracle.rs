//! Dense reference simulators.
//!
//! [`ptm_expectation`] evolves the Pauli-basis coefficients of the state
//! through the circuit; [`density_matrix_expectation`] evolves the full
//! `2ⁿ×2ⁿ` density matrix with Kraus operators. Both work in the Schrödinger
//! picture, independently of the backpropagation engine.
//!
//! Per layer the rotation `U = exp(+iθZ/2)` acts first, then the noise channel,
//! then the layer's Clifford.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::noise::ChannelSpec;
use crate::pauli::{CliffordGate, CliffordLayer, PauliAxis, PauliString};

/// Largest width accepted by the Pauli-transfer oracle.
pub const PTM_MAX_QUBITS: usize = 7;
/// Largest width accepted by the density-matrix oracle.
pub const DM_MAX_QUBITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{oracle} oracle supports at most {max} qubits, circuit has {n}")]
    TooLarge { oracle: &'static str, max: usize, n: usize },
    #[error("angle vector has {found} entries, circuit has {expected} layers")]
    AngleCount { expected: usize, found: usize },
    #[error("observable acts on {found} qubits, circuit has {expected}")]
    ObservableSize { expected: usize, found: usize },
    #[error("no Kraus representation is registered for {0}; use the transfer-matrix oracle")]
    Capability(String),
}

fn check(circuit: &Circuit, obs: &PauliString, theta: &[f64]) -> Result<(), OracleError> {
    if theta.len() != circuit.m() {
        return Err(OracleError::AngleCount {
            expected: circuit.m(),
            found: theta.len(),
        });
    }
    if obs.num_qubits() != circuit.n {
        return Err(OracleError::ObservableSize {
            expected: circuit.n,
            found: obs.num_qubits(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pauli transfer matrices

/// State as `ρ = Σ_P a_P P`, indexed by [`PauliString::dense_index`].
struct PauliState {
    n: usize,
    a: Vec<f64>,
}

impl PauliState {
    fn ground(n: usize) -> Self {
        let mut a = vec![0.0; 1 << (2 * n)];
        let norm = 0.5f64.powi(n as i32);
        // |0><0| = Π (I + Z)/2
        for mask in 0..(1usize << n) {
            let idx = (0..n)
                .filter(|q| mask >> q & 1 == 1)
                .map(|q| 3usize << (2 * q))
                .sum::<usize>();
            a[idx] = norm;
        }
        Self { n, a }
    }

    /// `ρ -> L ρ L†` for a Clifford layer in Schrödinger order.
    fn apply_clifford(&mut self, layer: &CliffordLayer) {
        if layer.is_empty() {
            return;
        }
        let mut out = vec![0.0; self.a.len()];
        let inverse: Vec<CliffordGate> = layer.gates.iter().map(CliffordGate::inverse).collect();
        for (i, &v) in self.a.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut p = PauliString::from_dense_index(self.n, i);
            // g P g† is the Heisenberg image under g⁻¹.
            for g in &inverse {
                p.apply_gate(g);
            }
            out[p.dense_index()] += p.sign() * v;
        }
        self.a = out;
    }

    /// Applies a 4×4 transfer matrix (rows new, columns old; basis I,X,Y,Z) on qubit `q`.
    fn apply_local(&mut self, q: usize, m: &[[f64; 4]; 4]) {
        let stride = 1usize << (2 * q);
        for base in 0..self.a.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let old: [f64; 4] = std::array::from_fn(|k| self.a[base + k * stride]);
            for (r, row) in m.iter().enumerate() {
                self.a[base + r * stride] = row.iter().zip(&old).map(|(x, y)| x * y).sum();
            }
        }
    }

    fn expectation(&self, obs: &PauliString) -> f64 {
        obs.sign() * self.a[obs.unsigned().dense_index()] * 2f64.powi(self.n as i32)
    }
}

fn rotation_ptm(theta: f64) -> [[f64; 4]; 4] {
    let (s, c) = theta.sin_cos();
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, s, 0.0],
        [0.0, -s, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Exact `tr(O 𝒰_θ(|0⟩⟨0|))` from Pauli-basis evolution. Handles every normal-form channel.
pub fn ptm_expectation(circuit: &Circuit, obs: &PauliString, theta: &[f64]) -> Result<f64, OracleError> {
    check(circuit, obs, theta)?;
    if circuit.n > PTM_MAX_QUBITS {
        return Err(OracleError::TooLarge {
            oracle: "transfer-matrix",
            max: PTM_MAX_QUBITS,
            n: circuit.n,
        });
    }
    let mut st = PauliState::ground(circuit.n);
    st.apply_clifford(&circuit.initial_clifford);
    for (l, &th) in circuit.layers.iter().zip(theta) {
        st.apply_local(l.rotation_qubit, &rotation_ptm(th));
        st.apply_local(l.rotation_qubit, &l.noise.ptm());
        st.apply_clifford(&l.clifford);
    }
    Ok(st.expectation(obs))
}

// ---------------------------------------------------------------------------
// Density matrices

pub type Matrix2 = [[Complex64; 2]; 2];

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kraus operators for channels with a known operator-sum form.
pub fn kraus_operators(spec: &ChannelSpec) -> Result<Vec<Matrix2>, OracleError> {
    let zero = c(0.0, 0.0);
    Ok(match spec {
        ChannelSpec::AmplitudeDamping { gamma } => vec![
            [[c(1.0, 0.0), zero], [zero, c((1.0 - gamma).sqrt(), 0.0)]],
            [[zero, c(gamma.sqrt(), 0.0)], [zero, zero]],
        ],
        ChannelSpec::Depolarizing { p } => {
            let a = (1.0 - 3.0 * p / 4.0).sqrt();
            let b = (p / 4.0).sqrt();
            vec![
                [[c(a, 0.0), zero], [zero, c(a, 0.0)]],
                [[zero, c(b, 0.0)], [c(b, 0.0), zero]],
                [[zero, c(0.0, -b)], [c(0.0, b), zero]],
                [[c(b, 0.0), zero], [zero, c(-b, 0.0)]],
            ]
        }
        ChannelSpec::Dephasing { lambda } => {
            let a = (1.0 - lambda / 2.0).sqrt();
            let b = (lambda / 2.0).sqrt();
            vec![
                [[c(a, 0.0), zero], [zero, c(a, 0.0)]],
                [[c(b, 0.0), zero], [zero, c(-b, 0.0)]],
            ]
        }
        ChannelSpec::Compose { first, second } => {
            let k1 = kraus_operators(first)?;
            let k2 = kraus_operators(second)?;
            k2.iter()
                .flat_map(|b| k1.iter().map(move |a| mat_mul(b, a)))
                .collect()
        }
        ChannelSpec::Mixture { weights, channels } => {
            let mut out = Vec::new();
            for (w, ch) in weights.iter().zip(channels) {
                let s = w.sqrt();
                out.extend(kraus_operators(ch)?.into_iter().map(|k| k.map(|row| row.map(|x| x * s))));
            }
            out
        }
        ChannelSpec::NormalForm { .. } => return Err(OracleError::Capability(spec.to_string())),
    })
}

fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// Row-major `2ⁿ×2ⁿ` density matrix; qubit `q` is bit `q` of a basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn ground(n: usize) -> Self {
        let dim = 1 << n;
        let mut data = vec![c(0.0, 0.0); dim * dim];
        data[0] = c(1.0, 0.0);
        Self { n, data }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `X -> X†`.
    fn adjoint_in_place(&mut self) {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                let (a, b) = (self.data[i * d + j], self.data[j * d + i]);
                self.data[i * d + j] = b.conj();
                self.data[j * d + i] = a.conj();
            }
        }
    }

    /// Left-multiplies by `op` acting on `qubits` (local index bit `k` is `qubits[k]`).
    fn left_apply(&mut self, qubits: &[usize], op: &[Vec<Complex64>]) {
        let d = self.dim();
        let k = qubits.len();
        let mask: usize = qubits.iter().map(|q| 1 << q).sum();
        let spread = |local: usize| -> usize {
            (0..k).filter(|b| local >> b & 1 == 1).map(|b| 1 << qubits[b]).sum()
        };
        let offsets: Vec<usize> = (0..1 << k).map(spread).collect();
        let mut col = vec![c(0.0, 0.0); 1 << k];
        for base in (0..d).filter(|r| r & mask == 0) {
            for j in 0..d {
                for (l, off) in offsets.iter().enumerate() {
                    col[l] = self.data[(base + off) * d + j];
                }
                for (r, off) in offsets.iter().enumerate() {
                    self.data[(base + off) * d + j] = op[r].iter().zip(&col).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `ρ -> K ρ K†`.
    fn conjugate(&mut self, qubits: &[usize], op: &[Vec<Complex64>]) {
        self.left_apply(qubits, op);
        self.adjoint_in_place();
        self.left_apply(qubits, op);
        self.adjoint_in_place();
    }

    fn apply_kraus(&mut self, q: usize, ops: &[Matrix2]) {
        let mut acc = vec![c(0.0, 0.0); self.data.len()];
        for k in ops {
            let mut term = self.clone();
            term.conjugate(&[q], &to_rows(k));
            for (a, b) in acc.iter_mut().zip(&term.data) {
                *a += b;
            }
        }
        self.data = acc;
    }

    fn apply_gate(&mut self, g: &CliffordGate) {
        let (qs, op) = gate_matrix(g);
        self.conjugate(&qs, &op);
    }

    /// `tr(ρ P)`; real for Hermitian `ρ`.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let (mut xmask, mut zmask, mut ys) = (0usize, 0usize, 0u32);
        for q in 0..self.n {
            match p.axis(q) {
                PauliAxis::I => {}
                PauliAxis::X => xmask |= 1 << q,
                PauliAxis::Y => {
                    xmask |= 1 << q;
                    zmask |= 1 << q;
                    ys += 1;
                }
                PauliAxis::Z => zmask |= 1 << q,
            }
        }
        let iy = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)][(ys % 4) as usize];
        let mut acc = c(0.0, 0.0);
        for i in 0..self.dim() {
            // P|i> = i^{#Y} (-1)^{|i & zmask|} |i ^ xmask>
            let sign = if (i & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.get(i, i ^ xmask) * sign;
        }
        (acc * iy).re * p.sign()
    }
}

fn to_rows(m: &Matrix2) -> Vec<Vec<Complex64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

fn gate_matrix(g: &CliffordGate) -> (Vec<usize>, Vec<Vec<Complex64>>) {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = |q: usize, m: Matrix2| (vec![q], to_rows(&m));
    let perm = |a: usize, b: usize, p: [usize; 4], phase: [f64; 4]| {
        let mut m = vec![vec![o; 4]; 4];
        for (from, &to) in p.iter().enumerate() {
            m[to][from] = c(phase[from], 0.0);
        }
        (vec![a, b], m)
    };
    match *g {
        CliffordGate::H(q) => one(q, [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]),
        CliffordGate::S(q) => one(q, [[l, o], [o, c(0.0, 1.0)]]),
        CliffordGate::Sdg(q) => one(q, [[l, o], [o, c(0.0, -1.0)]]),
        CliffordGate::X(q) => one(q, [[o, l], [l, o]]),
        CliffordGate::Y(q) => one(q, [[o, c(0.0, -1.0)], [c(0.0, 1.0), o]]),
        CliffordGate::Z(q) => one(q, [[l, o], [o, c(-1.0, 0.0)]]),
        // local index = bit(first) + 2·bit(second)
        CliffordGate::CX(ctl, t) => perm(ctl, t, [0, 3, 2, 1], [1.0; 4]),
        CliffordGate::CZ(a, b) => perm(a, b, [0, 1, 2, 3], [1.0, 1.0, 1.0, -1.0]),
        CliffordGate::Swap(a, b) => perm(a, b, [0, 2, 1, 3], [1.0; 4]),
    }
}

fn rotation_matrix(theta: f64) -> Matrix2 {
    let o = c(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, theta / 2.0), o],
        [o, Complex64::from_polar(1.0, -theta / 2.0)],
    ]
}

/// The final state `𝒰_θ(|0⟩⟨0|)`.
pub fn final_density_matrix(circuit: &Circuit, theta: &[f64]) -> Result<DensityMatrix, OracleError> {
    if theta.len() != circuit.m() {
        return Err(OracleError::AngleCount {
            expected: circuit.m(),
            found: theta.len(),
        });
    }
    if circuit.n > DM_MAX_QUBITS {
        return Err(OracleError::TooLarge {
            oracle: "density-matrix",
            max: DM_MAX_QUBITS,
            n: circuit.n,
        });
    }
    let kraus = circuit
        .layers
        .iter()
        .map(|l| kraus_operators(l.noise.spec()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rho = DensityMatrix::ground(circuit.n);
    for g in &circuit.initial_clifford.gates {
        rho.apply_gate(g);
    }
    for ((l, &th), ks) in circuit.layers.iter().zip(theta).zip(&kraus) {
        rho.conjugate(&[l.rotation_qubit], &to_rows(&rotation_matrix(th)));
        rho.apply_kraus(l.rotation_qubit, ks);
        for g in &l.clifford.gates {
            rho.apply_gate(g);
        }
    }
    Ok(rho)
}

/// Exact `tr(O 𝒰_θ(|0⟩⟨0|))` by density-matrix simulation.
pub fn density_matrix_expectation(circuit: &Circuit, obs: &PauliString, theta: &[f64]) -> Result<f64, OracleError> {
    check(circuit, obs, theta)?;
    Ok(final_density_matrix(circuit, theta)?.expectation(obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::noise::{amplitude_damping, dephasing, depolarizing, NormalFormChannel};

    fn example_a(gamma: f64) -> Circuit {
        let mut b = CircuitBuilder::new(1);
        b.gate(CliffordGate::H(0)).rotation(0, amplitude_damping(gamma).unwrap());
        b.build().unwrap()
    }

    #[test]
    fn example_a_is_damped_cosine() {
        let c = example_a(0.19);
        let x: PauliString = "X".parse().unwrap();
        for th in [0.0, 0.3, 1.2, 4.0] {
            let want = 0.9 * f64::cos(th);
            assert!((ptm_expectation(&c, &x, &[th]).unwrap() - want).abs() < 1e-13);
            assert!((density_matrix_expectation(&c, &x, &[th]).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_sign_convention() {
        // |+> rotated then measured in Y gives the sin term of the X image.
        let mut b = CircuitBuilder::new(1);
        b.gate(CliffordGate::H(0)).rotation(0, NormalFormChannel::identity());
        let c = b.build().unwrap();
        let y: PauliString = "Y".parse().unwrap();
        let th = 0.7;
        let ptm = ptm_expectation(&c, &y, &[th]).unwrap();
        assert!((ptm + th.sin()).abs() < 1e-14);
        let mut b = CircuitBuilder::new(1);
        b.gate(CliffordGate::H(0)).rotation(0, dephasing(0.0).unwrap());
        let c = b.build().unwrap();
        let dm = density_matrix_expectation(&c, &y, &[th]).unwrap();
        assert!((dm - ptm).abs() < 1e-14);
    }

    #[test]
    fn kraus_sets_are_trace_preserving() {
        let specs = [
            amplitude_damping(0.3).unwrap(),
            depolarizing(0.4).unwrap(),
            dephasing(0.2).unwrap(),
            crate::noise::compose(&amplitude_damping(0.1).unwrap(), &dephasing(0.2).unwrap()),
        ];
        for ch in &specs {
            let ks = kraus_operators(ch.spec()).unwrap();
            let mut sum = [[c(0.0, 0.0); 2]; 2];
            for k in &ks {
                let kd: Matrix2 = std::array::from_fn(|i| std::array::from_fn(|j| k[j][i].conj()));
                let p = mat_mul(&kd, k);
                for i in 0..2 {
                    for j in 0..2 {
                        sum[i][j] += p[i][j];
                    }
                }
            }
            for (i, row) in sum.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).norm() < 1e-14, "{ch}");
                }
            }
        }
        assert!(matches!(
            kraus_operators(NormalFormChannel::identity().spec()),
            Err(OracleError::Capability(_))
        ));
    }

    #[test]
    fn bell_state_correlations() {
        let mut b = CircuitBuilder::new(2);
        b.gate(CliffordGate::H(0)).gate(CliffordGate::CX(0, 1));
        let c = b.build().unwrap();
        for (obs, want) in [("ZZ", 1.0), ("XX", 1.0), ("YY", -1.0), ("ZI", 0.0), ("-XX", -1.0)] {
            let p: PauliString = obs.parse().unwrap();
            assert!((ptm_expectation(&c, &p, &[]).unwrap() - want).abs() < 1e-14, "{obs}");
            assert!((density_matrix_expectation(&c, &p, &[]).unwrap() - want).abs() < 1e-14, "{obs}");
        }
    }

    #[test]
    fn size_limits() {
        let c = CircuitBuilder::new(8).build().unwrap();
        let p = PauliString::identity(8);
        assert!(matches!(ptm_expectation(&c, &p, &[]), Err(OracleError::TooLarge { .. })));
        assert!(matches!(density_matrix_expectation(&c, &p, &[]), Err(OracleError::TooLarge { .. })));
        assert!(matches!(ptm_expectation(&example_a(0.1), &"X".parse().unwrap(), &[]), Err(OracleError::AngleCount { .. })));
    }
}
