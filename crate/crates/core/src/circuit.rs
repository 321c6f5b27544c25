//! Circuit representation, file format and benchmark generators.
//!
//! In Schrödinger order a circuit applies `C₀`, then for each layer the noise
//! channel and `Rz(θᵢ)` on the rotation qubit followed by the layer's Clifford.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::noise::NormalFormChannel;
use crate::pauli::{CliffordGate, CliffordLayer, PauliAxis, PauliString};

/// Restarts allowed for the pairing model before giving up.
pub const GRAPH_RESTART_BUDGET: usize = 10_000;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("nodes·degree = {nodes}·{degree} is odd")]
    Parity { nodes: usize, degree: usize },
    #[error("a {degree}-regular graph needs more than {degree} nodes, got {nodes}")]
    TooFewNodes { nodes: usize, degree: usize },
    #[error("no simple {degree}-regular graph on {nodes} nodes after {restarts} restarts")]
    Generation {
        nodes: usize,
        degree: usize,
        restarts: usize,
    },
    #[error("graph line {line}: {message}")]
    GraphFormat { line: usize, message: String },
    #[error("{0}")]
    Parameter(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn schema(path: impl Into<String>, message: impl fmt::Display) -> CircuitError {
    CircuitError::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

/// One noisy-rotation layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub noise: NormalFormChannel,
    pub rotation_qubit: usize,
    pub clifford: CliffordLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub n: usize,
    pub initial_clifford: CliffordLayer,
    pub layers: Vec<Layer>,
}

impl Circuit {
    pub fn new(n: usize, initial_clifford: CliffordLayer, layers: Vec<Layer>) -> Result<Self, CircuitError> {
        let c = Self {
            n,
            initial_clifford,
            layers,
        };
        c.validate()?;
        Ok(c)
    }

    /// Number of rotation angles.
    pub fn m(&self) -> usize {
        self.layers.len()
    }

    /// Checks qubit ranges, naming the first offending field.
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.n == 0 {
            return Err(schema("n", "need at least one qubit"));
        }
        check_layer(&self.initial_clifford, self.n, "initial_clifford")?;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.rotation_qubit >= self.n {
                return Err(schema(
                    format!("layers[{i}].rotation_qubit"),
                    format!("qubit {} out of range for n = {}", layer.rotation_qubit, self.n),
                ));
            }
            check_layer(&layer.clifford, self.n, &format!("layers[{i}].clifford"))?;
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, CircuitError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let c: Circuit = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(if path == "." { "<root>".into() } else { path }, e.inner())
        })?;
        c.validate()?;
        Ok(c)
    }

    /// Sorted keys, shortest round-trip floats, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CircuitError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|source| CircuitError::Io {
            path: p.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CircuitError> {
        let p = path.as_ref();
        std::fs::write(p, self.to_canonical_json()).map_err(|source| CircuitError::Io {
            path: p.display().to_string(),
            source,
        })
    }

    /// Total gate count over all Clifford layers.
    pub fn clifford_gate_count(&self) -> usize {
        self.initial_clifford.len() + self.layers.iter().map(|l| l.clifford.len()).sum::<usize>()
    }
}

fn check_layer(layer: &CliffordLayer, n: usize, path: &str) -> Result<(), CircuitError> {
    for (k, g) in layer.gates.iter().enumerate() {
        g.validate(n).map_err(|e| schema(format!("{path}[{k}].qubits"), e))?;
    }
    Ok(())
}

/// Pretty JSON with object keys sorted, via `serde_json::Value`.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to json");
    let mut s = serde_json::to_string_pretty(&v).expect("json value prints");
    s.push('\n');
    s
}

/// Accumulates gates into the current Clifford layer; each rotation opens a new one.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    n: usize,
    initial: CliffordLayer,
    layers: Vec<Layer>,
}

impl CircuitBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            initial: CliffordLayer::default(),
            layers: Vec::new(),
        }
    }

    pub fn gate(&mut self, g: CliffordGate) -> &mut Self {
        match self.layers.last_mut() {
            Some(l) => l.clifford.push(g),
            None => self.initial.push(g),
        }
        self
    }

    pub fn gates(&mut self, gs: impl IntoIterator<Item = CliffordGate>) -> &mut Self {
        for g in gs {
            self.gate(g);
        }
        self
    }

    pub fn rotation(&mut self, qubit: usize, noise: NormalFormChannel) -> &mut Self {
        self.layers.push(Layer {
            noise,
            rotation_qubit: qubit,
            clifford: CliffordLayer::default(),
        });
        self
    }

    pub fn build(&self) -> Result<Circuit, CircuitError> {
        Circuit::new(self.n, self.initial.clone(), self.layers.clone())
    }
}

// ---------------------------------------------------------------------------
// Graphs

/// Simple undirected graph; edges are stored as `(min, max)` in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, CircuitError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= nodes || b >= nodes {
                return Err(CircuitError::Parameter(format!(
                    "edge ({a}, {b}) out of range for {nodes} nodes"
                )));
            }
            if a == b {
                return Err(CircuitError::Parameter(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(CircuitError::Parameter(format!("repeated edge ({}, {})", e.0, e.1)));
            }
            out.push(e);
        }
        Ok(Self { nodes, edges: out })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn complete(nodes: usize) -> Self {
        let edges = (0..nodes).flat_map(|a| (a + 1..nodes).map(move |b| (a, b)));
        Self::new(nodes, edges).expect("complete graph is simple")
    }

    /// One `"i j"` line per edge. The node count is the largest index plus one
    /// unless `nodes` is given.
    pub fn parse_edge_list(text: &str, nodes: Option<usize>) -> Result<Self, CircuitError> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| CircuitError::GraphFormat {
                    line: i + 1,
                    message: format!("{s:?}: {e}"),
                })
            };
            match parts.as_slice() {
                [a, b] => edges.push((parse(a)?, parse(b)?)),
                _ => {
                    return Err(CircuitError::GraphFormat {
                        line: i + 1,
                        message: "expected two node indices".into(),
                    })
                }
            }
        }
        let inferred = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        Self::new(nodes.unwrap_or(inferred), edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
    }
}

fn shuffle<T>(v: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        v.swap(i, j);
    }
}

/// Uniform-ish random `degree`-regular simple graph from the pairing model.
/// A pairing with a loop or a repeated edge is rejected and redrawn.
pub fn random_regular_graph(nodes: usize, degree: usize, seed: u64) -> Result<Graph, CircuitError> {
    if nodes <= degree {
        return Err(CircuitError::TooFewNodes { nodes, degree });
    }
    if (nodes * degree) % 2 == 1 {
        return Err(CircuitError::Parity { nodes, degree });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..nodes).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    'attempt: for _ in 0..GRAPH_RESTART_BUDGET {
        shuffle(&mut points, &mut rng);
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(points.len() / 2);
        for pair in points.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'attempt;
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let g = Graph::new(nodes, edges)?;
        assert!(g.degrees().iter().all(|&d| d == degree), "pairing model produced a non-regular graph");
        return Ok(g);
    }
    Err(CircuitError::Generation {
        nodes,
        degree,
        restarts: GRAPH_RESTART_BUDGET,
    })
}

// ---------------------------------------------------------------------------
// QAOA

/// QAOA MaxCut ansatz with one angle per rotation.
///
/// `C₀` is a Hadamard on every qubit. Each round applies `CX(i,j) Rz_j CX(i,j)`
/// for every edge and then `H Rz H` on every qubit.
pub fn qaoa_circuit(g: &Graph, rounds: usize, noise: &NormalFormChannel) -> Result<Circuit, CircuitError> {
    if rounds == 0 {
        return Err(CircuitError::Parameter("QAOA needs at least one round".into()));
    }
    let n = g.nodes();
    let mut b = CircuitBuilder::new(n);
    b.gates((0..n).map(CliffordGate::H));
    for _ in 0..rounds {
        for &(i, j) in g.edges() {
            b.gate(CliffordGate::CX(i, j));
            b.rotation(j, noise.clone());
            b.gate(CliffordGate::CX(i, j));
        }
        for q in 0..n {
            b.gate(CliffordGate::H(q));
            b.rotation(q, noise.clone());
            b.gate(CliffordGate::H(q));
        }
    }
    b.build()
}

/// Layer-to-parameter map for the conventional tied QAOA angles: in round `r`
/// every cost rotation reads parameter `2r` and every mixer rotation `2r+1`.
pub fn qaoa_tied_angle_map(g: &Graph, rounds: usize) -> Vec<usize> {
    let mut map = Vec::with_capacity(rounds * (g.edges().len() + g.nodes()));
    for r in 0..rounds {
        map.extend(std::iter::repeat_n(2 * r, g.edges().len()));
        map.extend(std::iter::repeat_n(2 * r + 1, g.nodes()));
    }
    map
}

/// Expands shared parameters into a per-layer angle vector.
pub fn expand_angles(map: &[usize], params: &[f64]) -> Result<Vec<f64>, CircuitError> {
    map.iter()
        .map(|&k| {
            params.get(k).copied().ok_or_else(|| {
                CircuitError::Parameter(format!("angle map refers to parameter {k}, only {} given", params.len()))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random circuits

/// Structural knobs of [`random_circuit_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomCircuitOptions {
    /// Gates drawn for each Clifford layer.
    pub gates_per_layer: usize,
    /// Chance, in percent, that a drawn gate is a two-qubit gate (needs `n ≥ 2`).
    pub two_qubit_percent: u32,
    /// Prepend one of the 24 single-qubit Cliffords on the rotation qubit.
    pub single_qubit_random_cliffords: bool,
}

impl Default for RandomCircuitOptions {
    fn default() -> Self {
        Self {
            gates_per_layer: 2,
            two_qubit_percent: 50,
            single_qubit_random_cliffords: false,
        }
    }
}

/// Uniform index in `0..k`, through `u64` so results agree on every platform.
fn uniform(rng: &mut ChaCha8Rng, k: usize) -> usize {
    rng.gen_range(0..k as u64) as usize
}

fn random_gate(n: usize, two_qubit_percent: u32, rng: &mut ChaCha8Rng) -> CliffordGate {
    if n >= 2 && rng.gen_range(0..100u32) < two_qubit_percent {
        let a = uniform(rng, n);
        let mut b = uniform(rng, n - 1);
        if b >= a {
            b += 1;
        }
        match uniform(rng, 2) {
            0 => CliffordGate::CX(a, b),
            _ => CliffordGate::CZ(a, b),
        }
    } else {
        let q = uniform(rng, n);
        match uniform(rng, 3) {
            0 => CliffordGate::H(q),
            1 => CliffordGate::S(q),
            _ => CliffordGate::Sdg(q),
        }
    }
}

pub fn random_circuit(
    n: usize,
    m: usize,
    noise: &NormalFormChannel,
    seed: u64,
    single_qubit_random_cliffords: bool,
) -> Result<Circuit, CircuitError> {
    random_circuit_with(
        n,
        m,
        noise,
        seed,
        &RandomCircuitOptions {
            single_qubit_random_cliffords,
            ..Default::default()
        },
    )
}

/// Seeded random circuit. Every structural decision is an integer draw from ChaCha8.
pub fn random_circuit_with(
    n: usize,
    m: usize,
    noise: &NormalFormChannel,
    seed: u64,
    opts: &RandomCircuitOptions,
) -> Result<Circuit, CircuitError> {
    if n == 0 || m == 0 {
        return Err(CircuitError::Parameter(format!("random circuits need n, m >= 1 (got {n}, {m})")));
    }
    if opts.two_qubit_percent > 100 {
        return Err(CircuitError::Parameter("two_qubit_percent must be at most 100".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new(n);
    for _ in 0..opts.gates_per_layer {
        b.gate(random_gate(n, opts.two_qubit_percent, &mut rng));
    }
    for _ in 0..m {
        let q = uniform(&mut rng, n);
        b.rotation(q, noise.clone());
        if opts.single_qubit_random_cliffords {
            let k = uniform(&mut rng, 24);
            b.gates(single_qubit_clifford(k, q));
        }
        for _ in 0..opts.gates_per_layer {
            b.gate(random_gate(n, opts.two_qubit_percent, &mut rng));
        }
    }
    b.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Generator {
    H,
    S,
}

/// Signed Heisenberg images of `X` and `Z`, which determine a single-qubit
/// Clifford up to global phase.
fn clifford_image(seq: &[Generator]) -> ((bool, PauliAxis), (bool, PauliAxis)) {
    let layer: CliffordLayer = seq
        .iter()
        .map(|g| match g {
            Generator::H => CliffordGate::H(0),
            Generator::S => CliffordGate::S(0),
        })
        .collect();
    let image = |a| {
        let mut p = PauliString::from_axes(&[a]).expect("one-qubit string");
        p.apply_layer(&layer);
        (p.is_negative(), p.axis(0))
    };
    (image(PauliAxis::X), image(PauliAxis::Z))
}

/// The 24 single-qubit Cliffords as shortest H/S words, in breadth-first order.
fn clifford_words() -> &'static [Vec<Generator>] {
    static WORDS: OnceLock<Vec<Vec<Generator>>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let mut seen = HashMap::new();
        let mut words = Vec::new();
        let mut queue = VecDeque::from([Vec::new()]);
        while let Some(w) = queue.pop_front() {
            if seen.insert(clifford_image(&w), ()).is_some() {
                continue;
            }
            for g in [Generator::H, Generator::S] {
                let mut next = w.clone();
                next.push(g);
                queue.push_back(next);
            }
            words.push(w);
        }
        assert_eq!(words.len(), 24);
        words
    })
}

/// The `k`-th single-qubit Clifford (`k < 24`) on qubit `q`, in Schrödinger order.
pub fn single_qubit_clifford(k: usize, q: usize) -> Vec<CliffordGate> {
    clifford_words()[k]
        .iter()
        .map(|g| match g {
            Generator::H => CliffordGate::H(q),
            Generator::S => CliffordGate::S(q),
        })
        .collect()
}
