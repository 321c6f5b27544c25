//! Truncated Pauli backpropagation trees.
//!
//! The observable is pushed backwards through the circuit. At layer `i` the
//! branch is conjugated by `Cᵢ` and then by the adjoint noisy rotation on qubit
//! `qᵢ`, which acts on the local letter as
//!
//! ```text
//! I -> I
//! Z -> t_Z I + D_Z Z
//! X -> t_X I + D_X cos θ X + D_X sin θ Y
//! Y -> t_Y I + D_Y cos θ Y - D_Y sin θ X
//! ```
//!
//! Every surviving term becomes a child branch. After `C₀` a branch closes
//! with value `coeff·⟨0|P|0⟩`, filed under its monomial key.
//!
//! The deterministic mode keeps every child and discards branches that would
//! split more than `ell` times, recording the fewest `±1` events any discarded
//! branch had seen. The Monte-Carlo mode samples between the identity collapse
//! and the rotation children, which makes each tree an unbiased estimator.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::noise::validate;
use crate::pauli::{PauliAxis, PauliString};
use crate::surrogate::{CompensatedSum, MonomialKey, Surrogate, SurrogateMeta, Trig};

/// Process factors below this magnitude are treated as zero.
pub const PRUNE_TOL: f64 = 1e-15;

/// Independent subtrees handed to the worker pool in deterministic mode.
/// Fixed so the reduction order never depends on the thread count.
const FRONTIER_TASKS: usize = 64;

/// Trees per work unit in Monte-Carlo mode.
const MC_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("observable acts on {found} qubits, circuit has {expected}")]
    ObservableSize { expected: usize, found: usize },
    #[error("layer {layer} channel {label} is not admissible: {reason}")]
    Inadmissible {
        layer: usize,
        label: String,
        reason: String,
    },
    #[error("{budget_name} budget of {budget} exceeded; {advice}")]
    Resource {
        budget_name: &'static str,
        budget: u64,
        advice: &'static str,
    },
    #[error("invalid circuit: {0}")]
    Circuit(String),
    #[error("{0}")]
    Parameter(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuildMode {
    #[serde(rename = "deterministic")]
    Deterministic,
    #[serde(rename = "mc")]
    MonteCarlo,
    #[serde(rename = "exact")]
    Exact,
}

impl fmt::Display for BuildMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuildMode::Deterministic => "deterministic",
            BuildMode::MonteCarlo => "mc",
            BuildMode::Exact => "exact",
        })
    }
}

/// Resource limits and parallelism.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Largest explicit work stack any worker may hold.
    pub max_live_branches: usize,
    /// Path closures allowed in exact mode.
    pub max_closures: u64,
    /// `None` uses the ambient rayon pool, `Some(k)` a dedicated pool of `k` workers.
    pub threads: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_live_branches: 1 << 22,
            max_closures: 1 << 24,
            threads: None,
        }
    }
}

/// What the layer channels look like, for bounds and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub all_amplitude_damping: bool,
    /// Smallest damping strength, present when every layer is amplitude damping.
    pub min_gamma: Option<f64>,
    /// `max_i max_{P∈{X,Y}} |D_P|+|t_P|`.
    pub max_xy_contraction: f64,
    pub label: String,
}

impl NoiseSummary {
    pub fn of(circuit: &Circuit) -> Self {
        let gammas: Vec<Option<f64>> = circuit
            .layers
            .iter()
            .map(|l| l.noise.as_amplitude_damping())
            .collect();
        let all_ad = gammas.iter().all(Option::is_some);
        let min_gamma = if all_ad && !gammas.is_empty() {
            gammas.iter().flatten().copied().reduce(f64::min)
        } else {
            None
        };
        let max_xy = circuit
            .layers
            .iter()
            .map(|l| l.noise.xy_contraction())
            .fold(0.0, f64::max);
        let mut labels: Vec<String> = Vec::new();
        for l in &circuit.layers {
            let s = l.noise.label();
            if !labels.contains(&s) {
                labels.push(s);
            }
        }
        Self {
            all_amplitude_damping: all_ad,
            min_gamma,
            max_xy_contraction: max_xy,
            label: if labels.is_empty() {
                "none".into()
            } else {
                labels.join(", ")
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub surrogate: Surrogate,
    /// Fewest `±1` events on any discarded branch; `None` when nothing was discarded.
    pub r_certificate: Option<usize>,
    /// Whether `(1-γ)^{r/2}` is a proved bound (every layer is amplitude damping).
    pub certificate_formal: bool,
    pub discarded_count: u64,
    pub expanded_branch_count: u64,
    pub peak_live_branches: usize,
    pub mode: BuildMode,
    pub ell: Option<usize>,
    pub trees: Option<usize>,
    pub seed: Option<u64>,
    pub noise: NoiseSummary,
}

impl BuildReport {
    /// Metadata block for the surrogate file.
    pub fn file_meta(&self, circuit: &Circuit, observable: &PauliString) -> SurrogateMeta {
        SurrogateMeta {
            mode: self.mode,
            ell: self.ell,
            trees: self.trees,
            seed: self.seed,
            r_certificate: self.r_certificate,
            circuit_hash: circuit.hash(),
            observable: observable.to_string(),
            m: circuit.m(),
            gamma_or_channel_summary: self.noise.label.clone(),
        }
    }
}

/// Which process a branch went through at a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessLabel {
    /// Identity letter, nothing happens.
    Zero,
    /// `Z` kept with factor `D_Z`.
    ZeroZ,
    /// `Z` collapsed to `I` with factor `t_Z`.
    ZeroI,
    /// `X` collapsed to `I` with factor `t_X`.
    ZeroX,
    /// `Y` collapsed to `I` with factor `t_Y`.
    ZeroY,
    /// `X -> cos θ X`.
    PlusX,
    /// `X -> sin θ Y`.
    MinusX,
    /// `Y -> cos θ Y`.
    PlusY,
    /// `Y -> -sin θ X`.
    MinusY,
}

impl ProcessLabel {
    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            ProcessLabel::PlusX | ProcessLabel::MinusX | ProcessLabel::PlusY | ProcessLabel::MinusY
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStatus {
    /// Reached `C₀` (or the identity) with a diagonal Pauli.
    Closed,
    /// Reached `C₀` with an off-diagonal Pauli; contributes zero.
    Vanished,
    /// Dropped by the `ell` cutoff.
    Discarded,
}

/// One root-to-leaf path of a deterministic tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    /// `(layer, process)` in visiting order, i.e. decreasing layer.
    pub processes: Vec<(u32, ProcessLabel)>,
    /// `|Q(ω)|`, the product of process factor magnitudes.
    pub q_factor: f64,
    /// Sign from Clifford phases, negative factors and the final `⟨0|P|0⟩`.
    pub sign: f64,
    pub key: MonomialKey,
    pub splits: usize,
    pub h_weight: usize,
    pub status: PathStatus,
}

impl PathRecord {
    /// The path's coefficient `d_ω` (zero unless closed).
    pub fn coefficient(&self) -> f64 {
        match self.status {
            PathStatus::Closed => self.sign * self.q_factor,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Branch {
    pauli: PauliString,
    coeff: f64,
    /// Trig factors in visiting (decreasing layer) order.
    key: Vec<(u32, Trig)>,
    splits: usize,
    /// Layers still to process; the next one is `layers[remaining - 1]`.
    remaining: usize,
    trace: Vec<(u32, ProcessLabel)>,
}

impl Branch {
    fn sorted_key(&self) -> MonomialKey {
        let mut k = self.key.clone();
        k.reverse();
        MonomialKey::from_sorted_unchecked(k)
    }
}

trait Recorder {
    fn close(&mut self, b: Branch, value: f64) -> Result<(), EngineError>;
    fn discard(&mut self, b: &Branch);
    fn vanish(&mut self, _b: Branch) {}
}

#[derive(Default)]
struct Accumulator {
    terms: HashMap<MonomialKey, CompensatedSum>,
    min_h: Option<usize>,
    discarded: u64,
    expanded: u64,
    peak: usize,
}

impl Accumulator {
    fn merge_min(&mut self, h: Option<usize>) {
        self.min_h = match (self.min_h, h) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
}

struct Budgeted<'a> {
    acc: Accumulator,
    closures: &'a AtomicU64,
    limit: Option<u64>,
}

impl Recorder for Budgeted<'_> {
    fn close(&mut self, b: Branch, value: f64) -> Result<(), EngineError> {
        if let Some(limit) = self.limit {
            if self.closures.fetch_add(1, Ordering::Relaxed) >= limit {
                return Err(EngineError::Resource {
                    budget_name: "path-closure",
                    budget: limit,
                    advice: "use the dense oracle for circuits this large",
                });
            }
        }
        if value != 0.0 {
            self.acc.terms.entry(b.sorted_key()).or_default().add(value);
        }
        Ok(())
    }

    fn discard(&mut self, b: &Branch) {
        self.acc.discarded += 1;
        self.acc.merge_min(Some(b.key.len()));
    }
}

#[derive(Default)]
struct Tracer {
    paths: Vec<PathRecord>,
}

impl Tracer {
    fn record(&mut self, b: Branch, sign: f64, status: PathStatus) {
        let key = b.sorted_key();
        self.paths.push(PathRecord {
            processes: b.trace,
            q_factor: b.coeff.abs(),
            sign: sign * b.coeff.signum(),
            h_weight: key.degree(),
            key,
            splits: b.splits,
            status,
        });
    }
}

impl Recorder for Tracer {
    fn close(&mut self, b: Branch, value: f64) -> Result<(), EngineError> {
        let sign = if value == 0.0 { 0.0 } else { value.signum() * b.coeff.signum() };
        let status = if value == 0.0 {
            PathStatus::Vanished
        } else {
            PathStatus::Closed
        };
        self.record(b, sign, status);
        Ok(())
    }

    fn discard(&mut self, b: &Branch) {
        let sign = b.pauli.sign();
        self.record(b.clone(), sign, PathStatus::Discarded);
    }

    fn vanish(&mut self, b: Branch) {
        let sign = b.pauli.sign();
        self.record(b, sign, PathStatus::Vanished);
    }
}

/// A single surviving term of the adjoint noisy rotation.
#[derive(Clone, Copy)]
struct Child {
    factor: f64,
    axis: PauliAxis,
    trig: Option<Trig>,
    label: ProcessLabel,
}

struct Walker<'a> {
    circuit: &'a Circuit,
    ell: usize,
    trace: bool,
}

impl<'a> Walker<'a> {
    /// Closes `b` if it is finished, otherwise queues it.
    fn settle(&self, mut b: Branch, out: &mut Vec<Branch>, rec: &mut impl Recorder) -> Result<(), EngineError> {
        if b.pauli.is_identity() {
            let v = b.coeff * b.pauli.sign();
            return rec.close(b, v);
        }
        if b.remaining == 0 {
            b.pauli.apply_layer(&self.circuit.initial_clifford);
            let ev = b.pauli.vacuum_expectation();
            if ev == 0.0 {
                rec.vanish(b);
                return Ok(());
            }
            let v = b.coeff * ev;
            return rec.close(b, v);
        }
        out.push(b);
        Ok(())
    }

    /// Terms of the adjoint noisy rotation of layer `layer` on a letter.
    fn children(&self, layer: usize, axis: PauliAxis) -> ([Option<Child>; 3], usize) {
        let noise = &self.circuit.layers[layer - 1].noise;
        let (t, d) = (noise.t_of(axis), noise.d_of(axis));
        let mut out = [None; 3];
        let mut k = 0;
        let mut push = |c: Child| {
            if c.factor.abs() >= PRUNE_TOL {
                out[k] = Some(c);
                k += 1;
            }
        };
        match axis {
            PauliAxis::I => unreachable!("identity letters do not branch"),
            PauliAxis::Z => {
                push(Child { factor: d, axis: PauliAxis::Z, trig: None, label: ProcessLabel::ZeroZ });
                push(Child { factor: t, axis: PauliAxis::I, trig: None, label: ProcessLabel::ZeroI });
            }
            PauliAxis::X => {
                push(Child { factor: d, axis: PauliAxis::X, trig: Some(Trig::Cos), label: ProcessLabel::PlusX });
                push(Child { factor: d, axis: PauliAxis::Y, trig: Some(Trig::Sin), label: ProcessLabel::MinusX });
                push(Child { factor: t, axis: PauliAxis::I, trig: None, label: ProcessLabel::ZeroX });
            }
            PauliAxis::Y => {
                push(Child { factor: d, axis: PauliAxis::Y, trig: Some(Trig::Cos), label: ProcessLabel::PlusY });
                push(Child { factor: -d, axis: PauliAxis::X, trig: Some(Trig::Sin), label: ProcessLabel::MinusY });
                push(Child { factor: t, axis: PauliAxis::I, trig: None, label: ProcessLabel::ZeroY });
            }
        }
        (out, k)
    }

    fn spawn(&self, b: &Branch, layer: usize, q: usize, c: &Child, splits: usize) -> Branch {
        let mut child = b.clone();
        self.apply_child(&mut child, layer, q, c, splits);
        child
    }

    fn apply_child(&self, b: &mut Branch, layer: usize, q: usize, c: &Child, splits: usize) {
        b.coeff *= c.factor;
        b.pauli.set_axis(q, c.axis);
        if let Some(t) = c.trig {
            b.key.push((layer as u32, t));
        }
        b.splits = splits;
        if self.trace {
            b.trace.push((layer as u32, c.label));
        }
    }

    /// Pushes `b` through its next layer in deterministic mode.
    fn step(&self, mut b: Branch, out: &mut Vec<Branch>, rec: &mut impl Recorder) -> Result<(), EngineError> {
        let layer = b.remaining;
        let l = &self.circuit.layers[layer - 1];
        b.pauli.apply_layer(&l.clifford);
        b.remaining -= 1;
        let q = l.rotation_qubit;
        let axis = b.pauli.axis(q);
        if axis == PauliAxis::I {
            if self.trace {
                b.trace.push((layer as u32, ProcessLabel::Zero));
            }
            return self.settle(b, out, rec);
        }
        let (children, k) = self.children(layer, axis);
        let splits = match k {
            0 => return Ok(()),
            1 => b.splits,
            _ if b.splits >= self.ell => {
                rec.discard(&b);
                return Ok(());
            }
            _ => b.splits + 1,
        };
        for c in children[1..k].iter().flatten() {
            let child = self.spawn(&b, layer, q, c, splits);
            self.settle(child, out, rec)?;
        }
        let first = children[0].expect("k >= 1");
        self.apply_child(&mut b, layer, q, &first, splits);
        self.settle(b, out, rec)
    }

    /// Depth-first expansion of `root` with an explicit stack.
    fn expand(&self, root: Branch, rec: &mut impl Recorder, stats: &mut Accumulator, max_live: usize) -> Result<(), EngineError> {
        let mut stack = vec![root];
        while let Some(b) = stack.pop() {
            stats.expanded += 1;
            self.step(b, &mut stack, rec)?;
            stats.peak = stats.peak.max(stack.len());
            if stack.len() > max_live {
                return Err(EngineError::Resource {
                    budget_name: "live-branch",
                    budget: max_live as u64,
                    advice: "lower ell or raise the live-branch budget",
                });
            }
        }
        Ok(())
    }

    fn root(&self, obs: &PauliString) -> Branch {
        Branch {
            pauli: obs.clone(),
            coeff: 1.0,
            key: Vec::new(),
            splits: 0,
            remaining: self.circuit.m(),
            trace: Vec::new(),
        }
    }
}

fn check_inputs(circuit: &Circuit, obs: &PauliString) -> Result<(), EngineError> {
    circuit.validate().map_err(|e| EngineError::Circuit(e.to_string()))?;
    if obs.num_qubits() != circuit.n {
        return Err(EngineError::ObservableSize {
            expected: circuit.n,
            found: obs.num_qubits(),
        });
    }
    for (i, l) in circuit.layers.iter().enumerate() {
        let report = validate(&l.noise);
        if !report.engine_admissible() {
            return Err(EngineError::Inadmissible {
                layer: i + 1,
                label: l.noise.label(),
                reason: report.failure_reason(),
            });
        }
    }
    Ok(())
}

/// Runs `f` either in the ambient pool or in a dedicated one.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, EngineError> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn finish_terms(m: usize, terms: BTreeMap<MonomialKey, CompensatedSum>, scale: f64) -> Surrogate {
    let mut s = Surrogate::from_terms(m, terms.into_iter().map(|(k, v)| (k, v.value() * scale)))
        .expect("engine keys stay within the circuit's layers");
    s.prune_zeros();
    s
}

fn run_tree(circuit: &Circuit, obs: &PauliString, ell: usize, mode: BuildMode, cfg: &EngineConfig) -> Result<BuildReport, EngineError> {
    check_inputs(circuit, obs)?;
    let walker = Walker { circuit, ell, trace: false };
    let closures = AtomicU64::new(0);
    let limit = (mode == BuildMode::Exact).then_some(cfg.max_closures);

    // Breadth-first until the frontier is wide enough to split into tasks.
    let mut root_rec = Budgeted { acc: Accumulator::default(), closures: &closures, limit };
    let mut frontier = Vec::new();
    walker.settle(walker.root(obs), &mut frontier, &mut root_rec)?;
    while !frontier.is_empty() && frontier.len() < FRONTIER_TASKS {
        let mut next = Vec::new();
        for b in frontier {
            root_rec.acc.expanded += 1;
            walker.step(b, &mut next, &mut root_rec)?;
        }
        root_rec.acc.peak = root_rec.acc.peak.max(next.len());
        frontier = next;
    }

    let tasks: Vec<Result<Accumulator, EngineError>> = with_threads(cfg.threads, || {
        frontier
            .into_par_iter()
            .map(|b| {
                let mut rec = Budgeted { acc: Accumulator::default(), closures: &closures, limit };
                let mut stats = Accumulator::default();
                walker.expand(b, &mut rec, &mut stats, cfg.max_live_branches)?;
                rec.acc.expanded = stats.expanded;
                rec.acc.peak = stats.peak;
                Ok(rec.acc)
            })
            .collect()
    })?;

    let mut total = root_rec.acc;
    let mut merged: BTreeMap<MonomialKey, CompensatedSum> = BTreeMap::new();
    for (k, v) in total.terms.drain() {
        merged.entry(k).or_default().add(v.value());
    }
    let mut peak_tasks = 0usize;
    for t in tasks {
        let t = t?;
        for (k, v) in t.terms {
            merged.entry(k).or_default().add(v.value());
        }
        total.discarded += t.discarded;
        total.expanded += t.expanded;
        total.merge_min(t.min_h);
        peak_tasks = peak_tasks.max(t.peak);
    }
    let noise = NoiseSummary::of(circuit);
    Ok(BuildReport {
        surrogate: finish_terms(circuit.m(), merged, 1.0),
        r_certificate: total.min_h,
        certificate_formal: noise.all_amplitude_damping,
        discarded_count: total.discarded,
        expanded_branch_count: total.expanded,
        peak_live_branches: total.peak.max(peak_tasks),
        mode,
        ell: (mode == BuildMode::Deterministic).then_some(ell),
        trees: None,
        seed: None,
        noise,
    })
}

/// Deterministic truncated tree with cutoff `ell` on the number of splits.
pub fn build_deterministic(circuit: &Circuit, obs: &PauliString, ell: usize) -> Result<BuildReport, EngineError> {
    build_deterministic_with(circuit, obs, ell, &EngineConfig::default())
}

pub fn build_deterministic_with(
    circuit: &Circuit,
    obs: &PauliString,
    ell: usize,
    cfg: &EngineConfig,
) -> Result<BuildReport, EngineError> {
    run_tree(circuit, obs, ell, BuildMode::Deterministic, cfg)
}

/// The untruncated tree: the exact Fourier expansion of the expectation.
pub fn exact_tree(circuit: &Circuit, obs: &PauliString) -> Result<BuildReport, EngineError> {
    exact_tree_with(circuit, obs, &EngineConfig::default())
}

pub fn exact_tree_with(circuit: &Circuit, obs: &PauliString, cfg: &EngineConfig) -> Result<BuildReport, EngineError> {
    run_tree(circuit, obs, usize::MAX, BuildMode::Exact, cfg)
}

/// Every root-to-leaf path of the deterministic tree, in depth-first order.
pub fn trace_paths(circuit: &Circuit, obs: &PauliString, ell: usize) -> Result<Vec<PathRecord>, EngineError> {
    check_inputs(circuit, obs)?;
    let walker = Walker { circuit, ell, trace: true };
    let mut tracer = Tracer::default();
    let mut stack = Vec::new();
    walker.settle(walker.root(obs), &mut stack, &mut tracer)?;
    while let Some(b) = stack.pop() {
        walker.step(b, &mut stack, &mut tracer)?;
    }
    Ok(tracer.paths)
}

// ---------------------------------------------------------------------------
// Monte-Carlo trees

/// Generator for tree `k`: ChaCha8 keyed by `seed`, stream `k`.
pub fn tree_rng(seed: u64, tree_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index);
    rng
}

impl Walker<'_> {
    fn sample_step(
        &self,
        mut b: Branch,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<Branch>,
        rec: &mut Budgeted<'_>,
    ) -> Result<(), EngineError> {
        let layer = b.remaining;
        let l = &self.circuit.layers[layer - 1];
        b.pauli.apply_layer(&l.clifford);
        b.remaining -= 1;
        let q = l.rotation_qubit;
        let axis = b.pauli.axis(q);
        if axis == PauliAxis::I {
            return self.settle(b, out, rec);
        }
        let (t, d) = (l.noise.t_of(axis), l.noise.d_of(axis));
        let (ta, da) = (t.abs(), d.abs());
        let live_t = ta >= PRUNE_TOL;
        let live_d = da >= PRUNE_TOL;
        let w = ta + da;
        // `collapse` picks the identity term; otherwise the D term(s) are taken.
        let (collapse, scale) = match (live_t, live_d) {
            (false, false) => return Ok(()),
            (true, false) => (true, t),
            (false, true) => (false, d),
            (true, true) => {
                let u: f64 = rng.gen();
                if u * w < ta {
                    (true, t.signum() * w)
                } else {
                    (false, d.signum() * w)
                }
            }
        };
        b.coeff *= scale;
        if collapse {
            b.pauli.set_axis(q, PauliAxis::I);
            return self.settle(b, out, rec);
        }
        match axis {
            PauliAxis::Z => self.settle(b, out, rec),
            PauliAxis::X | PauliAxis::Y => {
                if b.splits >= self.ell {
                    rec.discard(&b);
                    return Ok(());
                }
                let (other, sin_sign) = if axis == PauliAxis::X {
                    (PauliAxis::Y, 1.0)
                } else {
                    (PauliAxis::X, -1.0)
                };
                let sin = Child { factor: sin_sign, axis: other, trig: Some(Trig::Sin), label: ProcessLabel::Zero };
                let cos = Child { factor: 1.0, axis, trig: Some(Trig::Cos), label: ProcessLabel::Zero };
                let splits = b.splits + 1;
                let child = self.spawn(&b, layer, q, &sin, splits);
                self.settle(child, out, rec)?;
                self.apply_child(&mut b, layer, q, &cos, splits);
                self.settle(b, out, rec)
            }
            PauliAxis::I => unreachable!(),
        }
    }

    fn sample_into(&self, obs: &PauliString, mut rng: ChaCha8Rng, rec: &mut Budgeted<'_>, max_live: usize) -> Result<(), EngineError> {
        let mut stack = Vec::new();
        self.settle(self.root(obs), &mut stack, rec)?;
        while let Some(b) = stack.pop() {
            rec.acc.expanded += 1;
            self.sample_step(b, &mut rng, &mut stack, rec)?;
            rec.acc.peak = rec.acc.peak.max(stack.len());
            if stack.len() > max_live {
                return Err(EngineError::Resource {
                    budget_name: "live-branch",
                    budget: max_live as u64,
                    advice: "lower ell or raise the live-branch budget",
                });
            }
        }
        Ok(())
    }
}

/// One sampled tree, the `tree_index`-th of the family keyed by `seed`.
pub fn sample_tree(circuit: &Circuit, obs: &PauliString, ell: usize, seed: u64, tree_index: u64) -> Result<Surrogate, EngineError> {
    check_inputs(circuit, obs)?;
    let walker = Walker { circuit, ell, trace: false };
    let closures = AtomicU64::new(0);
    let mut rec = Budgeted { acc: Accumulator::default(), closures: &closures, limit: None };
    walker.sample_into(obs, tree_rng(seed, tree_index), &mut rec, EngineConfig::default().max_live_branches)?;
    let terms: BTreeMap<_, _> = rec.acc.terms.into_iter().collect();
    Ok(finish_terms(circuit.m(), terms, 1.0))
}

/// Average of `trees` sampled trees; tree `k` uses [`tree_rng`]`(seed, k)`.
pub fn build_mc(circuit: &Circuit, obs: &PauliString, ell: usize, trees: usize, seed: u64) -> Result<BuildReport, EngineError> {
    build_mc_with(circuit, obs, ell, trees, seed, &EngineConfig::default())
}

pub fn build_mc_with(
    circuit: &Circuit,
    obs: &PauliString,
    ell: usize,
    trees: usize,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<BuildReport, EngineError> {
    if trees == 0 {
        return Err(EngineError::Parameter("need at least one tree".into()));
    }
    check_inputs(circuit, obs)?;
    let walker = Walker { circuit, ell, trace: false };
    let closures = AtomicU64::new(0);
    let chunks = trees.div_ceil(MC_CHUNK);
    let parts: Vec<Result<Accumulator, EngineError>> = with_threads(cfg.threads, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rec = Budgeted { acc: Accumulator::default(), closures: &closures, limit: None };
                for k in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(trees) {
                    walker.sample_into(obs, tree_rng(seed, k as u64), &mut rec, cfg.max_live_branches)?;
                }
                Ok(rec.acc)
            })
            .collect()
    })?;
    let mut merged: BTreeMap<MonomialKey, CompensatedSum> = BTreeMap::new();
    let (mut discarded, mut expanded, mut peak) = (0, 0, 0);
    for p in parts {
        let p = p?;
        for (k, v) in p.terms {
            merged.entry(k).or_default().add(v.value());
        }
        discarded += p.discarded;
        expanded += p.expanded;
        peak = peak.max(p.peak);
    }
    Ok(BuildReport {
        surrogate: finish_terms(circuit.m(), merged, 1.0 / trees as f64),
        r_certificate: None,
        certificate_formal: false,
        discarded_count: discarded,
        expanded_branch_count: expanded,
        peak_live_branches: peak,
        mode: BuildMode::MonteCarlo,
        ell: Some(ell),
        trees: Some(trees),
        seed: Some(seed),
        noise: NoiseSummary::of(circuit),
    })
}
