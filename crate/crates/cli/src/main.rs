//! `pqcprop`: build, sample, evaluate and check Pauli-propagation surrogates.
//!
//! Each subcommand prints one JSON summary line on standard output and keeps
//! human-readable progress on standard error. Output files are written to a
//! temporary sibling and renamed into place, so a failed run leaves nothing
//! half-written.
//!
//! Exit codes: 0 ok, 1 check failed, 2 usage or schema error, 3 inadmissible
//! noise, 4 resource budget exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use pqcprop::circuit::{qaoa_circuit, qaoa_tied_angle_map, random_circuit_with, random_regular_graph, expand_angles};
use pqcprop::engine::{build_deterministic_with, build_mc_with, exact_tree_with, with_threads, EngineError, NoiseSummary};
use pqcprop::experiments::{run, write_csv, ExperimentConfig, ROUNDING_SLACK};
use pqcprop::noise::{amplitude_damping, ChannelSpec, NormalFormChannel};
use pqcprop::oracle::{density_matrix_expectation, ptm_expectation, OracleError, PTM_MAX_QUBITS};
use pqcprop::surrogate::{
    certificate_bound, damping_certificate, empirical_l2, mc_bound, surrogate_from_json, surrogate_to_json, McNoise,
    SurrogateMeta,
};
use pqcprop::circuit::RandomCircuitOptions;
use pqcprop::{BuildMode, BuildReport, Circuit, EngineConfig, Graph, PauliString, Surrogate};

#[derive(Parser)]
#[command(name = "pqcprop", version, about = "Pauli-propagation surrogates for noisy Clifford+Rz circuits")]
struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "PQCPROP_THREADS", default_value_t = 0)]
    threads: usize,

    /// Silence progress messages on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic truncated build with an error certificate.
    Build(BuildArgs),
    /// Monte-Carlo build from independently sampled trees.
    Sample(SampleArgs),
    /// Evaluate a surrogate file at the angles of a theta file.
    Eval(EvalArgs),
    /// Brute-force expectation values from a dense simulator.
    Oracle(OracleArgs),
    /// Estimate the L2 error of a surrogate and check it against its bound.
    Validate(ValidateArgs),
    /// Generate circuit files.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run an experiment described by a JSON config and write a CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct Target {
    /// Circuit JSON file.
    #[arg(short = 'c', long = "circuit")]
    circuit: PathBuf,
    /// Observable as a Pauli string (`ZZII`, `-XY`), or a file holding one.
    #[arg(short = 'o', long = "observable", allow_hyphen_values = true)]
    observable: String,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    target: Target,
    /// Split budget per branch.
    #[arg(long, required_unless_present = "exact")]
    ell: Option<usize>,
    /// Expand the whole tree instead of truncating.
    #[arg(long, conflicts_with = "ell")]
    exact: bool,
    /// Surrogate output file.
    #[arg(long)]
    out: PathBuf,
    /// Largest work stack any worker may hold.
    #[arg(long, default_value_t = EngineConfig::default().max_live_branches)]
    max_live_branches: usize,
    /// Path closures allowed with --exact.
    #[arg(long, default_value_t = EngineConfig::default().max_closures)]
    max_closures: u64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    ell: usize,
    /// Number of sampled trees.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trees: u64,
    #[arg(long)]
    seed: u64,
    /// Failure probability for the reported bound.
    #[arg(long, default_value_t = 0.1, value_parser = open_unit)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = EngineConfig::default().max_live_branches)]
    max_live_branches: usize,
}

#[derive(Args)]
struct Angles {
    /// JSON file: one angle vector, or a list of them.
    #[arg(long)]
    theta: PathBuf,
    /// JSON list mapping each layer to a shared parameter index.
    #[arg(long)]
    angle_map: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Surrogate file.
    surrogate: PathBuf,
    #[command(flatten)]
    angles: Angles,
    /// CSV output; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    /// Pauli transfer matrices on the full Pauli vector.
    Ptm,
    /// Density matrix with Kraus operators.
    Dm,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    angles: Angles,
    #[arg(long, value_enum, default_value = "ptm")]
    method: OracleMethod,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    /// The untruncated tree.
    Exact,
    /// The transfer-matrix oracle at every sample.
    Ptm,
}

#[derive(Args)]
struct ValidateArgs {
    /// Surrogate file.
    surrogate: PathBuf,
    /// Circuit the surrogate was built from.
    #[arg(short = 'c', long = "circuit")]
    circuit: PathBuf,
    /// Uniform angle samples for the error estimate.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure probability used for Monte-Carlo bounds.
    #[arg(long, default_value_t = 0.1, value_parser = open_unit)]
    delta: f64,
    /// Standard errors of slack allowed above the bound.
    #[arg(long, default_value_t = 4.0)]
    sigmas: f64,
    #[arg(long, value_enum, default_value = "exact")]
    reference: ReferenceArg,
}

#[derive(Args)]
#[command(group(ArgGroup::new("channel").required(true).args(["gamma", "noise"])))]
struct NoiseArgs {
    /// Amplitude-damping strength on every layer.
    #[arg(long)]
    gamma: Option<f64>,
    /// Channel object in JSON, e.g. '{"type":"dephasing","lambda":0.2}'.
    #[arg(long)]
    noise: Option<String>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// QAOA on a random 3-regular graph (or a given edge list).
    Qaoa {
        #[arg(long, required_unless_present = "graph")]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge-list file, one `i j` pair per line, instead of a random graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Also write the tied per-round angle map here.
        #[arg(long)]
        angle_map_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random Clifford+Rz circuit.
    Random {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        layers: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = RandomCircuitOptions::default().gates_per_layer)]
        gates_per_layer: usize,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(0..=100))]
        two_qubit_percent: u32,
        /// Prepend a random single-qubit Clifford on each rotation qubit.
        #[arg(long)]
        single_qubit_cliffords: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    config: PathBuf,
    /// CSV output file.
    #[arg(long)]
    out: PathBuf,
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

// ---------------------------------------------------------------------------
// Failures and exit codes

const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ADMISSIBILITY: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl std::fmt::Display) -> Self {
        Self { code: EXIT_USAGE, error: anyhow!("{msg}") }
    }
}

fn exit_code(e: &pqcprop::Error) -> u8 {
    match e {
        pqcprop::Error::Engine(EngineError::Inadmissible { .. }) => EXIT_ADMISSIBILITY,
        pqcprop::Error::Engine(EngineError::Resource { .. } | EngineError::ThreadPool(_)) => EXIT_RESOURCE,
        pqcprop::Error::Oracle(OracleError::TooLarge { .. }) => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

impl<E: Into<pqcprop::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Self { code: exit_code(&e), error: e.into() }
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn log(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("pqcprop: {msg}");
        }
    }
}

fn summary(v: Value) {
    println!("{v}");
}

// ---------------------------------------------------------------------------
// Files

fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::usage(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    Circuit::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_observable(arg: &str) -> Result<PauliString, Failure> {
    let path = Path::new(arg);
    let text = if path.is_file() { read(path)? } else { arg.to_string() };
    text.trim()
        .parse()
        .map_err(|e| Failure::usage(format!("observable {:?}: {e}", text.trim())))
}

fn load_target(t: &Target) -> Result<(Circuit, PauliString), Failure> {
    let c = load_circuit(&t.circuit)?;
    let obs = load_observable(&t.observable)?;
    if obs.num_qubits() != c.n {
        return Err(Failure::usage(format!(
            "observable acts on {} qubits, circuit has {}",
            obs.num_qubits(),
            c.n
        )));
    }
    Ok((c, obs))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThetaFile {
    One(Vec<f64>),
    Many(Vec<Vec<f64>>),
}

/// Angle vectors from a theta file, expanded through an angle map when given,
/// then checked against the expected layer count.
fn load_angles(a: &Angles, m: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let text = read(&a.theta)?;
    let parsed: ThetaFile = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: expected a list of angles or a list of lists: {e}", a.theta.display())))?;
    let mut rows = match parsed {
        ThetaFile::One(v) => vec![v],
        ThetaFile::Many(v) => v,
    };
    if let Some(map_path) = &a.angle_map {
        let map: Vec<usize> = serde_json::from_str(&read(map_path)?)
            .map_err(|e| Failure::usage(format!("{}: {e}", map_path.display())))?;
        rows = rows
            .iter()
            .map(|p| expand_angles(&map, p))
            .collect::<Result<_, _>>()?;
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(Failure::usage(format!("theta row {i} has {} angles, expected {m}", r.len())));
        }
        if let Some(bad) = r.iter().find(|x| !x.is_finite()) {
            return Err(Failure::usage(format!("theta row {i} holds a non-finite angle {bad}")));
        }
    }
    Ok(rows)
}

fn values_csv(values: &[f64]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::usage(format!("csv: {e}"));
    w.write_record(["index", "value"]).map_err(csv_err)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), serde_json::to_string(v).unwrap_or_default()]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Failure::usage(format!("csv: {e}")))
}

fn emit_values(ctx: &Ctx, command: &str, values: &[f64], out: Option<&Path>) -> CmdResult {
    let bytes = values_csv(values)?;
    match out {
        None => {
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Failure::usage(format!("stdout: {e}")))?;
        }
        Some(path) => {
            write_atomic(path, &bytes)?;
            ctx.log(format!("wrote {} values to {}", values.len(), path.display()));
            summary(json!({"command": command, "points": values.len(), "out": path.display().to_string()}));
        }
    }
    Ok(())
}

fn channel(n: &NoiseArgs) -> Result<NormalFormChannel, Failure> {
    match (n.gamma, &n.noise) {
        (Some(g), _) => Ok(amplitude_damping(g)?),
        (None, Some(text)) => {
            let spec: ChannelSpec =
                serde_json::from_str(text).map_err(|e| Failure::usage(format!("--noise: {e}")))?;
            Ok(spec.build()?)
        }
        (None, None) => Err(Failure::usage("one of --gamma or --noise is required")),
    }
}

// ---------------------------------------------------------------------------
// Subcommands

fn report_fields(rep: &BuildReport, seconds: f64) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("mode".into(), json!(rep.mode));
    m.insert("ell".into(), json!(rep.ell));
    m.insert("terms".into(), json!(rep.surrogate.len()));
    m.insert("max_degree".into(), json!(rep.surrogate.max_degree()));
    m.insert("discarded".into(), json!(rep.discarded_count));
    m.insert("expanded".into(), json!(rep.expanded_branch_count));
    m.insert("peak_live_branches".into(), json!(rep.peak_live_branches));
    m.insert("noise".into(), json!(rep.noise.label));
    m.insert("seconds".into(), json!(seconds));
    m
}

fn cmd_build(ctx: &Ctx, a: &BuildArgs) -> CmdResult {
    let (c, obs) = load_target(&a.target)?;
    let cfg = EngineConfig {
        max_live_branches: a.max_live_branches,
        max_closures: a.max_closures,
        threads: None,
    };
    ctx.log(format!("n={} m={} observable {obs}", c.n, c.m()));
    let t0 = Instant::now();
    let rep = match a.ell {
        Some(ell) if !a.exact => build_deterministic_with(&c, &obs, ell, &cfg)?,
        _ => exact_tree_with(&c, &obs, &cfg)?,
    };
    let secs = t0.elapsed().as_secs_f64();
    write_atomic(&a.out, surrogate_to_json(&rep.surrogate, &rep.file_meta(&c, &obs)).as_bytes())?;
    ctx.log(format!("{} terms in {secs:.3}s, wrote {}", rep.surrogate.len(), a.out.display()));

    let mut s = report_fields(&rep, secs);
    s.insert("command".into(), json!("build"));
    s.insert("r_certificate".into(), json!(rep.r_certificate));
    s.insert("bound".into(), json!(certificate_bound(&rep).ok()));
    s.insert("certificate_formal".into(), json!(rep.certificate_formal));
    s.insert("out".into(), json!(a.out.display().to_string()));
    summary(Value::Object(s));
    Ok(())
}

fn cmd_sample(ctx: &Ctx, a: &SampleArgs) -> CmdResult {
    let (c, obs) = load_target(&a.target)?;
    let trees = usize::try_from(a.trees).map_err(|_| Failure::usage("--trees is too large"))?;
    let cfg = EngineConfig {
        max_live_branches: a.max_live_branches,
        ..Default::default()
    };
    ctx.log(format!("n={} m={} observable {obs}, {trees} trees", c.n, c.m()));
    let t0 = Instant::now();
    let rep = build_mc_with(&c, &obs, a.ell, trees, a.seed, &cfg)?;
    let secs = t0.elapsed().as_secs_f64();
    write_atomic(&a.out, surrogate_to_json(&rep.surrogate, &rep.file_meta(&c, &obs)).as_bytes())?;
    ctx.log(format!("{} terms in {secs:.3}s, wrote {}", rep.surrogate.len(), a.out.display()));

    let mut s = report_fields(&rep, secs);
    s.insert("command".into(), json!("sample"));
    s.insert("trees".into(), json!(trees));
    s.insert("seed".into(), json!(a.seed));
    s.insert("delta".into(), json!(a.delta));
    s.insert("mc_bound".into(), json!(mc_bound(a.ell, trees, a.delta, McNoise::of(&rep.noise)).ok()));
    s.insert("out".into(), json!(a.out.display().to_string()));
    summary(Value::Object(s));
    Ok(())
}

fn load_surrogate(path: &Path) -> Result<(Surrogate, SurrogateMeta), Failure> {
    surrogate_from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> CmdResult {
    let (s, _) = load_surrogate(&a.surrogate)?;
    let thetas = load_angles(&a.angles, s.num_angles())?;
    let values = s.evaluate_batch(&thetas)?;
    emit_values(ctx, "eval", &values, a.out.as_deref())
}

fn cmd_oracle(ctx: &Ctx, a: &OracleArgs) -> CmdResult {
    let (c, obs) = load_target(&a.target)?;
    let thetas = load_angles(&a.angles, c.m())?;
    let values = thetas
        .iter()
        .map(|th| match a.method {
            OracleMethod::Ptm => ptm_expectation(&c, &obs, th),
            OracleMethod::Dm => density_matrix_expectation(&c, &obs, th),
        })
        .collect::<Result<Vec<f64>, _>>()?;
    emit_values(ctx, "oracle", &values, a.out.as_deref())
}

/// The formal bound a surrogate file claims, or `None` when it has none.
fn claimed_bound(meta: &SurrogateMeta, noise: &NoiseSummary, delta: f64) -> Result<Option<f64>, Failure> {
    Ok(match meta.mode {
        BuildMode::Exact => Some(0.0),
        BuildMode::Deterministic => match meta.r_certificate {
            None => Some(0.0),
            Some(r) => match (noise.all_amplitude_damping, noise.min_gamma) {
                (true, Some(g)) => Some(damping_certificate(g, r)),
                _ => None,
            },
        },
        BuildMode::MonteCarlo => {
            let trees = meta.trees.ok_or_else(|| Failure::usage("Monte-Carlo surrogate without a tree count"))?;
            Some(mc_bound(meta.ell.unwrap_or(usize::MAX), trees, delta, McNoise::of(noise))?)
        }
    })
}

fn cmd_validate(ctx: &Ctx, a: &ValidateArgs) -> CmdResult {
    let (s, meta) = load_surrogate(&a.surrogate)?;
    let c = load_circuit(&a.circuit)?;
    if c.hash() != meta.circuit_hash {
        return Err(Failure::usage(format!(
            "surrogate was built from circuit {}, {} hashes to {}",
            meta.circuit_hash,
            a.circuit.display(),
            c.hash()
        )));
    }
    let obs = load_observable(&meta.observable)?;
    let noise = NoiseSummary::of(&c);
    let bound = claimed_bound(&meta, &noise, a.delta)?;
    let samples = usize::try_from(a.samples).map_err(|_| Failure::usage("--samples is too large"))?;

    ctx.log(format!("estimating the L2 error over {samples} angle samples"));
    let (est, se) = match a.reference {
        ReferenceArg::Exact => {
            let exact = exact_tree_with(&c, &obs, &EngineConfig::default())?.surrogate;
            empirical_l2(&s, |th| exact.evaluate(th).expect("angle count checked"), samples, a.seed)?
        }
        ReferenceArg::Ptm => {
            if c.n > PTM_MAX_QUBITS {
                return Err(OracleError::TooLarge { oracle: "transfer-matrix", max: PTM_MAX_QUBITS, n: c.n }.into());
            }
            if s.num_angles() != c.m() {
                return Err(Failure::usage(format!("surrogate has {} angles, circuit {}", s.num_angles(), c.m())));
            }
            empirical_l2(&s, |th| ptm_expectation(&c, &obs, th).expect("inputs checked"), samples, a.seed)?
        }
    };
    let pass = bound.map(|b| est <= b + a.sigmas * se + ROUNDING_SLACK);
    summary(json!({
        "command": "validate",
        "mode": meta.mode,
        "delta_estimate": est,
        "std_error": se,
        "bound": bound,
        "sigmas": a.sigmas,
        "samples": samples,
        "seed": a.seed,
        "pass": pass,
    }));
    match pass {
        Some(false) => {
            ctx.log(format!("bound check failed: {est:.6} > {:.6} + {}·{se:.2e}", bound.unwrap_or(0.0), a.sigmas));
            Err(Failure { code: EXIT_CHECK, error: anyhow!("error estimate exceeds the bound") })
        }
        Some(true) => Ok(()),
        None => {
            ctx.log("no formal bound for this noise model; nothing to check");
            Ok(())
        }
    }
}

fn cmd_gen(ctx: &Ctx, g: &GenCommand) -> CmdResult {
    let (c, out) = match g {
        GenCommand::Qaoa { nodes, rounds, noise, seed, graph, angle_map_out, out } => {
            let ch = channel(noise)?;
            let graph = match graph {
                Some(p) => Graph::parse_edge_list(&read(p)?, *nodes)?,
                None => random_regular_graph(nodes.expect("clap requires --nodes"), 3, *seed)?,
            };
            let c = qaoa_circuit(&graph, *rounds, &ch)?;
            if let Some(p) = angle_map_out {
                let map = qaoa_tied_angle_map(&graph, *rounds);
                write_atomic(p, format!("{}\n", json!(map)).as_bytes())?;
            }
            (c, out)
        }
        GenCommand::Random { qubits, layers, noise, seed, gates_per_layer, two_qubit_percent, single_qubit_cliffords, out } => {
            let ch = channel(noise)?;
            let opts = RandomCircuitOptions {
                gates_per_layer: *gates_per_layer,
                two_qubit_percent: *two_qubit_percent,
                single_qubit_random_cliffords: *single_qubit_cliffords,
            };
            (random_circuit_with(*qubits, *layers, &ch, *seed, &opts)?, out)
        }
    };
    write_atomic(out, format!("{}\n", c.to_canonical_json()).as_bytes())?;
    ctx.log(format!("wrote n={} m={} to {}", c.n, c.m(), out.display()));
    summary(json!({
        "command": "gen",
        "n": c.n,
        "m": c.m(),
        "clifford_gates": c.clifford_gate_count(),
        "circuit_hash": c.hash(),
        "out": out.display().to_string(),
    }));
    Ok(())
}

fn cmd_experiment(ctx: &Ctx, a: &ExperimentArgs) -> CmdResult {
    let cfg = ExperimentConfig::from_json_str(&read(&a.config)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    ctx.log(format!("running experiment {}", a.config.display()));
    let t0 = Instant::now();
    let table = run(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &cfg.hash(), &table)?;
    write_atomic(&a.out, &buf)?;
    ctx.log(format!("{} rows in {:.1}s, wrote {}", table.rows.len(), t0.elapsed().as_secs_f64(), a.out.display()));
    summary(json!({
        "command": "experiment",
        "rows": table.rows.len(),
        "config_hash": cfg.hash(),
        "out": a.out.display().to_string(),
    }));
    Ok(())
}

fn dispatch(ctx: &Ctx, cmd: &Command) -> CmdResult {
    match cmd {
        Command::Build(a) => cmd_build(ctx, a),
        Command::Sample(a) => cmd_sample(ctx, a),
        Command::Eval(a) => cmd_eval(ctx, a),
        Command::Oracle(a) => cmd_oracle(ctx, a),
        Command::Validate(a) => cmd_validate(ctx, a),
        Command::Gen(g) => cmd_gen(ctx, g),
        Command::Experiment(a) => cmd_experiment(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { quiet: cli.quiet };
    let threads = (cli.threads > 0).then_some(cli.threads);
    let result = with_threads(threads, || dispatch(&ctx, &cli.command)).unwrap_or_else(|e| Err(e.into()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pqcprop: error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
