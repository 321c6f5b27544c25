//! Experiment drivers: `r` versus `ell` on QAOA, certificate validation,
//! Monte-Carlo bound validation and runtime scaling.
//!
//! Each driver takes one variant of [`ExperimentConfig`], runs instances in
//! parallel, and returns typed rows in instance order. [`write_csv`] renders a
//! [`Table`] with a leading `# config_hash=...` comment.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{canonical_json, qaoa_circuit, random_circuit_with, random_regular_graph, Circuit, RandomCircuitOptions};
use crate::engine::{build_deterministic, build_mc, exact_tree};
use crate::noise::{ChannelSpec, NormalFormChannel};
use crate::oracle::ptm_expectation;
use crate::pauli::{PauliAxis, PauliString};
use crate::surrogate::{certificate_bound, empirical_l2, mc_bound, sample_angles, McNoise, Surrogate};
use crate::Error;

/// One QAOA instance: graph size, rounds and the graph seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaoaInstance {
    pub nodes: usize,
    pub rounds: usize,
    pub seed: u64,
}

/// Random-circuit instance family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFamily {
    pub instances: usize,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub m_min: usize,
    pub m_max: usize,
    #[serde(default = "default_two_qubit_percent")]
    pub two_qubit_percent: u32,
    #[serde(default)]
    pub single_qubit_random_cliffords: bool,
}

fn default_two_qubit_percent() -> u32 {
    50
}

fn default_margin() -> f64 {
    0.05
}

fn default_sigmas() -> f64 {
    4.0
}

/// Reference used for the empirical certificate check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The untruncated tree, spot-checked against the transfer-matrix oracle.
    ExactTree,
    /// The transfer-matrix oracle at every sample.
    Ptm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    RVsEll {
        instances: Vec<QaoaInstance>,
        noise: ChannelSpec,
        ells: Vec<usize>,
    },
    Certificate {
        family: RandomFamily,
        /// Damping strengths drawn per instance.
        gammas: Vec<f64>,
        ells: Vec<usize>,
        samples: usize,
        reference: Reference,
        #[serde(default = "default_sigmas")]
        sigmas: f64,
    },
    McValidation {
        family: RandomFamily,
        noise: ChannelSpec,
        ell: usize,
        trees: usize,
        delta: f64,
        repeats: usize,
        #[serde(default = "default_margin")]
        margin: f64,
        /// θ samples for the oracle-based Δ of the first repeat; 0 skips it.
        #[serde(default)]
        oracle_samples: usize,
    },
    Scaling {
        instance: QaoaInstance,
        noise: ChannelSpec,
        ells: Vec<usize>,
        repetitions: usize,
        /// QAOA round counts for the time-versus-m sweep at `m_sweep_ell`.
        #[serde(default)]
        m_sweep_rounds: Vec<usize>,
        #[serde(default)]
        m_sweep_ell: usize,
    },
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, Error> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        match self {
            ExperimentConfig::RVsEll { instances, ells, noise } => {
                noise.build()?;
                if instances.is_empty() {
                    return fail("r_vs_ell needs at least one instance");
                }
                if ells.is_empty() {
                    return fail("ell range is empty");
                }
            }
            ExperimentConfig::Certificate { family, gammas, ells, samples, .. } => {
                check_family(family)?;
                if gammas.is_empty() || ells.is_empty() {
                    return fail("gammas and ells must be non-empty");
                }
                if *samples < 2 {
                    return fail("samples must be at least 2");
                }
            }
            ExperimentConfig::McValidation { family, noise, trees, delta, repeats, .. } => {
                check_family(family)?;
                noise.build()?;
                if *trees == 0 || *repeats == 0 {
                    return fail("trees and repeats must be at least 1");
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    return fail("delta must lie in (0, 1)");
                }
            }
            ExperimentConfig::Scaling { ells, repetitions, noise, .. } => {
                noise.build()?;
                if ells.is_empty() {
                    return fail("ell range is empty");
                }
                if *repetitions == 0 {
                    return fail("repetitions must be at least 1");
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(canonical_json(self).as_bytes()))
    }
}

fn check_family(f: &RandomFamily) -> Result<(), Error> {
    if f.instances == 0 || f.n_min == 0 || f.n_min > f.n_max || f.m_min == 0 || f.m_min > f.m_max {
        return Err(Error::Config(format!("bad random family {f:?}")));
    }
    Ok(())
}

/// Plain string table for CSV output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// Writes `# config_hash=<hash>` followed by the CSV body.
pub fn write_csv<W: Write>(mut out: W, config_hash: &str, table: &Table) -> Result<(), Error> {
    writeln!(out, "# config_hash={config_hash}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form, in exponent notation for very small or large magnitudes.
fn num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "exact".to_string(), |r| r.to_string())
}

/// Random instance `k` of a family; the structure comes from integer draws only.
pub fn family_instance(f: &RandomFamily, k: usize, noise: &NormalFormChannel) -> Result<Circuit, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    rng.set_stream(k as u64);
    let n = rng.gen_range(f.n_min as u64..=f.n_max as u64) as usize;
    let m = rng.gen_range(f.m_min as u64..=f.m_max as u64) as usize;
    let circuit_seed: u64 = rng.gen();
    let opts = RandomCircuitOptions {
        gates_per_layer: n,
        two_qubit_percent: f.two_qubit_percent,
        single_qubit_random_cliffords: f.single_qubit_random_cliffords,
    };
    Ok(random_circuit_with(n, m, noise, circuit_seed, &opts)?)
}

/// A random non-identity observable for instance `k`: each letter uniform over `I, X, Y, Z`,
/// redrawn until something other than the identity comes out.
pub fn family_observable(n: usize, seed: u64, k: usize) -> PauliString {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f62_7365_7276_6162);
    rng.set_stream(k as u64);
    loop {
        let axes: Vec<PauliAxis> = (0..n).map(|_| PauliAxis::from_index(rng.gen_range(0..4u64) as usize)).collect();
        let p = PauliString::from_axes(&axes).expect("non-empty");
        if !p.is_identity() {
            return p;
        }
    }
}

/// Like [`family_observable`], but skips observables whose exact landscape is
/// identically zero, which would make any error check vacuous. Returns the
/// observable with its exact surrogate.
pub fn nontrivial_observable(c: &Circuit, seed: u64, k: usize) -> Result<(PauliString, Surrogate), Error> {
    let mut last = None;
    for attempt in 0..NONTRIVIAL_ATTEMPTS {
        let obs = family_observable(c.n, seed.wrapping_add(attempt as u64), k);
        let exact = exact_tree(c, &obs)?.surrogate;
        if exact.l2_norm() > 1e-9 {
            return Ok((obs, exact));
        }
        last = Some((obs, exact));
    }
    Ok(last.expect("at least one attempt"))
}

const NONTRIVIAL_ATTEMPTS: usize = 64;

/// Absolute slack for floating-point rounding when comparing a distance with a bound.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// `Z_i Z_j` on the first edge of an instance's graph.
pub fn qaoa_instance(inst: &QaoaInstance, noise: &NormalFormChannel) -> Result<(Circuit, PauliString), Error> {
    let g = random_regular_graph(inst.nodes, 3, inst.seed)?;
    let c = qaoa_circuit(&g, inst.rounds, noise)?;
    let (i, j) = g.edges()[0];
    let obs = PauliString::with_letters(inst.nodes, &[(i, PauliAxis::Z), (j, PauliAxis::Z)])?;
    Ok((c, obs))
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

// ---------------------------------------------------------------------------
// r versus ell

#[derive(Debug, Clone, PartialEq)]
pub struct RRow {
    pub instance: QaoaInstance,
    pub ell: usize,
    pub r: Option<usize>,
    pub discarded_count: u64,
    pub build_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RVsEllResult {
    pub rows: Vec<RRow>,
    /// `(ell, mean r, min r)` over the instances that discarded something.
    pub summary: Vec<(usize, Option<f64>, Option<usize>)>,
    /// Least-squares slope of mean `r` against `ell`.
    pub slope: Option<f64>,
    /// `(instance index, ell)` where `r` dropped below its value at the previous `ell`.
    pub monotonicity_violations: Vec<(usize, usize)>,
}

pub fn run_r_vs_ell(instances: &[QaoaInstance], noise: &ChannelSpec, ells: &[usize]) -> Result<RVsEllResult, Error> {
    let channel = noise.build()?;
    let per_instance: Vec<Result<Vec<RRow>, Error>> = instances
        .par_iter()
        .map(|inst| {
            let (c, obs) = qaoa_instance(inst, &channel)?;
            ells.iter()
                .map(|&ell| {
                    let t = Instant::now();
                    let rep = build_deterministic(&c, &obs, ell)?;
                    Ok(RRow {
                        instance: *inst,
                        ell,
                        r: rep.r_certificate,
                        discarded_count: rep.discarded_count,
                        build_ms: elapsed_ms(t),
                    })
                })
                .collect()
        })
        .collect();
    let per_instance = per_instance.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut violations = Vec::new();
    for (k, rows) in per_instance.iter().enumerate() {
        let mut sorted: Vec<&RRow> = rows.iter().collect();
        sorted.sort_by_key(|r| r.ell);
        for w in sorted.windows(2) {
            // An absent r means nothing was discarded, which dominates any value.
            let (a, b) = (w[0].r.unwrap_or(usize::MAX), w[1].r.unwrap_or(usize::MAX));
            if b < a {
                violations.push((k, w[1].ell));
            }
        }
    }
    let mut summary = Vec::new();
    for &ell in ells {
        let rs: Vec<usize> = per_instance
            .iter()
            .flat_map(|rows| rows.iter().filter(|r| r.ell == ell).filter_map(|r| r.r))
            .collect();
        let mean = (!rs.is_empty()).then(|| rs.iter().sum::<usize>() as f64 / rs.len() as f64);
        summary.push((ell, mean, rs.iter().copied().min()));
    }
    let pts: Vec<(f64, f64)> = summary
        .iter()
        .filter_map(|&(ell, mean, _)| mean.map(|m| (ell as f64, m)))
        .collect();
    Ok(RVsEllResult {
        rows: per_instance.into_iter().flatten().collect(),
        summary,
        slope: least_squares_slope(&pts),
        monotonicity_violations: violations,
    })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl RVsEllResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["row", "instance_seed", "nodes", "rounds", "ell", "r", "discarded_count"]);
        for r in &self.rows {
            t.rows.push(vec![
                "data".into(),
                r.instance.seed.to_string(),
                r.instance.nodes.to_string(),
                r.instance.rounds.to_string(),
                r.ell.to_string(),
                opt(r.r),
                r.discarded_count.to_string(),
            ]);
        }
        for &(ell, mean, min) in &self.summary {
            let blank = String::new;
            t.rows.push(vec!["mean".into(), blank(), blank(), blank(), ell.to_string(), mean.map_or("exact".into(), num), blank()]);
            t.rows.push(vec!["min".into(), blank(), blank(), blank(), ell.to_string(), opt(min), blank()]);
        }
        t
    }
}

// ---------------------------------------------------------------------------
// Certificate validation

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRow {
    pub instance: usize,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub ell: usize,
    pub observable: String,
    pub r: Option<usize>,
    pub bound: f64,
    pub analytic_delta: f64,
    pub empirical_delta: f64,
    pub std_error: f64,
    /// Largest deviation of the exact tree from the transfer-matrix oracle on the spot checks.
    pub reference_error: f64,
    pub pass: bool,
}

/// θ vectors used to spot-check the exact tree against the transfer-matrix oracle.
const SPOT_CHECKS: usize = 5;
const SPOT_TOL: f64 = 1e-8;

pub fn run_certificate_validation(
    family: &RandomFamily,
    gammas: &[f64],
    ells: &[usize],
    samples: usize,
    reference: Reference,
    sigmas: f64,
) -> Result<Vec<CertificateRow>, Error> {
    let rows: Vec<Result<Vec<CertificateRow>, Error>> = (0..family.instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(family.seed ^ 0x0067_616d_6d61);
            rng.set_stream(k as u64);
            let gamma = gammas[rng.gen_range(0..gammas.len() as u64) as usize];
            let noise = ChannelSpec::AmplitudeDamping { gamma }.build()?;
            let c = family_instance(family, k, &noise)?;
            let (obs, exact) = nontrivial_observable(&c, family.seed, k)?;
            let mut reference_error: f64 = 0.0;
            for th in sample_angles(c.m(), SPOT_CHECKS, family.seed.wrapping_add(k as u64)) {
                let want = ptm_expectation(&c, &obs, &th)?;
                reference_error = reference_error.max((exact.evaluate(&th)? - want).abs());
            }
            ells.iter()
                .map(|&ell| {
                    let rep = build_deterministic(&c, &obs, ell)?;
                    let bound = certificate_bound(&rep)?;
                    let seed = family.seed.wrapping_mul(1_000_003).wrapping_add((k * 64 + ell) as u64);
                    let (emp, se) = match reference {
                        Reference::ExactTree => empirical_l2(&rep.surrogate, |t| exact.evaluate(t).expect("length checked"), samples, seed)?,
                        Reference::Ptm => empirical_l2(&rep.surrogate, |t| ptm_expectation(&c, &obs, t).expect("checked instance"), samples, seed)?,
                    };
                    let analytic = rep.surrogate.l2_distance(&exact)?;
                    Ok(CertificateRow {
                        instance: k,
                        n: c.n,
                        m: c.m(),
                        gamma,
                        ell,
                        observable: obs.to_string(),
                        r: rep.r_certificate,
                        bound,
                        analytic_delta: analytic,
                        empirical_delta: emp,
                        std_error: se,
                        reference_error,
                        pass: emp <= bound + sigmas * se + ROUNDING_SLACK && reference_error <= SPOT_TOL,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect())
}

pub fn certificate_table(rows: &[CertificateRow]) -> Table {
    let mut t = Table::new(&[
        "instance", "n", "m", "gamma", "ell", "observable", "r", "bound", "analytic_delta", "empirical_delta", "std_error", "reference_error", "pass",
    ]);
    for r in rows {
        t.rows.push(vec![
            r.instance.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            num(r.gamma),
            r.ell.to_string(),
            r.observable.clone(),
            opt(r.r),
            num(r.bound),
            num(r.analytic_delta),
            num(r.empirical_delta),
            num(r.std_error),
            num(r.reference_error),
            r.pass.to_string(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// Monte-Carlo bound validation

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub instance: usize,
    pub n: usize,
    pub m: usize,
    pub observable: String,
    pub trees: usize,
    pub delta: f64,
    pub bound: f64,
    /// Fraction of repeats whose exact `Δ` is within the bound.
    pub pass_fraction: f64,
    pub max_delta: f64,
    pub mean_delta: f64,
    /// `(estimate, std error)` of `Δ` against the transfer-matrix oracle for repeat 0.
    pub oracle_delta: Option<(f64, f64)>,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn run_mc_validation(
    family: &RandomFamily,
    noise: &ChannelSpec,
    ell: usize,
    trees: usize,
    delta: f64,
    repeats: usize,
    margin: f64,
    oracle_samples: usize,
) -> Result<Vec<McRow>, Error> {
    let channel = noise.build()?;
    let mc_noise = match channel.as_amplitude_damping() {
        Some(gamma) => McNoise::AmplitudeDamping { gamma },
        None => McNoise::NormalForm {
            contraction: channel.xy_contraction(),
        },
    };
    let bound = mc_bound(ell, trees, delta, mc_noise)?;
    let rows: Vec<Result<McRow, Error>> = (0..family.instances)
        .into_par_iter()
        .map(|k| {
            let c = family_instance(family, k, &channel)?;
            let (obs, exact) = nontrivial_observable(&c, family.seed, k)?;
            let mut deltas = Vec::with_capacity(repeats);
            let mut first: Option<Surrogate> = None;
            for rep in 0..repeats {
                let seed = family.seed.wrapping_mul(7919).wrapping_add((k * 100_000 + rep) as u64);
                let s = build_mc(&c, &obs, ell, trees, seed)?.surrogate;
                deltas.push(s.l2_distance(&exact)?);
                if rep == 0 {
                    first = Some(s);
                }
            }
            let oracle_delta = if oracle_samples >= 2 {
                let s = first.as_ref().expect("repeats >= 1");
                Some(empirical_l2(s, |t| ptm_expectation(&c, &obs, t).expect("checked instance"), oracle_samples, family.seed + k as u64)?)
            } else {
                None
            };
            let ok = deltas.iter().filter(|&&d| d <= bound + ROUNDING_SLACK).count();
            let frac = ok as f64 / repeats as f64;
            let oracle_ok = oracle_delta.is_none_or(|(e, se)| e <= bound + 4.0 * se + ROUNDING_SLACK);
            Ok(McRow {
                instance: k,
                n: c.n,
                m: c.m(),
                observable: obs.to_string(),
                trees,
                delta,
                bound,
                pass_fraction: frac,
                max_delta: deltas.iter().copied().fold(0.0, f64::max),
                mean_delta: deltas.iter().sum::<f64>() / repeats as f64,
                oracle_delta,
                pass: frac >= 1.0 - delta - margin && oracle_ok,
            })
        })
        .collect();
    rows.into_iter().collect()
}

pub fn mc_table(rows: &[McRow]) -> Table {
    let mut t = Table::new(&[
        "instance", "n", "m", "observable", "K", "delta", "bound", "pass_fraction", "max_delta", "mean_delta", "oracle_delta", "oracle_std_error", "pass",
    ]);
    for r in rows {
        let (od, ose) = r.oracle_delta.map_or((String::new(), String::new()), |(a, b)| (num(a), num(b)));
        t.rows.push(vec![
            r.instance.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.observable.clone(),
            r.trees.to_string(),
            num(r.delta),
            num(r.bound),
            num(r.pass_fraction),
            num(r.max_delta),
            num(r.mean_delta),
            od,
            ose,
            r.pass.to_string(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// Scaling

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    /// `"ell"` or `"m"`.
    pub sweep: &'static str,
    pub ell: usize,
    pub m: usize,
    pub terms: usize,
    pub expanded_branch_count: u64,
    /// Fastest of the repetitions.
    pub build_ms: f64,
    /// `build_ms` over the previous row of the same sweep.
    pub ratio: Option<f64>,
}

fn time_build(c: &Circuit, obs: &PauliString, ell: usize, reps: usize) -> Result<(f64, usize, u64), Error> {
    let mut best = f64::INFINITY;
    let mut info = (0, 0);
    for _ in 0..reps {
        let t = Instant::now();
        let rep = build_deterministic(c, obs, ell)?;
        best = best.min(elapsed_ms(t));
        info = (rep.surrogate.len(), rep.expanded_branch_count);
    }
    Ok((best, info.0, info.1))
}

/// Runs sequentially so timings are not distorted by sibling instances.
pub fn run_scaling(
    instance: &QaoaInstance,
    noise: &ChannelSpec,
    ells: &[usize],
    repetitions: usize,
    m_sweep_rounds: &[usize],
    m_sweep_ell: usize,
) -> Result<Vec<ScalingRow>, Error> {
    let channel = noise.build()?;
    let (c, obs) = qaoa_instance(instance, &channel)?;
    let mut rows: Vec<ScalingRow> = Vec::new();
    for &ell in ells {
        let (ms, terms, expanded) = time_build(&c, &obs, ell, repetitions)?;
        let ratio = rows.last().map(|p| ms / p.build_ms);
        rows.push(ScalingRow { sweep: "ell", ell, m: c.m(), terms, expanded_branch_count: expanded, build_ms: ms, ratio });
    }
    let mut prev: Option<f64> = None;
    for &rounds in m_sweep_rounds {
        let (c, obs) = qaoa_instance(&QaoaInstance { rounds, ..*instance }, &channel)?;
        let (ms, terms, expanded) = time_build(&c, &obs, m_sweep_ell, repetitions)?;
        rows.push(ScalingRow { sweep: "m", ell: m_sweep_ell, m: c.m(), terms, expanded_branch_count: expanded, build_ms: ms, ratio: prev.map(|p| ms / p) });
        prev = Some(ms);
    }
    Ok(rows)
}

pub fn scaling_table(rows: &[ScalingRow]) -> Table {
    let mut t = Table::new(&["sweep", "ell", "m", "terms", "expanded_branch_count", "build_ms", "ratio"]);
    for r in rows {
        t.rows.push(vec![
            r.sweep.to_string(),
            r.ell.to_string(),
            r.m.to_string(),
            r.terms.to_string(),
            r.expanded_branch_count.to_string(),
            format!("{:.4}", r.build_ms),
            r.ratio.map_or(String::new(), |x| format!("{x:.3}")),
        ]);
    }
    t
}

/// Runs whichever experiment `cfg` describes and returns its table.
pub fn run(cfg: &ExperimentConfig) -> Result<Table, Error> {
    cfg.validate()?;
    Ok(match cfg {
        ExperimentConfig::RVsEll { instances, noise, ells } => run_r_vs_ell(instances, noise, ells)?.table(),
        ExperimentConfig::Certificate { family, gammas, ells, samples, reference, sigmas } => {
            certificate_table(&run_certificate_validation(family, gammas, ells, *samples, *reference, *sigmas)?)
        }
        ExperimentConfig::McValidation { family, noise, ell, trees, delta, repeats, margin, oracle_samples } => {
            mc_table(&run_mc_validation(family, noise, *ell, *trees, *delta, *repeats, *margin, *oracle_samples)?)
        }
        ExperimentConfig::Scaling { instance, noise, ells, repetitions, m_sweep_rounds, m_sweep_ell } => {
            scaling_table(&run_scaling(instance, noise, ells, *repetitions, m_sweep_rounds, *m_sweep_ell)?)
        }
    })
}
