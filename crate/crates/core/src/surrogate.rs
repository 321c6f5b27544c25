//! Trigonometric-monomial surrogates `f̃(θ) = Σ_k c_k Π_{(i,φ)∈k} φ(θ_i)`.
//!
//! Monomials over independent uniform angles are orthogonal: a key with `h`
//! trig factors has mean square `2^{-h}`, and two distinct keys integrate to
//! zero against each other. That makes the `L²` landscape distance a plain
//! weighted sum over keys.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{BuildMode, BuildReport, NoiseSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("angle vector has {found} entries, surrogate expects {expected}")]
    AngleCount { expected: usize, found: usize },
    #[error("surrogates have different angle counts ({0} vs {1})")]
    AngleCountMismatch(usize, usize),
    #[error("certificate bound needs a deterministic report, got {0}")]
    Mode(BuildMode),
    #[error("no formal certificate: some layer channel is not amplitude damping")]
    NoFormalBound,
    #[error("{name} = {value} is out of range ({range})")]
    Range {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid monomial key: {0}")]
    Key(String),
}

/// Which trigonometric factor a rotation contributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

impl Trig {
    #[inline]
    pub fn eval(self, theta: f64) -> f64 {
        match self {
            Trig::Cos => theta.cos(),
            Trig::Sin => theta.sin(),
        }
    }
}

/// Sorted list of `(layer, trig)` with 1-based, strictly increasing layers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, Trig)>", into = "Vec<(u32, Trig)>")]
pub struct MonomialKey(Vec<(u32, Trig)>);

impl TryFrom<Vec<(u32, Trig)>> for MonomialKey {
    type Error = SurrogateError;
    fn try_from(v: Vec<(u32, Trig)>) -> Result<Self, SurrogateError> {
        Self::new(v)
    }
}

impl From<MonomialKey> for Vec<(u32, Trig)> {
    fn from(k: MonomialKey) -> Self {
        k.0
    }
}

impl MonomialKey {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(mut factors: Vec<(u32, Trig)>) -> Result<Self, SurrogateError> {
        factors.sort_unstable();
        if factors.iter().any(|&(l, _)| l == 0) {
            return Err(SurrogateError::Key("layer indices start at 1".into()));
        }
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SurrogateError::Key("a layer appears twice".into()));
        }
        Ok(Self(factors))
    }

    /// Caller guarantees the invariant (engine closure path).
    pub(crate) fn from_sorted_unchecked(factors: Vec<(u32, Trig)>) -> Self {
        debug_assert!(factors.windows(2).all(|w| w[0].0 < w[1].0));
        Self(factors)
    }

    pub fn factors(&self) -> &[(u32, Trig)] {
        &self.0
    }

    /// Number of trig factors (`|h(ω)|`).
    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn max_layer(&self) -> u32 {
        self.0.last().map_or(0, |&(l, _)| l)
    }

    /// Product of trig factors given precomputed `cos θ_i`, `sin θ_i` (0-based arrays).
    #[inline]
    fn eval_with(&self, cos: &[f64], sin: &[f64]) -> f64 {
        self.0.iter().fold(1.0, |acc, &(l, t)| {
            let i = (l - 1) as usize;
            acc * match t {
                Trig::Cos => cos[i],
                Trig::Sin => sin[i],
            }
        })
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|&(l, t)| t.eval(theta[(l - 1) as usize]))
            .product()
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (l, t)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            match t {
                Trig::Cos => write!(f, "cos{l}")?,
                Trig::Sin => write!(f, "sin{l}")?,
            }
        }
        Ok(())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A trigonometric polynomial over `m` angles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Surrogate {
    m: usize,
    terms: BTreeMap<MonomialKey, f64>,
}

impl Surrogate {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        m: usize,
        terms: impl IntoIterator<Item = (MonomialKey, f64)>,
    ) -> Result<Self, SurrogateError> {
        let mut s = Self::new(m);
        for (k, c) in terms {
            if k.max_layer() as usize > m {
                return Err(SurrogateError::Key(format!("{k} refers past layer {m}")));
            }
            s.add_term(k, c);
        }
        Ok(s)
    }

    pub fn num_angles(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, f64)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn coefficient(&self, key: &MonomialKey) -> f64 {
        self.terms.get(key).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, key: MonomialKey, coeff: f64) {
        *self.terms.entry(key).or_insert(0.0) += coeff;
    }

    /// Drops terms whose coefficient is exactly zero.
    pub fn prune_zeros(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self, SurrogateError> {
        if self.m != other.m {
            return Err(SurrogateError::AngleCountMismatch(self.m, other.m));
        }
        let mut out = Self::new(self.m);
        for (k, c) in self.terms() {
            out.add_term(k.clone(), a * c);
        }
        for (k, c) in other.terms() {
            out.add_term(k.clone(), b * c);
        }
        Ok(out)
    }

    /// Largest trig degree among the terms.
    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(MonomialKey::degree).max().unwrap_or(0)
    }

    /// `f̃(θ)`, summed in key order with compensation.
    pub fn evaluate(&self, theta: &[f64]) -> Result<f64, SurrogateError> {
        if theta.len() != self.m {
            return Err(SurrogateError::AngleCount {
                expected: self.m,
                found: theta.len(),
            });
        }
        let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        Ok(self.evaluate_trig(&cos, &sin))
    }

    fn evaluate_trig(&self, cos: &[f64], sin: &[f64]) -> f64 {
        let mut acc = CompensatedSum::default();
        for (k, &c) in &self.terms {
            acc.add(c * k.eval_with(cos, sin));
        }
        acc.value()
    }

    /// Evaluates many angle vectors; the batch is split across the ambient rayon pool.
    pub fn evaluate_batch(&self, thetas: &[Vec<f64>]) -> Result<Vec<f64>, SurrogateError> {
        thetas.par_iter().map(|t| self.evaluate(t)).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for (k, &c) in &self.terms {
            acc.add(c * c * 0.5f64.powi(k.degree() as i32));
        }
        acc.value().max(0.0).sqrt()
    }

    /// `(E_θ |f̃₁ - f̃₂|²)^{1/2}` computed from the orthogonality of monomials.
    pub fn l2_distance(&self, other: &Self) -> Result<f64, SurrogateError> {
        if self.m != other.m {
            return Err(SurrogateError::AngleCountMismatch(self.m, other.m));
        }
        let mut acc = CompensatedSum::default();
        let mut a = self.terms.iter().peekable();
        let mut b = other.terms.iter().peekable();
        loop {
            let (key, diff) = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some((ka, &ca)), None) => {
                    let k = *ka;
                    a.next();
                    (k, ca)
                }
                (None, Some((kb, &cb))) => {
                    let k = *kb;
                    b.next();
                    (k, -cb)
                }
                (Some((ka, &ca)), Some((kb, &cb))) => match ka.cmp(kb) {
                    std::cmp::Ordering::Less => {
                        let k = *ka;
                        a.next();
                        (k, ca)
                    }
                    std::cmp::Ordering::Greater => {
                        let k = *kb;
                        b.next();
                        (k, -cb)
                    }
                    std::cmp::Ordering::Equal => {
                        let k = *ka;
                        a.next();
                        b.next();
                        (k, ca - cb)
                    }
                },
            };
            acc.add(diff * diff * 0.5f64.powi(key.degree() as i32));
        }
        Ok(acc.value().max(0.0).sqrt())
    }
}

/// Size of each independently seeded θ block in [`empirical_l2`].
pub const THETA_BLOCK: usize = 4096;

/// Draws the `index`-th uniform angle vector in `[0, 2π)^m` for `seed`.
fn theta_block(m: usize, seed: u64, block: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    (0..count)
        .map(|_| (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
        .collect()
}

/// Seeded uniform angle vectors; block `b` comes from ChaCha8 stream `b`.
pub fn sample_angles(m: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let blocks = samples.div_ceil(THETA_BLOCK);
    (0..blocks)
        .flat_map(|b| {
            let count = THETA_BLOCK.min(samples - b * THETA_BLOCK);
            theta_block(m, seed, b as u64, count)
        })
        .collect()
}

/// Monte-Carlo estimate of the `L²` distance between `s` and `reference` over
/// `samples` uniform angle vectors, with a delta-method standard error.
///
/// Blocks of [`THETA_BLOCK`] samples are processed in parallel and reduced in
/// block order, so the result does not depend on the worker count.
pub fn empirical_l2<F>(
    s: &Surrogate,
    reference: F,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), SurrogateError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples < 2 {
        return Err(SurrogateError::Range {
            name: "samples",
            value: samples as f64,
            range: ">= 2",
        });
    }
    let m = s.num_angles();
    let blocks = samples.div_ceil(THETA_BLOCK);
    let partial: Vec<(CompensatedSum, CompensatedSum)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = THETA_BLOCK.min(samples - b * THETA_BLOCK);
            let mut sq = CompensatedSum::default();
            let mut quad = CompensatedSum::default();
            for theta in theta_block(m, seed, b as u64, count) {
                let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
                let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
                let d = s.evaluate_trig(&cos, &sin) - reference(&theta);
                sq.add(d * d);
                quad.add(d * d * d * d);
            }
            (sq, quad)
        })
        .collect();
    let mut sq = CompensatedSum::default();
    let mut quad = CompensatedSum::default();
    for (a, b) in &partial {
        sq.add(a.value());
        quad.add(b.value());
    }
    let n = samples as f64;
    let mean = sq.value() / n;
    let var = ((quad.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let se_mean = (var / n).sqrt();
    let estimate = mean.max(0.0).sqrt();
    let se = if estimate > 0.0 {
        se_mean / (2.0 * estimate)
    } else {
        se_mean.sqrt()
    };
    Ok((estimate, se))
}

/// `(1-γ_min)^{r/2}`; zero for an exact build.
pub fn certificate_bound(report: &BuildReport) -> Result<f64, SurrogateError> {
    match report.mode {
        BuildMode::MonteCarlo => return Err(SurrogateError::Mode(report.mode)),
        BuildMode::Deterministic | BuildMode::Exact => {}
    }
    let Some(r) = report.r_certificate else {
        return Ok(0.0);
    };
    let gamma = report.noise.min_gamma.ok_or(SurrogateError::NoFormalBound)?;
    if !report.noise.all_amplitude_damping {
        return Err(SurrogateError::NoFormalBound);
    }
    Ok(damping_certificate(gamma, r))
}

/// `(1-γ)^{r/2}`.
pub fn damping_certificate(gamma: f64, r: usize) -> f64 {
    (1.0 - gamma).powf(r as f64 / 2.0)
}

/// Per-split contraction of the sampled trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McNoise {
    /// Contraction `√(1-γ)` per split, i.e. `(1-γ)^{(ℓ+1)/2}` overall.
    AmplitudeDamping { gamma: f64 },
    /// `max_{P∈{X,Y}} |D_P|+|t_P|`.
    NormalForm { contraction: f64 },
}

impl McNoise {
    /// Amplitude damping at the weakest layer when every layer damps, else the
    /// largest X/Y contraction over all layers.
    pub fn of(summary: &NoiseSummary) -> Self {
        match (summary.all_amplitude_damping, summary.min_gamma) {
            (true, Some(gamma)) => McNoise::AmplitudeDamping { gamma },
            _ => McNoise::NormalForm {
                contraction: summary.max_xy_contraction,
            },
        }
    }
}

/// Reading of the Hoeffding constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoeffdingReading {
    /// `√(2 ln(2/δ)/K)`.
    TwoOverDelta,
    /// `√(2 ln(1/(2δ))/K)`.
    HalfInverseDelta,
}

pub fn mc_statistical_term(trees: usize, delta: f64, reading: HoeffdingReading) -> Result<f64, SurrogateError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SurrogateError::Range {
            name: "delta",
            value: delta,
            range: "(0, 1)",
        });
    }
    if trees == 0 {
        return Err(SurrogateError::Range {
            name: "trees",
            value: 0.0,
            range: ">= 1",
        });
    }
    let log = match reading {
        HoeffdingReading::TwoOverDelta => (2.0 / delta).ln(),
        HoeffdingReading::HalfInverseDelta => (0.5 / delta).ln().max(0.0),
    };
    Ok((2.0 * log / trees as f64).sqrt())
}

/// Truncation term plus the statistical term under the looser reading `ln(2/δ)`.
pub fn mc_bound(ell: usize, trees: usize, delta: f64, noise: McNoise) -> Result<f64, SurrogateError> {
    let stat = mc_statistical_term(trees, delta, HoeffdingReading::TwoOverDelta)?;
    Ok(mc_truncation_term(ell, noise)? + stat)
}

pub fn mc_truncation_term(ell: usize, noise: McNoise) -> Result<f64, SurrogateError> {
    let exponent = ell.saturating_add(1).min(i32::MAX as usize) as i32;
    match noise {
        McNoise::AmplitudeDamping { gamma } => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(SurrogateError::Range {
                    name: "gamma",
                    value: gamma,
                    range: "(0, 1]",
                });
            }
            Ok((1.0 - gamma).sqrt().powi(exponent))
        }
        McNoise::NormalForm { contraction } => {
            if !(0.0..=1.0).contains(&contraction) {
                return Err(SurrogateError::Range {
                    name: "contraction",
                    value: contraction,
                    range: "[0, 1]",
                });
            }
            Ok(contraction.powi(exponent))
        }
    }
}

// ---------------------------------------------------------------------------
// File format

/// Metadata block of a surrogate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateMeta {
    pub mode: BuildMode,
    pub ell: Option<usize>,
    #[serde(rename = "K")]
    pub trees: Option<usize>,
    pub seed: Option<u64>,
    pub r_certificate: Option<usize>,
    pub circuit_hash: String,
    pub observable: String,
    pub m: usize,
    pub gamma_or_channel_summary: String,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    key: MonomialKey,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct SurrogateRecord {
    meta: SurrogateMeta,
    terms: Vec<TermRecord>,
}

/// Canonical JSON: sorted object keys, terms in key order, shortest round-trip floats.
pub fn surrogate_to_json(s: &Surrogate, meta: &SurrogateMeta) -> String {
    let rec = SurrogateRecord {
        meta: meta.clone(),
        terms: s
            .terms()
            .map(|(k, c)| TermRecord {
                key: k.clone(),
                coeff: c,
            })
            .collect(),
    };
    let value = serde_json::to_value(&rec).expect("surrogate records always serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("json value always prints");
    text.push('\n');
    text
}

pub fn surrogate_from_json(text: &str) -> Result<(Surrogate, SurrogateMeta), crate::Error> {
    let rec: SurrogateRecord = serde_json::from_str(text)?;
    let terms = rec
        .terms
        .into_iter()
        .map(|t| (t.key, t.coeff));
    let s = Surrogate::from_terms(rec.meta.m, terms)?;
    Ok((s, rec.meta))
}
