//! Single-qubit channels in diagonal normal form.
//!
//! A channel is described by `t = (t_X, t_Y, t_Z)` and `D = (D_X, D_Y, D_Z)`;
//! its adjoint acts as `N†(P) = t_P I + D_P P` on each Pauli axis and fixes `I`.
//! In the Schrödinger picture the Bloch vector maps as `w -> t + diag(D) w`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::PauliAxis;

/// Tolerance for every validity comparison on channel parameters.
pub const CHANNEL_TOL: f64 = 1e-9;

/// Number of random directions used when checking the full normal-form constraint.
pub const CONSTRAINT_SAMPLES: usize = 256;

const CONSTRAINT_SEED: u64 = 0x6e6f_726d_616c_2d66;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{name} = {value} is outside {range}")]
    Parameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("mixture weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("mixture needs one weight per channel ({weights} weights, {channels} channels)")]
    WeightCount { weights: usize, channels: usize },
    #[error("mixture weight {0} is negative")]
    NegativeWeight(f64),
    #[error("channel {label} violates the normal-form constraints: {reason}")]
    Invalid { label: String, reason: String },
}

/// Serialized description of a channel. This is what circuit files store; the
/// numeric parameters are always rebuilt from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    AmplitudeDamping {
        gamma: f64,
    },
    Depolarizing {
        p: f64,
    },
    Dephasing {
        lambda: f64,
    },
    NormalForm {
        t: [f64; 3],
        #[serde(rename = "D")]
        d: [f64; 3],
    },
    Compose {
        first: Box<ChannelSpec>,
        second: Box<ChannelSpec>,
    },
    Mixture {
        weights: Vec<f64>,
        channels: Vec<ChannelSpec>,
    },
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::AmplitudeDamping { gamma } => write!(f, "AD({gamma})"),
            ChannelSpec::Depolarizing { p } => write!(f, "DEP({p})"),
            ChannelSpec::Dephasing { lambda } => write!(f, "DPH({lambda})"),
            ChannelSpec::NormalForm { t, d } => write!(f, "NF(t={t:?},D={d:?})"),
            ChannelSpec::Compose { first, second } => write!(f, "{second}∘{first}"),
            ChannelSpec::Mixture { weights, channels } => {
                write!(f, "mix(")?;
                for (i, (w, c)) in weights.iter().zip(channels).enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{w}·{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl ChannelSpec {
    pub fn build(&self) -> Result<NormalFormChannel, ChannelError> {
        match self {
            ChannelSpec::AmplitudeDamping { gamma } => amplitude_damping(*gamma),
            ChannelSpec::Depolarizing { p } => depolarizing(*p),
            ChannelSpec::Dephasing { lambda } => dephasing(*lambda),
            ChannelSpec::NormalForm { t, d } => NormalFormChannel::from_parameters(*t, *d),
            ChannelSpec::Compose { first, second } => Ok(compose(&first.build()?, &second.build()?)),
            ChannelSpec::Mixture { weights, channels } => {
                let built = channels
                    .iter()
                    .map(ChannelSpec::build)
                    .collect::<Result<Vec<_>, _>>()?;
                convex_combine(weights, &built)
            }
        }
    }
}

/// A single-qubit channel in normal form.
///
/// Equality compares the numeric parameters and the provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormChannel {
    pub t: [f64; 3],
    pub d: [f64; 3],
    spec: ChannelSpec,
}

fn axis_slot(axis: PauliAxis) -> Option<usize> {
    match axis {
        PauliAxis::I => None,
        PauliAxis::X => Some(0),
        PauliAxis::Y => Some(1),
        PauliAxis::Z => Some(2),
    }
}

const XYZ: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

impl NormalFormChannel {
    /// Explicit `(t, D)`; rejected unless [`validate`] passes.
    pub fn from_parameters(t: [f64; 3], d: [f64; 3]) -> Result<Self, ChannelError> {
        let c = Self {
            t,
            d,
            spec: ChannelSpec::NormalForm { t, d },
        };
        let report = validate(&c);
        if !report.valid() {
            return Err(ChannelError::Invalid {
                label: c.label(),
                reason: report.failure_reason(),
            });
        }
        Ok(c)
    }

    pub fn identity() -> Self {
        Self {
            t: [0.0; 3],
            d: [1.0; 3],
            spec: ChannelSpec::NormalForm {
                t: [0.0; 3],
                d: [1.0; 3],
            },
        }
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        self.spec.to_string()
    }

    pub fn t_of(&self, axis: PauliAxis) -> f64 {
        axis_slot(axis).map_or(0.0, |i| self.t[i])
    }

    pub fn d_of(&self, axis: PauliAxis) -> f64 {
        axis_slot(axis).map_or(1.0, |i| self.d[i])
    }

    /// `|D_P| + |t_P|`, the per-axis weight that bounds the sampled-tree contraction.
    pub fn axis_weight(&self, axis: PauliAxis) -> f64 {
        self.d_of(axis).abs() + self.t_of(axis).abs()
    }

    /// `max(|D_X|+|t_X|, |D_Y|+|t_Y|)`.
    pub fn xy_contraction(&self) -> f64 {
        self.axis_weight(PauliAxis::X).max(self.axis_weight(PauliAxis::Y))
    }

    /// Same numbers (ignores provenance).
    pub fn same_parameters(&self, other: &Self) -> bool {
        self.t == other.t && self.d == other.d
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (0..3).all(|i| (self.t[i] - other.t[i]).abs() <= tol && (self.d[i] - other.d[i]).abs() <= tol)
    }

    /// `Some(gamma)` when the parameters are those of an amplitude-damping channel.
    pub fn as_amplitude_damping(&self) -> Option<f64> {
        let gamma = self.t[2];
        if !(gamma > CHANNEL_TOL && gamma <= 1.0 + CHANNEL_TOL) {
            return None;
        }
        let g = gamma.min(1.0);
        let sq = (1.0 - g).sqrt();
        let close = |a: f64, b: f64| (a - b).abs() <= CHANNEL_TOL;
        let ok = close(self.t[0], 0.0)
            && close(self.t[1], 0.0)
            && close(self.d[0], sq)
            && close(self.d[1], sq)
            && close(self.d[2], 1.0 - g);
        ok.then_some(g)
    }

    /// Schrödinger-picture 4×4 PTM in the `(I, X, Y, Z)` basis.
    pub fn ptm(&self) -> [[f64; 4]; 4] {
        [
            [1.0, 0.0, 0.0, 0.0],
            [self.t[0], self.d[0], 0.0, 0.0],
            [self.t[1], 0.0, self.d[1], 0.0],
            [self.t[2], 0.0, 0.0, self.d[2]],
        ]
    }
}

impl fmt::Display for NormalFormChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl Serialize for NormalFormChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormalFormChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ChannelSpec::deserialize(d)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}

fn check_unit(name: &'static str, value: f64, lower_open: bool) -> Result<(), ChannelError> {
    let ok = if lower_open {
        value > 0.0 && value <= 1.0
    } else {
        (0.0..=1.0).contains(&value)
    };
    if ok {
        Ok(())
    } else {
        Err(ChannelError::Parameter {
            name,
            value,
            range: if lower_open { "(0, 1]" } else { "[0, 1]" },
        })
    }
}

/// Amplitude damping towards `|0>` with strength `gamma ∈ (0, 1]`.
pub fn amplitude_damping(gamma: f64) -> Result<NormalFormChannel, ChannelError> {
    check_unit("gamma", gamma, true)?;
    let sq = (1.0 - gamma).sqrt();
    Ok(NormalFormChannel {
        t: [0.0, 0.0, gamma],
        d: [sq, sq, 1.0 - gamma],
        spec: ChannelSpec::AmplitudeDamping { gamma },
    })
}

pub fn depolarizing(p: f64) -> Result<NormalFormChannel, ChannelError> {
    check_unit("p", p, false)?;
    Ok(NormalFormChannel {
        t: [0.0; 3],
        d: [1.0 - p; 3],
        spec: ChannelSpec::Depolarizing { p },
    })
}

/// Z-dephasing parameterised by the transverse damping: `D_X = D_Y = 1 - lambda`.
pub fn dephasing(lambda: f64) -> Result<NormalFormChannel, ChannelError> {
    check_unit("lambda", lambda, false)?;
    Ok(NormalFormChannel {
        t: [0.0; 3],
        d: [1.0 - lambda, 1.0 - lambda, 1.0],
        spec: ChannelSpec::Dephasing { lambda },
    })
}

/// `second ∘ first`: `first` acts on the state, then `second`.
///
/// Adjoint order gives `D = D1·D2` and `t = t2 + D2·t1` per axis.
pub fn compose(first: &NormalFormChannel, second: &NormalFormChannel) -> NormalFormChannel {
    let mut t = [0.0; 3];
    let mut d = [0.0; 3];
    for i in 0..3 {
        d[i] = first.d[i] * second.d[i];
        t[i] = second.t[i] + second.d[i] * first.t[i];
    }
    NormalFormChannel {
        t,
        d,
        spec: ChannelSpec::Compose {
            first: Box::new(first.spec.clone()),
            second: Box::new(second.spec.clone()),
        },
    }
}

pub fn convex_combine(
    weights: &[f64],
    channels: &[NormalFormChannel],
) -> Result<NormalFormChannel, ChannelError> {
    if weights.len() != channels.len() || weights.is_empty() {
        return Err(ChannelError::WeightCount {
            weights: weights.len(),
            channels: channels.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|&&w| w < 0.0) {
        return Err(ChannelError::NegativeWeight(w));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > CHANNEL_TOL {
        return Err(ChannelError::WeightSum { sum });
    }
    let mut t = [0.0; 3];
    let mut d = [0.0; 3];
    for (w, c) in weights.iter().zip(channels) {
        for i in 0..3 {
            t[i] += w * c.t[i];
            d[i] += w * c.d[i];
        }
    }
    Ok(NormalFormChannel {
        t,
        d,
        spec: ChannelSpec::Mixture {
            weights: weights.to_vec(),
            channels: channels.iter().map(|c| c.spec.clone()).collect(),
        },
    })
}

/// `N†(axis) = identity_coeff · I + same_axis_coeff · axis`.
/// For `I` the pair is `(1, 1)`, both entries standing for the single term `1·I`.
pub fn adjoint_action(c: &NormalFormChannel, axis: PauliAxis) -> (f64, f64) {
    match axis_slot(axis) {
        None => (1.0, 1.0),
        Some(i) => (c.t[i], c.d[i]),
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    /// `|D_P| + |t_P|` for `P = X, Y, Z`.
    pub axis_sums: [f64; 3],
    pub axis_ok: [bool; 3],
    /// Axes with `|D_P| + |t_P| = 1` within tolerance.
    pub saturated: Vec<PauliAxis>,
    /// Saturated axes with `t_P != 0`.
    pub nonunital_saturated: Vec<PauliAxis>,
    pub saturation_ok: bool,
    /// Largest value of `Σ b_P² |D_P| + Σ |b_P t_P|` over the probed unit vectors.
    pub constraint_max: f64,
    pub constraint_ok: bool,
    /// The non-unital saturating axis, if there is one.
    pub saturating_axis: Option<PauliAxis>,
}

impl ValidityReport {
    pub fn valid(&self) -> bool {
        self.axis_ok.iter().all(|&b| b) && self.saturation_ok && self.constraint_ok
    }

    /// Usable by the backpropagation engines: valid, and neither X nor Y
    /// saturates with a non-zero shift.
    pub fn engine_admissible(&self) -> bool {
        self.valid() && matches!(self.saturating_axis, None | Some(PauliAxis::Z))
    }

    pub fn failure_reason(&self) -> String {
        let mut reasons = Vec::new();
        for (i, ok) in self.axis_ok.iter().enumerate() {
            if !ok {
                reasons.push(format!(
                    "|D_{a}|+|t_{a}| = {} > 1",
                    self.axis_sums[i],
                    a = XYZ[i]
                ));
            }
        }
        if !self.saturation_ok {
            reasons.push(format!(
                "{} saturated axes including a non-unital one",
                self.saturated.len()
            ));
        }
        if !self.constraint_ok {
            reasons.push(format!("constraint reaches {}", self.constraint_max));
        }
        if self.valid() && !self.engine_admissible() {
            reasons.push(format!(
                "non-unital saturation on axis {}",
                self.saturating_axis.map_or('?', PauliAxis::letter)
            ));
        }
        if reasons.is_empty() {
            "none".to_string()
        } else {
            reasons.join("; ")
        }
    }
}

fn constraint_value(c: &NormalFormChannel, b: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| b[i] * b[i] * c.d[i].abs() + (b[i] * c.t[i]).abs())
        .sum()
}

/// Checks the normal-form constraints: per-axis bounds, the saturation rule,
/// and `Σ b_P² |D_P| + Σ |b_P t_P| <= 1` on the three axes plus
/// [`CONSTRAINT_SAMPLES`] seeded random unit vectors.
///
/// Saturations with `t_P = 0` (the identity, pure dephasing) are unital and
/// do not count against the at-most-one rule.
pub fn validate(c: &NormalFormChannel) -> ValidityReport {
    let mut axis_sums = [0.0; 3];
    let mut axis_ok = [false; 3];
    let mut saturated = Vec::new();
    let mut nonunital_saturated = Vec::new();
    for (i, &axis) in XYZ.iter().enumerate() {
        let s = c.d[i].abs() + c.t[i].abs();
        axis_sums[i] = s;
        axis_ok[i] = s <= 1.0 + CHANNEL_TOL && s.is_finite();
        if (1.0 - s).abs() <= CHANNEL_TOL {
            saturated.push(axis);
            if c.t[i].abs() > CHANNEL_TOL {
                nonunital_saturated.push(axis);
            }
        }
    }
    let saturation_ok = saturated.len() <= 1 || nonunital_saturated.is_empty();

    let mut rng = ChaCha8Rng::seed_from_u64(CONSTRAINT_SEED);
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut constraint_max = axes
        .iter()
        .map(|&b| constraint_value(c, b))
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..CONSTRAINT_SAMPLES {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        let b = [r * phi.cos(), r * phi.sin(), z];
        constraint_max = constraint_max.max(constraint_value(c, b));
    }
    let constraint_ok = constraint_max <= 1.0 + CHANNEL_TOL;

    let saturating_axis = nonunital_saturated.first().copied();
    ValidityReport {
        axis_sums,
        axis_ok,
        saturated,
        nonunital_saturated,
        saturation_ok,
        constraint_max,
        constraint_ok,
        saturating_axis,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn amplitude_damping_parameters() {
        let c = amplitude_damping(0.19).unwrap();
        assert!(close(c.d[0], 0.9) && close(c.d[1], 0.9) && close(c.d[2], 0.81));
        assert_eq!(c.t, [0.0, 0.0, 0.19]);
        assert!(close(c.axis_weight(PauliAxis::Z), 1.0));
        assert!(close(c.axis_weight(PauliAxis::X), 0.9));

        let full = amplitude_damping(1.0).unwrap();
        assert_eq!(full.d, [0.0, 0.0, 0.0]);
        assert_eq!(full.t, [0.0, 0.0, 1.0]);

        assert!(amplitude_damping(0.0).is_err());
        assert!(amplitude_damping(1.2).is_err());
        assert!(amplitude_damping(f64::NAN).is_err());
    }

    #[test]
    fn depolarizing_and_dephasing() {
        assert_eq!(depolarizing(0.0).unwrap().d, [1.0; 3]);
        assert_eq!(depolarizing(1.0).unwrap().d, [0.0; 3]);
        assert!(close(depolarizing(0.2).unwrap().d[0], 0.8));
        assert_eq!(dephasing(0.0).unwrap().d, [1.0; 3]);
        assert_eq!(dephasing(1.0).unwrap().d, [0.0, 0.0, 1.0]);
        assert_eq!(dephasing(0.5).unwrap().d, [0.5, 0.5, 1.0]);
        assert!(depolarizing(-0.1).is_err());
        assert!(dephasing(1.5).is_err());
    }

    #[test]
    fn adjoint_action_examples() {
        let ad = amplitude_damping(0.19).unwrap();
        let (i, z) = adjoint_action(&ad, PauliAxis::Z);
        assert!(close(i, 0.19) && close(z, 0.81));
        assert_eq!(adjoint_action(&ad, PauliAxis::I), (1.0, 1.0));
        assert_eq!(adjoint_action(&dephasing(0.5).unwrap(), PauliAxis::X), (0.0, 0.5));
    }

    #[test]
    fn compose_with_identity_is_neutral() {
        let c = compose(&amplitude_damping(0.3).unwrap(), &dephasing(0.1).unwrap());
        let id = NormalFormChannel::identity();
        assert!(compose(&id, &c).same_parameters(&c));
        assert!(compose(&c, &id).same_parameters(&c));
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let a = amplitude_damping(0.2).unwrap();
        let b = NormalFormChannel::identity();
        assert!(matches!(
            convex_combine(&[0.7, 0.4], &[a.clone(), b.clone()]),
            Err(ChannelError::WeightSum { .. })
        ));
        assert!(convex_combine(&[1.0], &[a.clone(), b.clone()]).is_err());
        assert!(convex_combine(&[1.2, -0.2], &[a.clone(), b]).is_err());
        assert!(convex_combine(&[1.0], std::slice::from_ref(&a)).unwrap().same_parameters(&a));
    }

    #[test]
    fn validate_examples() {
        let r = validate(&amplitude_damping(0.3).unwrap());
        assert!(r.valid() && r.engine_admissible());
        assert_eq!(r.saturating_axis, Some(PauliAxis::Z));

        let bad = NormalFormChannel {
            t: [0.5, 0.0, 0.9],
            d: [0.6, 0.0, 0.2],
            spec: ChannelSpec::NormalForm {
                t: [0.5, 0.0, 0.9],
                d: [0.6, 0.0, 0.2],
            },
        };
        let r = validate(&bad);
        assert!(!r.axis_ok[0]);
        assert!(close(r.axis_sums[0], 1.1));
        assert!(!r.valid());

        let r = validate(&NormalFormChannel::identity());
        assert_eq!(r.saturated.len(), 3);
        assert!(r.nonunital_saturated.is_empty());
        assert!(r.valid() && r.engine_admissible());
        assert_eq!(r.saturating_axis, None);
    }

    #[test]
    fn two_nonunital_saturations_fail() {
        // X saturates with t_X != 0 and Z saturates too
        let err = NormalFormChannel::from_parameters([0.5, 0.0, 0.0], [0.5, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, ChannelError::Invalid { .. }));
    }

    #[test]
    fn x_saturation_is_not_admissible() {
        // reset to |+>: t_X = 1, D = 0
        let c = NormalFormChannel::from_parameters([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]).unwrap();
        let r = validate(&c);
        assert!(r.valid());
        assert!(!r.engine_admissible());
        assert_eq!(r.saturating_axis, Some(PauliAxis::X));
    }

    #[test]
    fn full_constraint_catches_diagonal_violations() {
        // every axis passes alone (0.98) but b = (1,1,0)/√2 gives 0.8 + 0.18·√2 > 1
        let c = NormalFormChannel {
            t: [0.18, 0.18, 0.0],
            d: [0.8, 0.8, 0.0],
            spec: ChannelSpec::NormalForm {
                t: [0.18, 0.18, 0.0],
                d: [0.8, 0.8, 0.0],
            },
        };
        let r = validate(&c);
        assert!(r.axis_ok.iter().all(|&b| b));
        assert!(r.saturated.is_empty());
        assert!(!r.constraint_ok);
    }

    #[test]
    fn amplitude_damping_detection() {
        let a = amplitude_damping(0.2).unwrap();
        let b = amplitude_damping(0.3).unwrap();
        let g = compose(&a, &b).as_amplitude_damping().unwrap();
        assert!((g - (1.0 - 0.8 * 0.7)).abs() < 1e-12);
        assert_eq!(depolarizing(0.1).unwrap().as_amplitude_damping(), None);
        assert_eq!(NormalFormChannel::identity().as_amplitude_damping(), None);
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = ChannelSpec::Compose {
            first: Box::new(ChannelSpec::AmplitudeDamping { gamma: 0.1 }),
            second: Box::new(ChannelSpec::Dephasing { lambda: 0.2 }),
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            text,
            r#"{"type":"compose","first":{"type":"amplitude_damping","gamma":0.1},"second":{"type":"dephasing","lambda":0.2}}"#
        );
        let c: NormalFormChannel = serde_json::from_str(&text).unwrap();
        assert_eq!(c.spec(), &spec);
        let nf: NormalFormChannel =
            serde_json::from_str(r#"{"type":"normal_form","t":[0,0,0.2],"D":[0.8,0.8,0.8]}"#).unwrap();
        assert_eq!(nf.d, [0.8, 0.8, 0.8]);
        assert!(serde_json::from_str::<NormalFormChannel>(r#"{"type":"amplitude_damping","gamma":2}"#).is_err());
    }
}
