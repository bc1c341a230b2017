//! Confidence measures on a token's chosen tag and the threshold rule that
//! accepts or rejects it.

use std::f64::consts::{E, LOG2_E};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{TagId, TokenPosterior};

/// Largest value of `-p log2 p` on `[0, 1]`, reached at `p = 1/e`.
pub const MAX_ENTROPY_CONTRIBUTION: f64 = LOG2_E / E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMeasure {
    /// Posterior probability `p` of the chosen tag.
    Probability,
    /// `-log2 p`.
    Surprisal,
    /// `-p log2 p`.
    EntropyContribution,
    /// `p` minus the runner-up's probability; 1 when there is no runner-up.
    Margin,
}

/// Which side of the threshold a value must fall on to be accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Accept iff value >= threshold.
    Lower,
    /// Accept iff value <= threshold.
    Upper,
}

impl ConfidenceMeasure {
    pub const ALL: [ConfidenceMeasure; 4] = [
        ConfidenceMeasure::Probability,
        ConfidenceMeasure::Surprisal,
        ConfidenceMeasure::EntropyContribution,
        ConfidenceMeasure::Margin,
    ];

    pub fn bound(self) -> Bound {
        match self {
            ConfidenceMeasure::Probability | ConfidenceMeasure::Margin => Bound::Lower,
            ConfidenceMeasure::Surprisal | ConfidenceMeasure::EntropyContribution => Bound::Upper,
        }
    }

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            ConfidenceMeasure::Probability => "prob",
            ConfidenceMeasure::Surprisal => "surprisal",
            ConfidenceMeasure::EntropyContribution => "pentropy",
            ConfidenceMeasure::Margin => "margin",
        }
    }

    /// Threshold range accepted by [`ThresholdPolicy::new`].
    pub fn threshold_range(self) -> (f64, f64) {
        match self {
            ConfidenceMeasure::Probability | ConfidenceMeasure::Margin => (0.0, 1.0),
            ConfidenceMeasure::Surprisal => (0.0, f64::INFINITY),
            ConfidenceMeasure::EntropyContribution => (0.0, MAX_ENTROPY_CONTRIBUTION),
        }
    }

    /// The threshold that accepts every token.
    pub fn accept_all_threshold(self) -> f64 {
        let (lo, hi) = self.threshold_range();
        match self.bound() {
            Bound::Lower => lo,
            Bound::Upper => hi,
        }
    }

    pub fn accepts(self, value: f64, threshold: f64) -> bool {
        match self.bound() {
            Bound::Lower => value >= threshold,
            Bound::Upper => value <= threshold,
        }
    }
}

impl fmt::Display for ConfidenceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConfidenceMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prob" | "probability" => Ok(ConfidenceMeasure::Probability),
            "surprisal" => Ok(ConfidenceMeasure::Surprisal),
            "pentropy" | "entropy" => Ok(ConfidenceMeasure::EntropyContribution),
            "margin" => Ok(ConfidenceMeasure::Margin),
            other => Err(Error::InvalidArgument(format!(
                "unknown measure {other:?} (expected prob, surprisal, pentropy or margin)"
            ))),
        }
    }
}

fn entropy_contribution(p: f64) -> f64 {
    (-p * p.log2()).min(MAX_ENTROPY_CONTRIBUTION)
}

/// Value of `measure` for the chosen tag of `posterior`.
pub fn measure_value(posterior: &TokenPosterior, measure: ConfidenceMeasure) -> Result<f64> {
    let p = posterior.chosen_probability();
    match measure {
        ConfidenceMeasure::Probability => Ok(p),
        ConfidenceMeasure::Margin => Ok(posterior.runner_up_probability().map_or(1.0, |r| p - r)),
        ConfidenceMeasure::Surprisal | ConfidenceMeasure::EntropyContribution if p <= 0.0 || p.is_nan() => {
            Err(Error::DegenerateHypothesis)
        }
        ConfidenceMeasure::Surprisal => Ok(if p >= 1.0 { 0.0 } else { -p.log2() }),
        ConfidenceMeasure::EntropyContribution => Ok(if p >= 1.0 { 0.0 } else { entropy_contribution(p) }),
    }
}

/// Maps a best-minus-second margin threshold onto the equivalent probability
/// threshold for two-hypothesis tokens.
pub fn margin_to_prob_threshold(margin: f64) -> f64 {
    (margin + 1.0) / 2.0
}

/// Thresholds may be infinite (an accept-all surprisal bound), which JSON
/// numbers cannot carry; those are written as the strings `"inf"`/`"-inf"`.
pub(crate) mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            ser.serialize_f64(*value)
        } else if *value > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        match Repr::deserialize(de)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    measure: ConfidenceMeasure,
    #[serde(with = "threshold_serde")]
    threshold: f64,
}

impl ThresholdPolicy {
    pub fn new(measure: ConfidenceMeasure, threshold: f64) -> Result<Self> {
        let (lo, hi) = measure.threshold_range();
        if threshold.is_nan() || threshold < lo || threshold > hi {
            return Err(Error::InvalidThreshold {
                measure: measure.name(),
                value: threshold,
            });
        }
        Ok(ThresholdPolicy { measure, threshold })
    }

    pub fn accept_all(measure: ConfidenceMeasure) -> Self {
        ThresholdPolicy {
            measure,
            threshold: measure.accept_all_threshold(),
        }
    }

    pub fn measure(&self) -> ConfidenceMeasure {
        self.measure
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn accepts(&self, value: f64) -> bool {
        self.measure.accepts(value, self.threshold)
    }

    pub fn decide(&self, index: usize, posterior: &TokenPosterior) -> Result<Decision> {
        let value = measure_value(posterior, self.measure)?;
        Ok(Decision {
            index,
            tag: posterior.chosen_tag(),
            value,
            accepted: posterior.is_single() || self.accepts(value),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub index: usize,
    pub tag: TagId,
    pub value: f64,
    pub accepted: bool,
}

/// Applies `policy` to every token. Single-hypothesis tokens are always
/// accepted.
pub fn apply_policy(posteriors: &[TokenPosterior], policy: &ThresholdPolicy) -> Result<Vec<Decision>> {
    posteriors
        .iter()
        .enumerate()
        .map(|(i, p)| policy.decide(i, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn post(scores: &[f64]) -> TokenPosterior {
        TokenPosterior::from_scores("w", scores.iter().enumerate().map(|(i, &s)| (TagId(i), s)).collect()).unwrap()
    }

    fn value(scores: &[f64], m: ConfidenceMeasure) -> f64 {
        measure_value(&post(scores), m).unwrap()
    }

    #[test]
    fn certainty() {
        for s in [&[1.0][..], &[1.0, 0.0]] {
            assert_eq!(value(s, ConfidenceMeasure::Probability), 1.0);
            assert_eq!(value(s, ConfidenceMeasure::Surprisal), 0.0);
            assert_eq!(value(s, ConfidenceMeasure::EntropyContribution), 0.0);
            assert_eq!(value(s, ConfidenceMeasure::Margin), 1.0);
        }
    }

    #[test]
    fn measure_values_at_paired_threshold() {
        let s = [0.629, 0.371];
        assert!((value(&s, ConfidenceMeasure::EntropyContribution) - 0.4207).abs() < 5e-5);
        assert!((value(&s, ConfidenceMeasure::Surprisal) - 0.6689).abs() < 5e-5);
        assert!((value(&[0.7, 0.3], ConfidenceMeasure::Margin) - 0.4).abs() < 1e-12);
        assert!((value(&[0.5, 0.2, 0.3], ConfidenceMeasure::Margin) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_hypothesis_is_rejected() {
        let p = TokenPosterior {
            word: "w".into(),
            hypotheses: vec![(TagId(0), 0.0), (TagId(1), 0.0)],
            chosen: 0,
        };
        assert!(matches!(
            measure_value(&p, ConfidenceMeasure::Surprisal),
            Err(Error::DegenerateHypothesis)
        ));
        assert!(matches!(
            measure_value(&p, ConfidenceMeasure::EntropyContribution),
            Err(Error::DegenerateHypothesis)
        ));
        assert_eq!(measure_value(&p, ConfidenceMeasure::Probability).unwrap(), 0.0);
    }

    #[test]
    fn margin_conversion() {
        assert_eq!(margin_to_prob_threshold(0.0), 0.5);
        assert_eq!(margin_to_prob_threshold(1.0), 1.0);
        assert!((margin_to_prob_threshold(0.258) - 0.629).abs() < 1e-12);
    }

    #[test]
    fn threshold_ranges() {
        assert!(ThresholdPolicy::new(ConfidenceMeasure::Probability, 1.2).is_err());
        assert!(ThresholdPolicy::new(ConfidenceMeasure::Margin, -0.1).is_err());
        assert!(ThresholdPolicy::new(ConfidenceMeasure::Surprisal, f64::INFINITY).is_ok());
        assert!(ThresholdPolicy::new(ConfidenceMeasure::EntropyContribution, 0.6).is_err());
        assert!(ThresholdPolicy::new(ConfidenceMeasure::Probability, f64::NAN).is_err());
    }

    #[test]
    fn inclusive_boundary_and_vacuous_threshold() {
        let tokens = vec![post(&[0.629, 0.371]), post(&[0.51, 0.49]), post(&[1.0])];
        let at = ThresholdPolicy::new(ConfidenceMeasure::Probability, 0.629).unwrap();
        let d = apply_policy(&tokens, &at).unwrap();
        assert!(d[0].accepted);
        assert!(!d[1].accepted);
        assert!(d[2].accepted);
        for m in ConfidenceMeasure::ALL {
            let all = apply_policy(&tokens, &ThresholdPolicy::accept_all(m)).unwrap();
            assert!(all.iter().all(|d| d.accepted), "{m}");
        }
    }

    #[test]
    fn single_hypothesis_always_accepted() {
        let strict = ThresholdPolicy::new(ConfidenceMeasure::Probability, 1.0).unwrap();
        let tok = TokenPosterior::from_scores("w", vec![(TagId(3), 0.2)]).unwrap();
        assert!(strict.decide(0, &tok).unwrap().accepted);
    }

    #[test]
    fn measure_names_parse() {
        for m in ConfidenceMeasure::ALL {
            assert_eq!(m.name().parse::<ConfidenceMeasure>().unwrap(), m);
        }
        assert!("bogus".parse::<ConfidenceMeasure>().is_err());
    }

    fn posterior_strategy() -> impl Strategy<Value = TokenPosterior> {
        prop::collection::vec(0.001f64..1.0, 1..5).prop_map(|s| post(&s))
    }

    proptest! {
        #[test]
        fn surprisal_matches_probability(tokens in prop::collection::vec(posterior_strategy(), 1..20), t in 0.001f64..1.0) {
            let p = apply_policy(&tokens, &ThresholdPolicy::new(ConfidenceMeasure::Probability, t).unwrap()).unwrap();
            let s = apply_policy(&tokens, &ThresholdPolicy::new(ConfidenceMeasure::Surprisal, -t.log2()).unwrap()).unwrap();
            for (a, b) in p.iter().zip(&s) {
                prop_assert_eq!(a.accepted, b.accepted);
            }
        }

        #[test]
        fn margin_matches_probability_on_pairs(a in 0.0f64..1.0, n in 0.0f64..1.0) {
            let tok = [post(&[a, 1.0 - a])];
            let m = apply_policy(&tok, &ThresholdPolicy::new(ConfidenceMeasure::Margin, n).unwrap()).unwrap();
            let p = apply_policy(&tok, &ThresholdPolicy::new(ConfidenceMeasure::Probability, margin_to_prob_threshold(n)).unwrap()).unwrap();
            prop_assert_eq!(m[0].accepted, p[0].accepted);
        }

        #[test]
        fn entropy_matches_probability_above_half(tokens in prop::collection::vec(posterior_strategy(), 1..20), t in 0.5f64..1.0) {
            let tokens: Vec<_> = tokens.into_iter().filter(|p| p.chosen_probability() >= 0.5).collect();
            let et = -t * t.log2();
            let p = apply_policy(&tokens, &ThresholdPolicy::new(ConfidenceMeasure::Probability, t).unwrap()).unwrap();
            let e = apply_policy(&tokens, &ThresholdPolicy::new(ConfidenceMeasure::EntropyContribution, et).unwrap()).unwrap();
            for (a, b) in p.iter().zip(&e) {
                prop_assert_eq!(a.accepted, b.accepted);
            }
        }

        #[test]
        fn rejection_sets_are_nested(tokens in prop::collection::vec(posterior_strategy(), 1..20), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let a = apply_policy(&tokens, &ThresholdPolicy::new(ConfidenceMeasure::Probability, lo).unwrap()).unwrap();
            let b = apply_policy(&tokens, &ThresholdPolicy::new(ConfidenceMeasure::Probability, hi).unwrap()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(x.accepted || !y.accepted);
            }
        }
    }
}
