//! Empirical distributions of confidence values for correct and incorrect
//! chosen tags, and threshold selection against a target accuracy.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::{measure_value, Bound, ConfidenceMeasure};
use crate::corpus::TaggedCorpus;
use crate::error::{Error, Result};
use crate::evaluation::{accuracy_ignore, accuracy_oracle, efficiency, percent};
use crate::hmm::{forward_backward, HmmModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub value: f64,
    pub correct: bool,
}

/// Confidence values of the chosen tag on every ambiguous token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub measure: ConfidenceMeasure,
    pub observations: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(measure: ConfidenceMeasure, observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::NoAmbiguousTokens);
        }
        if let Some(o) = observations.iter().find(|o| !o.value.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite observation {}", o.value)));
        }
        Ok(ObservationSet { measure, observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn correct_count(&self) -> usize {
        self.observations.iter().filter(|o| o.correct).count()
    }

    /// Proportion of observations whose chosen tag was correct.
    pub fn s(&self) -> f64 {
        self.correct_count() as f64 / self.observations.len() as f64
    }
}

/// Decodes `tagged` and records `(value, chosen == gold)` for each ambiguous
/// token.
pub fn collect_observations(
    model: &HmmModel,
    tagged: &TaggedCorpus,
    measure: ConfidenceMeasure,
) -> Result<ObservationSet> {
    let mut observations = Vec::new();
    for (s, sentence) in tagged.sentences().iter().enumerate() {
        let words: Vec<&str> = sentence.iter().map(|t| t.word.as_str()).collect();
        let posteriors = forward_backward(model, &words).map_err(|e| e.in_sentence(s))?;
        for (tok, post) in sentence.iter().zip(&posteriors) {
            if !model.is_ambiguous(&tok.word) {
                continue;
            }
            let value = measure_value(post, measure).map_err(|e| e.in_sentence(s))?;
            let correct = model.tagset().id(&tok.tag) == Some(post.chosen_tag());
            observations.push(Observation { value, correct });
        }
    }
    ObservationSet::new(measure, observations)
}

/// Step function over sorted distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    values: Vec<f64>,
    /// `cumulative[k]` = number of samples <= `values[k]`.
    cumulative: Vec<u64>,
}

impl StepCdf {
    fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        let mut cumulative: Vec<u64> = Vec::new();
        for (k, v) in samples.iter().enumerate() {
            if values.last() == Some(v) {
                *cumulative.last_mut().unwrap() = k as u64 + 1;
            } else {
                values.push(*v);
                cumulative.push(k as u64 + 1);
            }
        }
        StepCdf { values, cumulative }
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count_at_or_below(&self, x: f64) -> u64 {
        let k = self.values.partition_point(|v| *v <= x);
        if k == 0 {
            0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn count_below(&self, x: f64) -> u64 {
        let k = self.values.partition_point(|v| *v < x);
        if k == 0 {
            0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn count_above(&self, x: f64) -> u64 {
        self.total() - self.count_at_or_below(x)
    }

    pub fn fraction_at_or_below(&self, x: f64) -> f64 {
        self.count_at_or_below(x) as f64 / self.total() as f64
    }
}

/// Empirical CDFs of the correct and incorrect subpopulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub measure: ConfidenceMeasure,
    pub correct: StepCdf,
    pub incorrect: StepCdf,
}

pub fn build_cdfs(obs: &ObservationSet) -> Result<EmpiricalCdf> {
    let (correct, incorrect): (Vec<&Observation>, Vec<&Observation>) = obs.observations.iter().partition(|o| o.correct);
    if correct.is_empty() {
        return Err(Error::EmptySubpopulation("correct"));
    }
    if incorrect.is_empty() {
        return Err(Error::EmptySubpopulation("incorrect"));
    }
    Ok(EmpiricalCdf {
        measure: obs.measure,
        correct: StepCdf::from_samples(correct.iter().map(|o| o.value).collect()),
        incorrect: StepCdf::from_samples(incorrect.iter().map(|o| o.value).collect()),
    })
}

impl EmpiricalCdf {
    pub fn s(&self) -> f64 {
        let c = self.correct.total();
        c as f64 / (c + self.incorrect.total()) as f64
    }

    /// Fractions `(c, i)` of correct and incorrect observations rejected at
    /// `threshold`. Rejection is strict: a value equal to the threshold is
    /// kept.
    pub fn rejected_fractions(&self, threshold: f64) -> (f64, f64) {
        let (rc, ri) = match self.measure.bound() {
            Bound::Lower => (
                self.correct.count_below(threshold),
                self.incorrect.count_below(threshold),
            ),
            Bound::Upper => (
                self.correct.count_above(threshold),
                self.incorrect.count_above(threshold),
            ),
        };
        (
            rc as f64 / self.correct.total() as f64,
            ri as f64 / self.incorrect.total() as f64,
        )
    }

    /// Distinct observed values from both subpopulations, ascending.
    fn distinct_values(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .correct
            .values
            .iter()
            .chain(&self.incorrect.values)
            .copied()
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Rejected tokens are resolved correctly by an oracle.
    #[default]
    Oracle,
    /// Rejected tokens are left out of the accuracy.
    Ignore,
}

impl AccuracyMode {
    pub fn name(self) -> &'static str {
        match self {
            AccuracyMode::Oracle => "oracle",
            AccuracyMode::Ignore => "ignore",
        }
    }
}

impl fmt::Display for AccuracyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AccuracyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(AccuracyMode::Oracle),
            "ignore" => Ok(AccuracyMode::Ignore),
            other => Err(Error::InvalidArgument(format!(
                "unknown accuracy mode {other:?} (expected oracle or ignore)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub measure: ConfidenceMeasure,
    pub mode: AccuracyMode,
    pub target: f64,
    pub s: f64,
    #[serde(with = "crate::confidence::threshold_serde")]
    pub threshold: f64,
    pub predicted_c: f64,
    pub predicted_i: f64,
    pub predicted_accuracy: f64,
    pub predicted_efficiency: f64,
}

impl CalibrationResult {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "measure\tmode\ttarget (%)\tthreshold\tefficiency (%)\taccuracy (%)\tc\ti"
        );
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.measure,
            self.mode,
            percent(self.target, 2),
            self.threshold,
            percent(self.predicted_efficiency, 1),
            percent(self.predicted_accuracy, 2),
            self.predicted_c,
            self.predicted_i
        );
        out
    }
}

fn predicted_accuracy(mode: AccuracyMode, s: f64, c: f64, i: f64) -> Option<f64> {
    match mode {
        AccuracyMode::Oracle => Some(accuracy_oracle(s, i)),
        AccuracyMode::Ignore => accuracy_ignore(s, c, i).ok(),
    }
}

/// Picks the threshold with the highest predicted efficiency whose predicted
/// accuracy reaches `target`.
///
/// Candidates are the accept-all threshold followed by every observed value,
/// ordered from least to most rejecting. Ties on efficiency go to the higher
/// accuracy, then to the earlier candidate.
pub fn calibrate_threshold(
    cdfs: &EmpiricalCdf,
    s: f64,
    target: f64,
    mode: AccuracyMode,
    measure: ConfidenceMeasure,
) -> Result<CalibrationResult> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidArgument(format!("target {target} not in (0, 1]")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s = {s} not in (0, 1)")));
    }
    if measure != cdfs.measure {
        return Err(Error::InvalidArgument(format!(
            "distributions were collected for {}, not {measure}",
            cdfs.measure
        )));
    }
    let mut values = cdfs.distinct_values();
    if measure.bound() == Bound::Upper {
        values.reverse();
    }
    let candidates = std::iter::once((measure.accept_all_threshold(), (0.0, 0.0)))
        .chain(values.into_iter().map(|t| (t, cdfs.rejected_fractions(t))));

    let mut best: Option<CalibrationResult> = None;
    for (threshold, (c, i)) in candidates {
        let Some(accuracy) = predicted_accuracy(mode, s, c, i) else {
            continue;
        };
        if accuracy < target {
            continue;
        }
        let eff = efficiency(s, c, i);
        let better = match &best {
            None => true,
            Some(b) => {
                eff > b.predicted_efficiency || (eff == b.predicted_efficiency && accuracy > b.predicted_accuracy)
            }
        };
        if better {
            best = Some(CalibrationResult {
                measure,
                mode,
                target,
                s,
                threshold,
                predicted_c: c,
                predicted_i: i,
                predicted_accuracy: accuracy,
                predicted_efficiency: eff,
            });
        }
    }
    best.ok_or(Error::TargetUnachievable { target })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub value: f64,
    pub cum_count_correct: u64,
    pub cum_count_incorrect: u64,
    pub cum_frac_correct: f64,
    pub cum_frac_incorrect: f64,
}

/// Cumulative counts and fractions of both subpopulations at every distinct
/// observed value.
pub fn emit_curves(cdfs: &EmpiricalCdf) -> Vec<CurveRow> {
    cdfs.distinct_values()
        .into_iter()
        .map(|value| {
            let cc = cdfs.correct.count_at_or_below(value);
            let ci = cdfs.incorrect.count_at_or_below(value);
            CurveRow {
                value,
                cum_count_correct: cc,
                cum_count_incorrect: ci,
                cum_frac_correct: cc as f64 / cdfs.correct.total() as f64,
                cum_frac_incorrect: ci as f64 / cdfs.incorrect.total() as f64,
            }
        })
        .collect()
}

pub const CURVE_COLUMNS: [&str; 5] = [
    "value",
    "cum_count_correct",
    "cum_count_incorrect",
    "cum_frac_correct",
    "cum_frac_incorrect",
];

pub fn curves_tsv(rows: &[CurveRow]) -> String {
    let mut out = CURVE_COLUMNS.join("\t");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.value, r.cum_count_correct, r.cum_count_incorrect, r.cum_frac_correct, r.cum_frac_incorrect
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(items: &[(f64, bool)]) -> ObservationSet {
        ObservationSet::new(
            ConfidenceMeasure::Probability,
            items
                .iter()
                .map(|&(value, correct)| Observation { value, correct })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn three_observation_cdfs() {
        let cdfs = build_cdfs(&obs(&[(0.9, true), (0.8, true), (0.3, false)])).unwrap();
        assert_eq!(cdfs.correct.fraction_at_or_below(0.79), 0.0);
        assert_eq!(cdfs.correct.fraction_at_or_below(0.8), 0.5);
        assert_eq!(cdfs.correct.fraction_at_or_below(0.85), 0.5);
        assert_eq!(cdfs.correct.fraction_at_or_below(0.9), 1.0);
        assert_eq!(cdfs.incorrect.fraction_at_or_below(0.29), 0.0);
        assert_eq!(cdfs.incorrect.fraction_at_or_below(0.3), 1.0);
        assert_eq!(cdfs.correct.fraction_at_or_below(f64::INFINITY), 1.0);
        assert_eq!(cdfs.incorrect.fraction_at_or_below(f64::INFINITY), 1.0);

        let rows = emit_curves(&cdfs);
        let expect = [(0.3, 0, 1, 0.0, 1.0), (0.8, 1, 1, 0.5, 1.0), (0.9, 2, 1, 1.0, 1.0)];
        assert_eq!(rows.len(), 3);
        for (r, e) in rows.iter().zip(expect) {
            assert_eq!(
                (
                    r.value,
                    r.cum_count_correct,
                    r.cum_count_incorrect,
                    r.cum_frac_correct,
                    r.cum_frac_incorrect
                ),
                e
            );
        }
        let tsv = curves_tsv(&rows);
        assert_eq!(
            tsv,
            "value\tcum_count_correct\tcum_count_incorrect\tcum_frac_correct\tcum_frac_incorrect\n\
             0.3\t0\t1\t0\t1\n0.8\t1\t1\t0.5\t1\n0.9\t2\t1\t1\t1\n"
        );
    }

    #[test]
    fn identical_values_give_single_steps() {
        let cdfs = build_cdfs(&obs(&[(0.6, true), (0.6, false), (0.6, true)])).unwrap();
        assert_eq!(cdfs.correct.values(), &[0.6]);
        assert_eq!(cdfs.incorrect.values(), &[0.6]);
        assert_eq!(cdfs.correct.fraction_at_or_below(0.59), 0.0);
        assert_eq!(cdfs.incorrect.fraction_at_or_below(0.6), 1.0);
    }

    #[test]
    fn empty_subpopulations_are_named() {
        assert!(matches!(
            build_cdfs(&obs(&[(0.9, true)])),
            Err(Error::EmptySubpopulation("incorrect"))
        ));
        assert!(matches!(
            build_cdfs(&obs(&[(0.9, false)])),
            Err(Error::EmptySubpopulation("correct"))
        ));
        assert!(matches!(
            ObservationSet::new(ConfidenceMeasure::Probability, vec![]),
            Err(Error::NoAmbiguousTokens)
        ));
    }

    #[test]
    fn target_below_s_accepts_everything() {
        let o = obs(&[(0.9, true), (0.8, true), (0.3, false), (0.95, true)]);
        let cdfs = build_cdfs(&o).unwrap();
        let r = calibrate_threshold(
            &cdfs,
            o.s(),
            o.s(),
            AccuracyMode::Oracle,
            ConfidenceMeasure::Probability,
        )
        .unwrap();
        assert_eq!(r.threshold, 0.0);
        assert_eq!((r.predicted_c, r.predicted_i), (0.0, 0.0));
        assert_eq!(r.predicted_efficiency, 1.0);
        assert_eq!(r.predicted_accuracy, o.s());
    }

    #[test]
    fn picks_most_efficient_feasible_threshold() {
        let o = obs(&[(0.9, true), (0.8, true), (0.3, false), (0.5, false), (0.7, true)]);
        let cdfs = build_cdfs(&o).unwrap();
        let r = calibrate_threshold(&cdfs, o.s(), 0.99, AccuracyMode::Oracle, ConfidenceMeasure::Probability).unwrap();
        // rejecting 0.3 and 0.5 catches every error while keeping all correct tags
        assert_eq!(r.threshold, 0.7);
        assert_eq!((r.predicted_c, r.predicted_i), (0.0, 1.0));
        assert_eq!(r.predicted_accuracy, 1.0);
        assert!((r.predicted_efficiency - 0.6).abs() < 1e-15);
    }

    #[test]
    fn upper_bounded_measures_reject_above() {
        let o = ObservationSet::new(
            ConfidenceMeasure::Surprisal,
            vec![
                Observation {
                    value: 0.1,
                    correct: true,
                },
                Observation {
                    value: 0.2,
                    correct: true,
                },
                Observation {
                    value: 1.5,
                    correct: false,
                },
            ],
        )
        .unwrap();
        let cdfs = build_cdfs(&o).unwrap();
        let r = calibrate_threshold(&cdfs, o.s(), 1.0, AccuracyMode::Oracle, ConfidenceMeasure::Surprisal).unwrap();
        assert_eq!(r.threshold, 0.2);
        assert_eq!(r.predicted_i, 1.0);
        let all = calibrate_threshold(&cdfs, o.s(), 0.5, AccuracyMode::Oracle, ConfidenceMeasure::Surprisal).unwrap();
        assert_eq!(all.threshold, f64::INFINITY);
    }

    #[test]
    fn unreachable_ignore_target() {
        // the highest value is an error, so no threshold removes every error.
        let o = obs(&[(0.4, true), (0.9, false), (0.6, true)]);
        let cdfs = build_cdfs(&o).unwrap();
        let err =
            calibrate_threshold(&cdfs, o.s(), 0.99, AccuracyMode::Ignore, ConfidenceMeasure::Probability).unwrap_err();
        assert!(matches!(err, Error::TargetUnachievable { .. }));
        assert!(calibrate_threshold(&cdfs, o.s(), 1.5, AccuracyMode::Oracle, ConfidenceMeasure::Probability).is_err());
        assert!(calibrate_threshold(&cdfs, o.s(), 0.9, AccuracyMode::Oracle, ConfidenceMeasure::Margin).is_err());
    }

    #[test]
    fn tabulated_operating_point() {
        // 10000 observations built so that the optimum rejects 3.09% of correct
        // and 31.88% of the incorrect tags with s = 0.9266.
        let n_correct = 9266;
        let n_incorrect = 734;
        let rej_c = (0.0309f64 * n_correct as f64).round() as usize; // 286
        let rej_i = (0.3188f64 * n_incorrect as f64).round() as usize; // 234
        let mut items = Vec::new();
        for k in 0..n_correct {
            items.push((if k < rej_c { 0.3 } else { 0.8 }, true));
        }
        for k in 0..n_incorrect {
            items.push((if k < rej_i { 0.3 } else { 0.8 }, false));
        }
        let o = obs(&items);
        let cdfs = build_cdfs(&o).unwrap();
        let target = accuracy_oracle(o.s(), rej_i as f64 / n_incorrect as f64);
        let r = calibrate_threshold(
            &cdfs,
            o.s(),
            target,
            AccuracyMode::Oracle,
            ConfidenceMeasure::Probability,
        )
        .unwrap();
        assert_eq!(r.threshold, 0.8);
        assert!((r.predicted_i - 0.3188).abs() < 1e-3);
        assert!((r.predicted_c - 0.0309).abs() < 1e-3);
        assert!((r.predicted_accuracy - 0.95).abs() < 1e-3);
        assert!((r.predicted_efficiency - 0.948).abs() < 5e-4);
    }

    fn obs_strategy() -> impl Strategy<Value = ObservationSet> {
        prop::collection::vec((0u32..40, any::<bool>()), 2..80).prop_filter_map("needs both outcomes", |v| {
            let items: Vec<(f64, bool)> = v.into_iter().map(|(k, c)| (f64::from(k) / 40.0, c)).collect();
            let both = items.iter().any(|i| i.1) && items.iter().any(|i| !i.1);
            both.then(|| obs(&items))
        })
    }

    proptest! {
        #[test]
        fn raising_target_never_raises_efficiency(o in obs_strategy(), t1 in 0.01f64..1.0, t2 in 0.01f64..1.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let cdfs = build_cdfs(&o).unwrap();
            let s = o.s();
            let a = calibrate_threshold(&cdfs, s, lo, AccuracyMode::Oracle, ConfidenceMeasure::Probability);
            let b = calibrate_threshold(&cdfs, s, hi, AccuracyMode::Oracle, ConfidenceMeasure::Probability);
            if let (Ok(a), Ok(b)) = (&a, &b) {
                prop_assert!(b.predicted_efficiency <= a.predicted_efficiency);
            }
            if a.is_err() {
                prop_assert!(b.is_err());
            }
            for r in [a, b].into_iter().flatten() {
                prop_assert!(r.predicted_accuracy >= r.target);
            }
        }

        #[test]
        fn oracle_accuracy_monotone_in_threshold(o in obs_strategy()) {
            let cdfs = build_cdfs(&o).unwrap();
            let s = o.s();
            let mut prev: Option<(f64, f64)> = None;
            for t in cdfs.distinct_values() {
                let (c, i) = cdfs.rejected_fractions(t);
                let acc = accuracy_oracle(s, i);
                let eff = efficiency(s, c, i);
                if let Some((pa, pe)) = prev {
                    prop_assert!(acc >= pa);
                    prop_assert!(eff <= pe);
                }
                prev = Some((acc, eff));
            }
        }
    }
}
