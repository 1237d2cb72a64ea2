//! Multi-label scoring over per-second activity matrices: XNOR accuracy,
//! per-activity confusion metrics, ranked average precision, and dataset
//! concurrency profiles. Pure functions; matrices are activities x seconds.

use crate::error::{data_err, CoactError};

/// Dense A x T bit matrix, row per activity.
#[derive(Debug, Clone, PartialEq)]
pub struct BitMatrix {
    activities: usize,
    seconds: usize,
    data: Vec<u8>,
}

impl BitMatrix {
    pub fn new(activities: usize, seconds: usize, data: Vec<u8>) -> Result<Self, CoactError> {
        if data.len() != activities * seconds {
            return Err(data_err(format!(
                "bit matrix {}x{} wants {} entries, got {}",
                activities,
                seconds,
                activities * seconds,
                data.len()
            )));
        }
        if data.iter().any(|b| *b > 1) {
            return Err(data_err("bit matrix entries must be 0 or 1"));
        }
        Ok(BitMatrix {
            activities,
            seconds,
            data,
        })
    }

    /// Transpose per-second codes (T rows of A bits) into activity rows.
    pub fn from_second_rows(rows: &[Vec<u8>]) -> Result<Self, CoactError> {
        let seconds = rows.len();
        let activities = rows.first().map_or(0, Vec::len);
        let mut data = vec![0u8; activities * seconds];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != activities {
                return Err(data_err(format!(
                    "second {t}: {} bits, expected {activities}",
                    row.len()
                )));
            }
            for (a, bit) in row.iter().enumerate() {
                data[a * seconds + t] = *bit;
            }
        }
        BitMatrix::new(activities, seconds, data)
    }

    pub fn activities(&self) -> usize {
        self.activities
    }

    pub fn seconds(&self) -> usize {
        self.seconds
    }

    pub fn get(&self, activity: usize, second: usize) -> u8 {
        self.data[activity * self.seconds + second]
    }

    pub fn row(&self, activity: usize) -> &[u8] {
        &self.data[activity * self.seconds..(activity + 1) * self.seconds]
    }
}

/// Dense A x T score matrix aligned with a [`BitMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    activities: usize,
    seconds: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(activities: usize, seconds: usize, data: Vec<f64>) -> Result<Self, CoactError> {
        if data.len() != activities * seconds {
            return Err(data_err(format!(
                "score matrix {}x{} wants {} entries, got {}",
                activities,
                seconds,
                activities * seconds,
                data.len()
            )));
        }
        Ok(ScoreMatrix {
            activities,
            seconds,
            data,
        })
    }

    pub fn from_second_rows(rows: &[Vec<f64>]) -> Result<Self, CoactError> {
        let seconds = rows.len();
        let activities = rows.first().map_or(0, Vec::len);
        let mut data = vec![0.0; activities * seconds];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != activities {
                return Err(data_err(format!(
                    "second {t}: {} scores, expected {activities}",
                    row.len()
                )));
            }
            for (a, s) in row.iter().enumerate() {
                data[a * seconds + t] = *s;
            }
        }
        ScoreMatrix::new(activities, seconds, data)
    }

    pub fn activities(&self) -> usize {
        self.activities
    }

    pub fn seconds(&self) -> usize {
        self.seconds
    }

    pub fn row(&self, activity: usize) -> &[f64] {
        &self.data[activity * self.seconds..(activity + 1) * self.seconds]
    }
}

fn check_shapes(
    pa: usize,
    pt: usize,
    ga: usize,
    gt: usize,
) -> Result<(), CoactError> {
    if pa != ga || pt != gt {
        return Err(data_err(format!(
            "prediction {pa}x{pt} vs ground truth {ga}x{gt}"
        )));
    }
    Ok(())
}

/// Fraction of (activity, second) cells where prediction and truth agree.
pub fn xnor_accuracy(p: &BitMatrix, g: &BitMatrix) -> Result<f64, CoactError> {
    check_shapes(p.activities, p.seconds, g.activities, g.seconds)?;
    if p.data.is_empty() {
        return Err(data_err("empty matrices have no accuracy"));
    }
    let agree = p
        .data
        .iter()
        .zip(&g.data)
        .filter(|(a, b)| a == b)
        .count();
    Ok(agree as f64 / p.data.len() as f64)
}

/// Fraction of seconds whose whole code matches, the stricter accuracy
/// reading for per-sample tasks.
pub fn exact_match_accuracy(p: &BitMatrix, g: &BitMatrix) -> Result<f64, CoactError> {
    check_shapes(p.activities, p.seconds, g.activities, g.seconds)?;
    if p.seconds == 0 {
        return Err(data_err("empty matrices have no accuracy"));
    }
    let matched = (0..p.seconds)
        .filter(|&t| (0..p.activities).all(|a| p.get(a, t) == g.get(a, t)))
        .count();
    Ok(matched as f64 / p.seconds as f64)
}

/// Per-activity confusion counts over all time instances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(p: &BitMatrix, g: &BitMatrix) -> Result<Vec<Confusion>, CoactError> {
    check_shapes(p.activities, p.seconds, g.activities, g.seconds)?;
    let mut counts = vec![Confusion::default(); p.activities];
    for a in 0..p.activities {
        let c = &mut counts[a];
        for t in 0..p.seconds {
            match (p.get(a, t), g.get(a, t)) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 0) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
    }
    Ok(counts)
}

/// A ratio that may have had a zero denominator: the value is then reported
/// as 0 with `defined` cleared, never silently invented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub defined: bool,
}

impl MetricValue {
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            MetricValue {
                value: 0.0,
                defined: false,
            }
        } else {
            MetricValue {
                value: num as f64 / den as f64,
                defined: true,
            }
        }
    }

    /// Sum of component ratios minus one; undefined if any component is.
    fn composite(a: MetricValue, b: MetricValue) -> Self {
        if a.defined && b.defined {
            MetricValue {
                value: a.value + b.value - 1.0,
                defined: true,
            }
        } else {
            MetricValue {
                value: 0.0,
                defined: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityMetrics {
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub f1: MetricValue,
    /// TPR + TNR - 1.
    pub informedness: MetricValue,
    /// PPV + NPV - 1.
    pub markedness: MetricValue,
}

pub fn per_activity_metrics(counts: &[Confusion]) -> Vec<ActivityMetrics> {
    counts
        .iter()
        .map(|c| {
            let precision = MetricValue::ratio(c.tp, c.tp + c.fp);
            let recall = MetricValue::ratio(c.tp, c.tp + c.fn_);
            let tnr = MetricValue::ratio(c.tn, c.tn + c.fp);
            let npv = MetricValue::ratio(c.tn, c.tn + c.fn_);
            let f1 = if precision.defined && recall.defined && precision.value + recall.value > 0.0
            {
                MetricValue {
                    value: 2.0 * precision.value * recall.value / (precision.value + recall.value),
                    defined: true,
                }
            } else {
                MetricValue {
                    value: 0.0,
                    defined: false,
                }
            };
            ActivityMetrics {
                precision,
                recall,
                f1,
                informedness: MetricValue::composite(recall, tnr),
                markedness: MetricValue::composite(precision, npv),
            }
        })
        .collect()
}

/// Ranked average precision for one activity: instances sorted by score
/// descending, earlier seconds first on ties; AP is the mean of
/// precision-at-rank over the positive instances. `None` when the truth has
/// no positives (excluded from the mean, not zero).
pub fn average_precision(scores: &[f64], truth: &[u8]) -> Result<Option<f64>, CoactError> {
    if scores.len() != truth.len() {
        return Err(data_err(format!(
            "{} scores vs {} truth bits",
            scores.len(),
            truth.len()
        )));
    }
    let positives = truth.iter().filter(|b| **b == 1).count();
    if positives == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        if truth[idx] == 1 {
            hits += 1;
            precision_sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(Some(precision_sum / positives as f64))
}

#[derive(Debug, Clone)]
pub struct MapReport {
    /// Mean over activities whose AP is defined.
    pub map: f64,
    /// Per-activity AP; `None` marks all-negative activities excluded from
    /// the mean.
    pub per_activity: Vec<Option<f64>>,
}

pub fn mean_average_precision(
    scores: &ScoreMatrix,
    g: &BitMatrix,
) -> Result<MapReport, CoactError> {
    check_shapes(scores.activities, scores.seconds, g.activities, g.seconds)?;
    let mut per_activity = Vec::with_capacity(g.activities);
    for a in 0..g.activities {
        per_activity.push(average_precision(scores.row(a), g.row(a))?);
    }
    let defined: Vec<f64> = per_activity.iter().filter_map(|ap| *ap).collect();
    if defined.is_empty() {
        return Err(data_err("no activity has a positive instance; mAP undefined"));
    }
    Ok(MapReport {
        map: defined.iter().sum::<f64>() / defined.len() as f64,
        per_activity,
    })
}

/// Run statistics for one activity's truth row: total active seconds,
/// occurrence count (maximal runs of 1s), and run-length moments
/// (population SD; a single run reports 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRuns {
    pub total_seconds: usize,
    pub occurrences: usize,
    pub mean_run: f64,
    pub sd_run: f64,
}

#[derive(Debug, Clone)]
pub struct ConcurrencyProfile {
    /// `histogram[k]` counts seconds with exactly k active bits, k = 0..=A.
    pub histogram: Vec<usize>,
    pub per_activity: Vec<ActivityRuns>,
}

impl ConcurrencyProfile {
    /// Fraction of seconds with at least `k` concurrent activities.
    pub fn fraction_at_least(&self, k: usize) -> f64 {
        let total: usize = self.histogram.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let tail: usize = self.histogram.iter().skip(k).sum();
        tail as f64 / total as f64
    }
}

pub fn concurrency_profile(g: &BitMatrix) -> ConcurrencyProfile {
    let mut histogram = vec![0usize; g.activities + 1];
    for t in 0..g.seconds {
        let k = (0..g.activities).filter(|&a| g.get(a, t) == 1).count();
        histogram[k] += 1;
    }
    let per_activity = (0..g.activities)
        .map(|a| {
            let row = g.row(a);
            let mut runs: Vec<usize> = Vec::new();
            let mut current = 0usize;
            for &bit in row {
                if bit == 1 {
                    current += 1;
                } else if current > 0 {
                    runs.push(current);
                    current = 0;
                }
            }
            if current > 0 {
                runs.push(current);
            }
            let total_seconds: usize = runs.iter().sum();
            let occurrences = runs.len();
            let mean_run = if occurrences > 0 {
                total_seconds as f64 / occurrences as f64
            } else {
                0.0
            };
            let sd_run = if occurrences > 0 {
                let var = runs
                    .iter()
                    .map(|r| (*r as f64 - mean_run).powi(2))
                    .sum::<f64>()
                    / occurrences as f64;
                var.sqrt()
            } else {
                0.0
            };
            ActivityRuns {
                total_seconds,
                occurrences,
                mean_run,
                sd_run,
            }
        })
        .collect();
    ConcurrencyProfile {
        histogram,
        per_activity,
    }
}

fn fmt_metric(m: MetricValue) -> String {
    if m.defined {
        format!("{:.4}", m.value)
    } else {
        format!("{:.4}*", m.value)
    }
}

/// Tab-delimited metric report; undefined ratios are starred, all-negative
/// activities print AP as NA.
pub fn render_metrics_report(
    xnor: f64,
    exact_match: f64,
    per_activity: &[ActivityMetrics],
    map: Option<&MapReport>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("xnor_accuracy\t{xnor:.4}\n"));
    out.push_str(&format!("exact_match_accuracy\t{exact_match:.4}\n"));
    if let Some(m) = map {
        out.push_str(&format!("map\t{:.4}\n", m.map));
    }
    out.push_str("activity\tprecision\trecall\tf1\tinformedness\tmarkedness\tap\n");
    for (a, m) in per_activity.iter().enumerate() {
        let ap = match map.and_then(|r| r.per_activity.get(a)) {
            Some(Some(v)) => format!("{v:.4}"),
            Some(None) => "NA".to_string(),
            None => "NA".to_string(),
        };
        out.push_str(&format!(
            "{a}\t{}\t{}\t{}\t{}\t{}\t{ap}\n",
            fmt_metric(m.precision),
            fmt_metric(m.recall),
            fmt_metric(m.f1),
            fmt_metric(m.informedness),
            fmt_metric(m.markedness),
        ));
    }
    out
}

/// Plot-ready concurrency table: histogram block, blank line, per-activity
/// run block.
pub fn render_profile(profile: &ConcurrencyProfile) -> String {
    let mut out = String::from("concurrent_activities\tseconds\n");
    for (k, count) in profile.histogram.iter().enumerate() {
        out.push_str(&format!("{k}\t{count}\n"));
    }
    out.push_str("\nactivity\ttotal_seconds\toccurrences\tmean_run\tsd_run\n");
    for (a, runs) in profile.per_activity.iter().enumerate() {
        out.push_str(&format!(
            "{a}\t{}\t{}\t{:.3}\t{:.3}\n",
            runs.total_seconds, runs.occurrences, runs.mean_run, runs.sd_run
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(activities: usize, rows: &[&[u8]]) -> BitMatrix {
        let data: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        BitMatrix::new(activities, rows[0].len(), data).unwrap()
    }

    #[test]
    fn xnor_counts_agreements() {
        let p = bits(2, &[&[1, 0], &[0, 0]]);
        let g = bits(2, &[&[1, 1], &[0, 0]]);
        assert_eq!(xnor_accuracy(&p, &g).unwrap(), 0.75);
        assert_eq!(xnor_accuracy(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn xnor_equals_one_minus_normalized_hamming() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, t) = (4, 50);
        let rand_bits = |rng: &mut ChaCha8Rng| {
            BitMatrix::new(a, t, (0..a * t).map(|_| rng.gen_range(0..=1)).collect()).unwrap()
        };
        let p = rand_bits(&mut rng);
        let g = rand_bits(&mut rng);
        let hamming: usize = (0..a)
            .flat_map(|i| (0..t).map(move |j| (i, j)))
            .filter(|&(i, j)| p.get(i, j) != g.get(i, j))
            .count();
        let expect = 1.0 - hamming as f64 / (a * t) as f64;
        assert!((xnor_accuracy(&p, &g).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn exact_match_is_stricter_than_xnor() {
        let p = bits(2, &[&[1, 0, 1], &[0, 0, 1]]);
        let g = bits(2, &[&[1, 1, 1], &[0, 0, 1]]);
        // Seconds 0 and 2 match fully; second 1 misses one bit.
        assert!((exact_match_accuracy(&p, &g).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let xnor = xnor_accuracy(&p, &g).unwrap();
        assert!(exact_match_accuracy(&p, &g).unwrap() <= xnor);
        assert_eq!(exact_match_accuracy(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = bits(1, &[&[1, 0]]);
        let g = bits(1, &[&[1, 0, 1]]);
        assert!(xnor_accuracy(&p, &g).is_err());
    }

    #[test]
    fn confusion_partitions_every_second() {
        let p = bits(2, &[&[1, 1, 0, 0], &[1, 0, 1, 0]]);
        let g = bits(2, &[&[1, 0, 1, 0], &[1, 1, 0, 0]]);
        let counts = confusion(&p, &g).unwrap();
        for c in &counts {
            assert_eq!(c.total(), 4);
        }
        assert_eq!(counts[0], Confusion { tp: 1, fp: 1, tn: 1, fn_: 1 });
    }

    #[test]
    fn hand_confusion_oracle() {
        // TP=3, FP=1, FN=1, TN=5 over ten seconds.
        let c = Confusion { tp: 3, fp: 1, tn: 5, fn_: 1 };
        let m = &per_activity_metrics(&[c])[0];
        assert!((m.precision.value - 0.75).abs() < 1e-12);
        assert!((m.recall.value - 0.75).abs() < 1e-12);
        assert!((m.f1.value - 0.75).abs() < 1e-12);
        let expect = 0.75 + 5.0 / 6.0 - 1.0;
        assert!((m.informedness.value - expect).abs() < 1e-12);
        assert!((m.markedness.value - expect).abs() < 1e-12);
        assert!(m.informedness.defined && m.markedness.defined);
    }

    #[test]
    fn perfect_predictor_scores_one_everywhere() {
        let g = bits(1, &[&[1, 0, 1, 0]]);
        let counts = confusion(&g, &g).unwrap();
        let m = &per_activity_metrics(&counts)[0];
        for v in [m.precision, m.recall, m.f1, m.informedness, m.markedness] {
            assert!(v.defined);
            assert!((v.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_predictors_have_zero_informedness_and_markedness() {
        let g = bits(1, &[&[1, 1, 0, 0]]);
        let always_on = bits(1, &[&[1, 1, 1, 1]]);
        let m = &per_activity_metrics(&confusion(&always_on, &g).unwrap())[0];
        assert_eq!(m.informedness.value, 0.0);
        assert!(m.informedness.defined);
        // NPV has a zero denominator, so markedness is flagged, reported 0.
        assert_eq!(m.markedness.value, 0.0);
        assert!(!m.markedness.defined);

        let always_off = bits(1, &[&[0, 0, 0, 0]]);
        let m = &per_activity_metrics(&confusion(&always_off, &g).unwrap())[0];
        assert_eq!(m.informedness.value, 0.0);
        assert!(!m.precision.defined);
        assert_eq!(m.markedness.value, 0.0);
    }

    #[test]
    fn ap_hand_oracle_five_sixths() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.1], &[1, 0, 1, 0])
            .unwrap()
            .unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ap_edges() {
        // Perfect ranking.
        let ap = average_precision(&[0.9, 0.8, 0.1], &[1, 1, 0]).unwrap().unwrap();
        assert_eq!(ap, 1.0);
        // Single positive ranked last of T.
        let ap = average_precision(&[0.9, 0.8, 0.1], &[0, 0, 1]).unwrap().unwrap();
        assert!((ap - 1.0 / 3.0).abs() < 1e-12);
        // All negative: excluded, not zero.
        assert_eq!(average_precision(&[0.9, 0.1], &[0, 0]).unwrap(), None);
    }

    #[test]
    fn ap_ties_break_toward_earlier_seconds() {
        // Equal scores: second 0 ranks first. A positive at t=0 wins full
        // precision; at t=1 it halves.
        let early = average_precision(&[0.5, 0.5], &[1, 0]).unwrap().unwrap();
        let late = average_precision(&[0.5, 0.5], &[0, 1]).unwrap().unwrap();
        assert_eq!(early, 1.0);
        assert_eq!(late, 0.5);
    }

    #[test]
    fn ap_is_invariant_under_monotone_transforms() {
        let scores = [0.31, 0.9, 0.11, 0.74, 0.52, 0.08];
        let truth = [0, 1, 0, 1, 0, 1];
        let base = average_precision(&scores, &truth).unwrap().unwrap();
        let scaled: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        let exped: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        for transformed in [scaled, exped] {
            let ap = average_precision(&transformed, &truth).unwrap().unwrap();
            assert!((ap - base).abs() < 1e-12);
        }
    }

    #[test]
    fn map_means_defined_activities_only() {
        let scores =
            ScoreMatrix::new(3, 2, vec![0.9, 0.1, 0.2, 0.8, 0.5, 0.5]).unwrap();
        let g = bits(3, &[&[1, 0], &[0, 1], &[0, 0]]);
        let report = mean_average_precision(&scores, &g).unwrap();
        assert_eq!(report.per_activity[0], Some(1.0));
        assert_eq!(report.per_activity[1], Some(1.0));
        assert_eq!(report.per_activity[2], None);
        assert_eq!(report.map, 1.0);

        let empty = bits(1, &[&[0, 0]]);
        let s = ScoreMatrix::new(1, 2, vec![0.1, 0.2]).unwrap();
        assert!(mean_average_precision(&s, &empty).is_err());
    }

    #[test]
    fn permuting_activities_permutes_metrics_and_preserves_aggregates() {
        let p = bits(3, &[&[1, 0, 1, 1], &[0, 0, 1, 0], &[1, 1, 0, 0]]);
        let g = bits(3, &[&[1, 1, 1, 0], &[0, 1, 1, 0], &[0, 1, 0, 1]]);
        let scores = ScoreMatrix::new(
            3,
            4,
            vec![0.9, 0.2, 0.8, 0.7, 0.1, 0.3, 0.6, 0.2, 0.8, 0.9, 0.1, 0.3],
        )
        .unwrap();
        let perm = [2usize, 0, 1];
        let permute_bits = |m: &BitMatrix| {
            let data: Vec<u8> = perm.iter().flat_map(|&a| m.row(a).to_vec()).collect();
            BitMatrix::new(3, 4, data).unwrap()
        };
        let permuted_scores = ScoreMatrix::new(
            3,
            4,
            perm.iter().flat_map(|&a| scores.row(a).to_vec()).collect(),
        )
        .unwrap();
        let (pp, gp) = (permute_bits(&p), permute_bits(&g));

        assert_eq!(
            xnor_accuracy(&p, &g).unwrap(),
            xnor_accuracy(&pp, &gp).unwrap()
        );
        let base = per_activity_metrics(&confusion(&p, &g).unwrap());
        let perm_metrics = per_activity_metrics(&confusion(&pp, &gp).unwrap());
        for (i, &a) in perm.iter().enumerate() {
            assert_eq!(perm_metrics[i], base[a]);
        }
        let m1 = mean_average_precision(&scores, &g).unwrap();
        let m2 = mean_average_precision(&permuted_scores, &gp).unwrap();
        assert!((m1.map - m2.map).abs() < 1e-12);
    }

    #[test]
    fn random_scores_land_near_the_base_rate() {
        let (a, t) = (5, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let truth: Vec<u8> = (0..a * t).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let scores: Vec<f64> = (0..a * t).map(|_| rng.gen()).collect();
        let g = BitMatrix::new(a, t, truth).unwrap();
        let s = ScoreMatrix::new(a, t, scores).unwrap();
        let report = mean_average_precision(&s, &g).unwrap();
        // Random ranking concentrates AP around the positive base rate.
        assert!(
            (report.map - 0.5).abs() < 0.1,
            "mAP {} strayed from 0.5",
            report.map
        );
    }

    #[test]
    fn concurrency_histogram_and_runs() {
        let g = bits(3, &[&[1, 1, 0, 0, 1], &[1, 0, 0, 1, 1], &[0, 0, 0, 1, 0]]);
        let profile = concurrency_profile(&g);
        // Per-second active counts: 2, 1, 0, 2, 2.
        assert_eq!(profile.histogram, vec![1, 1, 3, 0]);
        assert!((profile.fraction_at_least(2) - 0.6).abs() < 1e-12);

        let a0 = &profile.per_activity[0];
        assert_eq!(a0.total_seconds, 3);
        assert_eq!(a0.occurrences, 2);
        assert!((a0.mean_run - 1.5).abs() < 1e-12);
        assert!((a0.sd_run - 0.5).abs() < 1e-12);

        let all_zero = bits(2, &[&[0, 0], &[0, 0]]);
        let p0 = concurrency_profile(&all_zero);
        assert_eq!(p0.histogram, vec![2, 0, 0]);
        assert_eq!(p0.per_activity[0].occurrences, 0);

        let all_two = bits(2, &[&[1, 1], &[1, 1]]);
        let p2 = concurrency_profile(&all_two);
        assert_eq!(p2.histogram, vec![0, 0, 2]);
    }

    #[test]
    fn reports_render_with_flags() {
        let g = bits(2, &[&[1, 0], &[0, 0]]);
        let p = bits(2, &[&[1, 1], &[0, 0]]);
        let scores = ScoreMatrix::new(2, 2, vec![0.9, 0.6, 0.2, 0.1]).unwrap();
        let counts = confusion(&p, &g).unwrap();
        let metrics = per_activity_metrics(&counts);
        let map = mean_average_precision(&scores, &g).unwrap();
        let text = render_metrics_report(
            xnor_accuracy(&p, &g).unwrap(),
            exact_match_accuracy(&p, &g).unwrap(),
            &metrics,
            Some(&map),
        );
        assert!(text.starts_with("xnor_accuracy\t0.7500"));
        assert!(text.contains("exact_match_accuracy\t0.5000"));
        assert!(text.contains("map\t1.0000"));
        // Activity 1 never fires in prediction or truth: flagged columns.
        assert!(text.lines().last().unwrap().contains('*'));
        assert!(text.lines().last().unwrap().ends_with("NA"));

        let profile_text = render_profile(&concurrency_profile(&g));
        assert!(profile_text.contains("concurrent_activities\tseconds"));
        assert!(profile_text.contains("\nactivity\ttotal_seconds"));
    }
}
