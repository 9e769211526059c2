//! IoU-matched event evaluation: per-class average precision and mAP.
//!
//! Predictions of a class are pooled across recordings and ranked by score.
//! AP is the mean, over evenly spaced recall levels, of the interpolated
//! precision `max { precision(r') : r' >= r }`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::decode::max_bipartite_matching;
use crate::error::{Error, Result};
use crate::interval::iou;
use crate::types::{ClassVocab, EventBox, EventSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchingMode {
    /// Predictions in descending score claim their best unmatched truth.
    #[default]
    GreedyByScore,
    /// Maximum-cardinality matching on the same edge set.
    MaxCardinality,
}

impl std::str::FromStr for MatchingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" | "greedy_by_score" => Ok(Self::GreedyByScore),
            "maxcard" | "max_cardinality" => Ok(Self::MaxCardinality),
            other => Err(Error::Config(format!("unknown matching mode {other:?}"))),
        }
    }
}

/// What the `num_points` grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMethod {
    /// Evenly spaced recall levels with interpolated precision.
    #[default]
    RecallGrid,
    /// Evenly spaced score thresholds; area under the interpolated curve
    /// through the resulting operating points.
    ScoreThresholds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    pub num_points: usize,
    pub matching_mode: MatchingMode,
    pub ap_method: ApMethod,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: vec![0.5, 0.8],
            num_points: 1001,
            matching_mode: MatchingMode::GreedyByScore,
            ap_method: ApMethod::RecallGrid,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::Config("no IoU thresholds".into()));
        }
        if self.iou_thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::Config("IoU thresholds must lie in (0, 1]".into()));
        }
        if self.iou_thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("IoU thresholds must be sorted ascending".into()));
        }
        if self.num_points < 2 {
            return Err(Error::Config("need at least 2 interpolation points".into()));
        }
        Ok(())
    }
}

fn ranking_cmp(a: &EventBox, b: &EventBox) -> std::cmp::Ordering {
    b.score()
        .total_cmp(&a.score())
        .then(a.onset().total_cmp(&b.onset()))
        .then(a.duration().total_cmp(&b.duration()))
}

/// Matches predicted boxes to truth boxes of the same class with IoU at
/// least `iou_threshold`. Returns `(pred_index, truth_index)` pairs sorted by
/// prediction index.
pub fn match_boxes(preds: &[EventBox], truth: &[EventBox], iou_threshold: f64, mode: MatchingMode) -> Vec<(usize, usize)> {
    match mode {
        MatchingMode::MaxCardinality => max_bipartite_matching(preds, truth, iou_threshold),
        MatchingMode::GreedyByScore => {
            let mut order: Vec<usize> = (0..preds.len()).collect();
            order.sort_by(|&i, &j| ranking_cmp(&preds[i], &preds[j]).then(i.cmp(&j)));
            let mut taken = vec![false; truth.len()];
            let mut pairs = Vec::new();
            for i in order {
                let p = &preds[i];
                let mut best: Option<(usize, f64)> = None;
                for (j, t) in truth.iter().enumerate() {
                    if taken[j] || t.class_id() != p.class_id() {
                        continue;
                    }
                    let o = iou(p, t);
                    if o > 0.0 && o >= iou_threshold && best.is_none_or(|(_, b)| o > b) {
                        best = Some((j, o));
                    }
                }
                if let Some((j, _)) = best {
                    taken[j] = true;
                    pairs.push((i, j));
                }
            }
            pairs.sort_unstable();
            pairs
        }
    }
}

/// [`match_boxes`] on two event sets, which must share a vocabulary.
pub fn match_events(preds: &EventSet, truth: &EventSet, iou_threshold: f64, mode: MatchingMode) -> Result<Vec<(usize, usize)>> {
    if preds.vocab() != truth.vocab() {
        return Err(Error::Config("prediction and truth vocabularies differ".into()));
    }
    Ok(match_boxes(preds.boxes(), truth.boxes(), iou_threshold, mode))
}

/// One point of a ranked precision/recall sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class_id: usize,
    /// `None` when the class has no ground truth anywhere.
    pub ap: Option<f64>,
    pub n_truth: usize,
    pub n_pred: usize,
    pub n_matched: usize,
    pub pr_curve: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub iou_threshold: f64,
    pub classes: Vec<ClassReport>,
    /// Mean AP over classes present in the ground truth.
    pub map: Option<f64>,
    pub matched: usize,
    pub unmatched_preds: usize,
    pub unmatched_truths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub vocab: ClassVocab,
    pub thresholds: Vec<ThresholdReport>,
}

/// Ranked predictions of one class: `(box, is_true_positive)`.
struct Ranked {
    items: Vec<(EventBox, bool)>,
    n_truth: usize,
}

impl Ranked {
    fn curve(&self) -> Vec<PrPoint> {
        let mut tp = 0usize;
        self.items
            .iter()
            .enumerate()
            .map(|(k, (b, hit))| {
                tp += usize::from(*hit);
                PrPoint {
                    score: b.score(),
                    precision: tp as f64 / (k + 1) as f64,
                    recall: if self.n_truth == 0 { 0.0 } else { tp as f64 / self.n_truth as f64 },
                }
            })
            .collect()
    }
}

/// Mean interpolated precision over `num_points` recall levels in `[0, 1]`.
pub fn interpolated_ap(curve: &[PrPoint], num_points: usize) -> f64 {
    let mut best_after = vec![0.0f64; curve.len() + 1];
    for k in (0..curve.len()).rev() {
        best_after[k] = best_after[k + 1].max(curve[k].precision);
    }
    let steps = (num_points - 1) as f64;
    let total: f64 = (0..num_points)
        .map(|i| {
            let r = i as f64 / steps;
            // Recall is non-decreasing along the ranking.
            let first = curve.partition_point(|p| p.recall < r);
            best_after[first]
        })
        .sum();
    total / num_points as f64
}

fn score_threshold_ap(items: &[(EventBox, bool)], n_truth: usize, num_points: usize) -> f64 {
    let steps = (num_points - 1) as f64;
    let mut points: Vec<(f64, f64)> = (0..num_points)
        .filter_map(|i| {
            let tau = i as f64 / steps;
            let kept = items.iter().filter(|(b, _)| b.score() >= tau);
            let (n, tp) = kept.fold((0usize, 0usize), |(n, tp), (_, hit)| (n + 1, tp + usize::from(*hit)));
            (n > 0).then(|| (tp as f64 / n_truth as f64, tp as f64 / n as f64))
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for k in 0..points.len() {
        let r = points[k].0;
        let p = points[k..].iter().map(|x| x.1).fold(0.0, f64::max);
        area += (r - prev_recall) * p;
        prev_recall = r;
    }
    area
}

fn check_aligned(preds: &[EventSet], truths: &[EventSet]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::Config(format!(
            "{} prediction recordings but {} truth recordings",
            preds.len(),
            truths.len()
        )));
    }
    if let Some(first) = truths.first() {
        let v = first.vocab();
        if preds.iter().chain(truths).any(|s| s.vocab() != v) {
            return Err(Error::Config("recordings use different class vocabularies".into()));
        }
    }
    Ok(())
}

/// True-positive flags for every prediction of every recording.
fn hit_flags(preds: &[EventSet], truths: &[EventSet], iou_threshold: f64, mode: MatchingMode) -> Vec<Vec<bool>> {
    preds
        .par_iter()
        .zip(truths.par_iter())
        .map(|(p, t)| {
            let mut hits = vec![false; p.len()];
            for (i, _) in match_boxes(p.boxes(), t.boxes(), iou_threshold, mode) {
                hits[i] = true;
            }
            hits
        })
        .collect()
}

fn rank_class(preds: &[EventSet], truths: &[EventSet], hits: &[Vec<bool>], class_id: usize) -> Ranked {
    let mut items: Vec<(EventBox, bool)> = preds
        .iter()
        .zip(hits)
        .flat_map(|(set, h)| set.boxes().iter().copied().zip(h.iter().copied()))
        .filter(|(b, _)| b.class_id() == class_id)
        .collect();
    // Misses sort ahead of hits on full ties so recording order cannot matter.
    items.sort_by(|a, b| ranking_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
    let n_truth = truths
        .iter()
        .map(|t| t.boxes().iter().filter(|b| b.class_id() == class_id).count())
        .sum();
    Ranked { items, n_truth }
}

fn class_report(ranked: &Ranked, class_id: usize, cfg: &EvalConfig) -> ClassReport {
    let curve = ranked.curve();
    let ap = (ranked.n_truth > 0).then(|| match cfg.ap_method {
        ApMethod::RecallGrid => interpolated_ap(&curve, cfg.num_points),
        ApMethod::ScoreThresholds => score_threshold_ap(&ranked.items, ranked.n_truth, cfg.num_points),
    });
    ClassReport {
        class_id,
        ap,
        n_truth: ranked.n_truth,
        n_pred: ranked.items.len(),
        n_matched: ranked.items.iter().filter(|x| x.1).count(),
        pr_curve: curve,
    }
}

/// AP of one class pooled over recordings; `None` if the class never occurs
/// in the ground truth.
pub fn average_precision(
    preds: &[EventSet],
    truths: &[EventSet],
    class_id: usize,
    iou_threshold: f64,
    cfg: &EvalConfig,
) -> Result<Option<f64>> {
    check_aligned(preds, truths)?;
    let hits = hit_flags(preds, truths, iou_threshold, cfg.matching_mode);
    Ok(class_report(&rank_class(preds, truths, &hits, class_id), class_id, cfg).ap)
}

/// Per-class AP and mAP at every configured IoU threshold.
pub fn evaluate(preds: &[EventSet], truths: &[EventSet], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    check_aligned(preds, truths)?;
    let vocab = match truths.first() {
        Some(t) => t.vocab().clone(),
        None => return Err(Error::Config("no recordings to evaluate".into())),
    };
    let n_truth_total: usize = truths.iter().map(EventSet::len).sum();
    let n_pred_total: usize = preds.iter().map(EventSet::len).sum();
    let thresholds = cfg
        .iou_thresholds
        .iter()
        .map(|&thr| {
            let hits = hit_flags(preds, truths, thr, cfg.matching_mode);
            let classes: Vec<ClassReport> = (0..vocab.len())
                .map(|c| class_report(&rank_class(preds, truths, &hits, c), c, cfg))
                .collect();
            let present: Vec<f64> = classes.iter().filter_map(|c| c.ap).collect();
            let map = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
            let matched: usize = hits.iter().flatten().filter(|h| **h).count();
            ThresholdReport {
                iou_threshold: thr,
                classes,
                map,
                matched,
                unmatched_preds: n_pred_total - matched,
                unmatched_truths: n_truth_total - matched,
            }
        })
        .collect();
    Ok(EvalReport { vocab, thresholds })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"))
}

impl EvalReport {
    /// mAP at the threshold closest to `iou_threshold`.
    pub fn map_at(&self, iou_threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|t| (t.iou_threshold - iou_threshold).abs() < 1e-12)
            .and_then(|t| t.map)
    }

    /// One row per class and threshold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iou_threshold,class,ap,n_truth,n_pred,n_matched\n");
        for t in &self.thresholds {
            for c in &t.classes {
                let _ = writeln!(
                    out,
                    "{:.6},{},{},{},{},{}",
                    t.iou_threshold,
                    self.vocab.name(c.class_id).unwrap_or("?"),
                    fmt_opt(c.ap),
                    c.n_truth,
                    c.n_pred,
                    c.n_matched
                );
            }
        }
        out
    }

    pub fn pr_csv(&self) -> String {
        let mut out = String::from("iou_threshold,class,rank,score,precision,recall\n");
        for t in &self.thresholds {
            for c in &t.classes {
                for (k, p) in c.pr_curve.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{:.6},{},{},{:.6},{:.6},{:.6}",
                        t.iou_threshold,
                        self.vocab.name(c.class_id).unwrap_or("?"),
                        k,
                        p.score,
                        p.precision,
                        p.recall
                    );
                }
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for t in &self.thresholds {
            let _ = writeln!(
                out,
                "mAP@{:.2}: {}  (matched {}, unmatched predictions {}, unmatched truths {})",
                t.iou_threshold,
                fmt_opt(t.map),
                t.matched,
                t.unmatched_preds,
                t.unmatched_truths
            );
            for c in &t.classes {
                let name = self.vocab.name(c.class_id).unwrap_or("?");
                match c.ap {
                    Some(ap) => {
                        let _ = writeln!(out, "  {name}: AP {ap:.6}");
                    }
                    None => {
                        let _ = writeln!(out, "  {name}: absent from ground truth");
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> ClassVocab {
        ClassVocab::new(["a", "b"]).unwrap()
    }

    fn set(boxes: &[(f64, f64, usize, f64)]) -> EventSet {
        EventSet::new(
            boxes
                .iter()
                .map(|&(on, off, c, s)| EventBox::from_span(on, off, c, s).unwrap())
                .collect(),
            100.0,
            vocab(),
        )
        .unwrap()
    }

    #[test]
    fn exact_predictions_match_everything() {
        let t = set(&[(0.0, 1.0, 0, 1.0), (2.0, 3.0, 1, 1.0), (2.5, 3.5, 1, 1.0)]);
        let m = match_events(&t, &t, 0.5, MatchingMode::GreedyByScore).unwrap();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn greedy_prefers_highest_iou() {
        let p = set(&[(0.0, 1.0, 0, 0.9)]);
        let t = set(&[(0.05, 1.05, 0, 1.0), (0.0, 1.0, 0, 1.0)]);
        let m = match_events(&p, &t, 0.5, MatchingMode::GreedyByScore).unwrap();
        // Truth boxes are normalized by onset, so the exact one is index 0.
        assert_eq!(t.boxes()[m[0].1].onset(), 0.0);
    }

    #[test]
    fn class_constraint() {
        let p = set(&[(0.0, 1.0, 0, 0.9)]);
        let t = set(&[(0.0, 1.0, 1, 1.0)]);
        assert!(match_events(&p, &t, 0.1, MatchingMode::GreedyByScore).unwrap().is_empty());
        assert!(match_events(&p, &t, 0.1, MatchingMode::MaxCardinality).unwrap().is_empty());
    }

    #[test]
    fn vocab_mismatch_rejected() {
        let p = EventSet::empty(1.0, ClassVocab::single("x"));
        let t = EventSet::empty(1.0, ClassVocab::single("y"));
        assert!(matches!(match_events(&p, &t, 0.5, MatchingMode::GreedyByScore), Err(Error::Config(_))));
    }

    #[test]
    fn ap_worked_example() {
        let truth = set(&[(0.0, 1.0, 0, 1.0), (5.0, 6.0, 0, 1.0)]);
        let preds = set(&[(0.0, 1.0, 0, 0.9), (10.0, 11.0, 0, 0.8), (5.0, 6.0, 0, 0.7)]);
        let ap = average_precision(&[preds], &[truth], 0, 0.5, &EvalConfig::default())
            .unwrap()
            .unwrap();
        let expected = (501.0 + 500.0 * (2.0 / 3.0)) / 1001.0;
        assert!((ap - expected).abs() < 1e-12);
        assert!((ap - 0.833500).abs() < 1e-6);
    }

    #[test]
    fn ap_edge_cases() {
        let truth = set(&[(0.0, 1.0, 0, 1.0)]);
        let cfg = EvalConfig::default();
        assert_eq!(average_precision(std::slice::from_ref(&truth), std::slice::from_ref(&truth), 0, 0.5, &cfg).unwrap(), Some(1.0));
        assert_eq!(average_precision(&[set(&[])], std::slice::from_ref(&truth), 0, 0.5, &cfg).unwrap(), Some(0.0));
        assert_eq!(average_precision(std::slice::from_ref(&truth), std::slice::from_ref(&truth), 1, 0.5, &cfg).unwrap(), None);
    }

    #[test]
    fn evaluate_reports() {
        let truth = set(&[(0.0, 1.0, 0, 1.0), (2.0, 3.0, 0, 1.0)]);
        let cfg = EvalConfig::default();
        let r = evaluate(std::slice::from_ref(&truth), std::slice::from_ref(&truth), &cfg).unwrap();
        assert_eq!(r.map_at(0.5), Some(1.0));
        assert_eq!(r.map_at(0.8), Some(1.0));
        // Class b is absent and excluded from the mean.
        assert_eq!(r.thresholds[0].classes[1].ap, None);
        let empty = evaluate(&[set(&[])], std::slice::from_ref(&truth), &cfg).unwrap();
        assert_eq!(empty.map_at(0.5), Some(0.0));
        assert!(evaluate(&[], &[truth], &cfg).is_err());
        assert!(r.to_csv().starts_with("iou_threshold,class,ap"));
        assert!(r.to_csv().contains("0.500000,b,nan,0,0,0"));
    }

    #[test]
    fn score_threshold_variant() {
        let truth = set(&[(0.0, 1.0, 0, 1.0), (5.0, 6.0, 0, 1.0)]);
        let cfg = EvalConfig {
            ap_method: ApMethod::ScoreThresholds,
            ..Default::default()
        };
        let ap = average_precision(std::slice::from_ref(&truth), std::slice::from_ref(&truth), 0, 0.5, &cfg).unwrap().unwrap();
        assert!((ap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = EvalConfig { iou_thresholds: vec![0.8, 0.5], ..EvalConfig::default() };
        assert!(c.validate().is_err());
        c.iou_thresholds = vec![0.5];
        c.num_points = 1;
        assert!(c.validate().is_err());
    }
}
