//! Detection matching and average precision.
//!
//! Matching is greedy by descending confidence: each prediction claims the
//! unmatched ground-truth box of highest BEV IoU at or above the threshold.
//! AP pools detections across frames (and, for the overall number, across
//! scenes), walks distinct confidence cuts, and integrates the
//! precision-recall curve with all-point (right-max) interpolation.

use serde::{Deserialize, Serialize};

use crate::geometry::{bev_iou, OrientedBox3D};

/// Outcome of matching one frame's predictions against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// (prediction index, ground-truth index, IoU) for each match.
    pub pairs: Vec<(usize, usize, f64)>,
    /// (confidence, matched) per prediction, descending confidence.
    pub detections: Vec<(f64, bool)>,
    pub n_gt: usize,
}

/// Greedy confidence-ordered matching at one IoU threshold.
///
/// Confidence ties break toward the smaller prediction index; IoU ties
/// toward the smaller ground-truth index.
pub fn match_detections(
    preds: &[OrientedBox3D],
    gts: &[OrientedBox3D],
    iou_threshold: f64,
) -> MatchResult {
    assert!(iou_threshold > 0.0 && iou_threshold < 1.0);
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .expect("finite confidence")
            .then(a.cmp(&b))
    });
    let mut gt_taken = vec![false; gts.len()];
    let mut pairs = Vec::new();
    let mut detections = Vec::with_capacity(preds.len());
    for &pi in &order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_taken[gi] {
                continue;
            }
            let iou = bev_iou(&preds[pi], gt);
            if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, iou)) = best {
            gt_taken[gi] = true;
            pairs.push((pi, gi, iou));
            detections.push((preds[pi].confidence, true));
        } else {
            detections.push((preds[pi].confidence, false));
        }
    }
    let tp = pairs.len();
    MatchResult {
        true_positives: tp,
        false_positives: preds.len() - tp,
        false_negatives: gts.len() - tp,
        pairs,
        detections,
        n_gt: gts.len(),
    }
}

/// All-point interpolated AP over pooled frames.
///
/// Detections from every frame are pooled and sorted by confidence; each
/// distinct confidence cut contributes one precision-recall point, and the
/// area under the right-max interpolated curve is returned. `None` when
/// there is no ground truth anywhere (AP undefined).
pub fn average_precision(frames: &[MatchResult]) -> Option<f64> {
    let n_gt: usize = frames.iter().map(|f| f.n_gt).sum();
    if n_gt == 0 {
        return None;
    }
    let mut dets: Vec<(f64, bool)> = frames
        .iter()
        .flat_map(|f| f.detections.iter().copied())
        .collect();
    if dets.is_empty() {
        return Some(0.0);
    }
    dets.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite confidence"));

    // One PR point per distinct confidence value.
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < dets.len() {
        let conf = dets[i].0;
        while i < dets.len() && dets[i].0 == conf {
            if dets[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64));
    }

    // Right-max interpolation, integrated over increasing recall.
    let mut interp = vec![0.0; points.len()];
    let mut running = 0.0f64;
    for (k, &(_, p)) in points.iter().enumerate().rev() {
        running = running.max(p);
        interp[k] = running;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (k, &(r, _)) in points.iter().enumerate() {
        if r > prev_recall {
            ap += (r - prev_recall) * interp[k];
            prev_recall = r;
        }
    }
    Some(ap)
}

/// Identifies the run that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDescriptor {
    pub cp_mode: String,
    pub range_shape: String,
    pub noise: String,
    pub fusion: String,
    pub rng_seed: u64,
}

/// Per-scene evaluation entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEval {
    pub scene: String,
    pub seed: u64,
    pub ap50: Option<f64>,
    pub ap70: Option<f64>,
    pub n_gt: usize,
    pub n_pred: usize,
}

/// AP@0.5 / AP@0.7 for one configuration across a scene suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigDescriptor,
    /// Pooled over all scenes and frames.
    pub ap50: Option<f64>,
    pub ap70: Option<f64>,
    pub scenes: Vec<SceneEval>,
}

/// Frame-level match results for one scene at both thresholds.
#[derive(Debug, Clone)]
pub struct SceneRun {
    pub scene: String,
    pub seed: u64,
    pub matches50: Vec<MatchResult>,
    pub matches70: Vec<MatchResult>,
}

/// Aggregate per-scene and overall AP. Panics if any AP pair violates
/// `ap70 <= ap50` (a raised threshold can only lower AP).
pub fn report(config: ConfigDescriptor, runs: &[SceneRun]) -> EvalReport {
    let scenes: Vec<SceneEval> = runs
        .iter()
        .map(|r| {
            let ap50 = average_precision(&r.matches50);
            let ap70 = average_precision(&r.matches70);
            check_monotone(ap50, ap70);
            SceneEval {
                scene: r.scene.clone(),
                seed: r.seed,
                ap50,
                ap70,
                n_gt: r.matches50.iter().map(|m| m.n_gt).sum(),
                n_pred: r.matches50.iter().map(|m| m.detections.len()).sum(),
            }
        })
        .collect();
    let all50: Vec<MatchResult> = runs.iter().flat_map(|r| r.matches50.clone()).collect();
    let all70: Vec<MatchResult> = runs.iter().flat_map(|r| r.matches70.clone()).collect();
    let ap50 = average_precision(&all50);
    let ap70 = average_precision(&all70);
    check_monotone(ap50, ap70);
    EvalReport {
        config,
        ap50,
        ap70,
        scenes,
    }
}

fn check_monotone(ap50: Option<f64>, ap70: Option<f64>) {
    if let (Some(a50), Some(a70)) = (ap50, ap70) {
        assert!(
            a70 <= a50 + 1e-12 && (0.0..=1.0).contains(&a50) && (0.0..=1.0).contains(&a70),
            "AP monotonicity violated: ap50 {a50}, ap70 {a70}"
        );
    }
}

impl EvalReport {
    /// Mean of the per-scene AP@0.7 values (scenes with no GT excluded).
    pub fn mean_ap70(&self) -> Option<f64> {
        let vals: Vec<f64> = self.scenes.iter().filter_map(|s| s.ap70).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    pub fn mean_ap50(&self) -> Option<f64> {
        let vals: Vec<f64> = self.scenes.iter().filter_map(|s| s.ap50).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// One CSV row per scene, plus a pooled `overall` row.
    pub fn csv_rows(&self) -> Vec<String> {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut rows: Vec<String> = self
            .scenes
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    self.config.cp_mode,
                    self.config.range_shape,
                    self.config.noise,
                    self.config.fusion,
                    s.scene,
                    s.seed,
                    fmt(s.ap50),
                    fmt(s.ap70),
                    s.n_gt
                )
            })
            .collect();
        rows.push(format!(
            "{},{},{},{},overall,{},{},{},{}",
            self.config.cp_mode,
            self.config.range_shape,
            self.config.noise,
            self.config.fusion,
            self.config.rng_seed,
            fmt(self.ap50),
            fmt(self.ap70),
            self.scenes.iter().map(|s| s.n_gt).sum::<usize>()
        ));
        rows
    }
}

/// CSV header matching [`EvalReport::csv_rows`].
pub const CSV_HEADER: &str = "cp_mode,range_shape,noise,fusion,scene,seed,ap50,ap70,n_gt";
