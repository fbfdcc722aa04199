//! Greedy non-maximum suppression over oriented boxes.

use super::{bev_iou, OrientedBox3D};

/// Keep boxes greedily by descending confidence; drop any box whose BEV IoU
/// with an already-kept box reaches `iou_threshold`. Confidence ties break
/// toward the smaller input index. Output is in descending-confidence order.
pub fn nms(boxes: &[OrientedBox3D], iou_threshold: f64) -> Vec<OrientedBox3D> {
    debug_assert!(iou_threshold > 0.0 && iou_threshold < 1.0);
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| {
        boxes[b]
            .confidence
            .partial_cmp(&boxes[a].confidence)
            .expect("finite confidence")
            .then(a.cmp(&b))
    });
    let mut kept: Vec<OrientedBox3D> = Vec::new();
    for &i in &order {
        let candidate = &boxes[i];
        if kept.iter().all(|k| bev_iou(k, candidate) < iou_threshold) {
            kept.push(*candidate);
        }
    }
    kept
}
