#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fewskel/clip.hpp"

namespace fewskel {

struct BBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double area() const noexcept { return (x1 - x0) * (y1 - y0); }
};

/// Axis-aligned min/max box over the labeled joints of a frame (no padding).
std::optional<BBox> skeleton_bbox(const Frame2D& frame);

/// Intersection over union; boxes with zero area give 0.
double iou(const BBox& a, const BBox& b);

struct PredictedClip {
  ClipRecord clip;
  std::optional<std::vector<double>> confidences;  // per frame
};

struct MapResult {
  double map = 0.0;  // percent
  std::vector<std::pair<std::string, double>> per_class_ap;  // in [0, 1], by label
};

/// Per gt frame, the predicted skeleton's box is a true positive when its IoU
/// with the ground-truth box reaches the threshold. A class whose predictions
/// all carry confidences is scored by the area under its ranked
/// precision-recall curve (all-point interpolation); otherwise AP is the
/// fraction of true-positive frames. mAP averages classes.
MapResult compute_map(const std::vector<ClipRecord>& ground_truth,
                      const std::vector<PredictedClip>& predictions, double iou_threshold = 0.5);

}  // namespace fewskel
