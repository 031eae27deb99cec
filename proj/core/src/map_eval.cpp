#include "fewskel/map_eval.hpp"

#include <algorithm>
#include <map>

#include "fewskel/error.hpp"

namespace fewskel {
namespace {

struct Detection {
  double score;
  bool positive;
};

double ranked_ap(std::vector<Detection> dets, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].positive) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

std::optional<BBox> skeleton_bbox(const Frame2D& frame) {
  std::optional<BBox> box;
  for (const auto& joint : frame) {
    if (!joint) continue;
    const double x = (*joint)[0], y = (*joint)[1];
    if (!box) {
      box = BBox{x, y, x, y};
    } else {
      box->x0 = std::min(box->x0, x);
      box->y0 = std::min(box->y0, y);
      box->x1 = std::max(box->x1, x);
      box->y1 = std::max(box->y1, y);
    }
  }
  return box;
}

double iou(const BBox& a, const BBox& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  return inter / (a.area() + b.area() - inter);
}

MapResult compute_map(const std::vector<ClipRecord>& ground_truth,
                      const std::vector<PredictedClip>& predictions, double iou_threshold) {
  std::map<std::string, const PredictedClip*> by_id;
  for (const PredictedClip& p : predictions) by_id[p.clip.video_id] = &p;

  struct ClassTally {
    std::vector<Detection> detections;
    std::size_t gt_frames = 0;
    std::size_t positives = 0;
    bool all_scored = true;
  };
  std::map<std::string, ClassTally> tallies;

  for (const ClipRecord& gt : ground_truth) {
    if (!gt.joints2d) throw Error(ErrorCode::validation, gt.video_id + " has no 2D ground truth");
    ClassTally& tally = tallies[gt.action];
    const auto it = by_id.find(gt.video_id);
    const PredictedClip* pred = it == by_id.end() ? nullptr : it->second;
    if (pred) {
      if (!pred->clip.joints2d || pred->clip.joints2d->size() != gt.joints2d->size()) {
        throw Error(ErrorCode::frame_mismatch,
                    "prediction for " + gt.video_id + " does not match ground-truth frame count");
      }
      if (pred->confidences && pred->confidences->size() != gt.joints2d->size()) {
        throw Error(ErrorCode::frame_mismatch, "confidence count mismatch for " + gt.video_id);
      }
    }
    if (!pred || !pred->confidences) tally.all_scored = false;

    for (std::size_t f = 0; f < gt.joints2d->size(); ++f) {
      const auto& gt_frame = (*gt.joints2d)[f];
      if (!gt_frame) continue;
      const auto gt_box = skeleton_bbox(*gt_frame);
      if (!gt_box) continue;
      ++tally.gt_frames;
      if (!pred) continue;
      const auto& pf = (*pred->clip.joints2d)[f];
      if (!pf) continue;
      const auto pred_box = skeleton_bbox(*pf);
      if (!pred_box) continue;
      const bool positive = iou(*gt_box, *pred_box) >= iou_threshold;
      if (positive) ++tally.positives;
      tally.detections.push_back({pred->confidences ? (*pred->confidences)[f] : 0.0, positive});
    }
  }

  MapResult result;
  double sum = 0.0;
  for (auto& [label, tally] : tallies) {
    double ap = 0.0;
    if (tally.gt_frames > 0) {
      ap = tally.all_scored ? ranked_ap(tally.detections, tally.gt_frames)
                            : static_cast<double>(tally.positives) / static_cast<double>(tally.gt_frames);
    }
    result.per_class_ap.emplace_back(label, ap);
    sum += ap;
  }
  if (!tallies.empty()) result.map = 100.0 * sum / static_cast<double>(tallies.size());
  return result;
}

}  // namespace fewskel
