#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dynagg {

/// Dataset-level confusion counts. Rows index ground truth, columns index
/// prediction. Metrics are always derived from the accumulated matrix —
/// never from averaging per-scene scores — so rare classes weigh in by
/// their point counts.
struct ConfusionMatrix {
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::vector<std::string> class_names;  // optional; empty or one per class

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(Eigen::Index num_classes);

  Eigen::Index num_classes() const { return counts.rows(); }

  /// Adds one point-wise labelled scene. Throws ShapeError on length
  /// mismatch or a label outside [0, num_classes).
  void accumulate(const std::vector<std::uint32_t>& truth,
                  const std::vector<std::uint32_t>& pred);

  /// Element-wise merge of a matrix accumulated elsewhere (e.g. another
  /// worker); addition is commutative, so merge order never matters.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

/// IoU_c = TP / (TP + FP + FN). Classes that never occur in truth or
/// prediction have an empty denominator and stay undefined — they are
/// excluded from the mean rather than padded with 0 or 1.
std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm);

/// accuracy_c = TP / (TP + FN), defined only for classes with ground-truth
/// presence.
std::vector<std::optional<double>> accuracy_per_class(const ConfusionMatrix& cm);

/// Mean over the defined per-class IoU values. A class predicted but never
/// true counts as 0 here (it has FP > 0). Throws if no class is defined.
double mean_iou(const ConfusionMatrix& cm);

/// Mean per-class accuracy over classes present in the ground truth.
/// Predicted-but-never-true classes are excluded: mA conditions on truth.
/// Throws if no class is present.
double mean_class_accuracy(const ConfusionMatrix& cm);

/// Report as a JSON object: per-class iou/accuracy (null when undefined)
/// plus mean_iou and mean_class_accuracy.
std::string metrics_report_json(const ConfusionMatrix& cm);

/// Report as an aligned text table (class, IoU, accuracy) followed by the
/// two summary rows.
std::string metrics_report_text(const ConfusionMatrix& cm);

}  // namespace dynagg
