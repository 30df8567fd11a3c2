#include "dynagg/metrics.hpp"

#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "dynagg/errors.hpp"

namespace dynagg {

namespace {

struct ClassTally {
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

std::vector<ClassTally> tally(const ConfusionMatrix& cm) {
  const Eigen::Index c = cm.num_classes();
  std::vector<ClassTally> out(static_cast<std::size_t>(c));
  for (Eigen::Index t = 0; t < c; ++t)
    for (Eigen::Index p = 0; p < c; ++p) {
      const std::uint64_t n = cm.counts(t, p);
      if (t == p) {
        out[static_cast<std::size_t>(t)].tp += n;
      } else {
        out[static_cast<std::size_t>(t)].fn += n;
        out[static_cast<std::size_t>(p)].fp += n;
      }
    }
  return out;
}

std::string class_label(const ConfusionMatrix& cm, Eigen::Index c) {
  if (static_cast<std::size_t>(c) < cm.class_names.size())
    return cm.class_names[static_cast<std::size_t>(c)];
  return "class_" + std::to_string(c);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(Eigen::Index num_classes) {
  if (num_classes < 1)
    throw ShapeError("confusion matrix needs at least one class");
  counts.setZero(num_classes, num_classes);
}

void ConfusionMatrix::accumulate(const std::vector<std::uint32_t>& truth,
                                 const std::vector<std::uint32_t>& pred) {
  if (truth.size() != pred.size())
    throw ShapeError("truth and prediction label arrays differ in length");
  const auto c = static_cast<std::uint32_t>(num_classes());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= c || pred[i] >= c)
      throw ShapeError("label out of range at point " + std::to_string(i));
    ++counts(truth[i], pred[i]);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes() != num_classes())
    throw ShapeError("cannot merge confusion matrices of different sizes");
  counts += other.counts;
  return *this;
}

std::vector<std::optional<double>> iou_per_class(const ConfusionMatrix& cm) {
  const auto tallies = tally(cm);
  std::vector<std::optional<double>> out(tallies.size());
  for (std::size_t c = 0; c < tallies.size(); ++c) {
    const std::uint64_t denom = tallies[c].tp + tallies[c].fp + tallies[c].fn;
    if (denom > 0)
      out[c] = static_cast<double>(tallies[c].tp) / static_cast<double>(denom);
  }
  return out;
}

std::vector<std::optional<double>> accuracy_per_class(
    const ConfusionMatrix& cm) {
  const auto tallies = tally(cm);
  std::vector<std::optional<double>> out(tallies.size());
  for (std::size_t c = 0; c < tallies.size(); ++c) {
    const std::uint64_t present = tallies[c].tp + tallies[c].fn;
    if (present > 0)
      out[c] =
          static_cast<double>(tallies[c].tp) / static_cast<double>(present);
  }
  return out;
}

double mean_iou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& v : iou_per_class(cm))
    if (v) {
      sum += *v;
      ++defined;
    }
  if (defined == 0)
    throw ShapeError("mean IoU undefined: no class occurs in the matrix");
  return sum / static_cast<double>(defined);
}

double mean_class_accuracy(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& v : accuracy_per_class(cm))
    if (v) {
      sum += *v;
      ++defined;
    }
  if (defined == 0)
    throw ShapeError(
        "mean class accuracy undefined: no class present in ground truth");
  return sum / static_cast<double>(defined);
}

std::string metrics_report_json(const ConfusionMatrix& cm) {
  const auto ious = iou_per_class(cm);
  const auto accs = accuracy_per_class(cm);
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < cm.num_classes(); ++c) {
    nlohmann::json entry;
    entry["name"] = class_label(cm, c);
    const auto idx = static_cast<std::size_t>(c);
    entry["iou"] = ious[idx] ? nlohmann::json(*ious[idx]) : nullptr;
    entry["accuracy"] = accs[idx] ? nlohmann::json(*accs[idx]) : nullptr;
    j["classes"].push_back(entry);
  }
  j["mean_iou"] = mean_iou(cm);
  j["mean_class_accuracy"] = mean_class_accuracy(cm);
  return j.dump(2);
}

std::string metrics_report_text(const ConfusionMatrix& cm) {
  const auto ious = iou_per_class(cm);
  const auto accs = accuracy_per_class(cm);
  std::size_t name_width = 5;  // "class"
  for (Eigen::Index c = 0; c < cm.num_classes(); ++c)
    name_width = std::max(name_width, class_label(cm, c).size());

  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_width) + 2) << "class"
     << std::right << std::setw(10) << "IoU" << std::setw(10) << "acc"
     << "\n";
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream c;
    if (v)
      c << std::fixed << std::setprecision(4) << *v;
    else
      c << "-";
    return c.str();
  };
  for (Eigen::Index c = 0; c < cm.num_classes(); ++c) {
    const auto idx = static_cast<std::size_t>(c);
    os << std::left << std::setw(static_cast<int>(name_width) + 2)
       << class_label(cm, c) << std::right << std::setw(10) << cell(ious[idx])
       << std::setw(10) << cell(accs[idx]) << "\n";
  }
  os << std::fixed << std::setprecision(4);
  os << "mIoU " << mean_iou(cm) << "\n";
  os << "mA   " << mean_class_accuracy(cm) << "\n";
  return os.str();
}

}  // namespace dynagg
