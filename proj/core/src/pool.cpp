#include "dynagg/pool.hpp"

#include "dynagg/errors.hpp"

namespace dynagg {

namespace {

void require(const FeatureMatrix& f, FeatureSpace space, std::uint32_t rows,
             const char* op) {
  if (f.space != space)
    throw ShapeError(std::string(op) + ": feature matrix tagged with the "
                                       "wrong space");
  if (f.rows() != static_cast<Eigen::Index>(rows))
    throw ShapeError(std::string(op) + ": feature rows (" +
                     std::to_string(f.rows()) + ") do not match index (" +
                     std::to_string(rows) + ")");
}

}  // namespace

FeatureMatrix aggregate(const FeatureMatrix& features, const IndexMatrix& index,
                        AggregateFn fn, AggregateContext* ctx) {
  require(features, FeatureSpace::point, index.n, "aggregate");
  const Eigen::Index channels = features.channels();
  FeatureMatrix out;
  out.space = FeatureSpace::node;
  out.values = Eigen::MatrixXd::Zero(index.m, channels);
  if (ctx) {
    ctx->argmax.resize(index.m, channels);
    ctx->argmax.setConstant(-1);
  }

  for (std::uint32_t j = 0; j < index.m; ++j) {
    const auto& members = index.inverse[j];
    if (members.empty()) continue;  // detached node stays silent
    switch (fn) {
      case AggregateFn::semi_average: {
        for (std::uint32_t i : members)
          out.values.row(j) += features.values.row(i);
        out.values.row(j) /= index.g;
        break;
      }
      case AggregateFn::mean: {
        for (std::uint32_t i : members)
          out.values.row(j) += features.values.row(i);
        out.values.row(j) /= static_cast<double>(members.size());
        break;
      }
      case AggregateFn::max: {
        for (Eigen::Index c = 0; c < channels; ++c) {
          std::uint32_t best = members.front();
          double best_value = features.values(best, c);
          for (std::uint32_t i : members) {
            const double v = features.values(i, c);
            if (v > best_value) {  // members ascend, so ties keep the
              best_value = v;      // lowest point index
              best = i;
            }
          }
          out.values(j, c) = best_value;
          if (ctx) ctx->argmax(j, c) = best;
        }
        break;
      }
    }
  }
  return out;
}

FeatureMatrix aggregate_backward(const FeatureMatrix& grad_out,
                                 const IndexMatrix& index, AggregateFn fn,
                                 const AggregateContext* ctx) {
  require(grad_out, FeatureSpace::node, index.m, "aggregate_backward");
  const Eigen::Index channels = grad_out.channels();
  FeatureMatrix grad_in;
  grad_in.space = FeatureSpace::point;
  grad_in.values = Eigen::MatrixXd::Zero(index.n, channels);

  switch (fn) {
    case AggregateFn::semi_average: {
      for (std::uint32_t j = 0; j < index.m; ++j)
        for (std::uint32_t i : index.inverse[j])
          grad_in.values.row(i) += grad_out.values.row(j) / index.g;
      break;
    }
    case AggregateFn::mean: {
      for (std::uint32_t j = 0; j < index.m; ++j) {
        const auto& members = index.inverse[j];
        if (members.empty()) continue;
        const double inv = 1.0 / static_cast<double>(members.size());
        for (std::uint32_t i : members)
          grad_in.values.row(i) += grad_out.values.row(j) * inv;
      }
      break;
    }
    case AggregateFn::max: {
      if (!ctx || ctx->argmax.rows() != static_cast<Eigen::Index>(index.m) ||
          ctx->argmax.cols() != channels)
        throw ShapeError("aggregate_backward(max): missing or mismatched "
                         "forward context");
      for (std::uint32_t j = 0; j < index.m; ++j)
        for (Eigen::Index c = 0; c < channels; ++c) {
          const std::int64_t i = ctx->argmax(j, c);
          if (i >= 0) grad_in.values(i, c) += grad_out.values(j, c);
        }
      break;
    }
  }
  return grad_in;
}

FeatureMatrix propagate(const FeatureMatrix& features, const IndexMatrix& index,
                        PropagateFn fn, PropagateContext* ctx) {
  require(features, FeatureSpace::node, index.m, "propagate");
  const Eigen::Index channels = features.channels();
  FeatureMatrix out;
  out.space = FeatureSpace::point;
  out.values.resize(index.n, channels);
  if (ctx && fn == PropagateFn::max) ctx->arg_slot.resize(index.n, channels);

  for (std::uint32_t i = 0; i < index.n; ++i) {
    switch (fn) {
      case PropagateFn::max: {
        for (Eigen::Index c = 0; c < channels; ++c) {
          std::int32_t best_slot = 0;
          double best_value = features.values(index.at(i, 0), c);
          for (std::uint32_t s = 1; s < index.k_eff; ++s) {
            const double v = features.values(index.at(i, s), c);
            if (v > best_value) {  // strict: ties keep the lowest slot
              best_value = v;
              best_slot = static_cast<std::int32_t>(s);
            }
          }
          out.values(i, c) = best_value;
          if (ctx) ctx->arg_slot(i, c) = best_slot;
        }
        break;
      }
      case PropagateFn::mean: {
        out.values.row(i).setZero();
        for (std::uint32_t s = 0; s < index.k_eff; ++s)
          out.values.row(i) += features.values.row(index.at(i, s));
        out.values.row(i) /= static_cast<double>(index.k_eff);
        break;
      }
    }
  }
  return out;
}

FeatureMatrix propagate_backward(const FeatureMatrix& grad_out,
                                 const IndexMatrix& index, PropagateFn fn,
                                 const PropagateContext* ctx) {
  require(grad_out, FeatureSpace::point, index.n, "propagate_backward");
  const Eigen::Index channels = grad_out.channels();
  FeatureMatrix grad_in;
  grad_in.space = FeatureSpace::node;
  grad_in.values = Eigen::MatrixXd::Zero(index.m, channels);

  // Sequential scatter in point order keeps the accumulation
  // deterministic.
  switch (fn) {
    case PropagateFn::max: {
      if (!ctx || ctx->arg_slot.rows() != static_cast<Eigen::Index>(index.n) ||
          ctx->arg_slot.cols() != channels)
        throw ShapeError("propagate_backward(max): missing or mismatched "
                         "forward context");
      for (std::uint32_t i = 0; i < index.n; ++i)
        for (Eigen::Index c = 0; c < channels; ++c) {
          const std::uint32_t j =
              index.at(i, static_cast<std::uint32_t>(ctx->arg_slot(i, c)));
          grad_in.values(j, c) += grad_out.values(i, c);
        }
      break;
    }
    case PropagateFn::mean: {
      const double inv = 1.0 / static_cast<double>(index.k_eff);
      for (std::uint32_t i = 0; i < index.n; ++i)
        for (std::uint32_t s = 0; s < index.k_eff; ++s)
          grad_in.values.row(index.at(i, s)) += grad_out.values.row(i) * inv;
      break;
    }
  }
  return grad_in;
}

std::string to_string(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::semi_average: return "semi_average";
    case AggregateFn::mean: return "mean";
    case AggregateFn::max: return "max";
  }
  return "?";
}

std::string to_string(PropagateFn fn) {
  switch (fn) {
    case PropagateFn::max: return "max";
    case PropagateFn::mean: return "mean";
  }
  return "?";
}

}  // namespace dynagg
