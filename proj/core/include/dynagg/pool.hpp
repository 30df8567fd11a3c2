#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "dynagg/index.hpp"

namespace dynagg {

enum class FeatureSpace { point, node };

/// Dense feature block tagged with the space it lives in. Row count must
/// match the tagged space's cardinality in the index matrix it is used
/// with.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  FeatureSpace space = FeatureSpace::point;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

enum class AggregateFn { semi_average, mean, max };
enum class PropagateFn { max, mean };

struct PoolChoice {
  AggregateFn aggregate = AggregateFn::semi_average;
  PropagateFn propagate = PropagateFn::max;
};

/// Per-(node, channel) winning point index retained by max aggregation;
/// -1 marks an empty node. The backward pass routes gradient only through
/// these saved winners, never by recomputation.
struct AggregateContext {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> argmax;
};

/// Per-(point, channel) winning slot of the point's index row under max
/// propagation.
struct PropagateContext {
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> arg_slot;
};

/// Point space -> node space. Per node j and channel c:
///   semi_average: sum of indexed point features / g  (global divisor)
///   mean:         sum / T_j, zero when T_j = 0
///   max:          channel-wise max, zero when T_j = 0
/// A node no point indexes therefore emits the zero vector under every
/// choice; under semi_average that falls out of the empty sum.
FeatureMatrix aggregate(const FeatureMatrix& features, const IndexMatrix& index,
                        AggregateFn fn, AggregateContext* ctx = nullptr);

/// Adjoint of aggregate. For max, `ctx` must come from the matching
/// forward call.
FeatureMatrix aggregate_backward(const FeatureMatrix& grad_out,
                                 const IndexMatrix& index, AggregateFn fn,
                                 const AggregateContext* ctx = nullptr);

/// Node space -> point space over each point's K_eff indexed nodes:
/// channel-wise max (winning slot saved in ctx) or mean.
FeatureMatrix propagate(const FeatureMatrix& features, const IndexMatrix& index,
                        PropagateFn fn, PropagateContext* ctx = nullptr);

/// Adjoint of propagate. For max, `ctx` must come from the matching
/// forward call.
FeatureMatrix propagate_backward(const FeatureMatrix& grad_out,
                                 const IndexMatrix& index, PropagateFn fn,
                                 const PropagateContext* ctx = nullptr);

std::string to_string(AggregateFn fn);
std::string to_string(PropagateFn fn);

}  // namespace dynagg
