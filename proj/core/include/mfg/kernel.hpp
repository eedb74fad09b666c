#pragma once

#include "mfg/policy.hpp"

#include <vector>

namespace mfg {

/// Transition matrix of one step with the density argument already fixed.
///
/// Rows are indexed by s * A + a, columns by next state. Two storage modes:
/// a dense SA x S matrix, or a nonnegative low-rank product left * right
/// (SA x d times d x S) whose rows already sum to one. All operations are
/// exact for both modes; the factored mode only changes the cost.
class StepKernel {
 public:
  StepKernel() = default;

  static StepKernel dense(RowMatrix probabilities);
  static StepKernel factored(RowMatrix left, RowMatrix right);

  bool is_factored() const { return factored_; }
  Eigen::Index rows() const { return left_.rows(); }
  Eigen::Index next_states() const { return factored_ ? right_.cols() : left_.cols(); }

  /// next(s') = sum_r weights(r) * P(s' | r).
  Vector push_forward(const Vector& row_weights) const;
  /// out(r) = sum_s' P(s' | r) * values(s').
  Vector expect(const Vector& next_values) const;
  double prob(Eigen::Index row, Eigen::Index next) const;
  Vector row(Eigen::Index row) const;
  RowMatrix to_dense() const;

  const RowMatrix& left() const { return left_; }
  const RowMatrix& right() const { return right_; }

 private:
  bool factored_ = false;
  RowMatrix left_;   // dense probabilities when !factored_
  RowMatrix right_;
};

/// Per-row l1 distance ||P_a(.|r) - P_b(.|r)||_1 for two kernels of equal shape.
Vector row_l1_distances(const StepKernel& a, const StepKernel& b);

struct FrozenStep {
  StepKernel kernel;
  Vector reward;  // indexed s * A + a
};

/// A finite-horizon MDP obtained by freezing every density argument.
struct FrozenDynamics {
  Shape shape;
  Vector initial;
  std::vector<FrozenStep> steps;
};

}  // namespace mfg
