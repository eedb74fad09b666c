#include "mfg/kernel.hpp"

#include <algorithm>

namespace mfg {

StepKernel StepKernel::dense(RowMatrix probabilities) {
  StepKernel k;
  k.factored_ = false;
  k.left_ = std::move(probabilities);
  return k;
}

StepKernel StepKernel::factored(RowMatrix left, RowMatrix right) {
  if (left.cols() != right.rows()) throw ConfigError("factored kernel: inner dimensions differ");
  StepKernel k;
  k.factored_ = true;
  k.left_ = std::move(left);
  k.right_ = std::move(right);
  return k;
}

Vector StepKernel::push_forward(const Vector& row_weights) const {
  if (factored_) {
    const Vector inner = left_.transpose() * row_weights;
    return right_.transpose() * inner;
  }
  return left_.transpose() * row_weights;
}

Vector StepKernel::expect(const Vector& next_values) const {
  if (factored_) {
    const Vector inner = right_ * next_values;
    return left_ * inner;
  }
  return left_ * next_values;
}

double StepKernel::prob(Eigen::Index row, Eigen::Index next) const {
  if (factored_) return left_.row(row).dot(right_.col(next));
  return left_(row, next);
}

Vector StepKernel::row(Eigen::Index r) const {
  if (factored_) return (left_.row(r) * right_).transpose();
  return left_.row(r).transpose();
}

RowMatrix StepKernel::to_dense() const {
  if (factored_) return left_ * right_;
  return left_;
}

Vector row_l1_distances(const StepKernel& a, const StepKernel& b) {
  if (a.rows() != b.rows() || a.next_states() != b.next_states()) {
    throw ConfigError("row_l1_distances: kernel shapes differ");
  }
  const Eigen::Index rows = a.rows();
  Vector out(rows);
  if (!a.is_factored() && !b.is_factored()) {
    out = (a.left() - b.left()).cwiseAbs().rowwise().sum();
    return out;
  }
  if (a.is_factored() && b.is_factored()) {
    // Materialise the difference a block of rows at a time to bound memory.
    constexpr Eigen::Index kChunk = 512;
    RowMatrix diff;
    for (Eigen::Index r0 = 0; r0 < rows; r0 += kChunk) {
      const Eigen::Index n = std::min(kChunk, rows - r0);
      diff.noalias() = a.left().middleRows(r0, n) * a.right();
      diff.noalias() -= b.left().middleRows(r0, n) * b.right();
      out.segment(r0, n) = diff.cwiseAbs().rowwise().sum();
    }
    return out;
  }
  out = (a.to_dense() - b.to_dense()).cwiseAbs().rowwise().sum();
  return out;
}

}  // namespace mfg
