#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

/// Raised when caller-supplied inputs violate a precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computed quantity breaks an invariant that should hold by construction.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Horizon and per-step state/action counts. Steps are indexed 0..horizon-1.
struct Shape {
  int horizon = 0;
  int states = 0;
  int actions = 0;

  int rows() const { return states * actions; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

/// Non-stationary Markov policy: one row-stochastic S x A matrix per step.
class Policy {
 public:
  Policy() = default;
  explicit Policy(const Shape& shape);  // all zeros, fill before use
  explicit Policy(std::vector<RowMatrix> steps);

  static Policy uniform(const Shape& shape);
  static Policy constant_action(const Shape& shape, int action);
  /// actions[h][s] is the action taken at step h in state s.
  static Policy deterministic(const Shape& shape, const std::vector<std::vector<int>>& actions);

  Shape shape() const;
  int horizon() const { return static_cast<int>(steps_.size()); }
  int states() const { return steps_.empty() ? 0 : static_cast<int>(steps_.front().rows()); }
  int actions() const { return steps_.empty() ? 0 : static_cast<int>(steps_.front().cols()); }

  RowMatrix& step(int h) { return steps_[h]; }
  const RowMatrix& step(int h) const { return steps_[h]; }
  double operator()(int h, int s, int a) const { return steps_[h](s, a); }

  /// Throws ConfigError unless every row is nonnegative and sums to 1 within tol.
  void validate(double tol = 1e-9) const;
  bool is_deterministic() const;

  /// (1 - alpha) * this + alpha * other.
  Policy mix(const Policy& other, double alpha) const;

  /// FNV-1a over the raw entries; equal policies hash equally.
  std::uint64_t content_hash() const;

  friend bool operator==(const Policy& a, const Policy& b);

 private:
  std::vector<RowMatrix> steps_;
};

/// max over (h, s) of the l1 distance between action rows.
double policy_distance(const Policy& p, const Policy& q);

/// State distributions mu_1..mu_H induced by a policy.
using DensityFlow = std::vector<Vector>;

}  // namespace mfg
