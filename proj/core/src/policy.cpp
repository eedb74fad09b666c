#include "mfg/policy.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace mfg {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << "(H=" << shape.horizon << ", S=" << shape.states << ", A=" << shape.actions << ")";
  return out.str();
}

Policy::Policy(const Shape& shape)
    : steps_(shape.horizon, RowMatrix::Zero(shape.states, shape.actions)) {}

Policy::Policy(std::vector<RowMatrix> steps) : steps_(std::move(steps)) {
  for (const auto& m : steps_) {
    if (m.rows() != steps_.front().rows() || m.cols() != steps_.front().cols()) {
      throw ConfigError("policy steps must share the same S x A shape");
    }
  }
}

Policy Policy::uniform(const Shape& shape) {
  Policy p(shape);
  for (auto& m : p.steps_) m.setConstant(1.0 / shape.actions);
  return p;
}

Policy Policy::constant_action(const Shape& shape, int action) {
  if (action < 0 || action >= shape.actions) throw ConfigError("action index out of range");
  Policy p(shape);
  for (auto& m : p.steps_) m.col(action).setOnes();
  return p;
}

Policy Policy::deterministic(const Shape& shape, const std::vector<std::vector<int>>& actions) {
  if (static_cast<int>(actions.size()) != shape.horizon) {
    throw ConfigError("deterministic policy needs one action list per step");
  }
  Policy p(shape);
  for (int h = 0; h < shape.horizon; ++h) {
    if (static_cast<int>(actions[h].size()) != shape.states) {
      throw ConfigError("deterministic policy needs one action per state");
    }
    for (int s = 0; s < shape.states; ++s) {
      const int a = actions[h][s];
      if (a < 0 || a >= shape.actions) throw ConfigError("action index out of range");
      p.steps_[h](s, a) = 1.0;
    }
  }
  return p;
}

Shape Policy::shape() const { return Shape{horizon(), states(), actions()}; }

void Policy::validate(double tol) const {
  for (int h = 0; h < horizon(); ++h) {
    const auto& m = steps_[h];
    if ((m.array() < 0.0).any()) {
      throw ConfigError("policy has a negative entry at step " + std::to_string(h));
    }
    for (int s = 0; s < m.rows(); ++s) {
      if (std::abs(m.row(s).sum() - 1.0) > tol) {
        throw ConfigError("policy row (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                          ") does not sum to 1");
      }
    }
  }
}

bool Policy::is_deterministic() const {
  for (const auto& m : steps_) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = m.data()[i];
      if (v != 0.0 && v != 1.0) return false;
    }
  }
  return true;
}

Policy Policy::mix(const Policy& other, double alpha) const {
  if (shape() != other.shape()) throw ConfigError("cannot mix policies of different shape");
  Policy out = *this;
  for (int h = 0; h < horizon(); ++h) {
    out.steps_[h] = (1.0 - alpha) * steps_[h] + alpha * other.steps_[h];
  }
  return out;
}

std::uint64_t Policy::content_hash() const {
  std::uint64_t hash = 1469598103934665603ULL;
  auto feed = [&hash](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  const Shape s = shape();
  feed(&s.horizon, sizeof(int));
  feed(&s.states, sizeof(int));
  feed(&s.actions, sizeof(int));
  for (const auto& m : steps_) feed(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return hash;
}

bool operator==(const Policy& a, const Policy& b) {
  if (a.shape() != b.shape()) return false;
  for (int h = 0; h < a.horizon(); ++h) {
    if (a.steps_[h] != b.steps_[h]) return false;
  }
  return true;
}

double policy_distance(const Policy& p, const Policy& q) {
  if (p.shape() != q.shape()) throw ConfigError("policy_distance: shape mismatch");
  double best = 0.0;
  for (int h = 0; h < p.horizon(); ++h) {
    const Vector rows = (p.step(h) - q.step(h)).cwiseAbs().rowwise().sum();
    if (rows.size() > 0) best = std::max(best, rows.maxCoeff());
  }
  return best;
}

}  // namespace mfg
