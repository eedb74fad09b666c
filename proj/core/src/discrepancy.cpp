#include "mfg/discrepancy.hpp"

#include <algorithm>
#include <tuple>

namespace mfg {

DiscrepancyTable::DiscrepancyTable(const ConditionedClass& cc, std::vector<int> members,
                                   std::vector<Policy> candidates)
    : members_(std::move(members)), candidates_(std::move(candidates)) {
  if (members_.empty()) throw ConfigError("discrepancy table needs members");
  if (candidates_.empty()) throw ConfigError("discrepancy table needs candidate policies");
  const Shape& shape = cc.models().shape();
  const int H = shape.horizon;
  const int S = shape.states;
  const int A = shape.actions;
  const int M = static_cast<int>(members_.size());
  const int C = static_cast<int>(candidates_.size());

  local_of_.assign(cc.models().size(), -1);
  for (int k = 0; k < M; ++k) {
    if (local_of_[members_[k]] != -1) throw ConfigError("discrepancy table: duplicate member");
    local_of_[members_[k]] = k;
  }
  for (const auto& c : candidates_) {
    if (c.shape() != shape) throw ConfigError("discrepancy table: candidate shape mismatch");
  }
  values_.assign(static_cast<std::size_t>(M) * M * C, 0.0);
  if (M < 2) return;

  // occ[(h * S + s) * M * C + m * C + c]: probability of state s at step h under candidate c in member m.
  std::vector<double> occ(static_cast<std::size_t>(H) * S * M * C);
  for (int m = 0; m < M; ++m) {
    const FrozenDynamics& dyn = cc.frozen(members_[m]);
    for (int c = 0; c < C; ++c) {
      const DensityFlow flow = state_flow(dyn, candidates_[c]);
      for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
          occ[(static_cast<std::size_t>(h) * S + s) * M * C + static_cast<std::size_t>(m) * C + c] =
              flow[h](s);
        }
      }
    }
  }

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) pairs.emplace_back(i, j);
  }
  const int P = static_cast<int>(pairs.size());

  RowMatrix rows_buffer(static_cast<Eigen::Index>(M) * A, S);  // member-major kernel rows of one state
  Eigen::MatrixXd disc(A, P);                                   // column p: per-action l1 distance
  Eigen::MatrixXd weights(C, A);
  Eigen::MatrixXd expected(C, P);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int m = 0; m < M; ++m) {
        const StepKernel& k = cc.frozen(members_[m]).steps[h].kernel;
        const Eigen::Index r0 = static_cast<Eigen::Index>(s) * A;
        if (k.is_factored()) {
          rows_buffer.middleRows(static_cast<Eigen::Index>(m) * A, A).noalias() =
              k.left().middleRows(r0, A) * k.right();
        } else {
          rows_buffer.middleRows(static_cast<Eigen::Index>(m) * A, A) = k.left().middleRows(r0, A);
        }
      }
      for (int p = 0; p < P; ++p) {
        const auto bi = rows_buffer.middleRows(static_cast<Eigen::Index>(pairs[p].first) * A, A);
        const auto bj = rows_buffer.middleRows(static_cast<Eigen::Index>(pairs[p].second) * A, A);
        disc.col(p) = (bi - bj).cwiseAbs().rowwise().sum();
      }
      for (int c = 0; c < C; ++c) weights.row(c) = candidates_[c].step(h).row(s);
      expected.noalias() = weights * disc;
      const double* occ_hs = &occ[(static_cast<std::size_t>(h) * S + s) * M * C];
      for (int p = 0; p < P; ++p) {
        const auto [i, j] = pairs[p];
        const double* y = expected.col(p).data();
        const double* oi = occ_hs + static_cast<std::size_t>(i) * C;
        const double* oj = occ_hs + static_cast<std::size_t>(j) * C;
        double* vij = &values_[(static_cast<std::size_t>(i) * M + j) * C];
        double* vji = &values_[(static_cast<std::size_t>(j) * M + i) * C];
        for (int c = 0; c < C; ++c) {
          vij[c] += oi[c] * y[c];
          vji[c] += oj[c] * y[c];
        }
      }
    }
  }
}

int DiscrepancyTable::local(int class_index) const {
  if (class_index < 0 || class_index >= static_cast<int>(local_of_.size()) ||
      local_of_[class_index] < 0) {
    throw ConfigError("discrepancy table: model is not a member");
  }
  return local_of_[class_index];
}

double DiscrepancyTable::value(int candidate, int first, int second) const {
  const std::size_t M = members_.size();
  const std::size_t C = candidates_.size();
  return values_[(static_cast<std::size_t>(local(first)) * M + local(second)) * C + candidate];
}

DiscrepancyTable::Argmax DiscrepancyTable::max_over(const std::vector<int>& survivors) const {
  Argmax best;
  if (survivors.empty()) throw ConfigError("discrepancy table: no survivors");
  best.first = best.second = survivors.front();
  bool found = false;
  const int C = static_cast<int>(candidates_.size());
  std::vector<int> sorted = survivors;
  std::sort(sorted.begin(), sorted.end());
  for (int c = 0; c < C; ++c) {
    for (int i : sorted) {
      for (int j : sorted) {
        if (i == j) continue;
        const double v = value(c, i, j);
        if (!found || v > best.value) {
          best = Argmax{v, c, i, j};
          found = true;
        }
      }
    }
  }
  return best;
}

}  // namespace mfg
