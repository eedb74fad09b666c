#pragma once

#include "mfg/dynamics.hpp"

#include <vector>

namespace mfg {

/// Expected transition discrepancies E_{c, M_i(ref)}[sum_h ||P_i,h - P_j,h||_1] for every
/// candidate policy c and ordered member pair (i, j), all frozen at one reference policy.
///
/// Built once per elimination call. Rows are streamed one state at a time so the
/// per-pair kernels are never stored in full.
class DiscrepancyTable {
 public:
  DiscrepancyTable(const ConditionedClass& cc, std::vector<int> members,
                   std::vector<Policy> candidates);

  struct Argmax {
    double value = 0.0;
    int candidate = 0;
    int first = 0;   // class index
    int second = 0;  // class index
  };

  /// Max over candidates and ordered pairs drawn from `survivors`; ties go to the
  /// lexicographically smallest (candidate, first, second). A singleton yields value 0.
  Argmax max_over(const std::vector<int>& survivors) const;

  double value(int candidate, int first, int second) const;
  int candidates() const { return static_cast<int>(candidates_.size()); }
  const std::vector<int>& members() const { return members_; }

 private:
  int local(int class_index) const;

  std::vector<int> members_;
  std::vector<int> local_of_;
  std::vector<Policy> candidates_;
  std::vector<double> values_;  // [i][j][c]
};

}  // namespace mfg
