#pragma once

#include <Eigen/Dense>
#include <vector>

namespace knockoffs {

enum class FilterVariant { knockoff, knockoff_plus };

// Data-dependent threshold and the features at or above it. threshold is
// either one of the nonzero |W_j| or +infinity (empty selection).
struct SelectionResult {
  double threshold = 0.0;
  std::vector<int> selected;  // 0-based, ascending
  FilterVariant variant = FilterVariant::knockoff;
  double q = 0.0;
};

// Scans the sorted nonzero magnitudes of W for the smallest t whose estimated
// false discovery proportion #{W_j <= -t} / #{W_j >= t} (0/0 counts as 0)
// is at most q. Selected set: {j : W_j >= t}.
SelectionResult knockoff_threshold(const Eigen::VectorXd& w, double q);

// Same scan with the inflated count (1 + #{W_j <= -t}) / #{W_j >= t}.
SelectionResult knockoff_plus_threshold(const Eigen::VectorXd& w, double q);

SelectionResult apply_filter(const Eigen::VectorXd& w, double q,
                             FilterVariant variant);

// T_j: the threshold recomputed after forcing W_j to |W_j|.
std::vector<double> leave_one_out_thresholds(const Eigen::VectorXd& w, double q,
                                             FilterVariant variant);

// Checks the pairwise consistency property of the leave-one-out thresholds:
// whenever W_j and W_k both sit at or below -min(T_j, T_k), then T_j = T_k.
struct TjCheckOutcome {
  bool passed = true;
  int j = -1;  // first violating pair when failed
  int k = -1;
};
TjCheckOutcome check_tj_property(const Eigen::VectorXd& w, double q,
                                 FilterVariant variant);

}  // namespace knockoffs
