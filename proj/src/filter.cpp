#include "knockoffs/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "knockoffs/errors.hpp"

namespace knockoffs {

namespace {

void validate_inputs(const Eigen::VectorXd& w, double q) {
  if (w.size() == 0) throw ValidationError("filter: empty W vector");
  if (!w.allFinite()) throw ValidationError("filter: W has non-finite entries");
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("filter: q must be in (0,1)");
}

SelectionResult scan(const Eigen::VectorXd& w, double q, FilterVariant variant) {
  validate_inputs(w, q);

  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w(j) != 0.0) candidates.push_back(std::abs(w(j)));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  SelectionResult out;
  out.variant = variant;
  out.q = q;
  out.threshold = std::numeric_limits<double>::infinity();

  for (double t : candidates) {
    long neg = 0, pos = 0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      if (w(j) <= -t) ++neg;
      if (w(j) >= t) ++pos;
    }
    const double num = variant == FilterVariant::knockoff_plus
                           ? static_cast<double>(1 + neg)
                           : static_cast<double>(neg);
    // 0/0 counts as 0; a positive numerator over zero is infeasible.
    double ratio;
    if (pos == 0)
      ratio = num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    else
      ratio = num / static_cast<double>(pos);
    if (ratio <= q) {
      out.threshold = t;
      break;
    }
  }

  if (std::isfinite(out.threshold))
    for (Eigen::Index j = 0; j < w.size(); ++j)
      if (w(j) >= out.threshold) out.selected.push_back(static_cast<int>(j));
  return out;
}

}  // namespace

SelectionResult knockoff_threshold(const Eigen::VectorXd& w, double q) {
  return scan(w, q, FilterVariant::knockoff);
}

SelectionResult knockoff_plus_threshold(const Eigen::VectorXd& w, double q) {
  return scan(w, q, FilterVariant::knockoff_plus);
}

SelectionResult apply_filter(const Eigen::VectorXd& w, double q,
                             FilterVariant variant) {
  return scan(w, q, variant);
}

std::vector<double> leave_one_out_thresholds(const Eigen::VectorXd& w, double q,
                                             FilterVariant variant) {
  std::vector<double> out(static_cast<std::size_t>(w.size()));
  Eigen::VectorXd mod = w;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double keep = mod(j);
    mod(j) = std::abs(keep);
    out[static_cast<std::size_t>(j)] = scan(mod, q, variant).threshold;
    mod(j) = keep;
  }
  return out;
}

TjCheckOutcome check_tj_property(const Eigen::VectorXd& w, double q,
                                 FilterVariant variant) {
  const std::vector<double> t = leave_one_out_thresholds(w, q, variant);
  TjCheckOutcome out;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    for (Eigen::Index k = j + 1; k < w.size(); ++k) {
      const double m = std::min(t[static_cast<std::size_t>(j)],
                                t[static_cast<std::size_t>(k)]);
      if (w(j) <= -m && w(k) <= -m &&
          t[static_cast<std::size_t>(j)] != t[static_cast<std::size_t>(k)]) {
        out.passed = false;
        out.j = static_cast<int>(j);
        out.k = static_cast<int>(k);
        return out;
      }
    }
  }
  return out;
}

}  // namespace knockoffs
