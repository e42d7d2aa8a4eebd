#pragma once

#include <cstdint>
#include <vector>

namespace knockoffs {

// Exact enumeration backend for small discrete models. Everything here is a
// flattened pmf over a mixed-radix product space; sizes are capped so tables
// stay enumerable.
inline constexpr int kMaxDiscreteFeatures = 4;
inline constexpr int kMaxDiscreteSupport = 5;

// Row-major index arithmetic: last coordinate varies fastest.
struct ProductSpace {
  std::vector<int> sizes;
  std::vector<long> strides;
  long total = 1;

  explicit ProductSpace(std::vector<int> sizes_in);
  long encode(const std::vector<int>& x) const;
  void decode(long index, std::vector<int>& out) const;
  int dim() const { return static_cast<int>(sizes.size()); }
};

// Joint pmf over p features. Entries nonnegative, sum to one within 1e-12.
struct DiscreteJoint {
  ProductSpace space;
  std::vector<double> pmf;

  DiscreteJoint(std::vector<int> support_sizes, std::vector<double> pmf_in);
  int dim() const { return space.dim(); }
  double at(const std::vector<int>& x) const { return pmf[space.encode(x)]; }
};

// Conditional table for one feature, stored over the full product space:
// prob[x] is P(X_j = x_j | X_{-j} = x_{-j}). Rows over x_j sum to one.
struct DiscreteConditional {
  int j = 0;
  ProductSpace space;
  std::vector<double> prob;

  DiscreteConditional(int j_in, std::vector<int> support_sizes,
                      std::vector<double> prob_in);
  double at(const std::vector<int>& x) const { return prob[space.encode(x)]; }
};

// Conditional knockoff mechanism P(X~ = xt | X = x) as an exact table over
// the doubled space. Only defined on the support of the joint it was built
// from; rows off that support are meaningless.
struct DiscreteMechanism {
  ProductSpace space;        // original p features
  std::vector<double> cond;  // index = x * space.total + xt

  double at(long x_index, long xt_index) const {
    return cond[static_cast<std::size_t>(x_index) *
                    static_cast<std::size_t>(space.total) +
                static_cast<std::size_t>(xt_index)];
  }
};

// Joint law of (X, X~) over the doubled space.
struct KnockoffJoint {
  ProductSpace space;        // original p features
  std::vector<double> pmf;   // index = x * space.total + xt

  double at(long x_index, long xt_index) const {
    return pmf[static_cast<std::size_t>(x_index) *
                   static_cast<std::size_t>(space.total) +
               static_cast<std::size_t>(xt_index)];
  }
};

// Sequential conditional construction: feature by feature, X~_j is drawn from
// the law of X_j given (X_{-j}, X~_{1:j-1}) under the input joint, by exact
// table arithmetic. Zero-mass conditioning branches are skipped.
DiscreteMechanism scip_mechanism(const DiscreteJoint& joint);

// Pushes a joint through a mechanism: pmf(x, xt) = joint(x) * mech(xt | x).
// Fails if the mechanism is unnormalized somewhere the joint has mass.
KnockoffJoint apply_mechanism(const DiscreteJoint& joint,
                              const DiscreteMechanism& mech);

// scip_mechanism + apply_mechanism on the same joint. The marginal over X~
// equals the input joint; enforced within 1e-12.
KnockoffJoint scip_knockoffs(const DiscreteJoint& joint);

// Extracts P(X_j | X_{-j}) from a joint. Conditioning events with zero mass
// get a uniform row so the table stays normalized.
DiscreteConditional conditional_from_joint(const DiscreteJoint& joint, int j);

// Max over configurations of |pmf(x, xt) - pmf(swapped)| where the swap
// exchanges x_j and xt_j for every j in swap_set.
double check_exchangeability(const KnockoffJoint& kj,
                             const std::vector<int>& swap_set);

// Both sides of the conditional swap ratio for feature j at values (a, b),
// holding the rest of (x, xt) fixed. lhs comes from the exact (X, X~) joint,
// rhs from the two one-feature conditionals. Entries of x and xt at
// position j are ignored.
struct LikelihoodRatioSides {
  double lhs = 0.0;
  double rhs = 0.0;
};
LikelihoodRatioSides likelihood_ratio_check(const KnockoffJoint& kj,
                                            const DiscreteConditional& p_cond,
                                            const DiscreteConditional& q_cond,
                                            int j, int a, int b,
                                            std::vector<int> x,
                                            std::vector<int> xt);

// Randomized self-check used by the verify subcommand and the test suite:
// random strictly positive joints, full swap-subset sweeps, and ratio
// comparisons across all identifiable configurations.
struct OracleVerification {
  int instances = 0;
  double max_exchangeability_deviation = 0.0;
  double max_likelihood_ratio_error = 0.0;
  double max_marginalization_error = 0.0;

  bool passed() const {
    return max_exchangeability_deviation <= 1e-12 &&
           max_likelihood_ratio_error <= 1e-10 &&
           max_marginalization_error <= 1e-12;
  }
};
OracleVerification verify_discrete_oracle(int instances, std::uint64_t seed);

}  // namespace knockoffs
