#include "knockoffs/discrete.hpp"

#include <cmath>
#include <random>
#include <string>

#include "knockoffs/errors.hpp"
#include "knockoffs/rng.hpp"

namespace knockoffs {

namespace {

constexpr double kPmfTol = 1e-12;

void check_sizes(const std::vector<int>& sizes, const char* who) {
  if (sizes.empty() || static_cast<int>(sizes.size()) > kMaxDiscreteFeatures)
    throw ValidationError(std::string(who) + ": need 1.." +
                          std::to_string(kMaxDiscreteFeatures) + " features");
  for (int s : sizes)
    if (s < 2 || s > kMaxDiscreteSupport)
      throw ValidationError(std::string(who) + ": support sizes must be in 2.." +
                            std::to_string(kMaxDiscreteSupport));
}

// Exact sequential table build. Returns the full (x, xt) law, laid out as
// x_index * total + xt_index. The xt prefix grows by appending the newest
// coordinate as the fastest-varying digit, so after the last step the prefix
// index coincides with space.encode(xt).
std::vector<double> scip_table(const DiscreteJoint& joint) {
  const ProductSpace& sp = joint.space;
  const int p = sp.dim();
  const long total = sp.total;

  std::vector<double> cur = joint.pmf;  // (x, prefix) with one prefix cell
  long prefix_count = 1;

  std::vector<double> den;
  for (int j = 0; j < p; ++j) {
    const int sj = sp.sizes[j];
    const long stride = sp.strides[j];

    // Conditioning mass of (x_{-j}, prefix), constant across x_j.
    den.assign(static_cast<std::size_t>(total) * prefix_count, 0.0);
    for (long x = 0; x < total; ++x) {
      const long base = x - ((x / stride) % sj) * stride;  // x with x_j = 0
      for (long t = 0; t < prefix_count; ++t) {
        double s = 0.0;
        for (int a = 0; a < sj; ++a)
          s += cur[static_cast<std::size_t>(base + a * stride) * prefix_count + t];
        den[static_cast<std::size_t>(x) * prefix_count + t] = s;
      }
    }

    std::vector<double> next(static_cast<std::size_t>(total) * prefix_count * sj,
                             0.0);
    for (long x = 0; x < total; ++x) {
      const long base = x - ((x / stride) % sj) * stride;
      for (long t = 0; t < prefix_count; ++t) {
        const double mass = cur[static_cast<std::size_t>(x) * prefix_count + t];
        if (mass == 0.0) continue;  // unreachable branch, skip
        const double d = den[static_cast<std::size_t>(x) * prefix_count + t];
        for (int b = 0; b < sj; ++b) {
          const double num =
              cur[static_cast<std::size_t>(base + b * stride) * prefix_count + t];
          next[(static_cast<std::size_t>(x) * prefix_count + t) * sj + b] =
              mass * (num / d);
        }
      }
    }
    cur.swap(next);
    prefix_count *= sj;
  }
  return cur;
}

void check_marginal(const DiscreteJoint& joint, const std::vector<double>& table,
                    const char* who) {
  const long total = joint.space.total;
  for (long x = 0; x < total; ++x) {
    double s = 0.0;
    for (long xt = 0; xt < total; ++xt)
      s += table[static_cast<std::size_t>(x) * total + xt];
    if (std::abs(s - joint.pmf[static_cast<std::size_t>(x)]) > kPmfTol)
      throw NumericalError(std::string(who) +
                           ": marginal over knockoffs drifted from the input "
                           "joint at configuration " +
                           std::to_string(x));
  }
}

}  // namespace

ProductSpace::ProductSpace(std::vector<int> sizes_in) : sizes(std::move(sizes_in)) {
  check_sizes(sizes, "ProductSpace");
  strides.assign(sizes.size(), 1);
  for (int k = static_cast<int>(sizes.size()) - 2; k >= 0; --k)
    strides[k] = strides[k + 1] * sizes[k + 1];
  total = strides[0] * sizes[0];
}

long ProductSpace::encode(const std::vector<int>& x) const {
  if (x.size() != sizes.size())
    throw ValidationError("ProductSpace::encode: wrong configuration length");
  long idx = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (x[k] < 0 || x[k] >= sizes[k])
      throw ValidationError("ProductSpace::encode: coordinate out of range");
    idx += x[k] * strides[k];
  }
  return idx;
}

void ProductSpace::decode(long index, std::vector<int>& out) const {
  out.resize(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k)
    out[k] = static_cast<int>((index / strides[k]) % sizes[k]);
}

DiscreteJoint::DiscreteJoint(std::vector<int> support_sizes,
                             std::vector<double> pmf_in)
    : space(std::move(support_sizes)), pmf(std::move(pmf_in)) {
  if (static_cast<long>(pmf.size()) != space.total)
    throw ValidationError("DiscreteJoint: pmf length does not match the space");
  double s = 0.0;
  for (double v : pmf) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("DiscreteJoint: pmf entries must be finite and >= 0");
    s += v;
  }
  if (std::abs(s - 1.0) > kPmfTol)
    throw ValidationError("DiscreteJoint: pmf sums to " + std::to_string(s));
}

DiscreteConditional::DiscreteConditional(int j_in,
                                         std::vector<int> support_sizes,
                                         std::vector<double> prob_in)
    : j(j_in), space(std::move(support_sizes)), prob(std::move(prob_in)) {
  if (j < 0 || j >= space.dim())
    throw ValidationError("DiscreteConditional: feature index out of range");
  if (static_cast<long>(prob.size()) != space.total)
    throw ValidationError("DiscreteConditional: table length mismatch");
  const int sj = space.sizes[j];
  const long stride = space.strides[j];
  for (long x = 0; x < space.total; ++x) {
    if (!(prob[static_cast<std::size_t>(x)] >= 0.0) ||
        !std::isfinite(prob[static_cast<std::size_t>(x)]))
      throw ValidationError("DiscreteConditional: entries must be finite, >= 0");
    if ((x / stride) % sj != 0) continue;
    double s = 0.0;
    for (int a = 0; a < sj; ++a)
      s += prob[static_cast<std::size_t>(x + a * stride)];
    if (std::abs(s - 1.0) > kPmfTol)
      throw ValidationError(
          "DiscreteConditional: row does not sum to one at configuration " +
          std::to_string(x));
  }
}

DiscreteMechanism scip_mechanism(const DiscreteJoint& joint) {
  const std::vector<double> table = scip_table(joint);
  const long total = joint.space.total;
  DiscreteMechanism mech{joint.space, std::vector<double>(table.size(), 0.0)};
  for (long x = 0; x < total; ++x) {
    const double px = joint.pmf[static_cast<std::size_t>(x)];
    if (px == 0.0) continue;
    for (long xt = 0; xt < total; ++xt)
      mech.cond[static_cast<std::size_t>(x) * total + xt] =
          table[static_cast<std::size_t>(x) * total + xt] / px;
  }
  return mech;
}

KnockoffJoint apply_mechanism(const DiscreteJoint& joint,
                              const DiscreteMechanism& mech) {
  if (mech.space.sizes != joint.space.sizes)
    throw ValidationError("apply_mechanism: spaces do not match");
  const long total = joint.space.total;
  KnockoffJoint kj{joint.space, std::vector<double>(mech.cond.size(), 0.0)};
  for (long x = 0; x < total; ++x) {
    const double px = joint.pmf[static_cast<std::size_t>(x)];
    if (px == 0.0) continue;
    double row = 0.0;
    for (long xt = 0; xt < total; ++xt)
      row += mech.cond[static_cast<std::size_t>(x) * total + xt];
    if (std::abs(row - 1.0) > 1e-9)
      throw NumericalError(
          "apply_mechanism: mechanism is not a valid conditional at a "
          "configuration the joint gives mass (index " +
          std::to_string(x) + ")");
    for (long xt = 0; xt < total; ++xt)
      kj.pmf[static_cast<std::size_t>(x) * total + xt] =
          px * mech.cond[static_cast<std::size_t>(x) * total + xt];
  }
  return kj;
}

KnockoffJoint scip_knockoffs(const DiscreteJoint& joint) {
  KnockoffJoint kj{joint.space, scip_table(joint)};
  check_marginal(joint, kj.pmf, "scip_knockoffs");
  return kj;
}

DiscreteConditional conditional_from_joint(const DiscreteJoint& joint, int j) {
  const ProductSpace& sp = joint.space;
  if (j < 0 || j >= sp.dim())
    throw ValidationError("conditional_from_joint: feature index out of range");
  const int sj = sp.sizes[j];
  const long stride = sp.strides[j];
  std::vector<double> prob(joint.pmf.size(), 0.0);
  for (long x = 0; x < sp.total; ++x) {
    if ((x / stride) % sj != 0) continue;
    double den = 0.0;
    for (int a = 0; a < sj; ++a)
      den += joint.pmf[static_cast<std::size_t>(x + a * stride)];
    for (int a = 0; a < sj; ++a)
      prob[static_cast<std::size_t>(x + a * stride)] =
          den > 0.0 ? joint.pmf[static_cast<std::size_t>(x + a * stride)] / den
                    : 1.0 / sj;
  }
  return DiscreteConditional(j, sp.sizes, std::move(prob));
}

double check_exchangeability(const KnockoffJoint& kj,
                             const std::vector<int>& swap_set) {
  const ProductSpace& sp = kj.space;
  for (int j : swap_set)
    if (j < 0 || j >= sp.dim())
      throw ValidationError("check_exchangeability: swap index out of range");

  double worst = 0.0;
  std::vector<int> x, xt;
  for (long xi = 0; xi < sp.total; ++xi) {
    sp.decode(xi, x);
    for (long ti = 0; ti < sp.total; ++ti) {
      sp.decode(ti, xt);
      long sx = xi, st = ti;
      for (int j : swap_set) {
        sx += (xt[j] - x[j]) * sp.strides[j];
        st += (x[j] - xt[j]) * sp.strides[j];
      }
      worst = std::max(worst, std::abs(kj.at(xi, ti) - kj.at(sx, st)));
    }
  }
  return worst;
}

LikelihoodRatioSides likelihood_ratio_check(const KnockoffJoint& kj,
                                            const DiscreteConditional& p_cond,
                                            const DiscreteConditional& q_cond,
                                            int j, int a, int b,
                                            std::vector<int> x,
                                            std::vector<int> xt) {
  const ProductSpace& sp = kj.space;
  if (j < 0 || j >= sp.dim())
    throw ValidationError("likelihood_ratio_check: feature index out of range");
  if (a < 0 || a >= sp.sizes[j] || b < 0 || b >= sp.sizes[j])
    throw ValidationError("likelihood_ratio_check: values out of support");
  if (p_cond.j != j || q_cond.j != j)
    throw ValidationError("likelihood_ratio_check: conditionals are for the "
                          "wrong feature");

  x[static_cast<std::size_t>(j)] = a;
  xt[static_cast<std::size_t>(j)] = b;
  const double num = kj.at(sp.encode(x), sp.encode(xt));
  x[static_cast<std::size_t>(j)] = b;
  xt[static_cast<std::size_t>(j)] = a;
  const double den = kj.at(sp.encode(x), sp.encode(xt));
  if (den == 0.0)
    throw NumericalError(
        "likelihood_ratio_check: unidentifiable configuration (zero mass in "
        "the denominator)");

  std::vector<int> xa = x;
  xa[static_cast<std::size_t>(j)] = a;
  std::vector<int> xb = x;
  xb[static_cast<std::size_t>(j)] = b;
  const double rhs_den = q_cond.at(xa) * p_cond.at(xb);
  if (rhs_den == 0.0)
    throw NumericalError(
        "likelihood_ratio_check: unidentifiable configuration (conditional "
        "mass zero)");

  LikelihoodRatioSides sides;
  sides.lhs = num / den;
  sides.rhs = p_cond.at(xa) * q_cond.at(xb) / rhs_den;
  return sides;
}

OracleVerification verify_discrete_oracle(int instances, std::uint64_t seed) {
  if (instances <= 0)
    throw ValidationError("verify_discrete_oracle: instances must be positive");

  auto eng = make_stream(seed, {0x6f7261636cULL});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_joint = [&](const std::vector<int>& sizes) {
    ProductSpace sp(sizes);
    std::vector<double> w(static_cast<std::size_t>(sp.total));
    double s = 0.0;
    // Entries bounded within [0.5, 1.5] before normalization keep every
    // conditional ratio well away from the identifiability cliff.
    for (auto& v : w) {
      v = 0.5 + unif(eng);
      s += v;
    }
    for (auto& v : w) v /= s;
    // Exact renormalization so the constructor tolerance is met.
    double s2 = 0.0;
    for (double v : w) s2 += v;
    w[0] += 1.0 - s2;
    return DiscreteJoint(sizes, std::move(w));
  };

  OracleVerification out;
  out.instances = instances;
  std::uniform_int_distribution<int> pick_p(1, 3);
  std::uniform_int_distribution<int> pick_s(2, 3);

  std::vector<int> x, xt;
  for (int inst = 0; inst < instances; ++inst) {
    const int p = pick_p(eng);
    std::vector<int> sizes(static_cast<std::size_t>(p));
    for (auto& s : sizes) s = pick_s(eng);
    // occasionally stretch one alphabet to the cap - 1
    if (unif(eng) < 0.25) sizes[0] = 4;

    const DiscreteJoint q_joint = random_joint(sizes);
    const DiscreteJoint p_joint = random_joint(sizes);

    // Exchangeability of the sequential construction, every swap subset.
    const KnockoffJoint kj_q = scip_knockoffs(q_joint);
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
      std::vector<int> swap_set;
      for (int j = 0; j < p; ++j)
        if (mask & (1u << j)) swap_set.push_back(j);
      out.max_exchangeability_deviation =
          std::max(out.max_exchangeability_deviation,
                   check_exchangeability(kj_q, swap_set));
    }
    for (long xi = 0; xi < q_joint.space.total; ++xi) {
      double s = 0.0;
      for (long ti = 0; ti < q_joint.space.total; ++ti) s += kj_q.at(xi, ti);
      out.max_marginalization_error =
          std::max(out.max_marginalization_error,
                   std::abs(s - q_joint.pmf[static_cast<std::size_t>(xi)]));
    }

    // Swap ratio identity: data drawn with the true conditional for feature
    // j, knockoffs from the mechanism fit to the estimated joint.
    const DiscreteMechanism mech = scip_mechanism(q_joint);
    const KnockoffJoint kj_p = apply_mechanism(p_joint, mech);
    for (int j = 0; j < p; ++j) {
      const DiscreteConditional pc = conditional_from_joint(p_joint, j);
      const DiscreteConditional qc = conditional_from_joint(q_joint, j);
      for (long xi = 0; xi < p_joint.space.total; ++xi) {
        p_joint.space.decode(xi, x);
        if (x[static_cast<std::size_t>(j)] != 0) continue;  // slot is overwritten below
        for (long ti = 0; ti < p_joint.space.total; ++ti) {
          p_joint.space.decode(ti, xt);
          if (xt[static_cast<std::size_t>(j)] != 0) continue;
          for (int a = 0; a < sizes[static_cast<std::size_t>(j)]; ++a)
            for (int b = 0; b < sizes[static_cast<std::size_t>(j)]; ++b) {
              const auto sides =
                  likelihood_ratio_check(kj_p, pc, qc, j, a, b, x, xt);
              out.max_likelihood_ratio_error =
                  std::max(out.max_likelihood_ratio_error,
                           std::abs(sides.lhs - sides.rhs));
            }
        }
      }
    }
  }
  return out;
}

}  // namespace knockoffs
