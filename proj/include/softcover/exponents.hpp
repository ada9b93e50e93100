#pragma once

// Large-deviation exponent of the information density, the exact atypicality
// probability it bounds, the closed-form concentration bounds on a random
// codebook, and rate certificates built from them.
//
// Rates are in bits per symbol. Doubly-exponential quantities are carried as
// natural logarithms because they underflow as plain doubles almost at once.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "softcover/measures.hpp"

namespace softcover::exponents {

inline constexpr double kDefaultAlphaMax = 64.0;
inline constexpr std::uint64_t kMaxCompositions = 10'000'000;

/// Absolute per-letter slack on the typicality threshold. Sums of log-ratios are
/// accumulated in different orders by different callers; a tie must stay typical.
inline constexpr double kTieSlack = 1e-12;

/// True when an information-density sum over n letters exceeds n * threshold,
/// i.e. the pair of sequences falls outside the jointly-typical set.
inline bool is_atypical(double llr_sum, std::size_t n, double threshold) {
  const double nd = static_cast<double>(n);
  return llr_sum > nd * threshold + nd * kTieSlack;
}

/// Per-letter information density r(u,v) = log2(Q(v|u) / Q_V(v)) on the joint support.
struct PairTypeTable {
  struct Entry {
    std::size_t u;
    std::size_t v;
    double q_uv;
    double log_ratio;
  };
  std::vector<Entry> entries;
  double mutual_information = 0.0;

  static PairTypeTable from(const measures::JointPair& pair);
  double max_log_ratio() const;
};

/// A probability that may be far below the smallest double.
struct LogProbability {
  double log_value;  ///< natural log; -inf for zero
  double value() const;
};

/// Chernoff/union-bound right-hand side; `vacuous` when it exceeds 1.
struct BoundValue {
  double log_value;          ///< ln of the bound
  double log_neg_log_value;  ///< ln(-ln bound); meaningful only when the bound is < 1
  bool vacuous;
  double value() const;
};

struct BetaResult {
  double alpha_star;  ///< +inf when the atypical set is empty
  double beta;        ///< bits/symbol, +inf when the atypical set is empty
};

/// (alpha - 1) (I + epsilon - D_alpha(Q_UV || Q_U Q_V)) at a given order.
double beta_objective(const measures::JointPair& pair, double epsilon, double alpha);

/// Maximizes beta_objective over alpha in (1, alpha_max].
BetaResult beta_exponent(const measures::JointPair& pair, double epsilon,
                         double alpha_max = kDefaultAlphaMax);

/// P(sum_i r(U_i, V_i) > n (I + epsilon)) under Q_UV^n, by enumerating joint types.
double atypical_probability_exact(const measures::JointPair& pair, double epsilon, std::size_t n);
LogProbability atypical_log_probability_exact(const measures::JointPair& pair, double epsilon,
                                              std::size_t n);

/// exp(-(1/3) 2^{n (R - beta1)}): bound on P(atypical mass >= 2 * 2^{-beta1 n}).
LogProbability chernoff_rhs_mass(std::size_t n, double rate, double beta1);
/// exp(-(1/3) 2^{n (R - I - epsilon - 2 beta2)}): bound on P(D_1(v^n) >= 1 + 2^{-beta2 n}) per v^n.
LogProbability chernoff_rhs_ratio(std::size_t n, double rate, double mutual_info, double epsilon,
                                  double beta2);
/// chernoff_rhs_mass + k_v^n * chernoff_rhs_ratio.
BoundValue union_bound_failure(std::size_t n, double rate, double mutual_info, double epsilon,
                               double beta1, double beta2, std::size_t k_v);

/// Sum of the three closed-form term bounds on D(P_{V^n|C} || Q_V^n) for codebooks
/// in the good set, in bits.
double deterministic_kl_ceiling(std::size_t n, double beta1, double beta2, double q_min);
/// log2 of deterministic_kl_ceiling, accurate after the plain value underflows.
double log2_deterministic_kl_ceiling(std::size_t n, double beta1, double beta2, double q_min);

struct FreeParameters {
  double epsilon;
  double beta1;
  double beta2;
};

/// epsilon = (R - I)/3, beta2 = (R - I - epsilon)/4, beta1 = min(beta(epsilon), R)/2.
/// Throws InfeasibleParameters when R <= I.
FreeParameters default_parameters(const measures::JointPair& pair, double rate);

struct ExponentReport {
  double rate;
  double mutual_information;
  double epsilon;
  double alpha_star;
  double beta;
  double beta1;
  double beta2;
  double gamma1_bits;
  double gamma2_bits;
  std::size_t n0;
  std::size_t n_max;

  double gamma2_nats() const;
};

/// Throws InfeasibleParameters when the rate constraints fail (beta1 >= beta, beta1 >= R,
/// R - I - epsilon - 2 beta2 <= 0, negative betas).
void check_parameters(double rate, double mutual_info, double epsilon, double beta, double beta1,
                      double beta2);

/// Certifies gamma1 and gamma2 numerically on [n0, n_max].
///
/// n0 is the first n after which, up to n_max, the KL ceiling is below 1 bit and the
/// union bound is below 1/e (so both certified exponents are positive). gamma1 is the
/// largest multiple of 1e-4, capped at min(beta1, beta2), with
///   ceiling(n) <= 2^{-gamma1 n};
/// gamma2 is the largest multiple of 1e-4 with
///   union_bound(n) <= exp(-e^{gamma2 ln2 n}),
/// both for every n in [n0, n_max]. If either rounds down to 0 at that n0, n0 advances.
/// Throws InfeasibleParameters if no such n0 exists in range.
ExponentReport rate_certificate(const measures::JointPair& pair, double rate, double epsilon,
                                double beta1, double beta2, std::size_t n_min, std::size_t n_max);

}  // namespace softcover::exponents
