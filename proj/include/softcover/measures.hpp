#pragma once

// Finite-alphabet distributions, channels and information measures.
// Every quantity is in bits.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace softcover::measures {

inline constexpr double kSumTolerance = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Largest dense vector over an n-fold product alphabet we are willing to build.
inline constexpr std::uint64_t kMaxTensorEntries = std::uint64_t{1} << 26;

/// Probability mass function over {0, ..., k-1}. Validated on construction, never renormalized.
class ProbVector {
 public:
  /// Throws InvalidArgument on empty input, a negative or non-finite entry,
  /// or a sum farther than kSumTolerance from 1. Negative zero is stored as +0.
  static ProbVector from(std::vector<double> raw);

  static ProbVector uniform(std::size_t k);
  static ProbVector point_mass(std::size_t k, std::size_t at);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }
  std::vector<std::size_t> support() const;
  /// Smallest strictly positive entry.
  double min_positive() const;

 private:
  explicit ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

/// Row-stochastic conditional distribution Q_{V|U}; row u is the law of V given U = u.
class Channel {
 public:
  explicit Channel(std::vector<ProbVector> rows);
  /// Convenience: validates each raw row.
  static Channel from(const std::vector<std::vector<double>>& rows);

  static Channel binary_symmetric(double crossover);
  static Channel identity(std::size_t k);
  /// Every row equals `row`: output independent of input.
  static Channel constant(const ProbVector& row, std::size_t input_size);

  std::size_t input_size() const noexcept { return rows_.size(); }
  std::size_t output_size() const noexcept { return rows_.front().size(); }
  const ProbVector& row(std::size_t u) const { return rows_.at(u); }
  double operator()(std::size_t v, std::size_t u) const { return rows_[u][v]; }

 private:
  std::vector<ProbVector> rows_;
};

/// Input law plus channel, with the derived output marginal and joint law.
class JointPair {
 public:
  JointPair(ProbVector q_u, Channel q_v_given_u);

  const ProbVector& q_u() const noexcept { return q_u_; }
  const Channel& channel() const noexcept { return channel_; }
  const ProbVector& q_v() const noexcept { return q_v_; }
  /// Row-major joint mass, index u * k_v + v.
  std::span<const double> q_uv() const noexcept { return q_uv_; }
  /// Row-major product of marginals q_u(u) q_v(v).
  std::vector<double> product_of_marginals() const;

  std::size_t k_u() const noexcept { return q_u_.size(); }
  std::size_t k_v() const noexcept { return q_v_.size(); }

 private:
  ProbVector q_u_;
  Channel channel_;
  ProbVector q_v_;
  std::vector<double> q_uv_;
};

ProbVector validate_distribution(std::vector<double> raw);

double entropy(const ProbVector& p);
/// h(x) for x in [0, 1]; throws InvalidArgument outside.
double binary_entropy(double x);
double mutual_information(const JointPair& pair);

/// D(p || q) over raw mass vectors. Throws SupportError if p(x) > 0 = q(x).
double kl_divergence(std::span<const double> p, std::span<const double> q);
/// Half L1 distance. Both inputs must sum to 1 within kSumTolerance.
double total_variation(std::span<const double> p, std::span<const double> q);
/// Order-alpha Renyi divergence; alpha = 1 is KL and alpha = +inf is the max log-ratio.
double renyi_divergence(double alpha, std::span<const double> p, std::span<const double> q);

ProbVector output_marginal(const ProbVector& q_u, const Channel& channel);

/// k^n, or 0 when the result would exceed `limit`.
std::uint64_t checked_power(std::uint64_t k, std::size_t n, std::uint64_t limit);

/// Mass of every length-n sequence under the i.i.d. law p, big-endian index order.
/// Throws SizeGuardExceeded when k^n > kMaxTensorEntries.
std::vector<double> tensor_power(const ProbVector& p, std::size_t n);

}  // namespace softcover::measures
