#include "softcover/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "softcover/errors.hpp"

namespace softcover::measures {

namespace {

void require_same_length(std::span<const double> p, std::span<const double> q, const char* what) {
  if (p.size() != q.size()) {
    throw InvalidArgument(fmt::format("{}: length mismatch ({} vs {})", what, p.size(), q.size()));
  }
}

void require_unit_sum(std::span<const double> p, const char* what) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidArgument(fmt::format("{}: masses sum to {:.17g}, not 1", what, total));
  }
}

// log(sum exp(x_i)) over finite entries; -inf for an empty sum.
double log_sum_exp(std::span<const double> xs) {
  double top = -kInfinity;
  for (double x : xs) top = std::max(top, x);
  if (top == -kInfinity) return -kInfinity;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - top);
  return top + std::log(s);
}

}  // namespace

ProbVector ProbVector::from(std::vector<double> raw) {
  if (raw.empty()) throw InvalidArgument("distribution is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double& x = raw[i];
    if (!std::isfinite(x)) throw InvalidArgument(fmt::format("entry {} is not finite", i));
    if (x < 0.0) throw InvalidArgument(fmt::format("entry {} is negative ({:.17g})", i, x));
    if (x == 0.0) x = 0.0;  // drops the sign of -0.0
    total += x;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidArgument(fmt::format("distribution sums to {:.17g}, not 1", total));
  }
  return ProbVector(std::move(raw));
}

ProbVector ProbVector::uniform(std::size_t k) {
  if (k == 0) throw InvalidArgument("uniform distribution over an empty alphabet");
  return ProbVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbVector ProbVector::point_mass(std::size_t k, std::size_t at) {
  if (at >= k) throw InvalidArgument("point mass outside the alphabet");
  std::vector<double> p(k, 0.0);
  p[at] = 1.0;
  return ProbVector(std::move(p));
}

std::vector<std::size_t> ProbVector::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] > 0.0) out.push_back(i);
  }
  return out;
}

double ProbVector::min_positive() const {
  double m = kInfinity;
  for (double x : probs_) {
    if (x > 0.0) m = std::min(m, x);
  }
  return m;
}

Channel::Channel(std::vector<ProbVector> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw InvalidArgument("channel has no input symbols");
  const std::size_t k_v = rows_.front().size();
  for (std::size_t u = 0; u < rows_.size(); ++u) {
    if (rows_[u].size() != k_v) {
      throw InvalidArgument(
          fmt::format("channel row {} has {} outputs, expected {}", u, rows_[u].size(), k_v));
    }
  }
}

Channel Channel::from(const std::vector<std::vector<double>>& rows) {
  std::vector<ProbVector> validated;
  validated.reserve(rows.size());
  for (const auto& r : rows) validated.push_back(ProbVector::from(r));
  return Channel(std::move(validated));
}

Channel Channel::binary_symmetric(double crossover) {
  return from({{1.0 - crossover, crossover}, {crossover, 1.0 - crossover}});
}

Channel Channel::identity(std::size_t k) {
  std::vector<ProbVector> rows;
  for (std::size_t u = 0; u < k; ++u) rows.push_back(ProbVector::point_mass(k, u));
  return Channel(std::move(rows));
}

Channel Channel::constant(const ProbVector& row, std::size_t input_size) {
  return Channel(std::vector<ProbVector>(input_size, row));
}

JointPair::JointPair(ProbVector q_u, Channel q_v_given_u)
    : q_u_(std::move(q_u)),
      channel_(std::move(q_v_given_u)),
      q_v_(output_marginal(q_u_, channel_)) {
  const std::size_t ku = k_u();
  const std::size_t kv = k_v();
  q_uv_.resize(ku * kv);
  for (std::size_t u = 0; u < ku; ++u) {
    for (std::size_t v = 0; v < kv; ++v) q_uv_[u * kv + v] = q_u_[u] * channel_(v, u);
  }
}

std::vector<double> JointPair::product_of_marginals() const {
  const std::size_t kv = k_v();
  std::vector<double> out(k_u() * kv);
  for (std::size_t u = 0; u < k_u(); ++u) {
    for (std::size_t v = 0; v < kv; ++v) out[u * kv + v] = q_u_[u] * q_v_[v];
  }
  return out;
}

ProbVector validate_distribution(std::vector<double> raw) { return ProbVector::from(std::move(raw)); }

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double x : p.values()) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidArgument(fmt::format("binary entropy argument {:.17g} outside [0, 1]", x));
  }
  double h = 0.0;
  if (x > 0.0) h -= x * std::log2(x);
  if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
  return h;
}

double mutual_information(const JointPair& pair) {
  const auto joint = pair.q_uv();
  const std::size_t kv = pair.k_v();
  double info = 0.0;
  for (std::size_t u = 0; u < pair.k_u(); ++u) {
    for (std::size_t v = 0; v < kv; ++v) {
      const double q = joint[u * kv + v];
      if (q > 0.0) info += q * std::log2(pair.channel()(v, u) / pair.q_v()[v]);
    }
  }
  return info;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q, "kl_divergence");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw SupportError("kl_divergence: p is not absolutely continuous w.r.t. q", i);
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return d;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q, "total_variation");
  require_unit_sum(p, "total_variation");
  require_unit_sum(q, "total_variation");
  double l1 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * l1);
}

double renyi_divergence(double alpha, std::span<const double> p, std::span<const double> q) {
  if (!(alpha > 0.0)) throw InvalidArgument(fmt::format("Renyi order {:.17g} is not positive", alpha));
  require_same_length(p, q, "renyi_divergence");
  if (alpha == 1.0) return kl_divergence(p, q);

  if (std::isinf(alpha)) {
    double worst = -kInfinity;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      if (q[i] <= 0.0) throw SupportError("renyi_divergence: support violation at order inf", i);
      worst = std::max(worst, std::log2(p[i] / q[i]));
    }
    return worst;
  }

  // log p^a q^(1-a), summed in log space so large orders cannot overflow.
  std::vector<double> logs;
  logs.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      if (alpha > 1.0) throw SupportError("renyi_divergence: support violation for order > 1", i);
      continue;  // q^(1-a) = 0 for a < 1
    }
    logs.push_back(alpha * std::log(p[i]) + (1.0 - alpha) * std::log(q[i]));
  }
  const double lse = log_sum_exp(logs);
  if (lse == -kInfinity) return kInfinity;  // disjoint supports, a < 1
  return lse / ((alpha - 1.0) * std::numbers::ln2);
}

ProbVector output_marginal(const ProbVector& q_u, const Channel& channel) {
  if (q_u.size() != channel.input_size()) {
    throw InvalidArgument(fmt::format("input law has {} symbols but channel has {} rows", q_u.size(),
                                      channel.input_size()));
  }
  std::vector<double> q_v(channel.output_size(), 0.0);
  for (std::size_t u = 0; u < q_u.size(); ++u) {
    if (q_u[u] == 0.0) continue;
    for (std::size_t v = 0; v < q_v.size(); ++v) q_v[v] += q_u[u] * channel(v, u);
  }
  return ProbVector::from(std::move(q_v));
}

std::uint64_t checked_power(std::uint64_t k, std::size_t n, std::uint64_t limit) {
  std::uint64_t acc = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (k != 0 && acc > limit / k) return 0;
    acc *= k;
  }
  return acc <= limit ? acc : 0;
}

std::vector<double> tensor_power(const ProbVector& p, std::size_t n) {
  if (n == 0) throw InvalidArgument("tensor_power: n must be positive");
  const std::uint64_t entries = checked_power(p.size(), n, kMaxTensorEntries);
  if (entries == 0) {
    throw SizeGuardExceeded(
        fmt::format("{}^{} outcomes exceed the 2^26 dense-vector guard", p.size(), n));
  }
  // Appending one letter at a time keeps the first letter most significant.
  std::vector<double> out{1.0};
  out.reserve(entries);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> next(out.size() * p.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      for (std::size_t a = 0; a < p.size(); ++a) next[j * p.size() + a] = out[j] * p[a];
    }
    out.swap(next);
  }
  return out;
}

}  // namespace softcover::measures
