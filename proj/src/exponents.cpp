#include "softcover/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "softcover/errors.hpp"

namespace softcover::exponents {

namespace {

using measures::kInfinity;

constexpr double kTernaryWidth = 1e-9;
constexpr double kCertificateStep = 1e-4;
// ln of a double beyond which exp() overflows.
constexpr double kExpOverflow = 700.0;

// Running log-sum-exp accumulator.
class LogSum {
 public:
  void add(double log_term) {
    if (log_term == -kInfinity) return;
    if (log_term > top_) {
      sum_ = sum_ * std::exp(top_ - log_term) + 1.0;
      top_ = log_term;
    } else {
      sum_ += std::exp(log_term - top_);
    }
  }
  double value() const { return top_ == -kInfinity ? -kInfinity : top_ + std::log(sum_); }

 private:
  double top_ = -kInfinity;
  double sum_ = 0.0;
};

double log_add(double a, double b) {
  LogSum s;
  s.add(a);
  s.add(b);
  return s.value();
}

// C(n + s - 1, s - 1), saturating at `limit + 1`.
std::uint64_t composition_count(std::size_t n, std::size_t s, std::uint64_t limit) {
  if (s <= 1) return 1;
  const std::size_t k = std::min(n, s - 1);
  const std::size_t top = n + s - 1;
  // C(top, k) built incrementally; each prefix is itself a binomial coefficient.
  double acc = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * static_cast<double>(top - k + i) / static_cast<double>(i);
    if (acc > static_cast<double>(limit)) return limit + 1;
  }
  return static_cast<std::uint64_t>(std::llround(acc));
}

double floor_to_step(double x) {
  double g = std::floor(x / kCertificateStep) * kCertificateStep;
  if (g > x) g -= kCertificateStep;
  return g;
}

}  // namespace

PairTypeTable PairTypeTable::from(const measures::JointPair& pair) {
  PairTypeTable table;
  const auto joint = pair.q_uv();
  const std::size_t kv = pair.k_v();
  for (std::size_t u = 0; u < pair.k_u(); ++u) {
    for (std::size_t v = 0; v < kv; ++v) {
      const double q = joint[u * kv + v];
      if (q <= 0.0) continue;
      const double r = std::log2(pair.channel()(v, u) / pair.q_v()[v]);
      table.entries.push_back({u, v, q, r});
      table.mutual_information += q * r;
    }
  }
  return table;
}

double PairTypeTable::max_log_ratio() const {
  double m = -kInfinity;
  for (const auto& e : entries) m = std::max(m, e.log_ratio);
  return m;
}

double LogProbability::value() const { return std::exp(log_value); }

double BoundValue::value() const { return std::exp(log_value); }

double beta_objective(const measures::JointPair& pair, double epsilon, double alpha) {
  const auto product = pair.product_of_marginals();
  const double info = measures::mutual_information(pair);
  return (alpha - 1.0) * (info + epsilon - measures::renyi_divergence(alpha, pair.q_uv(), product));
}

BetaResult beta_exponent(const measures::JointPair& pair, double epsilon, double alpha_max) {
  if (!(epsilon > 0.0)) throw InvalidArgument(fmt::format("epsilon {:.17g} must be positive", epsilon));
  if (!(alpha_max >= 2.0)) throw InvalidArgument("alpha_max must be at least 2");

  const auto table = PairTypeTable::from(pair);
  if (table.max_log_ratio() <= table.mutual_information + epsilon) {
    return {kInfinity, kInfinity};  // no pair sequence can be atypical
  }

  // The objective is concave in alpha: it is a Legendre transform of the
  // log-moment generating function of the information density.
  double lo = 1.0;
  double hi = alpha_max;
  while (hi - lo > kTernaryWidth) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (beta_objective(pair, epsilon, m1) < beta_objective(pair, epsilon, m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  const double alpha_star = 0.5 * (lo + hi);
  return {alpha_star, beta_objective(pair, epsilon, alpha_star)};
}

LogProbability atypical_log_probability_exact(const measures::JointPair& pair, double epsilon,
                                              std::size_t n) {
  if (!(epsilon > 0.0)) throw InvalidArgument(fmt::format("epsilon {:.17g} must be positive", epsilon));
  if (n == 0) throw InvalidArgument("block length must be positive");
  const auto table = PairTypeTable::from(pair);
  const std::size_t s = table.entries.size();
  if (composition_count(n, s, kMaxCompositions) > kMaxCompositions) {
    throw SizeGuardExceeded(fmt::format(
        "joint-type enumeration over {} support pairs at n = {} exceeds 10^7 compositions", s, n));
  }

  std::vector<double> log_q(s);
  std::vector<double> ratio(s);
  for (std::size_t j = 0; j < s; ++j) {
    log_q[j] = std::log(table.entries[j].q_uv);
    ratio[j] = table.entries[j].log_ratio;
  }
  const double threshold = table.mutual_information + epsilon;
  const double log_n_factorial = std::lgamma(static_cast<double>(n) + 1.0);

  // Depth-first over count vectors (k_0, ..., k_{s-1}) summing to n; the weight of
  // a type is the multinomial n! / prod k_j! times prod q_j^{k_j}.
  LogSum total;
  auto visit = [&](auto&& self, std::size_t j, std::size_t remaining, double log_weight,
                   double llr_sum) -> void {
    if (j + 1 == s) {
      const double k = static_cast<double>(remaining);
      const double lw = log_weight + k * log_q[j] - std::lgamma(k + 1.0);
      if (is_atypical(llr_sum + k * ratio[j], n, threshold)) {
        total.add(lw + log_n_factorial);
      }
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      const double k = static_cast<double>(c);
      self(self, j + 1, remaining - c, log_weight + k * log_q[j] - std::lgamma(k + 1.0),
           llr_sum + k * ratio[j]);
    }
  };
  visit(visit, 0, n, 0.0, 0.0);
  return {std::min(0.0, total.value())};
}

double atypical_probability_exact(const measures::JointPair& pair, double epsilon, std::size_t n) {
  return atypical_log_probability_exact(pair, epsilon, n).value();
}

LogProbability chernoff_rhs_mass(std::size_t n, double rate, double beta1) {
  if (rate < beta1) {
    throw InvalidArgument(fmt::format("mass bound needs R >= beta1 (R = {:.17g}, beta1 = {:.17g})",
                                      rate, beta1));
  }
  return {-std::exp2(static_cast<double>(n) * (rate - beta1)) / 3.0};
}

LogProbability chernoff_rhs_ratio(std::size_t n, double rate, double mutual_info, double epsilon,
                                  double beta2) {
  const double exponent = rate - mutual_info - epsilon - 2.0 * beta2;
  if (exponent < 0.0) {
    throw InfeasibleParameters(
        fmt::format("ratio bound needs R - I - epsilon - 2 beta2 >= 0, got {:.17g}", exponent));
  }
  return {-std::exp2(static_cast<double>(n) * exponent) / 3.0};
}

BoundValue union_bound_failure(std::size_t n, double rate, double mutual_info, double epsilon,
                               double beta1, double beta2, std::size_t k_v) {
  const double nd = static_cast<double>(n);
  const double log_mass = chernoff_rhs_mass(n, rate, beta1).log_value;
  const double log_ratio = chernoff_rhs_ratio(n, rate, mutual_info, epsilon, beta2).log_value;
  const double log_alphabet = nd * std::log(static_cast<double>(k_v));

  BoundValue out{};
  out.log_value = log_add(log_mass, log_alphabet + log_ratio);
  out.vacuous = out.log_value > 0.0;

  // ln(-ln U) where U = e^{-x} + e^{-y}, x = -log_mass, y = -(log_alphabet + log_ratio).
  // Both x and y are doubly exponential in n, so work with ln x and ln y.
  const double ln_x = nd * (rate - beta1) * std::numbers::ln2 - std::log(3.0);
  const double ln_y_head = nd * (rate - mutual_info - epsilon - 2.0 * beta2) * std::numbers::ln2 -
                           std::log(3.0);
  double ln_y;
  if (ln_y_head > kExpOverflow) {
    ln_y = ln_y_head;
  } else {
    const double y = std::exp(ln_y_head) - log_alphabet;
    ln_y = y > 0.0 ? std::log(y) : -kInfinity;
  }
  const double lo = std::min(ln_x, ln_y);
  const double hi = std::max(ln_x, ln_y);
  if (lo >= kExpOverflow) {
    out.log_neg_log_value = lo;
  } else if (lo == -kInfinity) {
    out.log_neg_log_value = std::nan("");
  } else {
    const double small = std::exp(lo);
    const double gap = hi >= kExpOverflow ? kInfinity : std::exp(hi) - small;
    const double neg_log = small - std::log1p(std::exp(-gap));
    out.log_neg_log_value = neg_log > 0.0 ? std::log(neg_log) : std::nan("");
  }
  return out;
}

double deterministic_kl_ceiling(std::size_t n, double beta1, double beta2, double q_min) {
  if (!(q_min > 0.0 && q_min <= 1.0)) {
    throw InvalidArgument(fmt::format("q_min {:.17g} outside (0, 1]", q_min));
  }
  const double nd = static_cast<double>(n);
  const double log2e = std::numbers::log2e;
  const double mass = std::exp2(-beta1 * nd);
  const double binary_term = 2.0 * mass * (beta1 * nd + log2e - 1.0);
  const double typical_term = std::exp2(-beta2 * nd) * log2e;
  const double atypical_term = 2.0 * nd * std::log2(1.0 / q_min) * mass;
  return binary_term + typical_term + atypical_term;
}

double log2_deterministic_kl_ceiling(std::size_t n, double beta1, double beta2, double q_min) {
  if (!(q_min > 0.0 && q_min <= 1.0)) {
    throw InvalidArgument(fmt::format("q_min {:.17g} outside (0, 1]", q_min));
  }
  const double nd = static_cast<double>(n);
  const double log2e = std::numbers::log2e;
  auto term = [](double coefficient, double log2_scale) {
    return coefficient > 0.0 ? (std::log2(coefficient) + log2_scale) * std::numbers::ln2 : -kInfinity;
  };
  LogSum s;
  s.add(term(2.0 * (beta1 * nd + log2e - 1.0), -beta1 * nd));
  s.add(term(log2e, -beta2 * nd));
  s.add(term(2.0 * nd * std::log2(1.0 / q_min), -beta1 * nd));
  return s.value() / std::numbers::ln2;
}

void check_parameters(double rate, double mutual_info, double epsilon, double beta, double beta1,
                      double beta2) {
  if (!(epsilon > 0.0)) throw InfeasibleParameters(fmt::format("epsilon {:.17g} must be positive", epsilon));
  if (!(beta1 > 0.0)) throw InfeasibleParameters(fmt::format("beta1 {:.17g} must be positive", beta1));
  if (!(beta2 > 0.0)) throw InfeasibleParameters(fmt::format("beta2 {:.17g} must be positive", beta2));
  if (!(beta1 < beta)) {
    throw InfeasibleParameters(
        fmt::format("beta1 {:.17g} must be below beta {:.17g}", beta1, beta));
  }
  if (!(beta1 < rate)) {
    throw InfeasibleParameters(fmt::format("beta1 {:.17g} must be below R {:.17g}", beta1, rate));
  }
  const double slack = rate - mutual_info - epsilon - 2.0 * beta2;
  if (!(slack > 0.0)) {
    throw InfeasibleParameters(
        fmt::format("R - I - epsilon - 2 beta2 = {:.17g} must be positive", slack));
  }
}

FreeParameters default_parameters(const measures::JointPair& pair, double rate) {
  const double info = measures::mutual_information(pair);
  if (!(rate > info)) {
    throw InfeasibleParameters(
        fmt::format("rate {:.17g} does not exceed I(U;V) = {:.17g}", rate, info));
  }
  FreeParameters p{};
  p.epsilon = (rate - info) / 3.0;
  p.beta2 = (rate - info - p.epsilon) / 4.0;
  const double beta = beta_exponent(pair, p.epsilon).beta;
  p.beta1 = std::min(beta, rate) / 2.0;
  check_parameters(rate, info, p.epsilon, beta, p.beta1, p.beta2);
  return p;
}

double ExponentReport::gamma2_nats() const { return gamma2_bits * std::numbers::ln2; }

ExponentReport rate_certificate(const measures::JointPair& pair, double rate, double epsilon,
                                double beta1, double beta2, std::size_t n_min, std::size_t n_max) {
  if (n_min == 0 || n_max < n_min) throw InvalidArgument("certificate range must satisfy 1 <= n_min <= n_max");
  const double info = measures::mutual_information(pair);
  const auto beta = beta_exponent(pair, epsilon);
  check_parameters(rate, info, epsilon, beta.beta, beta1, beta2);
  const double q_min = pair.q_v().min_positive();
  const std::size_t count = n_max - n_min + 1;

  // Per-n largest admissible exponents; non-positive where the bound is vacuous.
  std::vector<double> g1(count);
  std::vector<double> g2(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = n_min + i;
    const double nd = static_cast<double>(n);
    g1[i] = -log2_deterministic_kl_ceiling(n, beta1, beta2, q_min) / nd;
    const auto u = union_bound_failure(n, rate, info, epsilon, beta1, beta2, pair.k_v());
    g2[i] = (u.vacuous || std::isnan(u.log_neg_log_value))
                ? -kInfinity
                : u.log_neg_log_value / (nd * std::numbers::ln2);
  }

  // Suffix minima: the exponent certified on [n, n_max].
  std::vector<double> tail1(count);
  std::vector<double> tail2(count);
  for (std::size_t i = count; i-- > 0;) {
    tail1[i] = i + 1 < count ? std::min(g1[i], tail1[i + 1]) : g1[i];
    tail2[i] = i + 1 < count ? std::min(g2[i], tail2[i + 1]) : g2[i];
  }

  const double cap = std::min(beta1, beta2);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(tail1[i] > 0.0 && tail2[i] > 0.0)) continue;
    const double gamma1 = floor_to_step(std::min(tail1[i], cap));
    const double gamma2 = floor_to_step(tail2[i]);
    if (gamma1 <= 0.0 || gamma2 <= 0.0) continue;
    ExponentReport r{};
    r.rate = rate;
    r.mutual_information = info;
    r.epsilon = epsilon;
    r.alpha_star = beta.alpha_star;
    r.beta = beta.beta;
    r.beta1 = beta1;
    r.beta2 = beta2;
    r.gamma1_bits = gamma1;
    r.gamma2_bits = gamma2;
    r.n0 = n_min + i;
    r.n_max = n_max;
    return r;
  }
  throw InfeasibleParameters(fmt::format(
      "no positive gamma1/gamma2 can be certified on n in [{}, {}]; widen the range", n_min, n_max));
}

}  // namespace softcover::exponents
