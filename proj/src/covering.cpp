#include "softcover/covering.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "softcover/errors.hpp"
#include "softcover/exponents.hpp"
#include "softcover/rng.hpp"

namespace softcover::covering {

namespace {

std::uint64_t output_space_size(const measures::JointPair& pair, std::size_t n) {
  const std::uint64_t size = measures::checked_power(pair.k_v(), n, measures::kMaxTensorEntries);
  if (size == 0) {
    throw SizeGuardExceeded(
        fmt::format("output space {}^{} exceeds the 2^26 dense-vector guard", pair.k_v(), n));
  }
  return size;
}

void check_alphabet(const measures::JointPair& pair, const Codebook& codebook) {
  if (codebook.alphabet() != pair.k_u()) {
    throw InvalidArgument(fmt::format("codebook alphabet {} does not match channel input size {}",
                                      codebook.alphabet(), pair.k_u()));
  }
}

// Expands one word into its n-letter output law and information density.
// Letters are appended left to right, so every entry's product and sum are
// formed in the same order no matter which caller runs the expansion.
class WordExpander {
 public:
  WordExpander(const measures::JointPair& pair, std::size_t n)
      : kv_(pair.k_v()), ku_(pair.k_u()), size_(output_space_size(pair, n)) {
    prob_.resize(size_);
    llr_.resize(size_);
    scratch_prob_.resize(size_);
    scratch_llr_.resize(size_);
    letter_prob_.resize(ku_ * kv_);
    letter_llr_.resize(ku_ * kv_);
    for (std::size_t u = 0; u < ku_; ++u) {
      for (std::size_t v = 0; v < kv_; ++v) {
        const double w = pair.channel()(v, u);
        letter_prob_[u * kv_ + v] = w;
        letter_llr_[u * kv_ + v] =
            w > 0.0 ? std::log2(w / pair.q_v()[v]) : -measures::kInfinity;
      }
    }
  }

  void expand(std::span<const std::uint32_t> word) {
    std::size_t len = 1;
    prob_[0] = 1.0;
    llr_[0] = 0.0;
    for (std::uint32_t u : word) {
      const double* wp = &letter_prob_[u * kv_];
      const double* wl = &letter_llr_[u * kv_];
      for (std::size_t j = 0; j < len; ++j) {
        for (std::size_t v = 0; v < kv_; ++v) {
          scratch_prob_[j * kv_ + v] = prob_[j] * wp[v];
          scratch_llr_[j * kv_ + v] = llr_[j] + wl[v];
        }
      }
      len *= kv_;
      std::swap(prob_, scratch_prob_);
      std::swap(llr_, scratch_llr_);
    }
  }

  std::size_t size() const { return size_; }
  double prob(std::size_t i) const { return prob_[i]; }
  double llr(std::size_t i) const { return llr_[i]; }

 private:
  std::size_t kv_;
  std::size_t ku_;
  std::size_t size_;
  std::vector<double> prob_, llr_, scratch_prob_, scratch_llr_;
  std::vector<double> letter_prob_, letter_llr_;
};

SubDistribution empty_sub(const measures::JointPair& pair, std::size_t n, std::size_t size) {
  SubDistribution s;
  s.alphabet = pair.k_v();
  s.n = n;
  s.mass.assign(size, 0.0);
  return s;
}

void finish(SubDistribution& s, double weight) {
  double total = 0.0;
  for (double& m : s.mass) {
    m *= weight;
    total += m;
  }
  s.total = total;
}

struct Accumulated {
  SubDistribution induced;
  TypicalitySplit split;
};

Accumulated accumulate(const measures::JointPair& pair, const Codebook& codebook, double epsilon,
                       bool with_split) {
  check_alphabet(pair, codebook);
  const std::size_t n = codebook.n();
  WordExpander expander(pair, n);
  const std::size_t size = expander.size();
  const double threshold = measures::mutual_information(pair) + epsilon;

  Accumulated acc{empty_sub(pair, n, size), {}};
  if (with_split) acc.split = {empty_sub(pair, n, size), empty_sub(pair, n, size)};

  for (std::uint64_t m = 0; m < codebook.size(); ++m) {
    expander.expand(codebook.word(m));
    for (std::size_t i = 0; i < size; ++i) {
      const double p = expander.prob(i);
      if (p == 0.0) continue;
      acc.induced.mass[i] += p;
      if (!with_split) continue;
      if (exponents::is_atypical(expander.llr(i), n, threshold)) {
        acc.split.atypical.mass[i] += p;
      } else {
        acc.split.typical.mass[i] += p;
      }
    }
  }
  const double weight = 1.0 / static_cast<double>(codebook.size());
  finish(acc.induced, weight);
  if (with_split) {
    finish(acc.split.typical, weight);
    finish(acc.split.atypical, weight);
  }
  return acc;
}

// sum over the support of sub of sub * log2(sub / q).
double weighted_log_ratio(const SubDistribution& sub, std::span<const double> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < sub.mass.size(); ++i) {
    if (sub.mass[i] <= 0.0) continue;
    if (target[i] <= 0.0) throw SupportError("sub-distribution has mass on a Q_V^n-null sequence", i);
    s += sub.mass[i] * std::log2(sub.mass[i] / target[i]);
  }
  return s;
}

DecompositionReport decompose(const Accumulated& acc, std::span<const double> target) {
  DecompositionReport r;
  r.mass_p2 = std::clamp(acc.split.atypical.total, 0.0, 1.0);
  // h(P1 total) = h(P2 total); the atypical total is exact when it is zero or tiny.
  r.term_h = measures::binary_entropy(r.mass_p2);
  r.term_1 = weighted_log_ratio(acc.split.typical, target);
  r.term_2 = weighted_log_ratio(acc.split.atypical, target);
  r.kl_exact = measures::kl_divergence(acc.induced.mass, target);
  r.tv_exact = measures::total_variation(acc.induced.mass, target);
  return r;
}

MembershipReport membership(const measures::JointPair& pair, const TypicalitySplit& split,
                            std::size_t n, double beta1, double beta2) {
  const double nd = static_cast<double>(n);
  MembershipReport r;
  r.mass_p2 = split.atypical.total;
  r.mass_threshold = 2.0 * std::exp2(-beta1 * nd);
  r.mass_ok = r.mass_p2 < r.mass_threshold;

  r.max_ratio1 = density_ratio(split.typical, pair).max();
  r.ratio1_threshold = 1.0 + std::exp2(-beta2 * nd);
  r.ratio1_ok = r.max_ratio1 < r.ratio1_threshold;

  // Compared in log space: (1/q_min)^n overflows for small q_min.
  const double log2_bound = nd * std::log2(1.0 / pair.q_v().min_positive());
  r.max_ratio2 = density_ratio(split.atypical, pair).max();
  r.ratio2_threshold = std::exp2(log2_bound);
  r.ratio2_ok = r.max_ratio2 == 0.0 ||
                std::log2(r.max_ratio2) < log2_bound + std::log2(1.0 + kSupportBoundSlack);
  return r;
}

std::vector<std::uint32_t> draw_letters(const measures::JointPair& pair, std::size_t n,
                                        std::uint64_t m_size, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("block length must be positive");
  if (m_size == 0) throw InvalidArgument("codebook must contain at least one word");
  if (m_size > kMaxCodebookSize) throw SizeGuardExceeded("codebook size exceeds 2^31 words");

  // Inverse CDF over the support of q_u only, so null symbols are never drawn.
  std::vector<std::uint32_t> symbols;
  std::vector<double> cumulative;
  double running = 0.0;
  for (std::size_t u = 0; u < pair.k_u(); ++u) {
    if (pair.q_u()[u] <= 0.0) continue;
    running += pair.q_u()[u];
    symbols.push_back(static_cast<std::uint32_t>(u));
    cumulative.push_back(running);
  }

  std::vector<std::uint32_t> letters(m_size * n);
  for (std::uint64_t m = 0; m < m_size; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng::counter_uniform(seed, m, i) * running;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      const std::size_t j = std::min<std::size_t>(it - cumulative.begin(), symbols.size() - 1);
      letters[m * n + i] = symbols[j];
    }
  }
  return letters;
}

}  // namespace

Codebook::Codebook(std::size_t n, double rate, std::uint64_t seed, std::size_t alphabet,
                   std::vector<std::uint32_t> letters)
    : n_(n), rate_(rate), seed_(seed), alphabet_(alphabet), letters_(std::move(letters)) {
  if (n_ == 0) throw InvalidArgument("block length must be positive");
  if (letters_.empty() || letters_.size() % n_ != 0) {
    throw InvalidArgument("codebook letters must hold a positive whole number of words");
  }
  for (std::uint32_t u : letters_) {
    if (u >= alphabet_) throw InvalidArgument(fmt::format("codebook symbol {} outside alphabet", u));
  }
}

Codebook Codebook::slice(std::uint64_t first, std::uint64_t count) const {
  if (count == 0 || first + count > size()) throw InvalidArgument("codebook slice out of range");
  const auto begin = letters_.begin() + static_cast<std::ptrdiff_t>(first * n_);
  std::vector<std::uint32_t> part(begin, begin + static_cast<std::ptrdiff_t>(count * n_));
  return Codebook(n_, std::log2(static_cast<double>(count)) / static_cast<double>(n_), seed_,
                  alphabet_, std::move(part));
}

std::uint64_t codebook_size(std::size_t n, double rate) {
  if (n == 0) throw InvalidArgument("block length must be positive");
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw InvalidArgument(fmt::format("rate {:.17g} must be finite and non-negative", rate));
  }
  const double raw = std::exp2(static_cast<double>(n) * rate);
  if (!(raw <= static_cast<double>(kMaxCodebookSize))) {
    throw SizeGuardExceeded(fmt::format("codebook size 2^{:.6g} exceeds 2^31 words",
                                        static_cast<double>(n) * rate));
  }
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(raw)));
}

Codebook sample_codebook(const measures::JointPair& pair, std::size_t n, double rate,
                         std::uint64_t seed) {
  const std::uint64_t m_size = codebook_size(n, rate);
  return Codebook(n, rate, seed, pair.k_u(), draw_letters(pair, n, m_size, seed));
}

Codebook sample_codebook_of_size(const measures::JointPair& pair, std::size_t n,
                                 std::uint64_t m_size, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("block length must be positive");
  const double rate = std::log2(static_cast<double>(m_size)) / static_cast<double>(n);
  return Codebook(n, rate, seed, pair.k_u(), draw_letters(pair, n, m_size, seed));
}

Codebook complete_codebook(std::size_t alphabet, std::size_t n) {
  const std::uint64_t count = measures::checked_power(alphabet, n, kMaxCodebookSize);
  if (count == 0) throw SizeGuardExceeded("complete codebook exceeds 2^31 words");
  std::vector<std::uint32_t> letters(count * n);
  for (std::uint64_t m = 0; m < count; ++m) {
    std::uint64_t rest = m;
    for (std::size_t i = n; i-- > 0;) {
      letters[m * n + i] = static_cast<std::uint32_t>(rest % alphabet);
      rest /= alphabet;
    }
  }
  return Codebook(n, std::log2(static_cast<double>(alphabet)), 0, alphabet, std::move(letters));
}

double RatioField::max() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, x);
  return m;
}

SubDistribution induced_distribution(const measures::JointPair& pair, const Codebook& codebook) {
  return accumulate(pair, codebook, 0.0, false).induced;
}

TypicalitySplit typicality_split(const measures::JointPair& pair, const Codebook& codebook,
                                 double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  return accumulate(pair, codebook, epsilon, true).split;
}

RatioField density_ratio(const SubDistribution& sub, const measures::JointPair& pair) {
  const auto target = measures::tensor_power(pair.q_v(), sub.n);
  if (target.size() != sub.mass.size()) throw InvalidArgument("sub-distribution has the wrong length");
  RatioField field;
  field.values.resize(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (sub.mass[i] <= 0.0) {
      field.values[i] = 0.0;
    } else if (target[i] <= 0.0) {
      throw SupportError("sub-distribution has mass on a Q_V^n-null sequence", i);
    } else {
      field.values[i] = sub.mass[i] / target[i];
    }
  }
  return field;
}

double kl_exact(const measures::JointPair& pair, const Codebook& codebook) {
  const auto induced = induced_distribution(pair, codebook);
  return measures::kl_divergence(induced.mass, measures::tensor_power(pair.q_v(), codebook.n()));
}

double tv_exact(const measures::JointPair& pair, const Codebook& codebook) {
  const auto induced = induced_distribution(pair, codebook);
  return measures::total_variation(induced.mass, measures::tensor_power(pair.q_v(), codebook.n()));
}

DecompositionReport jensen_decomposition(const measures::JointPair& pair, const Codebook& codebook,
                                         double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const auto acc = accumulate(pair, codebook, epsilon, true);
  return decompose(acc, measures::tensor_power(pair.q_v(), codebook.n()));
}

MembershipReport codebook_in_S(const measures::JointPair& pair, const Codebook& codebook,
                               double epsilon, double beta1, double beta2) {
  return membership(pair, typicality_split(pair, codebook, epsilon), codebook.n(), beta1, beta2);
}

CodebookAnalysis analyze_codebook(const measures::JointPair& pair, const Codebook& codebook,
                                  double epsilon, double beta1, double beta2) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const auto acc = accumulate(pair, codebook, epsilon, true);
  const auto target = measures::tensor_power(pair.q_v(), codebook.n());
  return {decompose(acc, target), membership(pair, acc.split, codebook.n(), beta1, beta2)};
}

}  // namespace softcover::covering
