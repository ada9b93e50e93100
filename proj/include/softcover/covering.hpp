#pragma once

// Random codebooks and the exact output law they induce through a memoryless channel.
//
// Sequences over V^n are addressed big-endian: idx(v) = sum_i v_i k_V^{n-1-i},
// so v_0 is the most significant letter. Every mass vector here uses that order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "softcover/measures.hpp"

namespace softcover::covering {

/// Largest codebook we agree to store.
inline constexpr std::uint64_t kMaxCodebookSize = std::uint64_t{1} << 31;
/// Relative slack on the surely-true support bound of the atypical ratio.
inline constexpr double kSupportBoundSlack = 1e-12;
/// Slack on the Jensen decomposition inequality.
inline constexpr double kJensenSlack = 1e-9;

/// M words of length n, flattened row-major.
class Codebook {
 public:
  Codebook(std::size_t n, double rate, std::uint64_t seed, std::size_t alphabet,
           std::vector<std::uint32_t> letters);

  std::size_t n() const noexcept { return n_; }
  double rate() const noexcept { return rate_; }
  std::uint64_t size() const noexcept { return letters_.size() / n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t alphabet() const noexcept { return alphabet_; }
  std::span<const std::uint32_t> word(std::uint64_t m) const {
    return std::span<const std::uint32_t>(letters_).subspan(m * n_, n_);
  }
  std::span<const std::uint32_t> letters() const noexcept { return letters_; }

  /// Words [first, first + count) as a codebook of their own.
  Codebook slice(std::uint64_t first, std::uint64_t count) const;

 private:
  std::size_t n_;
  double rate_;
  std::uint64_t seed_;
  std::size_t alphabet_;
  std::vector<std::uint32_t> letters_;
};

/// round(2^{n R}); throws SizeGuardExceeded beyond 2^31 and InvalidArgument for R < 0.
std::uint64_t codebook_size(std::size_t n, double rate);

/// Letter i of word m is drawn from q_u by inverse CDF on rng::counter_uniform(seed, m, i).
Codebook sample_codebook(const measures::JointPair& pair, std::size_t n, double rate,
                         std::uint64_t seed);
/// As sample_codebook, with the word count given directly (rate recorded as log2(M)/n).
Codebook sample_codebook_of_size(const measures::JointPair& pair, std::size_t n,
                                 std::uint64_t m_size, std::uint64_t seed);
/// Every sequence in U^n once, in index order.
Codebook complete_codebook(std::size_t alphabet, std::size_t n);

/// Non-negative mass over V^n with total at most 1.
struct SubDistribution {
  std::size_t alphabet = 0;
  std::size_t n = 0;
  std::vector<double> mass;
  double total = 0.0;
};

/// Entrywise ratio of a sub-distribution to Q_V^n.
struct RatioField {
  std::vector<double> values;
  double max() const;
};

struct TypicalitySplit {
  SubDistribution typical;    ///< word/output pairs inside the jointly-typical set
  SubDistribution atypical;   ///< the rest
};

struct DecompositionReport {
  double mass_p2 = 0.0;
  double term_h = 0.0;
  double term_1 = 0.0;
  double term_2 = 0.0;
  double kl_exact = 0.0;
  double tv_exact = 0.0;

  double bound() const { return term_h + term_1 + term_2; }
  bool bound_holds() const { return kl_exact <= bound() + kJensenSlack; }
};

/// Which good-set conditions a codebook meets.
struct MembershipReport {
  double mass_p2 = 0.0;
  double mass_threshold = 0.0;   ///< 2 * 2^{-beta1 n}
  double max_ratio1 = 0.0;
  double ratio1_threshold = 0.0; ///< 1 + 2^{-beta2 n}
  double max_ratio2 = 0.0;
  double ratio2_threshold = 0.0; ///< (1 / q_min)^n
  bool mass_ok = false;
  bool ratio1_ok = false;
  bool ratio2_ok = false;

  bool in_s() const { return mass_ok && ratio1_ok && ratio2_ok; }
};

struct CodebookAnalysis {
  DecompositionReport decomposition;
  MembershipReport membership;
};

/// Uniform mixture over words of the n-letter channel output laws.
SubDistribution induced_distribution(const measures::JointPair& pair, const Codebook& codebook);

/// Routes each (word, output) contribution by joint typicality at threshold I + epsilon.
TypicalitySplit typicality_split(const measures::JointPair& pair, const Codebook& codebook,
                                 double epsilon);

/// Throws SupportError if the sub-distribution puts mass on a Q_V^n-null sequence.
RatioField density_ratio(const SubDistribution& sub, const measures::JointPair& pair);

double kl_exact(const measures::JointPair& pair, const Codebook& codebook);
double tv_exact(const measures::JointPair& pair, const Codebook& codebook);

DecompositionReport jensen_decomposition(const measures::JointPair& pair, const Codebook& codebook,
                                         double epsilon);

MembershipReport codebook_in_S(const measures::JointPair& pair, const Codebook& codebook,
                               double epsilon, double beta1, double beta2);

/// Decomposition and membership from a single pass over the codebook.
CodebookAnalysis analyze_codebook(const measures::JointPair& pair, const Codebook& codebook,
                                  double epsilon, double beta1, double beta2);

}  // namespace softcover::covering
