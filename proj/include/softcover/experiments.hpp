#pragma once

// Monte Carlo harnesses over codebook ensembles.
//
// Trial i of an ensemble rooted at base_seed draws its codebook with seed
// rng::mix_seed(base_seed, i). Outputs are always in trial-index order, and the
// worker count never changes a single bit of them.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "softcover/covering.hpp"
#include "softcover/exponents.hpp"
#include "softcover/measures.hpp"

namespace softcover::experiments {

/// Messages compared exhaustively up to this count; beyond it each message is
/// compared with its kPairwiseNeighbours cyclic successors.
inline constexpr std::size_t kExhaustivePairLimit = 64;
inline constexpr std::size_t kPairwiseNeighbours = 32;
/// Fallback typicality slack for rates at or below I(U;V), where no default exists.
inline constexpr double kBelowRateEpsilon = 0.1;

struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double rate = 0.0;
  double kl_bits = 0.0;
  double tv = 0.0;
  double mass_p2 = 0.0;
  bool in_s = false;
  double term_h = 0.0;
  double term_1 = 0.0;
  double term_2 = 0.0;
};

/// default_parameters when R > I. Otherwise epsilon = kBelowRateEpsilon,
/// beta1 = min(beta(epsilon), R) / 2 and beta2 = 0: the split is still defined
/// but the good-set conditions carry no guarantee.
exponents::FreeParameters cell_parameters(const measures::JointPair& pair, double rate);

/// Full covering analysis of one codebook.
TrialRecord run_trial(const measures::JointPair& pair, std::size_t n, double rate,
                      const exponents::FreeParameters& params, std::uint64_t seed);

std::vector<TrialRecord> mc_trials(const measures::JointPair& pair, std::size_t n, double rate,
                                   const exponents::FreeParameters& params,
                                   std::uint64_t base_seed, std::size_t trials,
                                   std::size_t workers = 1);

/// Fraction of records with kl_bits > threshold_bits. Throws on empty input.
double failure_rate(const std::vector<TrialRecord>& records, double threshold_bits);

struct SweepCell {
  std::size_t n = 0;
  double rate = 0.0;
  double median_kl = 0.0;
  double q90_kl = 0.0;
  double mean_mass_p2 = 0.0;
  double frac_in_s = 0.0;
};

/// Linear-interpolation quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

SweepCell summarize(const std::vector<TrialRecord>& records);

struct SweepResult {
  std::vector<SweepCell> cells;      ///< rate-major, then n, in the order given
  std::vector<TrialRecord> records;  ///< cells concatenated in the same order
};

/// One mc_trials ensemble per (R, n) cell with cell_parameters(pair, R); every cell
/// uses the same base seed.
SweepResult decay_sweep(const measures::JointPair& pair, const std::vector<double>& rates,
                        const std::vector<std::size_t>& ns, std::size_t trials,
                        std::uint64_t base_seed, std::size_t workers = 1);

struct WiretapReport {
  std::size_t n = 0;
  double rate_message = 0.0;
  double rate_random = 0.0;
  std::uint64_t message_count = 0;
  std::uint64_t random_count = 0;
  std::vector<double> per_message_kl;
  std::vector<double> per_message_tv;  ///< TV of each message's output law to Q_V^n
  double max_kl = 0.0;
  double max_tv_to_target = 0.0;
  double max_pairwise_tv = 0.0;
  std::uint64_t pairs_evaluated = 0;
  bool exhaustive_pairs = true;
};

/// Output law at the eavesdropper for each message: message m owns words
/// [m * random_count, (m + 1) * random_count) of `codebook`.
std::vector<covering::SubDistribution> message_distributions(const measures::JointPair& pair,
                                                             const covering::Codebook& codebook,
                                                             std::uint64_t message_count,
                                                             std::size_t workers = 1);

/// One codebook of round(2^{n Rm}) * round(2^{n Rr}) words drawn with base_seed,
/// partitioned by message.
WiretapReport wiretap_experiment(const measures::JointPair& pair, std::size_t n,
                                 double rate_message, double rate_random, std::uint64_t base_seed,
                                 std::size_t workers = 1);

}  // namespace softcover::experiments
