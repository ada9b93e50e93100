#include "softcover/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "softcover/errors.hpp"
#include "softcover/rng.hpp"

namespace softcover::experiments {

namespace {

// Calls body(i) for every i in [0, count). Each index writes only its own
// output slot, so results do not depend on scheduling. The first exception
// thrown by any index is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

exponents::FreeParameters cell_parameters(const measures::JointPair& pair, double rate) {
  if (rate > measures::mutual_information(pair)) return exponents::default_parameters(pair, rate);
  exponents::FreeParameters p{};
  p.epsilon = kBelowRateEpsilon;
  p.beta1 = std::min(exponents::beta_exponent(pair, p.epsilon).beta, rate) / 2.0;
  p.beta2 = 0.0;
  return p;
}

TrialRecord run_trial(const measures::JointPair& pair, std::size_t n, double rate,
                      const exponents::FreeParameters& params, std::uint64_t seed) {
  const auto codebook = covering::sample_codebook(pair, n, rate, seed);
  const auto analysis =
      covering::analyze_codebook(pair, codebook, params.epsilon, params.beta1, params.beta2);
  const auto& d = analysis.decomposition;
  TrialRecord r;
  r.seed = seed;
  r.n = n;
  r.rate = rate;
  r.kl_bits = d.kl_exact;
  r.tv = d.tv_exact;
  r.mass_p2 = d.mass_p2;
  r.in_s = analysis.membership.in_s();
  r.term_h = d.term_h;
  r.term_1 = d.term_1;
  r.term_2 = d.term_2;
  return r;
}

std::vector<TrialRecord> mc_trials(const measures::JointPair& pair, std::size_t n, double rate,
                                   const exponents::FreeParameters& params,
                                   std::uint64_t base_seed, std::size_t trials,
                                   std::size_t workers) {
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  // Validates the size guards once, before any worker starts.
  covering::codebook_size(n, rate);
  if (measures::checked_power(pair.k_v(), n, measures::kMaxTensorEntries) == 0) {
    throw SizeGuardExceeded(
        fmt::format("output space {}^{} exceeds the 2^26 dense-vector guard", pair.k_v(), n));
  }
  std::vector<TrialRecord> records(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    records[i] = run_trial(pair, n, rate, params, rng::mix_seed(base_seed, i));
  });
  return records;
}

double failure_rate(const std::vector<TrialRecord>& records, double threshold_bits) {
  if (records.empty()) throw InvalidArgument("failure_rate needs at least one record");
  const auto failures = std::count_if(records.begin(), records.end(),
                                      [&](const TrialRecord& r) { return r.kl_bits > threshold_bits; });
  return static_cast<double>(failures) / static_cast<double>(records.size());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

SweepCell summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw InvalidArgument("cannot summarize an empty ensemble");
  std::vector<double> kl;
  kl.reserve(records.size());
  double mass = 0.0;
  std::size_t in_s = 0;
  for (const auto& r : records) {
    kl.push_back(r.kl_bits);
    mass += r.mass_p2;
    in_s += r.in_s ? 1 : 0;
  }
  const double count = static_cast<double>(records.size());
  SweepCell cell;
  cell.n = records.front().n;
  cell.rate = records.front().rate;
  cell.median_kl = quantile(kl, 0.5);
  cell.q90_kl = quantile(kl, 0.9);
  cell.mean_mass_p2 = mass / count;
  cell.frac_in_s = static_cast<double>(in_s) / count;
  return cell;
}

SweepResult decay_sweep(const measures::JointPair& pair, const std::vector<double>& rates,
                        const std::vector<std::size_t>& ns, std::size_t trials,
                        std::uint64_t base_seed, std::size_t workers) {
  if (rates.empty() || ns.empty()) throw InvalidArgument("sweep needs at least one rate and one n");
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  SweepResult out;
  for (double rate : rates) {
    const auto params = cell_parameters(pair, rate);
    for (std::size_t n : ns) {
      auto records = mc_trials(pair, n, rate, params, base_seed, trials, workers);
      out.cells.push_back(summarize(records));
      out.records.insert(out.records.end(), records.begin(), records.end());
    }
  }
  return out;
}

std::vector<covering::SubDistribution> message_distributions(const measures::JointPair& pair,
                                                             const covering::Codebook& codebook,
                                                             std::uint64_t message_count,
                                                             std::size_t workers) {
  if (message_count == 0 || codebook.size() % message_count != 0) {
    throw InvalidArgument("codebook size must be a positive multiple of the message count");
  }
  const std::uint64_t per_message = codebook.size() / message_count;
  const std::uint64_t space = measures::checked_power(pair.k_v(), codebook.n(), measures::kMaxTensorEntries);
  if (space == 0 || message_count > measures::kMaxTensorEntries / space) {
    throw SizeGuardExceeded("per-message output laws exceed the 2^26-entry guard");
  }
  std::vector<covering::SubDistribution> laws(message_count);
  parallel_for(message_count, workers, [&](std::size_t m) {
    laws[m] = covering::induced_distribution(pair, codebook.slice(m * per_message, per_message));
  });
  return laws;
}

WiretapReport wiretap_experiment(const measures::JointPair& pair, std::size_t n,
                                 double rate_message, double rate_random, std::uint64_t base_seed,
                                 std::size_t workers) {
  WiretapReport report;
  report.n = n;
  report.rate_message = rate_message;
  report.rate_random = rate_random;
  report.message_count = covering::codebook_size(n, rate_message);
  report.random_count = covering::codebook_size(n, rate_random);
  if (report.random_count > covering::kMaxCodebookSize / report.message_count) {
    throw SizeGuardExceeded("wiretap codebook exceeds 2^31 words");
  }

  const auto codebook = covering::sample_codebook_of_size(
      pair, n, report.message_count * report.random_count, base_seed);
  const auto laws = message_distributions(pair, codebook, report.message_count, workers);
  const auto target = measures::tensor_power(pair.q_v(), n);

  const std::size_t count = laws.size();
  report.per_message_kl.resize(count);
  report.per_message_tv.resize(count);
  parallel_for(count, workers, [&](std::size_t m) {
    report.per_message_kl[m] = measures::kl_divergence(laws[m].mass, target);
    report.per_message_tv[m] = measures::total_variation(laws[m].mass, target);
  });
  report.max_kl = *std::max_element(report.per_message_kl.begin(), report.per_message_kl.end());
  report.max_tv_to_target =
      *std::max_element(report.per_message_tv.begin(), report.per_message_tv.end());

  // Pair list is fixed before any parallel work, so the maximum is order independent.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  report.exhaustive_pairs = count <= kExhaustivePairLimit;
  if (report.exhaustive_pairs) {
    for (std::size_t a = 0; a < count; ++a) {
      for (std::size_t b = a + 1; b < count; ++b) pairs.emplace_back(a, b);
    }
  } else {
    const std::size_t reach = std::min(kPairwiseNeighbours, count / 2);
    for (std::size_t a = 0; a < count; ++a) {
      for (std::size_t d = 1; d <= reach; ++d) {
        const std::size_t b = (a + d) % count;
        if (2 * d == count && b < a) continue;  // opposite points listed once
        pairs.emplace_back(a, b);
      }
    }
  }
  std::vector<double> tv(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    tv[i] = measures::total_variation(laws[pairs[i].first].mass, laws[pairs[i].second].mass);
  });
  report.pairs_evaluated = pairs.size();
  report.max_pairwise_tv = tv.empty() ? 0.0 : *std::max_element(tv.begin(), tv.end());
  return report;
}

}  // namespace softcover::experiments
