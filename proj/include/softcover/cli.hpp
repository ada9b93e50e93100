#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "softcover/experiments.hpp"
#include "softcover/measures.hpp"

namespace softcover::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kSuccess = 0,
  kInternalError = 1,
  kConfigError = 2,
  kInfeasible = 3,
  kResourceGuard = 4,
};

/// Parses {"q_u": [...], "q_v_given_u": [[...], ...]}. Throws InvalidArgument on
/// malformed JSON, missing keys, ragged rows or invalid distributions.
measures::JointPair parse_channel(std::string_view text);
measures::JointPair load_channel_file(const std::string& path);

/// 17 significant digits; inf and nan spelled "inf", "-inf", "nan".
std::string format_double(double x);

/// Pretty-printed JSON where every floating value goes through format_double
/// (non-finite values become strings).
std::string report_text(const nlohmann::ordered_json& report);

inline constexpr std::string_view kTrialCsvHeader =
    "n,R,seed,kl_bits,tv,mass_p2,in_s,term_h,term_1,term_2";
inline constexpr std::string_view kSummaryCsvHeader = "n,R,median_kl,q90_kl,mean_mass_p2,frac_in_s";

std::string trial_csv(const std::vector<experiments::TrialRecord>& records);
std::string summary_csv(const std::vector<experiments::SweepCell>& cells);

/// Full command-line entry point; args excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace softcover::cli
