#include "softcover/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "softcover/covering.hpp"
#include "softcover/errors.hpp"
#include "softcover/exponents.hpp"

namespace softcover::cli {

namespace {

using nlohmann::ordered_json;

struct CommonOptions {
  std::string channel_path;
  std::string out_path;
  std::string format;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

struct AnalyzeOptions {
  double rate = 0.0;
  std::optional<double> epsilon, beta1, beta2;
  std::size_t n_min = 1;
  std::size_t n_max = 10000;
  std::size_t table_max = 40;
};

struct CoverOptions {
  std::size_t n = 1;
  double rate = 0.0;
  bool complete = false;
  std::optional<double> epsilon, beta1, beta2;
  std::string dump_mass_path;
};

struct SweepOptions {
  std::vector<double> rates;
  std::vector<std::size_t> ns;
  std::size_t trials = 100;
  std::string summary_path;
};

struct WiretapOptions {
  std::vector<std::size_t> ns;
  double rate_message = 0.0;
  double rate_random = 0.0;
};

void add_common(CLI::App& cmd, CommonOptions& o, const std::string& default_format) {
  o.format = default_format;
  cmd.add_option("--channel", o.channel_path, "channel/source JSON file")->required();
  cmd.add_option("--out", o.out_path, "output file (default: stdout)");
  cmd.add_option("--format", o.format, "csv or report");
  cmd.add_option("--workers", o.workers, "worker threads; never changes the output");
  cmd.add_option("--seed", o.seed, "base seed");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

void require_rate(double r, const char* name) {
  require(std::isfinite(r) && r >= 0.0, fmt::format("{} must be finite and non-negative", name));
}

void require_format(const CommonOptions& o, std::initializer_list<std::string_view> allowed) {
  const bool ok = std::find(allowed.begin(), allowed.end(), o.format) != allowed.end();
  require(ok, fmt::format("--format {} is not supported by this command", o.format));
}

void emit(const CommonOptions& o, const std::string& text, std::ostream& out) {
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw InvalidArgument(fmt::format("cannot open {} for writing", o.out_path));
  file << text;
}

ordered_json number(double x) { return ordered_json(x); }

ordered_json channel_json(const measures::JointPair& pair) {
  ordered_json rows = ordered_json::array();
  for (std::size_t u = 0; u < pair.k_u(); ++u) {
    const auto r = pair.channel().row(u).values();
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  const auto qu = pair.q_u().values();
  const auto qv = pair.q_v().values();
  return {{"q_u", std::vector<double>(qu.begin(), qu.end())},
          {"q_v_given_u", rows},
          {"q_v", std::vector<double>(qv.begin(), qv.end())}};
}

// Explicit overrides win; anything not given comes from the default schedule.
exponents::FreeParameters resolve_parameters(const measures::JointPair& pair, double rate,
                                             const std::optional<double>& epsilon,
                                             const std::optional<double>& beta1,
                                             const std::optional<double>& beta2,
                                             bool strict) {
  if (epsilon) require(*epsilon > 0.0, "--epsilon must be positive");
  if (beta1) require(*beta1 >= 0.0, "--beta1 must be non-negative");
  if (beta2) require(*beta2 >= 0.0, "--beta2 must be non-negative");
  auto p = strict ? exponents::default_parameters(pair, rate) : experiments::cell_parameters(pair, rate);
  if (epsilon) p.epsilon = *epsilon;
  if (beta1) p.beta1 = *beta1;
  if (beta2) p.beta2 = *beta2;
  return p;
}

int cmd_analyze(const CommonOptions& common, const AnalyzeOptions& o, std::ostream& out) {
  require_format(common, {"report", "csv"});
  require_rate(o.rate, "--rate");
  require(o.n_min >= 1 && o.n_max >= o.n_min, "need 1 <= --n-min <= --n-max");
  require(o.table_max >= 1, "--table-max must be positive");
  const auto pair = load_channel_file(common.channel_path);
  const double info = measures::mutual_information(pair);
  if (!(o.rate > info)) {
    throw InfeasibleParameters(fmt::format("rate {} does not exceed I(U;V) = {}",
                                           format_double(o.rate), format_double(info)));
  }
  const bool defaults_used = !(o.epsilon && o.beta1 && o.beta2);
  const auto p = resolve_parameters(pair, o.rate, o.epsilon, o.beta1, o.beta2, true);
  const auto cert = exponents::rate_certificate(pair, o.rate, p.epsilon, p.beta1, p.beta2,
                                                o.n_min, o.n_max);
  const double q_min = pair.q_v().min_positive();

  ordered_json table = ordered_json::array();
  std::string csv = "n,kl_ceiling_bits,log_mass_bound,log_ratio_bound,log_union_bound,"
                    "union_vacuous,atypical_probability_exact,atypical_chernoff\n";
  for (std::size_t n = 1; n <= o.table_max; ++n) {
    const auto mass = exponents::chernoff_rhs_mass(n, o.rate, p.beta1);
    const auto ratio = exponents::chernoff_rhs_ratio(n, o.rate, info, p.epsilon, p.beta2);
    const auto uni = exponents::union_bound_failure(n, o.rate, info, p.epsilon, p.beta1, p.beta2,
                                                    pair.k_v());
    std::optional<double> atypical;
    try {
      atypical = exponents::atypical_probability_exact(pair, p.epsilon, n);
    } catch (const SizeGuardExceeded&) {
    }
    const double ceiling = exponents::deterministic_kl_ceiling(n, p.beta1, p.beta2, q_min);
    const double chernoff = std::exp2(-cert.beta * static_cast<double>(n));
    ordered_json row = {{"n", n},
                        {"kl_ceiling_bits", ceiling},
                        {"log_mass_bound", mass.log_value},
                        {"log_ratio_bound", ratio.log_value},
                        {"log_union_bound", uni.log_value},
                        {"union_vacuous", uni.vacuous},
                        {"atypical_probability_exact", atypical ? number(*atypical) : ordered_json()},
                        {"atypical_chernoff", chernoff}};
    table.push_back(row);
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", n, format_double(ceiling),
                       format_double(mass.log_value), format_double(ratio.log_value),
                       format_double(uni.log_value), uni.vacuous ? 1 : 0,
                       atypical ? format_double(*atypical) : std::string(),
                       format_double(chernoff));
  }
  if (common.format == "csv") {
    emit(common, csv, out);
    return kSuccess;
  }

  ordered_json report = {
      {"schema_version", kSchemaVersion},
      {"command", "analyze"},
      {"channel", channel_json(pair)},
      {"mutual_information_bits", info},
      {"q_min", q_min},
      {"rate", o.rate},
      {"parameters",
       {{"epsilon", p.epsilon}, {"beta1", p.beta1}, {"beta2", p.beta2}, {"defaults_used", defaults_used}}},
      {"exponent", {{"alpha_star", cert.alpha_star}, {"beta", cert.beta}}},
      {"certificate",
       {{"gamma1_bits", cert.gamma1_bits},
        {"gamma2_bits", cert.gamma2_bits},
        {"gamma1_nats", cert.gamma1_bits * std::numbers::ln2},
        {"gamma2_nats", cert.gamma2_nats()},
        {"n0", cert.n0},
        {"n_min", o.n_min},
        {"n_max", cert.n_max}}},
      {"bounds", table}};
  emit(common, report_text(report), out);
  return kSuccess;
}

int cmd_cover(const CommonOptions& common, const CoverOptions& o, std::ostream& out) {
  require_format(common, {"report"});
  require(o.n >= 1, "--n must be positive");
  require_rate(o.rate, "--rate");
  const auto pair = load_channel_file(common.channel_path);
  if (measures::checked_power(pair.k_v(), o.n, measures::kMaxTensorEntries) == 0) {
    throw SizeGuardExceeded(
        fmt::format("output space {}^{} exceeds the 2^26 dense-vector guard", pair.k_v(), o.n));
  }
  const auto codebook = o.complete ? covering::complete_codebook(pair.k_u(), o.n)
                                   : covering::sample_codebook(pair, o.n, o.rate, common.seed);
  const auto p = resolve_parameters(pair, codebook.rate(), o.epsilon, o.beta1, o.beta2, false);
  const auto analysis = covering::analyze_codebook(pair, codebook, p.epsilon, p.beta1, p.beta2);
  const auto& d = analysis.decomposition;
  const auto& s = analysis.membership;
  const double ceiling =
      exponents::deterministic_kl_ceiling(o.n, p.beta1, p.beta2, pair.q_v().min_positive());

  if (!o.dump_mass_path.empty()) {
    const auto induced = covering::induced_distribution(pair, codebook);
    std::string text = "index,mass\n";
    for (std::size_t i = 0; i < induced.mass.size(); ++i) {
      text += fmt::format("{},{}\n", i, format_double(induced.mass[i]));
    }
    CommonOptions dump = common;
    dump.out_path = o.dump_mass_path;
    emit(dump, text, out);
  }

  ordered_json report = {
      {"schema_version", kSchemaVersion},
      {"command", "cover"},
      {"channel", channel_json(pair)},
      {"mutual_information_bits", measures::mutual_information(pair)},
      {"n", o.n},
      {"rate", codebook.rate()},
      {"codebook_size", codebook.size()},
      {"complete_codebook", o.complete},
      {"seed", codebook.seed()},
      {"parameters", {{"epsilon", p.epsilon}, {"beta1", p.beta1}, {"beta2", p.beta2}}},
      {"kl_bits", d.kl_exact},
      {"tv", d.tv_exact},
      {"decomposition",
       {{"mass_p2", d.mass_p2},
        {"term_h", d.term_h},
        {"term_1", d.term_1},
        {"term_2", d.term_2},
        {"bound", d.bound()},
        {"bound_holds", d.bound_holds()}}},
      {"membership",
       {{"in_s", s.in_s()},
        {"mass_ok", s.mass_ok},
        {"ratio1_ok", s.ratio1_ok},
        {"ratio2_ok", s.ratio2_ok},
        {"mass_p2", s.mass_p2},
        {"mass_threshold", s.mass_threshold},
        {"max_ratio1", s.max_ratio1},
        {"ratio1_threshold", s.ratio1_threshold},
        {"max_ratio2", s.max_ratio2},
        {"ratio2_threshold", s.ratio2_threshold}}},
      {"kl_ceiling_bits", ceiling}};
  emit(common, report_text(report), out);
  return kSuccess;
}

int cmd_sweep(const CommonOptions& common, const SweepOptions& o, std::ostream& out) {
  require_format(common, {"csv", "report"});
  require(o.trials >= 1, "--trials must be at least 1");
  require(!o.rates.empty() && !o.ns.empty(), "--rates and --ns must be non-empty");
  for (double r : o.rates) require_rate(r, "--rates entry");
  for (std::size_t n : o.ns) require(n >= 1, "--ns entries must be positive");
  const auto pair = load_channel_file(common.channel_path);
  for (double r : o.rates) {
    for (std::size_t n : o.ns) {
      covering::codebook_size(n, r);
      if (measures::checked_power(pair.k_v(), n, measures::kMaxTensorEntries) == 0) {
        throw SizeGuardExceeded(fmt::format("output space {}^{} exceeds the 2^26 guard", pair.k_v(), n));
      }
    }
  }

  const auto result =
      experiments::decay_sweep(pair, o.rates, o.ns, o.trials, common.seed, common.workers);
  if (!o.summary_path.empty()) {
    CommonOptions summary = common;
    summary.out_path = o.summary_path;
    emit(summary, summary_csv(result.cells), out);
  }
  if (common.format == "csv") {
    emit(common, trial_csv(result.records), out);
    return kSuccess;
  }
  ordered_json cells = ordered_json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"n", c.n},
                     {"R", c.rate},
                     {"median_kl", c.median_kl},
                     {"q90_kl", c.q90_kl},
                     {"mean_mass_p2", c.mean_mass_p2},
                     {"frac_in_s", c.frac_in_s}});
  }
  ordered_json records = ordered_json::array();
  for (const auto& r : result.records) {
    records.push_back({{"n", r.n},
                       {"R", r.rate},
                       {"seed", r.seed},
                       {"kl_bits", r.kl_bits},
                       {"tv", r.tv},
                       {"mass_p2", r.mass_p2},
                       {"in_s", r.in_s},
                       {"term_h", r.term_h},
                       {"term_1", r.term_1},
                       {"term_2", r.term_2}});
  }
  ordered_json report = {{"schema_version", kSchemaVersion},
                         {"command", "sweep"},
                         {"trials", o.trials},
                         {"base_seed", common.seed},
                         {"cells", cells},
                         {"records", records}};
  emit(common, report_text(report), out);
  return kSuccess;
}

int cmd_wiretap(const CommonOptions& common, const WiretapOptions& o, std::ostream& out) {
  require_format(common, {"report", "csv"});
  require(!o.ns.empty(), "--ns must be non-empty");
  for (std::size_t n : o.ns) require(n >= 1, "--ns entries must be positive");
  require_rate(o.rate_message, "--rate-message");
  require_rate(o.rate_random, "--rate-random");
  const auto pair = load_channel_file(common.channel_path);
  for (std::size_t n : o.ns) {
    covering::codebook_size(n, o.rate_message);
    covering::codebook_size(n, o.rate_random);
  }

  ordered_json runs = ordered_json::array();
  std::string csv = "n,message_count,random_count,max_kl,max_tv_to_target,max_pairwise_tv\n";
  for (std::size_t n : o.ns) {
    const auto r = experiments::wiretap_experiment(pair, n, o.rate_message, o.rate_random,
                                                   common.seed, common.workers);
    runs.push_back({{"n", r.n},
                    {"rate_message", r.rate_message},
                    {"rate_random", r.rate_random},
                    {"message_count", r.message_count},
                    {"random_count", r.random_count},
                    {"per_message_kl", r.per_message_kl},
                    {"per_message_tv", r.per_message_tv},
                    {"max_kl", r.max_kl},
                    {"max_tv_to_target", r.max_tv_to_target},
                    {"max_pairwise_tv", r.max_pairwise_tv},
                    {"pairs_evaluated", r.pairs_evaluated},
                    {"exhaustive_pairs", r.exhaustive_pairs}});
    csv += fmt::format("{},{},{},{},{},{}\n", r.n, r.message_count, r.random_count,
                       format_double(r.max_kl), format_double(r.max_tv_to_target),
                       format_double(r.max_pairwise_tv));
  }
  if (common.format == "csv") {
    emit(common, csv, out);
    return kSuccess;
  }
  ordered_json report = {{"schema_version", kSchemaVersion},
                         {"command", "wiretap"},
                         {"channel", channel_json(pair)},
                         {"mutual_information_bits", measures::mutual_information(pair)},
                         {"base_seed", common.seed},
                         {"runs", runs}};
  emit(common, report_text(report), out);
  return kSuccess;
}

void write_json(const ordered_json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case ordered_json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_double(x) : "\"" + format_double(x) + "\"";
      return;
    }
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner + ordered_json(key).dump() + ": ";
        write_json(value, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(), [](const ordered_json& e) {
        return e.is_structured();
      });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += inner;
        write_json(value, out, indent + 1);
      }
      out += flat ? "]" : "\n" + pad + "]";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

measures::JointPair parse_channel(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw InvalidArgument(fmt::format("channel file is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("q_u") || !doc.contains("q_v_given_u")) {
    throw InvalidArgument("channel file must be an object with keys \"q_u\" and \"q_v_given_u\"");
  }
  auto reals = [](const ordered_json& arr, const std::string& what) {
    if (!arr.is_array()) throw InvalidArgument(what + " must be an array");
    std::vector<double> out;
    for (const auto& x : arr) {
      if (!x.is_number()) throw InvalidArgument(what + " must contain only numbers");
      out.push_back(x.get<double>());
    }
    return out;
  };
  const auto q_u = reals(doc["q_u"], "q_u");
  const auto& rows_json = doc["q_v_given_u"];
  if (!rows_json.is_array() || rows_json.empty()) {
    throw InvalidArgument("q_v_given_u must be a non-empty array of rows");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t u = 0; u < rows_json.size(); ++u) {
    rows.push_back(reals(rows_json[u], fmt::format("q_v_given_u[{}]", u)));
    if (rows.back().size() != rows.front().size()) {
      throw InvalidArgument(fmt::format("q_v_given_u is ragged: row {} has {} entries, row 0 has {}",
                                        u, rows.back().size(), rows.front().size()));
    }
  }
  return measures::JointPair(measures::ProbVector::from(q_u), measures::Channel::from(rows));
}

measures::JointPair load_channel_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument(fmt::format("cannot read channel file {}", path));
  std::ostringstream text;
  text << file.rdbuf();
  return parse_channel(text.str());
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

std::string report_text(const ordered_json& report) {
  std::string out;
  write_json(report, out, 0);
  out += "\n";
  return out;
}

std::string trial_csv(const std::vector<experiments::TrialRecord>& records) {
  std::string out(kTrialCsvHeader);
  out += "\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.n, format_double(r.rate), r.seed,
                       format_double(r.kl_bits), format_double(r.tv), format_double(r.mass_p2),
                       r.in_s ? 1 : 0, format_double(r.term_h), format_double(r.term_1),
                       format_double(r.term_2));
  }
  return out;
}

std::string summary_csv(const std::vector<experiments::SweepCell>& cells) {
  std::string out(kSummaryCsvHeader);
  out += "\n";
  for (const auto& c : cells) {
    out += fmt::format("{},{},{},{},{},{}\n", c.n, format_double(c.rate), format_double(c.median_kl),
                       format_double(c.q90_kl), format_double(c.mean_mass_p2),
                       format_double(c.frac_in_s));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random-codebook soft-covering laboratory", "softcover"};
  app.require_subcommand(1);

  CommonOptions analyze_common, cover_common, sweep_common, wiretap_common;
  AnalyzeOptions analyze;
  CoverOptions cover;
  SweepOptions sweep;
  WiretapOptions wiretap;

  auto* a = app.add_subcommand("analyze", "exponents, bounds and rate certificates");
  add_common(*a, analyze_common, "report");
  a->add_option("--rate", analyze.rate, "codebook rate R in bits/symbol")->required();
  a->add_option("--epsilon", analyze.epsilon, "typicality slack (default (R - I)/3)");
  a->add_option("--beta1", analyze.beta1);
  a->add_option("--beta2", analyze.beta2);
  a->add_option("--n-min", analyze.n_min, "certificate range start");
  a->add_option("--n-max", analyze.n_max, "certificate range end");
  a->add_option("--table-max", analyze.table_max, "largest n in the per-n bound table");

  auto* c = app.add_subcommand("cover", "exact analysis of one codebook");
  add_common(*c, cover_common, "report");
  c->add_option("--n", cover.n, "block length")->required();
  c->add_option("--rate", cover.rate, "codebook rate R in bits/symbol");
  c->add_flag("--complete", cover.complete, "use every input sequence once");
  c->add_option("--epsilon", cover.epsilon);
  c->add_option("--beta1", cover.beta1);
  c->add_option("--beta2", cover.beta2);
  c->add_option("--dump-mass", cover.dump_mass_path, "write the induced mass vector as CSV");

  auto* s = app.add_subcommand("sweep", "Monte Carlo decay sweep over (R, n)");
  add_common(*s, sweep_common, "csv");
  s->add_option("--rates", sweep.rates, "rates")->required()->delimiter(',');
  s->add_option("--ns", sweep.ns, "block lengths")->required()->delimiter(',');
  s->add_option("--trials", sweep.trials, "codebooks per cell");
  s->add_option("--summary-out", sweep.summary_path, "per-cell summary CSV");

  auto* w = app.add_subcommand("wiretap", "per-message eavesdropper statistics");
  add_common(*w, wiretap_common, "report");
  w->add_option("--ns", wiretap.ns, "block lengths")->required()->delimiter(',');
  w->add_option("--rate-message", wiretap.rate_message)->required();
  w->add_option("--rate-random", wiretap.rate_random)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    for (const auto* o : {&analyze_common, &cover_common, &sweep_common, &wiretap_common}) {
      if (o->workers == 0) throw InvalidArgument("--workers must be at least 1");
    }
    if (a->parsed()) return cmd_analyze(analyze_common, analyze, out);
    if (c->parsed()) return cmd_cover(cover_common, cover, out);
    if (s->parsed()) return cmd_sweep(sweep_common, sweep, out);
    return cmd_wiretap(wiretap_common, wiretap, out);
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InfeasibleParameters& e) {
    err << "infeasible parameters: " << e.what() << "\n";
    return kInfeasible;
  } catch (const SizeGuardExceeded& e) {
    err << "resource guard: " << e.what() << "\n";
    return kResourceGuard;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace softcover::cli
