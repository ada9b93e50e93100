#include "softcover/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "softcover/errors.hpp"
#include "test_support.hpp"

namespace softcover::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("softcover_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  const std::string bsc = testing::data_path("bsc_0.1.json");
  const std::string independent = testing::data_path("independent.json");
  fs::path dir_;
};

TEST(ParseChannel, ValidAndInvalid) {
  const auto pair = parse_channel(R"({"q_u": [0.5, 0.5], "q_v_given_u": [[0.9, 0.1], [0.1, 0.9]]})");
  EXPECT_NEAR(measures::mutual_information(pair), 0.531004406410719, 1e-12);
  EXPECT_THROW(parse_channel(R"({"q_u": [0.5, 0.5], "q_v_given_u": [[0.9, 0.1], [1.0]]})"), InvalidArgument);
  EXPECT_THROW(parse_channel(R"({"q_u": [0.5, 0.5]})"), InvalidArgument);
  EXPECT_THROW(parse_channel(R"({"q_u": [0.5, 0.5], "q_v_given_u": [[0.9, 0.1])"), InvalidArgument);
  EXPECT_THROW(parse_channel(R"({"q_u": [0.5, "x"], "q_v_given_u": [[1], [1]]})"), InvalidArgument);
  EXPECT_THROW(parse_channel(R"({"q_u": [0.6, 0.5], "q_v_given_u": [[1], [1]]})"), InvalidArgument);
  EXPECT_THROW(parse_channel(R"({"q_u": [1.0], "q_v_given_u": [[1], [1]]})"), InvalidArgument);
  EXPECT_THROW(load_channel_file("/nonexistent/channel.json"), InvalidArgument);
}

TEST(FormatDouble, RoundTripsAndSpellsNonFinite) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> expo(-300, 300);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::pow(10.0, expo(gen)) * (gen() % 2 ? 1 : -1);
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
  }
}

TEST(ReportText, NonFiniteValuesBecomeStrings) {
  ordered_json j = {{"a", 0.25}, {"b", std::numeric_limits<double>::infinity()}, {"c", {1, 2}}};
  const auto text = report_text(j);
  const auto back = ordered_json::parse(text);
  EXPECT_EQ(back["a"].get<double>(), 0.25);
  EXPECT_EQ(back["b"].get<std::string>(), "inf");
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST_F(CliTest, AnalyzeReport) {
  const auto r = invoke({"analyze", "--channel", bsc, "--rate", "0.9"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto j = ordered_json::parse(r.out);
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_NEAR(j["mutual_information_bits"].get<double>(), 0.531004, 1e-6);
  EXPECT_NEAR(j["parameters"]["epsilon"].get<double>(), 0.122999, 1e-6);
  EXPECT_GT(j["certificate"]["gamma1_bits"].get<double>(), 0.0);
  EXPECT_GT(j["certificate"]["gamma2_bits"].get<double>(), 0.0);
  EXPECT_EQ(j["bounds"].size(), 40u);
  EXPECT_NEAR(j["bounds"][0]["atypical_probability_exact"].get<double>(), 0.9, 1e-12);
}

TEST_F(CliTest, AnalyzeCsv) {
  const auto r = invoke({"analyze", "--channel", bsc, "--rate", "0.9", "--format", "csv", "--table-max", "5"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
  EXPECT_EQ(r.out.rfind("n,kl_ceiling_bits,", 0), 0u);
}

TEST_F(CliTest, AnalyzeExitCodes) {
  EXPECT_EQ(invoke({"analyze", "--channel", bsc, "--rate", "0.1"}).code, kInfeasible);
  EXPECT_EQ(invoke({"analyze", "--channel", bsc, "--rate", "0.9", "--beta1", "0.9"}).code, kInfeasible);
  const auto bad = write("bad.json", R"({"q_u": [0.5, 0.5], "q_v_given_u": [[0.9, 0.1], [1.0]]})");
  const auto r = invoke({"analyze", "--channel", bad, "--rate", "0.9"});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("ragged"), std::string::npos);
  EXPECT_EQ(invoke({"analyze", "--channel", write("x.json", "not json"), "--rate", "0.9"}).code, kConfigError);
  EXPECT_EQ(invoke({"analyze", "--channel", bsc}).code, kConfigError);
  EXPECT_EQ(invoke({"analyze", "--channel", bsc, "--rate", "0.9", "--format", "xml"}).code, kConfigError);
  EXPECT_EQ(invoke({"bogus"}).code, kConfigError);
  EXPECT_EQ(invoke({}).code, kConfigError);
}

TEST_F(CliTest, CoverSingleLetter) {
  const auto r = invoke({"cover", "--channel", bsc, "--n", "1", "--rate", "0"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto j = ordered_json::parse(r.out);
  EXPECT_EQ(j["codebook_size"], 1);
  // KL((0.9, 0.1) || (0.5, 0.5)) in bits; 0.368 is the same quantity in nats.
  EXPECT_NEAR(j["kl_bits"].get<double>(), 0.531004, 1e-6);
  EXPECT_NEAR(j["kl_bits"].get<double>() * std::log(2.0), 0.368, 1e-3);
  EXPECT_TRUE(j["decomposition"]["bound_holds"].get<bool>());
}

TEST_F(CliTest, CoverCompleteAndDump) {
  const auto dump = path("mass.csv");
  const auto r = invoke({"cover", "--channel", bsc, "--n", "5", "--complete", "--dump-mass", dump});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto j = ordered_json::parse(r.out);
  EXPECT_NEAR(j["kl_bits"].get<double>(), 0.0, 1e-10);
  EXPECT_EQ(j["codebook_size"], 32);
  const auto text = read_file(dump);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 33);
  EXPECT_EQ(text.rfind("index,mass\n0,", 0), 0u);
}

TEST_F(CliTest, CoverGuards) {
  EXPECT_EQ(invoke({"cover", "--channel", bsc, "--n", "27", "--rate", "0"}).code, kResourceGuard);
  EXPECT_EQ(invoke({"cover", "--channel", bsc, "--n", "20", "--rate", "1.6"}).code, kResourceGuard);
  EXPECT_EQ(invoke({"cover", "--channel", bsc, "--n", "0"}).code, kConfigError);
  EXPECT_EQ(invoke({"cover", "--channel", bsc, "--n", "4", "--format", "csv"}).code, kConfigError);
}

TEST_F(CliTest, SweepCsvIsDeterministic) {
  const std::vector<std::string> base = {"sweep", "--channel", bsc, "--rates", "0.3,0.8", "--ns", "4,6",
                                         "--trials", "20", "--seed", "5"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  };
  const auto a = with({"--out", path("a.csv"), "--summary-out", path("sa.csv")});
  const auto b = with({"--out", path("b.csv"), "--summary-out", path("sb.csv"), "--workers", "8"});
  ASSERT_EQ(a.code, kSuccess) << a.err;
  ASSERT_EQ(b.code, kSuccess) << b.err;
  const auto csv = read_file(path("a.csv"));
  EXPECT_EQ(csv, read_file(path("b.csv")));
  EXPECT_EQ(read_file(path("sa.csv")), read_file(path("sb.csv")));
  EXPECT_EQ(csv.rfind(std::string(kTrialCsvHeader) + "\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 81);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  const auto summary = read_file(path("sa.csv"));
  EXPECT_EQ(summary.rfind(std::string(kSummaryCsvHeader) + "\n", 0), 0u);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 5);

  const auto stdout_run = with({});
  EXPECT_EQ(stdout_run.out, csv);
  const auto report = with({"--format", "report"});
  ASSERT_EQ(report.code, kSuccess);
  EXPECT_EQ(ordered_json::parse(report.out)["records"].size(), 80u);
}

TEST_F(CliTest, SweepValidation) {
  EXPECT_EQ(invoke({"sweep", "--channel", bsc, "--rates", "0.8", "--ns", "4", "--trials", "0"}).code,
            kConfigError);
  EXPECT_EQ(invoke({"sweep", "--channel", bsc, "--rates", "0.8", "--ns", "4", "--workers", "0"}).code,
            kConfigError);
  EXPECT_EQ(invoke({"sweep", "--channel", bsc, "--rates", "0.8", "--ns", "30"}).code, kResourceGuard);
}

TEST_F(CliTest, WiretapMatchesCoverWithOneMessage) {
  const auto w = invoke({"wiretap", "--channel", bsc, "--ns", "6", "--rate-message", "0", "--rate-random",
                         "0.8", "--seed", "13"});
  const auto c = invoke({"cover", "--channel", bsc, "--n", "6", "--rate", "0.8", "--seed", "13"});
  ASSERT_EQ(w.code, kSuccess) << w.err;
  ASSERT_EQ(c.code, kSuccess) << c.err;
  const auto wj = ordered_json::parse(w.out);
  const auto cj = ordered_json::parse(c.out);
  EXPECT_EQ(wj["runs"][0]["max_kl"].get<double>(), cj["kl_bits"].get<double>());
}

TEST_F(CliTest, WiretapIndependentAndCsv) {
  const auto r = invoke({"wiretap", "--channel", independent, "--ns", "4,6", "--rate-message", "0.25",
                         "--rate-random", "0.5"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  for (const auto& run : ordered_json::parse(r.out)["runs"]) {
    EXPECT_NEAR(run["max_kl"].get<double>(), 0.0, 1e-12);
  }
  const auto csv = invoke({"wiretap", "--channel", bsc, "--ns", "6,8", "--rate-message", "0.2",
                           "--rate-random", "0.8", "--format", "csv"});
  ASSERT_EQ(csv.code, kSuccess);
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 3);
  EXPECT_EQ(invoke({"wiretap", "--channel", bsc, "--ns", "10", "--rate-message", "2",
                    "--rate-random", "2"}).code,
            kResourceGuard);
}

}  // namespace
}  // namespace softcover::cli
