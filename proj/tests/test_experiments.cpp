#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kanheat/config.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/experiments.hpp"
#include "kanheat/metrics.hpp"
#include "kanheat/report.hpp"
#include "kanheat/svg.hpp"

using namespace kanheat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

void expect_xml(const std::string& text) {
  std::istringstream is(text);
  boost::property_tree::ptree tree;
  EXPECT_NO_THROW(boost::property_tree::read_xml(is, tree));
  EXPECT_EQ(tree.count("svg"), 1u);
}

}  // namespace

TEST(Metrics, HandExamples) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_DOUBLE_EQ(r2(y, std::vector<double>{1, 2, 4}), 0.5);
  EXPECT_DOUBLE_EQ(r2(y, y), 1.0);
  EXPECT_DOUBLE_EQ(r2(y, std::vector<double>{2, 2, 2}), 0.0);
  const Metrics m = compute_metrics(y, y);
  EXPECT_EQ(m.mape, 0.0);
  EXPECT_NEAR(m.pearson, 1.0, 1e-15);
  EXPECT_THROW(r2(y, std::vector<double>{1, 2}), ShapeError);
  EXPECT_THROW(r2(std::vector<double>{5, 5}, std::vector<double>{1, 2}), DomainError);
  std::size_t excluded = 0;
  EXPECT_NEAR(mape(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0, 3.0}, &excluded), 50.0, 1e-12);
  EXPECT_EQ(excluded, 1u);
}

TEST(Metrics, R2AgreesWithMseIdentity) {
  std::mt19937_64 g(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> y(500), p(500);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 3.0 + 2.0 * n(g);
    p[i] = y[i] + 0.3 * n(g);
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= 500.0;
  double sst = 0.0;
  for (double v : y) sst += (v - mean) * (v - mean);
  EXPECT_NEAR(r2(y, p), 1.0 - mse(y, p) * 500.0 / sst, 1e-12);
  EXPECT_GE(smape(y, p), 0.0);
  EXPECT_LE(smape(y, p), 200.0);
}

TEST(Aggregate, SampleStd) {
  const Aggregate a = aggregate(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(a.n, 4);
  EXPECT_DOUBLE_EQ(a.mean, 2.5);
  EXPECT_NEAR(a.std, std::sqrt(5.0 / 3.0), 1e-15);
  const Aggregate one = aggregate(std::vector<double>{0.7});
  EXPECT_EQ(one.n, 1);
  EXPECT_TRUE(std::isnan(one.std));
}

TEST(Extreme, NestingAndBias) {
  std::mt19937_64 g(12);
  std::gamma_distribution<double> gam(2.0, 3.0);
  std::vector<double> truth(400);
  for (double& v : truth) v = gam(g);
  const auto top25 = extreme_subset(truth, 0.25);
  const auto top10 = extreme_subset(truth, 0.10);
  const auto top5 = extreme_subset(truth, 0.05);
  EXPECT_TRUE(std::includes(top10.begin(), top10.end(), top5.begin(), top5.end()));
  EXPECT_TRUE(std::includes(top25.begin(), top25.end(), top10.begin(), top10.end()));
  EXPECT_NEAR(static_cast<double>(top10.size()), 40.0, 1.0);

  std::vector<double> shifted = truth;
  for (double& v : shifted) v -= 1.0;
  for (const auto& row : extreme_analysis(truth, truth, kExtremeThresholds)) {
    EXPECT_FALSE(row.skipped);
    EXPECT_EQ(row.mean_signed_error, 0.0);
  }
  for (const auto& row : extreme_analysis(truth, shifted, kExtremeThresholds)) {
    EXPECT_NEAR(row.mean_signed_error, -1.0, 1e-12);
  }
  const std::vector<double> few{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_TRUE(extreme_analysis(few, few, {0.25})[0].skipped);
}

TEST(Svg, DocumentsParseAsXml) {
  expect_xml(svg_line_chart({"Case <1> & more", "x", "y"}, {{"truth", {0, 1, 2}, {1, 3, 2}}, {"kan", {0, 1, 2}, {1, 2.9, 2.1}}}));
  expect_xml(svg_scatter({"s", "truth", "pred"}, {{"kan", {1, 2, 3}, {1.1, 2.2, 2.7}}}));
  expect_xml(svg_bar_chart({"b", "rate", "R2"}, {"1.00", "0.50"}, {{"kan", {0.9, 0.8}, {0.01, 0.02}}, {"mlp", {0.85, 0.7}, {}}}));
  expect_xml(svg_line_chart({"empty", "x", "y"}, {}));
}

TEST(Report, EmptyResultsGiveHeaderOnlyCsv) {
  const fs::path dir = fresh_dir("kanheat_empty_report");
  emit_report(SparsityReport{}, dir / "sparsity");
  emit_report(ContinualReport{}, dir / "continual");
  emit_report(ExtremeReport{}, dir / "extreme");
  EXPECT_EQ(slurp(dir / "sparsity" / "summary.csv"), "model,rate,n,skipped,mean_r2,std_r2\n");
  EXPECT_EQ(slurp(dir / "continual" / "summary.csv"), "model,rate,after_task,eval_task,n,mean_r2,std_r2\n");
  EXPECT_EQ(slurp(dir / "extreme" / "summary.csv"),
            "model,threshold,n,count,mean_r2,std_r2,mean_signed_error,std_signed_error\n");
  expect_xml(slurp(dir / "sparsity" / "sparsity.svg"));
  fs::remove_all(dir);
}

TEST(Report, UnwritableDirectoryNamesPath) {
  const fs::path blocker = fs::temp_directory_path() / "kanheat_blocker";
  fs::remove_all(blocker);
  std::ofstream(blocker) << "file";
  try {
    emit_report(SparsityReport{}, blocker / "sub");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("kanheat_blocker"), std::string::npos) << e.what();
  }
  fs::remove(blocker);
}

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const RunConfig c = parse_run_config(
      "[run]\nseed = 7\nseeds = 3\n[wall]\nthickness = 0.3\n[kan]\nwidths = 1,4,1\n[bench]\nrates = 1,0.5\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.seeds, 3);
  EXPECT_DOUBLE_EQ(c.wall.thickness, 0.3);
  EXPECT_EQ(c.kan_widths, (std::vector<int>{1, 4, 1}));
  EXPECT_EQ(c.rates, (std::vector<double>{1.0, 0.5}));
  EXPECT_THROW(parse_run_config("[run]\nsede = 7\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[nope]\nseed = 7\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[run]\nseed = seven\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[wall]\nconductivity = -1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[bench]\nrates = 1,0\n"), ConfigError);
  const std::string help = describe_config_defaults();
  for (const char* key : {"seed", "thickness", "widths", "population", "rates", "buildings"}) {
    EXPECT_NE(help.find(key), std::string::npos) << key;
  }
}

TEST(Cases, UnknownCaseListsValidIds) {
  try {
    case_settings("9", RunConfig{});
    FAIL();
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    for (const auto& id : kCaseIds) EXPECT_NE(w.find(id), std::string::npos) << w;
  }
}

TEST(Cases, SettingsFollowThePaper) {
  const RunConfig cfg;
  const CaseSettings c1 = case_settings("1", cfg);
  EXPECT_EQ(c1.widths, (std::vector<int>{1, 20, 10, 1}));
  EXPECT_EQ(c1.train.batch_size, 32u);
  EXPECT_DOUBLE_EQ(c1.train.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(c1.train.l2_coeff, 1e-5);
  const CaseSettings c2 = case_settings("2", cfg);
  EXPECT_EQ(c2.widths, (std::vector<int>{2, 30, 20, 10, 1}));
  EXPECT_EQ(c2.train.batch_size, 64u);
  EXPECT_DOUBLE_EQ(c2.train.learning_rate, 5e-4);
  EXPECT_DOUBLE_EQ(c2.train.l2_coeff, 5e-5);
  EXPECT_EQ(c2.seeds, 5);
  const CaseSettings s = case_settings("3star", cfg);
  EXPECT_EQ(s.widths, (std::vector<int>{25, 1}));
}

TEST(Cases, LockedLinearCaseGivesLinearSummation) {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.seeds = 1;
  const CaseReport rep = run_case("3star", cfg);
  const SeedRun* best = rep.best_run();
  ASSERT_NE(best, nullptr);
  EXPECT_GE(best->metrics.r2, 0.95);
  ASSERT_TRUE(best->linear.has_value());
  EXPECT_EQ(best->linear->coefs.size(), 25u);
  EXPECT_FALSE(best->partial);
}

TEST(Protocols, SparsityReportIsByteDeterministic) {
  SurrogateConfig sc;
  sc.buildings = 2;
  sc.days = 7;
  const Dataset raw = generate_case4_surrogate(4, sc);
  ProtocolOptions opt;
  opt.seeds = 2;
  opt.master_seed = 9;
  const std::vector<double> rates{1.0, 0.5};
  const fs::path a = fresh_dir("kanheat_sparsity_a");
  const fs::path b = fresh_dir("kanheat_sparsity_b");
  const SparsityReport ra = run_sparsity(raw, rates, opt);
  emit_report(ra, a);
  opt.parallel = false;
  emit_report(run_sparsity(raw, rates, opt), b);
  ASSERT_EQ(ra.cells.size(), 4u);
  for (const auto& c : ra.cells) {
    EXPECT_EQ(c.runs.size(), 2u);
    EXPECT_EQ(c.r2.n, 2);
  }
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  EXPECT_TRUE(fs::exists(a / "kan" / "0.50" / "seed1" / "history_train.csv"));
  expect_xml(slurp(a / "sparsity.svg"));
  fs::remove_all(a);
  fs::remove_all(b);
}
