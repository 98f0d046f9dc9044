#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "kanheat/datasets.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/numerics.hpp"
#include "oracles.hpp"

using namespace kanheat;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

// Multiset of rows, so order does not matter.
std::map<std::vector<double>, int> row_bag(const Dataset& d) {
  std::map<std::vector<double>, int> bag;
  for (std::size_t r = 0; r < d.rows; ++r) {
    std::vector<double> key(d.row(r).begin(), d.row(r).end());
    key.push_back(d.targets[r]);
    ++bag[key];
  }
  return bag;
}

Dataset counting(std::size_t rows) {
  Dataset d;
  d.rows = rows;
  d.cols = 2;
  d.feature_names = {"a", "b"};
  for (std::size_t r = 0; r < rows; ++r) {
    d.inputs.insert(d.inputs.end(), {static_cast<double>(r), std::sin(static_cast<double>(r))});
    d.targets.push_back(static_cast<double>(r * r));
  }
  return d;
}

}  // namespace

TEST(Split, SizesAndDisjointness) {
  const SplitIndices s = shuffle_split(100, 0.7, 0.15, 4);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.val.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  const SplitIndices t = shuffle_split(100, 0.7, 0.15, 4);
  EXPECT_EQ(s.train, t.train);
}

TEST(Case1, TargetEqualsInput) {
  const CaseData c = gen_case1(1);
  ASSERT_EQ(c.data.rows, 100u);
  ASSERT_EQ(c.data.cols, 1u);
  EXPECT_EQ(c.split.train.size(), 70u);
  bool saw0 = false, saw1 = false;
  for (std::size_t r = 0; r < c.data.rows; ++r) {
    EXPECT_EQ(c.data.targets[r], c.data.at(r, 0));
    saw0 |= c.data.at(r, 0) == 0.0;
    saw1 |= c.data.at(r, 0) == 1.0;
  }
  EXPECT_TRUE(saw0 && saw1);
  // The physical slope of the normalized identity is (TL - T0) / L.
  const auto& n = c.data.normalization;
  EXPECT_NEAR(n.target_scale / n.input_scale[0], 83.333333333333, 1e-9);
}

TEST(Case2, BoundaryFarFieldAndClosedForm) {
  const Case2Config cfg;
  const CaseData c = gen_case2(3, cfg);
  ASSERT_EQ(c.data.rows, 5000u);
  EXPECT_EQ(c.split.train.size(), 3000u);
  EXPECT_EQ(c.split.val.size(), 1000u);
  const Dataset phys = denormalize(c.data);
  std::size_t far = 0;
  for (std::size_t r = 0; r < phys.rows; ++r) {
    const double x = phys.at(r, 0), tau = phys.at(r, 1);
    const double y = c.data.targets[r];
    if (x == 0.0) EXPECT_DOUBLE_EQ(y, 1.0);
    const double eta = x / (2.0 * std::sqrt(cfg.alpha * tau));
    if (eta > 6.0) {
      EXPECT_LT(y, 1e-9);
      ++far;
    }
    // The series loses accuracy to cancellation far out; the tail is covered above.
    if (eta <= 5.0) EXPECT_NEAR(y, 1.0 - oracle::erf_series(eta), 1e-12) << r;
  }
  EXPECT_GT(far, 0u);
}

TEST(Case3, StarTargetsReevaluateFromLags) {
  const Case3Config cfg;
  const CaseData c = gen_case3(2, Case3Variant::Star, cfg);
  ASSERT_EQ(c.data.cols, 25u);
  const Dataset phys = denormalize(c.data);
  const ResponseFactorSet rf = response_factors(cfg.wall);
  double worst = 0.0;
  for (std::size_t r = 0; r < phys.rows; ++r) {
    // The synthetic profile has a 24 h period, so lag j equals lag j mod 24.
    double q = 0.0;
    for (std::size_t j = 0; j < rf.y.size(); ++j) q += rf.y[j] * (phys.at(r, j % 24) - cfg.indoor);
    worst = std::max(worst, std::abs(q - phys.targets[r]));
  }
  EXPECT_LE(worst, 1e-9);
  EXPECT_GE(oracle::ols_r2(c.data), 0.999);
}

TEST(Case3, ConstantSolAirAtIndoorGivesZeroFlux) {
  Case3Config cfg;
  cfg.series.assign(24 * 200, cfg.indoor);
  const CaseData c = gen_case3(2, Case3Variant::Naive, cfg);
  ASSERT_EQ(c.data.cols, 24u);
  const Dataset phys = denormalize(c.data);
  for (double y : phys.targets) EXPECT_NEAR(y, 0.0, 1e-12);
  cfg.series.resize(10);
  EXPECT_THROW(gen_case3(2, Case3Variant::Naive, cfg), ConfigError);
}

TEST(Case4, LoadsWellFormedFileAndDropsIncompleteRows) {
  const std::string header = "temperature,dew_point,humidity,pressure,area,u_value,heat_capacity,heat_flow\n";
  const auto ok = temp_file("kanheat_c4_ok.csv", header +
                                                     "30,20,55,1010,120,0.5,200,4000\n"
                                                     "31,21,57,1011,80,0.6,210,3500\n"
                                                     "29,19,50,1009,60,0.4,190,2100\n");
  const Case4Load a = load_case4(ok);
  EXPECT_EQ(a.data.rows, 3u);
  EXPECT_EQ(a.data.cols, 7u);
  EXPECT_EQ(a.dropped, 0u);
  EXPECT_EQ(a.data.at(1, 5), 0.6);
  EXPECT_EQ(a.data.targets[2], 2100.0);

  const auto holes = temp_file("kanheat_c4_holes.csv", header +
                                                           "30,20,55,1010,120,0.5,200,4000\n"
                                                           "31,,57,1011,80,0.6,210,3500\n"
                                                           "29,19,50,1009,abc,0.4,190,2100\n");
  const Case4Load b = load_case4(holes);
  EXPECT_EQ(b.data.rows, 1u);
  EXPECT_EQ(b.dropped, 2u);

  const auto missing = temp_file("kanheat_c4_missing.csv",
                                 "temperature,dew_point,humidity,pressure,area,heat_capacity,heat_flow\n"
                                 "30,20,55,1010,120,200,4000\n");
  try {
    load_case4(missing);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("u_value"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_case4(fs::temp_directory_path() / "kanheat_no_such_file.csv"), IoError);
  for (const auto& p : {ok, holes, missing}) fs::remove(p);
}

TEST(Case4, SurrogateRoundTripsThroughCsv) {
  SurrogateConfig cfg;
  cfg.buildings = 2;
  cfg.days = 3;
  const Dataset s = generate_case4_surrogate(11, cfg);
  EXPECT_EQ(s.cols, 7u);
  EXPECT_EQ(s.rows, 2u * 3u * 24u);
  const fs::path p = fs::temp_directory_path() / "kanheat_surrogate.csv";
  write_case4_csv(s, p);
  const Case4Load back = load_case4(p);
  EXPECT_EQ(back.dropped, 0u);
  EXPECT_EQ(back.data.inputs, s.inputs);
  EXPECT_EQ(back.data.targets, s.targets);
  const Dataset again = generate_case4_surrogate(11, cfg);
  EXPECT_EQ(again.inputs, s.inputs);
  EXPECT_EQ(again.targets, s.targets);
  fs::remove(p);
}

TEST(Subsample, RatesAndDeterminism) {
  const Dataset d = counting(100);
  const Dataset full = subsample(d, 1.0, 3);
  EXPECT_EQ(row_bag(full), row_bag(d));
  EXPECT_EQ(subsample(d, 0.5, 3).rows, 50u);
  EXPECT_EQ(subsample(d, 0.05, 3).rows, 5u);
  EXPECT_EQ(subsample(d, 0.5, 9).inputs, subsample(d, 0.5, 9).inputs);
  EXPECT_NE(subsample(d, 0.5, 9).inputs, subsample(d, 0.5, 10).inputs);
  EXPECT_THROW(subsample(d, 0.0, 1), ConfigError);
}

TEST(Tasks, SizesAndUnion) {
  const auto nine = split_tasks(counting(9), 3, 1);
  for (const auto& t : nine) EXPECT_EQ(t.rows, 3u);
  const Dataset d = counting(10);
  const auto ten = split_tasks(d, 3, 1);
  EXPECT_EQ(ten[0].rows, 4u);
  EXPECT_EQ(ten[1].rows, 3u);
  EXPECT_EQ(ten[2].rows, 3u);
  auto bag = row_bag(ten[0]);
  for (int t = 1; t < 3; ++t) {
    for (const auto& [k, v] : row_bag(ten[static_cast<std::size_t>(t)])) bag[k] += v;
  }
  EXPECT_EQ(bag, row_bag(d));
  EXPECT_THROW(split_tasks(counting(2), 3, 1), DataError);
}

TEST(Tasks, NormalizeByFirstTask) {
  const auto tasks = normalize_by_task1(split_tasks(counting(300), 3, 5));
  const Dataset& t1 = tasks[0];
  for (std::size_t c = 0; c < t1.cols; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < t1.rows; ++r) m += t1.at(r, c);
    m /= static_cast<double>(t1.rows);
    for (std::size_t r = 0; r < t1.rows; ++r) v += (t1.at(r, c) - m) * (t1.at(r, c) - m);
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(v / static_cast<double>(t1.rows)), 1.0, 1e-9);
  }
  const auto raw = split_tasks(counting(300), 3, 5);
  for (std::size_t t = 0; t < 3; ++t) {
    const Dataset back = denormalize(tasks[t]);
    for (std::size_t i = 0; i < back.inputs.size(); ++i) EXPECT_NEAR(back.inputs[i], raw[t].inputs[i], 1e-9);
    for (std::size_t i = 0; i < back.rows; ++i) EXPECT_NEAR(back.targets[i], raw[t].targets[i], 1e-6);
  }
}

TEST(DatasetCsv, RoundTripIsExact) {
  Dataset d = counting(20);
  d.target_name = "y";
  const fs::path p = fs::temp_directory_path() / "kanheat_ds.csv";
  write_dataset_csv(d, p);
  const Dataset back = read_dataset_csv(p, "y");
  EXPECT_EQ(back.feature_names, d.feature_names);
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.targets, d.targets);
  EXPECT_THROW(read_dataset_csv(p, "nope"), SchemaError);
  fs::remove(p);
}
