#include "acdkit/error.hpp"
#include "acdkit/hacd.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

using namespace acdkit;

namespace {

Eigen::MatrixXd to_eigen(const oracle::Mat& m) {
  Eigen::MatrixXd out(m.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) out(i, j) = m[i][j];
  return out;
}

oracle::Mat to_oracle(const Eigen::MatrixXd& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

HacdModel unit_model(double cov) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, cov, cov, 1.0;
  return HacdModel::from_moments(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), c, 0.0);
}

/// Random SPD joint covariance A A^T + 0.2 I.
Eigen::MatrixXd random_spd(Eigen::Index d, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(gen);
  return a * a.transpose() + 0.2 * Eigen::MatrixXd::Identity(d, d);
}

FeatureStack random_stack(Dims grid, Eigen::Index dim, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureMatrix m(grid.pixels(), dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return FeatureStack(grid, std::move(m));
}

/// y = B x + noise, so x and y are correlated.
std::pair<FeatureStack, FeatureStack> correlated_stacks(Dims grid, Eigen::Index dx,
                                                        Eigen::Index dy, std::mt19937_64& gen) {
  const auto x = random_stack(grid, dx, gen);
  const auto noise = random_stack(grid, dy, gen);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd b(dy, dx);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = n(gen);
  FeatureMatrix y = x.values() * b.transpose() + 0.7 * noise.values();
  y.rowwise() += Eigen::RowVectorXd::LinSpaced(dy, 3.0, 5.0);
  return {x, FeatureStack(grid, std::move(y))};
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(HacdScore, UnitCorrelationAtOrigin) {
  const auto m = unit_model(0.5);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  EXPECT_NEAR(hacd_score(m, zero, zero), 0.5 * std::log(0.75), 1e-12);
  EXPECT_NEAR(hacd_score(m, zero, zero), -0.143841, 1e-6);
  EXPECT_NEAR(hacd_score(m, zero, zero),
              oracle::density_ratio_score({0}, {0}, {0, 0}, {{1, 0.5}, {0.5, 1}}), 1e-12);
}

TEST(HacdScore, MatchesDensityOracleAwayFromOrigin) {
  const auto m = unit_model(0.5);
  Eigen::VectorXd x(1), y(1);
  x << 2.0;
  y << -2.0;
  const double expected = oracle::density_ratio_score({2}, {-2}, {0, 0}, {{1, 0.5}, {0.5, 1}});
  EXPECT_NEAR(hacd_score(m, x, y), expected, 1e-9);
  EXPECT_GT(hacd_score(m, x, y), 0.0);
}

TEST(HacdScore, ZeroWhenBlocksIndependent) {
  std::mt19937_64 gen(3);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(5, 5);
  c.topLeftCorner(2, 2) = random_spd(2, gen);
  c.bottomRightCorner(3, 3) = random_spd(3, gen);
  const auto m = HacdModel::from_moments(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(3), c, 0.0);
  EXPECT_LE(m.quadratic().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(std::abs(m.constant()), 1e-10);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(2), y(3);
    for (auto& v : x) v = n(gen);
    for (auto& v : y) v = n(gen);
    ASSERT_LE(std::abs(hacd_score(m, x, y)), 1e-10);
  }
}

TEST(HacdScore, OracleEquivalenceOnRandomModels) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index d = trial % 2 == 0 ? 1 : 2;
    const auto c = random_spd(2 * d, gen);
    Eigen::VectorXd mean(2 * d);
    for (auto& v : mean) v = n(gen);
    const auto m = HacdModel::from_moments(mean.head(d), mean.tail(d), c, 0.0);
    Eigen::VectorXd x(d), y(d);
    for (auto& v : x) v = 2 * n(gen);
    for (auto& v : y) v = 2 * n(gen);
    const double expected = oracle::density_ratio_score(
        {x.data(), x.data() + d}, {y.data(), y.data() + d}, {mean.data(), mean.data() + 2 * d},
        to_oracle(c));
    ASSERT_NEAR(hacd_score(m, x, y), expected, 1e-9) << "trial " << trial;
  }
}

TEST(HacdScore, RejectsWrongDimensions) {
  const auto m = unit_model(0.3);
  EXPECT_EQ(kind_of([&] { hacd_score(m, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)); }),
            ErrorKind::DimensionMismatch);
}

TEST(FitHacd, MatchesTwoPassCovarianceOracle) {
  // var_x = var_y = 1, cov = 0.5 from a fixed-seed sampler.
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  const Dims grid{200, 100};
  FeatureMatrix xs(grid.pixels(), 1), ys(grid.pixels(), 1);
  std::vector<oracle::Vec> rows;
  for (Eigen::Index i = 0; i < grid.pixels(); ++i) {
    const double a = n(gen), b = n(gen);
    xs(i, 0) = a;
    ys(i, 0) = 0.5 * a + std::sqrt(0.75) * b;
    rows.push_back({xs(i, 0), ys(i, 0)});
  }
  const auto m = fit_hacd(FeatureStack(grid, xs), FeatureStack(grid, ys), Ridge::absolute(0.0));
  oracle::Vec mean;
  const auto c = oracle::covariance(rows, &mean);
  EXPECT_NEAR(m.mean_x()(0), mean[0], 1e-12);
  EXPECT_NEAR(m.mean_y()(0), mean[1], 1e-12);
  EXPECT_LE((m.covariance() - to_eigen(c)).cwiseAbs().maxCoeff(), 1e-12);

  Eigen::Matrix2d truth;
  truth << 1.0, 0.5, 0.5, 1.0;
  // 20000 samples: standard error of each entry is below 0.012.
  EXPECT_LE((m.covariance() - truth).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_EQ(m.covariance(), m.covariance().transpose());
  EXPECT_EQ(m.cov_xx()(0, 0), m.covariance()(0, 0));
  EXPECT_EQ(m.cov_yy()(0, 0), m.covariance()(1, 1));
}

TEST(FitHacd, MultivariateMatchesOracle) {
  std::mt19937_64 gen(5);
  const Dims grid{37, 29};  // not a multiple of the tile size
  const auto [x, y] = correlated_stacks(grid, 3, 2, gen);
  const auto m = fit_hacd(x, y, Ridge::absolute(0.0));
  std::vector<oracle::Vec> rows;
  for (Eigen::Index p = 0; p < grid.pixels(); ++p) {
    oracle::Vec r;
    for (Eigen::Index j = 0; j < 3; ++j) r.push_back(x.values()(p, j));
    for (Eigen::Index j = 0; j < 2; ++j) r.push_back(y.values()(p, j));
    rows.push_back(r);
  }
  const auto c = oracle::covariance(rows);
  EXPECT_LE((m.covariance() - to_eigen(c)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitHacd, IndependentNoiseShrinksQuadraticForm) {
  std::mt19937_64 gen(99);
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index side : {16, 64, 256}) {
    const Dims grid{side, side};
    const auto x = random_stack(grid, 2, gen);
    const auto y = random_stack(grid, 2, gen);
    const double q = fit_hacd(x, y, Ridge::absolute(0.0)).quadratic().cwiseAbs().maxCoeff();
    EXPECT_LT(q, previous) << "side " << side;
    previous = q;
  }
  EXPECT_LT(previous, 0.02);
}

TEST(FitHacd, RankDeficientNeedsRidge) {
  std::mt19937_64 gen(4);
  for (Eigen::Index pixels : {2, 3, 4}) {
    const Dims grid{pixels, 1};
    const auto x = random_stack(grid, 2, gen);
    const auto y = random_stack(grid, 2, gen);
    EXPECT_EQ(kind_of([&] { fit_hacd(x, y, Ridge::absolute(0.0)); }),
              ErrorKind::SingularCovariance)
        << pixels << " pixels";
    EXPECT_NO_THROW(fit_hacd(x, y, Ridge::absolute(1e-3)));
    EXPECT_NO_THROW(fit_hacd(x, y));
  }
}

TEST(FitHacd, ExactlyCollinearPairIsSingular) {
  const Dims grid{2, 1};
  FeatureMatrix xs(2, 1), ys(2, 1);
  xs << 1, 2;
  ys << 3, 5;
  try {
    fit_hacd(FeatureStack(grid, xs), FeatureStack(grid, ys), Ridge::absolute(0.0));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularCovariance);
    const bool reports_value = e.message().find("pivot") != std::string::npos ||
                               e.message().find("eigenvalue") != std::string::npos;
    EXPECT_TRUE(reports_value) << e.message();
  }
}

TEST(FitHacd, GridMismatch) {
  std::mt19937_64 gen(1);
  const auto x = random_stack({4, 4}, 1, gen);
  const auto y = random_stack({2, 8}, 1, gen);
  EXPECT_EQ(kind_of([&] { fit_hacd(x, y); }), ErrorKind::GridMismatch);
}

TEST(FitHacd, TraceScaledRidge) {
  std::mt19937_64 gen(6);
  const auto [x, y] = correlated_stacks({30, 30}, 2, 2, gen);
  const auto m = fit_hacd(x, y);
  EXPECT_DOUBLE_EQ(m.ridge(), 1e-6 * m.covariance().trace() / 4.0);
}

TEST(FitHacd, FitMaskRestrictsSample) {
  std::mt19937_64 gen(8);
  const Dims grid{20, 10};
  const auto [x, y] = correlated_stacks(grid, 1, 1, gen);
  Mask mask = Mask::Zero(10, 20);
  mask.topRows(5).setConstant(true);
  const auto m = fit_hacd(x, y, Ridge::absolute(0.0), &mask);
  const FeatureStack xt({20, 5}, x.values().topRows(100));
  const FeatureStack yt({20, 5}, y.values().topRows(100));
  const auto expected = fit_hacd(xt, yt, Ridge::absolute(0.0));
  EXPECT_LE((m.covariance() - expected.covariance()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ScoreMap, SinglePixelMatchesPointScore) {
  const auto m = unit_model(0.4);
  FeatureMatrix xs(1, 1), ys(1, 1);
  xs << 1.5;
  ys << -0.25;
  const auto map = score_map(m, FeatureStack({1, 1}, xs), FeatureStack({1, 1}, ys));
  ASSERT_EQ(map.scores.size(), 1);
  EXPECT_NEAR(map.scores(0), hacd_score(m, xs.row(0).transpose(), ys.row(0).transpose()), 1e-14);
}

TEST(ScoreMap, IndependentModelGivesZeroMap) {
  std::mt19937_64 gen(2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
  c.topLeftCorner(2, 2) = random_spd(2, gen);
  c.bottomRightCorner(2, 2) = random_spd(2, gen);
  const auto m = HacdModel::from_moments(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), c, 0.0);
  const auto x = random_stack({13, 7}, 2, gen);
  const auto y = random_stack({13, 7}, 2, gen);
  EXPECT_LE(score_map(m, x, y).scores.abs().maxCoeff(), 1e-10);
}

TEST(ScoreMap, MatchesPointScoresEverywhere) {
  std::mt19937_64 gen(12);
  const auto [x, y] = correlated_stacks({31, 17}, 2, 3, gen);
  const auto m = fit_hacd(x, y);
  const auto map = score_map(m, x, y);
  for (Eigen::Index p = 0; p < map.scores.size(); ++p) {
    ASSERT_NEAR(map.scores(p),
                hacd_score(m, x.pixel(p).transpose(), y.pixel(p).transpose()), 1e-9);
  }
}

TEST(ScoreMap, BitwiseIndependentOfWorkerCount) {
  std::mt19937_64 gen(13);
  const auto [x, y] = correlated_stacks({70, 40}, 3, 3, gen);
  auto run = [&](int threads) {
    testutil::ThreadsEnv env(threads);
    const auto m = fit_hacd(x, y);
    return std::pair{m.covariance(), score_map(m, x, y).scores};
  };
  const auto serial = run(1);
  for (int t : {4, 16}) {
    const auto parallel = run(t);
    EXPECT_EQ(std::memcmp(serial.first.data(), parallel.first.data(),
                          sizeof(double) * serial.first.size()), 0);
    EXPECT_EQ(std::memcmp(serial.second.data(), parallel.second.data(),
                          sizeof(double) * serial.second.size()), 0);
  }
}

TEST(ScoreMap, MeanShiftInvariance) {
  std::mt19937_64 gen(14);
  const auto [x, y] = correlated_stacks({40, 40}, 2, 2, gen);
  const auto base = score_map(fit_hacd(x, y), x, y);
  FeatureMatrix shifted = x.values();
  shifted.rowwise() += Eigen::RowVector2d(50.0, -7.5);
  const FeatureStack xs(x.dims(), shifted);
  const auto moved = score_map(fit_hacd(xs, y), xs, y);
  EXPECT_LE((base.scores - moved.scores).abs().maxCoeff(), 1e-8);
}

TEST(ScoreMap, InvertibleLinearMapInvariance) {
  std::mt19937_64 gen(15);
  const auto [x, y] = correlated_stacks({40, 40}, 3, 2, gen);
  const auto base = score_map(fit_hacd(x, y, Ridge::absolute(0.0)), x, y);
  Eigen::Matrix3d a;
  a << 2.0, 0.3, -1.0, 0.1, 1.5, 0.2, -0.4, 0.0, 0.9;
  const FeatureStack xa(x.dims(), x.values() * a.transpose());
  const auto mapped = score_map(fit_hacd(xa, y, Ridge::absolute(0.0)), xa, y);
  const Eigen::ArrayXd scale = base.scores.abs().max(1.0);
  EXPECT_LE(((base.scores - mapped.scores).abs() / scale).maxCoeff(), 1e-6);
}

TEST(ScoreMap, DimensionAndGridChecks) {
  std::mt19937_64 gen(16);
  const auto m = unit_model(0.2);
  const auto x2 = random_stack({3, 3}, 2, gen);
  const auto y1 = random_stack({3, 3}, 1, gen);
  const auto y_other = random_stack({9, 1}, 1, gen);
  EXPECT_EQ(kind_of([&] { score_map(m, x2, y1); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { score_map(m, y1, y_other); }), ErrorKind::GridMismatch);
}

TEST(DiffScore, Examples) {
  const Raster a(2, 1, std::vector<float>{1, 2});
  const Raster b(2, 1, std::vector<float>{3, 1});
  const auto map = diff_score(acdkit::make_pair(a, b));
  EXPECT_EQ(map.scores(0), 2.0);
  EXPECT_EQ(map.scores(1), 1.0);
  EXPECT_TRUE((diff_score(acdkit::make_pair(b, a)).scores == map.scores).all());
  EXPECT_TRUE((diff_score(acdkit::make_pair(a, a)).scores == 0.0).all());
}

TEST(DiffScore, SymmetricAndNonNegative) {
  std::mt19937_64 gen(18);
  std::normal_distribution<float> n(0.0f, 100.0f);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> u(48), v(48);
    for (auto& t : u) t = n(gen);
    for (auto& t : v) t = n(gen);
    const Raster a(8, 6, u), b(8, 6, v);
    const auto ab = diff_score(acdkit::make_pair(a, b));
    const auto ba = diff_score(acdkit::make_pair(b, a));
    EXPECT_TRUE((ab.scores == ba.scores).all());
    EXPECT_TRUE((ab.scores >= 0).all());
  }
}

TEST(ModelJson, RoundTripPreservesScores) {
  std::mt19937_64 gen(19);
  const auto [x, y] = correlated_stacks({20, 20}, 2, 2, gen);
  const auto m = fit_hacd(x, y);
  testutil::TempDir dir;
  save_model(m, dir / "model.json");
  const auto back = load_model(dir / "model.json");
  EXPECT_TRUE(back.covariance() == m.covariance());
  EXPECT_TRUE(back.mean_x() == m.mean_x());
  EXPECT_TRUE(back.mean_y() == m.mean_y());
  EXPECT_EQ(back.ridge(), m.ridge());
  EXPECT_TRUE((score_map(back, x, y).scores == score_map(m, x, y).scores).all());
}

TEST(ModelJson, RejectsMalformedDocuments) {
  auto doc = to_json(unit_model(0.1));
  doc["covariance"] = std::vector<double>{1.0, 0.0, 0.0};
  EXPECT_EQ(kind_of([&] { model_from_json(doc); }), ErrorKind::FormatError);
  EXPECT_EQ(kind_of([&] { model_from_json(nlohmann::json{{"format", "other"}}); }),
            ErrorKind::FormatError);
}
