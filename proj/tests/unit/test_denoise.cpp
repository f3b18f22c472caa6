#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "flowph/denoise.hpp"
#include "flowph/errors.hpp"
#include "flowph/sweep.hpp"
#include "oracles.hpp"

using namespace flowph;

namespace {

TimeSeriesPointCloud cloud_from(const Eigen::MatrixXd& pts, double dt = 1.0) {
  return TimeSeriesPointCloud(TimeSeriesPointCloud::Points(pts), dt, 0.0, 1);
}

Eigen::MatrixXd random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd pts(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) pts(r, c) = g(rng);
  return pts;
}

TimeSeriesPointCloud noisy_chirp(std::uint64_t seed) {
  const auto clean = generate_chirp({}).cloud;
  return add_noise(clean, NoiseSpec::relative_db(clean, 20.0, seed));
}

std::vector<FilterSpec> all_filters(const TimeSeriesPointCloud& cloud) {
  auto field = std::make_shared<const CovarianceField>(covariance_field(cloud, {3, 15}));
  return {FilterSpec::moving(20),          FilterSpec::adaptive_moving(),
          FilterSpec::nearest(20),         FilterSpec::spherical(0.8),
          FilterSpec::ellipsoidal(1.0, field), FilterSpec::nearest(10, Aggregator::geometric_median),
          FilterSpec::spherical(0.8, Aggregator::geometric_median),
          FilterSpec::ellipsoidal(1.0, field, Aggregator::geometric_median)};
}

}  // namespace

TEST_CASE("moving average") {
  const std::vector<double> x{3.0, -1.0, 4.0, 1.0, -5.0, 9.0};
  CHECK(moving_average(x, 1) == x);

  const std::vector<double> flat(10, 2.5);
  CHECK(moving_average(flat, 4) == flat);

  std::vector<double> alt;
  for (int i = 0; i < 12; ++i) alt.push_back(i % 2 ? -1.0 : 1.0);
  const auto smoothed = moving_average(alt, 2);
  for (std::size_t i = 0; i + 1 < alt.size(); ++i) CHECK(smoothed[i] == 0.0);

  // Window [i-1, i+1] for w = 3, truncated at the ends.
  const auto m3 = moving_average(x, 3);
  CHECK(m3[0] == doctest::Approx((3.0 - 1.0) / 2));
  CHECK(m3[2] == doctest::Approx((-1.0 + 4.0 + 1.0) / 3));
  CHECK(m3[5] == doctest::Approx((-5.0 + 9.0) / 2));
  CHECK_THROWS_AS(moving_average(x, 0), InvalidArgument);
}

TEST_CASE("adaptive windows follow the Nyquist rule") {
  const double fs = 200.0;
  std::vector<double> sine;
  for (int i = 0; i < 400; ++i) sine.push_back(std::sin(2.0 * std::numbers::pi * (fs / 20.0) * i / fs));
  const auto w = adaptive_windows(sine, fs);
  for (const auto v : w) {
    CHECK(v >= 9);
    CHECK(v <= 11);
  }
}

TEST_CASE("adaptive windows shrink along a chirp") {
  const auto chirp = generate_chirp({});
  const auto& pts = chirp.cloud.points();
  std::vector<double> x(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) x[static_cast<std::size_t>(i)] = pts(i, 0);
  const auto w = adaptive_windows(x, 1.0 / chirp.cloud.dt());
  for (std::size_t i = 0; i + 1 < w.size(); ++i) CHECK(w[i + 1] <= w[i]);
  CHECK(w.front() > w.back());
}

TEST_CASE("adaptive average of a constant series") {
  const std::vector<double> flat(100, -3.0);
  const auto w = adaptive_windows(flat, 50.0);
  for (const auto v : w) CHECK(v == 3);
  CHECK(adaptive_moving_average(flat, 50.0) == flat);
  CHECK_THROWS_AS(adaptive_moving_average(std::vector<double>(5, 1.0), 50.0), InvalidArgument);
}

TEST_CASE("geometric median: small sets") {
  Eigen::MatrixXd one(1, 3);
  one << 1.0, -2.0, 3.0;
  CHECK(geometric_median(one).point == one.row(0).transpose());

  Eigen::MatrixXd two(2, 2);
  two << 0.0, 0.0, 4.0, 2.0;
  const auto mid = geometric_median(two).point;
  CHECK(mid(0) == 2.0);
  CHECK(mid(1) == 1.0);

  Eigen::MatrixXd sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  const auto c = geometric_median(sq).point;
  CHECK(std::abs(c(0) - 0.5) <= 1e-6);
  CHECK(std::abs(c(1) - 0.5) <= 1e-6);
  const auto grid = oracle::grid_median_2d(sq, -1.0, 2.0, 100);
  CHECK((c - grid).norm() <= 1e-6);

  CHECK_THROWS_AS(geometric_median(Eigen::MatrixXd(0, 2)), InvalidArgument);
}

TEST_CASE("geometric median: a dominant data point is the answer") {
  // Three copies at the origin outweigh the pull of the other two points.
  Eigen::MatrixXd pts(5, 2);
  pts << 0, 0, 0, 0, 0, 0, 1, 0, 0, 1;
  const auto r = geometric_median(pts);
  CHECK(r.point.norm() == 0.0);
}

TEST_CASE("geometric median: agrees with grid search, objective never rises") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_points(rng, 5 + trial, 2);
    const auto r = geometric_median(pts);
    for (std::size_t k = 1; k < r.objective.size(); ++k) CHECK(r.objective[k] <= r.objective[k - 1]);
    const auto grid = oracle::grid_median_2d(pts, pts.minCoeff(), pts.maxCoeff(), 100);
    CHECK((r.point - grid).norm() <= 1e-6);
    CHECK(oracle::sum_of_distances(pts, r.point) <= oracle::sum_of_distances(pts, grid) + 1e-8);
  }
}

TEST_CASE("topological filters: hand example and limits") {
  Eigen::MatrixXd pts(4, 2);
  pts << 0, 0, 1, 0, 0, 1, 10, 10;
  const auto cloud = cloud_from(pts);
  const auto out = apply_filter(cloud, FilterSpec::spherical(2.0));
  CHECK(out.points()(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(out.points()(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(out.points().row(3) == pts.row(3));

  std::mt19937_64 rng(73);
  const auto rand = cloud_from(random_points(rng, 40, 2));
  CHECK(apply_filter(rand, FilterSpec::spherical(1e-100)).points() == rand.points());

  const auto all = apply_filter(rand, FilterSpec::nearest(39));
  const Eigen::RowVectorXd centroid = rand.points().colwise().mean();
  for (Eigen::Index i = 0; i < 40; ++i) CHECK((all.points().row(i) - centroid).norm() <= 1e-12);
}

TEST_CASE("neighbourhoods contain the centre and follow each rule") {
  const auto cloud = noisy_chirp(3);
  auto field = std::make_shared<const CovarianceField>(covariance_field(cloud, {3, 15}));
  for (std::size_t i = 0; i < cloud.size(); i += 23) {
    const auto knn = filter_neighborhood(cloud, FilterSpec::nearest(20), i);
    CHECK(knn.size() == 21);
    CHECK(std::binary_search(knn.begin(), knn.end(), i));

    const auto ball = filter_neighborhood(cloud, FilterSpec::spherical(0.8), i);
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      CHECK(std::binary_search(ball.begin(), ball.end(), j) == (cloud.squared_distance(i, j) <= 0.64));
    }
    const auto ell = filter_neighborhood(cloud, FilterSpec::ellipsoidal(1.2, field), i);
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      const Eigen::VectorXd diff = (cloud.point(j) - cloud.point(i)).transpose();
      const double q = diff.dot((*field)[i].sigma.ldlt().solve(diff));
      if (std::abs(q - 1.44) > 1e-9) CHECK(std::binary_search(ell.begin(), ell.end(), j) == (q <= 1.44));
    }
    CHECK(std::binary_search(ell.begin(), ell.end(), i));
  }
}

TEST_CASE("ellipsoidal filter with identity covariances equals the spherical filter") {
  const auto cloud = noisy_chirp(5);
  auto iso = std::make_shared<const CovarianceField>(CovarianceField::isotropic(cloud.size(), 2));
  for (const double r : {0.3, 0.9, 2.0}) {
    for (const auto agg : {Aggregator::mean, Aggregator::geometric_median}) {
      CHECK(apply_filter(cloud, FilterSpec::ellipsoidal(r, iso, agg)).points() ==
            apply_filter(cloud, FilterSpec::spherical(r, agg)).points());
    }
  }
}

TEST_CASE("intersection neighbourhoods contain the containment ones") {
  const auto cloud = noisy_chirp(7);
  auto field = std::make_shared<const CovarianceField>(covariance_field(cloud, {3, 15}));
  auto inter = FilterSpec::ellipsoidal(0.8, field);
  inter.intersection_neighborhoods = true;
  for (std::size_t i = 0; i < cloud.size(); i += 31) {
    const auto a = filter_neighborhood(cloud, FilterSpec::ellipsoidal(0.8, field), i);
    const auto b = filter_neighborhood(cloud, inter, i);
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST_CASE("filters are translation equivariant and keep metadata") {
  const auto cloud = noisy_chirp(9);
  Eigen::RowVectorXd shift(2);
  shift << 3.25, -1.5;
  const TimeSeriesPointCloud::Points moved = cloud.points().rowwise() + shift;
  const auto shifted = cloud.with_points(moved);
  for (auto spec : all_filters(cloud)) {
    const auto a = apply_filter(cloud, spec);
    const auto b = apply_filter(shifted, spec);
    CHECK(a.size() == cloud.size());
    CHECK(a.dim() == cloud.dim());
    CHECK(a.dt() == cloud.dt());
    CHECK(a.t0() == cloud.t0());
    const double tol = spec.aggregator == Aggregator::geometric_median ? 1e-8 : 1e-12;
    const Eigen::MatrixXd expected = a.points().rowwise() + shift;
    CHECK((b.points() - expected).cwiseAbs().maxCoeff() <= tol);
  }
}

TEST_CASE("mean outputs lie in the hull of their neighbourhood") {
  const auto cloud = noisy_chirp(11);
  for (auto spec : all_filters(cloud)) {
    if (!spec.topological() || spec.aggregator != Aggregator::mean) continue;
    const auto out = apply_filter(cloud, spec);
    for (std::size_t i = 0; i < cloud.size(); i += 7) {
      const auto nb = filter_neighborhood(cloud, spec, i);
      for (int a = 0; a < 32; ++a) {
        const double th = 2.0 * std::numbers::pi * a / 32;
        const Eigen::Vector2d dir(std::cos(th), std::sin(th));
        double hi = -1e300;
        for (const auto j : nb) hi = std::max(hi, cloud.point(j).dot(dir.transpose()));
        CHECK(out.point(i).dot(dir.transpose()) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("filter validation") {
  const auto cloud = noisy_chirp(13);
  CHECK_THROWS_AS(apply_filter(cloud, FilterSpec::moving(0)), InvalidArgument);
  CHECK_THROWS_AS(apply_filter(cloud, FilterSpec::nearest(0)), InvalidArgument);
  CHECK_THROWS_AS(apply_filter(cloud, FilterSpec::spherical(0.0)), InvalidArgument);
  CHECK_THROWS_AS(apply_filter(cloud, FilterSpec::ellipsoidal(1.0, nullptr)), InvalidArgument);
  auto short_field = std::make_shared<const CovarianceField>(CovarianceField::isotropic(3, 2));
  CHECK_THROWS_AS(apply_filter(cloud, FilterSpec::ellipsoidal(1.0, short_field)), InvalidArgument);
}

TEST_CASE("rmse") {
  const auto clean = generate_chirp({}).cloud;
  auto r = rmse(clean, clean);
  CHECK(r.per_axis == std::vector<double>{0.0, 0.0});

  TimeSeriesPointCloud::Points off = clean.points();
  off.col(1).array() += 0.75;
  r = rmse(clean, clean.with_points(off));
  CHECK(r.per_axis[0] == 0.0);
  CHECK(r.per_axis[1] == doctest::Approx(0.75).epsilon(1e-12));

  Eigen::MatrixXd a(4, 1), b(4, 1);
  a << 0, 0, 0, 0;
  b << 1, -2, 3, 0;
  CHECK(rmse(cloud_from(a), cloud_from(b)).per_axis[0] == doctest::Approx(std::sqrt(14.0 / 4.0)));
  CHECK_THROWS_AS(rmse(clean, cloud_from(a)), InvalidArgument);

  CHECK(rmse(clean, apply_filter(clean, FilterSpec::spherical(1e-100))).per_axis == std::vector<double>{0.0, 0.0});
}

TEST_CASE("sweep: one cell of the moving average gives one row per axis") {
  SweepConfig config;
  config.filters = {{"moving_average", FilterSpec::Kind::moving_average}};
  const auto rows = snr_sweep(config);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].axis == 0);
  CHECK(rows[1].axis == 1);
  CHECK(rows[0].filter == "moving_average");
  CHECK(rows[0].rmse.has_value());
  CHECK(rows[0].snr_db == 20.0);
  CHECK(rows[0].seed == 1);

  const auto again = snr_sweep(config);
  CHECK(*again[1].rmse == *rows[1].rmse);
}

TEST_CASE("sweep: topological filters pick scales from their own diagrams") {
  SweepConfig config;
  config.filters = {{"spherical", FilterSpec::Kind::spherical}, {"ellipsoidal", FilterSpec::Kind::ellipsoidal}};
  config.snr_db = {20.0, 30.0};
  config.seeds = {1, 2};
  const auto rows = snr_sweep(config);
  CHECK(rows.size() == 2 * 2 * 2 * 2);
  for (const auto& r : rows) {
    REQUIRE(r.rmse.has_value());
    CHECK(*r.rmse >= 0.0);
  }
  CHECK(rows.front().snr_db == 20.0);
  CHECK(rows.back().snr_db == 30.0);
  CHECK(rows.back().seed == 2);
}

TEST_CASE("scale anchors") {
  CHECK_FALSE(ScaleAnchor::parse("death").schedule_index.has_value());
  CHECK(ScaleAnchor::parse("schedule:2").schedule_index == 2u);
  CHECK(ScaleAnchor::parse("schedule:3").to_string() == "schedule:3");
  CHECK_THROWS_AS(ScaleAnchor::parse("schedule:4"), InvalidArgument);
  CHECK_THROWS_AS(ScaleAnchor::parse("birth"), InvalidArgument);
  const DominantClass dom{1.0, 3.0, 2.0, false, 0};
  CHECK(ScaleAnchor::parse("death").pick(dom) == 3.0);
  CHECK(ScaleAnchor::parse("schedule:1").pick(dom) == 2.0);
  CHECK(radius_from_rips(3.0) == 1.5);
}
