// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "flowph/cli.hpp"
#include "flowph/denoise.hpp"
#include "flowph/ellipsoid.hpp"
#include "flowph/filtration.hpp"
#include "flowph/neighborhoods.hpp"
#include "flowph/persistence.hpp"
#include "flowph/recurrence.hpp"
#include "flowph/signal_model.hpp"
#include "flowph/sweep.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace flowph;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

TimeSeriesPointCloud cloud_from(const Eigen::MatrixXd& pts) {
  return TimeSeriesPointCloud(TimeSeriesPointCloud::Points(pts), 1.0, 0.0, 1);
}

Eigen::MatrixXd uniform_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd pts(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) pts(r, c) = u(rng);
  return pts;
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& pts) {
  Eigen::MatrixXd m(pts.rows(), pts.rows());
  for (Eigen::Index a = 0; a < pts.rows(); ++a)
    for (Eigen::Index b = 0; b < pts.rows(); ++b) m(a, b) = (pts.row(a) - pts.row(b)).norm();
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------------------

Verdict ellipsoid_intersection() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> centre(-2.0, 2.0), scale(0.3, 2.5);
  std::size_t checked = 0, exempt = 0, wrong = 0;
  double solver_time = 0.0;
  for (int trial = 0; trial < 700; ++trial) {
    const int d = trial < 500 ? 2 : 3;
    const Eigen::MatrixXd si = oracle::random_spd(rng, d, 0.05, 2.0);
    const Eigen::MatrixXd sj = oracle::random_spd(rng, d, 0.05, 2.0);
    Eigen::VectorXd xi(d), xj(d);
    for (int a = 0; a < d; ++a) xi(a) = centre(rng), xj(a) = centre(rng);
    const double eps = scale(rng);

    const auto start = Clock::now();
    const bool got = intersection_test(si, sj, xi, xj, eps).intersects;
    solver_time += seconds_since(start);

    const auto full = intersection_test(si, sj, xi, xj, eps, {1e-6, 100, false});
    if (std::abs(full.k_min) <= 1e-9) {
      ++exempt;
      continue;
    }
    const bool expected = oracle::ellipsoids_overlap({xi, si, eps}, {xj, sj, eps}, d == 2 ? 10000 : 6000);
    ++checked;
    wrong += got != expected;
  }
  return {wrong == 0 && solver_time < 10.0,
          fmt::format("{} agree of {} checked, {} in tangency band, solver {:.3f}s", checked - wrong, checked, exempt,
                      solver_time)};
}

Verdict identity_reduction() {
  std::mt19937_64 rng(77);
  const Eigen::Index n = 200;
  const auto cloud = cloud_from(uniform_points(rng, n, 2, -1.0, 1.0));
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);

  const auto start = Clock::now();
  double worst_edge = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      const auto birth = edge_birth_scale(eye, eye, cloud.point(i), cloud.point(j), 10.0);
      const double half = 0.5 * std::sqrt(cloud.squared_distance(i, j));
      worst_edge = std::max(worst_edge, birth ? std::abs(*birth - half) : INFINITY);
    }
  }
  const double cap = 0.75;
  const auto ell = compute_persistence(ellipsoid_filtration(cloud, CovarianceField::isotropic(cloud.size(), 2), cap));
  const double elapsed = seconds_since(start);
  const auto vr = compute_persistence(vietoris_rips_filtration(cloud, 2.0 * cap));

  bool paired = ell.pairs.size() == vr.pairs.size();
  double worst_value = 0.0;
  for (std::size_t k = 0; paired && k < ell.pairs.size(); ++k) {
    const auto& a = ell.pairs[k];
    const auto& b = vr.pairs[k];
    paired = a.dim == b.dim && a.unresolved == b.unresolved && a.edge.has_value() == b.edge.has_value() &&
             a.triangle.has_value() == b.triangle.has_value();
    if (paired && a.edge) paired = a.edge->i == b.edge->i && a.edge->j == b.edge->j;
    if (paired && a.triangle) {
      paired = a.triangle->i == b.triangle->i && a.triangle->j == b.triangle->j && a.triangle->k == b.triangle->k;
    }
    worst_value = std::max(worst_value, std::abs(a.birth - 0.5 * b.birth));
    if (std::isinf(a.death) || std::isinf(b.death)) {
      paired = paired && std::isinf(a.death) && std::isinf(b.death);
    } else {
      worst_value = std::max(worst_value, std::abs(a.death - 0.5 * b.death));
    }
  }
  const bool ok = worst_edge <= 1e-5 && paired && worst_value <= 1e-5 && elapsed < 5.0;
  return {ok, fmt::format("max edge error {:.2e}, {} pairs {}, max value error {:.2e}, {:.2f}s", worst_edge,
                          ell.pairs.size(), paired ? "matched" : "MISMATCHED", worst_value, elapsed)};
}

Verdict persistence_oracle() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> size(3, 12), grid(0, 3);
  std::size_t clouds_ok = 0, evaluations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = size(rng);
    const Eigen::Index d = 2 + trial % 2;
    Eigen::MatrixXd pts = uniform_points(rng, n, d, 0.0, 1.0);
    if (trial % 4 == 0) pts = pts.unaryExpr([&](double) { return static_cast<double>(grid(rng)); });
    const auto diagram = compute_persistence(vietoris_rips_filtration(cloud_from(pts), 100.0));
    const auto simplices = oracle::flag_simplices(distance_matrix(pts));

    bool ok = true;
    std::vector<double> critical{0.0};
    for (const auto& s : simplices) critical.push_back(s.value);
    for (const double v : critical) {
      const auto [b0, b1] = oracle::betti_by_rank(simplices, v);
      ok = ok && betti_at(diagram, 0, v) == b0 && betti_at(diagram, 1, v) == b1;
      ++evaluations;
    }
    clouds_ok += ok;
  }

  Eigen::MatrixXd square(4, 2);
  square << 0, 0, 1, 0, 1, 1, 0, 1;
  const auto h1 = compute_persistence(vietoris_rips_filtration(cloud_from(square), 2.0)).in_dimension(1);
  const bool square_ok = h1.size() == 1 && std::abs(h1[0].birth - 1.0) <= 1e-12 &&
                         std::abs(h1[0].death - std::sqrt(2.0)) <= 1e-12;
  return {clouds_ok == 100 && square_ok,
          fmt::format("{}/100 clouds match at {} critical values; unit square H1 {}", clouds_ok, evaluations,
                      h1.empty() ? std::string("missing")
                                 : fmt::format("({:.15g}, {:.15g})", h1[0].birth, h1[0].death))};
}

Verdict fermat_properties() {
  std::mt19937_64 rng(404);
  double euclid_err = 0.0;
  for (Eigen::Index n = 10; n <= 100; n += 10) {
    const auto cloud = cloud_from(uniform_points(rng, n, 1 + n % 3, -1.0, 1.0));
    const auto m = fermat_distance_matrix(cloud, {1.0, 0});
    euclid_err = std::max(euclid_err, (m - distance_matrix(cloud.points())).cwiseAbs().maxCoeff());
  }

  Eigen::MatrixXd line(3, 1);
  line << 0, 1, 2;
  const double d02 = fermat_distance_matrix(cloud_from(line), {2.0, 0})(0, 2);

  double violation = 0.0;
  for (const double p : {1.0, 1.5, 2.0, 3.0}) {
    for (const std::size_t knn : {std::size_t{0}, std::size_t{6}}) {
      const auto m = fermat_distance_matrix(cloud_from(uniform_points(rng, 40, 2, -1.0, 1.0)), {p, knn});
      for (Eigen::Index a = 0; a < m.rows(); ++a)
        for (Eigen::Index b = 0; b < m.rows(); ++b)
          for (Eigen::Index c = 0; c < m.rows(); ++c) {
            if (std::isinf(m(a, c)) || std::isinf(m(c, b))) continue;
            violation = std::max(violation, m(a, b) - m(a, c) - m(c, b));
          }
    }
  }
  return {euclid_err <= 1e-12 && d02 == 2.0 && violation <= 1e-12,
          fmt::format("p=1 max error {:.1e}, collinear d(0,2)={}, worst triangle excess {:.1e}", euclid_err, d02,
                      violation)};
}

double h1_lifetime_ratio(const PersistenceDiagram& d) {
  std::vector<double> lifetimes;
  for (const auto& p : d.in_dimension(1))
    if (!p.unresolved) lifetimes.push_back(p.lifetime());
  std::sort(lifetimes.rbegin(), lifetimes.rend());
  if (lifetimes.empty()) return 0.0;
  if (lifetimes.size() == 1) return INFINITY;
  return lifetimes[0] / lifetimes[1];
}

Verdict hamiltonian_loop() {
  const auto clean = generate_hamiltonian({});
  int wins = 0;
  double slowest = 0.0;
  std::string ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto start = Clock::now();
    const auto noisy = add_noise(clean, NoiseSpec::relative_db(clean, 30.0, seed));
    const double vr = h1_lifetime_ratio(compute_persistence(vietoris_rips_filtration(noisy, 10.0)));
    const auto field = covariance_field(noisy, {3, 15});
    const double ell = h1_lifetime_ratio(compute_persistence(ellipsoid_filtration(noisy, field, 10.0)));
    slowest = std::max(slowest, seconds_since(start));
    wins += ell > vr;
    ratios += fmt::format("{}{:.2f}/{:.2f}", seed > 1 ? " " : "", ell, vr);
  }
  return {wins >= 4 && slowest < 180.0,
          fmt::format("ellipsoid wins {}/5 at 30 dB (ellipsoid/VR ratios {}), slowest seed {:.1f}s", wins, ratios,
                      slowest)};
}

Verdict denoising_order() {
  SweepConfig config;
  config.snr_db = {20.0, 30.0};
  for (std::uint64_t s = 1; s <= 10; ++s) config.seeds.push_back(s);
  config.filters = {{"moving_average", FilterSpec::Kind::moving_average},
                    {"spherical", FilterSpec::Kind::spherical},
                    {"ellipsoidal", FilterSpec::Kind::ellipsoidal}};
  const auto start = Clock::now();
  const auto rows = snr_sweep(config);
  const double elapsed = seconds_since(start);

  auto median_y = [&](double snr, const std::string& filter) {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.snr_db == snr && r.filter == filter && r.axis == 1 && r.rmse) v.push_back(*r.rmse);
    return v.size() == config.seeds.size() ? median(v) : INFINITY;
  };
  const double sph20 = median_y(20.0, "spherical"), ell20 = median_y(20.0, "ellipsoidal");
  const double sph30 = median_y(30.0, "spherical"), ell30 = median_y(30.0, "ellipsoidal");
  const double ma30 = median_y(30.0, "moving_average");
  const bool ok = ell20 < sph20 && sph30 < ma30 && ell30 < ma30 && elapsed < 600.0;
  return {ok, fmt::format("median y RMSE 20 dB: ellipsoidal {:.4f} vs spherical {:.4f}; 30 dB: spherical {:.4f}, "
                          "ellipsoidal {:.4f}, MA(20) {:.4f}; {:.1f}s",
                          ell20, sph20, sph30, ell30, ma30, elapsed)};
}

Verdict recurrence_detection() {
  const auto chirp = generate_chirp({});
  const auto& cloud = chirp.cloud;
  const auto truth = ground_truth_returns(chirp.phase);
  const auto selection = select_scales(cloud, {3, 15}, true, true);
  if (!selection.rips || !selection.ellipsoid) return {false, "no dominant H1 class"};
  const auto vr_schedule = scale_schedule(selection.rips->dominant);
  const auto ell_schedule = scale_schedule(selection.ellipsoid->dominant);

  bool ordering = true;
  double at_death = 0.0;
  std::string detail;
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto vr = first_returns(cloud, ReturnNeighborhood::spherical(radius_from_rips(vr_schedule.scales[k])), 15);
    const auto ell = first_returns(cloud, ReturnNeighborhood::ellipsoidal(ell_schedule.scales[k], selection.field), 15);
    const double f_vr = score_returns(vr.t1, truth, 2).within_tol_fraction;
    const double f_ell = score_returns(ell.t1, truth, 2).within_tol_fraction;
    ordering = ordering && f_ell >= f_vr;
    if (k == 2) at_death = f_ell;
    detail += fmt::format("k{} ellipsoid {:.3f} vs VR {:.3f}; ", k, f_ell, f_vr);
  }

  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> size(20, 300);
  std::normal_distribution<double> step(0.0, 0.3);
  int oracle_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = size(rng);
    const int d = 1 + trial % 3;
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), d);
    pts.row(0).setZero();
    for (Eigen::Index r = 1; r < pts.rows(); ++r)
      for (int a = 0; a < d; ++a) pts(r, a) = 0.9 * pts(r - 1, a) + step(rng);
    const auto series = cloud_from(pts);
    const double r = 0.2 + 0.01 * trial;
    const std::size_t tau_min = 1 + static_cast<std::size_t>(trial % 9);
    const auto table = first_returns(series, ReturnNeighborhood::spherical(r), tau_min);
    const auto expected = oracle::brute_first_returns(n, tau_min, [&](std::size_t i, std::size_t j) {
      return (pts.row(static_cast<Eigen::Index>(j)) - pts.row(static_cast<Eigen::Index>(i))).norm() <= r;
    });
    oracle_ok += table.t1 == expected;
  }
  detail += fmt::format("brute-force agreement {}/50", oracle_ok);
  return {ordering && at_death >= 0.9 && oracle_ok == 50, detail};
}

Verdict filter_invariants() {
  const auto clean = generate_chirp({}).cloud;
  const auto cloud = add_noise(clean, NoiseSpec::relative_db(clean, 20.0, 12));
  const auto field = std::make_shared<const CovarianceField>(covariance_field(cloud, {3, 15}));
  const std::vector<FilterSpec> specs{FilterSpec::moving(20),
                                      FilterSpec::adaptive_moving(),
                                      FilterSpec::nearest(20),
                                      FilterSpec::spherical(0.8),
                                      FilterSpec::ellipsoidal(1.0, field),
                                      FilterSpec::nearest(10, Aggregator::geometric_median),
                                      FilterSpec::spherical(0.8, Aggregator::geometric_median),
                                      FilterSpec::ellipsoidal(1.0, field, Aggregator::geometric_median)};

  Eigen::RowVectorXd shift(2);
  shift << -2.75, 4.5;
  const auto shifted = cloud.with_points(TimeSeriesPointCloud::Points(cloud.points().rowwise() + shift));
  double mean_shift_err = 0.0, gm_shift_err = 0.0, hull_excess = 0.0;
  for (const auto& spec : specs) {
    const auto a = apply_filter(cloud, spec);
    const auto b = apply_filter(shifted, spec);
    const double err = (b.points() - (a.points().rowwise() + shift)).cwiseAbs().maxCoeff();
    double& worst = spec.aggregator == Aggregator::geometric_median ? gm_shift_err : mean_shift_err;
    worst = std::max(worst, err);

    if (!spec.topological() || spec.aggregator != Aggregator::mean) continue;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto nb = filter_neighborhood(cloud, spec, i);
      for (int k = 0; k < 64; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 64;
        const Eigen::RowVector2d dir(std::cos(th), std::sin(th));
        double hi = -INFINITY;
        for (const auto j : nb) hi = std::max(hi, cloud.points().row(static_cast<Eigen::Index>(j)).dot(dir));
        hull_excess = std::max(hull_excess, a.points().row(static_cast<Eigen::Index>(i)).dot(dir) - hi);
      }
    }
  }

  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0.0, 1.0);
  bool monotone = true;
  double grid_err = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd pts(5 + trial, 2);
    for (Eigen::Index r = 0; r < pts.rows(); ++r) pts(r, 0) = g(rng), pts(r, 1) = g(rng);
    const auto gm = geometric_median(pts);
    for (std::size_t k = 1; k < gm.objective.size(); ++k) monotone = monotone && gm.objective[k] <= gm.objective[k - 1];
    const auto grid = oracle::grid_median_2d(pts, pts.minCoeff(), pts.maxCoeff(), 100);
    grid_err = std::max(grid_err, (gm.point - grid).norm());
  }
  const bool ok = mean_shift_err <= 1e-12 && gm_shift_err <= 1e-8 && hull_excess <= 1e-12 && monotone &&
                  grid_err <= 1e-6;
  return {ok, fmt::format("shift error mean {:.1e} / median {:.1e}, hull excess {:.1e}, objective {}, grid "
                          "distance {:.1e}",
                          mean_shift_err, gm_shift_err, hull_excess, monotone ? "monotone" : "ROSE", grid_err)};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "flowph");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict cli_determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("flowph_acceptance_{}", ::getpid());
  fs::remove_all(root);
  bool all_zero = true;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return (dir / name).string(); };
    std::ofstream(p("sweep.cfg")) << "snr_db = 20, 30\nseeds = 1, 2\nfilters = moving_average, knn, ellipsoidal\n";
    const std::vector<std::vector<std::string>> commands{
        {"generate", "--kind", "chirp", "--out", p("clean.csv")},
        {"generate", "--kind", "chirp", "--snr-db", "20", "--seed", "7", "--out", p("noisy.csv")},
        {"generate", "--kind", "hamiltonian", "--snr-db", "30", "--seed", "7", "--out", p("ham.csv")},
        {"ingest", "--in", p("noisy.csv"), "--start", "50", "--length", "300", "--stride", "2", "--out",
         p("ingested.csv")},
        {"persistence", "--in", p("ham.csv"), "--filtration", "ellipsoid", "--out-diagram", p("ham_pd.csv"),
         "--out-edges", p("ham_edges.csv")},
        {"persistence", "--in", p("noisy.csv"), "--filtration", "vr", "--out-diagram", p("vr_pd.csv")},
        {"persistence", "--in", p("ham.csv"), "--filtration", "fermat", "--fermat-p", "2", "--out-diagram",
         p("fermat_pd.csv")},
        {"denoise", "--in", p("noisy.csv"), "--clean", p("clean.csv"), "--filter", "all", "--out-prefix", p("dn")},
        {"denoise", "--in", p("noisy.csv"), "--filter", "ellipsoidal", "--aggregator", "geometric-median",
         "--scale-anchor", "schedule:1", "--out-prefix", p("gm")},
        {"recurrence", "--in", p("clean.csv"), "--neighborhood", "ellipsoidal", "--out-prefix", p("rec")},
        {"recurrence", "--in", p("noisy.csv"), "--neighborhood", "spherical", "--out-prefix", p("rec_sph")},
        {"sweep", "--config", p("sweep.cfg"), "--out", p("sweep.csv")},
    };
    for (const auto& c : commands) all_zero = all_zero && run_cli(c) == 0;
  }

  std::size_t files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    const fs::path twin = root / "b" / entry.path().filename();
    identical += fs::exists(twin) && slurp(entry.path()) == slurp(twin);
  }
  fs::remove_all(root);
  return {all_zero && files > 20 && identical == files,
          fmt::format("{}/{} files byte-identical across two runs{}", identical, files,
                      all_zero ? "" : ", a command failed")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"ellipsoid intersection vs boundary oracle", ellipsoid_intersection},
      {"identity covariances reduce to half VR", identity_reduction},
      {"persistence vs rank oracle", persistence_oracle},
      {"fermat distance properties", fermat_properties},
      {"hamiltonian loop prominence", hamiltonian_loop},
      {"denoising RMSE ordering", denoising_order},
      {"recurrence detection", recurrence_detection},
      {"filter invariants", filter_invariants},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[c].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    failures += !v.pass;
    std::cout << fmt::format("{} criterion {}: {} | {} [{:.1f}s]\n", v.pass ? "PASS" : "FAIL", c + 1,
                             criteria[c].first, v.detail, seconds_since(start))
              << std::flush;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
