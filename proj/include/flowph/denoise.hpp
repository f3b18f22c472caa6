#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowph/neighborhoods.hpp"
#include "flowph/signal_model.hpp"

namespace flowph {

// ---------------------------------------------------------------------------
// Moving averages

/// Centred window of w samples, [i - (w-1)/2, i + w/2], truncated at the ends.
std::vector<double> moving_average(std::span<const double> x, std::size_t w);

struct AdaptiveWindowConfig {
  std::size_t segment = 64;
  std::size_t hop = 32;
  std::size_t fft_size = 1024;  // zero-padded transform length
  std::size_t min_window = 3;

  void validate() const;
};

/// Per-sample window lengths clamp(round(fs / (2 f)), min_window, n/4), with
/// f the dominant frequency of the segment whose centre is nearest.
std::vector<std::size_t> adaptive_windows(std::span<const double> x, double fs,
                                          const AdaptiveWindowConfig& config = {});

std::vector<double> adaptive_moving_average(std::span<const double> x, double fs,
                                            const AdaptiveWindowConfig& config = {});

// ---------------------------------------------------------------------------
// Geometric median

struct GeometricMedianOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

struct GeometricMedianResult {
  Eigen::VectorXd point;
  int iterations = 0;
  /// Sum of distances at each accepted iterate, starting with the centroid.
  std::vector<double> objective;
};

/// Weiszfeld iteration from the centroid over the rows of `points`. Two
/// points give their midpoint. Throws InvalidArgument on an empty set.
GeometricMedianResult geometric_median(const Eigen::MatrixXd& points, const GeometricMedianOptions& options = {});

// ---------------------------------------------------------------------------
// Filters

enum class Aggregator { mean, geometric_median };

struct FilterSpec {
  enum class Kind { moving_average, adaptive_moving_average, knn, spherical, ellipsoidal };

  Kind kind = Kind::knn;
  std::size_t window = 20;  // moving_average
  std::size_t k = 20;       // knn
  double scale = 0.0;       // spherical radius or ellipsoid scale
  std::shared_ptr<const CovarianceField> field;  // ellipsoidal
  /// Ellipsoidal only: use pairwise ellipsoid intersection instead of
  /// containment in the centre's ellipsoid.
  bool intersection_neighborhoods = false;
  Aggregator aggregator = Aggregator::mean;
  AdaptiveWindowConfig adaptive{};

  static FilterSpec moving(std::size_t w);
  static FilterSpec adaptive_moving(AdaptiveWindowConfig config = {});
  static FilterSpec nearest(std::size_t k, Aggregator aggregator = Aggregator::mean);
  static FilterSpec spherical(double radius, Aggregator aggregator = Aggregator::mean);
  static FilterSpec ellipsoidal(double eps, std::shared_ptr<const CovarianceField> field,
                                Aggregator aggregator = Aggregator::mean);

  bool topological() const noexcept { return kind != Kind::moving_average && kind != Kind::adaptive_moving_average; }
  void validate(std::size_t n, std::size_t dim) const;
};

std::string to_string(FilterSpec::Kind kind);

/// Indices aggregated for output point i under a topological filter spec,
/// ascending and always containing i.
std::vector<std::size_t> filter_neighborhood(const TimeSeriesPointCloud& cloud, const FilterSpec& spec,
                                             std::size_t i);

/// Applies any of the five filters. Moving averages run per axis with
/// fs = 1/dt; topological filters aggregate each point's neighbourhood.
/// Output keeps n, d, dt and t0.
TimeSeriesPointCloud apply_filter(const TimeSeriesPointCloud& cloud, const FilterSpec& spec);

// ---------------------------------------------------------------------------
// Scoring

struct RmseReport {
  std::vector<double> per_axis;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Per-axis root-mean-square difference; throws InvalidArgument on a shape mismatch.
RmseReport rmse(const TimeSeriesPointCloud& clean, const TimeSeriesPointCloud& denoised);

}  // namespace flowph
