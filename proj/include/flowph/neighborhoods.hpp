#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flowph/knn.hpp"
#include "flowph/signal_model.hpp"

namespace flowph {

/// Spatio-temporal neighbourhood: a symmetric index window of half-width tau
/// joined with the k nearest points in state space.
struct NeighborhoodSpec {
  std::size_t tau = 3;
  std::size_t k = 15;

  /// Requires tau + k >= d.
  void validate(std::size_t dim) const;
};

inline constexpr double kDefaultCovarianceFloor = 1e-9;

/// {j : |j - i| <= tau} clipped to [0, n-1], ascending.
std::vector<std::size_t> temporal_neighborhood(std::size_t i, std::size_t tau, std::size_t n);

/// k nearest j != i (ties to the smaller index), ascending index order.
std::vector<std::size_t> spatial_neighborhood(const TimeSeriesPointCloud& cloud, std::size_t i, std::size_t k);
std::vector<std::size_t> spatial_neighborhood(const KnnIndex& index, std::size_t i, std::size_t k);

/// Sorted union of the temporal and spatial neighbourhoods; always contains i.
std::vector<std::size_t> combined_neighborhood(const TimeSeriesPointCloud& cloud, std::size_t i,
                                               const NeighborhoodSpec& spec);
std::vector<std::size_t> combined_neighborhood(const KnnIndex& index, std::size_t n, std::size_t i,
                                               const NeighborhoodSpec& spec);

/// Symmetric positive-definite shape matrix with its eigendecomposition,
/// eigenvalues sorted in descending order.
struct LocalCovariance {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd eigenvectors;  // columns, matching eigenvalues
  Eigen::VectorXd eigenvalues;
  double ridge = 0.0;

  /// Decomposes an SPD matrix; throws InvalidArgument if it is not SPD.
  static LocalCovariance from_matrix(const Eigen::MatrixXd& sigma);
  /// variance * I with the canonical basis as eigenvectors.
  static LocalCovariance isotropic(std::size_t dim, double variance = 1.0);

  /// (v)^T sigma^{-1} v evaluated in the eigenbasis, sum over axes in
  /// descending-eigenvalue order. For isotropic() this is exactly the
  /// squared norm accumulated in axis order.
  template <class Vec>
  double mahalanobis_squared(const Vec& v) const {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < eigenvalues.size(); ++a) {
      double proj = 0.0;
      for (Eigen::Index b = 0; b < eigenvalues.size(); ++b) proj += eigenvectors(b, a) * v(b);
      acc += proj * proj / eigenvalues(a);
    }
    return acc;
  }
};

/// Sigma_i = (1/|N|) sum_{j in N} (x_j - x_i)(x_j - x_i)^T + delta I.
///
/// Centred at x_i itself, not at the neighbourhood mean. The ridge is
/// delta = floor * max(trace(Sigma_raw) / d, machine epsilon).
LocalCovariance local_covariance(const TimeSeriesPointCloud& cloud, std::size_t i,
                                 std::span<const std::size_t> neighborhood,
                                 double floor = kDefaultCovarianceFloor);

/// One local covariance per sample of a cloud. Immutable once built.
class CovarianceField {
 public:
  CovarianceField(std::vector<LocalCovariance> entries, double floor);

  /// All entries variance * I; the reference case that reduces ellipsoids to balls.
  static CovarianceField isotropic(std::size_t n, std::size_t dim, double variance = 1.0);

  std::size_t size() const noexcept { return entries_.size(); }
  const LocalCovariance& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<LocalCovariance>& entries() const noexcept { return entries_; }
  double floor() const noexcept { return floor_; }

 private:
  std::vector<LocalCovariance> entries_;
  double floor_;
};

/// combined_neighborhood + local_covariance at every index. Per-point work
/// runs in parallel (OpenMP); the result does not depend on thread count.
CovarianceField covariance_field(const TimeSeriesPointCloud& cloud, const NeighborhoodSpec& spec,
                                 double floor = kDefaultCovarianceFloor);

}  // namespace flowph
