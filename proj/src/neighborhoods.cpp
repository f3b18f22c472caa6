#include "flowph/neighborhoods.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include <fmt/format.h>

#include "detail/parallel.hpp"
#include "flowph/errors.hpp"

namespace flowph {

void NeighborhoodSpec::validate(std::size_t dim) const {
  if (tau + k < dim) {
    throw InvalidArgument(fmt::format("neighbourhood tau + k = {} is below the dimension {}", tau + k, dim));
  }
}

std::vector<std::size_t> temporal_neighborhood(std::size_t i, std::size_t tau, std::size_t n) {
  if (i >= n) throw InvalidArgument(fmt::format("index {} out of range for {} samples", i, n));
  const std::size_t lo = i >= tau ? i - tau : 0;
  const std::size_t hi = std::min(n - 1, i + tau);
  std::vector<std::size_t> out;
  out.reserve(hi - lo + 1);
  for (std::size_t j = lo; j <= hi; ++j) out.push_back(j);
  return out;
}

std::vector<std::size_t> spatial_neighborhood(const KnnIndex& index, std::size_t i, std::size_t k) {
  auto out = index.query(i, k);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> spatial_neighborhood(const TimeSeriesPointCloud& cloud, std::size_t i, std::size_t k) {
  return spatial_neighborhood(KnnIndex(cloud), i, k);
}

std::vector<std::size_t> combined_neighborhood(const KnnIndex& index, std::size_t n, std::size_t i,
                                               const NeighborhoodSpec& spec) {
  const auto temporal = temporal_neighborhood(i, spec.tau, n);
  const auto spatial = spatial_neighborhood(index, i, std::min(spec.k, n - 1));
  std::vector<std::size_t> out;
  out.reserve(temporal.size() + spatial.size());
  std::set_union(temporal.begin(), temporal.end(), spatial.begin(), spatial.end(), std::back_inserter(out));
  return out;
}

std::vector<std::size_t> combined_neighborhood(const TimeSeriesPointCloud& cloud, std::size_t i,
                                               const NeighborhoodSpec& spec) {
  return combined_neighborhood(KnnIndex(cloud), cloud.size(), i, spec);
}

// ---------------------------------------------------------------------------

LocalCovariance LocalCovariance::from_matrix(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw InvalidArgument("covariance must be square");
  if (!sigma.allFinite()) throw InvalidArgument("covariance has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
  if (solver.info() != Eigen::Success) throw InvalidArgument("covariance eigendecomposition failed");
  const Eigen::Index d = sigma.rows();
  LocalCovariance out;
  out.sigma = 0.5 * (sigma + sigma.transpose());
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  // Eigen sorts ascending; store descending.
  for (Eigen::Index a = 0; a < d; ++a) {
    out.eigenvalues(a) = solver.eigenvalues()(d - 1 - a);
    out.eigenvectors.col(a) = solver.eigenvectors().col(d - 1 - a);
  }
  if (!(out.eigenvalues(d - 1) > 0.0)) throw InvalidArgument("covariance is not positive-definite");
  return out;
}

LocalCovariance LocalCovariance::isotropic(std::size_t dim, double variance) {
  if (!(variance > 0.0)) throw InvalidArgument("isotropic variance must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  LocalCovariance out;
  out.sigma = variance * Eigen::MatrixXd::Identity(d, d);
  out.eigenvectors = Eigen::MatrixXd::Identity(d, d);
  out.eigenvalues = Eigen::VectorXd::Constant(d, variance);
  return out;
}

LocalCovariance local_covariance(const TimeSeriesPointCloud& cloud, std::size_t i,
                                 std::span<const std::size_t> neighborhood, double floor) {
  if (neighborhood.empty()) throw InvalidArgument("local covariance needs a nonempty neighbourhood");
  if (!(floor > 0.0)) throw InvalidArgument("covariance floor must be positive");
  const auto d = static_cast<Eigen::Index>(cloud.dim());
  const auto& pts = cloud.points();
  const auto row_i = static_cast<Eigen::Index>(i);

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd diff(d);
  for (std::size_t j : neighborhood) {
    if (j >= cloud.size()) throw InvalidArgument(fmt::format("neighbour index {} out of range", j));
    diff = (pts.row(static_cast<Eigen::Index>(j)) - pts.row(row_i)).transpose();
    raw.noalias() += diff * diff.transpose();
  }
  raw /= static_cast<double>(neighborhood.size());

  const double scale = std::max(raw.trace() / static_cast<double>(d), std::numeric_limits<double>::epsilon());
  const double ridge = floor * scale;
  raw.diagonal().array() += ridge;
  LocalCovariance out = LocalCovariance::from_matrix(raw);
  out.ridge = ridge;
  return out;
}

CovarianceField::CovarianceField(std::vector<LocalCovariance> entries, double floor)
    : entries_(std::move(entries)), floor_(floor) {}

CovarianceField CovarianceField::isotropic(std::size_t n, std::size_t dim, double variance) {
  return CovarianceField(std::vector<LocalCovariance>(n, LocalCovariance::isotropic(dim, variance)), 0.0);
}

CovarianceField covariance_field(const TimeSeriesPointCloud& cloud, const NeighborhoodSpec& spec, double floor) {
  spec.validate(cloud.dim());
  const KnnIndex index(cloud);
  const std::size_t n = cloud.size();
  std::vector<LocalCovariance> entries(n);
  detail::parallel_for(n, [&](std::size_t i) {
    const auto nbhd = combined_neighborhood(index, n, i, spec);
    entries[i] = local_covariance(cloud, i, nbhd, floor);
  });
  return CovarianceField(std::move(entries), floor);
}

}  // namespace flowph
