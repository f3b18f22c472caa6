#include "flowph/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "detail/parallel.hpp"
#include "flowph/errors.hpp"

namespace flowph {

ReturnNeighborhood ReturnNeighborhood::spherical(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("return radius must be positive");
  return {Kind::spherical, radius, nullptr};
}

ReturnNeighborhood ReturnNeighborhood::ellipsoidal(double eps, std::shared_ptr<const CovarianceField> field) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("ellipsoid scale must be positive");
  if (!field) throw InvalidArgument("ellipsoidal returns need a covariance field");
  return {Kind::ellipsoidal, eps, std::move(field)};
}

bool ReturnNeighborhood::contains(const TimeSeriesPointCloud& cloud, std::size_t i, std::size_t j) const {
  if (kind == Kind::spherical) return cloud.squared_distance(i, j) <= scale * scale;
  const Eigen::VectorXd diff = (cloud.point(j) - cloud.point(i)).transpose();
  return (*field)[i].mahalanobis_squared(diff) <= scale * scale;
}

RecurrenceTable first_returns(const TimeSeriesPointCloud& cloud, const ReturnNeighborhood& neighborhood,
                              std::size_t tau_min) {
  if (tau_min < 1) throw InvalidArgument("tau_min must be at least 1");
  if (neighborhood.kind == ReturnNeighborhood::Kind::ellipsoidal) {
    if (!neighborhood.field || neighborhood.field->size() != cloud.size()) {
      throw InvalidArgument("covariance field is not aligned with the cloud");
    }
  }
  const std::size_t n = cloud.size();
  RecurrenceTable table;
  table.t1.assign(n, std::nullopt);
  table.kind = neighborhood.kind;
  table.scale = neighborhood.scale;
  table.tau_min = tau_min;

  detail::parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!neighborhood.contains(cloud, i, j)) continue;
      if (j - i >= tau_min) table.t1[i] = j - i;
      return;
    }
  });
  return table;
}

std::vector<std::optional<std::size_t>> ground_truth_returns(std::span<const double> phase) {
  for (std::size_t i = 1; i < phase.size(); ++i) {
    if (phase[i] < phase[i - 1]) {
      throw InvalidArgument(fmt::format("phase decreases between samples {} and {}", i - 1, i));
    }
  }
  std::vector<std::optional<std::size_t>> out(phase.size());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    const double target = phase[i] + 2.0 * std::numbers::pi;
    const auto it = std::lower_bound(phase.begin() + static_cast<std::ptrdiff_t>(i) + 1, phase.end(), target);
    if (it != phase.end()) out[i] = static_cast<std::size_t>(it - phase.begin()) - i;
  }
  return out;
}

ReturnScore score_returns(std::span<const std::optional<std::size_t>> t1,
                          std::span<const std::optional<std::size_t>> truth, std::size_t tol) {
  if (t1.size() != truth.size()) {
    throw InvalidArgument(fmt::format("score_returns: {} detections for {} truth entries", t1.size(), truth.size()));
  }
  ReturnScore s;
  double abs_error = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    if (!truth[i]) continue;
    ++s.truth_count;
    if (!t1[i]) continue;
    ++s.detected;
    const auto found = static_cast<double>(*t1[i]);
    const auto expected = static_cast<double>(*truth[i]);
    const double err = std::abs(found - expected);
    abs_error += err;
    if (err <= static_cast<double>(tol)) ++s.within_tol;
    if (found < expected - static_cast<double>(tol)) ++s.spurious_early;
  }
  if (s.truth_count > 0) {
    s.detected_fraction = static_cast<double>(s.detected) / static_cast<double>(s.truth_count);
    s.within_tol_fraction = static_cast<double>(s.within_tol) / static_cast<double>(s.truth_count);
  }
  if (s.detected > 0) s.mean_abs_error = abs_error / static_cast<double>(s.detected);
  return s;
}

}  // namespace flowph
