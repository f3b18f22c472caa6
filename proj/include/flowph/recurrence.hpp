#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "flowph/neighborhoods.hpp"
#include "flowph/signal_model.hpp"

namespace flowph {

/// Neighbourhood N_i of a reference state: the ball of radius `scale`, or
/// the centre's ellipsoid E_i(scale) from a covariance field.
struct ReturnNeighborhood {
  enum class Kind { spherical, ellipsoidal };

  Kind kind = Kind::spherical;
  double scale = 0.0;
  std::shared_ptr<const CovarianceField> field;

  static ReturnNeighborhood spherical(double radius);
  static ReturnNeighborhood ellipsoidal(double eps, std::shared_ptr<const CovarianceField> field);

  /// True when x_j lies in N_i (closed).
  bool contains(const TimeSeriesPointCloud& cloud, std::size_t i, std::size_t j) const;
};

struct RecurrenceTable {
  std::vector<std::optional<std::size_t>> t1;
  ReturnNeighborhood::Kind kind = ReturnNeighborhood::Kind::spherical;
  double scale = 0.0;
  std::size_t tau_min = 0;
};

/// T1(i) = min{ j > i : j - i >= tau_min, x_j in N_i, x_k not in N_i for all
/// i < k < j }. The first index after i that enters N_i decides: if it comes
/// before i + tau_min the return is absent.
RecurrenceTable first_returns(const TimeSeriesPointCloud& cloud, const ReturnNeighborhood& neighborhood,
                              std::size_t tau_min);

/// Smallest j - i with phase[j] >= phase[i] + 2 pi. Throws InvalidArgument if
/// the phase ever decreases.
std::vector<std::optional<std::size_t>> ground_truth_returns(std::span<const double> phase);

struct ReturnScore {
  std::size_t truth_count = 0;     // indices with a ground-truth return
  std::size_t detected = 0;        // ... of which T1 is present
  std::size_t within_tol = 0;      // ... and |T1 - truth| <= tol
  std::size_t spurious_early = 0;  // T1 < truth - tol
  double detected_fraction = 0.0;
  double within_tol_fraction = 0.0;
  double mean_abs_error = 0.0;     // over indices where both are present
};

ReturnScore score_returns(std::span<const std::optional<std::size_t>> t1,
                          std::span<const std::optional<std::size_t>> truth, std::size_t tol = 2);

}  // namespace flowph
