#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowph/denoise.hpp"
#include "flowph/neighborhoods.hpp"
#include "flowph/persistence.hpp"
#include "flowph/signal_model.hpp"

namespace flowph {

/// Which point of the dominant H1 class sets a neighbourhood scale: its
/// death, or one entry of its four-point schedule.
struct ScaleAnchor {
  std::optional<std::size_t> schedule_index;  // empty = death

  /// Parses "death" or "schedule:0".."schedule:3".
  static ScaleAnchor parse(const std::string& text);
  std::string to_string() const;
  double pick(const DominantClass& dominant) const;
};

/// Ball radius paired with a Vietoris-Rips value. VR edges use the
/// diameter convention, so balls of this radius touch exactly when the VR
/// edge appears, mirroring how ellipsoid scales relate to their filtration.
inline double radius_from_rips(double rips_value) { return 0.5 * rips_value; }

/// Initial Vietoris-Rips cap: a fraction of the bounding-box diagonal.
double default_rips_cap(const TimeSeriesPointCloud& cloud);
/// Initial ellipsoid cap, in units of local standard deviations.
inline constexpr double kDefaultEllipsoidCap = 3.0;

/// Dominant H1 of each geometry for one cloud, with the caps that settled them.
struct ScaleSelection {
  std::optional<DominantSearch> rips;
  std::optional<DominantSearch> ellipsoid;
  std::shared_ptr<const CovarianceField> field;
};

ScaleSelection select_scales(const TimeSeriesPointCloud& cloud, const NeighborhoodSpec& spec, bool need_rips,
                             bool need_ellipsoid);

struct SweepFilter {
  std::string label;
  FilterSpec::Kind kind = FilterSpec::Kind::knn;
};

struct SweepConfig {
  ChirpParams chirp{};
  std::vector<double> snr_db{20.0};
  std::vector<std::uint64_t> seeds{1};
  std::vector<SweepFilter> filters;
  std::size_t window = 20;  // moving_average
  std::size_t knn = 20;     // knn filter
  NeighborhoodSpec neighborhoods{};
  Aggregator aggregator = Aggregator::mean;
  ScaleAnchor anchor{};

  void validate() const;
};

struct SweepRow {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::string filter;
  std::size_t axis = 0;
  std::optional<double> rmse;  // empty when the scale could not be selected
};

/// All rows of one (snr, seed) cell, filters in config order, axes ascending.
/// Noise is regenerated from the seed; topological scales come from the
/// dominant H1 of the noisy cloud's own filtration.
std::vector<SweepRow> sweep_cell(const SweepConfig& config, double snr_db, std::uint64_t seed);

/// Every cell in canonical order (snr, then seed).
std::vector<SweepRow> snr_sweep(const SweepConfig& config);

}  // namespace flowph
