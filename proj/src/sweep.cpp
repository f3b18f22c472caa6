#include "flowph/sweep.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "flowph/errors.hpp"
#include "flowph/filtration.hpp"

namespace flowph {

ScaleAnchor ScaleAnchor::parse(const std::string& text) {
  if (text == "death") return {};
  constexpr std::string_view prefix = "schedule:";
  if (text.starts_with(prefix) && text.size() == prefix.size() + 1) {
    const char c = text.back();
    if (c >= '0' && c <= '3') return {static_cast<std::size_t>(c - '0')};
  }
  throw InvalidArgument(fmt::format("scale anchor '{}' is not 'death' or 'schedule:0'..'schedule:3'", text));
}

std::string ScaleAnchor::to_string() const {
  return schedule_index ? fmt::format("schedule:{}", *schedule_index) : std::string("death");
}

double ScaleAnchor::pick(const DominantClass& dominant) const {
  if (!schedule_index) return dominant.death;
  return scale_schedule(dominant).scales.at(*schedule_index);
}

double default_rips_cap(const TimeSeriesPointCloud& cloud) {
  const auto lo = cloud.points().colwise().minCoeff();
  const auto hi = cloud.points().colwise().maxCoeff();
  const double diag = (hi - lo).norm();
  return diag > 0.0 ? 0.15 * diag : 1.0;
}

ScaleSelection select_scales(const TimeSeriesPointCloud& cloud, const NeighborhoodSpec& spec, bool need_rips,
                             bool need_ellipsoid) {
  ScaleSelection out;
  if (need_rips) {
    try {
      out.rips = settle_dominant_h1([&](double cap) { return vietoris_rips_filtration(cloud, cap); },
                                    default_rips_cap(cloud));
    } catch (const NotFound&) {
    }
  }
  if (need_ellipsoid) {
    out.field = std::make_shared<const CovarianceField>(covariance_field(cloud, spec));
    try {
      out.ellipsoid = settle_dominant_h1(
          [&](double cap) { return ellipsoid_filtration(cloud, *out.field, cap); }, kDefaultEllipsoidCap);
    } catch (const NotFound&) {
    }
  }
  return out;
}

void SweepConfig::validate() const {
  chirp.validate();
  if (snr_db.empty()) throw InvalidArgument("sweep needs at least one SNR level");
  if (seeds.empty()) throw InvalidArgument("sweep needs at least one seed");
  if (filters.empty()) throw InvalidArgument("sweep needs at least one filter");
  for (const double s : snr_db) {
    if (std::isnan(s)) throw InvalidArgument("SNR level is NaN");
  }
  for (std::size_t a = 0; a < filters.size(); ++a) {
    for (std::size_t b = a + 1; b < filters.size(); ++b) {
      if (filters[a].label == filters[b].label) {
        throw InvalidArgument(fmt::format("filter label '{}' appears twice", filters[a].label));
      }
    }
  }
  if (window < 1) throw InvalidArgument("moving-average window must be at least 1");
  if (knn < 1 || knn >= chirp.n) throw InvalidArgument("knn filter needs 1 <= k < n");
  neighborhoods.validate(2);
}

std::vector<SweepRow> sweep_cell(const SweepConfig& config, double snr_db, std::uint64_t seed) {
  const Chirp chirp = generate_chirp(config.chirp);
  const TimeSeriesPointCloud noisy = add_noise(chirp.cloud, NoiseSpec::relative_db(chirp.cloud, snr_db, seed));

  const bool need_rips = std::any_of(config.filters.begin(), config.filters.end(),
                                     [](const auto& f) { return f.kind == FilterSpec::Kind::spherical; });
  const bool need_ellipsoid = std::any_of(config.filters.begin(), config.filters.end(),
                                          [](const auto& f) { return f.kind == FilterSpec::Kind::ellipsoidal; });
  const ScaleSelection scales = select_scales(noisy, config.neighborhoods, need_rips, need_ellipsoid);

  std::vector<SweepRow> rows;
  for (const auto& f : config.filters) {
    std::optional<FilterSpec> spec;
    switch (f.kind) {
      case FilterSpec::Kind::moving_average:
        spec = FilterSpec::moving(config.window);
        break;
      case FilterSpec::Kind::adaptive_moving_average:
        spec = FilterSpec::adaptive_moving();
        break;
      case FilterSpec::Kind::knn:
        spec = FilterSpec::nearest(config.knn, config.aggregator);
        break;
      case FilterSpec::Kind::spherical:
        if (scales.rips) {
          spec = FilterSpec::spherical(radius_from_rips(config.anchor.pick(scales.rips->dominant)), config.aggregator);
        }
        break;
      case FilterSpec::Kind::ellipsoidal:
        if (scales.ellipsoid) {
          spec = FilterSpec::ellipsoidal(config.anchor.pick(scales.ellipsoid->dominant), scales.field,
                                         config.aggregator);
        }
        break;
    }
    std::optional<RmseReport> report;
    // A zero-length dominant class anchored at its birth gives no usable scale.
    if (spec && (!spec->topological() || spec->kind == FilterSpec::Kind::knn || spec->scale > 0.0)) {
      report = rmse(chirp.cloud, apply_filter(noisy, *spec));
    }
    for (std::size_t a = 0; a < chirp.cloud.dim(); ++a) {
      SweepRow row{snr_db, seed, f.label, a, std::nullopt};
      if (report) row.rmse = report->per_axis[a];
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SweepRow> snr_sweep(const SweepConfig& config) {
  config.validate();
  std::vector<SweepRow> rows;
  for (const double snr : config.snr_db) {
    for (const auto seed : config.seeds) {
      auto cell = sweep_cell(config, snr, seed);
      rows.insert(rows.end(), cell.begin(), cell.end());
    }
  }
  return rows;
}

}  // namespace flowph
