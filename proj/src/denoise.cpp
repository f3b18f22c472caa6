#include "flowph/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>

#include <fftw3.h>
#include <fmt/format.h>

#include "detail/contact.hpp"
#include "detail/parallel.hpp"
#include "flowph/errors.hpp"

namespace flowph {

namespace {

/// Truncated centred window [i - (w-1)/2, i + w/2] clipped to [0, n).
std::pair<std::size_t, std::size_t> window_bounds(std::size_t i, std::size_t w, std::size_t n) {
  const std::size_t back = (w - 1) / 2;
  const std::size_t lo = i >= back ? i - back : 0;
  const std::size_t hi = std::min(n - 1, i + w / 2);
  return {lo, hi};
}

double window_mean(std::span<const double> x, std::size_t lo, std::size_t hi) {
  double sum = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) sum += x[j];
  return sum / static_cast<double>(hi - lo + 1);
}

// FFTW's planner is not thread-safe; execution on a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Zero-padded, Hann-windowed power spectrum peak of a mean-removed block.
/// Returns nullopt when the block has no variation.
class SpectralPeak {
 public:
  explicit SpectralPeak(std::size_t size) : size_(size) {
    in_ = fftw_alloc_real(size_);
    out_ = fftw_alloc_complex(size_ / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), in_, out_, FFTW_ESTIMATE);
  }
  ~SpectralPeak() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  SpectralPeak(const SpectralPeak&) = delete;
  SpectralPeak& operator=(const SpectralPeak&) = delete;

  std::optional<double> frequency(std::span<const double> block, double fs) {
    const std::size_t m = std::min(block.size(), size_);
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += block[j];
    mean /= static_cast<double>(m);
    std::fill(in_, in_ + size_, 0.0);
    bool varies = false;
    for (std::size_t j = 0; j < m; ++j) {
      const double taper =
          m > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m - 1))
                : 1.0;
      const double centred = block[j] - mean;
      if (centred != 0.0) varies = true;
      in_[j] = centred * taper;
    }
    if (!varies) return std::nullopt;
    fftw_execute(plan_);
    std::size_t best = 0;
    double best_power = 0.0;
    for (std::size_t b = 1; b <= size_ / 2; ++b) {
      const double power = out_[b][0] * out_[b][0] + out_[b][1] * out_[b][1];
      if (power > best_power) {
        best_power = power;
        best = b;
      }
    }
    if (best == 0) return std::nullopt;
    return static_cast<double>(best) * fs / static_cast<double>(size_);
  }

 private:
  std::size_t size_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

std::vector<double> moving_average(std::span<const double> x, std::size_t w) {
  if (w < 1) throw InvalidArgument("moving-average window must be at least 1");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [lo, hi] = window_bounds(i, w, x.size());
    out[i] = window_mean(x, lo, hi);
  }
  return out;
}

void AdaptiveWindowConfig::validate() const {
  if (segment < 8) throw InvalidArgument("adaptive segment length must be at least 8");
  if (hop < 1) throw InvalidArgument("adaptive hop must be at least 1");
  if (fft_size < segment) throw InvalidArgument("FFT size must be at least the segment length");
  if (min_window < 1) throw InvalidArgument("minimum window must be at least 1");
}

std::vector<std::size_t> adaptive_windows(std::span<const double> x, double fs, const AdaptiveWindowConfig& config) {
  config.validate();
  if (!(fs > 0.0)) throw InvalidArgument("sampling rate must be positive");
  const std::size_t n = x.size();
  if (n < 8) throw InvalidArgument(fmt::format("adaptive moving average needs at least 8 samples, got {}", n));

  const std::size_t seg = std::min(config.segment, n);
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + seg <= n; s += config.hop) starts.push_back(s);
  if (starts.back() + seg < n) starts.push_back(n - seg);

  // A segment holding less than about one and a half periods cannot place
  // its own peak; such estimates are redone over a block spanning that many
  // estimated periods around the same centre, until the block stops growing.
  SpectralPeak segment_peak(config.fft_size);
  std::vector<std::optional<double>> freq;
  freq.reserve(starts.size());
  for (const auto s : starts) {
    auto f = segment_peak.frequency(x.subspan(s, seg), fs);
    std::size_t span = seg;
    const double centre = static_cast<double>(s) + 0.5 * static_cast<double>(seg);
    for (int round = 0; f && round < 8; ++round) {
      const auto wanted = static_cast<std::size_t>(std::ceil(1.5 * fs / *f));
      const std::size_t grown = std::min(n, std::max(span, wanted));
      if (grown <= span) break;
      span = grown;
      const auto lo = static_cast<std::size_t>(
          std::clamp(centre - 0.5 * static_cast<double>(span), 0.0, static_cast<double>(n - span)));
      SpectralPeak wide(next_pow2(std::max(span, config.fft_size)));
      f = wide.frequency(x.subspan(lo, span), fs);
    }
    freq.push_back(f);
  }

  std::optional<double> global;
  if (std::any_of(freq.begin(), freq.end(), [](const auto& f) { return !f; })) {
    SpectralPeak whole(next_pow2(std::max(n, config.fft_size)));
    global = whole.frequency(x, fs);
  }

  const std::size_t upper = std::max(config.min_window, n / 4);
  auto window_for = [&](const std::optional<double>& f) -> std::size_t {
    if (!f) return config.min_window;
    const double w = std::round(fs / (2.0 * *f));
    return std::clamp(static_cast<std::size_t>(std::max(w, 1.0)), config.min_window, upper);
  };

  std::vector<std::size_t> windows(n);
  std::size_t seg_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Centres increase with the segment index, so the nearest one only moves forward.
    auto centre = [&](std::size_t k) { return static_cast<double>(starts[k]) + 0.5 * static_cast<double>(seg - 1); };
    const double pos = static_cast<double>(i);
    while (seg_index + 1 < starts.size() && std::abs(centre(seg_index + 1) - pos) < std::abs(centre(seg_index) - pos)) {
      ++seg_index;
    }
    windows[i] = window_for(freq[seg_index] ? freq[seg_index] : global);
  }
  return windows;
}

std::vector<double> adaptive_moving_average(std::span<const double> x, double fs, const AdaptiveWindowConfig& config) {
  const auto windows = adaptive_windows(x, fs, config);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [lo, hi] = window_bounds(i, windows[i], x.size());
    out[i] = window_mean(x, lo, hi);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < points.rows(); ++r) total += (points.row(r).transpose() - y).norm();
  return total;
}

}  // namespace

GeometricMedianResult geometric_median(const Eigen::MatrixXd& points, const GeometricMedianOptions& options) {
  if (points.rows() == 0 || points.cols() == 0) throw InvalidArgument("geometric median of an empty set");
  if (!(options.tol > 0.0) || options.max_iter < 0) throw InvalidArgument("invalid geometric-median options");

  GeometricMedianResult result;
  const Eigen::VectorXd centroid = points.colwise().mean().transpose();
  if (points.rows() <= 2) {
    result.point = centroid;
    result.objective.push_back(objective(points, result.point));
    return result;
  }

  // Iterate on centred coordinates so a translated input follows the same path.
  const Eigen::MatrixXd local = points.rowwise() - centroid.transpose();
  const Eigen::Index d = points.cols();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  double f = objective(local, y);
  result.objective.push_back(f);

  // Sum of unit vectors from y towards every point not coinciding with it,
  // and how many points do coincide.
  auto pull_at = [&](const Eigen::VectorXd& at, int& coincident) {
    Eigen::VectorXd pull = Eigen::VectorXd::Zero(d);
    coincident = 0;
    for (Eigen::Index r = 0; r < local.rows(); ++r) {
      const Eigen::VectorXd diff = local.row(r).transpose() - at;
      const double dist = diff.norm();
      if (dist == 0.0) {
        ++coincident;
      } else {
        pull += diff / dist;
      }
    }
    return pull;
  };

  for (int it = 0; it < options.max_iter; ++it) {
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(d);
    double weight_sum = 0.0;
    int coincident = 0;
    for (Eigen::Index r = 0; r < local.rows(); ++r) {
      const double dist = (local.row(r).transpose() - y).norm();
      if (dist == 0.0) {
        ++coincident;
        continue;
      }
      weighted += local.row(r).transpose() / dist;
      weight_sum += 1.0 / dist;
    }
    if (weight_sum == 0.0) break;  // every point coincides with y

    Eigen::VectorXd next = weighted / weight_sum;
    if (coincident > 0) {
      // y sits on a data point: it is optimal when the pull of the others
      // does not exceed the point's multiplicity; otherwise step off it.
      const double pull_norm = pull_at(y, coincident).norm();
      if (pull_norm <= static_cast<double>(coincident)) break;
      const double share = static_cast<double>(coincident) / pull_norm;
      next = (1.0 - share) * next + share * y;
    }

    const double f_next = objective(local, next);
    if (f_next > f) break;  // rounding noise near the optimum; keep the best iterate
    const double step = (next - y).norm();
    y = std::move(next);
    f = f_next;
    result.objective.push_back(f);
    result.iterations = it + 1;
    if (step < options.tol) break;
  }

  // Weiszfeld converges linearly; finish with Newton steps while they shrink
  // the gradient. The objective is too flat here to arbitrate.
  auto gradient_at = [&](const Eigen::VectorXd& at, Eigen::MatrixXd* hessian) -> std::optional<Eigen::VectorXd> {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    if (hessian) *hessian = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index r = 0; r < local.rows(); ++r) {
      const Eigen::VectorXd diff = at - local.row(r).transpose();
      const double dist = diff.norm();
      if (dist == 0.0) return std::nullopt;
      const Eigen::VectorXd u = diff / dist;
      g += u;
      if (hessian) *hessian += (Eigen::MatrixXd::Identity(d, d) - u * u.transpose()) / dist;
    }
    return g;
  };
  Eigen::MatrixXd hessian;
  for (int polish = 0; polish < 8; ++polish) {
    const auto g = gradient_at(y, &hessian);
    if (!g || g->norm() == 0.0) break;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd next = y - ldlt.solve(*g);
    const auto g_next = gradient_at(next, nullptr);
    if (!next.allFinite() || !g_next || !(g_next->norm() < g->norm())) break;
    const double f_next = objective(local, next);
    if (f_next > f * (1.0 + 1e-14)) break;
    y = next;
    f = std::min(f, f_next);
    result.objective.push_back(f);
  }

  // Weiszfeld creeps towards an optimal data point; land on it when the
  // nearest one passes the optimality check.
  Eigen::Index nearest = 0;
  (local.rowwise() - y.transpose()).rowwise().squaredNorm().minCoeff(&nearest);
  const Eigen::VectorXd candidate = local.row(nearest).transpose();
  if (candidate != y) {
    int coincident = 0;
    const double pull_norm = pull_at(candidate, coincident).norm();
    const double f_candidate = objective(local, candidate);
    if (pull_norm <= static_cast<double>(coincident) && f_candidate <= f) {
      result.objective.push_back(f_candidate);
      result.point = points.row(nearest).transpose();
      return result;
    }
  }
  result.point = y + centroid;
  return result;
}

// ---------------------------------------------------------------------------

FilterSpec FilterSpec::moving(std::size_t w) {
  FilterSpec s;
  s.kind = Kind::moving_average;
  s.window = w;
  return s;
}

FilterSpec FilterSpec::adaptive_moving(AdaptiveWindowConfig config) {
  FilterSpec s;
  s.kind = Kind::adaptive_moving_average;
  s.adaptive = config;
  return s;
}

FilterSpec FilterSpec::nearest(std::size_t k, Aggregator aggregator) {
  FilterSpec s;
  s.kind = Kind::knn;
  s.k = k;
  s.aggregator = aggregator;
  return s;
}

FilterSpec FilterSpec::spherical(double radius, Aggregator aggregator) {
  FilterSpec s;
  s.kind = Kind::spherical;
  s.scale = radius;
  s.aggregator = aggregator;
  return s;
}

FilterSpec FilterSpec::ellipsoidal(double eps, std::shared_ptr<const CovarianceField> field, Aggregator aggregator) {
  FilterSpec s;
  s.kind = Kind::ellipsoidal;
  s.scale = eps;
  s.field = std::move(field);
  s.aggregator = aggregator;
  return s;
}

void FilterSpec::validate(std::size_t n, std::size_t dim) const {
  switch (kind) {
    case Kind::moving_average:
      if (window < 1) throw InvalidArgument("moving-average window must be at least 1");
      break;
    case Kind::adaptive_moving_average:
      adaptive.validate();
      break;
    case Kind::knn:
      if (k < 1 || k >= n) throw InvalidArgument(fmt::format("knn filter needs 1 <= k < n, got k = {}", k));
      break;
    case Kind::spherical:
      if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("spherical radius must be positive");
      break;
    case Kind::ellipsoidal:
      if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("ellipsoid scale must be positive");
      if (!field) throw InvalidArgument("ellipsoidal filter needs a covariance field");
      if (field->size() != n) throw InvalidArgument("covariance field is not aligned with the cloud");
      if (n > 0 && static_cast<std::size_t>((*field)[0].sigma.rows()) != dim) {
        throw InvalidArgument("covariance field dimension does not match the cloud");
      }
      break;
  }
}

std::string to_string(FilterSpec::Kind kind) {
  switch (kind) {
    case FilterSpec::Kind::moving_average:
      return "moving_average";
    case FilterSpec::Kind::adaptive_moving_average:
      return "adaptive_moving_average";
    case FilterSpec::Kind::knn:
      return "knn";
    case FilterSpec::Kind::spherical:
      return "spherical";
    case FilterSpec::Kind::ellipsoidal:
      return "ellipsoidal";
  }
  return "unknown";
}

std::vector<std::size_t> filter_neighborhood(const TimeSeriesPointCloud& cloud, const FilterSpec& spec,
                                             std::size_t i) {
  const std::size_t n = cloud.size();
  std::vector<std::size_t> members;
  switch (spec.kind) {
    case FilterSpec::Kind::knn: {
      members = spatial_neighborhood(cloud, i, spec.k);
      members.insert(std::upper_bound(members.begin(), members.end(), i), i);
      break;
    }
    case FilterSpec::Kind::spherical: {
      const double r2 = spec.scale * spec.scale;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || cloud.squared_distance(i, j) <= r2) members.push_back(j);
      }
      break;
    }
    case FilterSpec::Kind::ellipsoidal: {
      const auto& shape = (*spec.field)[i];
      const double eps2 = spec.scale * spec.scale;
      const auto xi = cloud.point(i);
      if (!spec.intersection_neighborhoods) {
        Eigen::VectorXd diff(static_cast<Eigen::Index>(cloud.dim()));
        for (std::size_t j = 0; j < n; ++j) {
          diff = (cloud.point(j) - xi).transpose();
          if (j == i || shape.mahalanobis_squared(diff) <= eps2) members.push_back(j);
        }
      } else {
        const IntersectionOptions opts;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) {
            members.push_back(j);
            continue;
          }
          const detail::ContactPair<Eigen::Dynamic> pair{shape.sigma, (*spec.field)[j].sigma,
                                                         (xi - cloud.point(j)).transpose()};
          const auto out = detail::golden_contact(pair, opts.tol, opts.max_iter, spec.scale);
          if (detail::within_contact(out.g_max, spec.scale)) members.push_back(j);
        }
      }
      break;
    }
    default:
      throw InvalidArgument(fmt::format("{} is not a neighbourhood filter", to_string(spec.kind)));
  }
  return members;
}

TimeSeriesPointCloud apply_filter(const TimeSeriesPointCloud& cloud, const FilterSpec& spec) {
  const std::size_t n = cloud.size();
  const std::size_t d = cloud.dim();
  spec.validate(n, d);
  TimeSeriesPointCloud::Points out(cloud.points().rows(), cloud.points().cols());

  if (!spec.topological()) {
    std::vector<double> column(n);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t i = 0; i < n; ++i) column[i] = cloud.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
      const auto filtered = spec.kind == FilterSpec::Kind::moving_average
                                ? moving_average(column, spec.window)
                                : adaptive_moving_average(column, 1.0 / cloud.dt(), spec.adaptive);
      for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = filtered[i];
    }
    return cloud.with_points(std::move(out));
  }

  detail::parallel_for(n, [&](std::size_t i) {
    const auto members = filter_neighborhood(cloud, spec, i);
    const auto row = static_cast<Eigen::Index>(i);
    if (spec.aggregator == Aggregator::mean) {
      for (std::size_t a = 0; a < d; ++a) {
        double sum = 0.0;
        for (const auto j : members) sum += cloud.points()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
        out(row, static_cast<Eigen::Index>(a)) = sum / static_cast<double>(members.size());
      }
    } else {
      Eigen::MatrixXd local(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(d));
      for (std::size_t m = 0; m < members.size(); ++m) local.row(static_cast<Eigen::Index>(m)) = cloud.point(members[m]);
      out.row(row) = geometric_median(local).point.transpose();
    }
  });
  return cloud.with_points(std::move(out));
}

RmseReport rmse(const TimeSeriesPointCloud& clean, const TimeSeriesPointCloud& denoised) {
  if (clean.size() != denoised.size() || clean.dim() != denoised.dim()) {
    throw InvalidArgument(fmt::format("rmse: shapes {}x{} and {}x{} differ", clean.size(), clean.dim(),
                                      denoised.size(), denoised.dim()));
  }
  RmseReport report;
  for (std::size_t a = 0; a < clean.dim(); ++a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const double diff = denoised.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) -
                          clean.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
      sum += diff * diff;
    }
    report.per_axis.push_back(std::sqrt(sum / static_cast<double>(clean.size())));
  }
  return report;
}

}  // namespace flowph
